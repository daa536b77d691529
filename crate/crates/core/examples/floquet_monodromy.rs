//! For a potential depending on t1 only, the slice at w1 equal to a Floquet
//! multiplier contains the matching w2; compare both computations.

use conformal_mnv::bloch::{self, BlochOptions, SliceWindow};
use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::weierstrass;

fn main() -> conformal_mnv::Result<()> {
    let x = geometry::revolve_profile(&ProfileCurve::round(3.0, 1.0, 512)?, 128, 8)?.immersion;
    let u = weierstrass::extract_potential(&x)?;
    let tau = u.grid().tau();
    let profile = bloch::x_profile(&u, 1e-9).expect("revolution potentials depend on t1 only");
    let window = SliceWindow::new(0.5, 2.0, 32)?;
    for kappa in [0.3, 1.1, 2.5] {
        let md = bloch::floquet_monodromy(&profile, 1.0, kappa)?;
        let w2 = md.w2(tau);
        println!("kappa = {kappa}: trace {:.10}, det {:.2e}, w2 = {w2:.10}", md.trace(), md.det);
        for w1 in md.eigenvalues {
            let slice = bloch::dispersion_slice(&u, w1, &window, &BlochOptions::default())?;
            let diff = slice.w2_values().iter().map(|w| (*w - w2).norm()).fold(f64::INFINITY, f64::min);
            println!("  w1 = {w1:.10}: closest slice root differs by {diff:.1e}");
        }
    }
    Ok(())
}
