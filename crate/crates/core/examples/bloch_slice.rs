//! Zero-energy Bloch multipliers at fixed w1, and the two involutions of the
//! Bloch variety.

use conformal_mnv::bloch::{self, BlochOptions, SliceWindow};
use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::weierstrass;
use num_complex::Complex64;

fn main() -> conformal_mnv::Result<()> {
    let x = geometry::revolve_profile(&ProfileCurve::round(2.0, 1.0, 512)?, 128, 8)?.immersion;
    let u = weierstrass::extract_potential(&x)?;
    let opts = BlochOptions::default();
    let window = SliceWindow::new(0.05, 20.0, 32)?;
    for w1 in [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.2).exp()] {
        let slice = bloch::dispersion_slice(&u, w1, &window, &opts)?;
        println!("w1 = {w1:.4}: {} roots, truncation M = {}", slice.points.len(), slice.diagnostics.m);
        for p in &slice.points {
            let (s, st) = bloch::involution_residuals(&u, p, &opts)?;
            println!("  w2 = {:.8}  residual {:.1e}  sigma {s:.1e}  sigma-theta {st:.1e}", p.w2, p.residual);
        }
    }
    Ok(())
}
