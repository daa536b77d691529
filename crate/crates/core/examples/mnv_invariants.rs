//! The functionals h_1 .. h_K of a potential, with the closed forms for h_1 and h_3.

use std::f64::consts::PI;

use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::invariants::{h1_direct, h3_direct, invariants};
use conformal_mnv::weierstrass;
use conformal_mnv::{ScalarField, TorusGrid};
use num_complex::Complex64;

fn show(name: &str, u: &ScalarField) -> conformal_mnv::Result<()> {
    let h = invariants(u, 6)?;
    println!("{name}");
    for k in 1..=6 {
        println!("  h{k} = {:+.12e} {:+.2e}i", h.get(k).re, h.get(k).im);
    }
    println!("  closed forms: h1 = {:+.12e}, h3 = {:+.12e}", h1_direct(u)?.re, h3_direct(u)?.re);
    for w in &h.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

fn main() -> conformal_mnv::Result<()> {
    let g = TorusGrid::new(Complex64::new(0.3, 1.1), 32, 32)?;
    show("U = 0.7", &ScalarField::constant(&g, Complex64::new(0.7, 0.0)))?;
    show("2D trigonometric", &ScalarField::from_real_fn(&g, |a, b| 0.7 + 0.4 * (2.0 * PI * a).cos() + 0.3 * (2.0 * PI * b).sin()))?;
    let x = geometry::revolve_profile(&ProfileCurve::from_fourier(&[2.0, 1.0, 0.0], &[0.0, 0.0, 1.5])?, 128, 16)?.immersion;
    show("elliptic-profile torus", &weierstrass::extract_potential(&x)?)?;
    Ok(())
}
