//! First-order change of (U, Psi) under the inversion generator, compared with
//! finite differences of the exact transformation.

use conformal_mnv::conformal::{self, GeneratorAction};
use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::weierstrass;
use num_complex::Complex64;

fn main() -> conformal_mnv::Result<()> {
    let x = geometry::revolve_profile(&ProfileCurve::round(2.0, 1.0, 512)?, 64, 64)?.immersion;
    let d = conformal::deform_potential_analytic(&x)?;
    println!("max |delta U| = {:.4}", d.delta_u.max_abs());
    println!("linearised Dirac residual: {:.1e}", conformal::linearized_dirac_residual(&d));

    let u0 = weierstrass::extract_potential(&x)?;
    let mut last = None;
    for eps in [4e-3, 2e-3, 1e-3, 5e-4] {
        let t = GeneratorAction::NegInversion(3).exp(eps)?;
        let y = conformal::apply_with_margin(&t, &x, 0.0)?;
        let u1 = weierstrass::extract_potential(&y)?;
        let fd = &(&u1 - &u0) * Complex64::new(1.0 / eps, 0.0);
        let err = (&fd - &d.delta_u).max_abs();
        let ratio = last.map(|l: f64| format!(", ratio {:.3}", l / err)).unwrap_or_default();
        println!("eps = {eps:.0e}: |FD - delta U| = {err:.3e}{ratio}");
        last = Some(err);
    }
    Ok(())
}
