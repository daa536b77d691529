//! Willmore energy of tori of revolution, against the closed form for round
//! tori and against `4 Im(tau) <<U^2>>` computed from the potential.

use conformal_mnv::geometry::{self, reference, ProfileCurve};
use conformal_mnv::weierstrass::{self, energy_identity_check};

fn main() -> conformal_mnv::Result<()> {
    for big in [2f64.sqrt(), 2.0, 3.0] {
        for n in [64, 128, 256] {
            let x = geometry::revolve_profile(&ProfileCurve::round(big, 1.0, 512)?, n, n)?.immersion;
            let e = energy_identity_check(&x)?;
            let exact = reference::torus_willmore(big, 1.0);
            println!(
                "R = {big:.4}, n = {n:>3}: T = {:.12} (closed form {exact:.12}), from U: {:.12}, rel err {:.1e}",
                e.willmore,
                weierstrass::energy_from_potential(&weierstrass::extract_potential(&x)?),
                e.rel_err
            );
        }
    }
    Ok(())
}
