//! Surface -> (U, Psi) -> surface, and back again.

use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::weierstrass::{self, dirac_residual, recover_spinor, weierstrass_data, weierstrass_map};

fn main() -> conformal_mnv::Result<()> {
    let x = geometry::revolve_profile(&ProfileCurve::from_fourier(&[2.0, 1.0, 0.0], &[0.0, 0.0, 1.5])?, 128, 64)?.immersion;
    let data = weierstrass_data(&x)?;
    println!("potential: max |U| = {:.4}, max |Im U| = {:.1e}", data.u.max_abs(), data.u.max_imag());
    println!("spinor multipliers (Psi(z+1), Psi(z+tau)): {:?}", data.spinor.multipliers());
    println!("Dirac residual: {:.1e}", dirac_residual(&data.u, &data.spinor));

    let y = weierstrass_map(&data)?;
    let worst = x.points().iter().zip(y.points()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("max |X - W(U, Psi)| = {worst:.2e}");

    let psi = recover_spinor(&y)?;
    println!("spinor recovered from the image, up to sign: {:.2e}", psi.distance_up_to_sign(&data.spinor));
    let u = weierstrass::extract_potential(&y)?;
    println!("potential recovered from the image: {:.2e}", (&u - &data.u).max_abs());
    Ok(())
}
