//! Builds a conformally parametrised torus of revolution from a profile curve
//! and reports its conformal period lattice.

use conformal_mnv::geometry::{self, reference, ProfileCurve};

fn main() -> conformal_mnv::Result<()> {
    let profiles = [
        ("round R=2, r=1", ProfileCurve::round(2.0, 1.0, 512)?),
        ("ellipse", ProfileCurve::from_fourier(&[2.0, 1.0, 0.0], &[0.0, 0.0, 1.5])?),
        ("two-harmonic", ProfileCurve::from_fourier(&[2.5, 1.0, 0.0, 0.2, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.3])?),
    ];
    for (name, p) in profiles {
        let t = geometry::revolve_profile(&p, 128, 64)?;
        let x = &t.immersion;
        println!(
            "{name:>14}: L_x = {:.10}, tau = {:.10}i, conformality residual {:.1e}",
            t.conformal_length,
            x.grid().tau().im,
            x.conformality_residual()
        );
    }
    println!("closed-form L_x for the round torus: {:.10}", reference::torus_conformal_length(2.0, 1.0));
    Ok(())
}
