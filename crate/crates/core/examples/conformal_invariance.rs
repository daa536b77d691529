//! Applies random Möbius transformations to a torus and compares h_1, h_3, h_5
//! before and after, at increasing resolution.

use conformal_mnv::conformal::{self, ReportOptions, TransformKind};
use conformal_mnv::geometry::{self, ProfileCurve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> conformal_mnv::Result<()> {
    let profile = ProfileCurve::from_fourier(&[2.5, 1.0, 0.0, 0.2, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.3])?;
    let fine = geometry::revolve_profile(&profile, 256, 256)?.immersion;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in TransformKind::ALL {
        let t = conformal::sample_transform(kind, &mut rng, &fine)?;
        println!("{t}");
        for n in [64, 128, 256] {
            let x = geometry::revolve_profile(&profile, n, n)?.immersion;
            let opts = ReportOptions { conformal_tol: 1e-4, margin: 0.0, seed: Some(7) };
            let r = conformal::invariance_report_with(&x, &t, 5, opts)?;
            println!("  n = {n:>3}: drift h1 {:.1e}, h3 {:.1e}, h5 {:.1e}", r.rel_diff(1), r.rel_diff(3), r.rel_diff(5));
        }
    }
    Ok(())
}
