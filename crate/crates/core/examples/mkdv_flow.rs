//! Calibrates the mKdV coefficient, evolves a revolution potential and checks
//! that h_1, h_3 and the Bloch slice are conserved (h_5 is reported).

use conformal_mnv::bloch::{self, BlochOptions, SliceWindow};
use conformal_mnv::geometry::{self, ProfileCurve};
use conformal_mnv::invariants::invariants;
use conformal_mnv::mkdv::{self, CalibrationSpec, FlowState};
use conformal_mnv::weierstrass;
use num_complex::Complex64;

fn main() -> conformal_mnv::Result<()> {
    let x = geometry::revolve_profile(&ProfileCurve::from_fourier(&[2.0, 1.0, 0.0], &[0.0, 0.0, 1.5])?, 128, 8)?.immersion;
    let u = weierstrass::extract_potential(&x)?;
    let tau = u.grid().tau();
    let profile = bloch::x_profile(&u, 1e-9).expect("revolution potential");

    let dt = mkdv::suggested_dt(&FlowState::new(profile.clone(), 24.0, 1.0)?);
    let cal = mkdv::calibrate_coefficient(&profile, 1.0, &CalibrationSpec { dt, ..Default::default() }, tau)?;
    let c = cal.c_star.expect("non-constant potential");
    println!("calibrated coefficient c* = {c:.6} (h3 drift {:.1e})", cal.best_drift);

    let traj = mkdv::evolve(&FlowState::new(profile.clone(), c, 1.0)?, dt, 1000, 100, tau)?;
    for row in &traj.rows {
        println!("  t = {:.3e}: h1 = {:.12}, h3 = {:.12}", row.t, row.h1_re, row.h3_re);
    }
    let (d1, d3) = traj.drifts();
    println!("relative drift: h1 {d1:.1e}, h3 {d3:.1e}");

    let before = mkdv::lift(&profile, tau)?;
    let after = mkdv::lift(&traj.final_state.u, tau)?;
    let h5 = |f| invariants(f, 5).map(|h| h.get(5));
    let (a, b) = (h5(&before)?, h5(&after)?);
    println!("h5: {:.10} -> {:.10}", a.re, b.re);

    let w1 = Complex64::new(0.3, 0.2).exp();
    let window = SliceWindow::new(0.05, 20.0, 32)?;
    let s0 = bloch::dispersion_slice(&before, w1, &window, &BlochOptions::default())?;
    let s1 = bloch::dispersion_slice(&after, w1, &window, &BlochOptions::default())?;
    for p in &s0.points {
        let d = s1.points.iter().map(|q| (q.w2 - p.w2).norm()).fold(f64::INFINITY, f64::min);
        println!("slice root {:.10} moved by {d:.1e}", p.w2);
    }
    Ok(())
}
