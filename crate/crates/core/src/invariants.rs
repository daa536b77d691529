//! The MNV conserved quantities `h_k` from the formal-series recursion, and
//! closed forms for `h1` and `h3`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ScalarField;
use crate::weierstrass::{ensure_real, REAL_TOL};

/// Spectral tail (top octave) of the deepest jet above which a resolution
/// warning is attached.
pub const TAIL_WARN: f64 = 1e-8;

/// Relative round-off level of an input potential. Jet coefficients below this
/// level, amplified by the derivatives the jet carries, are not counted as tail.
pub const NOISE_REL: f64 = 1e-12;

/// Jets `phi_k`, `chi_k` for `k = 1..=K`.
#[derive(Clone, Debug)]
pub struct JetCoefficients {
    pub phi: Vec<ScalarField>,
    pub chi: Vec<ScalarField>,
}

/// `h_1 .. h_K` together with diagnostics. Index 0 holds `h_1`.
#[derive(Clone, Debug)]
pub struct InvariantVector {
    pub h: Vec<Complex64>,
    /// `max |h_{2k}|` over the even slots present.
    pub even_residual: f64,
    pub nx: usize,
    pub ny: usize,
    pub tau: Complex64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantDoc {
    #[serde(rename = "K")]
    pub k: usize,
    pub h: Vec<[f64; 2]>,
    pub even_residual: f64,
    pub nx: usize,
    pub ny: usize,
    pub tau: [f64; 2],
}

impl InvariantVector {
    /// `h_k` with 1-based `k`.
    pub fn get(&self, k: usize) -> Complex64 {
        self.h[k - 1]
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn to_doc(&self) -> InvariantDoc {
        InvariantDoc {
            k: self.h.len(),
            h: self.h.iter().map(|c| [c.re, c.im]).collect(),
            even_residual: self.even_residual,
            nx: self.nx,
            ny: self.ny,
            tau: [self.tau.re, self.tau.im],
        }
    }
}

/// Runs the recursion
///
/// ```text
/// chi_1 = -U
/// chi_k = -d_zbar chi_{k-1} - U phi_{k-1}
/// h_k   = << U chi_k - sum_{j<k} h_j phi_{k-j} >>
/// phi_k = d_z^{-1} (U chi_k - h_k - sum_{j<k} h_j phi_{k-j})
/// ```
///
/// with zero-mean `phi_k`.
pub fn mnv_recursion(u: &ScalarField, k: usize) -> Result<(JetCoefficients, InvariantVector)> {
    recursion_with_means(u, k, &[])
}

/// As [`mnv_recursion`], but `phi_k` gets the constant `means[k-1]` added
/// (missing entries are zero). The `h_k` do not depend on these constants.
pub fn recursion_with_means(u: &ScalarField, k: usize, means: &[Complex64]) -> Result<(JetCoefficients, InvariantVector)> {
    ensure_real(u, REAL_TOL)?;
    if k == 0 {
        return Err(crate::Error::InvalidArgument("K must be at least 1".into()));
    }
    let mut phi: Vec<ScalarField> = Vec::with_capacity(k);
    let mut chi: Vec<ScalarField> = Vec::with_capacity(k);
    let mut h: Vec<Complex64> = Vec::with_capacity(k);
    for level in 1..=k {
        let c = if level == 1 {
            -u
        } else {
            let prev = &chi[level - 2];
            &(-&prev.d_zbar()) - &(u * &phi[level - 2])
        };
        // rhs without h_k: U chi_k - sum_{j<k} h_j phi_{k-j}
        let mut rhs = u * &c;
        for j in 1..level {
            rhs = &rhs - &(&phi[level - j - 1] * h[j - 1]);
        }
        let hk = rhs.average();
        let centred = &rhs + (-hk);
        let mut p = centred.d_z_inverse_with_tol(f64::INFINITY)?;
        if let Some(m) = means.get(level - 1) {
            p = &p + *m;
        }
        h.push(hk);
        chi.push(c);
        phi.push(p);
    }
    let even_residual = h.iter().skip(1).step_by(2).map(|v| v.norm()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    let deepest = phi.last().expect("k >= 1");
    let g = u.grid();
    let u_peak = u.spectrum().iter().map(|c| c.norm()).fold(0.0, f64::max);
    // phi_k carries k-2 derivatives of U
    let order = k.saturating_sub(2) as i32;
    let tail = deepest.tail_ratio_floored(|m, n| {
        NOISE_REL * u_peak * g.dz_symbol(m as f64, n as f64).norm().max(1.0).powi(order)
    });
    if tail > TAIL_WARN && deepest.max_abs() > 0.0 {
        warnings.push(format!(
            "top-octave tail {tail:.2e} of phi_{k} exceeds {TAIL_WARN:e}; consider doubling the resolution"
        ));
    }
    Ok((
        JetCoefficients { phi, chi },
        InvariantVector {
            h,
            even_residual,
            nx: g.nx(),
            ny: g.ny(),
            tau: g.tau(),
            warnings,
        },
    ))
}

/// `h_1 .. h_K` only.
pub fn invariants(u: &ScalarField, k: usize) -> Result<InvariantVector> {
    Ok(mnv_recursion(u, k)?.1)
}

/// `h1 = -<<U^2>>`.
pub fn h1_direct(u: &ScalarField) -> Result<Complex64> {
    ensure_real(u, REAL_TOL)?;
    Ok(-(u * u).average())
}

/// `h3 = -<<U U_zbarzbar + (U^2 + h1) d_zbar V1>>` with `V1 = d_z^{-1}(U^2 + h1)`.
pub fn h3_direct(u: &ScalarField) -> Result<Complex64> {
    let h1 = h1_direct(u)?;
    let f = &(u * u) + h1;
    let v1 = f.d_z_inverse_with_tol(f64::INFINITY)?;
    let uzz = u.d_zbar().d_zbar();
    let integrand = &(u * &uzz) + &(&f * &v1.d_zbar());
    Ok(-integrand.average())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::trig::TrigSeries;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn smooth(g: &TorusGrid, a: f64, b: f64) -> ScalarField {
        ScalarField::from_real_fn(g, |x, y| {
            a * (2.0 * PI * x).cos() + b * (2.0 * PI * (x + y)).sin() + 0.3 * (2.0 * PI * y).cos().powi(2) + 0.2
        })
    }

    #[test]
    fn zero_potential() {
        let g = TorusGrid::new(c(0.0, 1.0), 8, 8).unwrap();
        let (jets, inv) = mnv_recursion(&ScalarField::zeros(&g), 5).unwrap();
        assert!(inv.h.iter().all(|v| *v == c(0.0, 0.0)));
        assert!(jets.phi.iter().chain(&jets.chi).all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn constant_potential() {
        let g = TorusGrid::new(c(0.2, 0.9), 8, 8).unwrap();
        let cst = 0.7;
        let u = ScalarField::constant(&g, c(cst, 0.0));
        let (jets, inv) = mnv_recursion(&u, 3).unwrap();
        assert!((inv.get(1) - c(-cst * cst, 0.0)).norm() < 1e-15);
        assert!(inv.get(2).norm() < 1e-15 && inv.get(3).norm() < 1e-15);
        assert!(jets.phi[0].max_abs() < 1e-15 && jets.phi[1].max_abs() < 1e-15);
        assert!(jets.chi[1].max_abs() < 1e-15 && jets.chi[2].max_abs() < 1e-15);
        assert!((jets.chi[0].get(3, 3) + cst).norm() < 1e-15);
        assert!((h1_direct(&u).unwrap() - c(-cst * cst, 0.0)).norm() < 1e-15);
        assert!(h3_direct(&u).unwrap().norm() < 1e-15);
    }

    #[test]
    fn even_coefficients_vanish() {
        let g = TorusGrid::new(c(0.1, 1.2), 64, 64).unwrap();
        let u = smooth(&g, 0.8, 0.5);
        let inv = invariants(&u, 6).unwrap();
        let scale = inv.get(1).norm().max(1.0);
        for k in [2, 4, 6] {
            assert!(inv.get(k).norm() < 1e-8 * scale, "h{k} = {}", inv.get(k));
        }
        assert!(inv.warnings.is_empty(), "{:?}", inv.warnings);
    }

    #[test]
    fn h1_of_cosine() {
        let g = TorusGrid::new(c(0.0, 1.0), 16, 16).unwrap();
        let u = ScalarField::from_real_fn(&g, |x, _| (2.0 * PI * x).cos());
        assert!((h1_direct(&u).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn closed_forms_match_recursion() {
        let g = TorusGrid::new(c(0.3, 0.8), 32, 32).unwrap();
        for (a, b) in [(0.8, 0.5), (-1.2, 0.1), (0.0, 2.0)] {
            let u = smooth(&g, a, b);
            let inv = invariants(&u, 3).unwrap();
            assert!((inv.get(1) - h1_direct(&u).unwrap()).norm() < 1e-12);
            let h3 = h3_direct(&u).unwrap();
            assert!((inv.get(3) - h3).norm() < 1e-9 * h3.norm(), "{} vs {}", inv.get(3), h3);
        }
    }

    #[test]
    fn one_dimensional_reduction() {
        // For U = U(x), d_zbar = d_x / 2 and d_zbar V1 = U^2 + h1, so
        // h3 = <(U')^2>/4 - <(U^2 - <U^2>)^2>.
        let n = 64;
        let profile = |x: f64| 1.0 + 0.6 * (2.0 * PI * x).cos() + 0.25 * (4.0 * PI * x).sin();
        let samples: Vec<f64> = (0..n).map(|j| profile(j as f64 / n as f64)).collect();
        let s = TrigSeries::from_samples(&samples, 1.0);
        let d = s.derivative().resample(n);
        let m2 = samples.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let oracle = d.iter().map(|v| v * v).sum::<f64>() / (4.0 * n as f64)
            - samples.iter().map(|v| (v * v - m2).powi(2)).sum::<f64>() / n as f64;
        let g = TorusGrid::new(c(0.0, 0.7), n, 8).unwrap();
        let u = ScalarField::from_real_fn(&g, |x, _| profile(x));
        let h3 = h3_direct(&u).unwrap();
        assert!((h3.re - oracle).abs() < 1e-11 * oracle.abs(), "{h3} vs {oracle}");
        assert!((invariants(&u, 3).unwrap().get(3).re - oracle).abs() < 1e-10 * oracle.abs());
    }

    #[test]
    fn normalization_does_not_matter() {
        let g = TorusGrid::new(c(0.0, 1.0), 32, 32).unwrap();
        let u = smooth(&g, 0.4, 0.9);
        let base = invariants(&u, 5).unwrap();
        let means = [c(0.3, -0.2), c(-1.1, 0.5), c(0.25, 0.0), c(0.0, 2.0), c(1.0, 1.0)];
        let shifted = recursion_with_means(&u, 5, &means).unwrap().1;
        for k in 1..=5 {
            let scale = base.get(k).norm().max(1.0);
            assert!((base.get(k) - shifted.get(k)).norm() < 1e-10 * scale, "k = {k}");
        }
    }

    #[test]
    fn rejects_complex_potential() {
        let g = TorusGrid::new(c(0.0, 1.0), 8, 8).unwrap();
        let u = ScalarField::constant(&g, c(1.0, 0.1));
        assert!(matches!(mnv_recursion(&u, 2), Err(crate::Error::NonRealPotential { .. })));
        assert!(matches!(h1_direct(&u), Err(crate::Error::NonRealPotential { .. })));
    }

    #[test]
    fn coarse_grid_warns() {
        let g = TorusGrid::new(c(0.0, 1.0), 8, 8).unwrap();
        let u = ScalarField::from_real_fn(&g, |x, y| (2.0 * ((2.0 * PI * x).sin() + (2.0 * PI * y).cos())).exp());
        assert!(!invariants(&u, 5).unwrap().warnings.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn lattice_translation_invariance(dj in 0usize..16, dk in 0usize..16, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let g = TorusGrid::new(c(0.25, 1.1), 16, 16).unwrap();
            let u = smooth(&g, a, b);
            let h = invariants(&u, 5).unwrap();
            let hs = invariants(&u.shift(dj, dk), 5).unwrap();
            for k in 1..=5 {
                prop_assert!((h.get(k) - hs.get(k)).norm() <= 1e-12 * h.get(k).norm().max(1.0));
            }
        }
    }
}
