//! Zero-energy Bloch data of the periodic Dirac operator
//! `L = [[d_z, -U], [U, d_zbar]]`.
//!
//! Multipliers are `w1 = Psi(z+1)/Psi(z)` and `w2 = Psi(z+tau)/Psi(z)`.
//! Internally a point is addressed by its twist `theta = log(w)/(2 pi i)`, so
//! the Bloch-twisted Fourier basis is `exp(2 pi i ((m+theta1) t1 + (n+theta2) t2))`.
//! Reported quasimomenta are `p1 = 2 pi theta1`, `p2 = 2 pi theta2 / |tau|`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::trig::TrigSeries;

/// Default on-variety threshold for the normalised smallest singular value.
pub const ON_VARIETY_TOL: f64 = 1e-6;
/// Default ratio required between the free symbol on the truncation boundary and `||U||`.
pub const DEFAULT_MARGIN: f64 = 10.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug)]
pub struct BlochOptions {
    /// Odd truncation order; `None` picks one from the spectrum of `U`.
    pub m: Option<usize>,
    pub margin: f64,
    pub threshold: f64,
    /// Relative tolerance for treating `U` as independent of `t2`.
    pub profile_tol: f64,
}

impl Default for BlochOptions {
    fn default() -> Self {
        Self { m: None, margin: DEFAULT_MARGIN, threshold: ON_VARIETY_TOL, profile_tol: 1e-9 }
    }
}

/// A point of the Bloch variety, with logarithms and their branch integers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub w1: Complex64,
    pub w2: Complex64,
    pub p1: Complex64,
    pub p2: Complex64,
    pub branch1: i64,
    pub branch2: i64,
    pub residual: f64,
}

impl BlochPoint {
    /// Builds the point from a pair of twists, recording how far each sits from the principal branch.
    fn from_theta(theta1: Complex64, theta2: Complex64, tau_abs: f64, residual: f64) -> Self {
        let w1 = (2.0 * PI * I * theta1).exp();
        let w2 = (2.0 * PI * I * theta2).exp();
        Self {
            w1,
            w2,
            p1: 2.0 * PI * theta1,
            p2: 2.0 * PI * theta2 / tau_abs,
            branch1: (theta1.re - principal_theta(w1).re).round() as i64,
            branch2: (theta2.re - principal_theta(w2).re).round() as i64,
            residual,
        }
    }
}

/// `theta` with real part in `(-1/2, 1/2]` such that `exp(2 pi i theta) = w`.
pub fn principal_theta(w: Complex64) -> Complex64 {
    w.ln() / (2.0 * PI * I)
}

/// Prepared potential: Fourier data plus the t2-independence flag.
struct Potential<'a> {
    u: &'a ScalarField,
    spec: Vec<Complex64>,
    one_d: bool,
    l1: f64,
}

impl<'a> Potential<'a> {
    fn new(u: &'a ScalarField, profile_tol: f64) -> Self {
        let spec = u.spectrum();
        let l1 = spec.iter().map(|c| c.norm()).sum();
        let one_d = x_profile(u, profile_tol).is_some();
        Self { u, spec, one_d, l1 }
    }

    /// Fourier coefficient of `U` at `(dm, dn)`; Nyquist and beyond are treated as zero.
    fn coeff(&self, dm: i64, dn: i64) -> Complex64 {
        let g = self.u.grid();
        let (nx, ny) = (g.nx() as i64, g.ny() as i64);
        if 2 * dm.abs() >= nx || 2 * dn.abs() >= ny {
            return ZERO;
        }
        self.spec[g.index(dm.rem_euclid(nx) as usize, dn.rem_euclid(ny) as usize)]
    }

    fn symbols(&self, m: f64, n: f64, t1: Complex64, t2: Complex64) -> (Complex64, Complex64) {
        let g = self.u.grid();
        (dz_at(g.tau(), m + t1, n + t2), dzbar_at(g.tau(), m + t1, n + t2))
    }

    /// Ratio of the smallest free symbol on the truncation boundary to `||U||_1`.
    fn boundary_margin(&self, h: i64, t1: Complex64, t2: Complex64) -> f64 {
        if self.l1 == 0.0 {
            return f64::INFINITY;
        }
        let mut min = f64::INFINITY;
        let mut visit = |m: i64, n: i64| {
            let (a, b) = self.symbols(m as f64, n as f64, t1, t2);
            min = min.min(a.norm()).min(b.norm());
        };
        for n in -h..=h {
            visit(-h, n);
            visit(h, n);
            if !self.one_d {
                visit(n, -h);
                visit(n, h);
            }
        }
        min / self.l1
    }

    /// Operator on the modes `m in -h..=h` at fixed `n` (exact block for t2-independent `U`).
    fn block(&self, h: i64, n: i64, t1: Complex64, t2: Complex64) -> Mat<Complex64> {
        let size = (2 * h + 1) as usize;
        Mat::from_fn(2 * size, 2 * size, |r, c| {
            let (cr, mr) = (r / size, (r % size) as i64 - h);
            let (cc, mc) = (c / size, (c % size) as i64 - h);
            if cr == cc {
                if mr != mc {
                    return ZERO;
                }
                let (a, b) = self.symbols(mr as f64, n as f64, t1, t2);
                return if cr == 0 { a } else { b };
            }
            let uh = self.coeff(mr - mc, 0);
            if cr == 0 {
                -uh
            } else {
                uh
            }
        })
    }

    /// Full operator on the modes `(m, n) in [-h, h]^2`.
    fn full(&self, h: i64, t1: Complex64, t2: Complex64) -> Mat<Complex64> {
        let side = (2 * h + 1) as usize;
        let nm = side * side;
        let split = |r: usize| {
            let (c, rem) = (r / nm, r % nm);
            (c, (rem / side) as i64 - h, (rem % side) as i64 - h)
        };
        Mat::from_fn(2 * nm, 2 * nm, |r, c| {
            let (cr, mr, nr) = split(r);
            let (cc, mc, nc) = split(c);
            if cr == cc {
                if mr != mc || nr != nc {
                    return ZERO;
                }
                let (a, b) = self.symbols(mr as f64, nr as f64, t1, t2);
                return if cr == 0 { a } else { b };
            }
            let uh = self.coeff(mr - mc, nr - nc);
            if cr == 0 {
                -uh
            } else {
                uh
            }
        })
    }
}

fn dz_at(tau: Complex64, m: Complex64, n: Complex64) -> Complex64 {
    let tb = tau.conj();
    2.0 * PI * I * (tb * m - n) / (tb - tau)
}

fn dzbar_at(tau: Complex64, m: Complex64, n: Complex64) -> Complex64 {
    let tb = tau.conj();
    2.0 * PI * I * (-tau * m + n) / (tb - tau)
}

fn singular_values(a: &Mat<Complex64>) -> Result<Vec<f64>> {
    a.singular_values().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
}

fn check_order(m: usize) -> Result<i64> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::InvalidArgument(format!("truncation order must be odd and >= 3, got {m}")));
    }
    Ok(((m - 1) / 2) as i64)
}

/// Samples of `U` along `t1` if it does not depend on `t2` (relative tolerance `tol`).
pub fn x_profile(u: &ScalarField, tol: f64) -> Option<Vec<f64>> {
    let g = u.grid();
    let scale = u.max_abs().max(1e-300);
    for k in 1..g.ny() {
        for j in 0..g.nx() {
            if (u.get(j, k) - u.get(j, 0)).norm() > tol * scale {
                return None;
            }
        }
    }
    Some((0..g.nx()).map(|j| u.get(j, 0).re).collect())
}

/// Truncation order adequate for `U`: covers the resolved part of its spectrum with
/// room to spare, and meets the boundary margin at the origin of the twist plane.
pub fn suggest_truncation(u: &ScalarField, margin: f64) -> usize {
    let pot = Potential::new(u, BlochOptions::default().profile_tol);
    let g = u.grid();
    let floor = 1e-13 * pot.l1.max(1e-300);
    let mut decay = 0i64;
    for (idx, c) in pot.spec.iter().enumerate() {
        if c.norm() > floor {
            let (j, k) = g.coords(idx);
            decay = decay.max(g.freq_x(j).abs()).max(g.freq_y(k).abs());
        }
    }
    let mut h = decay + 16;
    while pot.boundary_margin(h, ZERO, ZERO) < 2.0 * margin {
        h += 1;
    }
    let cap = if pot.one_d { 512 } else { 12 };
    (2 * h.min(cap) + 1) as usize
}

/// Normalised smallest singular value of the truncated Dirac operator at twists `(theta1, theta2)`.
pub fn bloch_residual_theta(u: &ScalarField, theta1: Complex64, theta2: Complex64, m: usize, margin: f64) -> Result<f64> {
    let pot = Potential::new(u, BlochOptions::default().profile_tol);
    residual_with(&pot, theta1, theta2, m, margin)
}

fn residual_with(pot: &Potential, theta1: Complex64, theta2: Complex64, m: usize, margin: f64) -> Result<f64> {
    let h = check_order(m)?;
    let got = pot.boundary_margin(h, theta1, theta2);
    if got < margin {
        return Err(Error::TruncationTooSmall { m, margin: got, required: margin });
    }
    if !pot.one_d {
        let s = singular_values(&pot.full(h, theta1, theta2))?;
        return Ok(s.last().copied().unwrap_or(0.0) / s[0].max(1e-300));
    }
    // Blocks decouple in n. The smallest singular value of a block is bounded below by
    // its smallest free symbol minus ||U||_1, so only the few near-singular blocks are factored.
    let mut order: Vec<(f64, i64)> = (-h..=h)
        .map(|n| {
            let lo = (-h..=h)
                .map(|mm| {
                    let (a, b) = pot.symbols(mm as f64, n as f64, theta1, theta2);
                    a.norm().min(b.norm())
                })
                .fold(f64::INFINITY, f64::min);
            (lo, n)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut smin = f64::INFINITY;
    for &(lo, n) in &order {
        if lo - pot.l1 > smin {
            break;
        }
        let s = singular_values(&pot.block(h, n, theta1, theta2))?;
        smin = smin.min(s.last().copied().unwrap_or(0.0));
    }
    let mut smax: f64 = 0.0;
    for n in [-h, 0, h] {
        smax = smax.max(singular_values(&pot.block(h, n, theta1, theta2))?[0]);
    }
    Ok(smin / smax.max(1e-300))
}

/// Residual at quasimomenta `(p1, p2)`, i.e. `w1 = exp(i p1)`, `w2 = exp(i p2 |tau|)`.
pub fn bloch_det(u: &ScalarField, p1: Complex64, p2: Complex64, m: usize) -> Result<f64> {
    let tau_abs = u.grid().tau().norm();
    bloch_residual_theta(u, p1 / (2.0 * PI), p2 * tau_abs / (2.0 * PI), m, DEFAULT_MARGIN)
}

/// Residual at multipliers `(w1, w2)` on principal branches.
pub fn bloch_det_w(u: &ScalarField, w1: Complex64, w2: Complex64, opts: &BlochOptions) -> Result<f64> {
    let m = opts.m.unwrap_or_else(|| suggest_truncation(u, opts.margin));
    let pot = Potential::new(u, opts.profile_tol);
    residual_with(&pot, principal_theta(w1), principal_theta(w2), m, opts.margin)
}

/// Annulus `r_min <= |w2| <= r_max` searched by [`dispersion_slice`], keeping at most `count` roots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl SliceWindow {
    pub fn new(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max.is_finite() && r_min <= r_max) {
            return Err(Error::InvalidArgument(format!("window [{r_min}, {r_max}] must satisfy 0 < r_min <= r_max < inf")));
        }
        Ok(Self { r_min, r_max, count })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub m: usize,
    pub candidates: usize,
    pub outside_window: usize,
    pub dropped_unresolved: usize,
    pub dropped_residual: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Slice {
    pub w1: Complex64,
    pub points: Vec<BlochPoint>,
    pub nx: usize,
    pub ny: usize,
    pub diagnostics: SliceDiagnostics,
}

impl Slice {
    pub fn w2_values(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.w2).collect()
    }

    /// CSV with columns `k, re_w2, im_w2, residual, M, nx, ny`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["k", "re_w2", "im_w2", "residual", "M", "nx", "ny"]).map_err(io)?;
        for (k, p) in self.points.iter().enumerate() {
            w.write_record([
                k.to_string(),
                format!("{:e}", p.w2.re),
                format!("{:e}", p.w2.im),
                format!("{:e}", p.residual),
                self.diagnostics.m.to_string(),
                self.nx.to_string(),
                self.ny.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// All `w2` with `(w1, w2)` on the Bloch variety inside the window, sorted by `(|w2|, arg w2)`.
///
/// The truncated operator is affine in `theta2` with a diagonal, invertible slope, so
/// every root is an eigenvalue of a fixed matrix. Each candidate is then re-checked by
/// the singular-value criterion and the boundary margin; spurious roots from the
/// truncation edge fail the latter.
pub fn dispersion_slice(u: &ScalarField, w1: Complex64, window: &SliceWindow, opts: &BlochOptions) -> Result<Slice> {
    if w1.norm() == 0.0 || !w1.is_finite() {
        return Err(Error::InvalidArgument("w1 must be finite and non-zero".into()));
    }
    let g = u.grid();
    let tau = g.tau();
    let m = opts.m.unwrap_or_else(|| suggest_truncation(u, opts.margin));
    let h = check_order(m)?;
    let pot = Potential::new(u, opts.profile_tol);
    let t1 = principal_theta(w1);

    // d(symbol)/d(theta2) for the two components
    let beta = -2.0 * PI * I / (tau.conj() - tau);
    let mut a0 = if pot.one_d { pot.block(h, 0, t1, ZERO) } else { pot.full(h, t1, ZERO) };
    let half = a0.nrows() / 2;
    for r in 0..a0.nrows() {
        let b = if r < half { beta } else { -beta };
        for c in 0..a0.ncols() {
            a0[(r, c)] = -a0[(r, c)] / b;
        }
    }
    let eig = a0.eigenvalues().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;

    let mut diag = SliceDiagnostics { m, candidates: eig.len(), ..Default::default() };
    let mut thetas: Vec<Complex64> = Vec::new();
    for t2 in eig {
        let w2 = (2.0 * PI * I * t2).exp();
        let r = w2.norm();
        if !(r >= window.r_min && r <= window.r_max) {
            diag.outside_window += 1;
            continue;
        }
        // in the full operator, integer shifts of theta2 are near-copies of one root
        let t2p = principal_theta(w2);
        if thetas.iter().any(|t| (*t - t2p).norm() < 1e-7 * (1.0 + t2p.norm())) {
            continue;
        }
        thetas.push(t2p);
    }
    let checked: Vec<Result<f64>> = thetas.par_iter().map(|&t2| residual_with(&pot, t1, t2, m, opts.margin)).collect();
    let mut points = Vec::new();
    for (t2, res) in thetas.into_iter().zip(checked) {
        match res {
            Ok(r) if r < opts.threshold => points.push(BlochPoint::from_theta(t1, t2, tau.norm(), r)),
            Ok(_) => diag.dropped_residual += 1,
            Err(Error::TruncationTooSmall { .. }) => diag.dropped_unresolved += 1,
            Err(e) => return Err(e),
        }
    }
    // conjugate pairs share |w2| up to roundoff; quantise so the order is stable under perturbation
    let key = |w: Complex64| (w.norm().ln() * 1e8).round();
    points.sort_by(|a, b| key(a.w2).total_cmp(&key(b.w2)).then(a.w2.arg().total_cmp(&b.w2.arg())));
    points.truncate(window.count);
    if points.is_empty() {
        diag.note = Some(format!(
            "no roots in window |w2| in [{:e}, {:e}] ({} candidates, {} unresolved)",
            window.r_min, window.r_max, diag.candidates, diag.dropped_unresolved
        ));
    }
    Ok(Slice { w1, points, nx: g.nx(), ny: g.ny(), diagnostics: diag })
}

/// Residuals at the images of `p` under `sigma: w -> 1/w` and `sigma-theta: w -> conj(w)`.
pub fn involution_residuals(u: &ScalarField, p: &BlochPoint, opts: &BlochOptions) -> Result<(f64, f64)> {
    let s = bloch_det_w(u, 1.0 / p.w1, 1.0 / p.w2, opts)?;
    let st = bloch_det_w(u, p.w1.conj(), p.w2.conj(), opts)?;
    Ok((s, st))
}

/// Transfer matrix of the x-only reduction over one period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub kappa: f64,
    pub matrix: [[Complex64; 2]; 2],
    pub eigenvalues: [Complex64; 2],
    pub det: Complex64,
    pub steps: usize,
}

impl MonodromyData {
    pub fn trace(&self) -> Complex64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    /// `w2 = exp(i kappa Im tau)` belonging to this `kappa` on a rectangular lattice.
    pub fn w2(&self, tau: Complex64) -> Complex64 {
        (I * self.kappa * tau.im).exp()
    }
}

const MAX_STEPS: usize = 1 << 20;

fn rk4_transfer(samples: &[f64], kappa: f64, period: f64) -> [[f64; 2]; 2] {
    // samples at t = k h / 2 for k = 0..2N
    let n = samples.len() / 2;
    let h = period / n as f64;
    let f = |u: f64, p: [f64; 2]| [2.0 * u * p[1] - kappa * p[0], -2.0 * u * p[0] + kappa * p[1]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for col in cols.iter_mut() {
        let mut y = *col;
        for s in 0..n {
            let (u0, um, u1) = (samples[2 * s], samples[2 * s + 1], samples[(2 * s + 2) % (2 * n)]);
            let k1 = f(u0, y);
            let k2 = f(um, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(um, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(u1, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        *col = y;
    }
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

/// Floquet monodromy of `phi1' = 2 U phi2 - kappa phi1`, `phi2' = -2 U phi1 + kappa phi2`
/// over one period, from uniform samples of `U`.
///
/// Classical RK4 on the trigonometric interpolant; the step count doubles until two
/// successive transfer matrices agree to `1e-13` relative, and the last one is returned.
pub fn floquet_monodromy(u: &[f64], period: f64, kappa: f64) -> Result<MonodromyData> {
    if u.len() < 2 || !(period > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument("need >= 2 samples, positive period and finite kappa".into()));
    }
    let series = TrigSeries::from_samples(u, period);
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs())) + kappa.abs();
    let mut n = (4 * u.len()).max(64).max((8.0 * scale * period) as usize).next_power_of_two();
    let mut prev = rk4_transfer(&series.resample(2 * n), kappa, period);
    loop {
        n *= 2;
        if n > MAX_STEPS {
            return Err(Error::IntegrationFailure(format!("no convergence with {MAX_STEPS} RK4 steps")));
        }
        let next = rk4_transfer(&series.resample(2 * n), kappa, period);
        let norm = next.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = next.iter().flatten().zip(prev.iter().flatten()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if !norm.is_finite() {
            return Err(Error::IntegrationFailure("transfer matrix overflowed".into()));
        }
        prev = next;
        if diff <= 1e-13 * norm {
            break;
        }
    }
    let c = |v: f64| Complex64::new(v, 0.0);
    let matrix = [[c(prev[0][0]), c(prev[0][1])], [c(prev[1][0]), c(prev[1][1])]];
    let tr = matrix[0][0] + matrix[1][1];
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let disc = (0.25 * tr * tr - det).sqrt();
    Ok(MonodromyData { kappa, matrix, eigenvalues: [0.5 * tr + disc, 0.5 * tr - disc], det, steps: n })
}

/// Resonant pairs `lambda1 = (pi m Re tau - pi n)/Im tau + i pi m`, `lambda2 = conj(lambda1)`.
pub fn resonant_pairs(tau: Complex64, mmax: i64, nmax: i64) -> Result<Vec<(Complex64, Complex64)>> {
    if !(tau.im > 0.0) {
        return Err(Error::NonPositiveImaginaryModulus(tau.im));
    }
    let mut out = Vec::new();
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            let (m, n) = (m as f64, n as f64);
            let l1 = Complex64::new((PI * m * tau.re - PI * n) / tau.im, PI * m);
            out.push((l1, l1.conj()));
        }
    }
    Ok(out)
}
