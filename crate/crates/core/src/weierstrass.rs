//! Dirac operator with real potential, the Weierstrass map from spinors to
//! immersions, and the inverse problem (spinor and potential from a surface).
//!
//! Conventions: `d_z Psi1 = U Psi2`, `d_zbar Psi2 = -U Psi1`, and
//!
//! ```text
//! d_z (X1 + i X2) =  i conj(Psi1)^2     d_zbar (X1 + i X2) = -i conj(Psi2)^2
//! d_z (X1 - i X2) =  i Psi2^2           d_zbar (X1 - i X2) = -i Psi1^2
//! d_z X3 = -Psi2 conj(Psi1)             d_zbar X3 = -Psi1 conj(Psi2)
//! ```
//!
//! so that `e^alpha = |Psi1|^2 + |Psi2|^2` and `U = H e^alpha / 2`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Immersion, CONFORMAL_TOL};
use crate::grid::{ScalarField, TorusGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default relative Dirac residual accepted by [`weierstrass_map`].
pub const DIRAC_TOL: f64 = 1e-6;
/// Default relative period defect accepted by [`weierstrass_map`].
pub const PERIOD_TOL: f64 = 1e-8;
/// Default relative reality tolerance for potentials.
pub const REAL_TOL: f64 = 1e-10;

/// Spinor pair on the lattice with multipliers `mult1`, `mult2` in `{+1, -1}`
/// for the shifts `t1 -> t1 + 1` and `t2 -> t2 + 1`.
#[derive(Clone, Debug)]
pub struct SpinorField {
    grid: TorusGrid,
    psi1: Vec<Complex64>,
    psi2: Vec<Complex64>,
    mult1: i32,
    mult2: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpinorDoc {
    pub tau: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub mult1: i32,
    pub mult2: i32,
    pub psi1: Vec<[f64; 2]>,
    pub psi2: Vec<[f64; 2]>,
}

impl SpinorField {
    pub fn new(grid: TorusGrid, psi1: Vec<Complex64>, psi2: Vec<Complex64>, mult1: i32, mult2: i32) -> Result<Self> {
        if psi1.len() != grid.len() || psi2.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if mult1.abs() != 1 || mult2.abs() != 1 {
            return Err(Error::InvalidArgument(format!("multipliers must be +-1, got ({mult1}, {mult2})")));
        }
        Ok(Self {
            grid,
            psi1,
            psi2,
            mult1,
            mult2,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn psi1(&self) -> &[Complex64] {
        &self.psi1
    }

    pub fn psi2(&self) -> &[Complex64] {
        &self.psi2
    }

    pub fn multipliers(&self) -> (i32, i32) {
        (self.mult1, self.mult2)
    }

    /// Frequency shift used by the spectral derivatives (1/2 on anti-periodic axes).
    pub fn twist(&self) -> [f64; 2] {
        [
            if self.mult1 < 0 { 0.5 } else { 0.0 },
            if self.mult2 < 0 { 0.5 } else { 0.0 },
        ]
    }

    fn component(&self, which: usize) -> &[Complex64] {
        match which {
            1 => &self.psi1,
            2 => &self.psi2,
            _ => panic!("spinor component index must be 1 or 2"),
        }
    }

    /// `d_z` of component `which` (1 or 2).
    pub fn d_z(&self, which: usize) -> Vec<Complex64> {
        let g = &self.grid;
        g.spectral_apply(self.component(which), self.twist(), |m, n| g.dz_symbol(m, n))
    }

    /// `d_zbar` of component `which` (1 or 2).
    pub fn d_zbar(&self, which: usize) -> Vec<Complex64> {
        let g = &self.grid;
        g.spectral_apply(self.component(which), self.twist(), |m, n| g.dzbar_symbol(m, n))
    }

    /// `|Psi1|^2 + |Psi2|^2`, the conformal factor of the Weierstrass image.
    pub fn density(&self) -> ScalarField {
        let v = self
            .psi1
            .iter()
            .zip(&self.psi2)
            .map(|(a, b)| Complex64::new(a.norm_sqr() + b.norm_sqr(), 0.0))
            .collect();
        ScalarField::new(self.grid.clone(), v).expect("same grid")
    }

    /// The companion solution `Psi^+ = (conj(Psi2), -conj(Psi1))`, which solves the
    /// same Dirac equation when `U` is real.
    pub fn conjugate(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            psi1: self.psi2.iter().map(|v| v.conj()).collect(),
            psi2: self.psi1.iter().map(|v| -v.conj()).collect(),
            mult1: self.mult1,
            mult2: self.mult2,
        }
    }

    /// `alpha Psi + beta Psi^+`; for `|alpha|^2 + |beta|^2 = 1` this rotates the image.
    pub fn rotate(&self, alpha: Complex64, beta: Complex64) -> Self {
        let p = self.conjugate();
        Self {
            grid: self.grid.clone(),
            psi1: self.psi1.iter().zip(&p.psi1).map(|(a, b)| alpha * a + beta * b).collect(),
            psi2: self.psi2.iter().zip(&p.psi2).map(|(a, b)| alpha * a + beta * b).collect(),
            mult1: self.mult1,
            mult2: self.mult2,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            psi1: self.psi1.iter().map(|v| v * c).collect(),
            psi2: self.psi2.iter().map(|v| v * c).collect(),
            mult1: self.mult1,
            mult2: self.mult2,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.psi1.iter().chain(&self.psi2).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest node-wise distance to `other`, allowing one global sign flip.
    pub fn distance_up_to_sign(&self, other: &Self) -> f64 {
        let d = |s: f64| {
            self.psi1
                .iter()
                .zip(&other.psi1)
                .chain(self.psi2.iter().zip(&other.psi2))
                .map(|(a, b)| (a - b * s).norm())
                .fold(0.0, f64::max)
        };
        d(1.0).min(d(-1.0))
    }

    pub fn to_doc(&self) -> SpinorDoc {
        let pairs = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        SpinorDoc {
            tau: [self.grid.tau().re, self.grid.tau().im],
            nx: self.grid.nx(),
            ny: self.grid.ny(),
            mult1: self.mult1,
            mult2: self.mult2,
            psi1: pairs(&self.psi1),
            psi2: pairs(&self.psi2),
        }
    }

    pub fn from_doc(doc: &SpinorDoc) -> Result<Self> {
        let grid = TorusGrid::new(Complex64::new(doc.tau[0], doc.tau[1]), doc.nx, doc.ny)?;
        let unpack = |v: &[[f64; 2]]| v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        Self::new(grid, unpack(&doc.psi1), unpack(&doc.psi2), doc.mult1, doc.mult2)
    }
}

/// Input of the Weierstrass map.
#[derive(Clone, Debug)]
pub struct WeierstrassData {
    pub u: ScalarField,
    pub spinor: SpinorField,
    /// Value `(C1, C2, C3)` of the image at the base point.
    pub constants: [f64; 3],
    /// Base node `(j, k)`.
    pub basepoint: (usize, usize),
}

/// Tolerances and overrides for [`weierstrass_map_with`].
#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    pub dirac_tol: f64,
    pub period_tol: f64,
    /// Return the periodic part even if the image does not close up.
    pub allow_nonperiodic: bool,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            dirac_tol: DIRAC_TOL,
            period_tol: PERIOD_TOL,
            allow_nonperiodic: false,
        }
    }
}

/// Result of the Weierstrass map: the periodic part of `X` plus the lattice
/// means of `dX/dt1`, `dX/dt2` (zero for a closed torus).
#[derive(Clone, Debug)]
pub struct WeierstrassImage {
    pub immersion: Immersion,
    pub linear_part: [Vector3<f64>; 2],
    pub period_defect: f64,
}

/// Relative residual of `L Psi = 0`: the node-wise maximum of
/// `|d_z Psi1 - U Psi2| + |d_zbar Psi2 + U Psi1|`, divided by the scale of the
/// individual terms.
pub fn dirac_residual(u: &ScalarField, s: &SpinorField) -> f64 {
    if u.grid() != s.grid() {
        return f64::INFINITY;
    }
    let (a, b) = (s.d_z(1), s.d_zbar(2));
    let (c, d) = (s.d_zbar(1), s.d_z(2));
    let uv = u.values();
    let mut num: f64 = 0.0;
    let mut scale: f64 = s.max_abs();
    for i in 0..uv.len() {
        let r = (a[i] - uv[i] * s.psi2[i]).norm() + (b[i] + uv[i] * s.psi1[i]).norm();
        num = num.max(r);
        scale = scale.max(a[i].norm() + b[i].norm() + c[i].norm() + d[i].norm() + uv[i].norm() * (s.psi1[i].norm() + s.psi2[i].norm()));
    }
    if num == 0.0 {
        0.0
    } else {
        num / scale
    }
}

/// Weierstrass map with default tolerances; fails on non-closing images.
pub fn weierstrass_map(data: &WeierstrassData) -> Result<Immersion> {
    Ok(weierstrass_map_with(data, MapOptions::default())?.immersion)
}

pub fn weierstrass_map_with(data: &WeierstrassData, opts: MapOptions) -> Result<WeierstrassImage> {
    let s = &data.spinor;
    let grid = s.grid().clone();
    if data.u.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let res = dirac_residual(&data.u, s);
    if !(res <= opts.dirac_tol) {
        return Err(Error::DiracResidualTooLarge {
            residual: res,
            tol: opts.dirac_tol,
        });
    }
    let field = |f: &dyn Fn(Complex64, Complex64) -> Complex64| {
        let v = s.psi1.iter().zip(&s.psi2).map(|(p1, p2)| f(*p1, *p2)).collect();
        ScalarField::new(grid.clone(), v).expect("same grid")
    };
    let plus = (field(&|p1, _| I * p1.conj() * p1.conj()), field(&|_, p2| -I * p2.conj() * p2.conj()));
    let minus = (field(&|_, p2| I * p2 * p2), field(&|p1, _| -I * p1 * p1));
    let third = (field(&|p1, p2| -p2 * p1.conj()), field(&|p1, p2| -p1 * p2.conj()));

    let scale = s.density().max_abs().max(f64::MIN_POSITIVE);
    let (fp, lp) = antiderivative(&plus.0, &plus.1);
    let (fm, lm) = antiderivative(&minus.0, &minus.1);
    let (f3, l3) = antiderivative(&third.0, &third.1);
    let defect = [lp, lm, l3]
        .iter()
        .map(|(a, b)| a.norm() + b.norm())
        .fold(0.0, f64::max)
        / scale;
    if defect > opts.period_tol && !opts.allow_nonperiodic {
        return Err(Error::NonPeriodicImage { defect });
    }
    // linear part: dX/dt1 = X_z + X_zbar, dX/dt2 = tau X_z + conj(tau) X_zbar
    let tau = grid.tau();
    let lin = |(a, b): (Complex64, Complex64)| (a + b, tau * a + tau.conj() * b);
    let (p1, p2) = lin(lp);
    let (m1, m2) = lin(lm);
    let (t1, t2) = lin(l3);
    let to_x = |p: Complex64, m: Complex64, t: Complex64| Vector3::new(((p + m) / 2.0).re, ((p - m) / (2.0 * I)).re, t.re);
    let linear_part = [to_x(p1, m1, t1), to_x(p2, m2, t2)];

    let mut points: Vec<Vector3<f64>> = (0..grid.len())
        .map(|i| {
            let (p, m, t) = (fp.values()[i], fm.values()[i], f3.values()[i]);
            to_x(p, m, t)
        })
        .collect();
    let (j0, k0) = data.basepoint;
    let base = points[grid.index(j0 % grid.nx(), k0 % grid.ny())];
    let c = Vector3::from(data.constants);
    points.iter_mut().for_each(|p| *p += c - base);
    Ok(WeierstrassImage {
        immersion: Immersion::new(grid, points)?,
        linear_part,
        period_defect: defect,
    })
}

/// Periodic `F` with `d_z F = a`, `d_zbar F = b` in the least-squares sense,
/// plus the lattice means of `a` and `b` (the non-periodic linear part).
fn antiderivative(a: &ScalarField, b: &ScalarField) -> (ScalarField, (Complex64, Complex64)) {
    let g = a.grid().clone();
    let inv = |m: f64, n: f64, which: bool| {
        if m == 0.0 && n == 0.0 {
            return ZERO;
        }
        let (sz, szb) = (g.dz_symbol(m, n), g.dzbar_symbol(m, n));
        let den = sz.norm_sqr() + szb.norm_sqr();
        if which {
            sz.conj() / den
        } else {
            szb.conj() / den
        }
    };
    let fa = a.apply_symbol(|m, n| inv(m, n, true));
    let fb = b.apply_symbol(|m, n| inv(m, n, false));
    (&fa + &fb, (a.average(), b.average()))
}

/// Recovers the spinor of a conformal immersion with the default conformality tolerance.
pub fn recover_spinor(x: &Immersion) -> Result<SpinorField> {
    recover_spinor_with_tol(x, CONFORMAL_TOL)
}

/// Node-wise square roots of `Psi1^2 = i d_zbar W` or `Psi2^2 = -i d_z W`
/// (`W = X1 - i X2`), whichever is larger, the other component coming from the
/// `X3` relation. The remaining global sign per node is transported along
/// `t2` on the first column and then along every row; multipliers are read off
/// by extrapolating across the wrap.
pub fn recover_spinor_with_tol(x: &Immersion, tol: f64) -> Result<SpinorField> {
    if !x.is_conformal(tol) {
        return Err(Error::NotConformal {
            residual: x.conformality_residual(),
            threshold: tol,
        });
    }
    let grid = x.grid().clone();
    let (nx, ny) = (grid.nx(), grid.ny());
    let x1 = x.component(0);
    let x2 = x.component(1);
    let w = &x1 - &x2.scale(I);
    let dw = w.d_z();
    let dbw = w.d_zbar();
    let dx3 = x.component(2).d_z();
    let mut p1 = vec![ZERO; grid.len()];
    let mut p2 = vec![ZERO; grid.len()];
    for i in 0..grid.len() {
        let s1 = I * dbw.values()[i];
        let s2 = -I * dw.values()[i];
        let d3 = dx3.values()[i];
        if s1.norm() >= s2.norm() {
            let a = s1.sqrt();
            p1[i] = a;
            p2[i] = -d3 / a.conj();
        } else {
            let b = s2.sqrt();
            p2[i] = b;
            p1[i] = -d3.conj() / b.conj();
        }
    }
    let overlap = |p1: &[Complex64], p2: &[Complex64], i: usize, k: usize| {
        let c = p1[i].conj() * p1[k] + p2[i].conj() * p2[k];
        let n = (p1[i].norm_sqr() + p2[i].norm_sqr()).sqrt() * (p1[k].norm_sqr() + p2[k].norm_sqr()).sqrt();
        c.re / n
    };
    let flip = |p1: &mut [Complex64], p2: &mut [Complex64], from: usize, to: usize| {
        if overlap(p1, p2, from, to) < 0.0 {
            p1[to] = -p1[to];
            p2[to] = -p2[to];
        }
    };
    for k in 1..ny {
        flip(&mut p1, &mut p2, grid.index(0, k - 1), grid.index(0, k));
    }
    for k in 0..ny {
        for j in 1..nx {
            flip(&mut p1, &mut p2, grid.index(j - 1, k), grid.index(j, k));
        }
    }
    // edges not on the transport tree must agree too
    for k in 1..ny {
        for j in 1..nx {
            let o = overlap(&p1, &p2, grid.index(j, k - 1), grid.index(j, k));
            if !(o > 0.0) {
                return Err(Error::BranchInconsistency(format!(
                    "sign flip between nodes ({j}, {}) and ({j}, {k}) (overlap {o:.3}); resolution too coarse?",
                    k - 1
                )));
            }
        }
    }
    let mult1 = wrap_multiplier(&p1, &p2, nx, ny, |a, b| grid.index(a, b))?;
    let mult2 = wrap_multiplier(&p1, &p2, ny, nx, |a, b| grid.index(b, a))?;
    SpinorField::new(grid, p1, p2, mult1, mult2)
}

/// Multiplier along the axis of length `n` (indexed by `at(pos, line)`): the
/// ratio between the first node and a quartic extrapolation past the last one.
fn wrap_multiplier<F: Fn(usize, usize) -> usize>(p1: &[Complex64], p2: &[Complex64], n: usize, lines: usize, at: F) -> Result<i32> {
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    let mut estimates = Vec::with_capacity(lines);
    for line in 0..lines {
        let e = |p: &[Complex64]| {
            4.0 * p[at(n - 1, line)] - 6.0 * p[at(n - 2, line)] + 4.0 * p[at(n - 3, line)] - p[at(n - 4, line)]
        };
        let (e1, e2) = (e(p1), e(p2));
        let f = at(0, line);
        let c = (p1[f].conj() * e1 + p2[f].conj() * e2) / (p1[f].norm_sqr() + p2[f].norm_sqr());
        estimates.push(c.re);
        sum += c.re;
    }
    let sign = if sum >= 0.0 { 1.0 } else { -1.0 };
    for c in &estimates {
        worst = worst.max((c - sign).abs());
    }
    if worst > 0.25 {
        return Err(Error::BranchInconsistency(format!(
            "wrap multiplier deviates from {sign:+} by {worst:.3}"
        )));
    }
    Ok(sign as i32)
}

/// Potential `U = H e^alpha / 2` in lattice coordinates, with `H` taken w.r.t. the
/// normal `X_t1 x X_t2`.
pub fn extract_potential(x: &Immersion) -> Result<ScalarField> {
    extract_potential_with_tol(x, CONFORMAL_TOL)
}

pub fn extract_potential_with_tol(x: &Immersion, tol: f64) -> Result<ScalarField> {
    let ea = geometry::conformal_factor_with_tol(x, tol)?;
    let forms = geometry::fundamental_forms(x)?;
    let h = forms.mean_curvature();
    let v: Vec<f64> = h.iter().zip(ea.values()).map(|(h, e)| 0.5 * h * e.re).collect();
    ScalarField::from_real(x.grid(), &v)
}

/// Errors with [`Error::NonRealPotential`] unless `max |Im U| <= tol * max |U|`.
pub fn ensure_real(u: &ScalarField, tol: f64) -> Result<()> {
    let mi = u.max_imag();
    if mi > tol * u.max_abs().max(f64::MIN_POSITIVE) && mi > 0.0 {
        return Err(Error::NonRealPotential { max_imag: mi });
    }
    Ok(())
}

/// Both sides of the energy identity `T = 4 integral U^2 dx dy`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnergyIdentity {
    pub willmore: f64,
    pub h1: f64,
    pub rel_err: f64,
}

/// `4 Im(tau) <<U^2>>`: the lattice average becomes an integral over the cell
/// through the Jacobian `dx dy = Im(tau) dt1 dt2`.
pub fn energy_from_potential(u: &ScalarField) -> f64 {
    4.0 * u.grid().cell_area() * u.values().iter().map(|v| v.re * v.re).sum::<f64>() / u.values().len() as f64
}

pub fn energy_identity_check(x: &Immersion) -> Result<EnergyIdentity> {
    let t = geometry::willmore(x)?;
    let u = extract_potential(x)?;
    let h1 = energy_from_potential(&u);
    let diff = (t - h1).abs();
    Ok(EnergyIdentity {
        willmore: t,
        h1,
        rel_err: if t != 0.0 { diff / t } else { diff },
    })
}

/// Potential and spinor of a conformal immersion, with base point constants
/// so that the Weierstrass map reproduces `X`.
pub fn weierstrass_data(x: &Immersion) -> Result<WeierstrassData> {
    let spinor = recover_spinor(x)?;
    let u = extract_potential(x)?;
    let p = x.points()[0];
    Ok(WeierstrassData {
        u,
        spinor,
        constants: [p.x, p.y, p.z],
        basepoint: (0, 0),
    })
}
