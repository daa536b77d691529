//! Conformal transformations of R^3 acting on immersions, their infinitesimal
//! generators, the induced deformation of the Dirac data, and invariance reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use num_complex::Complex64;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Immersion, CONFORMAL_TOL};
use crate::grid::ScalarField;
use crate::invariants::{invariants, InvariantVector};
use crate::weierstrass::{self, SpinorField};

/// Inversion centres must be farther than this many cell diameters from the surface.
pub const INVERSION_MARGIN: f64 = 5.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An element of the conformal group of R^3.
#[derive(Clone, Debug, PartialEq)]
pub enum ConformalTransform {
    Translation(Vector3<f64>),
    /// Proper rotation `X -> A X`.
    Rotation(Matrix3<f64>),
    /// `X -> k X`, `k > 0`.
    Dilation(f64),
    /// Unit-sphere inversion `X -> c + (X - c) / |X - c|^2` about the centre `c`.
    Inversion(Vector3<f64>),
    /// `X -> X - 2 v <v, X>` for a unit vector `v`.
    Reflection(Vector3<f64>),
    /// Applied left to right.
    Composition(Vec<ConformalTransform>),
}

impl ConformalTransform {
    pub fn identity() -> Self {
        Self::Composition(Vec::new())
    }

    pub fn rotation_about(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        if !(axis.norm() > 0.0) {
            return Err(Error::InvalidTransform("rotation axis must be non-zero".into()));
        }
        Ok(Self::Rotation(*Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix()))
    }

    /// `self` followed by `next`.
    pub fn then(self, next: ConformalTransform) -> Self {
        compose(self, next)
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Translation(v) | Self::Inversion(v) => {
                if !v.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidTransform("non-finite vector".into()));
                }
            }
            Self::Rotation(a) => {
                let err = (a.transpose() * a - Matrix3::identity()).abs().max();
                if !(err < 1e-12) {
                    return Err(Error::InvalidTransform(format!("rotation not orthogonal (error {err:e})")));
                }
                if a.determinant() < 0.0 {
                    return Err(Error::InvalidTransform("rotation has determinant -1; use a reflection".into()));
                }
            }
            Self::Dilation(k) => {
                if !(*k > 0.0 && k.is_finite()) {
                    return Err(Error::InvalidTransform(format!("dilation factor {k} must be positive")));
                }
            }
            Self::Reflection(v) => {
                if !((v.norm() - 1.0).abs() < 1e-12) {
                    return Err(Error::InvalidTransform(format!("reflection vector has norm {}", v.norm())));
                }
            }
            Self::Composition(parts) => parts.iter().try_for_each(|p| p.validate())?,
        }
        Ok(())
    }

    /// Image of a single point; `None` at an inversion centre.
    pub fn map_point(&self, p: &Vector3<f64>) -> Option<Vector3<f64>> {
        match self {
            Self::Translation(v) => Some(p + v),
            Self::Rotation(a) => Some(a * p),
            Self::Dilation(k) => Some(p * *k),
            Self::Inversion(c) => {
                let d = p - c;
                let n2 = d.norm_squared();
                (n2 > 0.0).then(|| c + d / n2)
            }
            Self::Reflection(v) => Some(p - v * (2.0 * v.dot(p))),
            Self::Composition(parts) => parts.iter().try_fold(*p, |q, t| t.map_point(&q)),
        }
    }

    /// Whether the transform reverses orientation of R^3.
    pub fn reverses_orientation(&self) -> bool {
        match self {
            Self::Inversion(_) | Self::Reflection(_) => true,
            Self::Composition(parts) => parts.iter().filter(|p| p.reverses_orientation()).count() % 2 == 1,
            _ => false,
        }
    }

    fn flatten_into(self, out: &mut Vec<ConformalTransform>) {
        match self {
            Self::Composition(parts) => parts.into_iter().for_each(|p| p.flatten_into(out)),
            t => out.push(t),
        }
    }
}

/// `first` followed by `second`, flattened.
pub fn compose(first: ConformalTransform, second: ConformalTransform) -> ConformalTransform {
    let mut parts = Vec::new();
    first.flatten_into(&mut parts);
    second.flatten_into(&mut parts);
    if parts.len() == 1 {
        parts.pop().expect("one element")
    } else {
        ConformalTransform::Composition(parts)
    }
}

impl fmt::Display for ConformalTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v3 = |v: &Vector3<f64>| format!("{},{},{}", v.x, v.y, v.z);
        match self {
            Self::Translation(v) => write!(f, "translation:{}", v3(v)),
            Self::Rotation(a) => {
                let r = Rotation3::from_matrix_unchecked(*a);
                match r.axis_angle() {
                    Some((axis, angle)) => write!(f, "rotation:{},{}", v3(&axis.into_inner()), angle),
                    None => write!(f, "rotation:0,0,1,0"),
                }
            }
            Self::Dilation(k) => write!(f, "dilation:{k}"),
            Self::Inversion(c) => write!(f, "inversion:{}", v3(c)),
            Self::Reflection(v) => write!(f, "reflection:{}", v3(v)),
            Self::Composition(parts) => {
                if parts.is_empty() {
                    return write!(f, "identity");
                }
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", s.join(";"))
            }
        }
    }
}

/// Parses `kind:params` items separated by `;`, e.g. `inversion:0,0,5`,
/// `dilation:3`, `translation:1,0,0`, `rotation:ax,ay,az,angle`,
/// `reflection:vx,vy,vz` (normalised on parse), or `identity`.
impl FromStr for ConformalTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = ConformalTransform::identity();
        for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (kind, args) = item.split_once(':').unwrap_or((item, ""));
            let nums: Vec<f64> = if args.trim().is_empty() {
                Vec::new()
            } else {
                args.split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{item}: {e}"))))
                    .collect::<Result<_>>()?
            };
            let need = |n: usize| -> Result<()> {
                if nums.len() != n {
                    return Err(Error::Parse(format!("{kind} expects {n} numbers, got {}", nums.len())));
                }
                Ok(())
            };
            let v = |i: usize| Vector3::new(nums[i], nums[i + 1], nums[i + 2]);
            let t = match kind.trim().to_ascii_lowercase().as_str() {
                "identity" => ConformalTransform::identity(),
                "translation" => {
                    need(3)?;
                    ConformalTransform::Translation(v(0))
                }
                "rotation" => {
                    need(4)?;
                    ConformalTransform::rotation_about(v(0), nums[3])?
                }
                "dilation" => {
                    need(1)?;
                    ConformalTransform::Dilation(nums[0])
                }
                "inversion" => {
                    need(3)?;
                    ConformalTransform::Inversion(v(0))
                }
                "reflection" => {
                    need(3)?;
                    let w = v(0);
                    if !(w.norm() > 0.0) {
                        return Err(Error::InvalidTransform("reflection vector must be non-zero".into()));
                    }
                    ConformalTransform::Reflection(w.normalize())
                }
                other => return Err(Error::Parse(format!("unknown transform kind '{other}'"))),
            };
            t.validate()?;
            out = compose(out, t);
        }
        Ok(out)
    }
}

/// Applies `t` node-wise. Inversion centres closer to the (current) surface
/// than [`INVERSION_MARGIN`] cell diameters are rejected.
pub fn apply(t: &ConformalTransform, x: &Immersion) -> Result<Immersion> {
    apply_with_margin(t, x, INVERSION_MARGIN)
}

pub fn apply_with_margin(t: &ConformalTransform, x: &Immersion, margin: f64) -> Result<Immersion> {
    t.validate()?;
    match t {
        ConformalTransform::Composition(parts) => {
            let mut cur = x.clone();
            for p in parts {
                cur = apply_with_margin(p, &cur, margin)?;
            }
            Ok(cur)
        }
        ConformalTransform::Inversion(c) => {
            let distance = x.points().iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
            let required = margin * x.cell_diameter();
            if !(distance > required) {
                return Err(Error::CenterOnSurface { distance, required });
            }
            x.map_points(|p| t.map_point(p).expect("centre is off the surface"))
        }
        _ => x.map_points(|p| t.map_point(p).expect("affine maps are total")),
    }
}

/// Pointwise metric scale `Lambda(p)`: `ds'^2 = Lambda^2 ds^2`.
pub fn conformal_scale(t: &ConformalTransform, p: &Vector3<f64>) -> Result<f64> {
    Ok(match t {
        ConformalTransform::Translation(_) | ConformalTransform::Rotation(_) | ConformalTransform::Reflection(_) => 1.0,
        ConformalTransform::Dilation(k) => *k,
        ConformalTransform::Inversion(c) => {
            let d2 = (p - c).norm_squared();
            if !(d2 > 0.0) {
                return Err(Error::CenterOnSurface {
                    distance: 0.0,
                    required: 0.0,
                });
            }
            1.0 / d2
        }
        ConformalTransform::Composition(parts) => {
            let mut q = *p;
            let mut s = 1.0;
            for part in parts {
                s *= conformal_scale(part, &q)?;
                q = part.map_point(&q).expect("scale was finite");
            }
            s
        }
    })
}

/// Infinitesimal generators of the conformal algebra; axes are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorAction {
    /// `P_a`: `dX_i = delta_ia`.
    Translation(usize),
    /// `Omega_ab` (`a < b`): `dX_i = delta_ib X_a - delta_ia X_b`.
    Rotation(usize, usize),
    /// `D`: `dX = X`.
    Dilation,
    /// `K_a`: `dX_i = 2 X_i X_a - delta_ia |X|^2`.
    Inversion(usize),
    /// `-K_a`.
    NegInversion(usize),
}

impl GeneratorAction {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: usize| (1..=3).contains(&a);
        let valid = match *self {
            Self::Translation(a) | Self::Inversion(a) | Self::NegInversion(a) => ok(a),
            Self::Rotation(a, b) => ok(a) && ok(b) && a < b,
            Self::Dilation => true,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidTransform(format!("bad generator indices {self:?}")))
        }
    }

    pub fn delta(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let e = |a: usize| Vector3::ith(a - 1, 1.0);
        match *self {
            Self::Translation(a) => e(a),
            Self::Rotation(a, b) => e(b) * x[a - 1] - e(a) * x[b - 1],
            Self::Dilation => *x,
            Self::Inversion(a) => x * (2.0 * x[a - 1]) - e(a) * x.norm_squared(),
            Self::NegInversion(a) => -(x * (2.0 * x[a - 1]) - e(a) * x.norm_squared()),
        }
    }

    /// The one-parameter subgroup `exp(eps g)` as a finite transform.
    pub fn exp(&self, eps: f64) -> Result<ConformalTransform> {
        self.validate()?;
        let e = |a: usize| Vector3::ith(a - 1, 1.0);
        // I o T(s e_a) o I with I the inversion at the origin generates -K_a.
        let special = |s: f64, a: usize| {
            ConformalTransform::Composition(vec![
                ConformalTransform::Inversion(Vector3::zeros()),
                ConformalTransform::Translation(e(a) * s),
                ConformalTransform::Inversion(Vector3::zeros()),
            ])
        };
        Ok(match *self {
            Self::Translation(a) => ConformalTransform::Translation(e(a) * eps),
            Self::Rotation(a, b) => {
                // rotation carrying e_a towards e_b
                let axis = e(a).cross(&e(b));
                ConformalTransform::rotation_about(axis, eps)?
            }
            Self::Dilation => ConformalTransform::Dilation(eps.exp()),
            Self::Inversion(a) => special(-eps, a),
            Self::NegInversion(a) => special(eps, a),
        })
    }
}

/// Node-wise `dX` for the generator `g`.
pub fn infinitesimal_deform(g: &GeneratorAction, x: &Immersion) -> Vec<Vector3<f64>> {
    x.points().iter().map(|p| g.delta(p)).collect()
}

/// Analytic first-order deformation of the Dirac data under `-K_3`.
#[derive(Clone, Debug)]
pub struct PotentialDeformation {
    pub u: ScalarField,
    pub spinor: SpinorField,
    /// `dU = |Psi1|^2 - |Psi2|^2`.
    pub delta_u: ScalarField,
    /// `dPsi = -X3 Psi + i W Psi^+` with `W = X1 - i X2`.
    pub delta_psi: SpinorField,
}

pub fn deform_potential_analytic(x: &Immersion) -> Result<PotentialDeformation> {
    let spinor = weierstrass::recover_spinor(x)?;
    let u = weierstrass::extract_potential(x)?;
    let grid = x.grid().clone();
    let du: Vec<Complex64> = spinor
        .psi1()
        .iter()
        .zip(spinor.psi2())
        .map(|(a, b)| Complex64::new(a.norm_sqr() - b.norm_sqr(), 0.0))
        .collect();
    let plus = spinor.conjugate();
    let (mut d1, mut d2) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    for (i, p) in x.points().iter().enumerate() {
        let w = Complex64::new(p.x, -p.y);
        d1.push(-p.z * spinor.psi1()[i] + I * w * plus.psi1()[i]);
        d2.push(-p.z * spinor.psi2()[i] + I * w * plus.psi2()[i]);
    }
    let (m1, m2) = spinor.multipliers();
    Ok(PotentialDeformation {
        delta_u: ScalarField::new(grid.clone(), du)?,
        delta_psi: SpinorField::new(grid, d1, d2, m1, m2)?,
        u,
        spinor,
    })
}

/// Relative residual of the linearised Dirac equation
/// `dL Psi + L dPsi = 0`, with `dL` the change of `L` under `U -> U + dU`.
pub fn linearized_dirac_residual(d: &PotentialDeformation) -> f64 {
    let (s, ds) = (&d.spinor, &d.delta_psi);
    let (u, du) = (d.u.values(), d.delta_u.values());
    let a = ds.d_z(1);
    let b = ds.d_zbar(2);
    let mut num: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..u.len() {
        let r1 = a[i] - u[i] * ds.psi2()[i] - du[i] * s.psi2()[i];
        let r2 = b[i] + u[i] * ds.psi1()[i] + du[i] * s.psi1()[i];
        num = num.max(r1.norm() + r2.norm());
        scale = scale.max(
            a[i].norm()
                + b[i].norm()
                + u[i].norm() * (ds.psi1()[i].norm() + ds.psi2()[i].norm())
                + du[i].norm() * (s.psi1()[i].norm() + s.psi2()[i].norm()),
        );
    }
    if num == 0.0 {
        0.0
    } else {
        num / scale
    }
}

/// Least-squares fit of `target = alpha Psi + beta Psi^+`.
#[derive(Clone, Copy, Debug)]
pub struct RotationFit {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `|alpha|^2 + |beta|^2`, one for a rotation.
    pub norm: f64,
    /// Relative L2 misfit.
    pub residual: f64,
}

/// `Psi` and `Psi^+` are orthogonal in the node-wise L2 product, so the
/// normal equations are diagonal.
pub fn fit_rotation_law(psi: &SpinorField, target: &SpinorField) -> Result<RotationFit> {
    if psi.grid() != target.grid() {
        return Err(Error::GridMismatch);
    }
    let plus = psi.conjugate();
    let dot = |a: &SpinorField, b: &SpinorField| -> Complex64 {
        a.psi1().iter().zip(b.psi1()).chain(a.psi2().iter().zip(b.psi2())).map(|(x, y)| x.conj() * y).sum()
    };
    let nn = dot(psi, psi).re;
    if !(nn > 0.0) {
        return Err(Error::InvalidArgument("zero spinor".into()));
    }
    let alpha = dot(psi, target) / nn;
    let beta = dot(&plus, target) / nn;
    let fit = psi.rotate(alpha, beta);
    let miss: f64 = fit
        .psi1()
        .iter()
        .zip(target.psi1())
        .chain(fit.psi2().iter().zip(target.psi2()))
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    Ok(RotationFit {
        alpha,
        beta,
        norm: alpha.norm_sqr() + beta.norm_sqr(),
        residual: (miss / dot(target, target).re).sqrt(),
    })
}

/// One row of an invariance report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub re_before: f64,
    pub im_before: f64,
    pub re_after: f64,
    pub im_after: f64,
    pub abs_diff: f64,
    /// `abs_diff / max(|h_k|, |h_1|^((k+1)/2))`, both taken before the transform.
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub transform: String,
    pub seed: Option<u64>,
    pub nx: usize,
    pub ny: usize,
    pub tau: [f64; 2],
    pub willmore_before: f64,
    pub willmore_after: f64,
    pub willmore_rel_diff: f64,
    pub conformality_after: f64,
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

impl InvarianceReport {
    /// Relative drift of `h_k` (1-based).
    pub fn rel_diff(&self, k: usize) -> f64 {
        self.rows[k - 1].rel_diff
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Options for [`invariance_report_with`].
#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    pub conformal_tol: f64,
    pub margin: f64,
    pub seed: Option<u64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            conformal_tol: CONFORMAL_TOL,
            margin: INVERSION_MARGIN,
            seed: None,
        }
    }
}

/// `h_1..h_K` and Willmore energy before and after `t`, each recomputed from
/// the transformed points through forms, curvature and conformal factor.
pub fn invariance_report(x: &Immersion, t: &ConformalTransform, k: usize) -> Result<InvarianceReport> {
    invariance_report_with(x, t, k, ReportOptions::default())
}

pub fn invariance_report_with(x: &Immersion, t: &ConformalTransform, k: usize, opts: ReportOptions) -> Result<InvarianceReport> {
    let y = apply_with_margin(t, x, opts.margin)?;
    let (hb, wb) = surface_invariants(x, k, opts.conformal_tol)?;
    let (ha, wa) = surface_invariants(&y, k, opts.conformal_tol)?;
    // h_k scales like U^(k+1); the scale guards against h_k that vanish identically
    let h1 = hb.h[0].norm();
    let rows = hb
        .h
        .iter()
        .zip(&ha.h)
        .enumerate()
        .map(|(i, (b, a))| {
            let abs_diff = (a - b).norm();
            ReportRow {
                k: i + 1,
                re_before: b.re,
                im_before: b.im,
                re_after: a.re,
                im_after: a.im,
                abs_diff,
                rel_diff: {
                    let scale = b.norm().max(h1.powf((i + 2) as f64 / 2.0));
                    if scale > 0.0 {
                        abs_diff / scale
                    } else {
                        abs_diff
                    }
                },
            }
        })
        .collect();
    let mut warnings = hb.warnings.clone();
    warnings.extend(ha.warnings.iter().map(|w| format!("after: {w}")));
    let g = x.grid();
    Ok(InvarianceReport {
        transform: t.to_string(),
        seed: opts.seed,
        nx: g.nx(),
        ny: g.ny(),
        tau: [g.tau().re, g.tau().im],
        willmore_before: wb,
        willmore_after: wa,
        willmore_rel_diff: if wb != 0.0 { (wa - wb).abs() / wb } else { (wa - wb).abs() },
        conformality_after: y.conformality_residual(),
        rows,
        warnings,
    })
}

fn surface_invariants(x: &Immersion, k: usize, tol: f64) -> Result<(InvariantVector, f64)> {
    let u = weierstrass::extract_potential_with_tol(x, tol)?;
    Ok((invariants(&u, k)?, geometry::willmore(x)?))
}

/// Families of finite transforms for randomised sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Translation,
    Rotation,
    Dilation,
    Inversion,
    Reflection,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::Translation,
        TransformKind::Rotation,
        TransformKind::Dilation,
        TransformKind::Inversion,
        TransformKind::Reflection,
    ];
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random transform of the given kind scaled to the surface `x`. Inversion
/// centres are placed at `1.5..3` times the bounding radius from the
/// centroid, which also clears the cell-diameter margin.
pub fn sample_transform<R: Rng + ?Sized>(kind: TransformKind, rng: &mut R, x: &Immersion) -> Result<ConformalTransform> {
    let n = x.points().len() as f64;
    let centroid = x.points().iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let radius = x.points().iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    let t = match kind {
        TransformKind::Translation => ConformalTransform::Translation(unit_vector(rng) * radius * rng.random_range(0.1..2.0)),
        TransformKind::Rotation => ConformalTransform::rotation_about(unit_vector(rng), rng.random_range(-3.0..3.0))?,
        TransformKind::Dilation => ConformalTransform::Dilation(rng.random_range(0.25f64..4.0)),
        TransformKind::Inversion => {
            let c = centroid + unit_vector(rng) * radius * rng.random_range(1.5..3.0);
            ConformalTransform::Inversion(c)
        }
        TransformKind::Reflection => ConformalTransform::Reflection(unit_vector(rng)),
    };
    let margin = INVERSION_MARGIN * x.cell_diameter();
    if let ConformalTransform::Inversion(c) = &t {
        let d = x.points().iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
        if !(d > margin) {
            return Err(Error::CenterOnSurface { distance: d, required: margin });
        }
    }
    Ok(t)
}
