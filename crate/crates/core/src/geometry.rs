//! Immersed tori in conformal coordinates: surfaces of revolution, the
//! fundamental forms, mean curvature, conformal factor and the Willmore
//! functional.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::trig::TrigSeries;

/// Default threshold on the conformality residual `max |<X_z, X_z>| / |X_z|^2`.
pub const CONFORMAL_TOL: f64 = 1e-6;

/// Relative threshold on `EG - F^2` below which a node counts as degenerate.
const DEGENERACY_REL: f64 = 1e-12;

/// A closed curve `(r(s), h(s))` in the half-plane `r > 0`, sampled uniformly
/// over one period of its parameter.
///
/// Self-intersection is not checked.
#[derive(Clone, Debug)]
pub struct ProfileCurve {
    r: Vec<f64>,
    h: Vec<f64>,
    orientation: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    fourier_r: Vec<f64>,
    fourier_h: Vec<f64>,
}

impl ProfileCurve {
    /// Builds a profile from uniform samples of one period.
    pub fn from_samples(r: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if r.len() != h.len() {
            return Err(Error::InvalidArgument("profile r and h lengths differ".into()));
        }
        if r.len() < 4 || r.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "profile needs an even number (>= 4) of samples, got {}",
                r.len()
            )));
        }
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::DegenerateProfile(format!("r = {v} <= 0 at sample {i}")));
        }
        if r.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateProfile("non-finite sample".into()));
        }
        // shoelace area in the (r, h) half-plane
        let n = r.len();
        let area: f64 = (0..n)
            .map(|i| {
                let k = (i + 1) % n;
                r[i] * h[k] - r[k] * h[i]
            })
            .sum::<f64>()
            * 0.5;
        Ok(Self {
            r,
            h,
            orientation: if area >= 0.0 { 1.0 } else { -1.0 },
        })
    }

    /// Round circle of radius `radius` centred at distance `center` from the axis:
    /// `r(s) = center + radius cos s`, `h(s) = radius sin s`.
    pub fn round(center: f64, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::DegenerateProfile(format!("tube radius {radius} must be positive")));
        }
        if !(center > radius) {
            return Err(Error::DegenerateProfile(format!(
                "circle of radius {radius} at distance {center} touches the rotation axis"
            )));
        }
        let s: Vec<f64> = (0..samples).map(|i| 2.0 * PI * i as f64 / samples as f64).collect();
        Self::from_samples(
            s.iter().map(|t| center + radius * t.cos()).collect(),
            s.iter().map(|t| radius * t.sin()).collect(),
        )
    }

    /// Real trigonometric series `[a0, a1, b1, a2, b2, ...]` for `r` and `h`.
    pub fn from_fourier(fourier_r: &[f64], fourier_h: &[f64]) -> Result<Self> {
        if fourier_r.is_empty() || fourier_h.is_empty() {
            return Err(Error::InvalidArgument("empty Fourier series".into()));
        }
        let modes = (fourier_r.len().max(fourier_h.len()) + 1) / 2;
        let n = (4 * (modes + 1)).max(64);
        let n = n + n % 2;
        let eval = |c: &[f64], s: f64| {
            let mut acc = c[0];
            for k in 1..=((c.len() - 1 + 1) / 2) {
                let a = c.get(2 * k - 1).copied().unwrap_or(0.0);
                let b = c.get(2 * k).copied().unwrap_or(0.0);
                acc += a * (k as f64 * s).cos() + b * (k as f64 * s).sin();
            }
            acc
        };
        let s: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        Self::from_samples(
            s.iter().map(|&t| eval(fourier_r, t)).collect(),
            s.iter().map(|&t| eval(fourier_h, t)).collect(),
        )
    }

    /// Parses CSV with header `s,r,h`; rows are uniform samples of a closed curve
    /// (the closing sample, if repeated, is dropped).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols != ["s", "r", "h"] {
            return Err(Error::Parse(format!("expected header s,r,h, got {}", cols.join(","))));
        }
        let (mut s, mut r, mut h) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            s.push(field(0)?);
            r.push(field(1)?);
            h.push(field(2)?);
        }
        if s.len() >= 2 {
            let n = s.len();
            if (r[n - 1] - r[0]).abs() < 1e-12 && (h[n - 1] - h[0]).abs() < 1e-12 {
                s.pop();
                r.pop();
                h.pop();
            }
        }
        if s.len() >= 3 {
            let ds = s[1] - s[0];
            if s.windows(2).any(|w| ((w[1] - w[0]) - ds).abs() > 1e-9 * ds.abs().max(1.0)) {
                return Err(Error::Parse("profile samples must be uniform in s".into()));
            }
        }
        Self::from_samples(r, h)
    }

    /// Parses `{"fourier_r": [...], "fourier_h": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileJson = serde_json::from_str(text)?;
        Self::from_fourier(&doc.fourier_r, &doc.fourier_h)
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::from_samples(self.r.iter().map(|v| v * k).collect(), self.h.iter().map(|v| v * k).collect())
    }

    /// `+1` for counter-clockwise traversal in the `(r, h)` plane, `-1` otherwise.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn r_samples(&self) -> &[f64] {
        &self.r
    }

    pub fn h_samples(&self) -> &[f64] {
        &self.h
    }
}

/// Doubly periodic map of the lattice into R^3.
#[derive(Clone, Debug)]
pub struct Immersion {
    grid: TorusGrid,
    points: Vec<Vector3<f64>>,
    conformality_residual: f64,
}

/// JSON form of an immersion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImmersionDoc {
    pub tau: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<[f64; 3]>,
}

impl Immersion {
    pub fn new(grid: TorusGrid, points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "immersion has {} points, grid has {} nodes",
                points.len(),
                grid.len()
            )));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite immersion point".into()));
        }
        let mut x = Self {
            grid,
            points,
            conformality_residual: 0.0,
        };
        x.conformality_residual = x.measure_conformality();
        Ok(x)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// `max_node |<X_z, X_z>| / |X_z|^2` with the complex-bilinear product.
    pub fn conformality_residual(&self) -> f64 {
        self.conformality_residual
    }

    pub fn is_conformal(&self, tol: f64) -> bool {
        self.conformality_residual <= tol
    }

    /// Coordinate `i` of the immersion as a (real) scalar field.
    pub fn component(&self, i: usize) -> ScalarField {
        let vals = self.points.iter().map(|p| Complex64::new(p[i], 0.0)).collect();
        ScalarField::new(self.grid.clone(), vals).expect("length matches grid")
    }

    /// Applies a point map node-wise and re-measures conformality.
    pub fn map_points<F: Fn(&Vector3<f64>) -> Vector3<f64>>(&self, f: F) -> Result<Self> {
        Self::new(self.grid.clone(), self.points.iter().map(f).collect())
    }

    /// Largest distance between diagonally adjacent nodes.
    pub fn cell_diameter(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut d: f64 = 0.0;
        for k in 0..ny {
            for j in 0..nx {
                let a = self.points[self.grid.index(j, k)];
                let b = self.points[self.grid.index((j + 1) % nx, (k + 1) % ny)];
                let c = self.points[self.grid.index((j + 1) % nx, k)];
                let e = self.points[self.grid.index(j, (k + 1) % ny)];
                d = d.max((a - b).norm()).max((c - e).norm());
            }
        }
        d
    }

    /// `X_z` per node as three complex components.
    pub fn dz_components(&self) -> [ScalarField; 3] {
        [0, 1, 2].map(|i| self.component(i).d_z())
    }

    fn measure_conformality(&self) -> f64 {
        let xz = self.dz_components();
        (0..self.grid.len())
            .map(|idx| {
                let v = [xz[0].values()[idx], xz[1].values()[idx], xz[2].values()[idx]];
                let bil: Complex64 = v.iter().map(|c| c * c).sum();
                let herm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                if herm > 0.0 {
                    bil.norm() / herm
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn to_doc(&self) -> ImmersionDoc {
        ImmersionDoc {
            tau: [self.grid.tau().re, self.grid.tau().im],
            nx: self.grid.nx(),
            ny: self.grid.ny(),
            points: self.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn from_doc(doc: &ImmersionDoc) -> Result<Self> {
        let grid = TorusGrid::new(Complex64::new(doc.tau[0], doc.tau[1]), doc.nx, doc.ny)?;
        Self::new(grid, doc.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect())
    }
}

/// A torus of revolution sampled in conformal coordinates.
#[derive(Clone, Debug)]
pub struct RevolvedTorus {
    pub immersion: Immersion,
    /// Conformal length `L_x = integral of d(sigma) / r` around the profile.
    pub conformal_length: f64,
    /// Profile parameter `s` at each of the `nx` conformal nodes.
    pub profile_params: Vec<f64>,
    /// Profile radius `r(s(x))` at each conformal node.
    pub radii: Vec<f64>,
}

/// Rotates `profile` about the `X3` axis and samples the torus in conformal
/// coordinates with `nx` nodes along the profile and `ny` around the axis.
pub fn revolve(profile: &ProfileCurve, ny: usize, nx_hint: usize) -> Result<Immersion> {
    Ok(revolve_profile(profile, nx_hint, ny)?.immersion)
}

/// Like [`revolve`] but also returns the conformal reparametrisation data.
///
/// Arc length is reparametrised by `dx = d(sigma)/r`, so that
/// `ds^2 = r^2 (dx^2 + d(theta)^2)`. The rectangle `[0, L_x) x [0, 2 pi)` is then
/// scaled by `1/L_x`, giving periods `1` and `tau = 2 pi i / L_x`.
pub fn revolve_profile(profile: &ProfileCurve, nx: usize, ny: usize) -> Result<RevolvedTorus> {
    if nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0 {
        return Err(Error::BadResolution { nx, ny });
    }
    let rs = TrigSeries::from_samples(&profile.r, 2.0 * PI);
    let hs = TrigSeries::from_samples(&profile.h, 2.0 * PI);
    let nf = (8 * nx).max(4 * profile.r.len()).max(2048);
    let r_f = rs.resample(nf);
    let dr_f = rs.derivative().resample(nf);
    let dh_f = hs.derivative().resample(nf);
    let r_min = r_f.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(r_min > 0.0) {
        return Err(Error::DegenerateProfile(format!("profile reaches r = {r_min:e} <= 0")));
    }
    let speed: Vec<f64> = dr_f.iter().zip(&dh_f).map(|(a, b)| a.hypot(*b)).collect();
    let max_speed = speed.iter().cloned().fold(0.0, f64::max);
    if !(max_speed > 0.0) || speed.iter().any(|v| *v <= 1e-12 * max_speed) {
        return Err(Error::DegenerateProfile("profile arc length vanishes".into()));
    }
    let g: Vec<f64> = speed.iter().zip(&r_f).map(|(v, r)| v / r).collect();
    let gs = TrigSeries::from_samples(&g, 2.0 * PI);
    let gbar = gs.mean();
    let conformal_length = 2.0 * PI * gbar;
    let periodic = gs.antiderivative();
    let p0 = periodic.eval(0.0);
    // x(s) = gbar s + P(s) - P(0), strictly increasing with x'(s) = g(s) > 0
    let x_of = |s: f64| gbar * s + periodic.eval(s) - p0;
    let mut params = Vec::with_capacity(nx);
    for j in 0..nx {
        let target = conformal_length * j as f64 / nx as f64;
        let mut s = target / gbar;
        for _ in 0..60 {
            let step = (x_of(s) - target) / gs.eval(s);
            s -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        params.push(s);
    }
    let radii: Vec<f64> = params.iter().map(|&s| rs.eval(s)).collect();
    let heights: Vec<f64> = params.iter().map(|&s| hs.eval(s)).collect();
    let tau = Complex64::new(0.0, 2.0 * PI / conformal_length);
    let grid = TorusGrid::new(tau, nx, ny)?;
    let mut points = Vec::with_capacity(grid.len());
    for k in 0..ny {
        let theta = 2.0 * PI * k as f64 / ny as f64;
        let (sn, cs) = theta.sin_cos();
        for j in 0..nx {
            points.push(Vector3::new(radii[j] * cs, radii[j] * sn, heights[j]));
        }
    }
    Ok(RevolvedTorus {
        immersion: Immersion::new(grid, points)?,
        conformal_length,
        profile_params: params,
        radii,
    })
}

/// First and second fundamental forms in lattice coordinates `(t1, t2)`, with
/// the unit normal `X_t1 x X_t2 / |X_t1 x X_t2|`.
#[derive(Clone, Debug)]
pub struct FundamentalForms {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub normal: Vec<Vector3<f64>>,
}

impl FundamentalForms {
    /// `H = (EN - 2FM + GL) / (2(EG - F^2))`.
    pub fn mean_curvature(&self) -> Vec<f64> {
        (0..self.e.len())
            .map(|i| {
                let det = self.e[i] * self.g[i] - self.f[i] * self.f[i];
                (self.e[i] * self.n[i] - 2.0 * self.f[i] * self.m[i] + self.g[i] * self.l[i]) / (2.0 * det)
            })
            .collect()
    }

    /// Area density `sqrt(EG - F^2)` with respect to `dt1 dt2`.
    pub fn area_element(&self) -> Vec<f64> {
        (0..self.e.len())
            .map(|i| (self.e[i] * self.g[i] - self.f[i] * self.f[i]).sqrt())
            .collect()
    }
}

pub fn fundamental_forms(x: &Immersion) -> Result<FundamentalForms> {
    let grid = x.grid();
    let len = grid.len();
    let mut d1 = vec![Vector3::zeros(); len];
    let mut d2 = vec![Vector3::zeros(); len];
    let mut d11 = vec![Vector3::zeros(); len];
    let mut d12 = vec![Vector3::zeros(); len];
    let mut d22 = vec![Vector3::zeros(); len];
    for i in 0..3 {
        let c = x.component(i);
        let a = c.d_t1();
        let b = c.d_t2();
        let aa = a.d_t1();
        let ab = a.d_t2();
        let bb = b.d_t2();
        for idx in 0..len {
            d1[idx][i] = a.values()[idx].re;
            d2[idx][i] = b.values()[idx].re;
            d11[idx][i] = aa.values()[idx].re;
            d12[idx][i] = ab.values()[idx].re;
            d22[idx][i] = bb.values()[idx].re;
        }
    }
    let e: Vec<f64> = d1.iter().map(|v| v.dot(v)).collect();
    let f: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a.dot(b)).collect();
    let g: Vec<f64> = d2.iter().map(|v| v.dot(v)).collect();
    let emax = e.iter().cloned().fold(0.0, f64::max);
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    let floor = DEGENERACY_REL * emax * gmax;
    let mut normal = Vec::with_capacity(len);
    for idx in 0..len {
        let det = e[idx] * g[idx] - f[idx] * f[idx];
        if !(det > floor) {
            let (j, k) = grid.coords(idx);
            return Err(Error::DegenerateImmersion { det, j, k });
        }
        normal.push(d1[idx].cross(&d2[idx]).normalize());
    }
    let l = d11.iter().zip(&normal).map(|(a, nn)| a.dot(nn)).collect();
    let m = d12.iter().zip(&normal).map(|(a, nn)| a.dot(nn)).collect();
    let n = d22.iter().zip(&normal).map(|(a, nn)| a.dot(nn)).collect();
    Ok(FundamentalForms { e, f, g, l, m, n, normal })
}

/// Willmore functional `T = integral H^2 dS` by the periodic trapezoid rule.
pub fn willmore(x: &Immersion) -> Result<f64> {
    let forms = fundamental_forms(x)?;
    Ok(willmore_from_forms(&forms))
}

pub(crate) fn willmore_from_forms(forms: &FundamentalForms) -> f64 {
    let h = forms.mean_curvature();
    let da = forms.area_element();
    h.iter().zip(&da).map(|(h, a)| h * h * a).sum::<f64>() / h.len() as f64
}

/// Conformal factor `e^alpha` with `ds^2 = e^{2 alpha} |dz|^2`, from `e^{2 alpha} = E`.
pub fn conformal_factor(x: &Immersion) -> Result<ScalarField> {
    conformal_factor_with_tol(x, CONFORMAL_TOL)
}

pub fn conformal_factor_with_tol(x: &Immersion, tol: f64) -> Result<ScalarField> {
    if !x.is_conformal(tol) {
        return Err(Error::NotConformal {
            residual: x.conformality_residual(),
            threshold: tol,
        });
    }
    let c = [0, 1, 2].map(|i| x.component(i).d_t1());
    let vals = (0..x.grid().len())
        .map(|idx| {
            let e: f64 = c.iter().map(|f| f.values()[idx].re.powi(2)).sum();
            Complex64::new(e.sqrt(), 0.0)
        })
        .collect();
    ScalarField::new(x.grid().clone(), vals)
}

/// Closed forms for the round torus with centre-line radius `big_r` and tube
/// radius `small_r`, parametrised by the profile angle `s`.
pub mod reference {
    use std::f64::consts::PI;

    /// `pi^2 R^2 / (r sqrt(R^2 - r^2))`.
    pub fn torus_willmore(big_r: f64, small_r: f64) -> f64 {
        PI * PI * big_r * big_r / (small_r * (big_r * big_r - small_r * small_r).sqrt())
    }

    /// Mean curvature w.r.t. the inward-pointing normal of a counter-clockwise profile.
    pub fn torus_mean_curvature(big_r: f64, small_r: f64, s: f64) -> f64 {
        (big_r + 2.0 * small_r * s.cos()) / (2.0 * small_r * (big_r + small_r * s.cos()))
    }

    /// Conformal length `integral_0^{2 pi} ds / (R + r cos s) = 2 pi / sqrt(R^2 - r^2)`.
    pub fn torus_conformal_length(big_r: f64, small_r: f64) -> f64 {
        2.0 * PI / (big_r * big_r - small_r * small_r).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn torus(big: f64, small: f64, n: usize) -> RevolvedTorus {
        revolve_profile(&ProfileCurve::round(big, small, 64).unwrap(), n, n).unwrap()
    }

    #[test]
    fn round_torus_is_conformal() {
        let t = torus(2.0, 1.0, 64);
        assert!(t.immersion.conformality_residual() < 1e-8, "{}", t.immersion.conformality_residual());
        assert_relative_eq!(t.conformal_length, reference::torus_conformal_length(2.0, 1.0), max_relative = 1e-13);
        let tau = t.immersion.grid().tau();
        assert_relative_eq!(tau.im, 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn scaled_profile_scales_immersion() {
        let p = ProfileCurve::round(2.0, 1.0, 32).unwrap();
        let a = revolve_profile(&p, 32, 16).unwrap();
        let b = revolve_profile(&p.scaled(2.5).unwrap(), 32, 16).unwrap();
        assert_eq!(a.immersion.grid().tau(), b.immersion.grid().tau());
        for (pa, pb) in a.immersion.points().iter().zip(b.immersion.points()) {
            assert!((pa * 2.5 - pb).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_profiles_rejected() {
        let r = vec![1.0, 0.0, 1.0, 2.0];
        let h = vec![0.0, 1.0, 0.0, -1.0];
        assert!(matches!(ProfileCurve::from_samples(r, h), Err(Error::DegenerateProfile(_))));
        assert!(matches!(ProfileCurve::round(1.0, 1.0, 16), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn equator_mean_curvature() {
        let t = torus(2.0, 1.0, 64);
        let forms = fundamental_forms(&t.immersion).unwrap();
        let h = forms.mean_curvature();
        let g = t.immersion.grid();
        // node j = 0 is s = 0 (outer equator); s = pi sits at j = nx/2 by symmetry
        assert_relative_eq!(h[g.index(0, 3)], 2.0 / 3.0, max_relative = 1e-10);
        assert!(h[g.index(32, 5)].abs() < 1e-10);
        assert!((t.profile_params[32] - PI).abs() < 1e-12);
        for j in 0..64 {
            let oracle = reference::torus_mean_curvature(2.0, 1.0, t.profile_params[j]);
            assert!((h[g.index(j, 0)] - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn forms_invariant_under_rotation() {
        let t = torus(2.0, 1.0, 32);
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 0.7);
        let y = t.immersion.map_points(|p| rot * p).unwrap();
        let a = fundamental_forms(&t.immersion).unwrap();
        let b = fundamental_forms(&y).unwrap();
        for i in 0..a.e.len() {
            for (u, v) in [(a.e[i], b.e[i]), (a.f[i], b.f[i]), (a.g[i], b.g[i]), (a.l[i], b.l[i]), (a.m[i], b.m[i]), (a.n[i], b.n[i])] {
                assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()));
            }
            assert!((rot * a.normal[i] - b.normal[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn willmore_closed_forms_and_scale_invariance() {
        for (big, small) in [(2f64.sqrt(), 1.0), (2.0, 1.0)] {
            let t = torus(big, small, 128);
            let w = willmore(&t.immersion).unwrap();
            assert_relative_eq!(w, reference::torus_willmore(big, small), max_relative = 1e-10);
        }
        assert_relative_eq!(reference::torus_willmore(2f64.sqrt(), 1.0), 2.0 * PI * PI, max_relative = 1e-14);
        let t = torus(2.0, 1.0, 64);
        let scaled = t.immersion.map_points(|p| p * 3.0).unwrap();
        assert_relative_eq!(willmore(&scaled).unwrap(), willmore(&t.immersion).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn willmore_converges_spectrally() {
        let exact = reference::torus_willmore(2f64.sqrt(), 1.0);
        let err = |n| (willmore(&torus(2f64.sqrt(), 1.0, n).immersion).unwrap() - exact).abs() / exact;
        let (e8, e16, e32) = (err(8), err(16), err(32));
        assert!(e16 < e8 / 10.0 && e32 < e16 / 10.0, "{e8:e} {e16:e} {e32:e}");
    }

    #[test]
    fn conformal_factor_is_profile_radius() {
        let t = torus(2.0, 1.0, 64);
        let ea = conformal_factor(&t.immersion).unwrap();
        let g = t.immersion.grid();
        for j in 0..64 {
            for k in [0, 17] {
                let pre = ea.get(j, k).re / t.conformal_length;
                assert!((pre - t.radii[j]).abs() < 1e-10);
            }
        }
        let scaled = t.immersion.map_points(|p| p * 2.0).unwrap();
        let eb = conformal_factor(&scaled).unwrap();
        assert!((eb.get(3, 4).re - 2.0 * ea.get(3, 4).re).abs() < 1e-10);
        let _ = g;
    }

    #[test]
    fn sheared_input_is_not_conformal() {
        let t = torus(2.0, 1.0, 32);
        let grid = t.immersion.grid().clone();
        let sheared = t
            .immersion
            .points()
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let (j, _) = grid.coords(idx);
                Vector3::new(p.x * (1.0 + 0.3 * (j as f64 / 32.0 * 2.0 * PI).sin()), p.y, p.z * 2.0)
            })
            .collect();
        let x = Immersion::new(grid, sheared).unwrap();
        assert!(matches!(conformal_factor(&x), Err(Error::NotConformal { .. })));
    }

    #[test]
    fn csv_and_json_profiles() {
        let mut text = String::from("s,r,h\n");
        for i in 0..32 {
            let s = 2.0 * PI * i as f64 / 32.0;
            text.push_str(&format!("{},{},{}\n", s, 2.0 + s.cos(), s.sin()));
        }
        let p = ProfileCurve::from_csv(&text).unwrap();
        assert_eq!(p.r_samples().len(), 32);
        assert_eq!(p.orientation(), 1.0);
        let bad = "s,r,h\n0,1,0\n1,-0.5,1\n2,1,0\n3,2,-1\n";
        assert!(matches!(ProfileCurve::from_csv(bad), Err(Error::DegenerateProfile(_))));
        let j = ProfileCurve::from_json(r#"{"fourier_r": [2.0, 1.0, 0.0], "fourier_h": [0.0, 0.0, 1.0]}"#).unwrap();
        let a = revolve_profile(&j, 32, 8).unwrap();
        let b = revolve_profile(&p, 32, 8).unwrap();
        assert_relative_eq!(a.conformal_length, b.conformal_length, max_relative = 1e-13);
    }

    #[test]
    fn immersion_doc_round_trip() {
        let t = torus(2.0, 1.0, 16);
        let doc = t.immersion.to_doc();
        let back = Immersion::from_doc(&serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap()).unwrap();
        assert_eq!(back.points(), t.immersion.points());
    }
}
