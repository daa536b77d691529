//! Uniform lattice over the period parallelogram spanned by `1` and `tau`,
//! together with the Fourier-multiplier calculus every other module uses.
//!
//! Node `(j, k)` sits at `z = j/nx + tau * k/ny`. Values are stored row-major
//! in `(k, j)`: index `k * nx + j`.
//!
//! The complex derivatives follow `z = x + iy`, `d/dz = (d/dx - i d/dy)/2`.
//! In lattice coordinates
//!
//! ```text
//! d/dz    = (conj(tau) d/dt1 - d/dt2) / (conj(tau) - tau)
//! d/dzbar = (-tau d/dt1 + d/dt2)      / (conj(tau) - tau)
//! ```
//!
//! and each `d/dt` is the multiplier `2 pi i m` on mode `m`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

struct Plans {
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
}

/// Periodic lattice with periods `1` and `tau` (`Im tau > 0`).
#[derive(Clone)]
pub struct TorusGrid {
    tau: Complex64,
    nx: usize,
    ny: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("tau", &self.tau)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.tau == other.tau
    }
}

/// Builds a grid, validating the modulus and the resolution.
pub fn make_grid(tau: Complex64, nx: usize, ny: usize) -> Result<TorusGrid> {
    TorusGrid::new(tau, nx, ny)
}

impl TorusGrid {
    pub fn new(tau: Complex64, nx: usize, ny: usize) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::NonPositiveImaginaryModulus(tau.im));
        }
        if nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::BadResolution { nx, ny });
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            x_fwd: planner.plan_fft_forward(nx),
            x_inv: planner.plan_fft_inverse(nx),
            y_fwd: planner.plan_fft_forward(ny),
            y_inv: planner.plan_fft_inverse(ny),
        };
        Ok(Self {
            tau,
            nx,
            ny,
            plans: Arc::new(plans),
        })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.nx + j
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Lattice coordinates `(t1, t2)` of node `(j, k)`.
    pub fn t(&self, j: usize, k: usize) -> (f64, f64) {
        (j as f64 / self.nx as f64, k as f64 / self.ny as f64)
    }

    /// Complex coordinate of node `(j, k)`.
    pub fn node(&self, j: usize, k: usize) -> Complex64 {
        let (t1, t2) = self.t(j, k);
        t1 + self.tau * t2
    }

    /// Signed Fourier index of FFT bin `j` along `t1`; the Nyquist bin maps to `-nx/2`.
    #[inline]
    pub fn freq_x(&self, j: usize) -> i64 {
        signed_freq(j, self.nx)
    }

    #[inline]
    pub fn freq_y(&self, k: usize) -> i64 {
        signed_freq(k, self.ny)
    }

    /// Fourier symbol of `d/dz` at (possibly shifted) frequencies `(m, n)`.
    pub fn dz_symbol(&self, m: f64, n: f64) -> Complex64 {
        let tb = self.tau.conj();
        2.0 * PI * I * (tb * m - n) / (tb - self.tau)
    }

    /// Fourier symbol of `d/dzbar` at frequencies `(m, n)`.
    pub fn dzbar_symbol(&self, m: f64, n: f64) -> Complex64 {
        let tb = self.tau.conj();
        2.0 * PI * I * (-self.tau * m + n) / (tb - self.tau)
    }

    /// Jacobian of `(t1, t2) -> (x, y)`, i.e. the area of the period cell.
    pub fn cell_area(&self) -> f64 {
        self.tau.im
    }

    /// Unnormalised forward 2D FFT in place.
    pub(crate) fn fft2(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Inverse 2D FFT in place, normalised so that `ifft2(fft2(f)) == f`.
    pub(crate) fn ifft2(&self, data: &mut [Complex64]) {
        self.transform(data, false);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.len());
        let (px, py) = if forward {
            (&self.plans.x_fwd, &self.plans.y_fwd)
        } else {
            (&self.plans.x_inv, &self.plans.y_inv)
        };
        px.process(data);
        let mut t = transpose(data, self.nx, self.ny);
        py.process(&mut t);
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }

    /// Applies a Fourier multiplier to grid values. `twist` shifts the
    /// frequencies to `m + twist[0]`, `n + twist[1]`, which represents
    /// quasi-periodic data with multipliers `exp(2 pi i twist)` per period
    /// (`twist = 0.5` for anti-periodic spinors). The Nyquist row/column of an
    /// untwisted axis is zeroed.
    pub fn spectral_apply<F>(&self, values: &[Complex64], twist: [f64; 2], symbol: F) -> Vec<Complex64>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let (nx, ny) = (self.nx, self.ny);
        let twisted = twist[0] != 0.0 || twist[1] != 0.0;
        let mut data: Vec<Complex64> = if twisted {
            values
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let (j, k) = self.coords(idx);
                    let (t1, t2) = self.t(j, k);
                    v * Complex64::from_polar(1.0, -2.0 * PI * (twist[0] * t1 + twist[1] * t2))
                })
                .collect()
        } else {
            values.to_vec()
        };
        self.fft2(&mut data);
        for k in 0..ny {
            let fk = self.freq_y(k);
            let nyq_y = twist[1] == 0.0 && 2 * k == ny;
            for j in 0..nx {
                let fj = self.freq_x(j);
                let nyq_x = twist[0] == 0.0 && 2 * j == nx;
                let idx = k * nx + j;
                if nyq_x || nyq_y {
                    data[idx] = Complex64::new(0.0, 0.0);
                } else {
                    data[idx] *= symbol(fj as f64 + twist[0], fk as f64 + twist[1]);
                }
            }
        }
        self.ifft2(&mut data);
        if twisted {
            for (idx, v) in data.iter_mut().enumerate() {
                let (j, k) = self.coords(idx);
                let (t1, t2) = self.t(j, k);
                *v *= Complex64::from_polar(1.0, 2.0 * PI * (twist[0] * t1 + twist[1] * t2));
            }
        }
        data
    }
}

#[inline]
fn signed_freq(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn transpose(data: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Complex-valued function sampled on every node of a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn constant(grid: &TorusGrid, c: Complex64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(t1, t2)` on every node.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: &TorusGrid, f: F) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (j, k) = grid.coords(idx);
                let (t1, t2) = grid.t(j, k);
                f(t1, t2)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real_fn<F: Fn(f64, f64) -> f64>(grid: &TorusGrid, f: F) -> Self {
        Self::from_fn(grid, |a, b| Complex64::new(f(a, b), 0.0))
    }

    pub fn from_real(grid: &TorusGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid.clone(), values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.grid.index(j, k)]
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Node-wise combination; fails on grid mismatch.
    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Cell average `<<f>>`; the trapezoid rule on a periodic grid.
    pub fn average(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn apply_symbol<F: Fn(f64, f64) -> Complex64>(&self, symbol: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.grid.spectral_apply(&self.values, [0.0, 0.0], symbol),
        }
    }

    pub fn d_z(&self) -> Self {
        let g = self.grid.clone();
        self.apply_symbol(|m, n| g.dz_symbol(m, n))
    }

    pub fn d_zbar(&self) -> Self {
        let g = self.grid.clone();
        self.apply_symbol(|m, n| g.dzbar_symbol(m, n))
    }

    pub fn d_t1(&self) -> Self {
        self.apply_symbol(|m, _| 2.0 * PI * I * m)
    }

    pub fn d_t2(&self) -> Self {
        self.apply_symbol(|_, n| 2.0 * PI * I * n)
    }

    /// Zero-mean antiderivative of `d/dz` with the default mean tolerance
    /// `1e-10 * max|f|`.
    pub fn d_z_inverse(&self) -> Result<Self> {
        self.d_z_inverse_with_tol(1e-10 * self.max_abs())
    }

    pub fn d_z_inverse_with_tol(&self, tol_mean: f64) -> Result<Self> {
        let mean = self.average().norm();
        if mean > tol_mean {
            return Err(Error::NonZeroMeanInput { mean, tol: tol_mean });
        }
        let g = self.grid.clone();
        Ok(self.apply_symbol(|m, n| {
            if m == 0.0 && n == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                1.0 / g.dz_symbol(m, n)
            }
        }))
    }

    /// Shifts the field by `(dj, dk)` lattice nodes: `g(j, k) = f(j + dj, k + dk)`.
    pub fn shift(&self, dj: usize, dk: usize) -> Self {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let values = (0..self.grid.len())
            .map(|idx| {
                let (j, k) = self.grid.coords(idx);
                self.values[((k + dk) % ny) * nx + (j + dj) % nx]
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Normalised Fourier coefficients in FFT bin order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        self.grid.fft2(&mut data);
        let s = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
        data
    }

    /// Fraction of the L2 norm carried by the top octave (|m| > nx/4 or |n| > ny/4).
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio_floored(|_, _| 0.0)
    }

    /// Like [`tail_ratio`](Self::tail_ratio), but coefficients with modulus at or
    /// below `floor(m, n)` are treated as round-off and ignored.
    pub fn tail_ratio_floored(&self, floor: impl Fn(i64, i64) -> f64) -> f64 {
        let spec = self.spectrum();
        let (mut tail, mut total) = (0.0, 0.0);
        for (idx, c) in spec.iter().enumerate() {
            let (j, k) = self.grid.coords(idx);
            if c.norm() <= floor(self.grid.freq_x(j), self.grid.freq_y(k)) {
                continue;
            }
            let e = c.norm_sqr();
            total += e;
            if 4 * self.grid.freq_x(j).unsigned_abs() as usize > self.grid.nx
                || 4 * self.grid.freq_y(k).unsigned_abs() as usize > self.grid.ny
            {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }

    pub fn to_doc(&self) -> FieldDoc {
        FieldDoc {
            tau_re: self.grid.tau.re,
            tau_im: self.grid.tau.im,
            nx: self.grid.nx,
            ny: self.grid.ny,
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }

    pub fn from_doc(doc: &FieldDoc) -> Result<Self> {
        let grid = TorusGrid::new(Complex64::new(doc.tau_re, doc.tau_im), doc.nx, doc.ny)?;
        Self::new(grid, doc.values.iter().map(|v| Complex64::new(v[0], v[1])).collect())
    }
}

/// JSON document for a scalar field; `values` are `[re, im]` pairs, row-major in `(k, j)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldDoc {
    pub tau_re: f64,
    pub tau_im: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<[f64; 2]>,
}

/// `d/dz` of a field.
pub fn d_z(f: &ScalarField) -> ScalarField {
    f.d_z()
}

/// `d/dzbar` of a field.
pub fn d_zbar(f: &ScalarField) -> ScalarField {
    f.d_zbar()
}

/// Zero-mean inverse of `d/dz`; fails if `f` has a non-negligible mean.
pub fn d_z_inverse(f: &ScalarField) -> Result<ScalarField> {
    f.d_z_inverse()
}

/// Cell average `<<f>>`.
pub fn average(f: &ScalarField) -> Complex64 {
    f.average()
}

fn assert_same(a: &ScalarField, b: &ScalarField) {
    assert!(a.grid == b.grid, "scalar fields on different grids");
}

impl<'a> Add<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert_same(self, rhs);
        self.zip_with(rhs, |a, b| a + b).expect("same grid")
    }
}

impl<'a> Sub<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        assert_same(self, rhs);
        self.zip_with(rhs, |a, b| a - b).expect("same grid")
    }
}

impl<'a> Mul<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        assert_same(self, rhs);
        self.zip_with(rhs, |a, b| a * b).expect("same grid")
    }
}

impl Mul<Complex64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: Complex64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Add<Complex64> for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Complex64) -> ScalarField {
        self.map(|v| v + rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|v| -v)
    }
}
