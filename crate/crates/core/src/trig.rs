//! One-dimensional trigonometric interpolation on a uniform periodic grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Fourier series of a real periodic function known through uniform samples.
///
/// Coefficients are stored in FFT bin order and normalised so that
/// `f(x) = sum_m c_m exp(2 pi i m x / period)`. The Nyquist bin (even `n`)
/// is split symmetrically between `+n/2` and `-n/2`, which keeps the
/// interpolant real.
#[derive(Clone, Debug)]
pub struct TrigSeries {
    coeffs: Vec<Complex64>,
    period: f64,
}

impl TrigSeries {
    pub fn from_samples(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut data);
        let s = 1.0 / n as f64;
        data.iter_mut().for_each(|v| *v *= s);
        Self { coeffs: data, period }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    fn freq(&self, j: usize) -> f64 {
        let n = self.coeffs.len();
        if 2 * j < n {
            j as f64
        } else {
            j as f64 - n as f64
        }
    }

    fn is_nyquist(&self, j: usize) -> bool {
        2 * j == self.coeffs.len()
    }

    /// Applies a multiplier to each (signed) frequency `m`, returning a new series.
    fn with_symbol<F: Fn(f64) -> Complex64>(&self, symbol: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| if self.is_nyquist(j) { Complex64::new(0.0, 0.0) } else { c * symbol(self.freq(j)) })
            .collect();
        Self {
            coeffs,
            period: self.period,
        }
    }

    pub fn derivative(&self) -> Self {
        let w = 2.0 * PI / self.period;
        self.with_symbol(|m| Complex64::new(0.0, w * m))
    }

    /// Zero-mean antiderivative of `f - mean(f)`.
    pub fn antiderivative(&self) -> Self {
        let w = 2.0 * PI / self.period;
        self.with_symbol(|m| if m == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, -1.0 / (w * m)) })
    }

    /// Evaluates the real interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let w = 2.0 * PI * x / self.period;
        let mut acc = self.coeffs[0].re;
        for j in 1..=(n / 2) {
            let c = self.coeffs[j];
            let term = c * Complex64::from_polar(1.0, w * j as f64);
            if 2 * j == n {
                // Nyquist: real cosine part only
                acc += c.re * (w * j as f64).cos();
            } else {
                acc += 2.0 * term.re;
            }
        }
        acc
    }

    /// Samples the interpolant on a uniform grid of `m` points (zero padding or truncation).
    pub fn resample(&self, m: usize) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for (j, &c) in self.coeffs.iter().enumerate() {
            let f = self.freq(j) as i64;
            let fa = f.unsigned_abs() as usize;
            if 2 * fa == n {
                if m > n {
                    spec[n / 2] += 0.5 * c;
                    spec[m - n / 2] += 0.5 * c;
                } else if m == n {
                    spec[n / 2] += c;
                }
                continue;
            }
            if 2 * fa < m {
                let dst = if f >= 0 { fa } else { m - fa };
                spec[dst] += c;
            } else if 2 * fa == m {
                spec[m / 2] += c;
            }
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut spec);
        spec.iter().map(|v| v.re).collect()
    }

    /// Relative L2 weight of the top `fraction` of frequencies.
    pub fn tail_ratio(&self, fraction: f64) -> f64 {
        let n = self.coeffs.len();
        let cut = ((n / 2) as f64 * (1.0 - fraction)) as usize;
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| self.freq(*j).abs() as usize > cut)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        (tail / total).sqrt()
    }
}
