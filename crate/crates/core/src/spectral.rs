//! Periodic fields on the circle sampled at θ_j = 2πj/N, with Fourier-multiplier operators.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_range, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Signed wavenumber of FFT bin `j` on an `n`-point grid.
#[inline]
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real periodic function on N uniform nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    samples: Vec<f64>,
}

impl PeriodicField {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|j| f(node(j, n))).collect())
    }

    /// Field from `n`-point FFT coefficients normalized so that `c[0]` is the mean.
    /// Imaginary residue of a non-Hermitian input is discarded.
    pub fn from_coefficients(coeffs: &[Complex64]) -> Result<Self> {
        let n = coeffs.len();
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let mut buf = coeffs.to_vec();
        inverse_plan(n).process(&mut buf);
        Ok(Self { samples: buf.iter().map(|z| z.re).collect() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn theta(&self, j: usize) -> f64 {
        node(j, self.len())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// FFT coefficients scaled by 1/N, so `f(θ) = Σ c_k e^{ikθ}`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let n = self.len();
        let mut buf: Vec<Complex64> = self.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        forward_plan(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        for z in &mut buf {
            *z *= scale;
        }
        buf
    }

    /// Applies a multiplier `m(k)` per signed wavenumber. The Nyquist bin is zeroed when `odd`.
    pub fn apply_multiplier(&self, odd: bool, m: impl Fn(i64) -> Complex64) -> Self {
        let n = self.len();
        let mut c = self.coefficients();
        for (j, z) in c.iter_mut().enumerate() {
            if odd && j == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= m(wavenumber(j, n));
            }
        }
        Self::from_coefficients(&c).expect("grid size already validated")
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid integral over one period.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.mean()
    }

    pub fn derivative(&self) -> Self {
        self.apply_multiplier(true, |k| Complex64::new(0.0, k as f64))
    }

    pub fn hilbert(&self) -> Self {
        self.apply_multiplier(true, |k| Complex64::new(0.0, -(k.signum() as f64)))
    }

    /// Multiplier |k|. The Nyquist bin is dropped so that this equals `hilbert ∘ derivative`.
    pub fn frac_laplacian_half(&self) -> Self {
        self.apply_multiplier(true, |k| Complex64::new(k.abs() as f64, 0.0))
    }

    /// Normalized convolution with the Poisson kernel P(s, ·), i.e. multiplier s^{|k|}.
    pub fn poisson_smooth(&self, s: f64) -> Result<Self> {
        check_range("s", s, (0.0..1.0).contains(&s), "0 <= s < 1")?;
        Ok(self.apply_multiplier(false, |k| Complex64::new(s.powi(k.abs() as i32), 0.0)))
    }

    /// Multiplier e^{-t|k|}.
    pub fn poisson_semigroup(&self, t: f64) -> Result<Self> {
        check_range("t", t, t >= 0.0, "t >= 0")?;
        Ok(self.apply_multiplier(false, |k| Complex64::new((-t * k.abs() as f64).exp(), 0.0)))
    }

    /// Values at θ_j + π/N. The Nyquist bin is dropped.
    pub fn half_shift(&self) -> Self {
        let half = PI / self.len() as f64;
        self.apply_multiplier(true, |k| Complex64::from_polar(1.0, k as f64 * half))
    }

    /// Zeroes every mode with |k| > N/3.
    pub fn dealias_2_3(&self) -> Self {
        let cut = (self.len() / 3) as i64;
        self.apply_multiplier(false, |k| if k.abs() > cut { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.0) })
    }

    /// Trigonometric interpolation onto `n` nodes. A Nyquist bin is split symmetrically when refining.
    pub fn resample(&self, n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let m = self.len();
        if n == m {
            return Ok(self.clone());
        }
        let c = self.coefficients();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let kmax = (m.min(n) / 2) as i64;
        for (j, &z) in c.iter().enumerate() {
            let k = wavenumber(j, m);
            if k.abs() < kmax {
                out[k.rem_euclid(n as i64) as usize] += z;
            } else if n > m {
                // m/2 is the source Nyquist: split between ±m/2
                let half = z * 0.5;
                out[m / 2] += half;
                out[n - m / 2] += half;
            } else {
                // source modes beyond the target Nyquist fold onto the target Nyquist cosine
                if k.abs() == kmax {
                    out[n / 2] += Complex64::new(z.re, 0.0);
                }
            }
        }
        Self::from_coefficients(&out)
    }

    /// Band-limited interpolant evaluated at an arbitrary angle (Nyquist treated as a cosine).
    pub fn evaluate(&self, theta: f64) -> f64 {
        evaluate_coefficients(&self.coefficients(), theta)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { samples: self.samples.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "grid sizes differ");
        Self { samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|x| a * x)
    }

    pub fn add_constant(&self, a: f64) -> Self {
        self.map(|x| x + a)
    }

    /// Removes the mean.
    pub fn fluctuation(&self) -> Self {
        self.add_constant(-self.mean())
    }

    /// Complex amplitude of mode k ≥ 0, i.e. `c_k` with `f = Σ c_k e^{ikθ}`.
    pub fn mode(&self, k: usize) -> Complex64 {
        self.coefficients()[k % self.len()]
    }
}

/// Evaluates `Σ c_k e^{ikθ}` from normalized coefficients.
pub fn evaluate_coefficients(c: &[Complex64], theta: f64) -> f64 {
    let n = c.len();
    let mut acc = 0.0;
    for (j, z) in c.iter().enumerate() {
        let k = wavenumber(j, n);
        if j == n / 2 {
            acc += z.re * (k as f64 * theta).cos();
        } else {
            acc += (z * Complex64::from_polar(1.0, k as f64 * theta)).re;
        }
    }
    acc
}

#[inline]
pub fn node(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

impl Add for &PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &PeriodicField {
    type Output = PeriodicField;
    fn sub(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul for &PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<&PeriodicField> for f64 {
    type Output = PeriodicField;
    fn mul(self, rhs: &PeriodicField) -> PeriodicField {
        rhs.scale(self)
    }
}

impl Neg for &PeriodicField {
    type Output = PeriodicField;
    fn neg(self) -> PeriodicField {
        self.scale(-1.0)
    }
}
