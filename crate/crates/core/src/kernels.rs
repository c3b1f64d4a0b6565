//! Poisson kernel P, its conjugate Q, and the derived growth-potential kernels K = sQ, J = −s(1+P).
//!
//! Every denominator uses (1−s)² + 4s·sin²(ξ/2), which stays accurate as s → 1.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub s: f64,
    pub xi: f64,
}

impl KernelPoint {
    pub fn new(s: f64, xi: f64) -> Self {
        Self { s, xi }
    }

    fn check(&self) -> Result<()> {
        if denominator(self.s, self.xi) == 0.0 {
            Err(Error::SingularKernel)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDerivs {
    pub dp_ds: f64,
    pub dp_dxi: f64,
    pub dq_ds: f64,
    pub dq_dxi: f64,
}

/// 1 + s² − 2s cos ξ in factored form.
#[inline(always)]
pub fn denominator(s: f64, xi: f64) -> f64 {
    let h = (0.5 * xi).sin();
    (1.0 - s) * (1.0 - s) + 4.0 * s * h * h
}

/// (P, Q) without the singular-point guard.
#[inline(always)]
pub fn poisson_pq(s: f64, xi: f64) -> (f64, f64) {
    let inv = 1.0 / denominator(s, xi);
    ((1.0 - s * s) * inv, 2.0 * s * xi.sin() * inv)
}

/// (K, J) without the singular-point guard.
#[inline(always)]
pub fn kernel_kj(s: f64, xi: f64) -> (f64, f64) {
    let (p, q) = poisson_pq(s, xi);
    (s * q, -s * (1.0 + p))
}

pub fn eval_poisson(pt: KernelPoint) -> Result<(f64, f64)> {
    pt.check()?;
    Ok(poisson_pq(pt.s, pt.xi))
}

pub fn eval_kj(pt: KernelPoint) -> Result<(f64, f64)> {
    pt.check()?;
    Ok(kernel_kj(pt.s, pt.xi))
}

pub fn eval_poisson_derivs(pt: KernelPoint) -> Result<PoissonDerivs> {
    pt.check()?;
    let KernelPoint { s, xi } = pt;
    let h = (0.5 * xi).sin();
    let den = denominator(s, xi);
    let den2 = den * den;
    // (1+s²)cos ξ − 2s, rewritten to avoid cancellation near s = 1, ξ = 0
    let num_p = (1.0 - s) * (1.0 - s) - 2.0 * (1.0 + s * s) * h * h;
    let dp_ds = 2.0 * num_p / den2;
    let dq_ds = 2.0 * (1.0 - s * s) * xi.sin() / den2;
    Ok(PoissonDerivs { dp_ds, dp_dxi: -s * dq_ds, dq_ds, dq_dxi: s * dp_ds })
}

/// ∂J/∂s = −(1+P) − s∂P/∂s.
pub fn eval_dj_ds(pt: KernelPoint) -> Result<f64> {
    let (p, _) = eval_poisson(pt)?;
    let d = eval_poisson_derivs(pt)?;
    Ok(-(1.0 + p) - pt.s * d.dp_ds)
}
