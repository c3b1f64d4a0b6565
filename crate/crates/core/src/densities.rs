//! Static system for the boundary density derivatives ([φ]′, φ′).
//!
//! [φ]′ = 2A((f′e_r + f e_θ)·∇(Γ∗g)|_γ + γ′⊥·K_γ[φ]′ + γ′⊥·K_{γ,γ̃}φ′)
//! φ′   = −2((F′e_r + F e_θ)·∇(Γ∗g)|_γ̃ + γ̃′⊥·K_γ̃φ′ + γ̃′⊥·K_{γ̃,γ}[φ]′)

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::InterfacePair;
use crate::growth_potential::GradComponents;
use crate::layer_ops::{interaction_inner_from_outer, interaction_outer_from_inner, singular_normal, Curve};
use crate::spectral::PeriodicField;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDensities {
    /// [φ]′ on the inner interface.
    pub jump_prime: PeriodicField,
    /// φ′ on the outer interface.
    pub outer_prime: PeriodicField,
    /// Sup-norm residual after each sweep.
    pub history: Vec<f64>,
}

impl BoundaryDensities {
    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self { jump_prime: PeriodicField::zeros(n)?, outer_prime: PeriodicField::zeros(n)?, history: Vec::new() })
    }

    /// Ratios of consecutive sweep residuals.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.history.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Coefficients of the linearization about concentric circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    /// A = (μ−ν)/(μ+ν).
    pub a: f64,
    pub c_star: f64,
    pub c_tilde_star: f64,
    pub r: f64,
    pub big_r: f64,
}

impl Linearization {
    pub fn new(mu: f64, nu: f64, c_star: f64, r: f64, big_r: f64) -> Self {
        Self { a: (mu - nu) / (mu + nu), c_star, c_tilde_star: r / big_r * c_star, r, big_r }
    }

    pub fn ratio(&self) -> f64 {
        self.r / self.big_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityControls {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for DensityControls {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, damping: 0.8 }
    }
}

/// Per-mode solution of [φ]′ = 2Ac_*f′ + ASφ′, φ′ = −2c̃_*F′ + S[φ]′ with f′_k = ik f_k, F′_k = ik F_k.
pub fn linearized_densities(k: i64, lin: &Linearization, f_k: Complex64, big_f_k: Complex64) -> (Complex64, Complex64) {
    let s = lin.ratio().powi(k.unsigned_abs() as i32);
    let ik = Complex64::new(0.0, k as f64);
    let (df, dbig) = (ik * f_k, ik * big_f_k);
    let det = 1.0 - lin.a * s * s;
    let x = (2.0 * lin.a * lin.c_star * df - 2.0 * lin.a * s * lin.c_tilde_star * dbig) / det;
    let y = -2.0 * lin.c_tilde_star * dbig + s * x;
    (x, y)
}

/// Linearized densities applied mode by mode to the current deviations.
pub fn linearized_fields(pair: &InterfacePair, lin: &Linearization) -> Result<(PeriodicField, PeriodicField)> {
    let n = pair.n();
    let ch = pair.h.coefficients();
    let cbig = pair.big_h.coefficients();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n {
        if j == n / 2 {
            continue;
        }
        let k = crate::spectral::wavenumber(j, n);
        let (a, b) = linearized_densities(k, lin, pair.r * ch[j], pair.big_r * cbig[j]);
        x[j] = a;
        y[j] = b;
    }
    Ok((PeriodicField::from_coefficients(&x)?, PeriodicField::from_coefficients(&y)?))
}

/// Right-hand sides of the static equations at (jump, outer).
pub fn static_map(
    pair: &InterfacePair,
    a: f64,
    grads_inner: &GradComponents,
    grads_outer: &GradComponents,
    jump: &PeriodicField,
    outer: &PeriodicField,
) -> Result<(PeriodicField, PeriodicField)> {
    let f = pair.inner_radius();
    let big_f = pair.outer_radius();
    let source_in = &(&f.derivative() * &grads_inner.radial) + &(&f * &grads_inner.tangential);
    let source_out = &(&big_f.derivative() * &grads_outer.radial) + &(&big_f * &grads_outer.tangential);
    let self_in = singular_normal(Curve::Inner, pair, jump)?;
    let self_out = singular_normal(Curve::Outer, pair, outer)?;
    let (_, cross_in) = interaction_inner_from_outer(pair, outer)?.project(&f);
    let (_, cross_out) = interaction_outer_from_inner(pair, jump)?.project(&big_f);
    let t_jump = (&(&source_in + &self_in) + &cross_in).scale(2.0 * a);
    let t_outer = (&(&source_out + &self_out) + &cross_out).scale(-2.0);
    Ok((t_jump, t_outer))
}

/// Damped Picard iteration of [`static_map`] with mean-zero projection, started from the linearized densities.
pub fn solve_densities(
    pair: &InterfacePair,
    lin: &Linearization,
    grads_inner: &GradComponents,
    grads_outer: &GradComponents,
    controls: &DensityControls,
) -> Result<BoundaryDensities> {
    let (mut jump, mut outer) = linearized_fields(pair, lin)?;
    let mut history = Vec::new();
    let mut increases = 0;
    for _ in 0..controls.max_iter {
        let (tj, to) = static_map(pair, lin.a, grads_inner, grads_outer, &jump, &outer)?;
        let (tj, to) = (tj.fluctuation(), to.fluctuation());
        let dj = &tj - &jump;
        let dout = &to - &outer;
        let res = dj.sup_norm().max(dout.sup_norm());
        if !res.is_finite() {
            return Err(Error::Diverged { solver: "densities", iterations: history.len(), residual: res, history });
        }
        if let Some(&last) = history.last() {
            if res > last {
                increases += 1;
                if increases >= 5 {
                    return Err(Error::NonContraction { sweeps: increases, factor: res / last });
                }
            } else {
                increases = 0;
            }
        }
        history.push(res);
        if res <= controls.tol {
            return Ok(BoundaryDensities { jump_prime: tj, outer_prime: to, history });
        }
        jump = &jump + &dj.scale(controls.damping);
        outer = &outer + &dout.scale(controls.damping);
    }
    Err(Error::NoConvergence {
        solver: "densities",
        iterations: controls.max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// R_{[φ]′} = [φ]′ − 2Ac_*f′ − ASφ′ and R_{φ′} = φ′ + 2c̃_*F′ − S[φ]′.
pub fn static_remainders(
    pair: &InterfacePair,
    lin: &Linearization,
    densities: &BoundaryDensities,
) -> Result<(PeriodicField, PeriodicField)> {
    let s = lin.ratio();
    let df = pair.inner_radius().derivative();
    let dbig = pair.outer_radius().derivative();
    let jump = &densities.jump_prime;
    let outer = &densities.outer_prime;
    let r_jump = &(jump - &df.scale(2.0 * lin.a * lin.c_star)) - &outer.poisson_smooth(s)?.scale(lin.a);
    let r_outer = &(outer + &dbig.scale(2.0 * lin.c_tilde_star)) - &jump.poisson_smooth(s)?;
    Ok((r_jump, r_outer))
}
