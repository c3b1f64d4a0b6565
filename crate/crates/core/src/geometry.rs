//! Nested interfaces f = r(1+h), F = R(1+H), the cutoff reference map X ↦ ζ(X)X, and kernel arguments.

use crate::error::{check_range, Error, Result};
use crate::spectral::PeriodicField;

/// Relative slack when checking the admissible band for δ.
const BAND_SLACK: f64 = 1e-12;

/// Quintic smoothstep S(t) = 6t⁵ − 15t⁴ + 10t³ with its first two derivatives.
#[inline]
fn smoothstep(t: f64) -> (f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (t3 * (10.0 + t * (-15.0 + 6.0 * t)), 30.0 * t2 * (1.0 - t) * (1.0 - t), 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t))
}

/// C² bump equal to 1 on [1−δ, 1+δ] and supported on [1−2δ, 1+2δ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub delta: f64,
}

impl Cutoff {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    /// (η, η′, η″) at u.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        let d = self.delta;
        if u <= 1.0 - 2.0 * d || u >= 1.0 + 2.0 * d {
            (0.0, 0.0, 0.0)
        } else if u < 1.0 - d {
            let (s, s1, s2) = smoothstep((u - (1.0 - 2.0 * d)) / d);
            (s, s1 / d, s2 / (d * d))
        } else if u <= 1.0 + d {
            (1.0, 0.0, 0.0)
        } else {
            let (s, s1, s2) = smoothstep((1.0 + 2.0 * d - u) / d);
            (s, -s1 / d, s2 / (d * d))
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfacePair {
    pub r: f64,
    pub big_r: f64,
    pub delta: f64,
    pub h: PeriodicField,
    pub big_h: PeriodicField,
}

/// The admissible interval for δ at radii (r, R).
pub fn delta_band(r: f64, big_r: f64) -> (f64, f64) {
    let gap = (big_r - r) / big_r;
    (gap / 100.0, gap / 10.0)
}

pub fn default_delta(r: f64, big_r: f64) -> f64 {
    (big_r - r) / (20.0 * big_r)
}

impl InterfacePair {
    /// Validates radii, grid sizes, and the δ band. Smallness and nesting are checked by [`Self::check_regime`].
    pub fn new(r: f64, big_r: f64, delta: f64, h: PeriodicField, big_h: PeriodicField) -> Result<Self> {
        check_range("r", r, r > 0.0, "r > 0")?;
        check_range("R", big_r, big_r > r, "R > r")?;
        if h.len() != big_h.len() {
            return Err(Error::GridMismatch { left: h.len(), right: big_h.len() });
        }
        let (lower, upper) = delta_band(r, big_r);
        if !(delta >= lower * (1.0 - BAND_SLACK) && delta <= upper * (1.0 + BAND_SLACK)) {
            return Err(Error::DeltaOutOfBand { delta, lower, upper });
        }
        Ok(Self { r, big_r, delta, h, big_h })
    }

    pub fn with_default_delta(r: f64, big_r: f64, h: PeriodicField, big_h: PeriodicField) -> Result<Self> {
        Self::new(r, big_r, default_delta(r, big_r), h, big_h)
    }

    pub fn concentric(r: f64, big_r: f64, n: usize) -> Result<Self> {
        Self::with_default_delta(r, big_r, PeriodicField::zeros(n)?, PeriodicField::zeros(n)?)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// f = r(1+h).
    pub fn inner_radius(&self) -> PeriodicField {
        self.h.map(|x| self.r * (1.0 + x))
    }

    /// F = R(1+H).
    pub fn outer_radius(&self) -> PeriodicField {
        self.big_h.map(|x| self.big_r * (1.0 + x))
    }

    pub fn cutoff(&self) -> Cutoff {
        Cutoff::new(self.delta)
    }

    /// Errors when δ⁻¹(‖h‖∞ + ‖H‖∞) ≥ 1 or the interfaces touch.
    pub fn check_regime(&self) -> Result<()> {
        let ratio = (self.h.sup_norm() + self.big_h.sup_norm()) / self.delta;
        if ratio >= 1.0 {
            return Err(Error::SmallnessViolated { ratio });
        }
        let margin = collision_check(self);
        if margin <= 0.0 {
            return Err(Error::Collision { margin });
        }
        Ok(())
    }

    /// Annulus area π·mean(F² − f²).
    pub fn annulus_area(&self) -> f64 {
        let f = self.inner_radius();
        let big_f = self.outer_radius();
        std::f64::consts::PI * big_f.zip_map(&f, |a, b| a * a - b * b).mean()
    }
}

/// Sup-norm data (m₀, M₀) = (δ⁻¹‖h‖∞ + ‖h′‖∞, δ⁻¹‖H‖∞ + ‖H′‖∞).
pub fn smallness_norms(pair: &InterfacePair) -> (f64, f64) {
    let m = |g: &PeriodicField| g.sup_norm() / pair.delta + g.derivative().sup_norm();
    (m(&pair.h), m(&pair.big_h))
}

/// min F − max f.
pub fn collision_check(pair: &InterfacePair) -> f64 {
    pair.outer_radius().min() - pair.inner_radius().max()
}

/// True when the mean of h or H has drifted by more than δ/10.
pub fn needs_rereference(pair: &InterfacePair) -> bool {
    let tol = 0.1 * pair.delta;
    pair.h.mean().abs() > tol || pair.big_h.mean().abs() > tol
}

/// Moves the interface means into (r, R) and rescales δ with the relative gap.
pub fn rereference(pair: &InterfacePair) -> Result<InterfacePair> {
    let f = pair.inner_radius();
    let big_f = pair.outer_radius();
    let r1 = f.mean();
    let big_r1 = big_f.mean();
    let delta1 = (1.0 - r1 / big_r1) / (1.0 - pair.r / pair.big_r) * pair.delta;
    let h1 = f.map(|x| x / r1 - 1.0);
    let big_h1 = big_f.map(|x| x / big_r1 - 1.0);
    InterfacePair::new(r1, big_r1, delta1, h1, big_h1)
}

/// ζ, ∇ζ along (e_r, e_θ), and ρ∂_ρζ at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEval {
    pub zeta: f64,
    pub grad_zeta: [f64; 2],
    pub rho_dzeta: f64,
    pub dzeta_domega: f64,
}

/// Angular data of h and H at a set of angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSample {
    pub h: f64,
    pub dh: f64,
    pub big_h: f64,
    pub big_dh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    pub pair: InterfacePair,
    pub eta: Cutoff,
    dh: PeriodicField,
    big_dh: PeriodicField,
}

impl ReferenceMap {
    pub fn new(pair: InterfacePair) -> Self {
        let eta = pair.cutoff();
        let dh = pair.h.derivative();
        let big_dh = pair.big_h.derivative();
        Self { pair, eta, dh, big_dh }
    }

    pub fn angular(&self, omega: f64) -> AngularSample {
        AngularSample {
            h: self.pair.h.evaluate(omega),
            dh: self.dh.evaluate(omega),
            big_h: self.pair.big_h.evaluate(omega),
            big_dh: self.big_dh.evaluate(omega),
        }
    }

    /// Angular data on an `n`-node grid by trigonometric interpolation.
    pub fn angular_grid(&self, n: usize) -> Result<Vec<AngularSample>> {
        let h = self.pair.h.resample(n)?;
        let dh = self.dh.resample(n)?;
        let big_h = self.pair.big_h.resample(n)?;
        let big_dh = self.big_dh.resample(n)?;
        Ok((0..n)
            .map(|j| AngularSample { h: h.samples()[j], dh: dh.samples()[j], big_h: big_h.samples()[j], big_dh: big_dh.samples()[j] })
            .collect())
    }

    /// Map data at radius ρ given the angular data at ω.
    pub fn eval_with(&self, a: &AngularSample, rho: f64) -> MapEval {
        let (r, big_r) = (self.pair.r, self.pair.big_r);
        let (ei, ei1, _) = self.eta.eval(rho / r);
        let (eo, eo1, _) = self.eta.eval(rho / big_r);
        let zeta = 1.0 + a.h * ei + a.big_h * eo;
        let dzeta_drho = a.h * ei1 / r + a.big_h * eo1 / big_r;
        let dzeta_domega = a.dh * ei + a.big_dh * eo;
        let tangential = if rho > 0.0 { dzeta_domega / rho } else { 0.0 };
        MapEval { zeta, grad_zeta: [dzeta_drho, tangential], rho_dzeta: rho * dzeta_drho, dzeta_domega }
    }

    pub fn eval_map(&self, rho: f64, omega: f64) -> MapEval {
        self.eval_with(&self.angular(omega), rho)
    }

    /// Cartesian ∂x/∂X = ζ Id + X ⊗ ∇ζ.
    pub fn jacobian(&self, rho: f64, omega: f64) -> [[f64; 2]; 2] {
        let m = self.eval_map(rho, omega);
        let x = [rho * omega.cos(), rho * omega.sin()];
        let g = cartesian_gradient(&m, omega);
        [[m.zeta + x[0] * g[0], x[0] * g[1]], [x[1] * g[0], m.zeta + x[1] * g[1]]]
    }

    /// Cartesian ∂X/∂x = ζ⁻¹ Id − (ζ² + ζρ∂_ρζ)⁻¹ X ⊗ ∇ζ.
    pub fn jacobian_inverse(&self, rho: f64, omega: f64) -> Result<[[f64; 2]; 2]> {
        let m = self.eval_map(rho, omega);
        let det_like = m.zeta * m.zeta + m.zeta * m.rho_dzeta;
        if det_like <= 0.1 {
            return Err(Error::DegenerateMap { rho, omega, value: det_like });
        }
        let x = [rho * omega.cos(), rho * omega.sin()];
        let g = cartesian_gradient(&m, omega);
        let a = 1.0 / m.zeta;
        let b = 1.0 / det_like;
        Ok([[a - b * x[0] * g[0], -b * x[0] * g[1]], [-b * x[1] * g[0], a - b * x[1] * g[1]]])
    }
}

fn cartesian_gradient(m: &MapEval, omega: f64) -> [f64; 2] {
    let (s, c) = omega.sin_cos();
    let [gr, gt] = m.grad_zeta;
    [gr * c - gt * s, gr * s + gt * c]
}

/// Kernel arguments (b̃, B̃, b, B) for reference radius w at target angle θ and offset ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelArgs {
    pub b_tilde: f64,
    pub big_b_tilde: f64,
    pub b: f64,
    pub big_b: f64,
}

/// Same as [`kernel_args`] but with h(θ), h(θ+ξ), H(θ) supplied directly.
#[inline]
pub fn kernel_args_with(eta: &Cutoff, ratio: f64, w: f64, h_theta: f64, h_shift: f64, big_h_theta: f64) -> KernelArgs {
    let e = eta.value(w);
    let y_shift = w * (1.0 + h_shift * e);
    let y_here = w * (1.0 + h_theta * e);
    KernelArgs {
        b_tilde: y_shift / (1.0 + h_theta),
        big_b_tilde: ratio * y_shift / (1.0 + big_h_theta),
        b: y_here / (1.0 + h_theta),
        big_b: ratio * y_here / (1.0 + big_h_theta),
    }
}

pub fn kernel_args(pair: &InterfacePair, w: f64, theta: f64, xi: f64) -> KernelArgs {
    kernel_args_with(
        &pair.cutoff(),
        pair.r / pair.big_r,
        w,
        pair.h.evaluate(theta),
        pair.h.evaluate(theta + xi),
        pair.big_h.evaluate(theta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_mode(n: usize, eps: f64, k: f64) -> PeriodicField {
        PeriodicField::from_fn(n, |t| eps * (k * t).cos()).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(0.05);
        assert_eq!(c.value(0.89), 0.0);
        assert_eq!(c.value(0.95), 1.0);
        assert_eq!(c.value(1.04), 1.0);
        assert_eq!(c.value(1.11), 0.0);
        assert_abs_diff_eq!(c.value(0.925), 0.5, epsilon = 1e-14);
        // δ|η′| + δ²|η″| ≤ 40 everywhere
        let worst = (0..=4000)
            .map(|i| {
                let (_, d1, d2) = c.eval(0.85 + 0.3 * i as f64 / 4000.0);
                c.delta * d1.abs() + c.delta * c.delta * d2.abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 40.0 && worst > 1.0);
    }

    #[test]
    fn cutoff_derivative_matches_differences() {
        let c = Cutoff::new(0.05);
        let e = 1e-7;
        for &u in &[0.91, 0.93, 0.948, 1.06, 1.08] {
            let (_, d1, d2) = c.eval(u);
            assert_abs_diff_eq!(d1, (c.value(u + e) - c.value(u - e)) / (2.0 * e), epsilon = 1e-5);
            let e2 = 1e-4;
            let fd2 = (c.eval(u + e2).1 - c.eval(u - e2).1) / (2.0 * e2);
            assert_abs_diff_eq!(d2, fd2, epsilon = 1e-3 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn band_is_enforced() {
        let z = PeriodicField::zeros(16).unwrap();
        assert!(InterfacePair::new(1.0, 2.0, 0.001, z.clone(), z.clone()).is_err());
        assert!(InterfacePair::new(1.0, 2.0, 0.06, z.clone(), z.clone()).is_err());
        assert!(InterfacePair::new(1.0, 2.0, 0.025, z.clone(), z.clone()).is_ok());
        assert!(InterfacePair::new(2.0, 1.0, 0.025, z.clone(), z).is_err());
    }

    #[test]
    fn identity_map() {
        let map = ReferenceMap::new(InterfacePair::concentric(1.0, 2.0, 16).unwrap());
        let m = map.eval_map(1.0, 0.3);
        assert_eq!(m.zeta, 1.0);
        assert_eq!(m.grad_zeta, [0.0, 0.0]);
        let inv = map.jacobian_inverse(0.7, 1.1).unwrap();
        assert_eq!(inv, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn map_on_inner_circle() {
        let eps = 1e-3;
        let pair = InterfacePair::with_default_delta(1.0, 2.0, one_mode(32, eps, 1.0), PeriodicField::zeros(32).unwrap()).unwrap();
        let map = ReferenceMap::new(pair);
        let w = 0.8;
        let m = map.eval_map(1.0, w);
        assert_abs_diff_eq!(m.zeta, 1.0 + eps * w.cos(), epsilon = 1e-14);
        assert_eq!(m.rho_dzeta, 0.0);
        // outside both cutoff annuli
        let far = map.eval_map(0.5, w);
        assert_eq!(far.zeta, 1.0);
    }

    #[test]
    fn inverse_times_forward_is_identity() {
        let pair = InterfacePair::with_default_delta(
            1.0,
            2.0,
            one_mode(32, 0.004, 3.0),
            PeriodicField::from_fn(32, |t| 0.003 * (2.0 * t).sin()).unwrap(),
        )
        .unwrap();
        let map = ReferenceMap::new(pair);
        for &(rho, om) in &[(0.97, 0.4), (1.0, 2.0), (1.96, 5.1), (2.03, 1.0)] {
            let a = map.jacobian(rho, om);
            let b = map.jacobian_inverse(rho, om).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let p = b[i][0] * a[0][j] + b[i][1] * a[1][j];
                    assert_abs_diff_eq!(p, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn kernel_args_reduce_on_circles() {
        let pair = InterfacePair::concentric(1.0, 2.0, 16).unwrap();
        let a = kernel_args(&pair, 0.6, 0.2, 0.9);
        assert_eq!(a.b_tilde, 0.6);
        assert_eq!(a.b, 0.6);
        assert_abs_diff_eq!(a.big_b_tilde, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(a.big_b, 0.3, epsilon = 1e-15);
        let p2 = InterfacePair::with_default_delta(1.0, 2.0, one_mode(16, 0.01, 2.0), PeriodicField::zeros(16).unwrap()).unwrap();
        let a = kernel_args(&p2, 0.99, 0.2, 0.0);
        assert_abs_diff_eq!(a.b_tilde, a.b, epsilon = 1e-15);
        assert_abs_diff_eq!(a.big_b_tilde, a.big_b, epsilon = 1e-15);
    }

    #[test]
    fn smallness_norms_one_mode() {
        let z = PeriodicField::zeros(32).unwrap();
        let pair = InterfacePair::with_default_delta(1.0, 2.0, z.clone(), z.clone()).unwrap();
        assert_eq!(smallness_norms(&pair), (0.0, 0.0));
        let eps = 1e-3;
        let p = InterfacePair::with_default_delta(1.0, 2.0, one_mode(32, eps, 1.0), z.clone()).unwrap();
        let (m0, big_m0) = smallness_norms(&p);
        assert_abs_diff_eq!(m0, eps / p.delta + eps, epsilon = 1e-12);
        assert_eq!(big_m0, 0.0);
        let p2 = InterfacePair::with_default_delta(1.0, 2.0, one_mode(32, 2.0 * eps, 1.0), z).unwrap();
        assert_abs_diff_eq!(smallness_norms(&p2).0, 2.0 * m0, epsilon = 1e-12);
    }

    #[test]
    fn rereference_cases() {
        let z = PeriodicField::zeros(32).unwrap();
        let p = InterfacePair::with_default_delta(1.0, 2.0, one_mode(32, 1e-3, 2.0), z.clone()).unwrap();
        let q = rereference(&p).unwrap();
        assert_abs_diff_eq!(q.r, p.r, epsilon = 1e-15);
        assert!((&q.h - &p.h).sup_norm() < 1e-15);

        let c = InterfacePair::with_default_delta(1.0, 2.0, PeriodicField::constant(32, 0.01).unwrap(), z).unwrap();
        let q = rereference(&c).unwrap();
        assert_abs_diff_eq!(q.r, 1.01, epsilon = 1e-14);
        assert!(q.h.sup_norm() < 1e-14);
    }

    #[test]
    fn collision_margin() {
        let z = PeriodicField::zeros(16).unwrap();
        let p = InterfacePair::concentric(1.0, 2.0, 16).unwrap();
        assert_abs_diff_eq!(collision_check(&p), 1.0, epsilon = 1e-15);
        let half = InterfacePair::with_default_delta(1.0, 2.0, PeriodicField::constant(16, 0.5).unwrap(), z.clone()).unwrap();
        assert_abs_diff_eq!(collision_check(&half), 0.5, epsilon = 1e-15);
        let crossed = InterfacePair::with_default_delta(1.0, 2.0, one_mode(16, 1.2, 1.0), z).unwrap();
        assert!(collision_check(&crossed) < 0.0);
        assert!(matches!(crossed.check_regime(), Err(Error::SmallnessViolated { .. })));
    }
}
