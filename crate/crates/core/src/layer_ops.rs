//! Boundary operators built from the Biot–Savart-type kernel (γ(θ) − γ(θ′))/|γ(θ) − γ(θ′)|².
//!
//! Self-interaction integrals are principal values and are evaluated on the half-shifted grid
//! ξ_m = 2π(m + ½)/N. Cross-interaction integrals have smooth kernels and use the plain trapezoid rule.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::InterfacePair;
use crate::kernels::poisson_pq;
use crate::spectral::PeriodicField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Inner,
    Outer,
}

impl Curve {
    /// (base radius, deviation) of the chosen curve.
    pub fn parts(self, pair: &InterfacePair) -> (f64, &PeriodicField) {
        match self {
            Curve::Inner => (pair.r, &pair.h),
            Curve::Outer => (pair.big_r, &pair.big_h),
        }
    }
}

/// γ′⊥·K_γψ and γ′·K_γψ at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularParts {
    pub normal: PeriodicField,
    pub tangent: PeriodicField,
}

/// Radial and tangential pairings f·e_r·K and f·e_θ·K (or F·e_r·K, F·e_θ·K).
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub radial: PeriodicField,
    pub tangential: PeriodicField,
}

impl Interaction {
    /// (γ′·K, γ′⊥·K) on the target curve with radius f, from the e_r and e_θ pairings.
    pub fn project(&self, f: &PeriodicField) -> (PeriodicField, PeriodicField) {
        let slope = f.derivative().zip_map(f, |d, v| d / v);
        let tangent = &(&slope * &self.radial) + &self.tangential;
        let normal = &(&slope * &self.tangential) - &self.radial;
        (tangent, normal)
    }
}

const SHIFT_GUARD: f64 = 1e-8;

fn check_len(pair: &InterfacePair, psi: &PeriodicField) -> Result<()> {
    if psi.len() != pair.n() {
        return Err(Error::GridMismatch { left: psi.len(), right: pair.n() });
    }
    Ok(())
}

fn shifted_xi(m: usize, n: usize) -> f64 {
    let x = 2.0 * PI * (m as f64 + 0.5) / n as f64;
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}

/// Both singular pairings from the l-decomposition, with l = (Δh)²/((1+h(θ))(1+h(θ+ξ))).
///
/// 2πγ′⊥·K_γψ = L₀ + L₁ + L₂ + L₃ and 2πγ′·K_γψ = L̃₁ + L̃₂ + L̃₃ + πHψ.
pub fn singular_parts(curve: Curve, pair: &InterfacePair, psi: &PeriodicField) -> Result<SingularParts> {
    check_len(pair, psi)?;
    let (_, h) = curve.parts(pair);
    let dh = h.derivative();
    if dh.sup_norm() >= 0.5 {
        return Err(Error::InvalidParameter { name: "deviation slope", value: dh.sup_norm(), expected: "sup |h'| < 0.5" });
    }
    let n = psi.len();
    let hs = h.half_shift();
    let ps = psi.half_shift();
    let (hv, dhv, hsv, psv) = (h.samples(), dh.samples(), hs.samples(), ps.samples());
    let dxi = 2.0 * PI / n as f64;
    let total = psi.integral();
    let l0 = -0.5 * total;
    let geo: Vec<(f64, f64, f64)> = (0..n)
        .map(|m| {
            let xi = shifted_xi(m, n);
            let s2 = 2.0 * (0.5 * xi).sin();
            assert!(s2.abs() > SHIFT_GUARD);
            (xi, s2, 0.5 / (0.5 * xi).tan())
        })
        .collect();
    let out: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let a = 1.0 + hv[j];
            let dh_j = dhv[j];
            let (mut l1, mut l23, mut lt1, mut lt2, mut lt3) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (m, &(_, s2, half_cot)) in geo.iter().enumerate() {
                let i = (j + m) % n;
                let b = 1.0 + hsv[i];
                let p = psv[i];
                let q = (b - a) / s2;
                let l = q * q / (a * b);
                let inv = 1.0 / (1.0 + l);
                let frac = l * inv;
                l1 -= 0.5 * frac * p;
                l23 += (q / s2 - dh_j * half_cot) * inv * p / a;
                lt1 += frac * p;
                lt2 -= dh_j / a * (q / s2) * inv * p / b;
                lt3 += frac * p * half_cot;
            }
            let normal = l0 + (l1 + l23) * dxi;
            let tangent = dh_j / (2.0 * a) * (total - lt1 * dxi) + (lt2 + lt3) * dxi;
            (normal / (2.0 * PI), tangent / (2.0 * PI))
        })
        .collect();
    let (normal, tangent): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    let hilbert = psi.hilbert();
    let tangent: Vec<f64> = tangent.iter().zip(hilbert.samples()).map(|(t, hp)| t + 0.5 * hp).collect();
    Ok(SingularParts { normal: PeriodicField::new(normal)?, tangent: PeriodicField::new(tangent)? })
}

/// γ′⊥·K_γψ.
pub fn singular_normal(curve: Curve, pair: &InterfacePair, psi: &PeriodicField) -> Result<PeriodicField> {
    Ok(singular_parts(curve, pair, psi)?.normal)
}

/// γ′·K_γψ.
pub fn singular_tangent(curve: Curve, pair: &InterfacePair, psi: &PeriodicField) -> Result<PeriodicField> {
    Ok(singular_parts(curve, pair, psi)?.tangent)
}

/// Shared trapezoid loop for the cross interactions.
/// `ratio(j, i)` gives the Poisson argument; radial uses 1 + sign·P.
fn interaction(n: usize, psi: &PeriodicField, sign: f64, ratio: impl Fn(usize, usize) -> f64 + Sync) -> Result<Interaction> {
    let pv = psi.samples();
    let dxi = 2.0 * PI / n as f64;
    let out: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut rad, mut tan) = (0.0, 0.0);
            for m in 0..n {
                let i = (j + m) % n;
                let xi = if 2 * m > n { (m as f64 - n as f64) * dxi } else { m as f64 * dxi };
                let (p, q) = poisson_pq(ratio(j, i), xi);
                rad += (1.0 + sign * p) * pv[i];
                tan -= q * pv[i];
            }
            (rad * dxi / (4.0 * PI), tan * dxi / (4.0 * PI))
        })
        .collect();
    let (radial, tangential): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    Ok(Interaction { radial: PeriodicField::new(radial)?, tangential: PeriodicField::new(tangential)? })
}

/// f·e_r·K_{γ,γ̃}ψ and f·e_θ·K_{γ,γ̃}ψ, with Poisson argument D = f(θ)/F(θ+ξ).
pub fn interaction_inner_from_outer(pair: &InterfacePair, psi: &PeriodicField) -> Result<Interaction> {
    check_len(pair, psi)?;
    let f = pair.inner_radius();
    let big_f = pair.outer_radius();
    let (fv, bv) = (f.samples(), big_f.samples());
    interaction(pair.n(), psi, -1.0, |j, i| fv[j] / bv[i])
}

/// F·e_r·K_{γ̃,γ}ψ and F·e_θ·K_{γ̃,γ}ψ, with Poisson argument s = f(θ+ξ)/F(θ).
pub fn interaction_outer_from_inner(pair: &InterfacePair, psi: &PeriodicField) -> Result<Interaction> {
    check_len(pair, psi)?;
    let f = pair.inner_radius();
    let big_f = pair.outer_radius();
    let (fv, bv) = (f.samples(), big_f.samples());
    interaction(pair.n(), psi, 1.0, |j, i| fv[i] / bv[j])
}

/// Off-curve double-layer value. `degraded` marks points within three node spacings of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffCurve {
    pub value: f64,
    pub degraded: bool,
    pub distance: f64,
}

/// D_γψ(x) = (1/2π)∫ (f e_r − f′e_θ)·(x − γ)/|x − γ|² ψ dθ′ by the trapezoid rule.
pub fn double_layer_offcurve(curve: Curve, pair: &InterfacePair, density: &PeriodicField, point: [f64; 2]) -> Result<OffCurve> {
    check_len(pair, density)?;
    let (base, h) = curve.parts(pair);
    let f = h.add_constant(1.0).scale(base);
    let df = f.derivative();
    let n = f.len();
    let spacing = 2.0 * PI * f.mean() / n as f64;
    let mut distance = f64::INFINITY;
    let mut acc = 0.0;
    for j in 0..n {
        let t = f.theta(j);
        let (s, c) = t.sin_cos();
        let (fj, dfj) = (f.samples()[j], df.samples()[j]);
        let d = [point[0] - fj * c, point[1] - fj * s];
        let r2 = d[0] * d[0] + d[1] * d[1];
        distance = distance.min(r2.sqrt());
        // f e_r − f′ e_θ
        let nv = [fj * c + dfj * s, fj * s - dfj * c];
        acc += (nv[0] * d[0] + nv[1] * d[1]) / r2 * density.samples()[j];
    }
    if distance <= spacing {
        return Err(Error::OnCurve { distance });
    }
    Ok(OffCurve { value: acc / n as f64, degraded: distance < 3.0 * spacing, distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn field(n: usize, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_fn(n, f).unwrap()
    }

    fn pair_with(n: usize, h: impl Fn(f64) -> f64, hh: impl Fn(f64) -> f64) -> InterfacePair {
        InterfacePair::with_default_delta(1.0, 1.5, field(n, h), field(n, hh)).unwrap()
    }

    /// Alternate-point Birkhoff–Rott sum (1/2π)Σ_{m−j odd}(γ_j−γ_m)/|γ_j−γ_m|² ψ_m 2Δθ, projected on γ′⊥ and γ′.
    fn birkhoff_rott(base: f64, h: &PeriodicField, psi: &PeriodicField) -> (Vec<f64>, Vec<f64>) {
        let n = h.len();
        let f = h.add_constant(1.0).scale(base);
        let df = f.derivative();
        let pt = |j: usize| {
            let t = f.theta(j);
            [f.samples()[j] * t.cos(), f.samples()[j] * t.sin()]
        };
        let mut normal = vec![0.0; n];
        let mut tangent = vec![0.0; n];
        for j in 0..n {
            let g = pt(j);
            let mut k = [0.0; 2];
            for m in (j + 1..j + n).step_by(2) {
                let mm = m % n;
                let q = pt(mm);
                let d = [g[0] - q[0], g[1] - q[1]];
                let r2 = d[0] * d[0] + d[1] * d[1];
                k[0] += d[0] / r2 * psi.samples()[mm];
                k[1] += d[1] / r2 * psi.samples()[mm];
            }
            let w = 2.0 * (2.0 * PI / n as f64) / (2.0 * PI);
            let t = f.theta(j);
            let (er, et) = ([t.cos(), t.sin()], [-t.sin(), t.cos()]);
            let (fj, dfj) = (f.samples()[j], df.samples()[j]);
            let tang = [dfj * er[0] + fj * et[0], dfj * er[1] + fj * et[1]];
            let perp = [dfj * et[0] - fj * er[0], dfj * et[1] - fj * er[1]];
            normal[j] = w * (perp[0] * k[0] + perp[1] * k[1]);
            tangent[j] = w * (tang[0] * k[0] + tang[1] * k[1]);
        }
        (normal, tangent)
    }

    /// Dense trapezoid of K_{γ,γ̃} projected on f e_r and f e_θ (or the outer analogue), on a refined grid.
    fn cross_oracle(
        target: (f64, &PeriodicField),
        source: (f64, &PeriodicField),
        psi: &PeriodicField,
        refine: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = psi.len();
        let nf = n * refine;
        let fs = source.1.resample(nf).unwrap().add_constant(1.0).scale(source.0);
        let ps = psi.resample(nf).unwrap();
        let ft = target.1.add_constant(1.0).scale(target.0);
        let mut rad = vec![0.0; n];
        let mut tan = vec![0.0; n];
        for j in 0..n {
            let t = ft.theta(j);
            let x = [ft.samples()[j] * t.cos(), ft.samples()[j] * t.sin()];
            let mut k = [0.0; 2];
            for m in 0..nf {
                let tm = fs.theta(m);
                let d = [x[0] - fs.samples()[m] * tm.cos(), x[1] - fs.samples()[m] * tm.sin()];
                let r2 = d[0] * d[0] + d[1] * d[1];
                k[0] += d[0] / r2 * ps.samples()[m];
                k[1] += d[1] / r2 * ps.samples()[m];
            }
            let w = ft.samples()[j] / nf as f64;
            rad[j] = w * (k[0] * t.cos() + k[1] * t.sin());
            tan[j] = w * (-k[0] * t.sin() + k[1] * t.cos());
        }
        (rad, tan)
    }

    #[test]
    fn circle_reduces_to_multipliers() {
        let n = 256;
        let pair = InterfacePair::concentric(1.0, 1.5, n).unwrap();
        let psi = field(n, |t| 0.3 + (2.0 * t).cos() - 0.7 * (5.0 * t).sin());
        for curve in [Curve::Inner, Curve::Outer] {
            let s = singular_parts(curve, &pair, &psi).unwrap();
            let half_h = psi.hilbert().scale(0.5);
            for j in 0..n {
                assert_abs_diff_eq!(s.normal.samples()[j], -0.5 * psi.mean(), epsilon = 1e-12);
                assert_abs_diff_eq!(s.tangent.samples()[j], half_h.samples()[j], epsilon = 1e-12);
            }
        }
        let ones = PeriodicField::constant(n, 1.0).unwrap();
        let s = singular_parts(Curve::Inner, &pair, &ones).unwrap();
        assert!(s.normal.samples().iter().all(|v| (v + 0.5).abs() < 1e-14));
        assert!(s.tangent.sup_norm() < 1e-14);
    }

    #[test]
    fn singular_parts_match_birkhoff_rott() {
        let n = 512;
        let pair = pair_with(n, |t| 0.05 * (2.0 * t).cos(), |t| 0.03 * (3.0 * t).sin());
        for (curve, base, h) in [(Curve::Inner, pair.r, &pair.h), (Curve::Outer, pair.big_r, &pair.big_h)] {
            for psi in [field(n, |t| t.cos()), field(n, |t| t.sin()), field(n, |t| (t.cos()).exp())] {
                let s = singular_parts(curve, &pair, &psi).unwrap();
                let (normal, tangent) = birkhoff_rott(base, h, &psi);
                for j in 0..n {
                    assert_abs_diff_eq!(s.normal.samples()[j], normal[j], epsilon = 1e-7);
                    assert_abs_diff_eq!(s.tangent.samples()[j], tangent[j], epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn tangent_has_zero_mean() {
        let n = 128;
        let pair = pair_with(n, |t| 0.04 * (3.0 * t).cos() + 0.01 * t.sin(), |t| 0.02 * (2.0 * t).sin());
        let psi = field(n, |t| (2.0 * t.sin()).exp());
        for curve in [Curve::Inner, Curve::Outer] {
            assert!(singular_tangent(curve, &pair, &psi).unwrap().mean().abs() < 1e-10);
        }
    }

    #[test]
    fn steep_deviation_is_rejected() {
        let n = 256;
        let h = field(n, |t| 0.005 * (120.0 * t).cos());
        let pair = InterfacePair::with_default_delta(1.0, 1.5, h, PeriodicField::zeros(n).unwrap()).unwrap();
        let psi = PeriodicField::constant(n, 1.0).unwrap();
        assert!(singular_normal(Curve::Inner, &pair, &psi).is_err());
        assert!(singular_normal(Curve::Outer, &pair, &psi).is_ok());
    }

    #[test]
    fn interactions_on_circles() {
        let n = 256;
        let (r, big_r) = (1.0, 1.5);
        let s = r / big_r;
        let pair = InterfacePair::concentric(r, big_r, n).unwrap();
        for k in 1..6 {
            let psi = field(n, |t| (k as f64 * t).cos());
            let a = interaction_inner_from_outer(&pair, &psi).unwrap();
            let b = interaction_outer_from_inner(&pair, &psi).unwrap();
            let sk = s.powi(k);
            for j in 0..n {
                let t = psi.theta(j);
                let (c, sn) = ((k as f64 * t).cos(), (k as f64 * t).sin());
                assert_abs_diff_eq!(a.radial.samples()[j], -0.5 * sk * c, epsilon = 1e-12);
                assert_abs_diff_eq!(a.tangential.samples()[j], 0.5 * sk * sn, epsilon = 1e-12);
                assert_abs_diff_eq!(b.radial.samples()[j], 0.5 * sk * c, epsilon = 1e-12);
                assert_abs_diff_eq!(b.tangential.samples()[j], 0.5 * sk * sn, epsilon = 1e-12);
            }
        }
        let ones = PeriodicField::constant(n, 1.0).unwrap();
        let a = interaction_inner_from_outer(&pair, &ones).unwrap();
        let b = interaction_outer_from_inner(&pair, &ones).unwrap();
        assert!(a.radial.sup_norm() < 1e-14 && a.tangential.sup_norm() < 1e-14);
        assert!(b.radial.samples().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(b.tangential.sup_norm() < 1e-14);
    }

    #[test]
    fn interactions_match_dense_kernel() {
        let n = 128;
        let pair = pair_with(n, |t| 0.01 * (2.0 * t).cos(), |t| 0.008 * (3.0 * t).cos() + 0.004 * t.sin());
        let psi = field(n, |t| (t.sin()).exp() - 1.0);
        let a = interaction_inner_from_outer(&pair, &psi).unwrap();
        let b = interaction_outer_from_inner(&pair, &psi).unwrap();
        let (ra, ta) = cross_oracle((pair.r, &pair.h), (pair.big_r, &pair.big_h), &psi, 4);
        let (rb, tb) = cross_oracle((pair.big_r, &pair.big_h), (pair.r, &pair.h), &psi, 4);
        for j in 0..n {
            assert_abs_diff_eq!(a.radial.samples()[j], ra[j], epsilon = 1e-9);
            assert_abs_diff_eq!(a.tangential.samples()[j], ta[j], epsilon = 1e-9);
            assert_abs_diff_eq!(b.radial.samples()[j], rb[j], epsilon = 1e-9);
            assert_abs_diff_eq!(b.tangential.samples()[j], tb[j], epsilon = 1e-9);
        }
        assert!(a.project(&pair.inner_radius()).0.mean().abs() < 1e-12);
        assert!(b.project(&pair.outer_radius()).0.mean().abs() < 1e-12);
    }

    #[test]
    fn double_layer_of_unit_density() {
        let n = 256;
        let pair = InterfacePair::concentric(1.0, 1.5, n).unwrap();
        let ones = PeriodicField::constant(n, 1.0).unwrap();
        for p in [[0.0, 0.0], [0.3, -0.4], [0.0, 0.9]] {
            let v = double_layer_offcurve(Curve::Inner, &pair, &ones, p).unwrap();
            assert_abs_diff_eq!(v.value, -1.0, epsilon = 1e-10);
            assert!(!v.degraded);
        }
        for p in [[1.2, 0.0], [-2.0, 3.0]] {
            let v = double_layer_offcurve(Curve::Inner, &pair, &ones, p).unwrap();
            assert_abs_diff_eq!(v.value, 0.0, epsilon = 1e-12);
        }
        let cosine = field(n, |t| t.cos());
        let v = double_layer_offcurve(Curve::Inner, &pair, &cosine, [0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v.value, 0.0, epsilon = 1e-14);
        assert!(matches!(double_layer_offcurve(Curve::Inner, &pair, &ones, [1.0, 0.0]), Err(Error::OnCurve { .. })));
        let near = double_layer_offcurve(Curve::Inner, &pair, &ones, [1.0 - 0.05, 0.0]).unwrap();
        assert!(near.degraded);
        assert_abs_diff_eq!(near.distance, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn double_layer_jumps_by_the_density() {
        let n = 1024;
        let pair = pair_with(n, |t| 0.02 * (2.0 * t).cos(), |_| 0.0);
        let psi = field(n, |t| 1.0 + 0.5 * (t.sin()).exp());
        let j0 = 100;
        let t0 = psi.theta(j0);
        let f0 = 1.0 + pair.h.samples()[j0];
        let d = 0.06;
        let inside = double_layer_offcurve(Curve::Inner, &pair, &psi, [(f0 - d) * t0.cos(), (f0 - d) * t0.sin()]).unwrap();
        let outside = double_layer_offcurve(Curve::Inner, &pair, &psi, [(f0 + d) * t0.cos(), (f0 + d) * t0.sin()]).unwrap();
        assert_abs_diff_eq!(inside.value - outside.value, -psi.samples()[j0], epsilon = 0.05);
    }
}
