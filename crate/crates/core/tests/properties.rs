use std::f64::consts::PI;

use contour_core::densities::{linearized_densities, solve_densities, static_map, DensityControls, Linearization};
use contour_core::evolution::{dispersion_matrix, eigenvalues, inner_eigenvalue};
use contour_core::geometry::rereference;
use contour_core::growth_potential::{grad_inner, grad_outer, GradComponents, QuadSpec, SourceGrid};
use contour_core::kernels::{eval_poisson, eval_poisson_derivs};
use contour_core::layer_ops::{interaction_inner_from_outer, interaction_outer_from_inner, singular_normal, singular_tangent, Curve};
use contour_core::{InterfacePair, KernelPoint, PeriodicField};
use num_complex::Complex64;
use proptest::prelude::*;

/// Trig polynomial Σ a_k cos(kθ + φ_k), k = 1..=len.
fn trig(n: usize, amps: &[f64], phases: &[f64]) -> PeriodicField {
    PeriodicField::from_fn(n, |t| amps.iter().zip(phases).enumerate().map(|(i, (a, p))| a * ((i + 1) as f64 * t + p).cos()).sum()).unwrap()
}

fn amps(len: usize, size: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-size..size, len)
}

fn phases(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2.0 * PI, len)
}

fn small_pair(n: usize, ah: &[f64], ph: &[f64], ab: &[f64], pb: &[f64]) -> InterfacePair {
    InterfacePair::with_default_delta(1.0, 1.5, trig(n, ah, ph), trig(n, ab, pb)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hilbert_squares_to_minus_fluctuation(a in amps(6, 1.0), p in phases(6), c in -1.0..1.0f64) {
        let f = trig(64, &a, &p).add_constant(c);
        let hh = f.hilbert().hilbert();
        let want = f.fluctuation().scale(-1.0);
        prop_assert!((&hh - &want).sup_norm() < 1e-12);
        let lhs = f.frac_laplacian_half();
        let rhs = f.derivative().hilbert();
        prop_assert!((&lhs - &rhs).sup_norm() < 1e-11);
    }

    #[test]
    fn poisson_smoothing_is_a_semigroup(a in amps(8, 1.0), p in phases(8), s1 in 0.05..0.95f64, s2 in 0.05..0.95f64) {
        let f = trig(64, &a, &p);
        let two = f.poisson_smooth(s1).unwrap().poisson_smooth(s2).unwrap();
        let one = f.poisson_smooth(s1 * s2).unwrap();
        prop_assert!((&two - &one).sup_norm() < 1e-12);
    }

    #[test]
    fn two_half_shifts_are_one_node(a in amps(5, 1.0), p in phases(5)) {
        let n = 32;
        let f = trig(n, &a, &p);
        let g = f.half_shift().half_shift();
        for j in 0..n {
            prop_assert!((g.samples()[j] - f.samples()[(j + 1) % n]).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_kernel_identities(s in 0.01..0.99f64, xi in -PI..PI) {
        let pt = KernelPoint::new(s, xi);
        let (p, _) = eval_poisson(pt).unwrap();
        prop_assert!(p > 0.0);
        let d = eval_poisson_derivs(pt).unwrap();
        let size = 1.0f64.max(d.dq_dxi.abs());
        prop_assert!((d.dq_dxi - s * d.dp_ds).abs() / size < 1e-12);
        prop_assert!((d.dp_dxi + s * d.dq_ds).abs() / size < 1e-12);
    }

    #[test]
    fn layer_operators_are_linear(
        ah in amps(3, 2e-3), ph in phases(3), ab in amps(3, 2e-3), pb in phases(3),
        x in amps(5, 1.0), px in phases(5), y in amps(5, 1.0), py in phases(5),
        alpha in -2.0..2.0f64, beta in -2.0..2.0f64,
    ) {
        let n = 64;
        let pair = small_pair(n, &ah, &ph, &ab, &pb);
        let (u, v) = (trig(n, &x, &px), trig(n, &y, &py));
        let w = &u.scale(alpha) + &v.scale(beta);
        for curve in [Curve::Inner, Curve::Outer] {
            let lhs = singular_normal(curve, &pair, &w).unwrap();
            let rhs = &singular_normal(curve, &pair, &u).unwrap().scale(alpha) + &singular_normal(curve, &pair, &v).unwrap().scale(beta);
            prop_assert!((&lhs - &rhs).sup_norm() < 1e-11);
            let lhs = singular_tangent(curve, &pair, &w).unwrap();
            let rhs = &singular_tangent(curve, &pair, &u).unwrap().scale(alpha) + &singular_tangent(curve, &pair, &v).unwrap().scale(beta);
            prop_assert!((&lhs - &rhs).sup_norm() < 1e-11);
        }
        let i = |p: &PeriodicField| interaction_inner_from_outer(&pair, p).unwrap().radial;
        prop_assert!((&i(&w) - &(&i(&u).scale(alpha) + &i(&v).scale(beta))).sup_norm() < 1e-11);
    }

    #[test]
    fn tangent_projections_have_zero_mean(
        ah in amps(4, 3e-3), ph in phases(4), ab in amps(4, 3e-3), pb in phases(4),
        x in amps(6, 1.0), px in phases(6),
    ) {
        let n = 64;
        let pair = small_pair(n, &ah, &ph, &ab, &pb);
        let psi = trig(n, &x, &px);
        for curve in [Curve::Inner, Curve::Outer] {
            prop_assert!(singular_tangent(curve, &pair, &psi).unwrap().mean().abs() < 1e-12);
        }
        let (t_in, _) = interaction_inner_from_outer(&pair, &psi).unwrap().project(&pair.inner_radius());
        let (t_out, _) = interaction_outer_from_inner(&pair, &psi).unwrap().project(&pair.outer_radius());
        prop_assert!(t_in.mean().abs() < 1e-11, "inner {:e}", t_in.mean());
        prop_assert!(t_out.mean().abs() < 1e-11, "outer {:e}", t_out.mean());
    }

    #[test]
    fn rereference_preserves_curves_and_area(ah in amps(3, 3e-3), ph in phases(3), ab in amps(3, 3e-3), pb in phases(3), m in -2e-3..2e-3f64) {
        let n = 64;
        let h = trig(n, &ah, &ph).add_constant(m);
        let pair = InterfacePair::with_default_delta(1.0, 1.5, h, trig(n, &ab, &pb)).unwrap();
        let next = rereference(&pair).unwrap();
        prop_assert!((&next.inner_radius() - &pair.inner_radius()).sup_norm() < 1e-14);
        prop_assert!((&next.outer_radius() - &pair.outer_radius()).sup_norm() < 1e-14);
        prop_assert!(next.h.mean().abs() < 1e-15 && next.big_h.mean().abs() < 1e-15);
        prop_assert!((next.annulus_area() - pair.annulus_area()).abs() < 1e-13);
    }

    #[test]
    fn linearized_densities_are_linear(k in 1i64..20, fr in -1.0..1.0f64, fi in -1.0..1.0f64, br in -1.0..1.0f64, bi in -1.0..1.0f64) {
        let lin = Linearization::new(1.0, 2.0, -0.4, 1.0, 1.5);
        let (f, big) = (Complex64::new(fr, fi), Complex64::new(br, bi));
        let (x, y) = linearized_densities(k, &lin, f, big);
        let (x1, y1) = linearized_densities(k, &lin, f, Complex64::new(0.0, 0.0));
        let (x2, y2) = linearized_densities(k, &lin, Complex64::new(0.0, 0.0), big);
        prop_assert!((x - x1 - x2).norm() < 1e-14 && (y - y1 - y2).norm() < 1e-14);
        // the closed form satisfies its own 2×2 system
        let s = lin.ratio().powi(k as i32);
        let ik = Complex64::new(0.0, k as f64);
        prop_assert!((x - (2.0 * lin.a * lin.c_star * ik * f + lin.a * s * y)).norm() < 1e-13);
        prop_assert!((y - (-2.0 * lin.c_tilde_star * ik * big + s * x)).norm() < 1e-13);
    }

    #[test]
    fn stable_when_inner_phase_is_less_mobile(
        mu in 0.2..5.0f64, ratio in 1.05..5.0f64, r in 0.5..2.0f64, gap in 0.1..1.0f64, c in 0.05..2.0f64, k in 1u32..40,
    ) {
        let nu = mu * ratio;
        let a = (mu - nu) / (mu + nu);
        let m = dispersion_matrix(k, a, -c, r, r * (1.0 + gap));
        for ev in eigenvalues(&m) {
            prop_assert!(ev.re < 0.0);
        }
        let flipped = dispersion_matrix(k, -a, -c, r, r * (1.0 + gap));
        prop_assert!(inner_eigenvalue(&flipped).re > 0.0);
    }
}

#[test]
fn dispersion_diagonal_decouples_at_high_k() {
    let (a, c, r, big_r) = (-1.0 / 3.0, -0.41, 1.0, 1.5);
    let k = 200;
    let m = dispersion_matrix(k, a, c, r, big_r);
    let kf = k as f64;
    assert!((m[0][0] - (-a * c * kf / r)).abs() < 1e-12 * kf);
    assert!((m[1][1] - (r / big_r * c * kf / big_r)).abs() < 1e-12 * kf);
    assert!(m[0][1].abs() < 1e-20 && m[1][0].abs() < 1e-20);
}

#[test]
fn growth_potential_is_linear_in_the_source() {
    let n = 64;
    let pair = small_pair(n, &[0.0, 2e-3], &[0.0, 0.3], &[1e-3], &[1.0]);
    let quad = QuadSpec { n_w: 64, n_xi: 64 };
    let g1 = SourceGrid::from_fn(33, 16, |w, om| 1.0 - w * w + 0.1 * om.cos()).unwrap();
    let g2 = SourceGrid::from_fn(33, 16, |w, om| w * (2.0 * om).sin()).unwrap();
    let g3 = SourceGrid::from_fn(33, 16, |w, om| 2.0 * (1.0 - w * w + 0.1 * om.cos()) - 0.5 * w * (2.0 * om).sin()).unwrap();
    let combine = |a: &GradComponents, b: &GradComponents, c: &GradComponents| {
        let e1 = (&(&a.radial.scale(2.0) - &b.radial.scale(0.5)) - &c.radial).sup_norm();
        let e2 = (&(&a.tangential.scale(2.0) - &b.tangential.scale(0.5)) - &c.tangential).sup_norm();
        e1.max(e2)
    };
    let gi = |g: &SourceGrid| grad_inner(&pair, g, &quad).unwrap();
    let go = |g: &SourceGrid| grad_outer(&pair, g, &quad).unwrap();
    assert!(combine(&gi(&g1), &gi(&g2), &gi(&g3)) < 1e-12);
    assert!(combine(&go(&g1), &go(&g2), &go(&g3)) < 1e-12);
}

#[test]
fn solved_densities_are_fixed_points_with_zero_mean() {
    let n = 64;
    let pair = small_pair(n, &[1e-3, 0.0, 5e-4], &[0.0, 0.0, 1.0], &[0.0, 1e-3], &[0.0, 0.2]);
    let quad = QuadSpec { n_w: 64, n_xi: 64 };
    let src = SourceGrid::from_fn(65, 16, |w, _| 1.0 - 0.3 * w * w).unwrap();
    let gi = grad_inner(&pair, &src, &quad).unwrap();
    let go = grad_outer(&pair, &src, &quad).unwrap();
    let lin = Linearization::new(1.0, 2.0, -0.4, pair.r, pair.big_r);
    let d = solve_densities(&pair, &lin, &gi, &go, &DensityControls::default()).unwrap();
    assert!(d.jump_prime.mean().abs() < 1e-15 && d.outer_prime.mean().abs() < 1e-15);
    let (tj, to) = static_map(&pair, lin.a, &gi, &go, &d.jump_prime, &d.outer_prime).unwrap();
    assert!((&tj.fluctuation() - &d.jump_prime).sup_norm() < 1e-10);
    assert!((&to.fluctuation() - &d.outer_prime).sup_norm() < 1e-10);
    assert!(d.contraction_factors().iter().all(|&q| q < 1.0));
}
