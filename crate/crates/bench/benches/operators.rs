use std::hint::black_box;

use contour_core::growth_potential::{grad_inner, grad_outer, QuadSpec, SourceGrid};
use contour_core::kernels::{eval_poisson_derivs, KernelPoint};
use contour_core::layer_ops::{interaction_inner_from_outer, singular_parts, Curve};
use contour_core::{InterfacePair, PeriodicField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn pair(n: usize) -> InterfacePair {
    let h = PeriodicField::from_fn(n, |t| 1e-3 * (2.0 * t).cos()).unwrap();
    let big_h = PeriodicField::from_fn(n, |t| 1e-3 * (3.0 * t).sin()).unwrap();
    InterfacePair::with_default_delta(1.0, 1.5, h, big_h).unwrap()
}

fn kernels(c: &mut Criterion) {
    c.bench_function("poisson_derivs", |b| b.iter(|| eval_poisson_derivs(black_box(KernelPoint::new(0.93, 0.01))).unwrap()));
}

fn layer_operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("layer_ops");
    for n in [64, 256] {
        let p = pair(n);
        let psi = PeriodicField::from_fn(n, |t| t.cos() + 0.3 * (4.0 * t).sin()).unwrap();
        g.bench_with_input(BenchmarkId::new("singular_parts", n), &n, |b, _| {
            b.iter(|| singular_parts(Curve::Inner, &p, black_box(&psi)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("interaction", n), &n, |b, _| {
            b.iter(|| interaction_inner_from_outer(&p, black_box(&psi)).unwrap())
        });
    }
    g.finish();
}

fn growth_potential(c: &mut Criterion) {
    let mut g = c.benchmark_group("growth_potential");
    g.sample_size(10);
    let p = pair(128);
    let src = SourceGrid::from_fn(129, 32, |w, om| 1.0 - 0.5 * w * w + 0.01 * om.cos()).unwrap();
    for quad in [QuadSpec { n_w: 64, n_xi: 128 }, QuadSpec { n_w: 256, n_xi: 512 }] {
        let id = format!("{}x{}", quad.n_w, quad.n_xi);
        g.bench_function(BenchmarkId::new("inner", &id), |b| b.iter(|| grad_inner(&p, &src, &quad).unwrap()));
        g.bench_function(BenchmarkId::new("outer", &id), |b| b.iter(|| grad_outer(&p, &src, &quad).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, kernels, layer_operators, growth_potential);
criterion_main!(benches);
