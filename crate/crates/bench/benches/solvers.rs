use std::hint::black_box;

use contour_core::evolution::{step_etd, SimParams, SimState};
use contour_core::growth_potential::QuadSpec;
use contour_core::pressure::{solve_radial, solve_reference, GrowthLaw, PressureControls};
use contour_core::{InterfacePair, PeriodicField, ReferenceMap};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn pair(n: usize) -> InterfacePair {
    let h = PeriodicField::from_fn(n, |t| 1e-3 * (2.0 * t).cos()).unwrap();
    let big_h = PeriodicField::from_fn(n, |t| 1e-3 * (3.0 * t).cos()).unwrap();
    InterfacePair::with_default_delta(1.0, 1.5, h, big_h).unwrap()
}

fn params() -> SimParams {
    let mut p = SimParams::new(1.0, 2.0, GrowthLaw::linear(1.0, 1.0).unwrap());
    p.n_rho = 512;
    p.n_omega = 32;
    p.quad = QuadSpec { n_w: 64, n_xi: 64 };
    p
}

fn pressure(c: &mut Criterion) {
    let law = GrowthLaw::linear(1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("pressure");
    for n_rho in [256, 1024] {
        g.bench_with_input(BenchmarkId::new("radial", n_rho), &n_rho, |b, &n| {
            b.iter(|| solve_radial(&law, 1.0, 2.0, 1.0, black_box(1.5), n).unwrap())
        });
    }
    g.sample_size(10);
    let map = ReferenceMap::new(pair(64));
    g.bench_function("reference_512x32", |b| {
        b.iter(|| solve_reference(&law, 1.0, 2.0, &map, 512, 32, PressureControls::default()).unwrap())
    });
    g.finish();
}

fn evolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolution");
    g.sample_size(10);
    let p = params();
    g.bench_function("sim_state_n64", |b| b.iter(|| SimState::new(0.0, pair(64), &p).unwrap()));
    let s = SimState::new(0.0, pair(64), &p).unwrap();
    g.bench_function("step_etd1_n64", |b| b.iter(|| step_etd(&s, black_box(0.01), &p).unwrap()));
    g.finish();
}

criterion_group!(benches, pressure, evolution);
criterion_main!(benches);
