use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use furuta_bench::{bundled, episode};
use furuta_core::control_design::{default_weights, solve_care};
use furuta_core::dynamics::{dynamics_derivative, step};
use furuta_core::{frequency_sweep, run_episode, LinearModel, PolicyKind, State};

fn dynamics(c: &mut Criterion) {
    let (loaded, _) = bundled();
    let p = loaded.params;
    let s = State::new(0.1, 0.2, 0.3, 0.4);
    c.bench_function("dynamics_derivative", |b| {
        b.iter(|| dynamics_derivative(black_box(&s), black_box(1.0), &p))
    });
    c.bench_function("rk4_step", |b| b.iter(|| step(black_box(&s), black_box(1.0), 1.0 / 480.0, &p)));
}

fn design(c: &mut Criterion) {
    let model = LinearModel::quanser_qube();
    let (q, r) = default_weights();
    c.bench_function("solve_care_4x4", |b| {
        b.iter(|| solve_care(black_box(&model.a), black_box(&model.b), &q, r))
    });
}

fn episodes(c: &mut Criterion) {
    let hybrid = episode(PolicyKind::Hybrid);
    c.bench_function("hybrid_episode_10s", |b| b.iter(|| run_episode(black_box(&hybrid))));

    let lqr = episode(PolicyKind::Lqr);
    let freqs = [40.0, 80.0, 120.0];
    let mut group = c.benchmark_group("sweeps");
    group.sample_size(10);
    group.bench_function("frequency_sweep_3x20", |b| {
        b.iter(|| frequency_sweep(&freqs, 20, &lqr, 10f64.to_radians(), 10.0, 0, 3.0, Some(1)))
    });
    group.finish();
}

criterion_group!(benches, dynamics, design, episodes);
criterion_main!(benches);
