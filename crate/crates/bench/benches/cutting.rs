use criterion::{criterion_group, criterion_main, Criterion};
use dpvqd_bench::heisenberg_loss;
use dpvqd_core::cutting::{decompose, evaluate_cut_expectation, ExecMode};
use dpvqd_core::{NoiseConfig, Observable};
use std::hint::black_box;

fn reconstruction(c: &mut Criterion) {
    let fx = heisenberg_loss(6).unwrap();
    let bound = fx.circuit.bind_values(&fx.theta).unwrap();
    let obs = Observable::all_zeros(6);
    c.bench_function("decompose_loss_6", |b| b.iter(|| decompose(black_box(&bound), &fx.cuts).unwrap()));
    c.bench_function("reconstruct_exact_6", |b| {
        b.iter(|| evaluate_cut_expectation(black_box(&bound), &fx.cuts, &obs, &ExecMode::Exact).unwrap())
    });
    let shots = ExecMode::Shots {
        shots: 1024,
        seed: 7,
        noise: NoiseConfig::noiseless(),
    };
    c.bench_function("reconstruct_shots_6", |b| {
        b.iter(|| evaluate_cut_expectation(black_box(&bound), &fx.cuts, &obs, &shots).unwrap())
    });
}

criterion_group!(benches, reconstruction);
criterion_main!(benches);
