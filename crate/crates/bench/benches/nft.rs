use criterion::{criterion_group, criterion_main, Criterion};
use dpvqd_bench::heisenberg_loss;
use dpvqd_core::optimizer::{nft_minimize, FragmentedLoss};
use dpvqd_core::vqd::{Estimator, LossEvaluator, LossMode};
use dpvqd_core::NftConfig;

fn one_sweep(c: &mut Criterion) {
    let fx = heisenberg_loss(5).unwrap();
    let cfg = NftConfig {
        max_sweeps: 1,
        ..NftConfig::default()
    };
    let names = fx.ansatz.parameters().to_vec();
    let mut g = c.benchmark_group("nft_sweep_5");
    g.sample_size(10);
    for (label, cuts) in [("uncut", None), ("cut", Some((fx.cuts.as_slice(), 1)))] {
        g.bench_function(label, |b| {
            b.iter(|| {
                let mut loss =
                    LossEvaluator::new(fx.circuit.clone(), names.clone(), LossMode::Global, Estimator::Exact, cuts, 0)
                        .unwrap()
                        .without_gap_check();
                assert_eq!(loss.num_params(), fx.spec.parameter_count);
                nft_minimize(&mut loss, &fx.theta, &cfg).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, one_sweep);
criterion_main!(benches);
