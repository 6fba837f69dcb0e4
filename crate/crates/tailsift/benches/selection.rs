//! Criterion benches comparing the rayon-parallel per-class selection path
//! against the always-sequential one, plus the hot inner kernels.
//!
//! Run with `cargo bench`. The parallel path needs the default `parallel`
//! feature; without it both entry points execute the same sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tailsift::dataset::Dataset;
use tailsift::mixture;
use tailsift::selection::{self, SelectionConfig};
use tailsift::simulator::{NoiseType, SimulatorConfig};

fn dataset(max_class_size: usize, noise_type: NoiseType) -> Dataset {
    let config = SimulatorConfig {
        num_classes: 10,
        max_class_size,
        imbalance_factor: 0.1,
        noise_type,
        noise_ratio: 0.4,
        feature_dim: 32,
        model_quality: 0.7,
        memorization: 0.25,
        temperature: 0.25,
        seed: 17,
    };
    tailsift::simulator::generate(&config).expect("generation succeeds")
}

fn bench_select_all(c: &mut Criterion) {
    let config = SelectionConfig::default();
    let mut group = c.benchmark_group("select_all");
    for max_size in [500usize, 2000, 5000] {
        let data = dataset(max_size, NoiseType::Asymmetric);
        let records = data.records().len();
        group.bench_with_input(
            BenchmarkId::new("parallel", records),
            &data,
            |b, data| b.iter(|| black_box(selection::select_all(data, &config).unwrap())),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", records),
            &data,
            |b, data| b.iter(|| black_box(selection::select_all_seq(data, &config).unwrap())),
        );
    }
    group.finish();
}

fn bench_mixture_fit(c: &mut Criterion) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..2000)
        .map(|i| {
            let center = if i % 2 == 0 { 0.2 } else { 0.8 };
            center + rng.gen_range(-0.1..0.1)
        })
        .collect();
    c.bench_function("fit_two_component_2000", |b| {
        b.iter(|| black_box(mixture::fit_two_component(black_box(&values)).unwrap()))
    });
}

fn bench_metrics(c: &mut Criterion) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let m = 10;
    let vectors: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let mut raw: Vec<f64> = (0..m).map(|_| rng.gen_range(1e-6..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter_mut().for_each(|v| *v /= total);
            raw
        })
        .collect();
    let mean = vec![1.0 / m as f64; m];
    c.bench_function("wjsd_1000x10", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for probs in &vectors {
                acc += tailsift::metrics::wjsd(black_box(probs), 0, black_box(&mean));
            }
            black_box(acc)
        })
    });
}

criterion_group!(benches, bench_select_all, bench_mixture_fit, bench_metrics);
criterion_main!(benches);
