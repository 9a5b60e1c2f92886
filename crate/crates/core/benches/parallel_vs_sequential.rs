use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use interp_core::couples::sign_enumeration;
use interp_core::harness::{run_with, CoupleSpec, Experiment, RunConfig};
use interp_core::{Execution, Exponent, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sign_enum(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut group = c.benchmark_group("sign_enumeration");
    for cols in [14usize, 18] {
        let data: Vec<f64> = (0..cols * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let a = Matrix::from_fn(cols, cols, |i, j| data[i * cols + j]);
        for (name, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, cols), &a, |b, a| {
                b.iter(|| sign_enumeration(black_box(a), exec))
            });
        }
    }
    group.finish();
}

fn trial_batch(c: &mut Criterion) {
    let mut cfg = RunConfig::new(Experiment::VerifyOvch);
    cfg.seed = 1;
    cfg.trials = 32;
    cfg.source = Some(CoupleSpec::lambda_adic(2.0, -5, 5, Exponent::INF));
    cfg.target = Some(CoupleSpec::lambda_adic(2.0, -5, 5, Exponent::ONE));
    let mut group = c.benchmark_group("verify_ovch_batch");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| run_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sign_enum, trial_batch);
criterion_main!(benches);
