use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ptf_prg::exec::Execution;
use ptf_prg::poly::{lk_norm_mc, random_poly, Basis};
use ptf_prg::prg::{plan_params, MasterSeed, Overrides, Prg};

const SCHEDULES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stream(c: &mut Criterion) {
    let ov = Overrides {
        blocks: Some(64),
        k: Some(16),
        precision: Some(32),
        ..Default::default()
    };
    let prg = Prg::new(plan_params(4, 2, 0.1, 4.0, &ov).unwrap()).unwrap();
    let master = MasterSeed::default();
    let mut group = c.benchmark_group("stream_8192_draws");
    group.sample_size(10);
    for (name, exec) in SCHEDULES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(prg.stream(&master, 8192, exec)))
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = random_poly(6, 3, 1, Basis::Hermite).unwrap();
    let mut group = c.benchmark_group("l4_norm_200k_samples");
    group.sample_size(10);
    for (name, exec) in SCHEDULES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(lk_norm_mc(&p, 4.0, 200_000, 7, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, stream, monte_carlo);
criterion_main!(benches);
