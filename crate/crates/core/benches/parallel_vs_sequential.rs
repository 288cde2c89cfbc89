use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use randcs_core::recovery::{back_project, determine_support};
use randcs_core::sensing::{build_ensemble, generate_binary_signal, measure, RecoveryConfig};
use randcs_core::Execution;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn config(n: usize) -> RecoveryConfig {
    RecoveryConfig::new(n, n / 100).with_seed(42)
}

fn bench_build_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_ensemble");
    group.sample_size(10);
    for n in [2000, 4000] {
        let cfg = config(n);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| {
                b.iter(|| build_ensemble(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_recovery(c: &mut Criterion) {
    let mut bp = c.benchmark_group("back_project");
    bp.sample_size(20);
    let mut fixtures = Vec::new();
    for n in [2000, 4000] {
        let cfg = config(n);
        let ensemble = build_ensemble(&cfg, Execution::default()).unwrap();
        let z = generate_binary_signal(7, n, cfg.s).unwrap();
        let meas = measure(&ensemble, &z, cfg.sigma_w, cfg.noise_mode, 1, Execution::default()).unwrap();
        for (name, exec) in POLICIES {
            bp.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| back_project(&ensemble, &meas, 0..ensemble.r0(), exec).unwrap())
            });
        }
        fixtures.push((n, ensemble, meas));
    }
    bp.finish();

    let mut ds = c.benchmark_group("determine_support");
    ds.sample_size(20);
    for (n, ensemble, meas) in &fixtures {
        for (name, exec) in POLICIES {
            ds.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| determine_support(ensemble, meas, exec).unwrap())
            });
        }
    }
    ds.finish();
}

criterion_group!(benches, bench_build_ensemble, bench_recovery);
criterion_main!(benches);
