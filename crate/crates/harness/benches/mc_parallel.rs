//! Criterion comparison of sequential vs parallel Monte Carlo scheduling
//! on a small fixed workload. Run with `--no-default-features` to confirm
//! the sequential fallback path compiles and matches.

use criterion::{criterion_group, criterion_main, Criterion};

use mrx_harness::{run_monte_carlo_ber, ExecMode, LinkSetup, Receiver, SweepConfig, TdlSettings};

fn workload() -> (SweepConfig, Receiver) {
    let cfg = SweepConfig {
        link: LinkSetup::micro(),
        tdl: TdlSettings::micro(),
        ebn0_grid_db: vec![6.0],
        iterations: 8,
        frames_per_iter: 2,
        seeds: vec![1],
        ..SweepConfig::desk("ls")
    };
    let rx = Receiver::from_spec("ls", &cfg.link, &cfg.tdl, 0.9999, None).unwrap();
    (cfg, rx)
}

fn bench_modes(c: &mut Criterion) {
    let (cfg, rx) = workload();
    let mut group = c.benchmark_group("mc_sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_monte_carlo_ber(&cfg, &rx, 2, ExecMode::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_monte_carlo_ber(&cfg, &rx, 2, ExecMode::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
