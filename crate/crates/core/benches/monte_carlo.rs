use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fasura::sim::run_point;
use fasura::{Mode, SystemConfig};

fn bench_config(mode: Mode) -> SystemConfig {
    SystemConfig {
        mode,
        num_ports: 50,
        rf_chains: 5,
        aperture_wavelengths: 2.0,
        total_pilot_duration: 100,
        pilot_bits: 6,
        gap: 10,
        seed: 42,
        ..Default::default()
    }
}

// Compares the sequential path (parallelism = 1) against the rayon pool.
// Without the `parallel` feature only the sequential path exists.
fn monte_carlo(c: &mut Criterion) {
    let trials = 16;
    for mode in [Mode::Apce, Mode::Ppce, Mode::Ula] {
        let cfg = bench_config(mode);
        let mut group = c.benchmark_group(format!("run_point/{mode}"));
        group.sample_size(10);
        group.bench_function("sequential", |b| {
            b.iter(|| run_point(black_box(&cfg), 0, trials, 1).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_function("parallel", |b| {
            b.iter(|| run_point(black_box(&cfg), 0, trials, 4).unwrap())
        });
        group.finish();
    }
}

fn pursuit(c: &mut Criterion) {
    use fasura::sim::{run_trial, trial_rng};
    let cfg = bench_config(Mode::Apce);
    let mut group = c.benchmark_group("trial");
    group.sample_size(20);
    group.bench_function("apce_single", |b| {
        b.iter(|| {
            let mut rng = trial_rng(7, 0, 0);
            run_trial(black_box(&cfg), &mut rng).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, monte_carlo, pursuit);
criterion_main!(benches);
