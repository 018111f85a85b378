//! Sequential versus data-parallel execution of the heavy kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mbshape::mcsim::{simulate, SimConfig, VarianceMode};
use mbshape::mismatch::build_gain_map;
use mbshape::shaping::{optimize_many, optimize_shaping};
use mbshape::snr::db_grid;
use mbshape::{Execution, ShapedQam, SnrDb};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn shaping_grid(c: &mut Criterion) {
    let grid = db_grid(5.0, 25.0, 0.1);
    let mut g = c.benchmark_group("optimize_many_64qam");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| optimize_many(8, &grid, exec).unwrap())
        });
    }
    g.finish();
}

fn gain_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("gain_map_16qam_1db");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_gain_map(4, 5.0, 20.0, 1.0, exec).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let pam = optimize_shaping(8, SnrDb(18.0)).unwrap().constellation;
    let config = SimConfig {
        num_symbols: 200_000,
        snr_db: SnrDb(18.0),
        seed: 1,
        constellation: ShapedQam::new(pam),
        variance: VarianceMode::Genie,
    };
    let mut g = c.benchmark_group("simulate_64qam_2e5");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate(&config, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, shaping_grid, gain_map, monte_carlo);
criterion_main!(benches);
