use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stoplab::experiments::{log_t_grid, run_simple_regret_sweep, EstimatorConstants, ExperimentConfig, RegretTarget};
use stoplab::{BarrierSearch, DriftSpec, ExecMode, Kernel, PayoffSpec, RegretOracle, XiOracle};

fn sweep(c: &mut Criterion) {
    let drift = DriftSpec::ou(0.5);
    let xi = XiOracle::shared(&drift).unwrap();
    let constants = EstimatorConstants::from_oracle(&xi, 0.1, 2.0).unwrap();
    let targets: Vec<RegretTarget> = [0.25, 0.5, 0.75]
        .into_iter()
        .map(|beta| RegretTarget {
            beta,
            oracle: RegretOracle::new(xi.clone(), PayoffSpec::sim_tent(beta, xi.clone(), 0.1, 2.0).unwrap()).unwrap(),
        })
        .collect();

    let mut group = c.benchmark_group("regret_sweep");
    group.sample_size(10);
    for exec in [ExecMode::Parallel, ExecMode::Sequential] {
        let cfg = ExperimentConfig {
            drift: drift.clone(),
            t_grid: log_t_grid(3.0, 6.0, 4),
            dt: 0.01,
            replications: 16,
            master_seed: 1,
            y1: 0.1,
            zeta: 2.0,
            constants,
            kernel: Kernel::Epanechnikov,
            search: BarrierSearch::Refined,
            exec,
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_simple_regret_sweep(cfg, &targets).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
