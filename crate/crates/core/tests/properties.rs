use std::sync::Arc;

use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use stoplab::drift::invariant_law;
use stoplab::estimators::{default_xi_grid, density_estimate};
use stoplab::experiments::*;
use stoplab::oracle::*;
use stoplab::payoff::{check_margin, default_delta_grid, MarginParams};
use stoplab::quad::{arange_inclusive, linspace, trapezoid};
use stoplab::sde::{first_hitting_time_driven, simulate_path};
use stoplab::*;

fn ou_oracle() -> Arc<XiOracle> {
    XiOracle::shared(&DriftSpec::ou(0.5)).unwrap()
}

fn small_config(t_grid: Vec<f64>, replications: usize, exec: ExecMode) -> ExperimentConfig {
    let xi = ou_oracle();
    ExperimentConfig {
        drift: DriftSpec::ou(0.5),
        t_grid,
        dt: 0.01,
        replications,
        master_seed: 7,
        y1: 0.1,
        zeta: 2.0,
        constants: EstimatorConstants::from_oracle(&xi, 0.1, 2.0).unwrap(),
        kernel: Kernel::Epanechnikov,
        search: BarrierSearch::Refined,
        exec,
    }
}

fn tent_target(xi: &Arc<XiOracle>, beta: f64) -> RegretTarget {
    RegretTarget {
        beta,
        oracle: RegretOracle::new(xi.clone(), PayoffSpec::sim_tent(beta, xi.clone(), 0.1, 2.0).unwrap()).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimates_are_well_formed(seed in any::<u64>(), t in 20.0f64..200.0) {
        let path = simulate_path(&DriftSpec::ou(0.5), t, 0.01, 0.0, seed).unwrap();
        let est = PathEstimator::from_path(&path, Kernel::Epanechnikov).unwrap();
        let grid = default_xi_grid(0.1, 2.0);
        let mut last_cdf = 0.0;
        for &x in &grid {
            let f = est.cdf(x);
            prop_assert!((0.0..=1.0).contains(&f) && f >= last_cdf);
            prop_assert!(est.rho(x) >= 0.0);
            last_cdf = f;
        }
        let xi = est.xi_hat(&grid, 0.05, 0.2).unwrap();
        prop_assert!(xi.xi_values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(xi.xi_values.iter().all(|&v| v >= 0.1));
    }

    #[test]
    fn windowed_density_matches_direct_sum(seed in any::<u64>(), x in -2.0f64..2.0) {
        let path = simulate_path(&DriftSpec::ou(0.5), 30.0, 0.01, 0.0, seed).unwrap();
        for kernel in [Kernel::Epanechnikov, Kernel::Uniform, Kernel::Triangular] {
            let est = PathEstimator::from_path(&path, kernel).unwrap();
            let direct = density_estimate(&path, kernel, x);
            prop_assert!((est.rho(x) - direct).abs() <= 1e-9 * (1.0 + direct));
        }
    }

    #[test]
    fn simple_regret_is_nonnegative(y in 0.1f64..=2.0, beta in 0.2f64..1.5) {
        let xi = ou_oracle();
        let oracle = RegretOracle::new(xi.clone(), PayoffSpec::sim_tent(beta, xi, 0.1, 2.0).unwrap()).unwrap();
        prop_assert!(simple_regret(&oracle, y).unwrap() >= 0.0);
    }

    #[test]
    fn margin_check_is_monotone_in_eta(beta in 0.3f64..0.9, eta in 0.5f64..3.0, bump in 0.0f64..1.0) {
        let grid = arange_inclusive(0.0, 2.0, 2e-5);
        let values: Vec<f64> = grid.iter().map(|x| 1.0 - (1.0 - x).abs().powf(1.0 / beta)).collect();
        let deltas = default_delta_grid(0.5);
        let base = MarginParams { delta0: 0.5, n: 1, eta, beta };
        let wider = MarginParams { eta: eta + bump, ..base };
        let a = check_margin(&grid, &values, &base, &deltas).unwrap().ok;
        let b = check_margin(&grid, &values, &wider, &deltas).unwrap().ok;
        prop_assert!(!a || b);
    }

    #[test]
    fn pac_horizon_shrinks_with_looser_targets(
        beta in 0.1f64..2.0,
        eps in 0.01f64..0.5,
        delta in 1e-6f64..0.3,
        c in 0.1f64..5.0,
    ) {
        let base = pac_bounds(beta, eps, delta, c, c).unwrap();
        let looser_eps = pac_bounds(beta, eps * 1.5, delta, c, c).unwrap();
        let looser_delta = pac_bounds(beta, eps, (delta * 1.2).min((-1.0f64).exp()), c, c).unwrap();
        prop_assert!(looser_eps.t_margin < base.t_margin && looser_eps.t_general < base.t_general);
        prop_assert!(looser_delta.t_margin <= base.t_margin && looser_delta.t_general <= base.t_general);
    }

    #[test]
    fn perturbed_margin_xi_gap(eps in 0.0f64..0.5, x in 0.01f64..3.0) {
        let b = DriftSpec::piecewise_margin(3.0, 0.0);
        let b_bar = DriftSpec::piecewise_margin(3.0, eps);
        let gap = xi_closed_form(&b_bar, x).unwrap() - xi_closed_form(&b, x).unwrap();
        prop_assert!((gap - eps * std::f64::consts::PI.sqrt() * x).abs() < 1e-12 * (1.0 + x * x));
    }
}

#[test]
fn xi_is_increasing_for_every_drift() {
    let drifts = [
        DriftSpec::ou(0.5),
        DriftSpec::ou(2.0),
        DriftSpec::piecewise_margin(3.0, 0.1),
        DriftSpec::piecewise_general(1.0, 1.2, 0.05),
    ];
    for d in &drifts {
        let oracle = XiOracle::new(d).unwrap();
        let xs = linspace(0.0, 3.0, 301);
        let vals: Vec<f64> = xs.iter().map(|&x| oracle.xi(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{d:?}");
    }
}

#[test]
fn invariant_density_integrates_to_one() {
    let law = invariant_law(&DriftSpec::ou(0.5), 12.0, 40_001).unwrap();
    assert!((trapezoid(&law.grid, &law.density) - 1.0).abs() < 1e-8);
}

/// Coupled paths: the fine path uses the same Brownian increments split in
/// two. The coarse grid monitors fewer points, so its hitting time is later
/// on average, and the gap shrinks with the step.
#[test]
fn coarser_monitoring_hits_later() {
    let spec = DriftSpec::piecewise_margin(3.0, 0.0);
    let mut gaps = Vec::new();
    for dt in [0.04, 0.01] {
        let mut total = 0.0;
        for seed in 0..400u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(f64, f64)> = (0..200_000)
                .map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let mut i = 0;
            let fine = first_hitting_time_driven(&spec, 1.0, dt / 2.0, 1e3, || {
                let (a, b) = pairs[i / 2];
                let z = if i % 2 == 0 { a } else { b };
                i += 1;
                z
            })
            .unwrap();
            let mut j = 0;
            let coarse = first_hitting_time_driven(&spec, 1.0, dt, 1e3, || {
                let (a, b) = pairs[j];
                j += 1;
                (a + b) / std::f64::consts::SQRT_2
            })
            .unwrap();
            total += coarse.tau - fine.tau;
        }
        gaps.push(total / 400.0);
    }
    assert!(gaps[0] > 0.0 && gaps[1] > 0.0, "{gaps:?}");
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn parallel_and_sequential_agree() {
    let xi = ou_oracle();
    let targets = [tent_target(&xi, 0.5)];
    let grid = log_t_grid(3.0, 5.0, 3);
    let par = run_simple_regret_sweep(&small_config(grid.clone(), 6, ExecMode::Parallel), &targets).unwrap();
    let seq = run_simple_regret_sweep(&small_config(grid, 6, ExecMode::Sequential), &targets).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn regret_decreases_with_more_data() {
    let xi = ou_oracle();
    let recs = run_simple_regret_sweep(
        &small_config(vec![3f64.exp(), 7f64.exp()], 30, ExecMode::Parallel),
        &[tent_target(&xi, 0.5)],
    )
    .unwrap();
    let s = summarize_regret(&recs);
    assert!(s[1].mean < s[0].mean, "{s:?}");
}

#[test]
fn steeper_decay_for_larger_beta() {
    let xi = ou_oracle();
    let targets = [tent_target(&xi, 0.25), tent_target(&xi, 0.75)];
    let recs = run_simple_regret_sweep(&small_config(log_t_grid(3.0, 7.0, 5), 30, ExecMode::Parallel), &targets)
        .unwrap();
    let slope = |beta: f64| {
        let sub: Vec<RegretRecord> = recs.iter().filter(|r| r.beta == beta).cloned().collect();
        fit_rate_slope(&sub, XAxis::LogT).unwrap().slope
    };
    assert!(slope(0.75) < slope(0.25));
}

/// Stopping at the true optimum without exploring earns `Φ` per unit time up
/// to renewal fluctuations.
#[test]
fn oracle_policy_has_no_drift_in_cumulative_regret() {
    let xi = ou_oracle();
    let oracle = RegretOracle::new(xi.clone(), PayoffSpec::sim_tent(0.5, xi, 0.1, 2.0).unwrap()).unwrap();
    let cfg = small_config(vec![500.0, 2000.0], 30, ExecMode::Parallel);
    let recs = run_exploration_exploitation(&cfg, &oracle, Strategy::Fixed { y: oracle.y_star }).unwrap();
    for s in summarize_cumulative(&recs) {
        // Without the in-step crossing check the loss is about 8% of Φ T at
        // this step size, far outside this band at T = 2000.
        assert!(s.mean.abs() < 4.0 * s.stderr + 1.0, "{s:?}");
    }
}

#[test]
fn exploration_respects_budget() {
    let xi = ou_oracle();
    let oracle = RegretOracle::new(xi.clone(), PayoffSpec::sim_tent(0.5, xi, 0.1, 2.0).unwrap()).unwrap();
    let cfg = small_config(vec![100.0, 400.0], 4, ExecMode::Parallel);
    let schedule = Schedule::Margin { beta: 0.5 };
    let recs = run_exploration_exploitation(&cfg, &oracle, Strategy::ExploreExploit { block_len: 1.0, schedule })
        .unwrap();
    for r in &recs {
        assert!(r.exploration_time <= r.t);
        // One block of overshoot past the budget at most, plus the forced first block.
        assert!(r.exploration_time <= schedule.budget(r.t) + 2.0, "{r:?}");
        assert!(r.exploration_time >= 0.5 * schedule.budget(r.t), "{r:?}");
    }
}
