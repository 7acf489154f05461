use std::sync::Arc;

use anyhow::{bail, Context};
use serde::Serialize;

use stoplab::estimators::{default_xi_grid, estimate_barrier_with};
use stoplab::experiments::*;
use stoplab::figure::{emit_figure_data, FigureMode};
use stoplab::oracle::{build_hypotheses, verify_separation, window_grid, SeparationReport};
use stoplab::payoff::{check_class_g, check_margin, default_delta_grid, ClassGReport, MarginParams, MarginReport};
use stoplab::sde::{simulate_impulse_controlled, simulate_path, ConstantPolicy};
use stoplab::{DiffusionPath, PathEstimator, RegretOracle, XiOracle};

use crate::config::{missing, read_two_columns, Config, ScheduleKind};
use crate::output::OutDir;

#[derive(Serialize)]
struct PathRow {
    t: f64,
    x: f64,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    tau_n: f64,
    y_n: Option<f64>,
    payoff_n: f64,
    phase: &'a str,
}

pub fn simulate(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let sim = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    let drift = cfg.drift_spec()?;
    let path = simulate_path(&drift, sim.horizon, cfg.dt, sim.x0, cfg.master_seed)?;
    out.csv(
        "path.csv",
        path.samples.iter().enumerate().map(|(i, &x)| PathRow { t: i as f64 * path.dt, x }),
    )?;
    if let Some(y) = sim.threshold {
        let xi = XiOracle::shared(&drift)?;
        let payoff = cfg.payoff_spec(&xi, None)?;
        let traj = simulate_impulse_controlled(
            &drift,
            &mut ConstantPolicy(y),
            &payoff,
            sim.horizon,
            cfg.dt,
            cfg.master_seed,
            false,
        )?;
        out.csv(
            "trajectory.csv",
            traj.events.iter().map(|e| TrajectoryRow {
                tau_n: e.time,
                y_n: e.threshold,
                payoff_n: e.payoff,
                phase: e.phase.as_str(),
            }),
        )?;
        out.json(
            "trajectory.json",
            &serde_json::json!({
                "cycles": traj.stop_times.len(),
                "total_payoff": traj.total_payoff(),
                "T": traj.total_t,
            }),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateRow {
    x: f64,
    rho_hat: f64,
    #[serde(rename = "F_hat")]
    f_hat: f64,
    xi_hat: f64,
}

fn load_path(csv: &std::path::Path, seed: u64) -> anyhow::Result<DiffusionPath> {
    let (t, x) = read_two_columns(csv)?;
    if t.len() < 2 {
        bail!("{}: need at least two samples", csv.display());
    }
    let dt = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        bail!("{}: time column must be uniformly spaced", csv.display());
    }
    Ok(DiffusionPath::from_samples(dt, x, seed)?)
}

pub fn estimate(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let est_cfg = cfg.estimate.as_ref().ok_or_else(|| missing("estimate"))?;
    let drift = cfg.drift_spec()?;
    let xi = XiOracle::shared(&drift)?;
    let payoff = cfg.payoff_spec(&xi, None)?;
    let path = match (&est_cfg.path_csv, est_cfg.horizon) {
        (Some(csv), _) => load_path(csv, cfg.master_seed)?,
        (None, Some(t)) => simulate_path(&drift, t, cfg.dt, 0.0, cfg.master_seed)?,
        (None, None) => bail!("estimate needs `estimate.horizon` or `estimate.path_csv`"),
    };
    let constants = cfg.constants(&xi)?;
    let est = PathEstimator::from_path(&path, cfg.estimator.kernel)?;
    let grid = default_xi_grid(payoff.y1, payoff.zeta);
    let xi_hat = est.xi_hat(&grid, constants.floor_a, constants.clamp_m1)?;
    let barrier = estimate_barrier_with(&est, &xi_hat, &payoff, payoff.y1, payoff.zeta, cfg.estimator.search)?;
    out.csv(
        "estimate.csv",
        grid.iter().zip(&xi_hat.xi_values).map(|(&x, &v)| EstimateRow {
            x,
            rho_hat: est.rho(x),
            f_hat: est.cdf(x),
            xi_hat: v,
        }),
    )?;
    out.json(
        "estimate.json",
        &serde_json::json!({
            "y_hat": barrier.y_hat,
            "value": barrier.value,
            "T": path.horizon(),
            "seed": cfg.master_seed,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct RecordRow<'a> {
    #[serde(rename = "T")]
    t: f64,
    beta: f64,
    replication: usize,
    y_hat: f64,
    regret: f64,
    seed: u64,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct BetaSummary {
    beta: f64,
    axis: XAxis,
    slope: Option<f64>,
    ci95: Option<(f64, f64)>,
    r2: Option<f64>,
    floored: Option<bool>,
    fit_error: Option<String>,
    pac: Option<PacCheck>,
    failed_records: usize,
    horizons: Vec<HorizonSummary>,
}

fn experiment_config(
    cfg: &Config,
    drift: stoplab::DriftSpec,
    xi: &XiOracle,
    t_grid: Vec<f64>,
    replications: usize,
    exec: stoplab::ExecMode,
) -> anyhow::Result<ExperimentConfig> {
    let p = cfg.payoff_config()?;
    Ok(ExperimentConfig {
        drift,
        t_grid,
        dt: cfg.dt,
        replications,
        master_seed: cfg.master_seed,
        y1: p.y1,
        zeta: p.zeta,
        constants: cfg.constants(xi)?,
        kernel: cfg.estimator.kernel,
        search: cfg.estimator.search,
        exec,
    })
}

pub fn regret_sweep(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
    let drift = cfg.drift_spec()?;
    let xi = XiOracle::shared(&drift)?;
    let betas: Vec<Option<f64>> = match &sweep.betas {
        Some(b) => b.iter().map(|&b| Some(b)).collect(),
        None => vec![None],
    };
    let targets = betas
        .iter()
        .map(|&beta| {
            let payoff = cfg.payoff_spec(&xi, beta)?;
            Ok(RegretTarget {
                beta: beta.unwrap_or(cfg.payoff_beta()),
                oracle: RegretOracle::new(Arc::clone(&xi), payoff)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let ecfg = experiment_config(cfg, drift, &xi, sweep.horizons.values(), sweep.replications, sweep.exec)?;
    let records = run_simple_regret_sweep(&ecfg, &targets)?;

    out.csv(
        "records.csv",
        records.iter().map(|r| RecordRow {
            t: r.t,
            beta: r.beta,
            replication: r.replication,
            y_hat: r.y_hat,
            regret: r.regret,
            seed: r.seed,
            error: r.error.as_deref(),
        }),
    )?;

    let mut summaries = Vec::new();
    let mut figure = Vec::new();
    for target in &targets {
        let sub: Vec<RegretRecord> = records.iter().filter(|r| r.beta == target.beta).cloned().collect();
        let mode = FigureMode::for_beta(target.beta);
        let axis = match mode {
            FigureMode::Loglog => XAxis::LogT,
            FigureMode::Semilog => XAxis::T,
        };
        let fit = fit_rate_slope(&sub, axis);
        let t_max = ecfg.t_max();
        let at_max: Vec<RegretRecord> = sub.iter().filter(|r| r.t == t_max).cloned().collect();
        let pac = sweep.pac_eps.and_then(|eps| empirical_pac_check(&at_max, eps).ok());
        if let Ok(rows) = emit_figure_data(&sub, mode) {
            figure.extend(rows);
        }
        summaries.push(BetaSummary {
            beta: target.beta,
            axis,
            slope: fit.as_ref().ok().map(|f| f.slope),
            ci95: fit.as_ref().ok().map(|f| f.ci95),
            r2: fit.as_ref().ok().map(|f| f.r2),
            floored: fit.as_ref().ok().map(|f| f.floored),
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            pac,
            failed_records: sub.iter().filter(|r| !r.is_ok()).count(),
            horizons: summarize_regret(&sub),
        });
    }
    out.json("summary.json", &summaries)?;
    out.csv("figure.csv", figure)?;
    Ok(())
}

#[derive(Serialize)]
struct CumulativeRow {
    #[serde(rename = "T")]
    t: f64,
    replication: usize,
    regret_cum: f64,
    exploration_time: f64,
    n_cycles: usize,
    seed: u64,
}

pub fn cumulative(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let cum = cfg.cumulative.as_ref().ok_or_else(|| missing("cumulative"))?;
    let drift = cfg.drift_spec()?;
    let xi = XiOracle::shared(&drift)?;
    let oracle = RegretOracle::new(Arc::clone(&xi), cfg.payoff_spec(&xi, None)?)?;
    let schedule = match cum.schedule {
        ScheduleKind::Margin => Schedule::Margin { beta: cum.schedule_beta.unwrap_or(cfg.payoff_beta()) },
        ScheduleKind::General => Schedule::General,
    };
    let ecfg = experiment_config(cfg, drift, &xi, cum.horizons.values(), cum.replications, cum.exec)?;
    let strategy = Strategy::ExploreExploit { block_len: cum.block_len, schedule };
    let records = run_exploration_exploitation(&ecfg, &oracle, strategy)?;
    out.csv(
        "cumulative.csv",
        records.iter().map(|r| CumulativeRow {
            t: r.t,
            replication: r.replication,
            regret_cum: r.regret_cum,
            exploration_time: r.exploration_time,
            n_cycles: r.n_cycles,
            seed: r.seed,
        }),
    )?;
    let horizons = summarize_cumulative(&records);
    let means: Vec<(f64, f64)> = horizons.iter().map(|s| (s.t, s.mean)).collect();
    let fit = fit_means(&means, XAxis::LogT);
    out.json(
        "summary.json",
        &serde_json::json!({
            "phi": oracle.phi,
            "y_star": oracle.y_star,
            "schedule_exponent": schedule.exponent(),
            "slope": fit.as_ref().ok().map(|f| f.slope),
            "ci95": fit.as_ref().ok().map(|f| f.ci95),
            "r2": fit.as_ref().ok().map(|f| f.r2),
            "fit_error": fit.as_ref().err().map(|e| e.to_string()),
            "horizons": horizons,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct PacRow {
    beta: f64,
    eps: f64,
    delta: f64,
    t_margin: f64,
    t_general: f64,
}

pub fn pac(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let p = cfg.pac.as_ref().ok_or_else(|| missing("pac"))?;
    let mut rows = Vec::new();
    for &beta in &p.betas {
        for &eps in &p.eps {
            for &delta in &p.delta {
                let b = pac_bounds(beta, eps, delta, p.c1, p.c3)
                    .with_context(|| format!("beta = {beta}, eps = {eps}, delta = {delta}"))?;
                rows.push(PacRow { beta, eps, delta, t_margin: b.t_margin, t_general: b.t_general });
            }
        }
    }
    out.csv("pac.csv", rows)?;
    Ok(())
}

#[derive(Serialize)]
struct HypothesisSummary {
    mode: stoplab::oracle::HypothesisMode,
    #[serde(rename = "T")]
    t: f64,
    eps: f64,
    delta: Option<f64>,
    kl: f64,
    separation_report: SeparationReport,
}

#[derive(Serialize)]
struct RatioRow {
    x: f64,
    g_over_xi_b: f64,
    g_over_xi_b_bar: f64,
}

pub fn hypotheses(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let h = cfg.hypotheses.as_ref().ok_or_else(|| missing("hypotheses"))?;
    let mut summaries = Vec::new();
    for &t in &h.horizons {
        let pair = build_hypotheses(h.mode()?, t)?;
        let grid = pair.default_grid();
        let sep = verify_separation(&pair, &grid)?;
        let profile = pair.ratio_profile(&grid)?;
        out.csv(
            &format!("ratios_T{t}.csv"),
            profile.grid.iter().enumerate().map(|(i, &x)| RatioRow {
                x,
                g_over_xi_b: profile.ratio_b[i],
                g_over_xi_b_bar: profile.ratio_b_bar[i],
            }),
        )?;
        summaries.push(HypothesisSummary {
            mode: h.mode()?,
            t,
            eps: pair.eps,
            delta: pair.delta,
            kl: pair.kl()?,
            separation_report: sep,
        });
    }
    out.json("hypotheses.json", &summaries)?;
    Ok(())
}

#[derive(Serialize)]
struct MarginOutput {
    params: MarginParams,
    margin: MarginReport,
    class_g: ClassGReport,
}

pub fn margin_check(cfg: &Config, out: &mut OutDir) -> anyhow::Result<()> {
    let m = cfg.margin_check.as_ref().ok_or_else(|| missing("margin_check"))?;
    let drift = cfg.drift_spec()?;
    let xi = XiOracle::shared(&drift)?;
    let payoff = cfg.payoff_spec(&xi, None)?;
    let params = MarginParams { delta0: m.delta0, n: m.n, eta: m.eta, beta: m.beta };
    let grid = stoplab::quad::arange_inclusive(payoff.y1, payoff.zeta, m.step);
    let values = grid.iter().map(|&x| xi.ratio(&payoff, x)).collect::<stoplab::Result<Vec<_>>>()?;
    let margin = check_margin(&grid, &values, &params, &default_delta_grid(m.delta0))?;
    let class_grid = window_grid(payoff.zeta * 1e-3, 3.0 * payoff.zeta);
    let class_g = check_class_g(&payoff, &[xi], &class_grid)?;
    out.json("margin.json", &MarginOutput { params, margin, class_g })?;
    Ok(())
}
