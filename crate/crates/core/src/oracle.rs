//! Ground truth for a known drift: expected hitting times ξ_b, the optimal
//! rate Φ_b(g), simple regret, the stationary KL divergence between two drifts,
//! and the two-point hypothesis constructions used for lower bounds.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drift::{check_sigma_membership, probe_grid, DriftSpec, InvariantLaw};
use crate::error::{Error, Result};
use crate::payoff::{PayoffFamily, PayoffSpec};
use crate::quad;

/// `ξ_b(x) = 2 ∫_0^x F_b / ρ_b`, tabulated once on the non-negative part of a
/// law grid and interpolated linearly in between.
#[derive(Debug, Clone)]
pub struct XiOracle {
    pub drift: DriftSpec,
    pub law: InvariantLaw,
    nodes: Vec<f64>,
    xi: Vec<f64>,
}

impl XiOracle {
    pub fn new(drift: &DriftSpec) -> Result<Self> {
        let law = InvariantLaw::with_defaults(drift)?;
        Ok(Self::from_law(drift, law))
    }

    pub fn shared(drift: &DriftSpec) -> Result<Arc<Self>> {
        Self::new(drift).map(Arc::new)
    }

    pub fn from_law(drift: &DriftSpec, law: InvariantLaw) -> Self {
        let z = law.zero_index;
        let mut nodes = Vec::new();
        let mut integrand = Vec::new();
        for i in z..law.grid.len() {
            let v = law.cdf[i] * (-law.log_density[i]).exp();
            if !v.is_finite() {
                break;
            }
            nodes.push(law.grid[i]);
            integrand.push(v);
        }
        let xi = quad::cumulative_trapezoid(&nodes, &integrand)
            .into_iter()
            .map(|v| 2.0 * v)
            .collect();
        Self {
            drift: drift.clone(),
            law,
            nodes,
            xi,
        }
    }

    /// Right end of the range on which ξ_b is tabulated.
    pub fn x_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn xi(&self, x: f64) -> Result<f64> {
        quad::interp(&self.nodes, &self.xi, x)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.law.density_at(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.law.cdf_at(x)
    }

    /// `g(x) / ξ_b(x)`; exact when `g` was built as `f · ξ` from this very
    /// oracle.
    pub fn ratio(&self, payoff: &PayoffSpec, x: f64) -> Result<f64> {
        if let Some(f) = payoff.shape_factor_for(self, x)? {
            return Ok(f);
        }
        Ok(payoff.eval(x)? / self.xi(x)?)
    }

    /// Largest ξ_b on `[lo, hi]` (ξ_b is non-decreasing, so this is ξ_b(hi)).
    pub fn m2_bound(&self, hi: f64) -> Result<f64> {
        self.xi(hi)
    }
}

/// ξ_b(x) by trapezoid quadrature of `F_b / ρ_b` over the law grid on `[0, x]`.
pub fn xi_true(law: &InvariantLaw, x: f64) -> Result<f64> {
    if x < 0.0 || x > law.x_max() {
        return Err(Error::OutOfRange {
            x,
            lo: 0.0,
            hi: law.x_max(),
        });
    }
    let integrand = |i: usize| law.cdf[i] * (-law.log_density[i]).exp();
    let z = law.zero_index;
    let mut acc = 0.0;
    let mut i = z;
    while i + 1 < law.grid.len() && law.grid[i + 1] <= x {
        acc += 0.5 * (law.grid[i + 1] - law.grid[i]) * (integrand(i) + integrand(i + 1));
        i += 1;
    }
    if law.grid[i] < x {
        let (x0, x1) = (law.grid[i], law.grid[i + 1]);
        let w = (x - x0) / (x1 - x0);
        let fx = integrand(i) * (1.0 - w) + integrand(i + 1) * w;
        acc += 0.5 * (x - x0) * (integrand(i) + fx);
    }
    Ok(2.0 * acc)
}

/// Closed form of ξ on the flat part `(0, a0]` of the hypothesis drifts:
/// `x² + (1 + ε)√π x` for the margin family and `x² + √π x` for the general
/// family (below its perturbation point).
pub fn xi_closed_form(spec: &DriftSpec, x: f64) -> Result<f64> {
    use crate::drift::DriftFamily::*;
    let (hi, scale) = match spec.family {
        PiecewiseMargin { a0, eps } => (a0, 1.0 + eps),
        PiecewiseGeneral { a, a0, eps } => (if eps == 0.0 { a0 } else { a }, 1.0),
        _ => {
            return Err(Error::BadParameters(
                "closed form only exists for the piecewise hypothesis drifts".into(),
            ))
        }
    };
    if !(x >= 0.0 && x <= hi) {
        return Err(Error::OutOfRange { x, lo: 0.0, hi });
    }
    Ok(x * x + scale * PI.sqrt() * x)
}

/// Default barrier-grid step for a window.
pub fn window_step(y1: f64, zeta: f64) -> f64 {
    1e-3_f64.min((zeta - y1) / 2000.0)
}

/// Uniform grid over the payoff window with the default step.
pub fn window_grid(y1: f64, zeta: f64) -> Vec<f64> {
    quad::arange_inclusive(y1, zeta, window_step(y1, zeta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiStar {
    pub phi: f64,
    pub y_star: f64,
}

/// Grid maximum of `g/ξ_b` over `grid ∩ [y1, ζ]`; the smallest maximiser wins.
pub fn phi_star(oracle: &XiOracle, payoff: &PayoffSpec, grid: &[f64]) -> Result<PhiStar> {
    let (y1, zeta) = (payoff.y1, payoff.zeta);
    let mut best: Option<PhiStar> = None;
    for &x in grid.iter().filter(|&&x| in_window(x, y1, zeta)) {
        let r = oracle.ratio(payoff, x)?;
        if best.is_none_or(|b| r > b.phi) {
            best = Some(PhiStar { phi: r, y_star: x });
        }
    }
    best.ok_or(Error::EmptyWindow { y1, zeta })
}

pub(crate) fn in_window(x: f64, y1: f64, zeta: f64) -> bool {
    let slack = 1e-12 * (1.0 + zeta.abs());
    x >= y1 - slack && x <= zeta + slack
}

/// Zoom in on a maximiser of `f`: starting from `center` found on a grid of
/// spacing `step`, repeatedly evaluate `points` equispaced nodes within one
/// step on either side (clipped to `[lo, hi]`) and recentre. Ties go to the
/// smaller node.
pub fn refine_argmax(
    f: impl Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    center: f64,
    step: f64,
    levels: usize,
    points: usize,
) -> Result<(f64, f64)> {
    let mut c = center;
    let mut best = f(c)?;
    let mut h = step;
    for _ in 0..levels {
        let a = (c - h).max(lo);
        let b = (c + h).min(hi);
        if b <= a {
            break;
        }
        let nodes = quad::linspace(a, b, points);
        let mut arg = c;
        let mut val = f64::NEG_INFINITY;
        for &x in &nodes {
            let v = f(x)?;
            if v > val {
                val = v;
                arg = x;
            }
        }
        if val >= best {
            best = val;
            c = arg;
        }
        h = (b - a) / (points - 1) as f64;
    }
    Ok((c, best))
}

/// Number of zoom levels and nodes per level used by default.
pub const REFINE_LEVELS: usize = 3;
pub const REFINE_POINTS: usize = 201;

/// Φ_b(g) with its maximiser, plus simple regret of arbitrary thresholds.
#[derive(Debug, Clone)]
pub struct RegretOracle {
    pub oracle: Arc<XiOracle>,
    pub payoff: PayoffSpec,
    pub phi: f64,
    pub y_star: f64,
    /// Negative regrets down to `-tol` are treated as zero.
    pub tol: f64,
}

impl RegretOracle {
    /// Grid search with the default window step followed by local refinement,
    /// so that Φ is accurate well below the grid resolution.
    pub fn new(oracle: Arc<XiOracle>, payoff: PayoffSpec) -> Result<Self> {
        let grid = window_grid(payoff.y1, payoff.zeta);
        let coarse = phi_star(&oracle, &payoff, &grid)?;
        let step = window_step(payoff.y1, payoff.zeta);
        let (y_star, phi) = refine_argmax(
            |x| oracle.ratio(&payoff, x),
            payoff.y1,
            payoff.zeta,
            coarse.y_star,
            step,
            REFINE_LEVELS,
            REFINE_POINTS,
        )?;
        Ok(Self {
            tol: 1e-9 * (1.0 + phi.abs()),
            oracle,
            payoff,
            phi,
            y_star,
        })
    }

    /// Use an externally computed Φ (e.g. a plain grid maximum).
    pub fn with_phi(oracle: Arc<XiOracle>, payoff: PayoffSpec, phi: PhiStar, tol: f64) -> Self {
        Self {
            oracle,
            payoff,
            phi: phi.phi,
            y_star: phi.y_star,
            tol,
        }
    }

    /// `Φ_b(g) − g(ŷ)/ξ_b(ŷ)`.
    pub fn regret(&self, y_hat: f64) -> Result<f64> {
        simple_regret(self, y_hat)
    }
}

pub fn simple_regret(oracle: &RegretOracle, y_hat: f64) -> Result<f64> {
    let (y1, zeta) = (oracle.payoff.y1, oracle.payoff.zeta);
    if !in_window(y_hat, y1, zeta) {
        return Err(Error::InvalidThreshold { y: y_hat, y1, zeta });
    }
    let r = oracle.phi - oracle.oracle.ratio(&oracle.payoff, y_hat)?;
    if r >= 0.0 {
        Ok(r)
    } else if r >= -oracle.tol {
        Ok(0.0)
    } else {
        Err(Error::NegativeRegret {
            regret: r,
            tol: oracle.tol,
        })
    }
}

/// Common quadrature grid for two drifts: uniform over the wider default
/// window with every kink of both drifts inserted.
pub fn common_law_grid(b: &DriftSpec, b_bar: &DriftSpec, n: usize) -> Vec<f64> {
    let r = b.default_x_max().max(b_bar.default_x_max());
    quad::merge_nodes(
        quad::linspace(-r, r, n)
            .into_iter()
            .chain(b.kinks())
            .chain(b_bar.kinks()),
    )
}

/// `KL = ∫ log(ρ_b/ρ_b̄) ρ_b + (T/2) ∫ (b − b̄)² ρ_b`, both by trapezoid on the
/// common grid of the two laws.
pub fn stationary_kl(
    b: &DriftSpec,
    b_bar: &DriftSpec,
    t: f64,
    law_b: &InvariantLaw,
    law_b_bar: &InvariantLaw,
) -> Result<f64> {
    if law_b.grid != law_b_bar.grid {
        return Err(Error::BadParameters("laws must share a grid".into()));
    }
    let grid = &law_b.grid;
    let mut log_ratio = Vec::with_capacity(grid.len());
    let mut girsanov = Vec::with_capacity(grid.len());
    for (i, &x) in grid.iter().enumerate() {
        let rho = law_b.density[i];
        log_ratio.push((law_b.log_density[i] - law_b_bar.log_density[i]) * rho);
        let d = b.eval(x)? - b_bar.eval(x)?;
        girsanov.push(d * d * rho);
    }
    let kl = quad::trapezoid(grid, &log_ratio) + 0.5 * t * quad::trapezoid(grid, &girsanov);
    Ok(kl.max(0.0))
}

/// [`stationary_kl`] on a freshly built common grid.
pub fn stationary_kl_default(b: &DriftSpec, b_bar: &DriftSpec, t: f64) -> Result<f64> {
    let grid = common_law_grid(b, b_bar, crate::drift::DEFAULT_LAW_GRID);
    let law_b = InvariantLaw::on_grid(b, &grid)?;
    let law_bb = InvariantLaw::on_grid(b_bar, &grid)?;
    stationary_kl(b, b_bar, t, &law_b, &law_bb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HypothesisMode {
    /// Margin-condition pair with peak height `m`, exponent `beta` and peak
    /// location `y_star`.
    Margin { m: f64, beta: f64, y_star: f64 },
    /// Two-tent pair without margin condition; peaks at `a/2` and `3a/2 + δ`.
    General { m: f64, a: f64 },
}

/// `c_a = a² / (64a + 32√π)`.
pub fn c_a(a: f64) -> f64 {
    a * a / (64.0 * a + 32.0 * PI.sqrt())
}

/// Two drifts that are hard to tell apart from a path of length `T` and a
/// payoff for which their optimal thresholds are far apart on the regret
/// scale. `b` is the unperturbed drift, `b_bar` the perturbed one, and the
/// payoff is `g = f · ξ_b̄`.
#[derive(Debug, Clone)]
pub struct HypothesisPair {
    pub mode: HypothesisMode,
    pub t: f64,
    pub eps: f64,
    pub b: DriftSpec,
    pub b_bar: DriftSpec,
    pub xi_b: Arc<XiOracle>,
    pub xi_b_bar: Arc<XiOracle>,
    pub g: PayoffSpec,
    /// `ḡ = f · ξ_b` (margin mode only).
    pub g_bar: Option<PayoffSpec>,
    /// Regret level `δ = M c_a ε / 2` (general mode only).
    pub delta: Option<f64>,
    pub c_a: Option<f64>,
}

/// Build the hypothesis pair for horizon `t` with `ε = T^{-1/2}`.
pub fn build_hypotheses(mode: HypothesisMode, t: f64) -> Result<HypothesisPair> {
    if !(t > 0.0) {
        return Err(Error::BadParameters(format!("horizon must be positive, got {t}")));
    }
    let eps = 1.0 / t.sqrt();
    match mode {
        HypothesisMode::Margin { m, beta, y_star } => {
            if !(m > 0.0 && beta > 0.0 && beta < 1.0) {
                return Err(Error::BadParameters(format!(
                    "margin hypotheses need M > 0 and beta in (0, 1), got M = {m}, beta = {beta}"
                )));
            }
            let reach = m.powf(beta);
            if !(y_star > reach) {
                return Err(Error::BadParameters(format!(
                    "peak y* = {y_star} must exceed M^beta = {reach}"
                )));
            }
            let a0 = y_star + reach;
            let b = DriftSpec::piecewise_margin(a0, 0.0);
            let b_bar = DriftSpec::piecewise_margin(a0, eps);
            let (xi_b, xi_b_bar) = pair_oracles(&b, &b_bar)?;
            let y1 = y_star - reach;
            let zeta = a0;
            let g = PayoffSpec::new(
                PayoffFamily::MarginTent {
                    m,
                    beta,
                    y_star,
                    xi: xi_b_bar.clone(),
                },
                y1,
                zeta,
            )?;
            let g_bar = PayoffSpec::new(
                PayoffFamily::MarginTent {
                    m,
                    beta,
                    y_star,
                    xi: xi_b.clone(),
                },
                y1,
                zeta,
            )?;
            Ok(HypothesisPair {
                mode,
                t,
                eps,
                b,
                b_bar,
                xi_b,
                xi_b_bar,
                g,
                g_bar: Some(g_bar),
                delta: None,
                c_a: None,
            })
        }
        HypothesisMode::General { m, a } => {
            if !(a > 0.0 && m > 0.0 && m < a / 2.0) {
                return Err(Error::BadParameters(format!(
                    "general hypotheses need a > 0 and 0 < M < a/2, got M = {m}, a = {a}"
                )));
            }
            let a0 = m + a;
            let ca = c_a(a);
            let delta = m * ca * eps / 2.0;
            let b = DriftSpec::piecewise_general(a, a0, 0.0);
            let b_bar = DriftSpec::piecewise_general(a, a0, eps);
            let (xi_b, xi_b_bar) = pair_oracles(&b, &b_bar)?;
            let y1 = a / 2.0 - m;
            let zeta = m + 1.5 * a;
            let g = PayoffSpec::new(
                PayoffFamily::TwoPeak {
                    m,
                    a,
                    delta,
                    xi: xi_b_bar.clone(),
                },
                y1,
                zeta,
            )?;
            Ok(HypothesisPair {
                mode,
                t,
                eps,
                b,
                b_bar,
                xi_b,
                xi_b_bar,
                g,
                g_bar: None,
                delta: Some(delta),
                c_a: Some(ca),
            })
        }
    }
}

fn pair_oracles(b: &DriftSpec, b_bar: &DriftSpec) -> Result<(Arc<XiOracle>, Arc<XiOracle>)> {
    let grid = common_law_grid(b, b_bar, crate::drift::DEFAULT_LAW_GRID);
    let law_b = InvariantLaw::on_grid(b, &grid)?;
    let law_bb = InvariantLaw::on_grid(b_bar, &grid)?;
    Ok((
        Arc::new(XiOracle::from_law(b, law_b)),
        Arc::new(XiOracle::from_law(b_bar, law_bb)),
    ))
}

impl HypothesisPair {
    /// Stationary KL divergence between the two path laws.
    pub fn kl(&self) -> Result<f64> {
        stationary_kl(&self.b, &self.b_bar, self.t, &self.xi_b.law, &self.xi_b_bar.law)
    }

    /// Regret scale: `T^{-1/(2-2β)}` in margin mode, `T^{-1/2}` otherwise.
    pub fn scale(&self) -> f64 {
        match self.mode {
            HypothesisMode::Margin { beta, .. } => self.t.powf(-1.0 / (2.0 - 2.0 * beta)),
            HypothesisMode::General { .. } => self.t.powf(-0.5),
        }
    }

    /// Level constant of the near-optimal set under `b̄` used by the
    /// construction: `c5^{1/β} / 2^{1/β}` in margin mode, and `δ / (2 s)`
    /// (half the separation gap) in general mode.
    pub fn nominal_c2(&self) -> f64 {
        match self.mode {
            HypothesisMode::Margin { m, beta, y_star } => {
                let c5 = c5(m, beta, y_star);
                (c5 / 2.0).powf(1.0 / beta)
            }
            HypothesisMode::General { .. } => self.delta.unwrap_or(0.0) / (2.0 * self.scale()),
        }
    }

    /// Dense default grid over the payoff window, with extra resolution
    /// around both candidate maximisers.
    pub fn default_grid(&self) -> Vec<f64> {
        let (y1, zeta) = (self.g.y1, self.g.zeta);
        let mut nodes = quad::linspace(y1, zeta, 20_001);
        let centres: Vec<f64> = match self.mode {
            HypothesisMode::Margin { y_star, .. } => vec![y_star],
            HypothesisMode::General { a, .. } => vec![a / 2.0, 1.5 * a + self.delta.unwrap_or(0.0)],
        };
        for c in centres {
            let w = 0.005;
            nodes.extend(quad::linspace((c - w).max(y1), (c + w).min(zeta), 10_001));
        }
        quad::merge_nodes(nodes)
    }

    /// `g/ξ_b` and `g/ξ_b̄` on a grid inside the window.
    pub fn ratio_profile(&self, x_grid: &[f64]) -> Result<RatioProfile> {
        let (y1, zeta) = (self.g.y1, self.g.zeta);
        let grid: Vec<f64> = x_grid.iter().copied().filter(|&x| in_window(x, y1, zeta)).collect();
        if grid.is_empty() {
            return Err(Error::EmptyWindow { y1, zeta });
        }
        let ratio_b = grid
            .iter()
            .map(|&x| self.xi_b.ratio(&self.g, x))
            .collect::<Result<Vec<_>>>()?;
        let ratio_b_bar = grid
            .iter()
            .map(|&x| self.xi_b_bar.ratio(&self.g, x))
            .collect::<Result<Vec<_>>>()?;
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(RatioProfile {
            phi_b: max(&ratio_b),
            phi_b_bar: max(&ratio_b_bar),
            grid,
            ratio_b,
            ratio_b_bar,
        })
    }
}

/// Constant `c5` of the margin construction.
pub fn c5(m: f64, beta: f64, y_star: f64) -> f64 {
    let sp = PI.sqrt();
    let base = m * beta * sp / (4.0 * (y_star + sp).powi(2) + 2.0 * beta * y_star * sp);
    base.powf(beta / (1.0 - beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub grid: Vec<f64>,
    pub ratio_b: Vec<f64>,
    pub ratio_b_bar: Vec<f64>,
    pub phi_b: f64,
    pub phi_b_bar: f64,
}

impl RatioProfile {
    pub fn regret_b(&self, i: usize) -> f64 {
        self.phi_b - self.ratio_b[i]
    }

    pub fn regret_b_bar(&self, i: usize) -> f64 {
        self.phi_b_bar - self.ratio_b_bar[i]
    }

    /// Smallest and largest grid point of `{y : regret_b(y) <= level}`.
    pub fn near_optimal_b(&self, level: f64) -> Option<(f64, f64)> {
        bounds(
            (0..self.grid.len())
                .filter(|&i| self.regret_b(i) <= level)
                .map(|i| self.grid[i]),
        )
    }

    /// Smallest and largest grid point of `{y : regret_b̄(y) <= level}`.
    pub fn near_optimal_b_bar(&self, level: f64) -> Option<(f64, f64)> {
        bounds(
            (0..self.grid.len())
                .filter(|&i| self.regret_b_bar(i) <= level)
                .map(|i| self.grid[i]),
        )
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    it.fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}

/// Outcome of checking
/// `{y : Φ_b̄ − g/ξ_b̄ ≤ c2 s} ⊆ {y : Φ_b − g/ξ_b > c3 s}` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub holds: bool,
    /// Regret scale `s`.
    pub scale: f64,
    /// Level constant used for the left-hand set.
    pub c2: f64,
    /// Largest `c3` for which the inclusion holds at `c2` (0 if it fails).
    pub c3: f64,
    /// Supremum of the `c2` values for which some `c3 > 0` works.
    pub c2_sup: f64,
    /// Extent of the left-hand set on the grid.
    pub left_set: Option<(f64, f64)>,
    /// Extent of `{y : Φ_b − g/ξ_b ≤ c2 s}`.
    pub near_optimal_b: Option<(f64, f64)>,
}

pub fn verify_separation(pair: &HypothesisPair, x_grid: &[f64]) -> Result<SeparationReport> {
    let profile = pair.ratio_profile(x_grid)?;
    let s = pair.scale();
    let c2 = pair.nominal_c2();
    let tol = 1e-12 * (1.0 + profile.phi_b.abs());
    let n = profile.grid.len();

    let level = c2 * s;
    let mut min_right = f64::INFINITY;
    for i in 0..n {
        if profile.regret_b_bar(i) <= level {
            min_right = min_right.min(profile.regret_b(i));
        }
    }
    let left_set = profile.near_optimal_b_bar(level);
    let c3 = if min_right.is_finite() && min_right > tol {
        min_right / s
    } else {
        0.0
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| profile.regret_b_bar(i).total_cmp(&profile.regret_b_bar(j)));
    let mut c2_sup = f64::INFINITY;
    for &i in &order {
        if profile.regret_b(i) <= tol {
            c2_sup = profile.regret_b_bar(i).max(0.0) / s;
            break;
        }
    }

    Ok(SeparationReport {
        holds: c3 > 0.0,
        scale: s,
        c2,
        c3,
        c2_sup,
        left_set,
        near_optimal_b: profile.near_optimal_b(level),
    })
}

/// Smallest `T` in `t_grid` from which on (for every larger grid value too)
/// both drifts pass the Σ check and the separation holds.
pub fn large_t_threshold(mode: HypothesisMode, t_grid: &[f64]) -> Result<Option<f64>> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut threshold = None;
    for &t in ts.iter().rev() {
        let pair = build_hypotheses(mode, t)?;
        let probes = probe_grid(&pair.b, 5.0, 4001);
        let ok = check_sigma_membership(&pair.b, &probes).ok
            && check_sigma_membership(&pair.b_bar, &probes).ok
            && verify_separation(&pair, &pair.default_grid())?.holds;
        if !ok {
            break;
        }
        threshold = Some(t);
    }
    Ok(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::PayoffSpec;

    #[test]
    fn xi_zero_at_origin() {
        let law = InvariantLaw::with_defaults(&DriftSpec::ou(0.5)).unwrap();
        assert_eq!(xi_true(&law, 0.0).unwrap(), 0.0);
        assert!(xi_true(&law, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn xi_margin_closed_form_examples() {
        let sp = PI.sqrt();
        for (eps, want) in [(0.0, 1.0 + sp), (0.1, 1.0 + 1.1 * sp)] {
            let spec = DriftSpec::piecewise_margin(3.0, eps);
            let law = InvariantLaw::with_defaults(&spec).unwrap();
            let got = xi_true(&law, 1.0).unwrap();
            assert!((got - want).abs() < 1e-4, "eps {eps}: {got} vs {want}");
            assert_eq!(xi_closed_form(&spec, 1.0).unwrap(), want);
        }
    }

    #[test]
    fn closed_form_range_enforced() {
        let spec = DriftSpec::piecewise_margin(3.0, 0.0);
        assert!(matches!(
            xi_closed_form(&spec, 3.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(xi_closed_form(&DriftSpec::ou(0.5), 1.0).is_err());
    }

    #[test]
    fn oracle_matches_direct_quadrature() {
        let spec = DriftSpec::ou(0.5);
        let oracle = XiOracle::new(&spec).unwrap();
        for x in [0.1, 0.5, 1.0, 1.7, 2.0] {
            let a = oracle.xi(x).unwrap();
            let b = xi_true(&oracle.law, x).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + b));
        }
    }

    #[test]
    fn sim_tent_regret_is_power_of_distance() {
        let oracle = XiOracle::shared(&DriftSpec::ou(0.5)).unwrap();
        let g = PayoffSpec::sim_tent(0.5, oracle.clone(), 0.1, 2.0).unwrap();
        let ro = RegretOracle::new(oracle, g).unwrap();
        assert!((ro.phi - 1.0).abs() < 1e-12);
        assert!((ro.y_star - 1.0).abs() < 1e-6);
        assert!((ro.regret(1.1).unwrap() - 0.01).abs() < 1e-9);
        assert!(ro.regret(1.0).unwrap() < 1e-9);
        assert!(matches!(ro.regret(2.5), Err(Error::InvalidThreshold { .. })));
    }

    #[test]
    fn kl_of_identical_drifts_is_zero() {
        let b = DriftSpec::piecewise_margin(2.5, 0.0);
        assert!(stationary_kl_default(&b, &b, 1e3).unwrap() < 1e-12);
    }

    #[test]
    fn c_a_value() {
        let want = 1.0 / (64.0 + 32.0 * PI.sqrt());
        assert!((c_a(1.0) - want).abs() < 1e-15);
        assert!((c_a(1.0) - 0.008284).abs() < 1e-6);
    }

    #[test]
    fn general_pair_parameters() {
        let pair = build_hypotheses(HypothesisMode::General { m: 0.2, a: 1.0 }, 1e4).unwrap();
        assert_eq!(pair.eps, 0.01);
        assert!((pair.delta.unwrap() - 0.1 * c_a(1.0) * 0.01).abs() < 1e-18);
        assert!(build_hypotheses(HypothesisMode::General { m: 0.6, a: 1.0 }, 1e4).is_err());
    }

    #[test]
    fn margin_pair_rejects_bad_parameters() {
        let bad = [
            HypothesisMode::Margin { m: 1.0, beta: 1.0, y_star: 1.5 },
            HypothesisMode::Margin { m: 1.0, beta: 0.5, y_star: 0.5 },
            HypothesisMode::Margin { m: -1.0, beta: 0.5, y_star: 1.5 },
        ];
        for mode in bad {
            assert!(matches!(build_hypotheses(mode, 1e4), Err(Error::BadParameters(_))));
        }
    }

    #[test]
    fn identical_drifts_do_not_separate() {
        let mut pair =
            build_hypotheses(HypothesisMode::Margin { m: 1.0, beta: 0.5, y_star: 1.5 }, 1e4).unwrap();
        pair.b_bar = pair.b.clone();
        pair.xi_b_bar = pair.xi_b.clone();
        pair.g = pair.g_bar.clone().unwrap();
        let grid = pair.default_grid();
        assert!(!verify_separation(&pair, &grid).unwrap().holds);
    }
}
