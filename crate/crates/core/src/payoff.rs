//! Payoff families, class membership checks, the margin-condition checker and
//! the vicinity check between two payoffs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{refine_argmax, window_grid, window_step, XiOracle, REFINE_LEVELS, REFINE_POINTS};
use crate::quad;

#[derive(Debug, Clone)]
pub enum PayoffFamily {
    /// `g(x) = (1 − |1 − x|^{1/β}) · ξ_b(x)`.
    SimTent { beta: f64, xi: Arc<XiOracle> },
    /// `g(y) = (M − |y − y*|^{1/β}) · ξ(y)`.
    MarginTent {
        m: f64,
        beta: f64,
        y_star: f64,
        xi: Arc<XiOracle>,
    },
    /// Two tents `M − |y − a/2|` on `(0, a)` and `M − δ − |y − 3a/2 − δ|` on
    /// `[a, ∞)`, times `ξ(y)`.
    TwoPeak {
        m: f64,
        a: f64,
        delta: f64,
        xi: Arc<XiOracle>,
    },
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct PayoffSpec {
    pub family: PayoffFamily,
    pub y1: f64,
    pub zeta: f64,
    /// Bound on `|g|` over `[y1, zeta]`.
    pub m_bound: f64,
}

impl PayoffSpec {
    /// Validate the window and compute `m_bound` as the maximum of `|g|` over
    /// the default window grid.
    pub fn new(family: PayoffFamily, y1: f64, zeta: f64) -> Result<Self> {
        if !(y1 > 0.0 && y1 < zeta) {
            return Err(Error::BadParameters(format!(
                "payoff window needs 0 < y1 < zeta, got [{y1}, {zeta}]"
            )));
        }
        match &family {
            PayoffFamily::SimTent { beta, .. } if !(*beta > 0.0) => {
                return Err(Error::BadParameters(format!("beta must be positive, got {beta}")))
            }
            PayoffFamily::MarginTent { m, beta, .. } if !(*m > 0.0 && *beta > 0.0) => {
                return Err(Error::BadParameters("tent needs M > 0 and beta > 0".into()))
            }
            PayoffFamily::TwoPeak { m, a, delta, .. } if !(*m > 0.0 && *a > 0.0 && *delta >= 0.0) => {
                return Err(Error::BadParameters("two-peak payoff needs M, a > 0 and delta >= 0".into()))
            }
            PayoffFamily::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::BadParameters(
                        "tabulated payoff needs a strictly increasing grid with matching values".into(),
                    ));
                }
            }
            _ => {}
        }
        let mut spec = Self {
            family,
            y1,
            zeta,
            m_bound: f64::INFINITY,
        };
        let (mut bound, mut arg) = (0.0, y1);
        for x in window_grid(y1, zeta) {
            let v = spec.eval(x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { step: 0, value: v });
            }
            if v.abs() > bound {
                bound = v.abs();
                arg = x;
            }
        }
        // the grid maximum may miss the true supremum by O(step²); zoom in
        let (_, refined) = refine_argmax(
            |x| Ok(spec.eval(x)?.abs()),
            y1,
            zeta,
            arg,
            window_step(y1, zeta),
            REFINE_LEVELS,
            REFINE_POINTS,
        )?;
        spec.m_bound = bound.max(refined);
        Ok(spec)
    }

    pub fn sim_tent(beta: f64, xi: Arc<XiOracle>, y1: f64, zeta: f64) -> Result<Self> {
        Self::new(PayoffFamily::SimTent { beta, xi }, y1, zeta)
    }

    pub fn with_bound(mut self, m_bound: f64) -> Self {
        self.m_bound = m_bound;
        self
    }

    /// The factor `f` with `g = f · ξ`, for families built that way.
    pub fn shape_factor(&self, x: f64) -> Option<f64> {
        match &self.family {
            PayoffFamily::SimTent { beta, .. } => Some(1.0 - (1.0 - x).abs().powf(1.0 / beta)),
            PayoffFamily::MarginTent { m, beta, y_star, .. } => {
                Some(m - (x - y_star).abs().powf(1.0 / beta))
            }
            PayoffFamily::TwoPeak { m, a, delta, .. } => Some(if x < *a {
                m - (x - a / 2.0).abs()
            } else {
                m - delta - (x - 1.5 * a - delta).abs()
            }),
            PayoffFamily::Tabulated { .. } => None,
        }
    }

    fn reference(&self) -> Option<&Arc<XiOracle>> {
        match &self.family {
            PayoffFamily::SimTent { xi, .. }
            | PayoffFamily::MarginTent { xi, .. }
            | PayoffFamily::TwoPeak { xi, .. } => Some(xi),
            PayoffFamily::Tabulated { .. } => None,
        }
    }

    /// `Some(f(x))` if this payoff is `f · ξ` for exactly the given oracle.
    pub fn shape_factor_for(&self, oracle: &XiOracle, x: f64) -> Result<Option<f64>> {
        if x <= 0.0 {
            return Err(Error::OutOfDomain { x });
        }
        match self.reference() {
            Some(xi) if std::ptr::eq(Arc::as_ptr(xi), oracle) => Ok(self.shape_factor(x)),
            _ => Ok(None),
        }
    }

    /// `g(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_payoff(self, x)
    }
}

pub fn eval_payoff(payoff: &PayoffSpec, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::OutOfDomain { x });
    }
    match &payoff.family {
        PayoffFamily::Tabulated { grid, values } => quad::interp(grid, values, x),
        _ => {
            let xi = payoff.reference().expect("analytic family").xi(x)?;
            Ok(payoff.shape_factor(x).expect("analytic family") * xi)
        }
    }
}

/// Parameters `(Δ0, n, η, β)` of the margin condition: every near-optimal set
/// `{x : sup f − f(x) ≤ Δ}`, `Δ ≤ Δ0`, is covered by `n` intervals of length
/// `η Δ^β` centred at maximisers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginParams {
    pub delta0: f64,
    pub n: usize,
    pub eta: f64,
    pub beta: f64,
}

impl MarginParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta0 > 0.0 && self.delta0 < 1.0 && self.n >= 1 && self.eta > 0.0 && self.beta > 0.0 {
            Ok(())
        } else {
            Err(Error::BadParameters(format!("invalid margin parameters {self:?}")))
        }
    }
}

/// 20 log-spaced levels in `[1e-4, Δ0]`.
pub fn default_delta_grid(delta0: f64) -> Vec<f64> {
    let (lo, hi) = (1e-4_f64.ln(), delta0.ln());
    (0..20).map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginWitness {
    pub delta: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub ok: bool,
    pub maximizers: Vec<f64>,
    /// Outermost uncovered points of each failing level (at most two per Δ).
    pub witnesses: Vec<MarginWitness>,
}

pub fn check_margin(
    grid: &[f64],
    values: &[f64],
    params: &MarginParams,
    delta_grid: &[f64],
) -> Result<MarginReport> {
    params.validate()?;
    if grid.len() < 2 || grid.len() != values.len() {
        return Err(Error::BadParameters("grid and values must match and have length >= 2".into()));
    }
    if delta_grid.is_empty() || delta_grid.iter().any(|&d| !(d > 0.0 && d <= params.delta0)) {
        return Err(Error::BadParameters("levels must lie in (0, delta0]".into()));
    }
    let min_delta = delta_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let needed = min_delta.powf(params.beta) * params.eta / 10.0;
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if step > needed {
        return Err(Error::GridTooCoarse(format!(
            "grid step {step} exceeds (min delta)^beta * eta / 10 = {needed}"
        )));
    }

    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-12 * (1.0 + sup.abs());
    let mut maximizers: Vec<f64> = Vec::new();
    let mut last_idx: Option<usize> = None;
    let mut cluster: Vec<f64> = Vec::new();
    let flush = |cluster: &mut Vec<f64>, out: &mut Vec<f64>| {
        if !cluster.is_empty() {
            out.push(cluster[cluster.len() / 2]);
            cluster.clear();
        }
    };
    for (i, &v) in values.iter().enumerate() {
        if v >= sup - tie {
            if last_idx.is_some_and(|j| i != j + 1) {
                flush(&mut cluster, &mut maximizers);
            }
            cluster.push(grid[i]);
            last_idx = Some(i);
        }
    }
    flush(&mut cluster, &mut maximizers);
    maximizers.truncate(params.n);

    let mut witnesses = Vec::new();
    for &delta in delta_grid {
        let half = params.eta * delta.powf(params.beta) / 2.0;
        let mut failing: Vec<f64> = Vec::new();
        for (&x, &v) in grid.iter().zip(values) {
            if sup - v <= delta {
                let slack = 1e-9 * (1.0 + x.abs());
                let covered = maximizers.iter().any(|&m| (x - m).abs() <= half + slack);
                if !covered {
                    failing.push(x);
                }
            }
        }
        if let (Some(&lo), Some(&hi)) = (failing.first(), failing.last()) {
            witnesses.push(MarginWitness { delta, x: lo });
            if hi != lo {
                witnesses.push(MarginWitness { delta, x: hi });
            }
        }
    }
    Ok(MarginReport {
        ok: witnesses.is_empty(),
        maximizers,
        witnesses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignNearZero {
    /// `g < 0` on a right neighbourhood of 0, as the class requires.
    Negative,
    /// `g(0+) = 0` with `g > 0` right of 0: accepted but flagged.
    ZeroBoundary,
    /// `g(0+) > 0`: not in the class.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGReport {
    pub ok: bool,
    pub sign_near_zero: SignNearZero,
    /// First grid point with `g > 0` after the negative stretch.
    pub first_positive: Option<f64>,
    /// `None` when the check is skipped (boundary case).
    pub y1_matches: Option<bool>,
    pub sup_abs: f64,
    pub bound_ok: bool,
    /// Per drift: whether `g/ξ_b` attains its supremum over `(0, 3ζ]` inside
    /// `(0, ζ]`.
    pub maximizer_in_window: Vec<bool>,
}

/// Grid-based class membership checks for `g` against a set of drifts.
pub fn check_class_g(payoff: &PayoffSpec, drifts: &[Arc<XiOracle>], grid: &[f64]) -> Result<ClassGReport> {
    let grid: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    if grid.len() < 2 {
        return Err(Error::GridTooCoarse("class check needs a grid on (0, inf)".into()));
    }
    let values = grid.iter().map(|&x| payoff.eval(x)).collect::<Result<Vec<_>>>()?;
    let (y1, zeta) = (payoff.y1, payoff.zeta);

    let scale = payoff.m_bound.max(f64::MIN_POSITIVE);
    let x_tiny = (1e-6 * zeta).min(grid[0]);
    // tabulated payoffs may not reach below the first grid point
    let g_tiny = payoff.eval(x_tiny).unwrap_or(values[0]);
    let sign_near_zero = if values[0] < 0.0 {
        SignNearZero::Negative
    } else if g_tiny.abs() <= 1e-6 * scale {
        SignNearZero::ZeroBoundary
    } else {
        SignNearZero::Positive
    };

    let first_positive = grid.iter().zip(&values).find(|(_, &v)| v > 0.0).map(|(&x, _)| x);
    let y1_matches = match (sign_near_zero, first_positive) {
        (SignNearZero::Negative, Some(xp)) => {
            let i = grid.iter().position(|&x| x == xp).expect("grid point");
            let h = grid[i] - grid[i.saturating_sub(1)];
            Some((xp - y1).abs() <= h.max(1e-12) * 1.5)
        }
        (SignNearZero::Negative, None) => Some(false),
        _ => None,
    };

    let mut sup_abs: f64 = 0.0;
    for (&x, &v) in grid.iter().zip(&values) {
        if x >= y1 && x <= zeta {
            sup_abs = sup_abs.max(v.abs());
        }
    }
    let bound_ok = sup_abs <= payoff.m_bound * (1.0 + 1e-9);

    let mut maximizer_in_window = Vec::with_capacity(drifts.len());
    for oracle in drifts {
        let (mut inside, mut outside) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &x in grid.iter().filter(|&&x| x <= 3.0 * zeta) {
            let r = oracle.ratio(payoff, x)?;
            if x <= zeta {
                inside = inside.max(r);
            } else {
                outside = outside.max(r);
            }
        }
        maximizer_in_window.push(inside >= outside - 1e-12 * (1.0 + inside.abs()));
    }

    let ok = sign_near_zero != SignNearZero::Positive
        && y1_matches != Some(false)
        && bound_ok
        && maximizer_in_window.iter().all(|&b| b);
    Ok(ClassGReport {
        ok,
        sign_near_zero,
        first_positive,
        y1_matches,
        sup_abs,
        bound_ok,
        maximizer_in_window,
    })
}

/// Checks, for every `c` in `c_grid`, the grid inclusion
/// `{Φ_b(g) − g/ξ_b > κ c s} ⊆ {Φ_b(ḡ) − ḡ/ξ_b > c s}` with
/// `s = T^{-1/(2−2β)}`.
#[allow(clippy::too_many_arguments)]
pub fn check_vicinity(
    g: &PayoffSpec,
    g_bar: &PayoffSpec,
    oracle: &XiOracle,
    kappa: f64,
    beta: f64,
    t: f64,
    c_grid: &[f64],
    x_grid: &[f64],
) -> Result<bool> {
    let s = t.powf(-1.0 / (2.0 - 2.0 * beta));
    let r = x_grid.iter().map(|&x| oracle.ratio(g, x)).collect::<Result<Vec<_>>>()?;
    let r_bar = x_grid.iter().map(|&x| oracle.ratio(g_bar, x)).collect::<Result<Vec<_>>>()?;
    let phi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi_bar = r_bar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &c in c_grid {
        for i in 0..x_grid.len() {
            if phi - r[i] > kappa * c * s && phi_bar - r_bar[i] <= c * s {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
