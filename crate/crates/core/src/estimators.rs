//! Plug-in estimators from one observed path: kernel density `ρ̂_T` with the
//! fixed bandwidth `T^{-1/2}`, occupation-time CDF `F̂_T`, the hitting-time
//! estimate `ξ̂_T`, and the estimated barrier `ŷ_T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{in_window, REFINE_LEVELS, REFINE_POINTS};
use crate::payoff::PayoffSpec;
use crate::quad;
use crate::sde::{DiffusionPath, Occupation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `0.75 (1 − u²)` on `[−1, 1]`.
    #[default]
    Epanechnikov,
    /// `1/2` on `[−1, 1]`.
    Uniform,
    /// `1 − |u|` on `[−1, 1]`.
    Triangular,
}

impl Kernel {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Uniform => 0.5,
            Kernel::Triangular => 1.0 - u.abs(),
        }
    }

    pub fn support_radius(self) -> f64 {
        1.0
    }
}

/// `ρ̂_T(x) = (1/T) Σ_k K_T(x − X_k) dt` with `K_T(u) = √T K(u √T)`, summed
/// directly over the left-endpoint samples.
pub fn density_estimate(path: &DiffusionPath, kernel: Kernel, x: f64) -> f64 {
    let occ = path.occupation();
    let t = occ.horizon();
    let sqrt_t = t.sqrt();
    let sum: f64 = occ.samples.iter().map(|&xk| kernel.eval((x - xk) * sqrt_t)).sum();
    sum * sqrt_t * occ.dt / t
}

/// Fraction of left-endpoint samples strictly below `x`.
pub fn cdf_estimate(path: &DiffusionPath, x: f64) -> f64 {
    let occ = path.occupation();
    occ.samples.iter().filter(|&&xk| xk < x).count() as f64 / occ.samples.len() as f64
}

/// Sorted copy of the samples for fast repeated evaluation of `ρ̂_T` and
/// `F̂_T`.
#[derive(Debug, Clone)]
pub struct PathEstimator {
    sorted: Vec<f64>,
    kernel: Kernel,
    horizon: f64,
    bandwidth: f64,
}

impl PathEstimator {
    pub fn new(occ: Occupation<'_>, kernel: Kernel) -> Result<Self> {
        if occ.samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = occ.samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let horizon = occ.horizon();
        Ok(Self {
            sorted,
            kernel,
            horizon,
            bandwidth: horizon.powf(-0.5),
        })
    }

    pub fn from_path(path: &DiffusionPath, kernel: Kernel) -> Result<Self> {
        Self::new(path.occupation(), kernel)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn min_sample(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max_sample(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn rho(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted.partition_point(|&v| v < x - h);
        let hi = self.sorted.partition_point(|&v| v <= x + h);
        let sum: f64 = self.sorted[lo..hi].iter().map(|&v| self.kernel.eval((x - v) / h)).sum();
        sum / (h * self.sorted.len() as f64)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.sorted.len() as f64
    }

    /// `ξ̂_T` on `grid` (which must start at 0) with density floor `a` and
    /// lower clamp `M1/2`.
    pub fn xi_hat(&self, grid: &[f64], floor_a: f64, clamp_m1: f64) -> Result<XiEstimate> {
        if !(floor_a > 0.0 && clamp_m1 > 0.0) {
            return Err(Error::BadParameters(format!(
                "floor a and clamp M1 must be positive, got a = {floor_a}, M1 = {clamp_m1}"
            )));
        }
        if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadParameters(
                "xi grid must be strictly increasing and start at 0".into(),
            ));
        }
        let integrand: Vec<f64> = grid.iter().map(|&x| self.integrand(x, floor_a)).collect();
        let raw: Vec<f64> = quad::cumulative_trapezoid(grid, &integrand)
            .into_iter()
            .map(|v| 2.0 * v)
            .collect();
        let floor = clamp_m1 / 2.0;
        Ok(XiEstimate {
            grid: grid.to_vec(),
            xi_values: raw.iter().map(|&v| v.max(floor)).collect(),
            raw_values: raw,
            integrand,
            floor_a,
            clamp_m1,
            t: self.horizon,
        })
    }

    #[inline]
    fn integrand(&self, x: f64, floor_a: f64) -> f64 {
        self.cdf(x) / self.rho(x).max(floor_a)
    }

    /// Raw `ξ̂_T` (before the clamp) at `nodes`, continuing the cumulative
    /// trapezoid from the value `raw0` at `x0`, where the integrand is `f0`.
    fn continue_from(&self, x0: f64, raw0: f64, f0: f64, nodes: &[f64], floor_a: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(nodes.len());
        let (mut xp, mut fp, mut acc) = (x0, f0, raw0);
        for &x in nodes {
            let f = self.integrand(x, floor_a);
            acc += (x - xp) * (f + fp);
            out.push(acc);
            xp = x;
            fp = f;
        }
        out
    }
}

/// `ξ̂_T` tabulated on a grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub grid: Vec<f64>,
    pub xi_values: Vec<f64>,
    /// The cumulative integral before the `M1/2` clamp.
    pub raw_values: Vec<f64>,
    /// `F̂_T / max(ρ̂_T, a)` on the grid.
    pub integrand: Vec<f64>,
    pub floor_a: f64,
    pub clamp_m1: f64,
    pub t: f64,
}

impl XiEstimate {
    pub fn value_at(&self, x: f64) -> Result<f64> {
        quad::interp(&self.grid, &self.xi_values, x)
    }
}

/// `ξ̂_T` straight from a path.
pub fn xi_hat(
    path: &DiffusionPath,
    kernel: Kernel,
    grid: &[f64],
    floor_a: f64,
    clamp_m1: f64,
) -> Result<XiEstimate> {
    PathEstimator::from_path(path, kernel)?.xi_hat(grid, floor_a, clamp_m1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub y_hat: f64,
    pub value: f64,
}

/// Smallest grid point of `[y1, ζ]` maximising `g/ξ̂_T`.
pub fn estimate_barrier(xi_est: &XiEstimate, payoff: &PayoffSpec, y1: f64, zeta: f64) -> Result<Barrier> {
    Ok(grid_argmax(xi_est, payoff, y1, zeta)?.1)
}

fn grid_argmax(xi_est: &XiEstimate, payoff: &PayoffSpec, y1: f64, zeta: f64) -> Result<(usize, Barrier)> {
    let mut best: Option<(usize, Barrier)> = None;
    for (i, (&x, &xi)) in xi_est.grid.iter().zip(&xi_est.xi_values).enumerate() {
        if !in_window(x, y1, zeta) {
            continue;
        }
        let v = payoff.eval(x)? / xi;
        if best.is_none_or(|(_, b)| v > b.value) {
            best = Some((i, Barrier { y_hat: x, value: v }));
        }
    }
    best.ok_or(Error::EmptyWindow { y1, zeta })
}

/// How the maximiser of `g/ξ̂_T` is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierSearch {
    /// Grid maximiser only.
    Grid,
    /// Grid maximiser followed by local zoom refinement, with `ξ̂_T`
    /// evaluated off-grid by continuing its cumulative integral.
    #[default]
    Refined,
}

/// Barrier estimate with the chosen search. The refined search re-evaluates
/// `ρ̂_T` and `F̂_T` between grid nodes so that `ŷ_T` is not quantised to the
/// grid step.
pub fn estimate_barrier_with(
    est: &PathEstimator,
    xi_est: &XiEstimate,
    payoff: &PayoffSpec,
    y1: f64,
    zeta: f64,
    search: BarrierSearch,
) -> Result<Barrier> {
    let (k, coarse) = grid_argmax(xi_est, payoff, y1, zeta)?;
    if search == BarrierSearch::Grid {
        return Ok(coarse);
    }
    let grid = &xi_est.grid;
    let start = k.saturating_sub(1);
    let end = (k + 1).min(grid.len() - 1);
    let clamp = xi_est.clamp_m1 / 2.0;
    let a = xi_est.floor_a;
    let mut best = coarse;
    // Each level integrates the estimator afresh on a fine uniform bracket,
    // starting from the already known cumulative value at its left end.
    let (mut x0, mut raw0, mut f0) = (grid[start], xi_est.raw_values[start], xi_est.integrand[start]);
    let mut x_end = grid[end];
    for _ in 0..REFINE_LEVELS {
        if x_end <= x0 {
            break;
        }
        let nodes = quad::linspace(x0, x_end, REFINE_POINTS);
        let raw = est.continue_from(x0, raw0, f0, &nodes[1..], a);
        let mut level_best: Option<(usize, f64)> = None;
        for (j, &x) in nodes.iter().enumerate() {
            if !in_window(x, y1, zeta) || x <= 0.0 {
                continue;
            }
            let r = if j == 0 { raw0 } else { raw[j - 1] };
            let v = payoff.eval(x)? / r.max(clamp);
            if level_best.is_none_or(|(_, bv)| v > bv) {
                level_best = Some((j, v));
            }
        }
        let Some((j, v)) = level_best else { break };
        if v >= best.value {
            best = Barrier { y_hat: nodes[j], value: v };
        }
        let lo = j.saturating_sub(1);
        let hi = (j + 1).min(nodes.len() - 1);
        x0 = nodes[lo];
        raw0 = if lo == 0 { raw0 } else { raw[lo - 1] };
        f0 = est.integrand(x0, a);
        x_end = nodes[hi];
    }
    Ok(best)
}

/// Default ξ̂ grid: `[0, ζ]` with step `min(1e-3, (ζ − y1)/2000)`, and `y1`
/// inserted as a node.
pub fn default_xi_grid(y1: f64, zeta: f64) -> Vec<f64> {
    let step = crate::oracle::window_step(y1, zeta);
    quad::merge_nodes(quad::arange_inclusive(0.0, zeta, step).into_iter().chain([y1]))
}
