//! Drift functions of the diffusion `dX = b(X) dt + dW`, membership checks for
//! the ergodic class Σ(C, A, γ), and the invariant law by quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Minimum number of nodes accepted by [`InvariantLaw::new`].
pub const MIN_LAW_GRID: usize = 1000;

/// Default number of nodes used when an oracle law is built implicitly.
pub const DEFAULT_LAW_GRID: usize = 40_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DriftFamily {
    /// `b(x) = -slope * x`.
    Ou { slope: f64 },
    /// Margin-type hypothesis drift. Zero on `(0, a0]`, `-(x - a0)` beyond
    /// `a0`, and `-x / (1 + eps)^2` for `x <= 0`, so that the invariant mass
    /// left of zero scales like `(1 + eps) * sqrt(pi) / 2`.
    PiecewiseMargin { a0: f64, eps: f64 },
    /// General-case hypothesis drift. Equals `-x` for `x <= 0`, zero on
    /// `(0, a]`, `-eps (x - a)` on `(a, a0]` and `-(x - a0) - eps (a0 - a)`
    /// beyond `a0`. With `eps = 0` this is the unperturbed drift.
    PiecewiseGeneral { a: f64, a0: f64, eps: f64 },
    /// Linear interpolation of tabulated values on a sorted grid.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// Constants `(C, A, γ)` of the drift class Σ(C, A, γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftClass {
    pub c: f64,
    pub a: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub family: DriftFamily,
    pub class: DriftClass,
}

impl DriftSpec {
    /// Ornstein-Uhlenbeck drift with class constants C = max(1, slope),
    /// A = 5, γ = 0.5.
    pub fn ou(slope: f64) -> Self {
        Self {
            family: DriftFamily::Ou { slope },
            class: DriftClass {
                c: slope.max(1.0),
                a: 5.0,
                gamma: 0.5,
            },
        }
    }

    pub fn piecewise_margin(a0: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::PiecewiseMargin { a0, eps },
            class: DriftClass {
                c: 1.0,
                a: a0 + 1.0,
                gamma: 0.5,
            },
        }
    }

    pub fn piecewise_general(a: f64, a0: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::PiecewiseGeneral { a, a0, eps },
            class: DriftClass {
                c: 1.0,
                a: a0 + 1.0,
                gamma: 0.5,
            },
        }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, class: DriftClass) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::BadParameters(
                "tabulated drift needs at least two (x, b) pairs".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadParameters(
                "tabulated drift grid must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            family: DriftFamily::Tabulated { grid, values },
            class,
        })
    }

    pub fn with_class(mut self, class: DriftClass) -> Self {
        self.class = class;
        self
    }

    /// Evaluate `b(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match &self.family {
            DriftFamily::Ou { slope } => -slope * x,
            DriftFamily::PiecewiseMargin { a0, eps } => {
                if x <= 0.0 {
                    -x / ((1.0 + eps) * (1.0 + eps))
                } else if x <= *a0 {
                    0.0
                } else {
                    -(x - a0)
                }
            }
            DriftFamily::PiecewiseGeneral { a, a0, eps } => {
                if x <= 0.0 {
                    -x
                } else if x <= *a {
                    0.0
                } else if x <= *a0 {
                    -eps * (x - a)
                } else {
                    -(x - a0) - eps * (a0 - a)
                }
            }
            DriftFamily::Tabulated { grid, values } => quad::interp(grid, values, x)?,
        })
    }

    /// Points where the drift is not differentiable. Quadrature grids include
    /// them as nodes.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.family {
            DriftFamily::Ou { .. } => vec![0.0],
            DriftFamily::PiecewiseMargin { a0, .. } => vec![0.0, *a0],
            DriftFamily::PiecewiseGeneral { a, a0, .. } => vec![0.0, *a, *a0],
            DriftFamily::Tabulated { .. } => vec![0.0],
        }
    }

    /// Default half-width of the quadrature window, `A + 10/γ`, shrunk to
    /// the largest symmetric window a tabulated drift covers.
    pub fn default_x_max(&self) -> f64 {
        let x_max = self.class.a + 10.0 / self.class.gamma;
        match &self.family {
            DriftFamily::Tabulated { grid, .. } => x_max.min(-grid[0]).min(grid[grid.len() - 1]),
            _ => x_max,
        }
    }
}

/// Which Σ(C, A, γ) condition a probe point violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaCondition {
    /// `b` could not be evaluated, or a difference quotient is not finite.
    Lipschitz,
    /// `|b(x)| > C (1 + |x|)`.
    LinearGrowth,
    /// `b(x) sgn(x) > -γ` although `|x| > A`.
    InwardDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaViolation {
    pub x: f64,
    pub condition: SigmaCondition,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub ok: bool,
    pub violations: Vec<SigmaViolation>,
    /// Largest finite difference quotient `|b(x_{i+1}) - b(x_i)| / (x_{i+1} - x_i)`.
    pub max_difference_quotient: f64,
}

/// Check the three Σ(C, A, γ) conditions pointwise on `probe_grid`.
pub fn check_sigma_membership(spec: &DriftSpec, probe_grid: &[f64]) -> SigmaReport {
    const TOL: f64 = 1e-12;
    let DriftClass { c, a, gamma } = spec.class;
    let mut violations = Vec::new();
    let mut values = Vec::with_capacity(probe_grid.len());
    for &x in probe_grid {
        match spec.eval(x) {
            Ok(b) if b.is_finite() => {
                if b.abs() > c * (1.0 + x.abs()) + TOL {
                    violations.push(SigmaViolation {
                        x,
                        condition: SigmaCondition::LinearGrowth,
                        value: b,
                    });
                }
                if x.abs() > a && b * x.signum() > -gamma + TOL {
                    violations.push(SigmaViolation {
                        x,
                        condition: SigmaCondition::InwardDrift,
                        value: b * x.signum(),
                    });
                }
                values.push(Some(b));
            }
            Ok(b) => {
                violations.push(SigmaViolation {
                    x,
                    condition: SigmaCondition::Lipschitz,
                    value: b,
                });
                values.push(None);
            }
            Err(_) => {
                violations.push(SigmaViolation {
                    x,
                    condition: SigmaCondition::Lipschitz,
                    value: f64::NAN,
                });
                values.push(None);
            }
        }
    }
    let mut max_q = 0.0_f64;
    for i in 1..probe_grid.len() {
        if let (Some(b0), Some(b1)) = (values[i - 1], values[i]) {
            let h = probe_grid[i] - probe_grid[i - 1];
            if h > 0.0 {
                let q = (b1 - b0).abs() / h;
                if q.is_finite() {
                    max_q = max_q.max(q);
                } else {
                    violations.push(SigmaViolation {
                        x: probe_grid[i],
                        condition: SigmaCondition::Lipschitz,
                        value: q,
                    });
                }
            }
        }
    }
    SigmaReport {
        ok: violations.is_empty(),
        violations,
        max_difference_quotient: max_q,
    }
}

/// A probe grid covering `[-(A + margin), A + margin]` with `n` points.
pub fn probe_grid(spec: &DriftSpec, margin: f64, n: usize) -> Vec<f64> {
    let r = spec.class.a + margin;
    quad::linspace(-r, r, n)
}

/// Invariant density and distribution function of the diffusion, tabulated on
/// a grid spanning `[-X_max, X_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantLaw {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Natural log of `density`; finite even where `density` underflows.
    pub log_density: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Tail mass beyond the window plus a Richardson estimate of the
    /// quadrature error in the normalisation.
    pub normalization_error: f64,
    /// Index of the node at `x = 0`.
    pub zero_index: usize,
}

impl InvariantLaw {
    /// Tabulate the law on `n_grid` uniform nodes over `[-x_max, x_max]`
    /// (kinks of the drift and `0` are inserted as extra nodes).
    pub fn new(spec: &DriftSpec, x_max: f64, n_grid: usize) -> Result<Self> {
        if n_grid < MIN_LAW_GRID {
            return Err(Error::GridTooCoarse(format!(
                "invariant law needs at least {MIN_LAW_GRID} nodes, got {n_grid}"
            )));
        }
        if !(x_max > 0.0) {
            return Err(Error::BadParameters(format!("x_max must be positive, got {x_max}")));
        }
        let mut nodes = quad::linspace(-x_max, x_max, n_grid);
        nodes.extend(spec.kinks().into_iter().filter(|k| k.abs() < x_max));
        Self::on_grid(spec, &nodes)
    }

    /// Law with the default window `A + 10/γ` and [`DEFAULT_LAW_GRID`] nodes.
    pub fn with_defaults(spec: &DriftSpec) -> Result<Self> {
        Self::new(spec, spec.default_x_max(), DEFAULT_LAW_GRID)
    }

    /// Tabulate on caller-supplied nodes. Nodes are sorted and deduplicated;
    /// `0` is added if missing.
    pub fn on_grid(spec: &DriftSpec, nodes: &[f64]) -> Result<Self> {
        let grid = quad::merge_nodes(nodes.iter().copied().chain(std::iter::once(0.0)));
        if grid.len() < 3 {
            return Err(Error::GridTooCoarse("law grid needs at least 3 nodes".into()));
        }
        let zero_index = grid
            .iter()
            .position(|&x| x == 0.0)
            .expect("zero was inserted");
        let drift = grid
            .iter()
            .map(|&x| spec.eval(x))
            .collect::<Result<Vec<f64>>>()?;

        // potential U(x) = 2 ∫_0^x b
        let mut potential = vec![0.0; grid.len()];
        for i in zero_index + 1..grid.len() {
            potential[i] = potential[i - 1] + (grid[i] - grid[i - 1]) * (drift[i] + drift[i - 1]);
        }
        for i in (0..zero_index).rev() {
            potential[i] = potential[i + 1] - (grid[i + 1] - grid[i]) * (drift[i] + drift[i + 1]);
        }
        if potential.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite {
                step: 0,
                value: f64::NAN,
            });
        }
        let u_max = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = potential.iter().map(|u| (u - u_max).exp()).collect();
        let mass = quad::trapezoid(&grid, &shifted);
        let log_norm = u_max + mass.ln();
        let log_density: Vec<f64> = potential.iter().map(|u| u - log_norm).collect();
        let density: Vec<f64> = shifted.iter().map(|v| v / mass).collect();
        let cdf = quad::cumulative_trapezoid(&grid, &density);

        let richardson = (1.0 - quad::every_other_trapezoid(&grid, &density)).abs() / 3.0;
        let gamma = spec.class.gamma.max(f64::MIN_POSITIVE);
        let tails = (density[0] + density[density.len() - 1]) / (2.0 * gamma);

        Ok(Self {
            grid,
            density,
            log_density,
            cdf,
            normalization_error: tails + richardson,
            zero_index,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn x_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Linearly interpolated density; zero outside the window.
    pub fn density_at(&self, x: f64) -> f64 {
        quad::interp(&self.grid, &self.density, x).unwrap_or(0.0)
    }

    /// Linearly interpolated CDF, clamped to `[0, 1]` outside the window.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.x_min() {
            0.0
        } else if x >= self.x_max() {
            1.0
        } else {
            quad::interp(&self.grid, &self.cdf, x).expect("inside window")
        }
    }

    /// Minimum of the tabulated density over nodes in `[lo, hi]`, including
    /// the interpolated endpoints.
    pub fn min_density_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.density_at(lo).min(self.density_at(hi));
        for (x, d) in self.grid.iter().zip(&self.density) {
            if *x >= lo && *x <= hi {
                m = m.min(*d);
            }
        }
        m
    }

    /// Inverse-CDF transform of a uniform variate `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let idx = self.cdf.partition_point(|&c| c < u);
        if idx == 0 {
            return self.grid[0];
        }
        if idx >= self.grid.len() {
            return self.x_max();
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x1
        }
    }
}

/// Convenience wrapper for [`InvariantLaw::new`].
pub fn invariant_law(spec: &DriftSpec, x_max: f64, n_grid: usize) -> Result<InvariantLaw> {
    InvariantLaw::new(spec, x_max, n_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        assert_eq!(DriftSpec::ou(0.5).eval(2.0).unwrap(), -1.0);
        assert_eq!(DriftSpec::piecewise_margin(3.0, 0.0).eval(1.0).unwrap(), 0.0);
        for spec in [
            DriftSpec::ou(0.5),
            DriftSpec::piecewise_margin(3.0, 0.2),
            DriftSpec::piecewise_general(1.0, 1.2, 0.1),
        ] {
            assert_eq!(spec.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn piecewise_branches() {
        let m = DriftSpec::piecewise_margin(2.0, 0.1);
        assert_abs_diff_eq!(m.eval(-1.0).unwrap(), 1.0 / 1.21, epsilon = 1e-15);
        assert_eq!(m.eval(3.0).unwrap(), -1.0);
        let g = DriftSpec::piecewise_general(1.0, 1.2, 0.1);
        assert_eq!(g.eval(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(g.eval(1.1).unwrap(), -0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(g.eval(2.2).unwrap(), -1.0 - 0.02, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_rejects_outside() {
        let t = DriftSpec::tabulated(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, 0.0, -2.0],
            DriftClass { c: 2.0, a: 0.5, gamma: 0.5 },
        )
        .unwrap();
        assert_eq!(t.eval(0.5).unwrap(), -1.0);
        assert!(matches!(t.eval(1.5), Err(Error::OutOfRange { .. })));
        assert!(DriftSpec::tabulated(vec![0.0, 0.0], vec![1.0, 1.0], t.class).is_err());
    }

    #[test]
    fn sigma_membership_examples() {
        let ou = DriftSpec::ou(0.5).with_class(DriftClass { c: 1.0, a: 1.0, gamma: 0.5 });
        let probe = probe_grid(&ou, 4.0, 2001);
        assert!(check_sigma_membership(&ou, &probe).ok);

        let strict = ou.clone().with_class(DriftClass { c: 1.0, a: 1.0, gamma: 10.0 });
        let report = check_sigma_membership(&strict, &probe);
        assert!(!report.ok);
        let first = report
            .violations
            .iter()
            .filter(|v| v.condition == SigmaCondition::InwardDrift)
            .map(|v| v.x.abs())
            .fold(f64::INFINITY, f64::min);
        assert!(first > 1.0 && first < 1.01);

        // general-case hypotheses with A > M + a + γ
        let t: f64 = 1e4;
        let (m, a, gamma) = (0.5, 1.0, 0.5);
        let class = DriftClass { c: 1.0, a: m + a + gamma + 0.1, gamma };
        for eps in [0.0, t.powf(-0.5)] {
            let b = DriftSpec::piecewise_general(a, 1.5, eps).with_class(class);
            assert!(check_sigma_membership(&b, &probe_grid(&b, 3.0, 4001)).ok);
        }
    }

    #[test]
    fn ou_law_matches_standard_normal() {
        let spec = DriftSpec::ou(0.5);
        let law = InvariantLaw::with_defaults(&spec).unwrap();
        assert_abs_diff_eq!(law.density_at(0.0), 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-4);
        let sup = quad::linspace(-3.0, 3.0, 601)
            .into_iter()
            .map(|x| (law.density_at(x) - (-x * x / 2.0).exp() / (2.0 * PI).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "sup-norm error {sup}");
        assert!(law.cdf[0].abs() < 1e-12);
        assert_abs_diff_eq!(*law.cdf.last().unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.cdf_at(0.0), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn margin_law_left_mass() {
        // ∫_{-∞}^0 exp(2∫_0^z b) dz = sqrt(pi)/2 for the unperturbed margin drift
        let spec = DriftSpec::piecewise_margin(3.0, 0.0);
        let law = InvariantLaw::with_defaults(&spec).unwrap();
        let z = (law.density[law.zero_index]).recip();
        let left = law.cdf[law.zero_index] * z;
        assert_abs_diff_eq!(left, PI.sqrt() / 2.0, epsilon = 1e-4);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            InvariantLaw::new(&DriftSpec::ou(0.5), 25.0, 999),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn refinement_shrinks_normalization_error() {
        let spec = DriftSpec::piecewise_margin(2.5, 0.0);
        let errs: Vec<f64> = [1001, 2001, 4001, 8001]
            .iter()
            .map(|&n| InvariantLaw::new(&spec, spec.default_x_max(), n).unwrap().normalization_error)
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "{errs:?}");
        }
    }

    #[test]
    fn density_positive_on_window() {
        for spec in [
            DriftSpec::ou(0.5),
            DriftSpec::piecewise_margin(2.5, 0.1),
            DriftSpec::piecewise_general(1.0, 1.2, 0.1),
        ] {
            let law = InvariantLaw::with_defaults(&spec).unwrap();
            assert!(law.min_density_on(0.0, 2.0) > 0.0);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = InvariantLaw::with_defaults(&DriftSpec::ou(0.5)).unwrap();
        assert_abs_diff_eq!(law.quantile(0.5), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(law.quantile(0.975), 1.959964, epsilon = 1e-3);
    }
}
