//! Run configuration: one TOML file, shared sections plus one section per
//! subcommand. See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use stoplab::drift::DriftClass;
use stoplab::experiments::{log_t_grid, EstimatorConstants};
use stoplab::oracle::HypothesisMode;
use stoplab::{BarrierSearch, DriftSpec, ExecMode, Kernel, PayoffFamily, PayoffSpec, XiOracle};

/// Schema violation, reported with the path of the offending key.
#[derive(Debug, thiserror::Error)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub master_seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub drift: DriftConfig,
    pub payoff: Option<PayoffConfig>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub simulate: Option<SimulateConfig>,
    pub estimate: Option<EstimateConfig>,
    pub sweep: Option<SweepConfig>,
    pub cumulative: Option<CumulativeConfig>,
    pub pac: Option<PacConfig>,
    pub hypotheses: Option<HypothesesConfig>,
    pub margin_check: Option<MarginCheckConfig>,
}

fn default_dt() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Ou,
    PiecewiseMargin,
    PiecewiseGeneral,
    /// Two-column CSV `(x, b(x))`.
    Tabulated,
}

/// Drift section. Which keys are required depends on `family`; unused keys
/// are rejected by [`Config::drift_spec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub family: DriftKind,
    pub slope: Option<f64>,
    pub a0: Option<f64>,
    pub a: Option<f64>,
    pub eps: Option<f64>,
    pub csv: Option<PathBuf>,
    pub class_c: Option<f64>,
    pub class_a: Option<f64>,
    pub class_gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    SimTent,
    MarginTent,
    TwoPeak,
    /// Two-column CSV `(x, g(x))`.
    Tabulated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub family: PayoffKind,
    pub y1: f64,
    pub zeta: f64,
    pub beta: Option<f64>,
    pub m: Option<f64>,
    pub y_star: Option<f64>,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub kernel: Kernel,
    /// Density floor `a`; defaults to half the minimum of the true density on `[0, ζ]`.
    pub floor_a: Option<f64>,
    /// Clamp `M1`; defaults to half of `ξ_b(y1)`.
    pub clamp_m1: Option<f64>,
    #[serde(default)]
    pub search: BarrierSearch,
}

/// Horizons either listed or as `n` log-spaced points `e^lo … e^hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizons {
    List(Vec<f64>),
    LogSpaced { log_lo: f64, log_hi: f64, n: usize },
}

impl Horizons {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Horizons::List(v) => v.clone(),
            Horizons::LogSpaced { log_lo, log_hi, n } => log_t_grid(*log_lo, *log_hi, *n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    /// When set, also run the impulse strategy with this fixed barrier.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    /// Observation length when the path is simulated.
    pub horizon: Option<f64>,
    /// Path to estimate from instead of simulating: CSV `(t, x)` on a uniform grid.
    pub path_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub horizons: Horizons,
    pub replications: usize,
    /// Tent exponents to sweep; only for `sim_tent` and `margin_tent` payoffs.
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub exec: ExecMode,
    /// Regret level for the empirical PAC frequency at the largest horizon.
    pub pac_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Margin,
    General,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulativeConfig {
    pub horizons: Horizons,
    pub replications: usize,
    #[serde(default = "default_block_len")]
    pub block_len: f64,
    pub schedule: ScheduleKind,
    /// Margin exponent used by the schedule; defaults to the payoff's `beta`.
    pub schedule_beta: Option<f64>,
    #[serde(default)]
    pub exec: ExecMode,
}

fn default_block_len() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacConfig {
    pub betas: Vec<f64>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c3: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    Margin,
    General,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesConfig {
    pub mode: HypothesisKind,
    pub m: f64,
    /// General mode.
    pub a: Option<f64>,
    /// Margin mode.
    pub beta: Option<f64>,
    /// Margin mode.
    pub y_star: Option<f64>,
    pub horizons: Vec<f64>,
}

impl HypothesesConfig {
    pub fn mode(&self) -> anyhow::Result<HypothesisMode> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| missing_key("hypotheses", key, self.mode));
        Ok(match self.mode {
            HypothesisKind::Margin => HypothesisMode::Margin {
                m: self.m,
                beta: need(self.beta, "beta")?,
                y_star: need(self.y_star, "y_star")?,
            },
            HypothesisKind::General => HypothesisMode::General { m: self.m, a: need(self.a, "a")? },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginCheckConfig {
    pub delta0: f64,
    pub n: usize,
    pub eta: f64,
    pub beta: f64,
    /// Grid step for tabulating `g/ξ_b` on `[y1, ζ]`.
    #[serde(default = "default_margin_step")]
    pub step: f64,
}

fn default_margin_step() -> f64 {
    1e-4
}

/// Parse `text` against the schema, reporting the path of the first bad key.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.into_inner().message().trim().to_string(),
    })
}

/// Load a config file; relative CSV paths are resolved against its directory.
pub fn load(path: &Path) -> anyhow::Result<Config> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let Some(csv) = &mut cfg.drift.csv {
        resolve(csv);
    }
    if let Some(PayoffConfig { csv: Some(csv), .. }) = &mut cfg.payoff {
        resolve(csv);
    }
    if let Some(EstimateConfig { path_csv: Some(p), .. }) = &mut cfg.estimate {
        resolve(p);
    }
    Ok(cfg)
}

/// SHA-256 of the canonical JSON form (keys sorted), so reordering keys in
/// the file does not change the hash.
pub fn hash(cfg: &Config) -> String {
    let value = serde_json::to_value(cfg).expect("config serialises");
    let canonical = serde_json::to_string(&value).expect("json value serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Read a two-column numeric CSV; a non-numeric first row is taken as a header.
pub fn read_two_columns(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        if row.len() != 2 {
            bail!("{}: row {} has {} columns, expected 2", path.display(), i + 1, row.len());
        }
        match (row[0].parse::<f64>(), row[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if i == 0 => continue,
            _ => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    Ok((xs, ys))
}

fn missing_key(section: &str, key: &str, family: impl std::fmt::Debug) -> anyhow::Error {
    ConfigError {
        path: format!("{section}.{key}"),
        message: format!("missing key `{key}` required by {family:?}"),
    }
    .into()
}

/// Reject keys that were set but mean nothing for the chosen family.
fn reject_unused(section: &str, family: impl std::fmt::Debug, unused: &[(&str, bool)]) -> anyhow::Result<()> {
    match unused.iter().find(|(_, set)| *set) {
        Some((key, _)) => Err(ConfigError {
            path: format!("{section}.{key}"),
            message: format!("key `{key}` is not used by {family:?}"),
        }
        .into()),
        None => Ok(()),
    }
}

impl Config {
    pub fn drift_spec(&self) -> anyhow::Result<DriftSpec> {
        let d = &self.drift;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| missing_key("drift", key, d.family));
        let tabulated_keys = [
            ("csv", d.csv.is_some()),
            ("class_c", d.class_c.is_some()),
            ("class_a", d.class_a.is_some()),
            ("class_gamma", d.class_gamma.is_some()),
        ];
        Ok(match d.family {
            DriftKind::Ou => {
                let mut unused = vec![("a0", d.a0.is_some()), ("a", d.a.is_some()), ("eps", d.eps.is_some())];
                unused.extend(tabulated_keys);
                reject_unused("drift", d.family, &unused)?;
                DriftSpec::ou(need(d.slope, "slope")?)
            }
            DriftKind::PiecewiseMargin => {
                let mut unused = vec![("slope", d.slope.is_some()), ("a", d.a.is_some())];
                unused.extend(tabulated_keys);
                reject_unused("drift", d.family, &unused)?;
                DriftSpec::piecewise_margin(need(d.a0, "a0")?, d.eps.unwrap_or(0.0))
            }
            DriftKind::PiecewiseGeneral => {
                let mut unused = vec![("slope", d.slope.is_some())];
                unused.extend(tabulated_keys);
                reject_unused("drift", d.family, &unused)?;
                DriftSpec::piecewise_general(need(d.a, "a")?, need(d.a0, "a0")?, d.eps.unwrap_or(0.0))
            }
            DriftKind::Tabulated => {
                reject_unused(
                    "drift",
                    d.family,
                    &[("slope", d.slope.is_some()), ("a0", d.a0.is_some()), ("a", d.a.is_some()), ("eps", d.eps.is_some())],
                )?;
                let csv = d.csv.as_ref().ok_or_else(|| missing_key("drift", "csv", d.family))?;
                let (grid, values) = read_two_columns(csv)?;
                let class = DriftClass {
                    c: need(d.class_c, "class_c")?,
                    a: need(d.class_a, "class_a")?,
                    gamma: need(d.class_gamma, "class_gamma")?,
                };
                DriftSpec::tabulated(grid, values, class)?
            }
        })
    }

    pub fn payoff_config(&self) -> anyhow::Result<&PayoffConfig> {
        self.payoff.as_ref().ok_or_else(|| missing("payoff"))
    }

    /// Payoff with its exponent replaced by `beta` (tent families only).
    pub fn payoff_spec(&self, xi: &Arc<XiOracle>, beta: Option<f64>) -> anyhow::Result<PayoffSpec> {
        let p = self.payoff_config()?;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| missing_key("payoff", key, p.family));
        let set = |v: &Option<f64>| v.is_some();
        let family = match p.family {
            PayoffKind::SimTent => {
                reject_unused(
                    "payoff",
                    p.family,
                    &[("m", set(&p.m)), ("y_star", set(&p.y_star)), ("a", set(&p.a)), ("delta", set(&p.delta)), ("csv", p.csv.is_some())],
                )?;
                PayoffFamily::SimTent { beta: beta.map_or_else(|| need(p.beta, "beta"), Ok)?, xi: xi.clone() }
            }
            PayoffKind::MarginTent => {
                reject_unused("payoff", p.family, &[("a", set(&p.a)), ("delta", set(&p.delta)), ("csv", p.csv.is_some())])?;
                PayoffFamily::MarginTent {
                    m: need(p.m, "m")?,
                    beta: beta.map_or_else(|| need(p.beta, "beta"), Ok)?,
                    y_star: need(p.y_star, "y_star")?,
                    xi: xi.clone(),
                }
            }
            PayoffKind::TwoPeak | PayoffKind::Tabulated if beta.is_some() => {
                bail!("payoff family {:?} has no exponent to sweep; remove `sweep.betas`", p.family)
            }
            PayoffKind::TwoPeak => {
                reject_unused("payoff", p.family, &[("beta", set(&p.beta)), ("y_star", set(&p.y_star)), ("csv", p.csv.is_some())])?;
                PayoffFamily::TwoPeak { m: need(p.m, "m")?, a: need(p.a, "a")?, delta: need(p.delta, "delta")?, xi: xi.clone() }
            }
            PayoffKind::Tabulated => {
                reject_unused(
                    "payoff",
                    p.family,
                    &[("beta", set(&p.beta)), ("m", set(&p.m)), ("y_star", set(&p.y_star)), ("a", set(&p.a)), ("delta", set(&p.delta))],
                )?;
                let csv = p.csv.as_ref().ok_or_else(|| missing_key("payoff", "csv", p.family))?;
                let (grid, values) = read_two_columns(csv)?;
                PayoffFamily::Tabulated { grid, values }
            }
        };
        Ok(PayoffSpec::new(family, p.y1, p.zeta)?)
    }

    /// The payoff's own exponent, used to label records (0 if it has none).
    pub fn payoff_beta(&self) -> f64 {
        self.payoff.as_ref().and_then(|p| p.beta).unwrap_or(0.0)
    }

    pub fn constants(&self, xi: &XiOracle) -> anyhow::Result<EstimatorConstants> {
        let p = self.payoff_config()?;
        let defaults = EstimatorConstants::from_oracle(xi, p.y1, p.zeta)?;
        Ok(EstimatorConstants {
            floor_a: self.estimator.floor_a.unwrap_or(defaults.floor_a),
            clamp_m1: self.estimator.clamp_m1.unwrap_or(defaults.clamp_m1),
        })
    }
}

pub fn missing(section: &str) -> anyhow::Error {
    ConfigError {
        path: section.to_string(),
        message: format!("missing section `{section}` required by this subcommand"),
    }
    .into()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
master_seed = 1
[drift]
family = "ou"
slope = 0.5
[payoff]
family = "sim_tent"
beta = 0.5
y1 = 0.1
zeta = 2.0
"#;

    #[test]
    fn parses_minimal() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.drift.family, DriftKind::Ou);
        assert_eq!(cfg.drift.slope, Some(0.5));
        assert_eq!(cfg.payoff_beta(), 0.5);
    }

    #[test]
    fn missing_drift_is_named() {
        let err = parse("master_seed = 1\n").unwrap_err();
        assert!(err.message.contains("drift"), "{err}");
    }

    #[test]
    fn bad_value_has_path() {
        let err = parse(&MINIMAL.replace("slope = 0.5", "slope = \"steep\"")).unwrap_err();
        assert_eq!(err.path, "drift.slope", "{err}");
    }

    #[test]
    fn family_specific_keys() {
        let cfg = parse(&MINIMAL.replace("slope = 0.5", "a0 = 3.0")).unwrap();
        let err = cfg.drift_spec().unwrap_err();
        let err = err.downcast_ref::<ConfigError>().unwrap();
        assert_eq!(err.path, "drift.a0");
        let cfg = parse(&MINIMAL.replace("family = \"ou\"", "family = \"piecewise_margin\"\na0 = 3.0").replace("slope = 0.5\n", "")).unwrap();
        assert!(cfg.drift_spec().is_ok());
    }

    #[test]
    fn hash_ignores_key_order() {
        let reordered = r#"
[payoff]
zeta = 2.0
y1 = 0.1
beta = 0.5
family = "sim_tent"
[drift]
slope = 0.5
family = "ou"
"#;
        let a = parse(MINIMAL).unwrap();
        let b = parse(&format!("master_seed = 1\n{reordered}")).unwrap();
        assert_eq!(hash(&a), hash(&b));
        let c = parse(&MINIMAL.replace("master_seed = 1", "master_seed = 2")).unwrap();
        assert_ne!(hash(&a), hash(&c));
    }

    #[test]
    fn horizons_forms() {
        let list: Horizons = toml::from_str::<SweepConfig>("horizons = [1.0, 2.0]\nreplications = 1")
            .unwrap()
            .horizons;
        assert_eq!(list.values(), vec![1.0, 2.0]);
        let spaced = toml::from_str::<SweepConfig>("horizons = { log_lo = 0.0, log_hi = 1.0, n = 2 }\nreplications = 1")
            .unwrap()
            .horizons;
        let v = spaced.values();
        assert!((v[1] - std::f64::consts::E).abs() < 1e-12);
    }
}
