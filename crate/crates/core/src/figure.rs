//! Plot-ready aggregates of regret records: log mean regret against `log T`
//! (or against `T` for exponentially fast rates).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{summarize_regret, RegretRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureMode {
    /// `x = log T`.
    Loglog,
    /// `x = T`.
    Semilog,
}

impl FigureMode {
    /// `Semilog` for `β >= 1`, `Loglog` otherwise.
    pub fn for_beta(beta: f64) -> Self {
        if beta >= 1.0 {
            FigureMode::Semilog
        } else {
            FigureMode::Loglog
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub x: f64,
    /// `log` of the mean regret.
    pub y: f64,
    pub beta: f64,
    pub n_reps: usize,
    /// Standard error of `y` (delta method: `se(mean) / mean`).
    pub stderr: f64,
}

pub fn emit_figure_data(records: &[RegretRecord], mode: FigureMode) -> Result<Vec<FigureRow>> {
    let summaries = summarize_regret(records);
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(summaries
        .into_iter()
        .map(|s| FigureRow {
            x: match mode {
                FigureMode::Loglog => s.t.ln(),
                FigureMode::Semilog => s.t,
            },
            y: s.mean.ln(),
            beta: s.beta,
            n_reps: s.n,
            stderr: if s.mean > 0.0 { s.stderr / s.mean } else { f64::NAN },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, rep: usize, regret: f64) -> RegretRecord {
        RegretRecord {
            t,
            beta: 1.0,
            replication: rep,
            y_hat: 1.0,
            regret,
            seed: rep as u64,
            error: None,
        }
    }

    #[test]
    fn single_horizon_one_row() {
        let recs = vec![rec(100.0, 0, 0.1), rec(100.0, 1, 0.3)];
        let rows = emit_figure_data(&recs, FigureMode::Semilog).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].x, 100.0);
        assert!((rows[0].y - 0.2f64.ln()).abs() < 1e-12);
        assert_eq!(rows[0].n_reps, 2);
        assert!((rows[0].stderr - 0.1 / 0.2).abs() < 1e-12);
    }

    #[test]
    fn log_axis_and_empty_input() {
        let rows = emit_figure_data(&[rec(std::f64::consts::E, 0, 1.0)], FigureMode::Loglog).unwrap();
        assert!((rows[0].x - 1.0).abs() < 1e-15);
        assert_eq!(emit_figure_data(&[], FigureMode::Loglog), Err(Error::EmptyInput));
    }
}
