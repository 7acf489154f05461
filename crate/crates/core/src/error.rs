use thiserror::Error;

/// Errors raised by the simulation, estimation and oracle layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("x = {x} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("payoff evaluated at x = {x}, but its domain is (0, inf)")]
    OutOfDomain { x: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("non-finite sample at step {step} (state {value})")]
    NonFinite { step: usize, value: f64 },
    #[error("threshold {y} outside the admissible window [{y1}, {zeta}]")]
    InvalidThreshold { y: f64, y1: f64, zeta: f64 },
    #[error("no grid point falls in the window [{y1}, {zeta}]")]
    EmptyWindow { y1: f64, zeta: f64 },
    #[error("negative regret {regret} beyond tolerance {tol}")]
    NegativeRegret { regret: f64, tol: f64 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, Error>;
