//! Data-driven optimal stopping of scalar ergodic diffusions.
//!
//! The pipeline: simulate `dX = b(X) dt + dW` ([`sde`]), estimate the
//! expected hitting times `ξ_b` from the path without tuning parameters
//! ([`estimators`]), pick the barrier maximising `g/ξ̂`, and score it against
//! ground truth ([`oracle`]). [`experiments`] runs Monte Carlo sweeps over
//! horizons and replications, in parallel when the `parallel` feature is on.

pub mod drift;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod experiments;
pub mod figure;
pub mod oracle;
pub mod payoff;
pub mod quad;
pub mod sde;

pub use drift::{DriftClass, DriftFamily, DriftSpec, InvariantLaw};
pub use error::{Error, Result};
pub use estimators::{BarrierSearch, Kernel, PathEstimator, XiEstimate};
pub use exec::ExecMode;
pub use oracle::{RegretOracle, XiOracle};
pub use payoff::{PayoffFamily, PayoffSpec};
pub use sde::DiffusionPath;
