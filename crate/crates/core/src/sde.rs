//! Euler-Maruyama simulation of `dX = b(X) dt + dW`, first hitting times, and
//! impulse-controlled trajectories that restart at 0 after every stop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::drift::{DriftSpec, InvariantLaw};
use crate::error::{Error, Result};
use crate::payoff::PayoffSpec;

/// Largest accepted time step.
pub const MAX_DT: f64 = 0.05;

/// Seeded generator used for every simulated path.
pub type PathRng = ChaCha8Rng;

pub fn path_rng(seed: u64) -> PathRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Noise source for the Euler scheme. `Zero` gives the deterministic Euler
/// recursion and is meant for debugging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Gaussian,
    Zero,
}

/// Initial state of a simulated path.
#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    Fixed(f64),
    /// Draw `X_0` from the invariant law by inverse-CDF sampling.
    Stationary(&'a InvariantLaw),
}

/// One Euler-Maruyama step driver with its own generator.
pub struct EulerStepper<'a> {
    drift: &'a DriftSpec,
    dt: f64,
    sqrt_dt: f64,
    rng: PathRng,
    noise: Noise,
    steps: usize,
}

impl<'a> EulerStepper<'a> {
    pub fn new(drift: &'a DriftSpec, dt: f64, seed: u64, noise: Noise) -> Result<Self> {
        check_dt(dt)?;
        Ok(Self {
            drift,
            dt,
            sqrt_dt: dt.sqrt(),
            rng: path_rng(seed),
            noise,
            steps: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rng_mut(&mut self) -> &mut PathRng {
        &mut self.rng
    }

    /// `x + b(x) dt + sqrt(dt) Z`.
    #[inline]
    pub fn step(&mut self, x: f64) -> Result<f64> {
        let z = self.step_noise();
        self.step_with(x, z)
    }

    /// Step with an externally supplied standard normal `z`.
    #[inline]
    pub fn step_with(&mut self, x: f64, z: f64) -> Result<f64> {
        self.steps += 1;
        let next = x + self.drift.eval(x)? * self.dt + self.sqrt_dt * z;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::NonFinite {
                step: self.steps,
                value: next,
            })
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt <= MAX_DT {
        Ok(())
    } else {
        Err(Error::BadParameters(format!(
            "time step must lie in (0, {MAX_DT}], got {dt}"
        )))
    }
}

/// Discretised trajectory `X_0, X_dt, X_2dt, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPath {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub x0: f64,
}

impl DiffusionPath {
    /// Build a path from recorded samples (e.g. read from CSV).
    pub fn from_samples(dt: f64, samples: Vec<f64>, seed: u64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::BadParameters("a path needs at least two samples".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::BadParameters(format!("time step must be positive, got {dt}")));
        }
        let x0 = samples[0];
        Ok(Self { dt, samples, seed, x0 })
    }

    /// Horizon `T = dt * (len - 1)`.
    pub fn horizon(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    /// Left-endpoint samples `X_0, ..., X_{n-1}`, each carrying weight `dt`.
    pub fn occupation(&self) -> Occupation<'_> {
        Occupation {
            dt: self.dt,
            samples: &self.samples[..self.samples.len() - 1],
        }
    }

    /// Prefix of this path up to horizon `t` (rounded up to the time grid).
    pub fn prefix(&self, t: f64) -> Result<DiffusionPath> {
        let n = steps_for(t, self.dt);
        if n + 1 > self.samples.len() {
            return Err(Error::BadParameters(format!(
                "prefix horizon {t} exceeds path horizon {}",
                self.horizon()
            )));
        }
        Ok(DiffusionPath {
            dt: self.dt,
            samples: self.samples[..=n].to_vec(),
            seed: self.seed,
            x0: self.x0,
        })
    }
}

/// Time-weighted sample set: each sample stands for `dt` units of time, so the
/// observation length is `dt * samples.len()`.
#[derive(Debug, Clone, Copy)]
pub struct Occupation<'a> {
    pub dt: f64,
    pub samples: &'a [f64],
}

impl Occupation<'_> {
    pub fn horizon(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }
}

/// Number of Euler steps covering `[0, t]`.
pub fn steps_for(t: f64, dt: f64) -> usize {
    ((t / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Simulate a path on `[0, t]` started at `x0`.
pub fn simulate_path(spec: &DriftSpec, t: f64, dt: f64, x0: f64, seed: u64) -> Result<DiffusionPath> {
    simulate_path_with(spec, t, dt, Start::Fixed(x0), seed, Noise::Gaussian)
}

pub fn simulate_path_with(
    spec: &DriftSpec,
    t: f64,
    dt: f64,
    start: Start<'_>,
    seed: u64,
    noise: Noise,
) -> Result<DiffusionPath> {
    check_dt(dt)?;
    if !(t >= dt) {
        return Err(Error::BadParameters(format!("horizon {t} shorter than time step {dt}")));
    }
    let n = steps_for(t, dt);
    let mut stepper = EulerStepper::new(spec, dt, seed, noise)?;
    let x0 = match start {
        Start::Fixed(x) => x,
        Start::Stationary(law) => {
            let u: f64 = stepper.rng_mut().random();
            law.quantile(u)
        }
    };
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = stepper.step(x)?;
        samples.push(x);
    }
    Ok(DiffusionPath { dt, samples, seed, x0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingTime {
    pub tau: f64,
    pub hit: bool,
}

/// First grid time at which the path started at 0 reaches `threshold`.
/// Returns `tau = t_cap, hit = false` if the level is not reached by `t_cap`.
pub fn first_hitting_time(
    spec: &DriftSpec,
    threshold: f64,
    dt: f64,
    seed: u64,
    t_cap: f64,
) -> Result<HittingTime> {
    let mut stepper = EulerStepper::new(spec, dt, seed, Noise::Gaussian)?;
    hitting_loop(&mut stepper, threshold, t_cap, |s| s.step_noise())
}

/// Same as [`first_hitting_time`] but driven by caller-supplied standard
/// normals (used to couple paths with different time steps).
pub fn first_hitting_time_driven(
    spec: &DriftSpec,
    threshold: f64,
    dt: f64,
    t_cap: f64,
    mut normals: impl FnMut() -> f64,
) -> Result<HittingTime> {
    let mut stepper = EulerStepper::new(spec, dt, 0, Noise::Zero)?;
    hitting_loop(&mut stepper, threshold, t_cap, |_| normals())
}

impl EulerStepper<'_> {
    /// Whether the continuous path crossed `y` between two grid values that
    /// both lie below it, sampled from the Brownian-bridge crossing law
    /// `exp(-2 (y - x0)(y - x1) / dt)`. Always false without noise.
    pub fn bridge_crossed(&mut self, x0: f64, x1: f64, y: f64) -> bool {
        if matches!(self.noise, Noise::Zero) {
            return false;
        }
        let p = (-2.0 * (y - x0) * (y - x1) / self.dt).exp();
        self.rng.random::<f64>() < p
    }

    fn step_noise(&mut self) -> f64 {
        match self.noise {
            Noise::Gaussian => self.rng.sample(StandardNormal),
            Noise::Zero => 0.0,
        }
    }
}

fn hitting_loop(
    stepper: &mut EulerStepper<'_>,
    threshold: f64,
    t_cap: f64,
    mut noise: impl FnMut(&mut EulerStepper<'_>) -> f64,
) -> Result<HittingTime> {
    if 0.0 >= threshold {
        return Ok(HittingTime { tau: 0.0, hit: true });
    }
    let dt = stepper.dt();
    let max_steps = (t_cap / dt).floor() as usize;
    let mut x = 0.0;
    for k in 1..=max_steps {
        let z = noise(stepper);
        x = stepper.step_with(x, z)?;
        if x >= threshold {
            return Ok(HittingTime {
                tau: k as f64 * dt,
                hit: true,
            });
        }
    }
    Ok(HittingTime { tau: t_cap, hit: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

/// A contiguous stretch of the controlled process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub start_time: f64,
    pub phase: Phase,
    pub samples: Vec<f64>,
}

/// One entry of the controlled-trajectory log: an exploration block end or an
/// exploitation stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleEvent {
    pub time: f64,
    /// Threshold used by the cycle; `None` for exploration blocks.
    pub threshold: Option<f64>,
    pub payoff: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlledTrajectory {
    pub stop_times: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub exploration_time: f64,
    pub total_t: f64,
    pub dt: f64,
    pub events: Vec<CycleEvent>,
    /// Recorded only when requested; empty otherwise.
    pub path_segments: Vec<PathSegment>,
}

impl ControlledTrajectory {
    pub fn total_payoff(&self) -> f64 {
        self.payoffs.iter().sum()
    }
}

/// What a threshold policy may look at before choosing the next cycle's
/// level: everything that happened strictly before the cycle starts.
#[derive(Debug, Clone, Copy)]
pub struct CycleHistory<'a> {
    pub now: f64,
    pub stop_times: &'a [f64],
    pub thresholds: &'a [f64],
    pub payoffs: &'a [f64],
}

/// Chooses the barrier `y_n` for the next cycle.
pub trait ThresholdPolicy {
    fn next_threshold(&mut self, history: &CycleHistory<'_>) -> f64;
}

impl<F: FnMut(&CycleHistory<'_>) -> f64> ThresholdPolicy for F {
    fn next_threshold(&mut self, history: &CycleHistory<'_>) -> f64 {
        self(history)
    }
}

/// Always stop at the same level.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy(pub f64);

impl ThresholdPolicy for ConstantPolicy {
    fn next_threshold(&mut self, _: &CycleHistory<'_>) -> f64 {
        self.0
    }
}

/// Step-by-step driver of a controlled process on `[0, total_t]`.
///
/// Time is tracked as an integer step count so that long runs do not drift off
/// the grid. Exploration blocks continue from the current state; exploitation
/// cycles start at 0 and reset the state to 0 after each stop.
pub struct ControlledSimulator<'a> {
    stepper: EulerStepper<'a>,
    payoff: &'a PayoffSpec,
    x: f64,
    step: usize,
    max_steps: usize,
    record_path: bool,
    traj: ControlledTrajectory,
}

impl<'a> ControlledSimulator<'a> {
    pub fn new(
        spec: &'a DriftSpec,
        payoff: &'a PayoffSpec,
        total_t: f64,
        dt: f64,
        seed: u64,
        record_path: bool,
    ) -> Result<Self> {
        let stepper = EulerStepper::new(spec, dt, seed, Noise::Gaussian)?;
        if !(total_t > 0.0) {
            return Err(Error::BadParameters(format!("horizon must be positive, got {total_t}")));
        }
        let max_steps = (total_t / dt + 1e-9).floor() as usize;
        Ok(Self {
            stepper,
            payoff,
            x: 0.0,
            step: 0,
            max_steps,
            record_path,
            traj: ControlledTrajectory {
                stop_times: Vec::new(),
                thresholds: Vec::new(),
                payoffs: Vec::new(),
                exploration_time: 0.0,
                total_t,
                dt,
                events: Vec::new(),
                path_segments: Vec::new(),
            },
        })
    }

    pub fn now(&self) -> f64 {
        self.step as f64 * self.stepper.dt()
    }

    pub fn finished(&self) -> bool {
        self.step >= self.max_steps
    }

    pub fn history(&self) -> CycleHistory<'_> {
        CycleHistory {
            now: self.now(),
            stop_times: &self.traj.stop_times,
            thresholds: &self.traj.thresholds,
            payoffs: &self.traj.payoffs,
        }
    }

    pub fn trajectory(&self) -> &ControlledTrajectory {
        &self.traj
    }

    pub fn into_trajectory(self) -> ControlledTrajectory {
        self.traj
    }

    /// Run the unstopped process for `len` time units (truncated at the
    /// horizon), appending the left-endpoint samples to `data`. Returns the
    /// observed duration.
    pub fn explore_block(&mut self, len: f64, data: &mut Vec<f64>) -> Result<f64> {
        let dt = self.stepper.dt();
        let want = ((len / dt) + 1e-9).round().max(1.0) as usize;
        let n = want.min(self.max_steps - self.step.min(self.max_steps));
        let start_time = self.now();
        let mut seg = if self.record_path { vec![self.x] } else { Vec::new() };
        for _ in 0..n {
            data.push(self.x);
            self.x = self.stepper.step(self.x)?;
            self.step += 1;
            if self.record_path {
                seg.push(self.x);
            }
        }
        let observed = n as f64 * dt;
        self.traj.exploration_time += observed;
        if n > 0 {
            self.traj.events.push(CycleEvent {
                time: self.now(),
                threshold: None,
                payoff: 0.0,
                phase: Phase::Explore,
            });
            if self.record_path {
                self.traj.path_segments.push(PathSegment {
                    start_time,
                    phase: Phase::Explore,
                    samples: seg,
                });
            }
        }
        Ok(observed)
    }

    /// Start at 0 and stop at the end of the first step in which the path
    /// reaches `y` (on the grid or by a bridge crossing inside the step),
    /// collecting `g(y)`. Returns `Some(payoff)` on a stop and `None` if the horizon was
    /// reached first (no payoff).
    pub fn exploit_cycle(&mut self, y: f64) -> Result<Option<f64>> {
        let (y1, zeta) = (self.payoff.y1, self.payoff.zeta);
        if !(y >= y1 && y <= zeta) {
            return Err(Error::InvalidThreshold { y, y1, zeta });
        }
        self.x = 0.0;
        let start_time = self.now();
        let mut seg = if self.record_path { vec![0.0] } else { Vec::new() };
        while self.step < self.max_steps {
            let prev = self.x;
            self.x = self.stepper.step(self.x)?;
            self.step += 1;
            if self.record_path {
                seg.push(self.x);
            }
            if self.x >= y || self.stepper.bridge_crossed(prev, self.x, y) {
                let gain = self.payoff.eval(y)?;
                let tau = self.now();
                self.traj.stop_times.push(tau);
                self.traj.thresholds.push(y);
                self.traj.payoffs.push(gain);
                self.traj.events.push(CycleEvent {
                    time: tau,
                    threshold: Some(y),
                    payoff: gain,
                    phase: Phase::Exploit,
                });
                self.x = 0.0;
                if self.record_path {
                    self.traj.path_segments.push(PathSegment {
                        start_time,
                        phase: Phase::Exploit,
                        samples: seg,
                    });
                }
                return Ok(Some(gain));
            }
        }
        if self.record_path {
            self.traj.path_segments.push(PathSegment {
                start_time,
                phase: Phase::Exploit,
                samples: seg,
            });
        }
        Ok(None)
    }
}

/// Run threshold-type impulse control on `[0, t]`: before each cycle the
/// policy picks `y_n ∈ [y1, zeta]` from past cycles only; the process then runs
/// from 0 until it reaches `y_n`, `g(y_n)` is collected and the state is reset
/// to 0. The last, unfinished cycle is truncated at `t` without payoff.
pub fn simulate_impulse_controlled(
    spec: &DriftSpec,
    policy: &mut dyn ThresholdPolicy,
    payoff: &PayoffSpec,
    t: f64,
    dt: f64,
    seed: u64,
    record_path: bool,
) -> Result<ControlledTrajectory> {
    let mut sim = ControlledSimulator::new(spec, payoff, t, dt, seed, record_path)?;
    while !sim.finished() {
        let y = policy.next_threshold(&sim.history());
        if sim.exploit_cycle(y)?.is_none() {
            break;
        }
    }
    Ok(sim.into_trajectory())
}
