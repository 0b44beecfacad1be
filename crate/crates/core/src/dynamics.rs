//! The Markov step and trajectory engine.
//!
//! The state is a configuration `X(t)` of `N` points whose extreme point is
//! kept in the last slot. One step removes the extreme point, inserts a fresh
//! point `U` and re-determines the extreme point of the new configuration.
//! The core (all points but the extreme) changes only when `U` is not itself
//! the new extreme point, which can only happen when `U` lands within `3D` of
//! the core mean. [`Trajectory::skip_step`] exploits this: it jumps over the
//! geometrically distributed run of steps that cannot touch the core.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, dist_sq, Configuration};
use crate::math;
use crate::rng::{replica_rng, StreamRng};

/// Default termination threshold on the core diameter.
pub const DEFAULT_TOL: f64 = 1e-4;

/// Proportional Lyapunov drop forced by a replacement landing within `D/4`
/// of the core mean: `ΔF ≤ −GAMMA · F / N`.
pub const GAMMA: f64 = 9.0 / 72.0;

/// Skip counts beyond this are treated as an absorbed state.
pub const MAX_SKIP: f64 = 1e12;

/// Slack allowed on `F(t+1) ≤ F(t)` for floating-point rounding.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Law of the replacement point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    /// Uniform on `[0,1]^d`.
    UniformCube,
    /// Uniform on `[min core − D, max core + D]` (the modified model, `d = 1`).
    AdaptiveInterval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop the first time the core diameter is below the tolerance.
    DiameterBelow(f64),
    /// Stop after exactly this many steps.
    FixedSteps(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every step is simulated.
    Naive,
    /// Steps that cannot change the core are skipped in bulk.
    EventSkip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub n_points: usize,
    pub dim: usize,
    pub seed: u64,
    pub replacement: Replacement,
    pub stop: StopRule,
    pub mode: Mode,
    /// Hard cap on the step count; the run reports `converged = false` when hit.
    pub max_steps: Option<u64>,
    /// Fail validation unless `π_N` can be tracked (naive mode, `d = 1`).
    pub require_pi_n: bool,
    /// Keep the steps at which `F` strictly decreased.
    pub record_tau: bool,
    /// Keep a trace point every `stride` steps.
    pub trace_stride: Option<u64>,
}

impl RunParams {
    pub fn new(n_points: usize, dim: usize) -> Self {
        RunParams {
            n_points,
            dim,
            seed: 0,
            replacement: Replacement::UniformCube,
            stop: StopRule::DiameterBelow(DEFAULT_TOL),
            mode: Mode::Naive,
            max_steps: None,
            require_pi_n: false,
            record_tau: false,
            trace_stride: None,
        }
    }

    /// The modified one-dimensional model with adaptive replacement.
    pub fn modified(n_points: usize) -> Self {
        RunParams { replacement: Replacement::AdaptiveInterval, ..RunParams::new(n_points, 1) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(Error::Config("the process needs at least 3 points"));
        }
        if self.dim == 0 {
            return Err(Error::Config("dimension must be at least 1"));
        }
        if self.replacement == Replacement::AdaptiveInterval && self.dim != 1 {
            return Err(Error::Config("adaptive-interval replacement requires dimension 1"));
        }
        match self.stop {
            StopRule::DiameterBelow(tol) if !(tol > 0.0) => {
                return Err(Error::Config("tolerance must be positive"))
            }
            StopRule::FixedSteps(0) => return Err(Error::Config("fixed step count must be at least 1")),
            _ => {}
        }
        if self.require_pi_n && self.mode == Mode::EventSkip {
            return Err(Error::Config("pi_N is only tracked in naive mode"));
        }
        if self.require_pi_n && self.dim != 1 {
            return Err(Error::Config("pi_N is only defined in dimension 1"));
        }
        if self.trace_stride == Some(0) {
            return Err(Error::Config("trace stride must be at least 1"));
        }
        Ok(())
    }
}

/// How the initial configuration is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// `N` independent uniform points in `[0,1]^d`.
    IidUniform,
    Points(Configuration),
}

/// Everything observed during one step `t → t + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// The inserted point is the extreme point of the new configuration.
    pub replaced_was_new_point: bool,
    /// `U ∈ B(μ'(t), 3 D(t))`.
    pub event_a: bool,
    /// `U ∈ B(μ'(t), D(t) / 4)`.
    pub event_a_prime: bool,
    pub lyapunov_before: f64,
    pub lyapunov_after: f64,
    pub diameter_before: f64,
    pub diameter_after: f64,
    /// `d = 1` only: the extreme point of the new configuration lies left of
    /// its barycentre.
    pub removed_on_left: Option<bool>,
    /// Steps skipped in bulk before this one (event-skip mode).
    pub skipped: u64,
}

/// Result of the standalone [`step`] function.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// The new configuration in storage order; its extreme point is last.
    pub new_config: Configuration,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: u64,
    pub lyapunov: f64,
    pub diameter: f64,
    pub core_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Core mean when the run stopped.
    pub xi_estimate: Vec<f64>,
    /// Total steps, skipped ones included.
    pub steps: u64,
    /// Fraction of steps whose extreme point was left of the barycentre
    /// (naive mode, `d = 1`, at least one step).
    pub pi_n: Option<f64>,
    /// Steps at which `F` strictly decreased (when recorded).
    pub tau_times: Vec<u64>,
    /// Core diameter right after each entry of `tau_times`.
    pub tau_diameters: Vec<f64>,
    pub trace: Option<Vec<TracePoint>>,
    pub event_a_count: u64,
    pub event_a_prime_count: u64,
    pub final_diameter: f64,
    pub final_lyapunov: f64,
    /// The core collapsed (zero diameter) or the skip count overflowed.
    pub absorbed: bool,
    /// The stop rule was met (as opposed to `max_steps` or absorption).
    pub converged: bool,
}

/// Axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).max(0.0)).product()
    }
}

/// Region in which a replacement may change the core, and the probability
/// that a replacement drawn from the support lands in it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRegion {
    pub region: BoxRegion,
    pub probability: f64,
}

/// Intersection of the bounding box of `B(core_mean, 3 D)` with `support`.
/// In one dimension the box is the ball itself.
pub fn event_region(core_mean: &[f64], diameter: f64, support: &BoxRegion) -> EventRegion {
    let reach = 3.0 * diameter;
    let lo: Vec<f64> = core_mean.iter().zip(&support.lo).map(|(m, s)| (m - reach).max(*s)).collect();
    let hi: Vec<f64> = core_mean.iter().zip(&support.hi).map(|(m, s)| (m + reach).min(*s)).collect();
    let region = BoxRegion { lo, hi };
    let total = support.volume();
    let probability = if total > 0.0 { (region.volume() / total).min(1.0) } else { 0.0 };
    EventRegion { region, probability }
}

/// Number of Bernoulli(`p`) trials up to and including the first success,
/// by inversion. `None` when it exceeds [`MAX_SKIP`] or `p` is zero.
pub fn geometric_trials<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Option<u64> {
    if !(p > 0.0) {
        return None;
    }
    if p >= 1.0 {
        return Some(1);
    }
    let v: f64 = rng.random();
    let trials = math::ceil(math::ln_1p(-v) / math::ln_1p(-p)).max(1.0);
    if trials - 1.0 > MAX_SKIP {
        None
    } else {
        Some(trials as u64)
    }
}

/// A single trajectory of the process.
#[derive(Debug, Clone)]
pub struct Trajectory<R = StreamRng> {
    params: RunParams,
    n: usize,
    dim: usize,
    /// `X(t)`, row-major, extreme point in the last slot.
    points: Vec<f64>,
    core_mean: Vec<f64>,
    core_diameter: f64,
    core_lyapunov: f64,
    scratch: Vec<f64>,
    draw: Vec<f64>,
    t: u64,
    left_count: u64,
    event_a_count: u64,
    event_a_prime_count: u64,
    tau_times: Vec<u64>,
    tau_diameters: Vec<f64>,
    trace: Option<Vec<TracePoint>>,
    absorbed: bool,
    rng: R,
}

impl<R: Rng> Trajectory<R> {
    /// Starts a trajectory. Explicit initial points must be pairwise distinct.
    pub fn new(params: &RunParams, initial: &Initial, mut rng: R) -> Result<Self> {
        params.validate()?;
        let config = match initial {
            Initial::IidUniform => loop {
                let coords = (0..params.n_points * params.dim).map(|_| rng.random::<f64>()).collect();
                let config = Configuration::new(params.dim, coords)?;
                if config.has_distinct_points() {
                    break config;
                }
            },
            Initial::Points(config) => {
                if !config.has_distinct_points() {
                    return Err(Error::Config("initial points must be distinct"));
                }
                config.clone()
            }
        };
        Trajectory::from_configuration(params, &config, rng)
    }

    /// Starts from an arbitrary configuration (coincident points allowed).
    pub fn from_configuration(params: &RunParams, config: &Configuration, mut rng: R) -> Result<Self> {
        params.validate()?;
        if config.len() != params.n_points || config.dim() != params.dim {
            return Err(Error::Config("configuration shape does not match the run parameters"));
        }
        let ordered = geometry::order_by_distance(config, &mut rng)?;
        let (n, dim) = (params.n_points, params.dim);
        let mut traj = Trajectory {
            params: params.clone(),
            n,
            dim,
            points: ordered.into_configuration().into_coords(),
            core_mean: vec![0.0; dim],
            core_diameter: 0.0,
            core_lyapunov: 0.0,
            scratch: vec![0.0; dim],
            draw: vec![0.0; dim],
            t: 0,
            left_count: 0,
            event_a_count: 0,
            event_a_prime_count: 0,
            tau_times: Vec::new(),
            tau_diameters: Vec::new(),
            trace: params.trace_stride.map(|_| Vec::new()),
            absorbed: false,
            rng,
        };
        traj.refresh_core();
        traj.record_trace(u64::MAX);
        Ok(traj)
    }

    pub fn params(&self) -> &RunParams {
        &self.params
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn core_mean(&self) -> &[f64] {
        &self.core_mean
    }

    pub fn core_diameter(&self) -> f64 {
        self.core_diameter
    }

    /// `F(t)`.
    pub fn lyapunov(&self) -> f64 {
        self.core_lyapunov
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed
    }

    /// Current configuration, extreme point last. After a bulk skip the last
    /// slot still holds the extreme point from before the skip.
    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.dim, self.points.clone()).expect("shape is fixed at construction")
    }

    pub fn extreme(&self) -> &[f64] {
        &self.points[(self.n - 1) * self.dim..]
    }

    /// Support of the replacement law given the current core.
    pub fn support(&self) -> BoxRegion {
        match self.params.replacement {
            Replacement::UniformCube => BoxRegion { lo: vec![0.0; self.dim], hi: vec![1.0; self.dim] },
            Replacement::AdaptiveInterval => {
                let (lo, hi) = self.core_range();
                BoxRegion { lo: vec![lo - self.core_diameter], hi: vec![hi + self.core_diameter] }
            }
        }
    }

    pub fn event_region(&self) -> EventRegion {
        event_region(&self.core_mean, self.core_diameter, &self.support())
    }

    /// One naive step with a replacement drawn from the support.
    pub fn step(&mut self) -> StepInfo {
        let support = self.support();
        for i in 0..self.dim {
            let v: f64 = self.rng.random();
            self.draw[i] = support.lo[i] + (support.hi[i] - support.lo[i]) * v;
        }
        let u = core::mem::take(&mut self.draw);
        let info = self.apply(&u, 0);
        self.draw = u;
        info
    }

    /// One step with a caller-chosen replacement point.
    pub fn step_with(&mut self, u: &[f64]) -> StepInfo {
        assert_eq!(u.len(), self.dim, "replacement point has the wrong dimension");
        self.apply(u, 0)
    }

    /// Skips the steps whose replacement falls outside the event region (they
    /// leave the core untouched) and performs the first step that lands in it.
    /// Returns `None` and marks the trajectory absorbed when the region is
    /// empty or the skip count overflows. `limit` caps the resulting time;
    /// when the next in-region step would pass it, time is set to `limit` and
    /// `None` is returned without absorbing.
    pub fn skip_step(&mut self, limit: Option<u64>) -> Option<StepInfo> {
        let region = self.event_region();
        if self.core_diameter == 0.0 {
            self.absorbed = true;
            return None;
        }
        let Some(trials) = geometric_trials(region.probability, &mut self.rng) else {
            self.absorbed = true;
            return None;
        };
        if let Some(limit) = limit {
            if self.t.saturating_add(trials) > limit {
                self.t = limit;
                return None;
            }
        }
        for i in 0..self.dim {
            let v: f64 = self.rng.random();
            let (lo, hi) = (region.region.lo[i], region.region.hi[i]);
            self.draw[i] = lo + (hi - lo) * v;
        }
        self.t += trials - 1;
        let u = core::mem::take(&mut self.draw);
        let info = self.apply(&u, trials - 1);
        self.draw = u;
        Some(info)
    }

    /// Advances until `stop`, `max_steps` or absorption. Returns true when the
    /// stop rule was met.
    pub fn advance(&mut self, stop: StopRule) -> bool {
        let max = self.params.max_steps;
        loop {
            match stop {
                StopRule::DiameterBelow(tol) if self.core_diameter < tol => return true,
                StopRule::FixedSteps(steps) if self.t >= steps => return true,
                _ => {}
            }
            if max.is_some_and(|m| self.t >= m) || self.absorbed {
                return false;
            }
            let limit = match stop {
                StopRule::FixedSteps(steps) => Some(max.map_or(steps, |m| m.min(steps))),
                StopRule::DiameterBelow(_) => max,
            };
            match self.params.mode {
                Mode::Naive => {
                    self.step();
                }
                Mode::EventSkip => {
                    self.skip_step(limit);
                }
            }
        }
    }

    /// Consumes the trajectory into its summary.
    pub fn into_result(self, converged: bool) -> RunResult {
        let pi_n = (self.params.mode == Mode::Naive && self.dim == 1 && self.t > 0)
            .then(|| self.left_count as f64 / self.t as f64);
        RunResult {
            xi_estimate: self.core_mean,
            steps: self.t,
            pi_n,
            tau_times: self.tau_times,
            tau_diameters: self.tau_diameters,
            trace: self.trace,
            event_a_count: self.event_a_count,
            event_a_prime_count: self.event_a_prime_count,
            final_diameter: self.core_diameter,
            final_lyapunov: self.core_lyapunov,
            absorbed: self.absorbed,
            converged,
        }
    }

    fn core_range(&self) -> (f64, f64) {
        let core = &self.points[..(self.n - 1) * self.dim];
        core.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    fn refresh_core(&mut self) {
        let core = &self.points[..(self.n - 1) * self.dim];
        geometry::mean_into(core, self.dim, &mut self.core_mean);
        self.core_diameter = math::sqrt(geometry::diameter_sq(core, self.dim));
        self.core_lyapunov = geometry::sum_sq_about(core, self.dim, &self.core_mean);
    }

    fn apply(&mut self, u: &[f64], skipped: u64) -> StepInfo {
        let (n, dim) = (self.n, self.dim);
        let f_before = self.core_lyapunov;
        let d_before = self.core_diameter;
        let r2 = dist_sq(u, &self.core_mean);
        let event_a = r2 <= 9.0 * d_before * d_before;
        let event_a_prime = r2 <= d_before * d_before / 16.0;

        let last = (n - 1) * dim;
        self.points[last..].copy_from_slice(u);
        geometry::mean_into(&self.points, dim, &mut self.scratch);

        // Farthest point from the new barycentre; exact ties resolved by
        // reservoir sampling so each tied index is equally likely.
        let mut best = f64::NEG_INFINITY;
        let mut chosen = 0;
        let mut ties = 0u32;
        for i in 0..n {
            let s = dist_sq(&self.points[i * dim..(i + 1) * dim], &self.scratch);
            if s > best {
                best = s;
                chosen = i;
                ties = 1;
            } else if s == best {
                ties += 1;
                if self.rng.random_range(0..ties) == 0 {
                    chosen = i;
                }
            }
        }
        let removed_on_left = (dim == 1).then(|| self.points[chosen] < self.scratch[0]);
        let replaced_was_new_point = chosen == n - 1;
        if !replaced_was_new_point {
            for k in 0..dim {
                self.points.swap(chosen * dim + k, last + k);
            }
            self.refresh_core();
        }
        debug_assert!(
            self.core_lyapunov <= f_before + MONOTONE_SLACK,
            "Lyapunov value increased: {f_before} -> {}",
            self.core_lyapunov
        );

        self.t += 1;
        if removed_on_left == Some(true) {
            self.left_count += 1;
        }
        self.event_a_count += event_a as u64;
        self.event_a_prime_count += event_a_prime as u64;
        if self.params.record_tau && self.core_lyapunov < f_before {
            self.tau_times.push(self.t);
            self.tau_diameters.push(self.core_diameter);
        }
        self.record_trace(self.t - 1 - skipped);

        StepInfo {
            replaced_was_new_point,
            event_a,
            event_a_prime,
            lyapunov_before: f_before,
            lyapunov_after: self.core_lyapunov,
            diameter_before: d_before,
            diameter_after: self.core_diameter,
            removed_on_left,
            skipped,
        }
    }

    /// Records a trace point when `t` entered a new stride bucket since
    /// `previous` (`u64::MAX` forces a record).
    fn record_trace(&mut self, previous: u64) {
        let (Some(stride), Some(trace)) = (self.params.trace_stride, self.trace.as_mut()) else {
            return;
        };
        if previous == u64::MAX || self.t / stride > previous / stride {
            trace.push(TracePoint {
                t: self.t,
                lyapunov: self.core_lyapunov,
                diameter: self.core_diameter,
                core_mean: self.core_mean.clone(),
            });
        }
    }
}

/// One step from `config` with a replacement drawn per `params`.
pub fn step<R: Rng>(config: &Configuration, params: &RunParams, rng: R) -> Result<StepOutcome> {
    let mut traj = Trajectory::from_configuration(params, config, rng)?;
    let info = traj.step();
    Ok(StepOutcome { new_config: traj.configuration(), info })
}

/// One step from `config` with the replacement point fixed to `u`.
pub fn step_forced<R: Rng>(
    config: &Configuration,
    params: &RunParams,
    u: &[f64],
    rng: R,
) -> Result<StepOutcome> {
    if u.len() != config.dim() {
        return Err(Error::Config("replacement point has the wrong dimension"));
    }
    let mut traj = Trajectory::from_configuration(params, config, rng)?;
    let info = traj.step_with(u);
    Ok(StepOutcome { new_config: traj.configuration(), info })
}

/// Runs one trajectory to its stop rule using `rng`.
pub fn run_with<R: Rng>(params: &RunParams, initial: &Initial, rng: R) -> Result<RunResult> {
    let mut traj = Trajectory::new(params, initial, rng)?;
    let converged = traj.advance(params.stop);
    Ok(traj.into_result(converged))
}

/// Runs one trajectory on stream 0 of `params.seed`.
pub fn run(params: &RunParams, initial: &Initial) -> Result<RunResult> {
    run_with(params, initial, replica_rng(params.seed, 0))
}

/// Runs replica `replica` of the batch keyed by `params.seed`.
pub fn run_replica(params: &RunParams, initial: &Initial, replica: u64) -> Result<RunResult> {
    run_with(params, initial, replica_rng(params.seed, replica))
}

/// Event-skip run; rejects parameters asking for `π_N`.
pub fn run_event_skip(params: &RunParams, initial: &Initial) -> Result<RunResult> {
    if params.require_pi_n {
        return Err(Error::Config("pi_N is only tracked in naive mode"));
    }
    let params = RunParams { mode: Mode::EventSkip, ..params.clone() };
    run(&params, initial)
}

/// A configuration and replacement for which the core diameter grows.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterWitness {
    /// `X(t)` with its extreme point last.
    pub config: Configuration,
    pub replacement: Vec<f64>,
    pub diameter_before: f64,
    pub diameter_after: f64,
}

/// Minimum growth that counts as a diameter increase.
pub const DIAMETER_INCREASE_TOL: f64 = 1e-9;

/// Random search for one step with `D(t+1) > D(t) + 1e-9`: each trial draws
/// `N` uniform points in `[0,1]^d` and one uniform replacement.
pub fn find_diameter_increase<R: Rng>(
    n_points: usize,
    dim: usize,
    trials: u64,
    rng: &mut R,
) -> Result<Option<DiameterWitness>> {
    let params = RunParams::new(n_points, dim);
    params.validate()?;
    let mut coords = vec![0.0; n_points * dim];
    let mut u = vec![0.0; dim];
    for _ in 0..trials {
        coords.iter_mut().for_each(|x| *x = rng.random());
        u.iter_mut().for_each(|x| *x = rng.random());
        let config = Configuration::new(dim, coords.clone())?;
        let mut traj = Trajectory::from_configuration(&params, &config, &mut *rng)?;
        let before = traj.configuration();
        let info = traj.step_with(&u);
        if info.diameter_after > info.diameter_before + DIAMETER_INCREASE_TOL {
            return Ok(Some(DiameterWitness {
                config: before,
                replacement: u,
                diameter_before: info.diameter_before,
                diameter_after: info.diameter_after,
            }));
        }
    }
    Ok(None)
}
