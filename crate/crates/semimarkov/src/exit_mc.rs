//! Monte Carlo engine for first exits of time-changed processes
//! `X(t) = M(L(t))`.
//!
//! Each trajectory runs on the operational grid `y_m = m dy`: the driving
//! process `M` advances by Euler-Maruyama (exact for Brownian kinds) while
//! the subordinator clock accumulates exact stable increments
//! `dy^{1/alpha} S_m`. The operational exit is the first grid index with
//! `M(y_m) >= S(y_m)`; the calendar exit is the clock value at that index
//! rounded up to the calendar grid. Trajectories never store paths, so a
//! run is O(1) in memory per path and trivially parallel: per-path streams
//! are derived from `(seed, path_index)` and the reduction is integer
//! counting, independent of execution order.
//!
//! Exits are recorded at the first grid point at or above the boundary; no
//! bridge correction is applied, so operational exits carry the usual
//! O(sqrt(dy)) detection bias of grid-monitored diffusions.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_markov::Threshold;
use crate::lif::LifParams;
use crate::rng::{sample_positive_stable, RandomStream};
use crate::subordination::BernsteinFunction;

/// The driving Markov process of an exit experiment.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    /// Standard or drifted Wiener process started at 0.
    Wiener { drift: f64 },
    /// Ornstein-Uhlenbeck process started at 0.
    Ou { theta: f64, sigma: f64 },
    /// Leaky integrate-and-fire membrane started at `v0`.
    Lif(LifParams),
    /// Test double whose operational exit time is Exp(rate), sampled
    /// exactly and then snapped to the operational grid.
    ExponentialExit { rate: f64 },
    /// Test double exiting at a fixed operational time.
    DeterministicExit { time: f64 },
}

impl ProcessModel {
    fn start_state(&self) -> f64 {
        match self {
            ProcessModel::Wiener { .. } | ProcessModel::Ou { .. } => 0.0,
            ProcessModel::Lif(p) => p.v0,
            _ => 0.0,
        }
    }

    fn is_diffusion(&self) -> bool {
        !matches!(
            self,
            ProcessModel::ExponentialExit { .. } | ProcessModel::DeterministicExit { .. }
        )
    }

    /// One Euler-Maruyama step from `state` at operational time `y`.
    fn step(&self, state: f64, y: f64, dy: f64, z: f64) -> f64 {
        match self {
            ProcessModel::Wiener { drift } => state + drift * dy + dy.sqrt() * z,
            ProcessModel::Ou { theta, sigma } => {
                state - state / theta * dy + sigma * dy.sqrt() * z
            }
            ProcessModel::Lif(p) => {
                let drift = -(state - p.v_hat) / p.theta + p.stimulus.value(y);
                state + drift * dy + p.sigma * dy.sqrt() * z
            }
            _ => state,
        }
    }
}

/// Full description of one exit experiment.
#[derive(Debug, Clone)]
pub struct ExitExperimentConfig {
    pub process: ProcessModel,
    /// Laplace exponent of the subordinator; `None` runs the identity
    /// clock (the degenerate, untransformed experiment).
    pub bernstein: Option<BernsteinFunction>,
    /// Boundary for the driving process, evaluated on the operational clock.
    pub threshold: Threshold,
    /// Calendar grid step.
    pub dt: f64,
    /// Operational grid step.
    pub dy: f64,
    /// Calendar horizon; trajectories still inside are censored.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl ExitExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::domain(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.dy > 0.0) {
            return Err(Error::domain(format!("dy must be > 0, got {}", self.dy)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths must be >= 1"));
        }
        if let Some(f) = &self.bernstein {
            if f.stable_alpha().is_none() {
                return Err(Error::NoExactSampler(
                    "exit experiments need the stable kind (or the identity clock)".into(),
                ));
            }
        }
        if let ProcessModel::Lif(p) = &self.process {
            p.validate()?;
        }
        if self.process.is_diffusion()
            && !(self.threshold.value(0.0) > self.process.start_state())
        {
            return Err(Error::domain(format!(
                "threshold at 0 ({}) must lie strictly above the start state ({})",
                self.threshold.value(0.0),
                self.process.start_state()
            )));
        }
        Ok(())
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitOutcome {
    /// Exit recorded at this calendar grid time.
    Exit(f64),
    /// Still inside the open set at the horizon.
    CensoredAtHorizon,
}

impl ExitOutcome {
    pub fn exit_time(&self) -> Option<f64> {
        match self {
            ExitOutcome::Exit(t) => Some(*t),
            ExitOutcome::CensoredAtHorizon => None,
        }
    }
}

/// The subordinator clock of one trajectory: either the identity or a
/// running sum of exact stable increments.
enum Clock {
    Identity,
    Stable { alpha: f64, scale: f64, value: f64 },
}

impl Clock {
    fn new(bernstein: &Option<BernsteinFunction>, dy: f64) -> Clock {
        match bernstein {
            None => Clock::Identity,
            Some(f) => {
                let alpha = f.stable_alpha().expect("validated stable kind");
                Clock::Stable { alpha, scale: dy.powf(1.0 / alpha), value: 0.0 }
            }
        }
    }

    /// Advance to the next operational grid point and return the clock value.
    fn tick(&mut self, y: f64, stream: &mut RandomStream) -> f64 {
        match self {
            Clock::Identity => y,
            Clock::Stable { alpha, scale, value } => {
                *value += *scale
                    * sample_positive_stable(*alpha, stream).expect("alpha validated in (0,1)");
                *value
            }
        }
    }
}

fn ceil_to_grid(x: f64, dt: f64) -> f64 {
    (x / dt).ceil() * dt
}

/// Operational exit index for the test doubles (first grid point at or
/// after the drawn exit time).
fn double_exit_index(process: &ProcessModel, dy: f64, stream: &mut RandomStream) -> Option<usize> {
    match process {
        ProcessModel::ExponentialExit { rate } => {
            Some(((stream.exp1() / rate) / dy).ceil().max(1.0) as usize)
        }
        ProcessModel::DeterministicExit { time } => Some((time / dy).ceil().max(1.0) as usize),
        _ => None,
    }
}

/// Simulate one exit of the time-changed process through `config.threshold`.
///
/// The operational exit index `m*` is the first grid index with
/// `M(y_m) >= S(y_m)`; the returned calendar time is the clock value at
/// `m*` rounded up to the calendar grid, or censoring when that time (or
/// the clock itself, with no exit yet) passes the horizon.
pub fn simulate_exit_time(
    config: &ExitExperimentConfig,
    stream: &mut RandomStream,
) -> Result<ExitOutcome> {
    config.validate()?;
    Ok(run_one(config, None, stream))
}

/// Simulate one exit through a moving family of open sets
/// `S_t = (-infinity, family(t))` indexed by calendar time. Each
/// operational state is tested against the boundary at its calendar entry
/// time, so a constant family reproduces [`simulate_exit_time`] exactly,
/// path by path.
pub fn simulate_moving_set_exit(
    config: &ExitExperimentConfig,
    family: &(dyn Fn(f64) -> f64 + Sync),
    stream: &mut RandomStream,
) -> Result<ExitOutcome> {
    config.validate()?;
    if !config.process.is_diffusion() {
        return Err(Error::domain(
            "moving-set exits need a diffusion process model",
        ));
    }
    Ok(run_one(config, Some(family), stream))
}

fn run_one(
    config: &ExitExperimentConfig,
    family: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    stream: &mut RandomStream,
) -> ExitOutcome {
    let dy = config.dy;
    let mut clock = Clock::new(&config.bernstein, dy);
    if let Some(m_star) = double_exit_index(&config.process, dy, stream) {
        for m in 1..=m_star {
            let t_clock = clock.tick(m as f64 * dy, stream);
            if m == m_star {
                let t = ceil_to_grid(t_clock, config.dt);
                return if t <= config.horizon {
                    ExitOutcome::Exit(t)
                } else {
                    ExitOutcome::CensoredAtHorizon
                };
            }
            if t_clock > config.horizon {
                return ExitOutcome::CensoredAtHorizon;
            }
        }
        unreachable!("loop returns at m_star");
    }

    let mut state = config.process.start_state();
    let mut m = 0usize;
    loop {
        let y_prev = m as f64 * dy;
        m += 1;
        let y = m as f64 * dy;
        let z = stream.standard_normal();
        state = config.process.step(state, y_prev, dy, z);
        let t_clock = clock.tick(y, stream);
        let crossed = match family {
            None => state >= config.threshold.value(y),
            Some(fam) => state >= fam(ceil_to_grid(t_clock, config.dt)),
        };
        if crossed {
            let t = ceil_to_grid(t_clock, config.dt);
            return if t <= config.horizon {
                ExitOutcome::Exit(t)
            } else {
                ExitOutcome::CensoredAtHorizon
            };
        }
        if t_clock > config.horizon {
            return ExitOutcome::CensoredAtHorizon;
        }
    }
}

/// Empirical survival of the exit time on with per-point standard errors.
#[derive(Debug, Clone)]
pub struct SurvivalEstimate {
    t_step: f64,
    survival: Vec<f64>,
    stderr: Vec<f64>,
    n_alive: Vec<u64>,
    n_paths: usize,
    n_censored_at_horizon: usize,
    seed: u64,
}

impl SurvivalEstimate {
    /// Wrap an externally supplied survival curve (diagnostics on synthetic
    /// or imported data). Standard errors use the binomial formula.
    pub fn from_survival_curve(
        t_step: f64,
        survival: Vec<f64>,
        n_paths: usize,
        seed: u64,
    ) -> Self {
        let n_alive = survival
            .iter()
            .map(|s| (s * n_paths as f64).round() as u64)
            .collect();
        let stderr = survival
            .iter()
            .map(|s| (s * (1.0 - s) / n_paths as f64).max(0.0).sqrt())
            .collect();
        SurvivalEstimate {
            t_step,
            survival,
            stderr,
            n_alive,
            n_paths,
            n_censored_at_horizon: 0,
            seed,
        }
    }

    pub fn t_step(&self) -> f64 {
        self.t_step
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.survival.len()).map(|i| i as f64 * self.t_step).collect()
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn n_alive(&self) -> &[u64] {
        &self.n_alive
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_censored_at_horizon(&self) -> usize {
        self.n_censored_at_horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn grid_index(&self, t: f64) -> Result<usize> {
        let idx = (t / self.t_step).round();
        if (idx * self.t_step - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Diagnostic(format!("t = {t} is not on the estimate grid")));
        }
        let idx = idx as usize;
        if idx >= self.survival.len() {
            return Err(Error::Diagnostic(format!("t = {t} lies beyond the horizon")));
        }
        Ok(idx)
    }

    /// Survival at a grid time.
    pub fn survival_at(&self, t: f64) -> Result<f64> {
        Ok(self.survival[self.grid_index(t)?])
    }

    /// Empirical CDF at a grid time.
    pub fn cdf_at(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival_at(t)?)
    }

    pub fn n_alive_at(&self, t: f64) -> Result<u64> {
        Ok(self.n_alive[self.grid_index(t)?])
    }

    /// CSV emission: a seed comment, a header, then `t,survival,stderr,n_alive`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "t,survival,stderr,n_alive")?;
        for i in 0..self.survival.len() {
            writeln!(
                w,
                "{},{},{},{}",
                i as f64 * self.t_step,
                self.survival[i],
                self.stderr[i],
                self.n_alive[i]
            )?;
        }
        Ok(())
    }
}

/// Run the full experiment and estimate the survival function on the
/// calendar grid. Censored trajectories count as surviving up to the
/// horizon and are reported, never dropped.
pub fn estimate_survival(config: &ExitExperimentConfig) -> Result<SurvivalEstimate> {
    config.validate()?;
    let n_grid = (config.horizon / config.dt).floor() as usize + 1;
    let (exit_counts, n_censored) = (0..config.n_paths as u64)
        .into_par_iter()
        .fold(
            || (vec![0u64; n_grid], 0usize),
            |(mut counts, mut censored), path| {
                let mut stream = RandomStream::for_path(config.seed, path);
                match run_one(config, None, &mut stream) {
                    ExitOutcome::Exit(t) => {
                        let idx = (t / config.dt).round() as usize;
                        counts[idx.min(n_grid - 1)] += 1;
                    }
                    ExitOutcome::CensoredAtHorizon => censored += 1,
                }
                (counts, censored)
            },
        )
        .reduce(
            || (vec![0u64; n_grid], 0usize),
            |(mut a, ca), (b, cb)| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                (a, ca + cb)
            },
        );

    let n = config.n_paths as u64;
    let mut alive = n;
    let mut n_alive = Vec::with_capacity(n_grid);
    for &c in &exit_counts {
        alive -= c;
        n_alive.push(alive);
    }
    let survival: Vec<f64> = n_alive.iter().map(|&a| a as f64 / n as f64).collect();
    let stderr: Vec<f64> = survival
        .iter()
        .map(|s| (s * (1.0 - s) / n as f64).sqrt())
        .collect();
    debug_assert_eq!(
        exit_counts.iter().sum::<u64>() + n_censored as u64,
        n,
        "exits + censored must equal n_paths"
    );
    Ok(SurvivalEstimate {
        t_step: config.dt,
        survival,
        stderr,
        n_alive,
        n_paths: config.n_paths,
        n_censored_at_horizon: n_censored,
        seed: config.seed,
    })
}

/// Mean exit time over the uncensored trajectories.
#[derive(Debug, Clone, Copy)]
pub struct MeanExitEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_exits: usize,
    pub n_censored: usize,
}

pub fn estimate_mean_exit_time(config: &ExitExperimentConfig) -> Result<MeanExitEstimate> {
    config.validate()?;
    let (sum, sumsq, n_exits, n_censored) = (0..config.n_paths as u64)
        .into_par_iter()
        .fold(
            || (0.0f64, 0.0f64, 0usize, 0usize),
            |(s, sq, ne, nc), path| {
                let mut stream = RandomStream::for_path(config.seed, path);
                match run_one(config, None, &mut stream) {
                    ExitOutcome::Exit(t) => (s + t, sq + t * t, ne + 1, nc),
                    ExitOutcome::CensoredAtHorizon => (s, sq, ne, nc + 1),
                }
            },
        )
        .reduce(
            || (0.0, 0.0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
        );
    if n_exits == 0 {
        return Err(Error::Diagnostic("no exits before the horizon".into()));
    }
    let mean = sum / n_exits as f64;
    let var = (sumsq / n_exits as f64 - mean * mean).max(0.0);
    Ok(MeanExitEstimate {
        mean,
        stderr: (var / n_exits as f64).sqrt(),
        n_exits,
        n_censored,
    })
}

/// Spike-train sample of one trajectory under threshold-and-reset dynamics.
#[derive(Debug, Clone)]
pub struct SpikeTrainSample {
    spike_times: Vec<f64>,
    censored: bool,
}

impl SpikeTrainSample {
    pub fn spike_times(&self) -> &[f64] {
        &self.spike_times
    }

    /// Inter-spike intervals (successive differences of the spike times).
    pub fn isi(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.spike_times
            .iter()
            .map(|&t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }

    /// True when the horizon cut the train before the requested spike count.
    pub fn censored(&self) -> bool {
        self.censored
    }
}

/// Spike-train experiment: the membrane model plus reset semantics. At each
/// spike the membrane restarts from `v_reset` and, for the time-changed
/// variant, the subordinator clock renews from fresh increments, which
/// makes the ISIs i.i.d. by construction.
#[derive(Debug, Clone)]
pub struct SpikeTrainConfig {
    pub lif: LifParams,
    pub bernstein: Option<BernsteinFunction>,
    pub dt: f64,
    pub dy: f64,
    /// Calendar horizon for the whole train.
    pub horizon: f64,
}

/// Simulate spike times `T_n = inf { t >= T_{n-1} : X(t) >= v_th }` under
/// the reset rule, for the Markov membrane (`bernstein: None`) or the
/// time-changed one. A horizon hit before `n_spikes` yields a partial,
/// censored train.
pub fn simulate_spike_train(
    config: &SpikeTrainConfig,
    n_spikes: usize,
    stream: &mut RandomStream,
) -> Result<SpikeTrainSample> {
    config.lif.validate()?;
    if n_spikes == 0 {
        return Err(Error::domain("n_spikes must be >= 1"));
    }
    let mut spike_times = Vec::with_capacity(n_spikes);
    let mut now = 0.0f64;
    for spike in 0..n_spikes {
        let start = if spike == 0 { config.lif.v0 } else { config.lif.v_reset };
        let isi_cfg = ExitExperimentConfig {
            process: ProcessModel::Lif(LifParams { v0: start, ..config.lif.clone() }),
            bernstein: config.bernstein.clone(),
            threshold: Threshold::constant(config.lif.v_th),
            dt: config.dt,
            dy: config.dy,
            horizon: config.horizon - now,
            n_paths: 1,
            seed: 0, // unused: the caller's stream drives this path
        };
        if isi_cfg.horizon <= 0.0 {
            return Ok(SpikeTrainSample { spike_times, censored: true });
        }
        isi_cfg.validate()?;
        match run_one(&isi_cfg, None, stream) {
            ExitOutcome::Exit(t) => {
                now += t;
                spike_times.push(now);
            }
            ExitOutcome::CensoredAtHorizon => {
                return Ok(SpikeTrainSample { spike_times, censored: true });
            }
        }
    }
    Ok(SpikeTrainSample { spike_times, censored: false })
}

/// CSV emission for a batch of trains: `path_id,spike_index,spike_time`.
pub fn write_spike_trains_csv<W: Write>(
    samples: &[SpikeTrainSample],
    seed: u64,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "path_id,spike_index,spike_time")?;
    for (path, s) in samples.iter().enumerate() {
        for (k, t) in s.spike_times().iter().enumerate() {
            writeln!(w, "{path},{k},{t}")?;
        }
    }
    Ok(())
}
