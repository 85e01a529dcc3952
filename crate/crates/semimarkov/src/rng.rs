//! Random streams and one-sided stable variate generation.
//!
//! Streams are ChaCha12 keyed by a 64-bit seed with a 64-bit stream id, so any
//! `(seed, stream_id)` pair names a reproducible sequence that is independent
//! of every other pair. Trajectories, experiments and worker shards derive
//! their streams from the run seed plus an index instead of sharing state.
//!
//! One-sided stable variates use the Chambers-Mallows-Stuck construction:
//! with `V ~ U(-pi/2, pi/2)`, `W ~ Exp(1)` and the skew-dependent angle shift
//! `B = atan(beta tan(pi alpha/2))/alpha`, the variate
//!
//! ```text
//! Z = scale * sin(alpha (V + B)) / cos(V)^{1/alpha}
//!       * ( cos(V - alpha (V + B)) / W )^{(1-alpha)/alpha}
//! ```
//!
//! is standard stable with index `alpha` and skewness `beta` (1-parametrization).
//! `beta = 0` reduces to the familiar symmetric formula; `beta = 1` scaled by
//! `gamma_alpha(alpha) = cos(pi alpha/2)^{1/alpha}` has Laplace transform
//! `E[exp(-lambda S)] = exp(-lambda^alpha)`, which is the subordinator
//! increment law used everywhere in this crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A reproducible, splittable random stream.
///
/// Distinct `(seed, stream_id)` pairs yield statistically independent
/// sequences; the same pair always replays the same sequence bit-exactly.
/// A single stream must be consumed sequentially.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream { seed, stream_id, rng }
    }

    /// Stream assigned to trajectory `path_index` of a run seeded by `seed`.
    pub fn for_path(seed: u64, path_index: u64) -> Self {
        RandomStream::new(seed, path_index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// Uniform draw on the open interval (-pi/2, pi/2); endpoints are
    /// excluded so `cos` never vanishes downstream.
    pub fn uniform_angle(&mut self) -> f64 {
        (self.uniform_open() - 0.5) * PI
    }

    /// Standard exponential draw.
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Parameters of a stable law S(alpha, beta, gamma, delta; 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    /// Stability index; this crate only supports (0, 1).
    pub alpha: f64,
    /// Skewness in [-1, 1].
    pub beta: f64,
    /// Scale, > 0.
    pub gamma: f64,
    /// Location.
    pub delta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [-1, 1], got {beta}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::domain(format!("gamma must be > 0, got {gamma}")));
        }
        if !delta.is_finite() {
            return Err(Error::domain(format!("delta must be finite, got {delta}")));
        }
        Ok(StableParams { alpha, beta, gamma, delta })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "stability index must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// The scale `gamma(alpha) = cos(pi alpha / 2)^{1/alpha}` that turns a
/// standard skewed stable variate into one with Laplace transform
/// `exp(-lambda^alpha)`.
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((PI * alpha / 2.0).cos().powf(1.0 / alpha))
}

/// Standard stable draw with skewness `beta`, unit scale, zero location.
fn sample_standard_stable(alpha: f64, beta: f64, stream: &mut RandomStream) -> f64 {
    let v = stream.uniform_angle();
    let w = stream.exp1();
    let (shift, scale) = if beta == 0.0 {
        (0.0, 1.0)
    } else {
        let bt = beta * (PI * alpha / 2.0).tan();
        (bt.atan() / alpha, (1.0 + bt * bt).powf(1.0 / (2.0 * alpha)))
    };
    let a = alpha * (v + shift);
    scale * a.sin() / v.cos().powf(1.0 / alpha)
        * ((v - a).cos() / w).powf((1.0 - alpha) / alpha)
}

/// One draw from S(alpha, 0, 1, 0; 1).
pub fn sample_symmetric_stable(alpha: f64, stream: &mut RandomStream) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(sample_standard_stable(alpha, 0.0, stream))
}

/// One strictly positive draw with Laplace transform `exp(-lambda^alpha)`,
/// i.e. S(alpha, 1, gamma_alpha(alpha), 0; 1).
pub fn sample_positive_stable(alpha: f64, stream: &mut RandomStream) -> Result<f64> {
    check_alpha(alpha)?;
    let s = gamma_alpha(alpha)? * sample_standard_stable(alpha, 1.0, stream);
    debug_assert!(s > 0.0, "positive stable draw must be > 0, got {s}");
    Ok(s)
}

/// One draw from S(alpha, beta, gamma, delta; 1).
pub fn sample_stable(params: StableParams, stream: &mut RandomStream) -> Result<f64> {
    let p = StableParams::new(params.alpha, params.beta, params.gamma, params.delta)?;
    Ok(p.delta + p.gamma * sample_standard_stable(p.alpha, p.beta, stream))
}
