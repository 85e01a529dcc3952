//! Bernstein functions (Laplace exponents), discretized subordinator paths
//! and inverse-subordinator evaluation.
//!
//! A subordinator with Laplace exponent `f` satisfies
//! `E[exp(-lambda sigma(y))] = exp(-y f(lambda))`. Only the stable family
//! `f(lambda) = lambda^alpha` is sampled exactly here: by self-similarity
//! `sigma(dy) =d dy^{1/alpha} sigma(1)`, so a path on the operational grid
//! accumulates i.i.d. scaled positive stable increments. The inverse path
//! `L(t_n) = min{ y_m >= L(t_{n-1}) : sigma(y_m) >= t_n }` is read off by a
//! single monotone scan.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{sample_positive_stable, RandomStream};
use crate::special::gamma_fn;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Stable { alpha: f64 },
    Custom { eval: RealFn },
}

/// A Bernstein function `f` together with its regular-variation indices at
/// zero and at infinity, which drive all tail and small-time predictors.
#[derive(Clone)]
pub struct BernsteinFunction {
    kind: Kind,
    index_at_zero: f64,
    index_at_infinity: f64,
}

impl std::fmt::Debug for BernsteinFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Stable { alpha } => write!(f, "BernsteinFunction::stable({alpha})"),
            Kind::Custom { .. } => write!(
                f,
                "BernsteinFunction::custom(idx0={}, idx_inf={})",
                self.index_at_zero, self.index_at_infinity
            ),
        }
    }
}

impl BernsteinFunction {
    /// The power law `f(lambda) = lambda^alpha`, `alpha` in (0, 1).
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "stable Bernstein index must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(BernsteinFunction {
            kind: Kind::Stable { alpha },
            index_at_zero: alpha,
            index_at_infinity: alpha,
        })
    }

    /// A user-supplied Bernstein function with stated indices. No exact
    /// sampler exists for these; they only feed predictors.
    pub fn custom(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        index_at_zero: f64,
        index_at_infinity: f64,
    ) -> Self {
        BernsteinFunction {
            kind: Kind::Custom { eval: Arc::new(eval) },
            index_at_zero,
            index_at_infinity,
        }
    }

    pub fn value(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        match &self.kind {
            Kind::Stable { alpha } => lambda.powf(*alpha),
            Kind::Custom { eval } => eval(lambda),
        }
    }

    pub fn index_at_zero(&self) -> f64 {
        self.index_at_zero
    }

    pub fn index_at_infinity(&self) -> f64 {
        self.index_at_infinity
    }

    /// Stability index when this is the stable family.
    pub fn stable_alpha(&self) -> Option<f64> {
        match &self.kind {
            Kind::Stable { alpha } => Some(*alpha),
            Kind::Custom { .. } => None,
        }
    }

    fn require_stable(&self, what: &str) -> Result<f64> {
        self.stable_alpha()
            .ok_or_else(|| Error::NoExactSampler(format!("{what} needs the stable kind")))
    }

    /// Tail of the Levy measure, `nu(s, infinity)`. For the stable kind this
    /// is `s^{-alpha} / Gamma(1 - alpha)` under the normalization
    /// `f(lambda) = lambda^alpha`.
    pub fn levy_tail(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain(format!("levy_tail needs s > 0, got {s}")));
        }
        let alpha = self.require_stable("levy_tail")?;
        Ok(s.powf(-alpha) / gamma_fn(1.0 - alpha)?)
    }
}

/// Shorthand for [`BernsteinFunction::stable`].
pub fn stable_bernstein(alpha: f64) -> Result<BernsteinFunction> {
    BernsteinFunction::stable(alpha)
}

/// A discretized subordinator sample path on an operational-time grid.
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    step: f64,
    values: Vec<f64>,
}

impl SubordinatorPath {
    /// Grid step in operational time.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Path values `sigma(0) = 0, sigma(dy), sigma(2 dy), ...`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("path has at least the origin")
    }

    /// Append `extra` further increments from `stream`.
    pub fn extend(&mut self, f: &BernsteinFunction, extra: usize, stream: &mut RandomStream) -> Result<()> {
        let alpha = f.require_stable("simulate_subordinator")?;
        let scale = self.step.powf(1.0 / alpha);
        let mut acc = self.last();
        self.values.reserve(extra);
        for _ in 0..extra {
            acc += scale * sample_positive_stable(alpha, stream)?;
            self.values.push(acc);
        }
        Ok(())
    }

    /// Write the path as CSV (`y,sigma`) for debugging; not a stable format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "y,sigma")?;
        for (m, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{v}", m as f64 * self.step)?;
        }
        Ok(())
    }
}

/// Simulate a subordinator path out to operational time `horizon_y` on a
/// grid of step `dy`. Only the stable kind has an exact increment sampler.
pub fn simulate_subordinator(
    f: &BernsteinFunction,
    dy: f64,
    horizon_y: f64,
    stream: &mut RandomStream,
) -> Result<SubordinatorPath> {
    if !(dy > 0.0) {
        return Err(Error::domain(format!("dy must be > 0, got {dy}")));
    }
    if !(horizon_y >= 0.0) {
        return Err(Error::domain(format!("horizon_y must be >= 0, got {horizon_y}")));
    }
    f.require_stable("simulate_subordinator")?;
    let steps = (horizon_y / dy).ceil() as usize;
    let mut path = SubordinatorPath { step: dy, values: vec![0.0] };
    path.extend(f, steps, stream)?;
    Ok(path)
}

/// A discretized inverse-subordinator path on a calendar-time grid. Each
/// entry is the grid index of the driving path, so `value(n) = m_n * dy`.
#[derive(Debug, Clone)]
pub struct InverseSubordinatorPath {
    t_step: f64,
    y_step: f64,
    indices: Vec<usize>,
}

impl InverseSubordinatorPath {
    pub fn step(&self) -> f64 {
        self.t_step
    }

    pub fn y_step(&self) -> f64 {
        self.y_step
    }

    /// Driving-grid indices `m_n` with `L(t_n) = m_n * dy`.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Path values `L(0), L(dt), L(2 dt), ...` in operational time.
    pub fn values(&self) -> Vec<f64> {
        self.indices.iter().map(|&m| m as f64 * self.y_step).collect()
    }

    pub fn value(&self, n: usize) -> f64 {
        self.indices[n] as f64 * self.y_step
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,l")?;
        for (n, &m) in self.indices.iter().enumerate() {
            writeln!(w, "{},{}", n as f64 * self.t_step, m as f64 * self.y_step)?;
        }
        Ok(())
    }
}

/// Invert a frozen subordinator path on a calendar grid of step `dt` up to
/// `horizon_t`: `L(t_n)` is the smallest grid point `y_m` with
/// `sigma(y_m) >= t_n`, found by one monotone scan from the previous answer.
pub fn invert_path(
    path: &SubordinatorPath,
    dt: f64,
    horizon_t: f64,
) -> Result<InverseSubordinatorPath> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be > 0, got {dt}")));
    }
    if path.last() < horizon_t {
        return Err(Error::PathExhausted { reached: path.last(), needed: horizon_t });
    }
    let n_steps = (horizon_t / dt).ceil() as usize;
    let mut indices = Vec::with_capacity(n_steps + 1);
    let mut m = 0usize;
    for n in 0..=n_steps {
        let t_n = n as f64 * dt;
        while path.values[m] < t_n {
            m += 1;
            if m >= path.values.len() {
                return Err(Error::PathExhausted { reached: path.last(), needed: t_n });
            }
        }
        indices.push(m);
    }
    Ok(InverseSubordinatorPath { t_step: dt, y_step: path.step, indices })
}

/// Invert while growing the driving path on demand in blocks, for callers
/// that do not know the needed operational horizon in advance.
pub fn invert_with_generator(
    f: &BernsteinFunction,
    dy: f64,
    dt: f64,
    horizon_t: f64,
    stream: &mut RandomStream,
) -> Result<(SubordinatorPath, InverseSubordinatorPath)> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be > 0, got {dt}")));
    }
    let mut path = simulate_subordinator(f, dy, 1.0f64.max(dy), stream)?;
    let block = (1.0 / dy).ceil().max(1.0) as usize;
    while path.last() < horizon_t {
        path.extend(f, block, stream)?;
    }
    let inverse = invert_path(&path, dt, horizon_t)?;
    Ok((path, inverse))
}
