//! Closed-form predictors for the tail and small-time behaviour of exit
//! times of time-changed processes, and the diagnostic ratios used to
//! compare them against Monte Carlo estimates.
//!
//! With `g(s) = E[1 - exp(-s T)]` regularly varying at 0 with index `beta`
//! and the Laplace exponent `f` regularly varying at 0 with index `alpha`,
//! the survival of the time-changed exit behaves like
//! `g(f(1/t)) / Gamma(1 - alpha beta)` for large `t`; the special cases
//! below (finite mean, exponential operational exit, driftless Brownian
//! level crossing) have explicit forms, and the exponential case is exact
//! at every `t` through the Mittag-Leffler function. Near zero, a CDF
//! regularly varying with index `rho` maps to
//! `Gamma(1+rho)/Gamma(1+alpha rho) F(1/f(1/t))`.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exit_mc::SurvivalEstimate;
use crate::special::{gamma_fn, ml_value};
use crate::subordination::BernsteinFunction;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Fraction of surviving trajectories below which a diagnostic row is
/// flagged unreliable.
pub const RELIABLE_ALIVE_FRACTION: f64 = 0.01;

#[derive(Clone)]
enum TailKind {
    General { g: RealFn, beta: f64 },
    FiniteMean { c: f64 },
    ExponentialT { h: f64 },
    BmNoDrift { c: f64 },
    MittagLeffler { h: f64 },
}

impl std::fmt::Debug for TailKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TailKind::General { beta, .. } => write!(f, "general(beta={beta})"),
            TailKind::FiniteMean { c } => write!(f, "finite-mean(C={c})"),
            TailKind::ExponentialT { h } => write!(f, "exponential-T(h={h})"),
            TailKind::BmNoDrift { c } => write!(f, "bm-no-drift(c={c})"),
            TailKind::MittagLeffler { h } => write!(f, "mittag-leffler(h={h})"),
        }
    }
}

/// Large-time survival predictor for an exit time of `M(L(t))`.
#[derive(Debug, Clone)]
pub struct TailPredictor {
    kind: TailKind,
    bernstein: BernsteinFunction,
}

impl TailPredictor {
    fn check_index(f: &BernsteinFunction) -> Result<()> {
        let a = f.index_at_zero();
        if !(0.0..1.0).contains(&a) {
            return Err(Error::domain(format!(
                "tail predictors need index_at_zero in [0, 1), got {a}"
            )));
        }
        Ok(())
    }

    /// `g(f(1/t)) / Gamma(1 - alpha beta)` for a supplied `g` with index
    /// `beta` in [0, 1].
    pub fn general(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: f64,
        bernstein: BernsteinFunction,
    ) -> Result<Self> {
        Self::check_index(&bernstein)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(TailPredictor { kind: TailKind::General { g: Arc::new(g), beta }, bernstein })
    }

    /// `C f(1/t) / Gamma(1 - alpha)` for an operational exit with mean `C`.
    pub fn finite_mean(c: f64, bernstein: BernsteinFunction) -> Result<Self> {
        Self::check_index(&bernstein)?;
        if !(c > 0.0) {
            return Err(Error::domain(format!("mean C must be > 0, got {c}")));
        }
        Ok(TailPredictor { kind: TailKind::FiniteMean { c }, bernstein })
    }

    /// `t^{-alpha} / (h Gamma(1 - alpha))` for an Exp(h) operational exit
    /// under the stable clock (the asymptotic form of the exact
    /// Mittag-Leffler survival).
    pub fn exponential_t(h: f64, bernstein: BernsteinFunction) -> Result<Self> {
        Self::check_index(&bernstein)?;
        if bernstein.stable_alpha().is_none() {
            return Err(Error::NoExactSampler(
                "exponential-T predictor needs the stable kind".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::domain(format!("rate h must be > 0, got {h}")));
        }
        Ok(TailPredictor { kind: TailKind::ExponentialT { h }, bernstein })
    }

    /// `(1 - exp(-c sqrt(2 f(1/t)))) / Gamma(1 - alpha/2)` for a driftless
    /// Brownian exit over the level `c`.
    pub fn bm_no_drift(c: f64, bernstein: BernsteinFunction) -> Result<Self> {
        Self::check_index(&bernstein)?;
        if !(c > 0.0) {
            return Err(Error::domain(format!("level c must be > 0, got {c}")));
        }
        Ok(TailPredictor { kind: TailKind::BmNoDrift { c }, bernstein })
    }

    /// Exact survival `E_alpha(-h t^alpha)` for an Exp(h) operational exit
    /// under the stable clock.
    pub fn mittag_leffler(h: f64, bernstein: BernsteinFunction) -> Result<Self> {
        Self::check_index(&bernstein)?;
        if bernstein.stable_alpha().is_none() {
            return Err(Error::NoExactSampler(
                "Mittag-Leffler predictor needs the stable kind".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::domain(format!("rate h must be > 0, got {h}")));
        }
        Ok(TailPredictor { kind: TailKind::MittagLeffler { h }, bernstein })
    }

    pub fn bernstein(&self) -> &BernsteinFunction {
        &self.bernstein
    }

    /// True for the kinds whose prediction is a pure power law in t, for
    /// which the log-ratio diagnostic is meaningful.
    pub fn is_power_law(&self) -> bool {
        matches!(
            self.kind,
            TailKind::FiniteMean { .. } | TailKind::ExponentialT { .. }
        )
    }

    /// Predicted survival at time `t`.
    pub fn predict_tail(&self, t: f64) -> Result<f64> {
        let alpha = self.bernstein.index_at_zero();
        match &self.kind {
            TailKind::MittagLeffler { h } => {
                if !(t >= 0.0) {
                    return Err(Error::domain(format!("t must be >= 0, got {t}")));
                }
                let a = self.bernstein.stable_alpha().expect("validated stable");
                ml_value(a, -h * t.powf(a))
            }
            kind => {
                if !(t > 0.0) {
                    return Err(Error::domain(format!("t must be > 0, got {t}")));
                }
                let f_inv_t = self.bernstein.value(1.0 / t);
                Ok(match kind {
                    TailKind::General { g, beta } => {
                        g(f_inv_t) / gamma_fn(1.0 - alpha * beta)?
                    }
                    TailKind::FiniteMean { c } => c * f_inv_t / gamma_fn(1.0 - alpha)?,
                    TailKind::ExponentialT { h } => {
                        let a = self.bernstein.stable_alpha().expect("validated stable");
                        t.powf(-a) / (h * gamma_fn(1.0 - a)?)
                    }
                    TailKind::BmNoDrift { c } => {
                        (-(-c * (2.0 * f_inv_t).sqrt()).exp_m1()) / gamma_fn(1.0 - alpha / 2.0)?
                    }
                    TailKind::MittagLeffler { .. } => unreachable!(),
                })
            }
        }
    }
}

/// Small-time CDF predictor: `Gamma(1+rho)/Gamma(1+alpha rho) F(1/f(1/t))`
/// for an operational CDF `F` regularly varying at zero with index `rho`.
#[derive(Clone)]
pub struct ZeroPredictor {
    f0: RealFn,
    rho: f64,
    bernstein: BernsteinFunction,
}

impl ZeroPredictor {
    pub fn new(
        f0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho: f64,
        bernstein: BernsteinFunction,
    ) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::domain(format!("rho must be > 0, got {rho}")));
        }
        if !(bernstein.index_at_infinity() > 0.0) {
            return Err(Error::domain(
                "zero predictor needs index_at_infinity > 0",
            ));
        }
        Ok(ZeroPredictor { f0: Arc::new(f0), rho, bernstein })
    }

    /// Predicted CDF at small `t`.
    pub fn predict_zero(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("t must be > 0, got {t}")));
        }
        let alpha = self.bernstein.index_at_infinity();
        let arg = 1.0 / self.bernstein.value(1.0 / t);
        Ok(gamma_fn(1.0 + self.rho)? / gamma_fn(1.0 + alpha * self.rho)? * (self.f0)(arg))
    }
}

/// One row of the tail diagnostic table.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticRow {
    pub t: f64,
    /// `(log S(t) + log Gamma(1-alpha)) / log t`; only defined for
    /// power-law predictor kinds.
    pub rl: Option<f64>,
    /// `S(t) / predicted(t)`.
    pub r: f64,
    pub n_alive: u64,
    pub reliable: bool,
}

/// Diagnostic ratios of an empirical survival against a tail predictor at
/// the requested grid times. Rows with fewer than 1% of trajectories still
/// alive are flagged unreliable (kept, never dropped).
pub fn diagnostic_ratios(
    est: &SurvivalEstimate,
    predictor: &TailPredictor,
    ts: &[f64],
) -> Result<Vec<DiagnosticRow>> {
    let alpha = predictor.bernstein().index_at_zero();
    let log_gamma_term = gamma_fn(1.0 - alpha)?.ln();
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let s = est.survival_at(t)?;
        if s <= 0.0 {
            return Err(Error::Diagnostic(format!("zero survival at t = {t}")));
        }
        let n_alive = est.n_alive_at(t)?;
        let rl = predictor
            .is_power_law()
            .then(|| (s.ln() + log_gamma_term) / t.ln());
        rows.push(DiagnosticRow {
            t,
            rl,
            r: s / predictor.predict_tail(t)?,
            n_alive,
            reliable: n_alive as f64 >= RELIABLE_ALIVE_FRACTION * est.n_paths() as f64,
        });
    }
    Ok(rows)
}

/// CSV emission for diagnostic tables: `t,rl,r,n_alive,reliable`.
pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticRow], seed: u64, mut w: W) -> Result<()> {
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "t,rl,r,n_alive,reliable")?;
    for row in rows {
        let rl = row.rl.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", row.t, rl, row.r, row.n_alive, row.reliable)?;
    }
    Ok(())
}

/// The ratio sequence `F(t_i)/t_i^n` for one power `n` along a decreasing
/// time grid: a finite-sample proxy for rapid decay at zero.
#[derive(Debug, Clone)]
pub struct RapidDecaySequence {
    pub power: f64,
    pub ts: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Nonincreasing toward zero along the decreasing grid.
    pub decreasing: bool,
    /// Strictly decreasing (fails when the CDF is identically zero).
    pub strictly_decreasing: bool,
    pub all_zero: bool,
}

/// Report `F(t)/t^n` along `ts` (which must be strictly decreasing) for
/// each requested power. No limit claim is made: the report only states
/// whether each finite sequence decreases toward zero.
pub fn rapid_decay_diagnostic(
    est: &SurvivalEstimate,
    powers: &[f64],
    ts: &[f64],
) -> Result<Vec<RapidDecaySequence>> {
    if ts.len() < 2 {
        return Err(Error::Diagnostic("need at least two grid times".into()));
    }
    if !ts.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::Diagnostic("grid times must be strictly decreasing".into()));
    }
    let min_t = *ts.last().expect("nonempty");
    if min_t < est.t_step() {
        return Err(Error::Diagnostic(format!(
            "insufficient small-t resolution: estimate step {} exceeds smallest t {min_t}",
            est.t_step()
        )));
    }
    let mut out = Vec::with_capacity(powers.len());
    for &n in powers {
        let mut ratios = Vec::with_capacity(ts.len());
        for &t in ts {
            ratios.push(est.cdf_at(t)? / t.powf(n));
        }
        let decreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
        let strictly = ratios.windows(2).all(|w| w[1] < w[0]);
        let all_zero = ratios.iter().all(|&r| r == 0.0);
        out.push(RapidDecaySequence {
            power: n,
            ts: ts.to_vec(),
            ratios,
            decreasing,
            strictly_decreasing: strictly,
            all_zero,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordination::stable_bernstein;

    #[test]
    fn finite_mean_example_value() {
        // C = 1, f = lambda^0.7, t = 50: 50^{-0.7} / Gamma(0.3)
        let p = TailPredictor::finite_mean(1.0, stable_bernstein(0.7).unwrap()).unwrap();
        let v = p.predict_tail(50.0).unwrap();
        assert!((v - 0.021_618_321_664_621_263).abs() < 1e-14);
    }

    #[test]
    fn general_with_linear_g_reduces_to_finite_mean() {
        let f = stable_bernstein(0.6).unwrap();
        let c = 2.3;
        let general = TailPredictor::general(move |s| c * s, 1.0, f.clone()).unwrap();
        let finite = TailPredictor::finite_mean(c, f).unwrap();
        for &t in &[2.0, 10.0, 100.0, 1e4] {
            let a = general.predict_tail(t).unwrap();
            let b = finite.predict_tail(t).unwrap();
            assert!((a - b).abs() <= 1e-15 * b);
        }
    }

    #[test]
    fn ml_predictor_at_zero_is_one() {
        let p = TailPredictor::mittag_leffler(1.0, stable_bernstein(0.5).unwrap()).unwrap();
        assert_eq!(p.predict_tail(0.0).unwrap(), 1.0);
    }

    #[test]
    fn bm_no_drift_value() {
        // c = 1, f = lambda^0.75, t = 50
        let p = TailPredictor::bm_no_drift(1.0, stable_bernstein(0.75).unwrap()).unwrap();
        let v = p.predict_tail(50.0).unwrap();
        assert!((v - 0.193_998_377_832_066_31).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn exponential_t_consistent_with_ml_at_large_t() {
        let f = stable_bernstein(0.5).unwrap();
        let asym = TailPredictor::exponential_t(1.0, f.clone()).unwrap();
        let exact = TailPredictor::mittag_leffler(1.0, f).unwrap();
        let t = 1e3;
        let ratio = exact.predict_tail(t).unwrap() / asym.predict_tail(t).unwrap();
        assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");
    }

    #[test]
    fn zero_predictor_values() {
        // rho = 1, F0(t) = t, f = lambda^alpha: prediction t^alpha / Gamma(1+alpha)
        let f = stable_bernstein(0.5).unwrap();
        let p = ZeroPredictor::new(|t| t, 1.0, f).unwrap();
        let v = p.predict_zero(0.01).unwrap();
        assert!((v - 0.1 / gamma_fn(1.5).unwrap()).abs() < 1e-14);
        assert!((v - 0.112_837_916_709_551_26).abs() < 1e-12);

        // degenerate alpha = 1 (identity clock): prediction = F0(t) exactly
        let ident = BernsteinFunction::custom(|l| l, 1.0, 1.0);
        let p1 = ZeroPredictor::new(|t| t * t, 1.0, ident).unwrap();
        let v1 = p1.predict_zero(0.2).unwrap();
        assert!((v1 - 0.04).abs() < 1e-15);
    }

    use crate::subordination::BernsteinFunction;

    #[test]
    fn diagnostics_on_exact_power_law() {
        // S exactly equal to A_1(t) = t^-a / Gamma(1-a): R = 1, RL = -a
        let alpha = 0.7;
        let f = stable_bernstein(alpha).unwrap();
        let g = gamma_fn(1.0 - alpha).unwrap();
        let t_step = 0.5;
        let survival: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64 * t_step;
                if t == 0.0 {
                    1.0
                } else {
                    t.powf(-alpha) / g
                }
            })
            .collect();
        let est = SurvivalEstimate::from_survival_curve(t_step, survival, 10_000, 0);
        let p = TailPredictor::finite_mean(1.0, f).unwrap();
        let rows = diagnostic_ratios(&est, &p, &[25.0, 50.0]).unwrap();
        for row in rows {
            assert!((row.r - 1.0).abs() < 1e-12);
            assert!((row.rl.unwrap() + alpha).abs() < 1e-12);
            assert!(row.reliable);
        }
    }

    #[test]
    fn diagnostics_flag_unreliable_and_zero_survival() {
        let t_step = 1.0;
        let survival = vec![1.0, 0.5, 0.005, 0.0];
        let est = SurvivalEstimate::from_survival_curve(t_step, survival, 1000, 0);
        let p = TailPredictor::finite_mean(1.0, stable_bernstein(0.5).unwrap()).unwrap();
        let rows = diagnostic_ratios(&est, &p, &[1.0, 2.0]).unwrap();
        assert!(rows[0].reliable);
        assert!(!rows[1].reliable);
        assert!(matches!(
            diagnostic_ratios(&est, &p, &[3.0]),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn rapid_decay_flags_power_law_as_not_decaying() {
        // CDF double F(t) = t^{1/2}: F/t grows as t decreases
        let t_step = 0.01;
        let survival: Vec<f64> = (0..100)
            .map(|i| 1.0 - (i as f64 * t_step).sqrt().min(1.0))
            .collect();
        let est = SurvivalEstimate::from_survival_curve(t_step, survival, 100_000, 0);
        let report = rapid_decay_diagnostic(&est, &[1.0], &[0.4, 0.2, 0.1]).unwrap();
        assert!(!report[0].decreasing);
        assert!(!report[0].strictly_decreasing);
    }

    #[test]
    fn rapid_decay_all_zero_below_cutoff() {
        let t_step = 0.01;
        let survival: Vec<f64> = (0..100)
            .map(|i| if i as f64 * t_step < 0.5 { 1.0 } else { 0.2 })
            .collect();
        let est = SurvivalEstimate::from_survival_curve(t_step, survival, 1000, 0);
        let report = rapid_decay_diagnostic(&est, &[1.0, 2.0], &[0.4, 0.2, 0.1]).unwrap();
        for seq in report {
            assert!(seq.all_zero);
            assert!(seq.decreasing);
            assert!(!seq.strictly_decreasing);
        }
        // resolution guard
        assert!(rapid_decay_diagnostic(&est, &[1.0], &[0.4, 0.001]).is_err());
    }
}
