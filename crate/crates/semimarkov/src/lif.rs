//! Leaky Integrate-and-Fire membrane model:
//! `dV = (-(V - v_hat)/theta + I(t)) dt + sigma dW`, with threshold-and-reset
//! spiking, its Gauss-Markov specification, and the equivalent
//! Ornstein-Uhlenbeck threshold. The time-changed (semi-Markov) variant is
//! simulated by the exit engine; this module supplies the model data.

use std::sync::Arc;

use crate::asymptotics::TailPredictor;
use crate::error::{Error, Result};
use crate::exit_mc::{estimate_mean_exit_time, ExitExperimentConfig, ProcessModel};
use crate::gauss_markov::{
    check_finite_mean, FiniteMeanCertificate, FiniteMeanTarget, FiniteMeanVerdict,
    GaussMarkovSpec, Threshold,
};
use crate::quad;
use crate::subordination::stable_bernstein;

/// External stimulus `I(t)`, contractually C^1.
#[derive(Clone)]
pub enum Stimulus {
    Constant(f64),
    TimeVarying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Stimulus {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Stimulus::Constant(i0) => *i0,
            Stimulus::TimeVarying(f) => f(t),
        }
    }
}

impl std::fmt::Debug for Stimulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stimulus::Constant(i0) => write!(f, "Stimulus::Constant({i0})"),
            Stimulus::TimeVarying(_) => write!(f, "Stimulus::TimeVarying(..)"),
        }
    }
}

/// Membrane parameters. The i.i.d.-ISI regime assumes
/// `v0 = v_hat = v_reset`, which the constructors do not force but the
/// spike-train engine relies on.
#[derive(Debug, Clone)]
pub struct LifParams {
    /// Membrane time constant, > 0.
    pub theta: f64,
    /// Resting potential.
    pub v_hat: f64,
    /// Noise amplitude, > 0.
    pub sigma: f64,
    pub stimulus: Stimulus,
    /// Initial value.
    pub v0: f64,
    /// Post-spike reset value, < v_th.
    pub v_reset: f64,
    /// Firing threshold.
    pub v_th: f64,
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::domain(format!("theta must be > 0, got {}", self.theta)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.v_reset < self.v_th) {
            return Err(Error::domain(format!(
                "v_reset ({}) must lie below v_th ({})",
                self.v_reset, self.v_th
            )));
        }
        Ok(())
    }

    /// `e^{-t/theta} int_0^t e^{s/theta} I(s) ds`, the stimulus part of the
    /// mean. Closed form for constant stimuli, adaptive quadrature (relative
    /// tolerance 1e-8) otherwise.
    pub fn stimulus_mean_term(&self, t: f64) -> f64 {
        match &self.stimulus {
            Stimulus::Constant(i0) => i0 * self.theta * (-(-t / self.theta).exp_m1()),
            Stimulus::TimeVarying(f) => {
                let theta = self.theta;
                let f = f.clone();
                quad::integrate(move |s| ((s - t) / theta).exp() * f(s), 0.0, t, 1e-8, 1e-14).value
            }
        }
    }

    /// Mean membrane potential of the non-restarted process.
    pub fn mean(&self, t: f64) -> f64 {
        let decay = (-t / self.theta).exp();
        (1.0 - decay) * self.v_hat + decay * self.v0 + self.stimulus_mean_term(t)
    }
}

/// Gauss-Markov specification of the membrane potential: OU covariance
/// factors with the stimulus-driven mean.
pub fn lif_spec(p: &LifParams) -> Result<GaussMarkovSpec> {
    p.validate()?;
    let pm = p.clone();
    let (theta, sigma) = (p.theta, p.sigma);
    Ok(GaussMarkovSpec::custom(
        move |t| pm.mean(t),
        move |t| sigma * theta / 2.0 * ((t / theta).exp() - (-t / theta).exp()),
        move |t| sigma * (-t / theta).exp(),
        move |t| theta / 2.0 * (2.0 * t / theta).exp_m1(),
        move |t| (2.0 * t / theta).exp(),
        Some(Arc::new(move |s| theta / 2.0 * (2.0 * s / theta).ln_1p())),
    ))
}

/// The threshold seen by the driving OU process: `S_U(t) = v_th - m_V(t)`.
/// Its upper bound comes from the closed form for constant stimuli and from
/// a stabilizing scan otherwise.
pub fn equivalent_ou_threshold(p: &LifParams) -> Result<Threshold> {
    p.validate()?;
    let pm = p.clone();
    let s_fn = move |t: f64| pm.v_th - pm.mean(t);
    let upper_bound = match &p.stimulus {
        Stimulus::Constant(_) => {
            // v_th - m_V is monotone between its endpoints
            let at0 = p.v_th - p.mean(0.0);
            let limit = p.v_th - (p.v_hat + p.stimulus_mean_term(700.0 * p.theta));
            Some(at0.max(limit))
        }
        Stimulus::TimeVarying(_) => {
            let probe: Vec<f64> = (0..200)
                .map(|i| {
                    let t = 1e-3 * (1e6f64 / 1e-3).powf(i as f64 / 199.0);
                    s_fn(t)
                })
                .collect();
            let max_all = probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let head_max = probe[..175].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max_all <= head_max + 1e-9 * (1.0 + head_max.abs()) {
                Some(max_all)
            } else {
                None
            }
        }
    };
    Ok(Threshold::from_fn(s_fn, upper_bound))
}

/// Monte Carlo settings for the ISI-mean estimate behind the heavy-tail
/// predictor.
#[derive(Debug, Clone, Copy)]
pub struct IsiMcSettings {
    pub n_paths: usize,
    pub dy: f64,
    pub horizon: f64,
    pub seed: u64,
}

/// The heavy-tail predictor for the time-changed firing times under a
/// constant stimulus: survival `~ C t^{-alpha} / Gamma(1-alpha)` with
/// `C = E[T1]` estimated from the Markov model.
#[derive(Debug, Clone)]
pub struct IsiTailEstimate {
    pub predictor: TailPredictor,
    /// Sample mean of the Markov-model ISI.
    pub c_mean: f64,
    /// Standard error of the mean.
    pub c_stderr: f64,
    /// Trajectories censored at the horizon (bias warning when nonzero).
    pub n_censored: usize,
    pub certificate: FiniteMeanCertificate,
}

/// Build the constant-stimulus tail predictor, refusing to emit one without
/// a finite-mean certificate.
pub fn lif_isi_tail_constant(
    p: &LifParams,
    alpha: f64,
    mc: &IsiMcSettings,
) -> Result<IsiTailEstimate> {
    p.validate()?;
    if !matches!(p.stimulus, Stimulus::Constant(_)) {
        return Err(Error::domain(
            "lif_isi_tail_constant requires a constant stimulus",
        ));
    }
    let spec = lif_spec(p)?;
    let threshold = Threshold::constant(p.v_th);
    let verdict = check_finite_mean(
        &spec,
        &threshold,
        FiniteMeanTarget::Ou { theta: p.theta, sigma: p.sigma },
    )?;
    let certificate = match verdict {
        FiniteMeanVerdict::Certified(c) => c,
        FiniteMeanVerdict::Inconclusive(why) => return Err(Error::MissingCertificate(why)),
    };
    let config = ExitExperimentConfig {
        process: ProcessModel::Lif(p.clone()),
        bernstein: None,
        threshold,
        dt: mc.dy,
        dy: mc.dy,
        horizon: mc.horizon,
        n_paths: mc.n_paths,
        seed: mc.seed,
    };
    let est = estimate_mean_exit_time(&config)?;
    let predictor = TailPredictor::finite_mean(est.mean, stable_bernstein(alpha)?)?;
    Ok(IsiTailEstimate {
        predictor,
        c_mean: est.mean,
        c_stderr: est.stderr,
        n_censored: est.n_censored,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_markov::{gm_transform, ou_spec};

    fn params(v_th: f64, i0: f64) -> LifParams {
        LifParams {
            theta: 1.0,
            v_hat: 0.0,
            sigma: 1.0,
            stimulus: Stimulus::Constant(i0),
            v0: 0.0,
            v_reset: 0.0,
            v_th,
        }
    }

    #[test]
    fn mean_relaxes_to_rest() {
        // I = 0: |m(t) - v_hat| decays as e^{-t/theta} exactly
        let mut p = params(1.0, 0.0);
        p.v_hat = -2.0;
        p.v0 = 3.0;
        for t in [0.5f64, 1.0, 4.0] {
            let want = -2.0 + 5.0 * (-t).exp();
            assert!((p.mean(t) - want).abs() < 1e-14);
        }
        // and m -> v_hat
        assert!((p.mean(60.0) - -2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_stimulus_mean_closed_form() {
        let p = params(20.0, 6.0);
        for t in [0.1f64, 1.0, 10.0] {
            let want = 6.0 * (1.0 - (-t).exp());
            assert!((p.mean(t) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn time_varying_stimulus_matches_constant_quadrature() {
        let pc = params(20.0, 6.0);
        let pv = LifParams {
            stimulus: Stimulus::TimeVarying(Arc::new(|_| 6.0)),
            ..params(20.0, 6.0)
        };
        for &t in &[0.3, 2.0, 7.0] {
            assert!(
                (pc.stimulus_mean_term(t) - pv.stimulus_mean_term(t)).abs()
                    <= 1e-8 * pc.stimulus_mean_term(t),
                "quadrature mismatch at {t}"
            );
        }
    }

    #[test]
    fn spec_matches_ou_covariance() {
        let p = params(20.0, 6.0);
        let spec = lif_spec(&p).unwrap();
        let ou = ou_spec(1.0, 1.0).unwrap();
        for &t in &[0.1, 1.0, 3.0] {
            assert_eq!(spec.cov_u(t), ou.cov_u(t));
            assert_eq!(spec.cov_v(t), ou.cov_v(t));
            assert_eq!(spec.ratio(t), ou.ratio(t));
        }
        // r(0) = 0, r'(0) = 1 regardless of theta
        let p2 = LifParams { theta: 3.7, ..params(20.0, 6.0) };
        let spec2 = lif_spec(&p2).unwrap();
        assert_eq!(spec2.ratio(0.0), 0.0);
        assert_eq!(spec2.ratio_deriv(0.0), 1.0);
    }

    #[test]
    fn transform_to_ou_is_identity() {
        let spec = lif_spec(&params(20.0, 6.0)).unwrap();
        let ou = ou_spec(1.0, 1.0).unwrap();
        let pair = gm_transform(&spec, &ou).unwrap();
        for i in 0..=300 {
            let t = i as f64;
            assert!(
                (pair.rho(t) - t).abs() <= 4e-15 * t.max(1.0),
                "rho({t}) = {}",
                pair.rho(t)
            );
            assert!((pair.phi(t) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn ou_threshold_shapes() {
        // I = 0, v0 = v_hat = 0: S_U(t) = v_th constantly
        let p0 = params(5.0, 0.0);
        let s0 = equivalent_ou_threshold(&p0).unwrap();
        for &t in &[0.0, 1.0, 9.0] {
            assert!((s0.value(t) - 5.0).abs() < 1e-13);
        }
        assert!((s0.upper_bound().unwrap() - 5.0).abs() < 1e-12);

        // constant I0 > 0: S_U decreasing from v_th to v_th - I0 theta
        let p = params(20.0, 6.0);
        let s = equivalent_ou_threshold(&p).unwrap();
        assert!((s.value(0.0) - 20.0).abs() < 1e-13);
        assert!((s.value(50.0) - 14.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let v = s.value(0.25 * i as f64);
            assert!(v <= prev);
            prev = v;
        }
        assert!((s.upper_bound().unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn predictor_requires_certificate_and_constant_stimulus() {
        let p = params(4.0, 6.0);
        let mc = IsiMcSettings { n_paths: 400, dy: 0.01, horizon: 50.0, seed: 11 };
        let est = lif_isi_tail_constant(&p, 0.75, &mc).unwrap();
        assert!(est.c_mean > 0.0);
        assert_eq!(est.n_censored, 0);
        // mean crossing of m(t) = 6(1 - e^-t) over 4 happens near ln 3
        assert!((est.c_mean - 1.1).abs() < 0.25, "C = {}", est.c_mean);

        let bad = LifParams {
            stimulus: Stimulus::TimeVarying(Arc::new(|_| 6.0)),
            ..params(4.0, 6.0)
        };
        assert!(lif_isi_tail_constant(&bad, 0.75, &mc).is_err());
    }

    #[test]
    fn predictor_decay_exponent_on_loglog_grid() {
        // regression slope of log predictor vs log t over [20, 60] must sit
        // near -alpha for f = lambda^alpha
        let p = params(4.0, 6.0);
        let mc = IsiMcSettings { n_paths: 400, dy: 0.01, horizon: 50.0, seed: 11 };
        let est = lif_isi_tail_constant(&p, 0.75, &mc).unwrap();
        let ts: Vec<f64> = (0..=20).map(|i| 20.0 + 2.0 * i as f64).collect();
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| est.predictor.predict_tail(t).unwrap().ln())
            .collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let slope: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        assert!(
            (-0.85..=-0.65).contains(&slope),
            "decay exponent {slope} outside [-0.85, -0.65]"
        );
    }
}
