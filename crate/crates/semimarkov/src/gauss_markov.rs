//! Gauss-Markov process specifications and the transformation calculus
//! between them.
//!
//! A Gauss-Markov process is described here by its mean `m(t)`, triangular
//! covariance factors `u(t)`, `v(t)` (so `Cov(G(tau), G(t)) = u(tau) v(t)`
//! for `tau <= t`), and the strictly increasing ratio `r(t) = u(t)/v(t)`.
//! The ratio is the intrinsic clock: any two such processes started at their
//! means are related by the time map `rho(t) = r2^{-1}(r1(t))` and space
//! factor `phi(t) = v1(t) / v2(rho(t))`, and first-passage densities pull
//! back through `f1(t) = rho'(t) f2(rho(t))`.
//!
//! The module also hosts the sufficient finite-mean criteria (positive
//! infimum of `rho'` toward a target with a bounded transformed threshold)
//! and the small-time envelope `K1 t^{1/2} exp(-K2/t)` with constants
//! `K2 = C/l1`, `K1 = l1^{-1/2} exp(C l2 / l1^2) / K2` built from the local
//! behaviour `rho(t) = l1 t + l2 t^2 + o(t^2)`.

use std::sync::Arc;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Mean, covariance factors and ratio of a Gauss-Markov process on
/// `[0, infinity)`. The ratio must be continuous and strictly increasing
/// with nonvanishing derivative wherever a transform is requested.
#[derive(Clone)]
pub struct GaussMarkovSpec {
    mean: RealFn,
    cov_u: RealFn,
    cov_v: RealFn,
    ratio: RealFn,
    ratio_deriv: RealFn,
    ratio_inv: Option<RealFn>,
}

impl std::fmt::Debug for GaussMarkovSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GaussMarkovSpec(closed_inverse: {})", self.ratio_inv.is_some())
    }
}

impl GaussMarkovSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        mean: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cov_u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cov_v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ratio: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ratio_deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ratio_inv: Option<RealFn>,
    ) -> Self {
        GaussMarkovSpec {
            mean: Arc::new(mean),
            cov_u: Arc::new(cov_u),
            cov_v: Arc::new(cov_v),
            ratio: Arc::new(ratio),
            ratio_deriv: Arc::new(ratio_deriv),
            ratio_inv,
        }
    }

    pub fn mean(&self, t: f64) -> f64 {
        (self.mean)(t)
    }

    pub fn cov_u(&self, t: f64) -> f64 {
        (self.cov_u)(t)
    }

    pub fn cov_v(&self, t: f64) -> f64 {
        (self.cov_v)(t)
    }

    pub fn ratio(&self, t: f64) -> f64 {
        (self.ratio)(t)
    }

    pub fn ratio_deriv(&self, t: f64) -> f64 {
        (self.ratio_deriv)(t)
    }

    /// Covariance `Cov(G(tau), G(t))` for `tau <= t`.
    pub fn covariance(&self, tau: f64, t: f64) -> f64 {
        debug_assert!(tau <= t);
        self.cov_u(tau) * self.cov_v(t)
    }

    /// Variance at time `t`.
    pub fn variance(&self, t: f64) -> f64 {
        self.cov_u(t) * self.cov_v(t)
    }

    /// Solve `ratio(t) = s` for `t >= 0`, by closed form when available and
    /// by monotone bisection (tolerance 1e-10, bracket grown geometrically)
    /// otherwise. NaN signals an unreachable value.
    pub fn invert_ratio(&self, s: f64) -> f64 {
        if let Some(inv) = &self.ratio_inv {
            return inv(s);
        }
        invert_monotone(&*self.ratio, s)
    }
}

/// Bisection inverse of a strictly increasing `f` with `f(0) = 0`.
fn invert_monotone(f: &(dyn Fn(f64) -> f64 + Send + Sync), s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s.is_infinite() {
        return f64::INFINITY;
    }
    let mut hi = 1.0f64;
    let mut guard = 0;
    while f(hi) < s {
        hi *= 2.0;
        guard += 1;
        if guard > 80 || !f(hi).is_finite() {
            return f64::NAN; // value not reached on a finite bracket
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Standard or drifted Wiener process: `m(t) = drift * t`, `u = t`, `v = 1`.
pub fn wiener_spec(drift: f64) -> GaussMarkovSpec {
    GaussMarkovSpec::custom(
        move |t| drift * t,
        |t| t,
        |_| 1.0,
        |t| t,
        |_| 1.0,
        Some(Arc::new(|s| s)),
    )
}

/// Ornstein-Uhlenbeck process `dU = -U/theta dt + sigma dW`, `U(0) = 0`:
/// `u(t) = sigma theta/2 (e^{t/theta} - e^{-t/theta})`,
/// `v(t) = sigma e^{-t/theta}`, `r(t) = theta/2 (e^{2t/theta} - 1)`.
pub fn ou_spec(theta: f64, sigma: f64) -> Result<GaussMarkovSpec> {
    if !(theta > 0.0) {
        return Err(Error::domain(format!("theta must be > 0, got {theta}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(GaussMarkovSpec::custom(
        |_| 0.0,
        move |t| sigma * theta / 2.0 * ((t / theta).exp() - (-t / theta).exp()),
        move |t| sigma * (-t / theta).exp(),
        move |t| theta / 2.0 * (2.0 * t / theta).exp_m1(),
        move |t| (2.0 * t / theta).exp(),
        Some(Arc::new(move |s| theta / 2.0 * (2.0 * s / theta).ln_1p())),
    ))
}

/// The time map and space factor relating two Gauss-Markov processes.
#[derive(Clone)]
pub struct TransformPair {
    rho: RealFn,
    rho_deriv: RealFn,
    rho_inverse: RealFn,
    phi: RealFn,
}

impl TransformPair {
    pub fn rho(&self, t: f64) -> f64 {
        (self.rho)(t)
    }

    pub fn rho_deriv(&self, t: f64) -> f64 {
        (self.rho_deriv)(t)
    }

    pub fn rho_inverse(&self, s: f64) -> f64 {
        (self.rho_inverse)(s)
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }
}

/// Doob representation of `g` through a standard Wiener process:
/// `rho(t) = kappa r(t)`, `phi(t) = v(t)/sqrt(kappa)`, so that
/// `G(t) = m(t) + phi(t) W(rho(t))` in law when `G` starts at its mean.
pub fn doob_transform(g: &GaussMarkovSpec, kappa: f64) -> Result<TransformPair> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
    }
    let g1 = g.clone();
    let g2 = g.clone();
    let g3 = g.clone();
    let g4 = g.clone();
    Ok(TransformPair {
        rho: Arc::new(move |t| kappa * g1.ratio(t)),
        rho_deriv: Arc::new(move |t| kappa * g2.ratio_deriv(t)),
        rho_inverse: Arc::new(move |s| g3.invert_ratio(s / kappa)),
        phi: Arc::new(move |t| g4.cov_v(t) / kappa.sqrt()),
    })
}

/// General transform between two Gauss-Markov processes started at their
/// means: `rho = r2^{-1} o r1`, `phi(t) = v1(t)/v2(rho(t))`; then
/// `G1(t) = m1(t) - phi(t) m2(rho(t)) + phi(t) G2(rho(t))` in
/// one-dimensional distributions.
pub fn gm_transform(g1: &GaussMarkovSpec, g2: &GaussMarkovSpec) -> Result<TransformPair> {
    // probe invertibility of r2 over a coarse range of r1 values
    for &t in &[0.25f64, 1.0, 4.0, 16.0] {
        let r1 = g1.ratio(t);
        if r1.is_finite() && g2.invert_ratio(r1).is_nan() {
            return Err(Error::RatioNotInvertible(format!(
                "r1({t}) = {r1} exceeds the range of the target ratio"
            )));
        }
    }
    let (a1, a2) = (g1.clone(), g2.clone());
    let rho = Arc::new(move |t: f64| a2.invert_ratio(a1.ratio(t)));
    let (b1, b2) = (g1.clone(), g2.clone());
    let rho_c = rho.clone();
    let rho_deriv = Arc::new(move |t: f64| b1.ratio_deriv(t) / b2.ratio_deriv(rho_c(t)));
    let (c1, c2) = (g1.clone(), g2.clone());
    let rho_inverse = Arc::new(move |s: f64| c1.invert_ratio(c2.ratio(s)));
    let (d1, d2) = (g1.clone(), g2.clone());
    let rho_c2 = rho.clone();
    let phi = Arc::new(move |t: f64| d1.cov_v(t) / d2.cov_v(rho_c2(t)));
    Ok(TransformPair { rho, rho_deriv, rho_inverse, phi })
}

/// A time-dependent boundary `S(t)`; the open set is `{ x < S(t) }`.
#[derive(Clone)]
pub struct Threshold {
    s_fn: RealFn,
    upper_bound: Option<f64>,
}

impl std::fmt::Debug for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Threshold(upper_bound: {:?})", self.upper_bound)
    }
}

impl Threshold {
    pub fn constant(level: f64) -> Self {
        Threshold { s_fn: Arc::new(move |_| level), upper_bound: Some(level) }
    }

    /// A threshold from an arbitrary (contractually C^2) function, with an
    /// optional caller-supplied supremum.
    pub fn from_fn(
        s_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        upper_bound: Option<f64>,
    ) -> Self {
        Threshold { s_fn: Arc::new(s_fn), upper_bound }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.s_fn)(t)
    }

    pub fn upper_bound(&self) -> Option<f64> {
        self.upper_bound
    }
}

/// Geometric scan of `f` over `[lo, hi]`, stopping at the first non-finite
/// value (ratio clocks of exponential type overflow past ~350 theta).
fn geometric_scan(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut t = lo;
    for _ in 0..n {
        let v = f(t);
        if !v.is_finite() {
            break;
        }
        out.push((t, v));
        t *= ratio;
    }
    out
}

/// Map a threshold for `g1` to the equivalent threshold for `g2`:
/// `S2(t) = (S1(rho^{-1}(t)) - m1(rho^{-1}(t))) / phi(rho^{-1}(t)) + m2(t)`.
/// The upper bound is propagated from a geometric scan when the scanned
/// maximum has stabilized; otherwise it is left unknown.
pub fn transform_threshold(
    g1: &GaussMarkovSpec,
    g2: &GaussMarkovSpec,
    s1: &Threshold,
) -> Result<Threshold> {
    let pair = gm_transform(g1, g2)?;
    let g1c = g1.clone();
    let g2c = g2.clone();
    let s1c = s1.clone();
    let s_fn: RealFn = Arc::new(move |t: f64| {
        let back = pair.rho_inverse(t);
        (s1c.value(back) - g1c.mean(back)) / pair.phi(back) + g2c.mean(t)
    });
    let scan = geometric_scan(&*s_fn.clone(), 1e-3, 1e6, 240);
    let upper_bound = scanned_upper_bound(&scan);
    Ok(Threshold { s_fn, upper_bound })
}

/// Supremum certified from a scan: requires the running maximum to have
/// stopped growing over the final decade of the (possibly truncated) grid.
fn scanned_upper_bound(scan: &[(f64, f64)]) -> Option<f64> {
    if scan.len() < 40 {
        return None;
    }
    let max_all = scan.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let tail_start = scan.len() - scan.len() / 8;
    let max_head = scan[..tail_start]
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_all <= max_head + 1e-9 * (1.0 + max_head.abs()) {
        Some(max_all)
    } else {
        None
    }
}

/// Pull a first-passage density back through a transform pair:
/// `f1(t) = rho'(t) f2(rho(t))`.
pub fn transform_fpt_density(pair: &TransformPair, f2: RealFn) -> RealFn {
    let pair = pair.clone();
    Arc::new(move |t: f64| pair.rho_deriv(t) * f2(pair.rho(t)))
}

/// Target process for the finite-mean criteria.
#[derive(Debug, Clone, Copy)]
pub enum FiniteMeanTarget {
    Ou { theta: f64, sigma: f64 },
    DriftedWiener { delta: f64 },
}

/// Evidence backing a finite-mean certificate.
#[derive(Debug, Clone)]
pub struct FiniteMeanCertificate {
    /// Left end of the scan window for `inf rho'`.
    pub scan_from: f64,
    /// Scanned infimum of the time-map derivative.
    pub inf_rho_deriv: f64,
    /// Certified upper bound of the transformed threshold.
    pub threshold_sup: f64,
    /// Number of scan points that produced finite values.
    pub scan_points: usize,
}

/// Outcome of the sufficient finite-mean check. The criteria are one-sided:
/// failure to certify never claims the mean is infinite.
#[derive(Debug, Clone)]
pub enum FiniteMeanVerdict {
    Certified(FiniteMeanCertificate),
    Inconclusive(String),
}

impl FiniteMeanVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, FiniteMeanVerdict::Certified(_))
    }
}

/// Check the sufficient conditions for `E[T] < infinity` of the exit of `g`
/// over `s`, by transforming toward a target with known finite-mean
/// behaviour: the time-map derivative must have a positive infimum on some
/// `[k, infinity)` and the transformed threshold must be upper bounded
/// (with positive start, for the drifted-Wiener target).
pub fn check_finite_mean(
    g: &GaussMarkovSpec,
    s: &Threshold,
    target: FiniteMeanTarget,
) -> Result<FiniteMeanVerdict> {
    let target_spec = match target {
        FiniteMeanTarget::Ou { theta, sigma } => ou_spec(theta, sigma)?,
        FiniteMeanTarget::DriftedWiener { delta } => {
            if !(delta > 0.0) {
                return Ok(FiniteMeanVerdict::Inconclusive(format!(
                    "drifted-Wiener target needs delta > 0, got {delta}"
                )));
            }
            wiener_spec(delta)
        }
    };
    let pair = gm_transform(g, &target_spec)?;
    let s2 = transform_threshold(g, &target_spec, s)?;

    let scan_from = 1.0;
    let scan = geometric_scan(&|t| pair.rho_deriv(t), scan_from, 1e6, 240);
    if scan.len() < 40 {
        return Ok(FiniteMeanVerdict::Inconclusive(
            "time-map derivative not finite over enough of the scan window".into(),
        ));
    }
    let inf = scan.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    if !(inf > 1e-12) {
        return Ok(FiniteMeanVerdict::Inconclusive(format!(
            "scanned infimum of rho' is {inf}, not positive"
        )));
    }
    // limit check: a derivative still strictly decreasing at the scan
    // horizon cannot be certified to stay away from zero
    let tail_start = scan.len() - scan.len() / 8;
    let tail_min = scan[tail_start..].iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let head_min = scan[..tail_start].iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    if tail_min < head_min * (1.0 - 1e-9) {
        return Ok(FiniteMeanVerdict::Inconclusive(
            "rho' still decreasing at the scan horizon; positive infimum not certified".into(),
        ));
    }

    let sup = match s2.upper_bound() {
        Some(b) => b,
        None => {
            return Ok(FiniteMeanVerdict::Inconclusive(
                "transformed threshold not certified upper bounded".into(),
            ))
        }
    };
    if matches!(target, FiniteMeanTarget::DriftedWiener { .. }) && !(s2.value(0.0) > 0.0) {
        return Ok(FiniteMeanVerdict::Inconclusive(
            "transformed threshold must start positive for the drifted-Wiener target".into(),
        ));
    }
    Ok(FiniteMeanVerdict::Certified(FiniteMeanCertificate {
        scan_from,
        inf_rho_deriv: inf,
        threshold_sup: sup,
        scan_points: scan.len(),
    }))
}

/// The small-time envelope `H(t) = K1 t^{1/2} exp(-K2/t)` matching
/// `F(t) = int_0^{rho(t)} s^{-3/2} e^{-C/s} ds` as `t -> 0`, given the local
/// expansion `rho(t) = l1 t + l2 t^2 + o(t^2)` with `l1 > 0` (for a C^2 time
/// map with `rho(0) = 0`: `l1 = rho'(0)`, `l2 = rho''(0)/2`).
#[derive(Debug, Clone, Copy)]
pub struct SmallTimeApproximant {
    pub k1: f64,
    pub k2: f64,
}

impl SmallTimeApproximant {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.k1 * t.sqrt() * (-self.k2 / t).exp()
    }
}

pub fn small_time_approximant(c: f64, l1: f64, l2: f64) -> Result<SmallTimeApproximant> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("C must be > 0, got {c}")));
    }
    if !(l1 > 0.0) {
        return Err(Error::domain(format!("l1 must be > 0, got {l1}")));
    }
    if !l2.is_finite() {
        return Err(Error::domain(format!("l2 must be finite, got {l2}")));
    }
    let k2 = c / l1;
    let c_tilde = l1.powf(-0.5) * (c * l2 / (l1 * l1)).exp();
    Ok(SmallTimeApproximant { k1: c_tilde / k2, k2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn ou_ratio_closed_forms() {
        let ou = ou_spec(2.0, 1.0).unwrap();
        assert_eq!(ou.ratio(0.0), 0.0);
        // theta = 2: r(1) = e - 1
        assert!((ou.ratio(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        for &t in &[0.1, 1.0, 5.0] {
            let back = ou.invert_ratio(ou.ratio(t));
            assert!((back - t).abs() <= 1e-12 * t, "roundtrip at {t}: {back}");
        }
        assert!(ou_spec(0.0, 1.0).is_err());
        assert!(ou_spec(1.0, -1.0).is_err());
    }

    #[test]
    fn wiener_spec_shape() {
        let w = wiener_spec(0.0);
        assert_eq!(w.mean(3.0), 0.0);
        assert_eq!(w.ratio(7.0), 7.0);
        // Cov(W(1), W(2)) = min = 1 = u(1) v(2)
        assert_eq!(w.covariance(1.0, 2.0), 1.0);
        let wd = wiener_spec(1.5);
        assert!((wd.mean(2.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn doob_on_wiener_is_identity() {
        let pair = doob_transform(&wiener_spec(0.0), 1.0).unwrap();
        for &t in &[0.0, 0.5, 2.0, 10.0] {
            assert_eq!(pair.rho(t), t);
            assert_eq!(pair.phi(t), 1.0);
        }
    }

    #[test]
    fn doob_on_ou_gives_ou_ratio() {
        let ou = ou_spec(1.0, 1.0).unwrap();
        let pair = doob_transform(&ou, 1.0).unwrap();
        for &t in &[0.1, 1.0, 2.5] {
            assert!((pair.rho(t) - 0.5 * ((2.0 * t).exp() - 1.0)).abs() < 1e-12);
        }
        // kappa scales rho and shrinks phi
        let pair2 = doob_transform(&ou, 4.0).unwrap();
        assert!((pair2.rho(1.0) - 4.0 * ou.ratio(1.0)).abs() < 1e-12);
        assert!((pair2.phi(1.0) - ou.cov_v(1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn doob_covariance_reconstruction() {
        // simulate W exactly at (rho(0.5), rho(1)); empirical
        // Cov(G(0.5), G(1)) must match u(0.5) v(1) within 3 se
        let ou = ou_spec(1.0, 1.0).unwrap();
        let pair = doob_transform(&ou, 1.0).unwrap();
        let (t1, t2) = (0.5, 1.0);
        let (r1, r2) = (pair.rho(t1), pair.rho(t2));
        let n = 10_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut stream = RandomStream::new(4242, 0);
        for _ in 0..n {
            let w1 = r1.sqrt() * stream.standard_normal();
            let w2 = w1 + (r2 - r1).sqrt() * stream.standard_normal();
            xs.push(pair.phi(t1) * w1);
            ys.push(pair.phi(t2) * w2);
        }
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 =
            xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n as f64 - 1.0);
        // se of the sample covariance of bivariate normals
        let var_term = ou.variance(t1) * ou.variance(t2) + ou.covariance(t1, t2).powi(2);
        let se = (var_term / n as f64).sqrt();
        let want = ou.covariance(t1, t2);
        assert!((cov - want).abs() <= 3.0 * se, "cov {cov} vs {want} (se {se})");
    }

    #[test]
    fn gm_transform_to_wiener_matches_doob() {
        let ou = ou_spec(1.3, 0.7).unwrap();
        let doob = doob_transform(&ou, 1.0).unwrap();
        let pair = gm_transform(&ou, &wiener_spec(0.0)).unwrap();
        for i in 0..=60 {
            let t = 0.1 * i as f64;
            assert!((pair.rho(t) - doob.rho(t)).abs() <= 1e-12 * (1.0 + doob.rho(t).abs()));
            assert!((pair.phi(t) - doob.phi(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn gm_transform_to_ou_reproduces_log_clock() {
        // target OU: rho(t) = theta/2 ln(1 + 2 r1(t)/theta), kappa = 1
        let g = wiener_spec(0.0);
        let theta = 1.7;
        let ou = ou_spec(theta, 1.0).unwrap();
        let pair = gm_transform(&g, &ou).unwrap();
        for &t in &[0.2, 1.0, 8.0] {
            let want = theta / 2.0 * (1.0 + 2.0 * t / theta).ln();
            assert!((pair.rho(t) - want).abs() < 1e-12);
            let phi_want = 1.0 / ou.cov_v(pair.rho(t));
            assert!((pair.phi(t) - phi_want).abs() < 1e-12);
        }
    }

    #[test]
    fn gm_transform_self_is_identity() {
        let ou = ou_spec(0.8, 1.1).unwrap();
        let pair = gm_transform(&ou, &ou).unwrap();
        for &t in &[0.0, 0.3, 1.0, 4.0, 40.0] {
            assert!((pair.rho(t) - t).abs() <= 4e-15 * t.max(1.0));
            assert!((pair.phi(t) - 1.0).abs() <= 1e-13);
            assert!((pair.rho_deriv(t) - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn transform_composition() {
        // rho_{1,3} = rho_{2,3} o rho_{1,2}
        let g1 = ou_spec(1.0, 1.0).unwrap();
        let g2 = ou_spec(2.0, 0.5).unwrap();
        let g3 = wiener_spec(0.0);
        let p12 = gm_transform(&g1, &g2).unwrap();
        let p23 = gm_transform(&g2, &g3).unwrap();
        let p13 = gm_transform(&g1, &g3).unwrap();
        for i in 1..=50 {
            let t = 0.1 * i as f64;
            let composed = p23.rho(p12.rho(t));
            assert!(
                (p13.rho(t) - composed).abs() <= 1e-9 * (1.0 + composed.abs()),
                "composition mismatch at t={t}"
            );
        }
    }

    #[test]
    fn bisection_fallback_matches_closed_form() {
        let theta = 1.0;
        // same OU ratio but without a closed-form inverse
        let no_inv = GaussMarkovSpec::custom(
            |_| 0.0,
            move |t: f64| theta / 2.0 * ((t / theta).exp() - (-t / theta).exp()),
            move |t: f64| (-t / theta).exp(),
            move |t: f64| theta / 2.0 * (2.0f64 * t / theta).exp_m1(),
            move |t: f64| (2.0 * t / theta).exp(),
            None,
        );
        let with_inv = ou_spec(theta, 1.0).unwrap();
        for &s in &[0.01, 0.5, 3.0, 100.0] {
            let a = no_inv.invert_ratio(s);
            let b = with_inv.invert_ratio(s);
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "inverse at {s}: {a} vs {b}");
        }
    }

    #[test]
    fn threshold_transform_identity_and_wiener_form() {
        let ou = ou_spec(1.0, 1.0).unwrap();
        let s = Threshold::constant(2.0);
        let same = transform_threshold(&ou, &ou, &s).unwrap();
        for &t in &[0.0, 1.0, 10.0] {
            assert!((same.value(t) - 2.0).abs() < 1e-12);
        }
        // Wiener target with zero-mean g: S_W(t) = S / v(r^{-1}(t))
        let sw = transform_threshold(&ou, &wiener_spec(0.0), &s).unwrap();
        for &t in &[0.1, 1.0, 5.0] {
            let back = ou.invert_ratio(t);
            let want = 2.0 / ou.cov_v(back);
            assert!((sw.value(t) - want).abs() < 1e-10);
        }
        // that threshold grows without bound, so no certified supremum
        assert!(sw.upper_bound().is_none());
    }

    #[test]
    fn fpt_density_identity_and_mass_conservation() {
        let ou = ou_spec(1.0, 1.0).unwrap();
        let ident = gm_transform(&ou, &ou).unwrap();
        let f2: RealFn = Arc::new(|t: f64| (-t).exp());
        let f1 = transform_fpt_density(&ident, f2.clone());
        for &t in &[0.1, 1.0, 3.0] {
            assert!((f1(t) - f2(t)).abs() < 1e-12);
        }
        // pull the constant-threshold Wiener FPT density back through r_OU;
        // substitution makes both quadratures equal
        let pair = gm_transform(&ou, &wiener_spec(0.0)).unwrap();
        let c = 1.0;
        let fw: RealFn = Arc::new(move |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                c / (2.0 * std::f64::consts::PI).sqrt() * (-c * c / (2.0 * s)).exp() / s.powf(1.5)
            }
        });
        let pulled = transform_fpt_density(&pair, fw.clone());
        let t_max = 3.0;
        let lhs = crate::quad::integrate(|t| pulled(t), 0.0, t_max, 1e-10, 1e-12);
        let rhs = crate::quad::integrate(|s| fw(s), 0.0, pair.rho(t_max), 1e-10, 1e-12);
        assert!(
            (lhs.value - rhs.value).abs() < 1e-6,
            "mass mismatch: {} vs {}",
            lhs.value,
            rhs.value
        );
    }

    #[test]
    fn finite_mean_examples() {
        // drifted Wiener over a constant threshold: certified
        let wd = wiener_spec(1.0);
        let v = check_finite_mean(&wd, &Threshold::constant(1.0), FiniteMeanTarget::DriftedWiener { delta: 1.0 })
            .unwrap();
        assert!(v.is_certified(), "{v:?}");
        if let FiniteMeanVerdict::Certified(c) = &v {
            assert!((c.inf_rho_deriv - 1.0).abs() < 1e-12);
            assert!((c.threshold_sup - 1.0).abs() < 1e-9);
        }

        // driftless Wiener, constant threshold: inconclusive via either target
        let w = wiener_spec(0.0);
        let v1 = check_finite_mean(&w, &Threshold::constant(1.0), FiniteMeanTarget::DriftedWiener { delta: 0.0 })
            .unwrap();
        assert!(!v1.is_certified());
        let v2 = check_finite_mean(&w, &Threshold::constant(1.0), FiniteMeanTarget::Ou { theta: 1.0, sigma: 1.0 })
            .unwrap();
        assert!(!v2.is_certified());
    }

    #[test]
    fn small_time_constants() {
        // identity map, C = 1: K1 = K2 = 1
        let h = small_time_approximant(1.0, 1.0, 0.0).unwrap();
        assert_eq!(h.k1, 1.0);
        assert_eq!(h.k2, 1.0);
        assert!(small_time_approximant(1.0, 0.0, 0.0).is_err());
        assert!(small_time_approximant(-1.0, 1.0, 0.0).is_err());
        // OU-type clock with theta = 1: l1 = 1, l2 = 1
        let h2 = small_time_approximant(0.5, 1.0, 1.0).unwrap();
        assert!((h2.k2 - 0.5).abs() < 1e-15);
        assert!((h2.k1 - 0.5f64.exp() / 0.5).abs() < 1e-14);
        assert_eq!(h2.eval(0.0), 0.0);
    }
}
