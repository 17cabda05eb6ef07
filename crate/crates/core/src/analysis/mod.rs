//! Asymptotic diagnostics near the singular point: limits, exponents, ratio
//! limits, the three-spheres checker and the singularity classifier.

use serde::{Deserialize, Serialize};

mod minimal;
mod spheres;

pub use minimal::{minimal_growth_profile, MinimalGrowth};
pub use spheres::{check_three_spheres, SpheresMode, SpheresOptions, SpheresProfile, SpheresRow, Triple, TriplesReport, WindowMode};

use crate::accel::{accelerate, fit_line, wynn_epsilon};
use crate::error::{Error, Result};
use crate::params::{ProblemParams, Zeta};
use crate::potentials::{check_condition_c1, check_condition_c2, PotentialSpec, DEFAULT_CONDITION_TOL};
use crate::radial::RadialFunction;
use crate::radial_ode::RadialSolution;

/// Relative Cauchy tolerance for accelerated limit sequences.
pub const LIMIT_TOL: f64 = 1e-6;
/// Escape factor (relative to the first sample) for the +∞ tag.
pub const ESCAPE_FACTOR: f64 = 1e12;
pub const MIN_SAMPLES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converged,
    Infinite,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub status: LimitStatus,
    /// Finite limit, +∞, or the last accelerated value when inconclusive.
    pub value: f64,
    /// Radii of the samples, ordered toward the singular point.
    pub radii: Vec<f64>,
    pub samples: Vec<f64>,
    pub accelerated: Vec<f64>,
    /// Acceleration scheme whose last three values agreed best.
    pub method: String,
    /// Largest relative spread of the last three accelerated values.
    pub cauchy_gap: f64,
    /// Why the +∞ tag was given, if it was.
    pub escape: Option<String>,
}

impl LimitEstimate {
    pub fn is_finite(&self) -> bool {
        self.status == LimitStatus::Converged
    }
}

/// Limit of a sequence sampled along dyadic radii toward ζ.
///
/// The samples are accelerated by one Richardson pass plus Aitken Δ², and by
/// Wynn's ε-algorithm (iterated Aitken) of orders 2 and 3. Converged when
/// the last three values of the best scheme agree to [`LIMIT_TOL`] relative
/// to max(|ℓ|, |u_last|, [`ZERO_LIMIT_FRACTION`]·max|u|). Otherwise +∞ is reported when the samples
/// escape (exceed [`ESCAPE_FACTOR`] times the first sample with three
/// consecutive increases), grow like a power (six steady log ratios of at
/// least 0.05·ln 2), or grow linearly in the dyadic index (six increments that do
/// not shrink by more than 5%), the last covering logarithmic blow-up.
pub fn limit_from_samples(radii: Vec<f64>, samples: Vec<f64>) -> Result<LimitEstimate> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::DomainTooShort { available: n, required: MIN_SAMPLES });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Inconclusive("non-finite sample in limit sequence".into()));
    }
    let floor = zero_floor(&samples);
    let (method, accelerated) = best_acceleration(&samples, floor);
    let mut est = LimitEstimate {
        status: LimitStatus::Inconclusive,
        value: f64::NAN,
        radii,
        samples,
        accelerated,
        method: method.into(),
        cauchy_gap: f64::INFINITY,
        escape: None,
    };
    // escape is tested first: Aitken maps geometric growth to a spurious
    // finite anti-limit
    if let Some(reason) = escape_reason(&est.samples) {
        est.status = LimitStatus::Infinite;
        est.value = f64::INFINITY;
        est.escape = Some(reason);
        return Ok(est);
    }
    if est.accelerated.len() >= 3 {
        est.cauchy_gap = tail_gap(&est.accelerated, floor);
        est.value = est.accelerated[est.accelerated.len() - 1];
        if est.cauchy_gap <= LIMIT_TOL {
            est.status = LimitStatus::Converged;
        }
    }
    Ok(est)
}

/// Scale below which the spread is measured absolutely: |u_last|, or the
/// zero-limit fraction of the largest sample when u tends to 0.
fn zero_floor(samples: &[f64]) -> f64 {
    let max = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    samples[samples.len() - 1].abs().max(ZERO_LIMIT_FRACTION * max)
}

/// Spread of the last three entries around the last one, relative to
/// max(|ℓ|, floor).
fn tail_gap(a: &[f64], floor: f64) -> f64 {
    if a.len() < 3 {
        return f64::INFINITY;
    }
    let t = &a[a.len() - 3..];
    let ell = t[2];
    let scale = ell.abs().max(floor);
    let spread = (t[0] - ell).abs().max((t[1] - ell).abs());
    if scale == 0.0 {
        0.0
    } else {
        spread / scale
    }
}

/// Richardson + Aitken and Wynn's ε of orders 2 and 3; the scheme with the
/// smallest final spread wins (ties go to the simpler one).
fn best_acceleration(samples: &[f64], floor: f64) -> (&'static str, Vec<f64>) {
    let candidates = [
        ("richardson-aitken", accelerate(samples)),
        ("wynn-epsilon-2", wynn_epsilon(samples, 2)),
        ("wynn-epsilon-3", wynn_epsilon(samples, 3)),
    ];
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if tail_gap(&c.1, floor) < tail_gap(&candidates[best].1, floor) {
            best = i;
        }
    }
    let (name, seq) = &candidates[best];
    (name, seq.clone())
}

fn escape_reason(s: &[f64]) -> Option<String> {
    let n = s.len();
    let rising3 = s[n - 4..].windows(2).all(|w| w[1] > w[0]);
    if rising3 && s[0] > 0.0 && s[n - 1] > ESCAPE_FACTOR * s[0] {
        return Some("escape threshold".into());
    }
    if n >= 7 && s[n - 7..].iter().all(|&x| x > 0.0) {
        let min_log_ratio = 0.05 * std::f64::consts::LN_2;
        let logs: Vec<f64> = s[n - 7..].windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        // power growth keeps the log ratios roughly constant; logarithmic
        // growth lets them decay like 1/k
        if logs.iter().all(|&l| l >= min_log_ratio) && logs.windows(2).all(|w| w[1] >= 0.95 * w[0]) {
            return Some("power growth".into());
        }
        let inc: Vec<f64> = s[n - 7..].windows(2).map(|w| w[1] - w[0]).collect();
        if inc.iter().all(|&d| d > 0.0) && inc.windows(2).all(|w| w[1] >= 0.95 * w[0]) {
            return Some("linear growth in log radius".into());
        }
    }
    None
}

/// Dyadic radii from the far end of `domain` toward ζ, staying inside it.
pub fn dyadic_radii(domain: (f64, f64), zeta: Zeta) -> Vec<f64> {
    let (lo, hi) = domain;
    let mut out = Vec::new();
    match zeta {
        Zeta::Origin => {
            let mut r = hi;
            while r >= lo * (1.0 - 1e-12) {
                out.push(r.max(lo));
                r /= 2.0;
            }
        }
        Zeta::Infinity => {
            let mut r = lo;
            while r <= hi * (1.0 + 1e-12) {
                out.push(r.min(hi));
                r *= 2.0;
            }
        }
    }
    out
}

/// Limit toward ζ of an arbitrary profile on `domain`.
pub fn estimate_limit_of(f: impl Fn(f64) -> f64, domain: (f64, f64), zeta: Zeta) -> Result<LimitEstimate> {
    let radii = dyadic_radii(domain, zeta);
    let samples = radii.iter().map(|&r| f(r)).collect();
    limit_from_samples(radii, samples)
}

/// Limit of a computed solution at the end of its domain facing ζ.
pub fn estimate_limit(u: &RadialSolution, params: &ProblemParams) -> Result<LimitEstimate> {
    estimate_limit_of(|r| u.value(r), u.domain(), params.zeta)
}

/// Limit of u/v toward ζ on the common domain.
pub fn ratio_limit(u: &RadialSolution, v: &RadialSolution, params: &ProblemParams) -> Result<LimitEstimate> {
    let (a, b) = (u.domain(), v.domain());
    let dom = (a.0.max(b.0), a.1.min(b.1));
    if !(dom.0 < dom.1) {
        return Err(Error::DomainTooShort { available: 0, required: MIN_SAMPLES });
    }
    estimate_limit_of(|r| u.value(r) / v.value(r), dom, params.zeta)
}

/// Sample density of the exponent fit.
pub const POINTS_PER_DECADE: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of log u against log r, or of u against |log r| when p = d.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub log_rate: bool,
    /// Radii bounding the fitted tail window.
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares rate over the last `decades` decades of `domain` toward ζ.
pub fn fit_exponent_of(f: impl Fn(f64) -> f64, domain: (f64, f64), params: &ProblemParams, decades: usize) -> Result<ExponentFit> {
    let required = POINTS_PER_DECADE * decades.max(2) + 1;
    let available_decades = (domain.1 / domain.0).log10();
    if decades < 2 || available_decades < decades as f64 * (1.0 - 1e-12) {
        let available = (available_decades.max(0.0) * POINTS_PER_DECADE as f64).floor() as usize + 1;
        return Err(Error::DomainTooShort { available, required });
    }
    let span = 10f64.powi(decades as i32);
    let window = match params.zeta {
        Zeta::Origin => (domain.0, (domain.0 * span).min(domain.1)),
        Zeta::Infinity => ((domain.1 / span).max(domain.0), domain.1),
    };
    let (l0, l1) = (window.0.ln(), window.1.ln());
    let log_rate = params.p_equals_d();
    let mut xs = Vec::with_capacity(required);
    let mut ys = Vec::with_capacity(required);
    for i in 0..required {
        let r = (l0 + (l1 - l0) * i as f64 / (required - 1) as f64).exp();
        let u = f(r);
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::PositivityLost { r });
        }
        if log_rate {
            xs.push(r.ln().abs());
            ys.push(u);
        } else {
            xs.push(r.ln());
            ys.push(u.ln());
        }
    }
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::Inconclusive("degenerate exponent fit".into()))?;
    Ok(ExponentFit { rate: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, log_rate, window, points: required })
}

pub fn fit_exponent(u: &RadialSolution, params: &ProblemParams, decades: usize) -> Result<ExponentFit> {
    fit_exponent_of(|r| u.value(r), u.domain(), params, decades)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    IncreasingInR,
    DecreasingInR,
    Constant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneTail {
    pub monotone: bool,
    pub direction: Direction,
    /// Index (in the toward-ζ ordering of `radii`) where the monotone run begins.
    pub first_index: usize,
    /// Last index before the run where the trend breaks, if the run is short.
    pub witness: Option<usize>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Eventual monotonicity of sampled values ordered toward ζ. The tail counts
/// as monotone when the final run of one-signed differences covers at least
/// half of the samples.
pub fn monotone_tail_samples(radii: Vec<f64>, values: Vec<f64>) -> Result<MonotoneTail> {
    let n = values.len();
    if n < 3 {
        return Err(Error::DomainTooShort { available: n, required: 3 });
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let sign = diffs.iter().rev().find(|&&d| d != 0.0).map(|d| d.signum()).unwrap_or(0.0);
    let mut start = diffs.len();
    while start > 0 {
        let d = diffs[start - 1];
        if d != 0.0 && d.signum() != sign {
            break;
        }
        start -= 1;
    }
    let toward_zeta_increasing = sign > 0.0;
    // radii are ordered toward ζ; r decreases along them iff ζ = 0
    let r_decreasing = radii.len() > 1 && radii[1] < radii[0];
    let direction = if sign == 0.0 {
        Direction::Constant
    } else if toward_zeta_increasing == r_decreasing {
        Direction::DecreasingInR
    } else {
        Direction::IncreasingInR
    };
    let monotone = start <= n / 2;
    Ok(MonotoneTail {
        monotone,
        direction,
        first_index: start,
        witness: (start > 0).then(|| start - 1),
        radii,
        values,
    })
}

pub fn monotone_tail(profile: &RadialFunction, params: &ProblemParams) -> Result<MonotoneTail> {
    let radii = dyadic_radii(profile.domain(), params.zeta);
    let values = radii.iter().map(|&r| profile.value(r)).collect();
    monotone_tail_samples(radii, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityTag {
    Removable,
    FinitePositiveLimit,
    #[serde(rename = "ZeroLimit_FundamentalRate")]
    ZeroLimitFundamentalRate,
    #[serde(rename = "InfiniteLimit_FundamentalRate")]
    InfiniteLimitFundamentalRate,
    #[serde(rename = "InfiniteLimit_LogRate")]
    InfiniteLimitLogRate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularityClass {
    pub tag: SingularityTag,
    pub limit: LimitEstimate,
    pub rate: Option<ExponentFit>,
    pub expected_rate: Option<f64>,
    pub c1: String,
    pub c2: String,
}

/// Decades used by the classifier's rate fit.
pub const CLASSIFY_DECADES: usize = 2;
/// A converged limit below this fraction of the largest sample counts as 0.
pub const ZERO_LIMIT_FRACTION: f64 = 1e-6;

/// Classifies the behaviour of a computed solution at ζ from its limit and
/// tail rate. Classical cases give Removable or an infinite limit with the
/// fundamental (or logarithmic) rate; nonclassical cases give a finite
/// positive limit or a zero limit with the fundamental rate.
pub fn classify_singularity(u: &RadialSolution, spec: &PotentialSpec, params: &ProblemParams) -> Result<SingularityClass> {
    let c1 = check_condition_c1(spec, params, DEFAULT_CONDITION_TOL)?.label().to_string();
    let c2 = check_condition_c2(spec, params, DEFAULT_CONDITION_TOL)?.label().to_string();
    let limit = estimate_limit(u, params)?;
    let max_sample = limit.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let zero = limit.is_finite() && limit.value.abs() <= ZERO_LIMIT_FRACTION * max_sample;
    let rate = |_: ()| fit_exponent(u, params, CLASSIFY_DECADES);
    let (tag, fit, expected) = match (params.is_classical(), limit.status) {
        (_, LimitStatus::Inconclusive) => {
            return Err(Error::Inconclusive(format!("limit sequence not Cauchy (gap {:e})", limit.cauchy_gap)))
        }
        (true, LimitStatus::Converged) if !zero => (SingularityTag::Removable, None, None),
        (true, LimitStatus::Infinite) if params.p_equals_d() => {
            (SingularityTag::InfiniteLimitLogRate, Some(rate(())?), None)
        }
        (true, LimitStatus::Infinite) => {
            (SingularityTag::InfiniteLimitFundamentalRate, Some(rate(())?), Some(params.alpha_star()))
        }
        (false, LimitStatus::Converged) if zero => {
            (SingularityTag::ZeroLimitFundamentalRate, Some(rate(())?), Some(params.alpha_star()))
        }
        (false, LimitStatus::Converged) => (SingularityTag::FinitePositiveLimit, None, None),
        (true, LimitStatus::Converged) => {
            return Err(Error::Inconclusive("zero limit in a classical case".into()))
        }
        (false, LimitStatus::Infinite) => {
            return Err(Error::Inconclusive("infinite limit in a nonclassical case".into()))
        }
    };
    Ok(SingularityClass { tag, limit, rate: fit, expected_rate: expected, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let radii: Vec<f64> = (0..n).map(|k| 2f64.powi(-(k as i32))).collect();
        let vals = radii.iter().map(|&r| f(r)).collect();
        (radii, vals)
    }

    #[test]
    fn constant_limit() {
        let (r, v) = dyadic(10, |_| 1.0);
        let est = limit_from_samples(r, v).unwrap();
        assert_eq!(est.status, LimitStatus::Converged);
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn power_corrected_limit() {
        let (r, v) = dyadic(30, |r| 2.0 - 3.0 * r.powf(0.4));
        let est = limit_from_samples(r, v).unwrap();
        assert!(est.is_finite());
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn vanishing_limit() {
        let (r, v) = dyadic(30, |r| r.powf(2.0 / 3.0));
        let est = limit_from_samples(r, v).unwrap();
        assert!(est.is_finite());
        assert!(est.value.abs() < 1e-8);
    }

    #[test]
    fn divergent_sequences() {
        let (r, v) = dyadic(20, |r| 1.0 / r);
        assert_eq!(limit_from_samples(r, v).unwrap().status, LimitStatus::Infinite);
        let (r, v) = dyadic(20, |r| -r.ln());
        let est = limit_from_samples(r, v).unwrap();
        assert_eq!(est.status, LimitStatus::Infinite);
        assert_eq!(est.escape.as_deref(), Some("linear growth in log radius"));
    }

    #[test]
    fn too_short() {
        let (r, v) = dyadic(5, |_| 1.0);
        assert!(matches!(limit_from_samples(r, v), Err(Error::DomainTooShort { available: 5, required: 6 })));
    }

    #[test]
    fn exponent_of_exact_power() {
        let params = ProblemParams::new(4.0, 2, Zeta::Origin).unwrap();
        let fit = fit_exponent_of(|r: f64| 3.0 * r.powf(2.0 / 3.0), (1e-8, 1.0), &params, 3).unwrap();
        assert!((fit.rate - 2.0 / 3.0).abs() < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(matches!(fit_exponent_of(|r: f64| r, (1e-1, 1.0), &params, 2), Err(Error::DomainTooShort { .. })));
        let params = ProblemParams::new(3.0, 3, Zeta::Origin).unwrap();
        let fit = fit_exponent_of(|r: f64| 2.0 * r.ln().abs() + 1.0, (1e-8, 1e-2), &params, 3).unwrap();
        assert!(fit.log_rate && (fit.rate - 2.0).abs() < 1e-10);
    }

    #[test]
    fn monotone_detection() {
        let params = ProblemParams::new(4.0, 2, Zeta::Origin).unwrap();
        let f = crate::params::fundamental_solution(&params).on_domain(1e-6, 1.0);
        let m = monotone_tail(&f, &params).unwrap();
        assert!(m.monotone && m.first_index == 0);
        assert_eq!(m.direction, Direction::IncreasingInR);
        let radii: Vec<f64> = (0..10).map(|k| 2f64.powi(-k)).collect();
        let noisy = vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.5, 2.5];
        let m = monotone_tail_samples(radii, noisy).unwrap();
        assert!(!m.monotone && m.witness.is_some());
    }

    #[test]
    fn dyadic_radii_stay_inside() {
        let r = dyadic_radii((1e-3, 1.0), Zeta::Origin);
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|&x| (1e-3..=1.0).contains(&x)));
        let r = dyadic_radii((1.0, 1e3), Zeta::Infinity);
        assert_eq!((r[0], r.len()), (1.0, 10));
    }
}
