//! Potential families V(r) = ±g(r)/r^p and numeric decision procedures for
//! the Fuchsian bound, the Kato condition (C1) and the Dini condition (C2).
//!
//! Internally every family is evaluated through `g` at a log radius, which
//! keeps the tail integrals free of overflow: see [`reduced_inner`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{classify_case, ExtReal, ProblemParams, Zeta};
use crate::quad::{integrate_tail, QuadOptions, TailOptions, TailResult, TailStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Family {
    Zero,
    /// g(r) = r^ε toward the origin, r^{-ε} toward infinity.
    PowerLaw { epsilon: f64 },
    /// g(r) = max(|log r|, 1)^{-β}.
    LogPower { beta: f64 },
    /// g ≡ λ, i.e. |V| = |λ| r^{-p}.
    HardyConstant { lambda: f64 },
    /// g given at strictly increasing radii; interpolated linearly in
    /// (log r, log g) when all values are positive, else in (log r, g).
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SignRule {
    Plus,
    Minus,
    /// V = cos(ω log r) g(r)/r^p.
    Cosine { omega: f64 },
}

impl SignRule {
    pub fn factor(self, s: f64) -> f64 {
        match self {
            SignRule::Plus => 1.0,
            SignRule::Minus => -1.0,
            SignRule::Cosine { omega } => (omega * s).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: Family,
    pub sign: SignRule,
    pub zeta: Zeta,
}

impl PotentialSpec {
    pub fn new(family: Family, sign: SignRule, zeta: Zeta) -> Result<Self> {
        let spec = Self { family, sign, zeta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero(zeta: Zeta) -> Self {
        Self { family: Family::Zero, sign: SignRule::Plus, zeta }
    }

    pub fn power_law(epsilon: f64, sign: SignRule, zeta: Zeta) -> Self {
        Self { family: Family::PowerLaw { epsilon }, sign, zeta }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match &self.family {
            Family::PowerLaw { epsilon } if !epsilon.is_finite() => bad("epsilon must be finite".into()),
            Family::LogPower { beta } if !beta.is_finite() => bad("beta must be finite".into()),
            Family::HardyConstant { lambda } if !lambda.is_finite() => bad("lambda must be finite".into()),
            Family::Tabulated { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return bad("tabulated potential needs at least two (radius, value) rows".into());
                }
                if radii.iter().chain(values).any(|x| !x.is_finite()) {
                    return bad("tabulated values must be finite".into());
                }
                if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated radii must be positive and strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            Family::Zero => true,
            Family::HardyConstant { lambda } => *lambda == 0.0,
            Family::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    /// The envelope G = |V|: the same family with |g| and a plus sign.
    /// Oscillating sign rules are dropped, so G = |g|/r^p dominates |V|.
    pub fn envelope(&self) -> PotentialSpec {
        let family = match &self.family {
            Family::HardyConstant { lambda } => Family::HardyConstant { lambda: lambda.abs() },
            Family::Tabulated { radii, values } => {
                Family::Tabulated { radii: radii.clone(), values: values.iter().map(|v| v.abs()).collect() }
            }
            other => other.clone(),
        };
        PotentialSpec { family, sign: SignRule::Plus, zeta: self.zeta }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.family, Family::Tabulated { .. })
    }

    /// g at log radius s. Tabulated families are extrapolated by the end
    /// slope only when `extrapolate` is set.
    pub fn g_log(&self, s: f64, extrapolate: bool) -> Result<f64> {
        Ok(match &self.family {
            Family::Zero => 0.0,
            Family::PowerLaw { epsilon } => (-self.zeta.direction() * epsilon * s).exp(),
            Family::LogPower { beta } => s.abs().max(1.0).powf(-beta),
            Family::HardyConstant { lambda } => *lambda,
            Family::Tabulated { radii, values } => tabulated_g(radii, values, s, extrapolate)?,
        })
    }

    /// g at log radius s, extrapolating tables; for use inside quadrature.
    pub fn g_tail(&self, s: f64) -> f64 {
        self.g_log(s, true).unwrap_or(f64::NAN)
    }

    /// Signed profile g·sign at log radius s, so that V = profile/r^p.
    pub fn signed_g_log(&self, s: f64) -> Result<f64> {
        Ok(self.sign.factor(s) * self.g_log(s, false)?)
    }

    /// r^d V(r) at log radius s, the source term of the flux equation.
    pub fn flux_source_log(&self, params: &ProblemParams, s: f64) -> Result<f64> {
        Ok(self.signed_g_log(s)? * ((params.dim() - params.p) * s).exp())
    }
}

fn tabulated_g(radii: &[f64], values: &[f64], s: f64, extrapolate: bool) -> Result<f64> {
    let n = radii.len();
    let (lo, hi) = (radii[0], radii[n - 1]);
    let r = s.exp();
    let logs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let positive = values.iter().all(|&v| v > 0.0);
    let ys: Vec<f64> = if positive { values.iter().map(|v| v.ln()).collect() } else { values.to_vec() };
    let interp = |i: usize, j: usize| {
        let t = (s - logs[i]) / (logs[j] - logs[i]);
        let y = ys[i] + t * (ys[j] - ys[i]);
        if positive {
            y.exp()
        } else {
            y
        }
    };
    if s < logs[0] || s > logs[n - 1] {
        if !extrapolate {
            return Err(Error::OutOfTable { r, lo, hi });
        }
        return Ok(if s < logs[0] { interp(0, 1) } else { interp(n - 2, n - 1) });
    }
    let k = logs.partition_point(|&x| x <= s).clamp(1, n - 1);
    Ok(interp(k - 1, k))
}

/// Parses two-column (radius, value) text with '#' comments.
pub fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = || format!("line {}", i + 1);
        let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
        if cols.len() != 2 {
            return Err(Error::Parse { location: loc(), msg: format!("expected 2 columns, found {}", cols.len()) });
        }
        let parse = |c: &str| c.parse::<f64>().map_err(|e| Error::Parse { location: loc(), msg: format!("{c:?}: {e}") });
        let (r, v) = (parse(cols[0])?, parse(cols[1])?);
        if !(r.is_finite() && v.is_finite()) {
            return Err(Error::Parse { location: loc(), msg: "non-finite value".into() });
        }
        if let Some(&prev) = radii.last() {
            if r <= prev {
                return Err(Error::Parse { location: loc(), msg: "radii must be strictly increasing".into() });
            }
        }
        radii.push(r);
        values.push(v);
    }
    if radii.len() < 2 {
        return Err(Error::Parse { location: "end of input".into(), msg: "need at least two rows".into() });
    }
    Ok((radii, values))
}

/// V(r), or the envelope G(r) = |V(r)| when `envelope` is set.
pub fn eval_potential(spec: &PotentialSpec, params: &ProblemParams, r: f64, envelope: bool) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    let s = r.ln();
    let g = spec.g_log(s, false)?;
    let v = spec.sign.factor(s) * g / r.powf(params.p);
    Ok(if envelope { v.abs() } else { v })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuchsianBound {
    pub bound: f64,
    pub holds: bool,
}

/// Running sup of r^p |V(r)| on a geometric probe grid (8 points per decade)
/// from r = 1 toward ζ; `holds` when the last decade does not raise the sup.
pub fn check_fuchsian(spec: &PotentialSpec, params: &ProblemParams, probe_decades: usize) -> Result<FuchsianBound> {
    if probe_decades < 2 {
        return Err(Error::InvalidParams("probe_decades must be at least 2".into()));
    }
    let _ = params;
    let per_decade = 8;
    let n = probe_decades * per_decade;
    let dir = spec.zeta.direction();
    let mut sup = 0.0f64;
    let mut sup_before_last = 0.0f64;
    for k in 0..=n {
        let s = dir * std::f64::consts::LN_10 * k as f64 / per_decade as f64;
        let val = (spec.sign.factor(s) * spec.g_tail(s)).abs();
        if val.is_nan() {
            return Ok(FuchsianBound { bound: f64::NAN, holds: false });
        }
        sup = sup.max(val);
        if k <= n - per_decade {
            sup_before_last = sup;
        }
    }
    let holds = sup.is_finite() && sup <= sup_before_last * (1.0 + 1e-12);
    Ok(FuchsianBound { bound: sup, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum VerdictStatus {
    Finite { value: f64 },
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub status: VerdictStatus,
    pub increments: Vec<f64>,
    pub tolerance: f64,
    pub error_estimate: f64,
    /// Tabulated data were extended past the table toward ζ.
    pub extrapolated: bool,
}

impl ConditionVerdict {
    fn from_tail(t: TailResult, extrapolated: bool) -> Self {
        let status = match t.status {
            TailStatus::Finite => VerdictStatus::Finite { value: t.value },
            TailStatus::Divergent => VerdictStatus::Divergent,
            TailStatus::Inconclusive => VerdictStatus::Inconclusive,
        };
        Self { status, increments: t.increments, tolerance: t.tolerance, error_estimate: t.error, extrapolated }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.status, VerdictStatus::Finite { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.status {
            VerdictStatus::Finite { .. } => "finite",
            VerdictStatus::Divergent => "divergent",
            VerdictStatus::Inconclusive => "inconclusive",
        }
    }
}

pub const DEFAULT_CONDITION_TOL: f64 = 1e-8;

fn inner_options() -> TailOptions {
    TailOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        quad: QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 200 },
        ..TailOptions::default()
    }
}

pub(crate) fn check_zeta(spec: &PotentialSpec, params: &ProblemParams) -> Result<()> {
    if spec.zeta != params.zeta {
        return Err(Error::InvalidParams("potential and problem refer to different singular points".into()));
    }
    Ok(())
}

/// Scale-free inner integral of the Kato condition at log radius s:
///
/// Ĩ(s) = t^{p-d} ∫_a^t g(σ) σ^{d-1-p} dσ,  t = e^s,
///
/// computed as ∫_{log a - s}^0 g(e^{s+τ}) e^{τ(d-p)} dτ with the orientation
/// sign. Returns +∞ when the inner integral diverges and NaN when it is
/// inconclusive.
pub fn reduced_inner(spec: &PotentialSpec, params: &ProblemParams, a: ExtReal, s: f64) -> f64 {
    let k = params.dim() - params.p;
    let f = |tau: f64| {
        let g = spec.g_tail(s + tau);
        if g == 0.0 {
            0.0
        } else {
            g * (tau * k).exp()
        }
    };
    let lower = a.log_value() - s;
    let (dir, limit, sign) = if lower < 0.0 { (-1.0, lower, 1.0) } else { (1.0, lower, -1.0) };
    // the integrand is nearly flat over |τ| < |s| for logarithmic families;
    // one wide first window keeps the divergence test from seeing that plateau
    let opts = TailOptions { first_width: s.abs().max(std::f64::consts::LN_2), ..inner_options() };
    let t = integrate_tail(f, 0.0, dir, limit, opts);
    match t.status {
        TailStatus::Finite => sign * t.value,
        TailStatus::Divergent => f64::INFINITY,
        TailStatus::Inconclusive => f64::NAN,
    }
}

/// d Ĩ/ds = (p - d) Ĩ + g(e^s).
pub fn reduced_inner_slope(spec: &PotentialSpec, params: &ProblemParams, inner: f64, s: f64) -> f64 {
    (params.p - params.dim()) * inner + spec.g_tail(s)
}

/// Integrand of the Kato condition in log radius: |Ĩ(s)|^{1/(p-1)}.
pub fn kato_integrand(spec: &PotentialSpec, params: &ProblemParams, a: ExtReal, s: f64) -> f64 {
    let inner = reduced_inner(spec, params, a, s);
    if inner.is_nan() {
        return f64::NAN;
    }
    inner.abs().powf(1.0 / (params.p - 1.0))
}

/// Kato condition (C1), integrated from r = 1 toward ζ in dyadic-then-doubling
/// log-radius windows.
pub fn check_condition_c1(spec: &PotentialSpec, params: &ProblemParams, tol: f64) -> Result<ConditionVerdict> {
    check_zeta(spec, params)?;
    let env = spec.envelope();
    let a = classify_case(params).a;
    let dir = params.zeta.direction();
    let t = integrate_tail(
        |s| kato_integrand(&env, params, a, s),
        0.0,
        dir,
        params.zeta.log_radius(),
        TailOptions::with_tol(tol, 0.0),
    );
    Ok(ConditionVerdict::from_tail(t, spec.is_tabulated()))
}

/// Dini condition (C2): ∫_ζ^1 g(s)/s ds, with the |log s|^{d-1} weight when
/// p = d.
pub fn check_condition_c2(spec: &PotentialSpec, params: &ProblemParams, tol: f64) -> Result<ConditionVerdict> {
    check_zeta(spec, params)?;
    let env = spec.envelope();
    let weight_power = if params.p_equals_d() { params.dim() - 1.0 } else { 0.0 };
    let t = integrate_tail(
        |s: f64| {
            let g = env.g_tail(s);
            if g == 0.0 {
                0.0
            } else {
                g * s.abs().powf(weight_power)
            }
        },
        0.0,
        params.zeta.direction(),
        params.zeta.log_radius(),
        TailOptions::with_tol(tol, 0.0),
    );
    Ok(ConditionVerdict::from_tail(t, spec.is_tabulated()))
}

/// max over r ∈ [r_lo, r_hi] of |R^p V(R r)|.
pub fn rescaled_potential_norm(spec: &PotentialSpec, params: &ProblemParams, scale: f64, annulus: (f64, f64)) -> Result<f64> {
    let (lo, hi) = annulus;
    if !(0.0 < lo && lo < hi && scale > 0.0) {
        return Err(Error::InvalidParams(format!("need 0 < r_lo < r_hi and R > 0, got R={scale} [{lo}, {hi}]")));
    }
    let n = 256;
    let mut best = 0.0f64;
    for k in 0..=n {
        let x = lo * (hi / lo).powf(k as f64 / n as f64);
        // R^p V(R x) = sign · g(R x) / x^p
        let s = (scale * x).ln();
        let val = (spec.sign.factor(s) * spec.g_tail(s)).abs() / x.powf(params.p);
        best = best.max(val);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(p: f64, d: u32, zeta: Zeta) -> ProblemParams {
        ProblemParams::new(p, d, zeta).unwrap()
    }

    #[test]
    fn eval_examples() {
        let params = pp(2.0, 3, Zeta::Origin);
        let zero = PotentialSpec::zero(Zeta::Origin);
        assert_eq!(eval_potential(&zero, &params, 0.3, false).unwrap(), 0.0);
        let hardy = PotentialSpec::new(Family::HardyConstant { lambda: 1.0 }, SignRule::Minus, Zeta::Origin).unwrap();
        assert!((eval_potential(&hardy, &params, 2.0, false).unwrap() + 0.25).abs() < 1e-15);
        assert!((eval_potential(&hardy, &params, 2.0, true).unwrap() - 0.25).abs() < 1e-15);
        let power = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
        let v = eval_potential(&power, &pp(3.0, 3, Zeta::Origin), 0.1, false).unwrap();
        assert!((v - 100.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_lookup_and_errors() {
        let spec = PotentialSpec::new(
            Family::Tabulated { radii: vec![0.1, 1.0], values: vec![0.01, 1.0] },
            SignRule::Plus,
            Zeta::Origin,
        )
        .unwrap();
        let params = pp(2.0, 3, Zeta::Origin);
        // log-log linear: g(r) = r^2
        let v = eval_potential(&spec, &params, 0.5, false).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(matches!(eval_potential(&spec, &params, 2.0, false), Err(Error::OutOfTable { .. })));
        assert!((spec.g_tail(0.01f64.ln()) - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn parse_table_text() {
        let (r, v) = parse_table("# radius value\n0.1 0.5\n\n0.2, 0.25\n").unwrap();
        assert_eq!(r, vec![0.1, 0.2]);
        assert_eq!(v, vec![0.5, 0.25]);
        let err = parse_table("0.2 1\n0.1 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(parse_table("0.1 1 2\n").is_err());
    }

    #[test]
    fn fuchsian_examples() {
        let params = pp(2.0, 3, Zeta::Origin);
        let b = check_fuchsian(&PotentialSpec::zero(Zeta::Origin), &params, 4).unwrap();
        assert_eq!(b, FuchsianBound { bound: 0.0, holds: true });
        let hardy = PotentialSpec::new(Family::HardyConstant { lambda: -0.7 }, SignRule::Minus, Zeta::Origin).unwrap();
        let b = check_fuchsian(&hardy, &params, 6).unwrap();
        assert!((b.bound - 0.7).abs() <= 1e-12 && b.holds);
        let bad = PotentialSpec::power_law(-1.0, SignRule::Plus, Zeta::Origin);
        assert!(!check_fuchsian(&bad, &params, 6).unwrap().holds);
        assert!(check_fuchsian(&hardy, &params, 1).is_err());
    }

    #[test]
    fn c1_prototypes() {
        for &(p, d) in &[(2.0, 3), (4.0, 2), (3.0, 3), (1.5, 2)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let power = PotentialSpec::power_law(1.0, SignRule::Plus, zeta);
                let v = check_condition_c1(&power, &params, 1e-8).unwrap();
                assert!(v.is_finite(), "power p={p} d={d} {zeta:?}: {v:?}");
                let beta = if params.p_equals_d() { p + 1.0 } else { p };
                let log = PotentialSpec { family: Family::LogPower { beta }, sign: SignRule::Plus, zeta };
                let v = check_condition_c1(&log, &params, 1e-8).unwrap();
                assert!(v.is_finite(), "log p={p} d={d} {zeta:?}: {v:?}");
            }
        }
    }

    #[test]
    fn c1_closed_form_value() {
        // classical ζ=0, p<d, g=r^ε: C1 = (ε+d-p)^{-1/(p-1)} (p-1)/ε
        let params = pp(2.0, 3, Zeta::Origin);
        let spec = PotentialSpec::power_law(0.5, SignRule::Plus, Zeta::Origin);
        let v = check_condition_c1(&spec, &params, 1e-10).unwrap();
        let want = (0.5f64 + 1.0).powf(-1.0) * 1.0 / 0.5;
        match v.status {
            VerdictStatus::Finite { value } => assert!((value - want).abs() < 1e-9, "{value} vs {want}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hardy_envelope_diverges() {
        let params = pp(2.0, 3, Zeta::Origin);
        let spec = PotentialSpec::new(Family::HardyConstant { lambda: 1.0 }, SignRule::Plus, Zeta::Origin).unwrap();
        assert_eq!(check_condition_c1(&spec, &params, 1e-8).unwrap().status, VerdictStatus::Divergent);
        assert_eq!(check_condition_c2(&spec, &params, 1e-8).unwrap().status, VerdictStatus::Divergent);
    }

    #[test]
    fn c2_prototypes() {
        let params = pp(2.0, 3, Zeta::Origin);
        let spec = PotentialSpec::power_law(2.0, SignRule::Plus, Zeta::Origin);
        match check_condition_c2(&spec, &params, 1e-8).unwrap().status {
            VerdictStatus::Finite { value } => assert!((value - 0.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let params = pp(3.0, 3, Zeta::Origin);
        let spec = PotentialSpec { family: Family::LogPower { beta: 4.0 }, sign: SignRule::Plus, zeta: Zeta::Origin };
        assert!(check_condition_c2(&spec, &params, 1e-8).unwrap().is_finite());
        // β = p: the weighted integral of |s|^{-1} diverges
        let spec = PotentialSpec { family: Family::LogPower { beta: 3.0 }, sign: SignRule::Plus, zeta: Zeta::Origin };
        assert!(!check_condition_c2(&spec, &params, 1e-8).unwrap().is_finite());
    }

    #[test]
    fn rescaled_norms() {
        let params = pp(3.0, 2, Zeta::Origin);
        let zero = PotentialSpec::zero(Zeta::Origin);
        assert_eq!(rescaled_potential_norm(&zero, &params, 0.5, (1.0, 2.0)).unwrap(), 0.0);
        let hardy = PotentialSpec::new(Family::HardyConstant { lambda: 2.0 }, SignRule::Minus, Zeta::Origin).unwrap();
        let n = rescaled_potential_norm(&hardy, &params, 1e-3, (1.0, 2.0)).unwrap();
        assert!((n - 2.0).abs() < 1e-12);
        let power = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let r = 2f64.powi(-k);
            let n = rescaled_potential_norm(&power, &params, r, (1.0, 2.0)).unwrap();
            // sup_{[1,2]} R^ε x^{ε-p} attained at x = 1
            assert!((n - r).abs() < 1e-12 * r);
            assert!(n < prev);
            prev = n;
        }
    }
}
