//! The Wolff potential W̃_G of the envelope G = g/r^p around ζ and the
//! companion potential Ũ_G.
//!
//! In log radius s the Wolff potential is W̃(r) = |∫_{s_ζ}^{log r} F|, with
//! F(s) = |Ĩ(s)|^{1/(p-1)} and Ĩ the scale-free inner integral of
//! [`crate::potentials::reduced_inner`]. Hence dW̃/dr = σF(log r)/r, σ = +1
//! toward the origin and -1 toward infinity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{limit_from_samples, LimitEstimate};
use crate::error::{Error, Result};
use crate::format::write_csv;
use crate::params::{classify_case, fundamental_solution, CaseInfo, ExtReal, ProblemParams, Zeta};
use crate::potentials::{
    check_condition_c1, check_condition_c2, check_zeta, kato_integrand, reduced_inner, reduced_inner_slope,
    PotentialSpec, DEFAULT_CONDITION_TOL,
};
use crate::quad::{integrate, integrate_tail, QuadOptions, TailOptions, TailStatus};
use crate::radial::{radial_p_laplacian, RadialFunction};

/// Absolute error target per node when the relative target is unreachable.
pub const NODE_ABS_TOL: f64 = 1e-9;
const NODE_REL_TOL: f64 = 1e-12;

fn tail_opts(abs_tol: f64, rel_tol: f64) -> TailOptions {
    TailOptions {
        abs_tol,
        rel_tol,
        quad: QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_panels: 200 },
        ..TailOptions::default()
    }
}

/// Integral of `f` over the log-radius half line from `s` toward ζ.
/// Tries a relative target first, then the absolute per-node target.
fn tail_toward_zeta(f: impl Fn(f64) -> f64, s: f64, zeta: Zeta, what: &str) -> Result<(f64, f64)> {
    let mut last = None;
    for opts in [tail_opts(1e-300, NODE_REL_TOL), tail_opts(NODE_ABS_TOL, NODE_REL_TOL)] {
        let t = integrate_tail(&f, s, zeta.direction(), zeta.log_radius(), opts);
        if t.status == TailStatus::Finite {
            return Ok((t.value, t.error));
        }
        last = Some(t.status);
    }
    Err(Error::QuadratureFailure(format!("{what} tail from log r = {s}: {:?}", last.unwrap())))
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParams("radii must be nonempty, positive and finite".into()));
    }
    Ok(())
}

/// σ = +1 toward the origin, -1 toward infinity.
fn orientation(zeta: Zeta) -> f64 {
    -zeta.direction()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WolffTable {
    pub params: ProblemParams,
    /// Envelope spec whose Wolff potential is tabulated.
    pub spec: PotentialSpec,
    pub case: CaseInfo,
    pub radii: Vec<f64>,
    pub log_radii: Vec<f64>,
    pub values: Vec<f64>,
    pub d_dr: Vec<f64>,
    pub d2_dr2: Vec<f64>,
    pub err_estimate: Vec<f64>,
    /// Verdict of the Kato condition, or `None` when skipped by override.
    pub c1_verdict: Option<String>,
}

impl WolffTable {
    fn a(&self) -> ExtReal {
        self.case.a
    }

    /// F(log r) = |Ĩ|^{1/(p-1)}.
    pub fn integrand(&self, r: f64) -> f64 {
        kato_integrand(&self.spec, &self.params, self.a(), r.ln())
    }

    /// W̃(r) and its quadrature error estimate at any radius.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if self.spec.is_zero() {
            return Ok((0.0, 0.0));
        }
        tail_toward_zeta(|s| kato_integrand(&self.spec, &self.params, self.a(), s), r.ln(), self.params.zeta, "Wolff")
    }

    pub fn first(&self, r: f64) -> f64 {
        orientation(self.params.zeta) * self.integrand(r) / r
    }

    /// Second derivative from dĨ/ds = (p-d)Ĩ + g.
    pub fn second(&self, r: f64) -> f64 {
        let s = r.ln();
        let p = self.params.p;
        let inner = reduced_inner(&self.spec, &self.params, self.a(), s);
        let f = inner.abs().powf(1.0 / (p - 1.0));
        let df = if inner == 0.0 {
            0.0
        } else {
            let slope = reduced_inner_slope(&self.spec, &self.params, inner, s);
            inner.abs().powf(1.0 / (p - 1.0) - 1.0) * inner.signum() * slope / (p - 1.0)
        };
        orientation(self.params.zeta) * (df - f) / (r * r)
    }

    /// W̃ as a radial function with the exact first-derivative rule; the
    /// second derivative is left to differences of the first.
    pub fn as_function(&self) -> RadialFunction {
        let (lo, hi) = (self.radii.iter().cloned().fold(f64::INFINITY, f64::min), self.radii.iter().cloned().fold(0.0, f64::max));
        let a = self.clone();
        let b = self.clone();
        let f = RadialFunction::new(move |r| a.eval(r).map(|x| x.0).unwrap_or(f64::NAN)).with_first(move |r| b.first(r));
        if lo < hi {
            f.on_domain(lo, hi)
        } else {
            f
        }
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        write_csv(
            path,
            &["r", "W", "dW_dr", "err_estimate"],
            (0..self.radii.len()).map(|i| vec![self.radii[i], self.values[i], self.d_dr[i], self.err_estimate[i]]),
        )
    }
}

/// Tabulates W̃ at the given radii. Unless `override_c1` is set the Kato
/// condition is checked first and a divergent verdict is an error.
pub fn wolff_potential(spec: &PotentialSpec, params: &ProblemParams, radii: &[f64], override_c1: bool) -> Result<WolffTable> {
    check_zeta(spec, params)?;
    check_radii(radii)?;
    let c1_verdict = if override_c1 {
        None
    } else {
        let v = check_condition_c1(spec, params, DEFAULT_CONDITION_TOL)?;
        if matches!(v.status, crate::potentials::VerdictStatus::Divergent) {
            return Err(Error::ConditionViolation { which: 1, verdict: v.label().into() });
        }
        Some(v.label().to_string())
    };
    let mut table = WolffTable {
        params: *params,
        spec: spec.envelope(),
        case: classify_case(params),
        radii: radii.to_vec(),
        log_radii: radii.iter().map(|r| r.ln()).collect(),
        values: Vec::with_capacity(radii.len()),
        d_dr: Vec::with_capacity(radii.len()),
        d2_dr2: Vec::with_capacity(radii.len()),
        err_estimate: Vec::with_capacity(radii.len()),
        c1_verdict,
    };
    for &r in radii {
        let (w, e) = table.eval(r)?;
        let (d1, d2) = if table.spec.is_zero() { (0.0, 0.0) } else { (table.first(r), table.second(r)) };
        table.values.push(w);
        table.err_estimate.push(e);
        table.d_dr.push(d1);
        table.d2_dr2.push(d2);
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WolffResidual {
    pub radii: Vec<f64>,
    /// −Δ_p W̃ at each interior node.
    pub operator: Vec<f64>,
    /// −G (classical) or +G (nonclassical).
    pub expected: Vec<f64>,
    pub max_relative: f64,
    /// −Δ_p W̃ has the sign of the expected right-hand side at every node.
    pub sign_consistent: bool,
}

/// Applies the radial operator to W̃ on the interior nodes and compares with
/// ∓G according to the case.
pub fn verify_wolff_equation(table: &WolffTable, params: &ProblemParams) -> Result<WolffResidual> {
    let n = table.radii.len();
    let interior: Vec<f64> = if n > 2 { table.radii[1..n - 1].to_vec() } else { table.radii.clone() };
    let mut out = WolffResidual {
        radii: interior.clone(),
        operator: Vec::new(),
        expected: Vec::new(),
        max_relative: 0.0,
        sign_consistent: true,
    };
    if table.spec.is_zero() {
        out.operator = vec![0.0; interior.len()];
        out.expected = vec![0.0; interior.len()];
        return Ok(out);
    }
    let kappa = if params.is_classical() { -1.0 } else { 1.0 };
    let w = table.as_function();
    for &r in &interior {
        let lhs = radial_p_laplacian(&w, params, r)?;
        let g = table.spec.g_tail(r.ln()) / r.powf(params.p);
        let rhs = kappa * g;
        let dev = (lhs - rhs).abs();
        let rel = if rhs == 0.0 { dev } else { dev / rhs.abs() };
        out.max_relative = out.max_relative.max(rel);
        if rhs != 0.0 && lhs.signum() != rhs.signum() {
            out.sign_consistent = false;
        }
        out.operator.push(lhs);
        out.expected.push(rhs);
    }
    Ok(out)
}

/// Dyadic samples used by the limit estimators.
pub const RATIO_SAMPLES: usize = 40;

/// Extrapolated limit of W̃/v_{α*} toward ζ in the nonclassical cases,
/// sampled dyadically from the table radius farthest from ζ.
pub fn wolff_vs_fundamental(table: &WolffTable, params: &ProblemParams) -> Result<LimitEstimate> {
    if params.is_classical() {
        return Err(Error::NotApplicable("W̃/v_α* is only compared in the nonclassical cases".into()));
    }
    let far = match params.zeta {
        Zeta::Origin => table.radii.iter().cloned().fold(0.0, f64::max),
        Zeta::Infinity => table.radii.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    let v = fundamental_solution(params);
    let step = 2f64.powf(params.zeta.direction());
    let mut radii = Vec::with_capacity(RATIO_SAMPLES);
    let mut ratios = Vec::with_capacity(RATIO_SAMPLES);
    let mut r = far;
    for _ in 0..RATIO_SAMPLES {
        radii.push(r);
        ratios.push(table.eval(r)?.0 / v.value(r));
        r *= step;
    }
    limit_from_samples(radii, ratios)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UTable {
    pub params: ProblemParams,
    pub spec: PotentialSpec,
    pub radii: Vec<f64>,
    pub log_radii: Vec<f64>,
    pub values: Vec<f64>,
    pub du_dr: Vec<f64>,
    /// ∂_v U with v = v_{α*}.
    pub du_dv: Vec<f64>,
    /// ∂²_v U from the computed derivatives.
    pub d2u_dv2: Vec<f64>,
    /// g/v (p ≠ d) or g v^{d-1} (p = d).
    pub d2u_dv2_closed: Vec<f64>,
    pub max_relative_d2: f64,
    pub err_estimate: Vec<f64>,
    pub c2_verdict: Option<String>,
    /// For p = d the inverse of v_{α*} is taken on the branch containing ζ.
    pub branch_note: Option<String>,
}

impl UTable {
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        write_csv(
            path,
            &["r", "U", "dU_dr", "err_estimate"],
            (0..self.radii.len()).map(|i| vec![self.radii[i], self.values[i], self.du_dr[i], self.err_estimate[i]]),
        )
    }
}

/// Inner integral of U_G: ∫_ζ^ρ g(s)/s ds (weighted by |log s|^{d-1} when
/// p = d), oriented from ζ.
fn u_inner(spec: &PotentialSpec, params: &ProblemParams, s: f64) -> Result<(f64, f64)> {
    let weight = if params.p_equals_d() { params.dim() - 1.0 } else { 0.0 };
    let f = |x: f64| {
        let g = spec.g_tail(x);
        if g == 0.0 || weight == 0.0 {
            g
        } else {
            g * x.abs().powf(weight)
        }
    };
    let (v, e) = tail_toward_zeta(f, s, params.zeta, "U inner")?;
    Ok((orientation(params.zeta) * v, e))
}

/// Ũ_G at log radius s with its error estimate.
///
/// p ≠ d: Ũ = α*² ∫_{s_b}^{s} H(e^σ) e^{α*σ} dσ, s_b = 0 in the classical
/// cases and s_ζ otherwise. p = d: Ũ = ∫_{∓1}^{s} H_d(e^σ) dσ, starting on the
/// side of ζ; toward the origin this carries the orientation for which
/// ∂²_v U = g v^{d-1}.
fn u_value(spec: &PotentialSpec, params: &ProblemParams, s: f64) -> Result<(f64, f64)> {
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-10, max_panels: 400 };
    let failed = std::cell::Cell::new(false);
    let h = |x: f64| match u_inner(spec, params, x) {
        Ok((v, _)) => v,
        Err(_) => {
            failed.set(true);
            f64::NAN
        }
    };
    let result = if params.p_equals_d() {
        let s1 = params.zeta.direction();
        let q = integrate(h, s1, s, opts);
        if !q.converged {
            return Err(Error::QuadratureFailure(format!("U outer integral at log r = {s}")));
        }
        (q.value, q.error)
    } else {
        let alpha = params.alpha_star();
        let integrand = |x: f64| {
            let v = h(x);
            if v == 0.0 {
                0.0
            } else {
                v * (alpha * x).exp()
            }
        };
        let (v, e) = if params.is_classical() {
            let q = integrate(integrand, 0.0, s, opts);
            if !q.converged {
                return Err(Error::QuadratureFailure(format!("U outer integral at log r = {s}")));
            }
            (q.value, q.error)
        } else {
            let (v, e) = tail_toward_zeta(integrand, s, params.zeta, "U outer")?;
            (orientation(params.zeta) * v, e)
        };
        (alpha * alpha * v, alpha * alpha * e)
    };
    if failed.get() {
        return Err(Error::QuadratureFailure(format!("U inner integral near log r = {s}")));
    }
    Ok(result)
}

/// Ũ_G with its radial derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UPoint {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub err: f64,
}

/// Ũ_G of the envelope `env` and its first two r-derivatives at r.
pub fn u_point(env: &PotentialSpec, params: &ProblemParams, r: f64) -> Result<UPoint> {
    if env.is_zero() {
        return Ok(UPoint { value: 0.0, d1: 0.0, d2: 0.0, err: 0.0 });
    }
    let s = r.ln();
    let g = env.g_tail(s);
    let (u, err) = u_value(env, params, s)?;
    let (h, _) = u_inner(env, params, s)?;
    let (d1, d2) = if params.p_equals_d() {
        let w = s.abs().powf(params.dim() - 1.0);
        (h / r, (g * w - h) / (r * r))
    } else {
        let alpha = params.alpha_star();
        (alpha * alpha * h * r.powf(alpha - 1.0), alpha * alpha * (g + h * (alpha - 1.0)) * r.powf(alpha - 2.0))
    };
    Ok(UPoint { value: u, d1, d2, err })
}

/// Tabulates Ũ_G together with its derivatives with respect to v_{α*}.
pub fn u_potential(spec: &PotentialSpec, params: &ProblemParams, radii: &[f64], override_c2: bool) -> Result<UTable> {
    check_zeta(spec, params)?;
    check_radii(radii)?;
    let c2_verdict = if override_c2 {
        None
    } else {
        let v = check_condition_c2(spec, params, DEFAULT_CONDITION_TOL)?;
        if matches!(v.status, crate::potentials::VerdictStatus::Divergent) {
            return Err(Error::ConditionViolation { which: 2, verdict: v.label().into() });
        }
        Some(v.label().to_string())
    };
    let env = spec.envelope();
    let v = fundamental_solution(params);
    let mut t = UTable {
        params: *params,
        spec: env.clone(),
        radii: radii.to_vec(),
        log_radii: radii.iter().map(|r| r.ln()).collect(),
        values: Vec::new(),
        du_dr: Vec::new(),
        du_dv: Vec::new(),
        d2u_dv2: Vec::new(),
        d2u_dv2_closed: Vec::new(),
        max_relative_d2: 0.0,
        err_estimate: Vec::new(),
        c2_verdict,
        branch_note: params
            .p_equals_d()
            .then(|| "inverse of |log r| taken on the side of the singular point".to_string()),
    };
    for &r in radii {
        let pt = u_point(&env, params, r)?;
        let g = env.g_tail(r.ln());
        let closed = if params.p_equals_d() {
            g * v.value(r).powf(params.dim() - 1.0)
        } else {
            g / v.value(r)
        };
        let dv = v.first(r);
        let du_dv = pt.d1 / dv;
        let d2u_dv2 = (pt.d2 - du_dv * v.second(r)) / (dv * dv);
        let dev = (d2u_dv2 - closed).abs();
        let rel = if closed == 0.0 { dev } else { dev / closed.abs() };
        t.max_relative_d2 = t.max_relative_d2.max(rel);
        t.values.push(pt.value);
        t.err_estimate.push(pt.err);
        t.du_dr.push(pt.d1);
        t.du_dv.push(du_dv);
        t.d2u_dv2.push(d2u_dv2);
        t.d2u_dv2_closed.push(closed);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Family, SignRule};

    fn pp(p: f64, d: u32, zeta: Zeta) -> ProblemParams {
        ProblemParams::new(p, d, zeta).unwrap()
    }

    fn power(eps: f64, zeta: Zeta) -> PotentialSpec {
        PotentialSpec::power_law(eps, SignRule::Plus, zeta)
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn zero_potential_gives_zero_tables() {
        let params = pp(2.0, 3, Zeta::Origin);
        let spec = PotentialSpec::zero(Zeta::Origin);
        let w = wolff_potential(&spec, &params, &[0.1, 0.5], false).unwrap();
        assert_eq!(w.values, vec![0.0, 0.0]);
        let res = verify_wolff_equation(&w, &params).unwrap();
        assert_eq!(res.max_relative, 0.0);
        let u = u_potential(&spec, &params, &[0.1, 0.5], false).unwrap();
        assert_eq!(u.values, vec![0.0, 0.0]);
    }

    #[test]
    fn closed_form_oracle() {
        let params = pp(2.0, 3, Zeta::Origin);
        let eps = 1.0;
        let radii = log_grid(1e-4, 1.0, 9);
        let t = wolff_potential(&power(eps, Zeta::Origin), &params, &radii, false).unwrap();
        let c = (eps + 1.0f64).powf(-1.0) * 1.0 / eps;
        for (i, &r) in radii.iter().enumerate() {
            let want = c * r.powf(eps);
            assert!((t.values[i] - want).abs() <= 1e-10 * want, "r={r}: {} vs {want}", t.values[i]);
            assert!((t.d_dr[i] - c * eps * r.powf(eps - 1.0)).abs() <= 1e-10 * t.d_dr[i]);
            assert!(t.d2_dr2[i].abs() < 1e-9);
        }
    }

    #[test]
    fn hardy_envelope_is_rejected_without_override() {
        let params = pp(2.0, 3, Zeta::Origin);
        let spec = PotentialSpec::new(Family::HardyConstant { lambda: 0.1 }, SignRule::Minus, Zeta::Origin).unwrap();
        assert!(matches!(
            wolff_potential(&spec, &params, &[0.5], false),
            Err(Error::ConditionViolation { which: 1, .. })
        ));
    }

    #[test]
    fn monotone_and_vanishing_toward_zeta() {
        for &(p, d) in &[(2.0, 3), (4.0, 2)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let radii = match zeta {
                    Zeta::Origin => log_grid(1e-6, 0.5, 12),
                    Zeta::Infinity => log_grid(2.0, 1e6, 12),
                };
                let t = wolff_potential(&power(1.0, zeta), &params, &radii, false).unwrap();
                for i in 1..radii.len() {
                    let rising = t.values[i] > t.values[i - 1];
                    assert_eq!(rising, zeta == Zeta::Origin, "p={p} d={d} {zeta:?}");
                }
                let near = if zeta == Zeta::Origin { t.values[0] } else { t.values[radii.len() - 1] };
                let far = if zeta == Zeta::Origin { t.values[radii.len() - 1] } else { t.values[0] };
                assert!(near < 0.1 * far);
                let sign = orientation(zeta);
                assert!(t.d_dr.iter().all(|&x| x * sign > 0.0));
            }
        }
    }

    #[test]
    fn pde_residual_in_every_quadrant() {
        for &(p, d) in &[(2.0, 3), (4.0, 2), (1.5, 3)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let radii = match zeta {
                    Zeta::Origin => log_grid(1e-3, 0.5, 8),
                    Zeta::Infinity => log_grid(2.0, 1e3, 8),
                };
                let t = wolff_potential(&power(1.0, zeta), &params, &radii, false).unwrap();
                let res = verify_wolff_equation(&t, &params).unwrap();
                assert!(res.max_relative <= 1e-5, "p={p} d={d} {zeta:?}: {}", res.max_relative);
                assert!(res.sign_consistent);
            }
        }
    }

    #[test]
    fn ratio_to_fundamental_solution() {
        // p > d at the origin with integrable G = r^{ε-p}, ε > p - d:
        // W̃/r^{α*} → K^{1/(p-1)}/α*, K = 1/(ε+d-p)
        let params = pp(4.0, 2, Zeta::Origin);
        let eps = 3.0;
        let t = wolff_potential(&power(eps, Zeta::Origin), &params, &[0.5], false).unwrap();
        let est = wolff_vs_fundamental(&t, &params).unwrap();
        let want = (1.0f64 / (eps + 2.0 - 4.0)).powf(1.0 / 3.0) / params.alpha_star();
        assert!(est.is_finite(), "{est:?}");
        assert!((est.value - want).abs() < 1e-6 * want, "{} vs {want}", est.value);
        assert!(matches!(wolff_vs_fundamental(&t, &pp(2.0, 3, Zeta::Origin)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn u_second_derivative_matches_closed_form() {
        for &(p, d) in &[(2.0, 3), (4.0, 2), (3.0, 3)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let radii = match zeta {
                    Zeta::Origin => log_grid(1e-4, 0.5, 6),
                    Zeta::Infinity => log_grid(2.0, 1e4, 6),
                };
                let t = u_potential(&power(1.0, zeta), &params, &radii, false).unwrap();
                assert!(t.max_relative_d2 <= 1e-6, "p={p} d={d} {zeta:?}: {}", t.max_relative_d2);
            }
        }
    }

    #[test]
    fn u_is_small_against_fundamental_solution() {
        for &(p, d) in &[(2.0, 3), (4.0, 2), (3.0, 3)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let radii: Vec<f64> = (1..=4).map(|k| 10f64.powf(zeta.direction() * 3.0 * k as f64)).collect();
                let t = u_potential(&power(1.0, zeta), &params, &radii, false).unwrap();
                let v = fundamental_solution(&params);
                let q: Vec<f64> = radii.iter().zip(&t.values).map(|(&r, u)| (u / v.value(r)).abs()).collect();
                let dv: Vec<f64> = t.du_dv.iter().map(|x| x.abs()).collect();
                assert!(q[3] < q[0] && dv[3] < dv[0], "p={p} d={d} {zeta:?}: {q:?} {dv:?}");
                assert!(dv[3] < 1e-2, "p={p} d={d} {zeta:?}: {dv:?}");
            }
        }
    }
}
