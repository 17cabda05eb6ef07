//! Radial solutions of Q'(u) = −Δ_p u + V|u|^{p-2}u = 0 as a first-order
//! flux system in s = log r:
//!
//! dv/ds = e^{α* s} φ_q(w),  dw/ds = r^d V φ_p(v),
//!
//! with w = r^{d-1}φ_p(v'). The form of dv/ds follows from
//! r φ_q(w r^{1-d}) and 1 + (1-d)/(p-1) = α*.

mod envelope;

pub use envelope::{build_envelopes, construct_extremal, extremal_kind, EnvelopeKind, EnvelopePair, EnvelopeReport, Extremal, ExtremalSolution};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{to_json, write_csv};
use crate::ode::{self, hermite, OdeOptions, Outcome, State};
use crate::params::ProblemParams;
use crate::potentials::{check_zeta, Family, PotentialSpec};
use crate::radial::{phi, radial_p_laplacian, ChainMap, RadialFunction};

/// Default local error tolerance of the radial solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Values above this are treated as blow-up by the shooting method.
const BLOWUP: f64 = 1e150;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ShootingTrace {
    /// (w0, mismatch) pairs in evaluation order; ±∞ for blow-up / positivity loss.
    pub evaluations: Vec<(f64, f64)>,
    pub expansions: usize,
    pub bisections: usize,
    /// The mismatch was nondecreasing in w0 over all evaluations.
    pub monotone: bool,
    pub relative_mismatch: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveMeta {
    pub method: String,
    pub r_start: f64,
    pub r_end: f64,
    pub v_start: f64,
    pub w_start: f64,
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub steps: usize,
    pub rejected: usize,
    pub residual_max: f64,
    pub shooting: Option<ShootingTrace>,
}

/// A computed radial solution on a log-radius grid (ascending in s).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub spec: PotentialSpec,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub dv_ds: Vec<f64>,
    pub dw_ds: Vec<f64>,
    /// Local error estimate per node, relative to the solution scale.
    pub residual: Vec<f64>,
    pub meta: SolveMeta,
}

/// Right-hand side of the flux system at log radius s.
fn rhs(spec: &PotentialSpec, params: &ProblemParams, s: f64, y: &State) -> State {
    let p = params.p;
    let q = params.conjugate();
    let dv = (params.alpha_star() * s).exp() * phi(q, y[1]);
    let src = spec.sign.factor(s) * spec.g_tail(s);
    let dw = if src == 0.0 { 0.0 } else { src * ((params.dim() - p) * s).exp() * phi(p, y[0]) };
    [dv, dw]
}

fn check_table_range(spec: &PotentialSpec, lo: f64, hi: f64) -> Result<()> {
    if let Family::Tabulated { radii, .. } = &spec.family {
        let (a, b) = (radii[0], radii[radii.len() - 1]);
        for r in [lo, hi] {
            if r < a * (1.0 - 1e-12) || r > b * (1.0 + 1e-12) {
                return Err(Error::OutOfTable { r, lo: a, hi: b });
            }
        }
    }
    Ok(())
}

fn ode_options(tol: f64) -> OdeOptions {
    // h_max keeps the cubic Hermite interpolant near 1e-11 relative
    OdeOptions { rtol: tol, atol: tol * 1e-4, h_max: 0.01, ..OdeOptions::default() }
}

impl RadialSolution {
    fn from_trajectory(
        spec: &PotentialSpec,
        params: &ProblemParams,
        traj: ode::Trajectory,
        opts: OdeOptions,
        method: &str,
    ) -> Self {
        let mut idx: Vec<usize> = (0..traj.t.len()).collect();
        if traj.t.len() > 1 && traj.t[1] < traj.t[0] {
            idx.reverse();
        }
        let pick = |f: &dyn Fn(usize) -> f64| idx.iter().map(|&i| f(i)).collect::<Vec<f64>>();
        let residual = pick(&|i| traj.err[i] * opts.rtol);
        let n = traj.t.len();
        let meta = SolveMeta {
            method: method.into(),
            r_start: traj.t[0].exp(),
            r_end: traj.t[n - 1].exp(),
            v_start: traj.y[0][0],
            w_start: traj.y[0][1],
            rtol: opts.rtol,
            atol: opts.atol,
            h_max: opts.h_max,
            steps: n - 1,
            rejected: traj.rejected,
            residual_max: residual.iter().cloned().fold(0.0, f64::max),
            shooting: None,
        };
        Self {
            params: *params,
            spec: spec.clone(),
            s: pick(&|i| traj.t[i]),
            v: pick(&|i| traj.y[i][0]),
            w: pick(&|i| traj.y[i][1]),
            dv_ds: pick(&|i| traj.dy[i][0]),
            dw_ds: pick(&|i| traj.dy[i][1]),
            residual,
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.s.iter().map(|s| s.exp()).collect()
    }

    /// (r_min, r_max).
    pub fn domain(&self) -> (f64, f64) {
        (self.s[0].exp(), self.s[self.s.len() - 1].exp())
    }

    /// Interpolated (v, w) at log radius s; NaN outside the grid.
    pub fn state_at_log(&self, s: f64) -> State {
        let n = self.s.len();
        let (lo, hi) = (self.s[0], self.s[n - 1]);
        let eps = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(s >= lo - eps && s <= hi + eps) {
            return [f64::NAN, f64::NAN];
        }
        if n == 1 {
            return [self.v[0], self.w[0]];
        }
        let s = s.clamp(lo, hi);
        let k = self.s.partition_point(|&x| x <= s).clamp(1, n - 1);
        let (a, b) = (k - 1, k);
        let v = hermite(self.s[a], self.s[b], self.v[a], self.v[b], self.dv_ds[a], self.dv_ds[b], s).0;
        let w = hermite(self.s[a], self.s[b], self.w[a], self.w[b], self.dw_ds[a], self.dw_ds[b], s).0;
        [v, w]
    }

    pub fn value(&self, r: f64) -> f64 {
        self.state_at_log(r.ln())[0]
    }

    pub fn flux(&self, r: f64) -> f64 {
        self.state_at_log(r.ln())[1]
    }

    /// v'(r) = φ_q(w r^{1-d}).
    pub fn derivative(&self, r: f64) -> f64 {
        let [_, w] = self.state_at_log(r.ln());
        let s = r.ln();
        (self.params.alpha_star() * s).exp() * phi(self.params.conjugate(), w) / r
    }

    /// The solution as a radial function. v' comes from the interpolated flux
    /// and v'' from differentiating φ_p(v') = w r^{1-d} with w' taken from the
    /// equation.
    pub fn as_function(&self) -> RadialFunction {
        let (lo, hi) = self.domain();
        let a = self.clone();
        let b = self.clone();
        let c = self.clone();
        RadialFunction::new(move |r| a.value(r))
            .with_first(move |r| b.derivative(r))
            .with_second(move |r| c.second_derivative(r))
            .on_domain(lo, hi.max(lo * (1.0 + 1e-15)))
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let p = self.params.p;
        let d = self.params.dim();
        let s = r.ln();
        let y = self.state_at_log(s);
        let w = y[1];
        let dw_dr = rhs(&self.spec, &self.params, s, &y)[1] / r;
        // y = φ_p(v') = w r^{1-d}
        let phi_v = w * r.powf(1.0 - d);
        let dphi = dw_dr * r.powf(1.0 - d) + (1.0 - d) * w * r.powf(-d);
        let q = self.params.conjugate();
        if phi_v == 0.0 {
            return if q > 2.0 { 0.0 } else { f64::NAN };
        }
        let _ = p;
        (q - 1.0) * phi_v.abs().powf(q - 2.0) * dphi
    }

    /// sup over nodes of |v'| r / v = |dv/ds| / v.
    pub fn gradient_constant(&self) -> f64 {
        self.dv_ds.iter().zip(&self.v).map(|(d, v)| (d / v).abs()).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.v.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        write_csv(
            path,
            &["r", "v", "w", "residual"],
            (0..self.len()).map(|i| vec![self.s[i].exp(), self.v[i], self.w[i], self.residual[i]]),
        )
    }

    pub fn write_meta_json(&self, path: &Path) -> std::io::Result<()> {
        let text = to_json(&self.meta).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}

fn validate_ivp(spec: &PotentialSpec, params: &ProblemParams, r0: f64, v0: f64, w0: f64, r_end: f64, tol: f64) -> Result<()> {
    check_zeta(spec, params)?;
    if !(r0 > 0.0 && r_end > 0.0 && r0.is_finite() && r_end.is_finite()) {
        return Err(Error::InvalidParams(format!("radii must be positive and finite, got {r0}, {r_end}")));
    }
    if !(v0 > 0.0 && v0.is_finite() && w0.is_finite()) {
        return Err(Error::InvalidParams(format!("need v0 > 0 and finite w0, got v0={v0}, w0={w0}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParams(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    check_table_range(spec, r0.min(r_end), r0.max(r_end))
}

/// Raw integration: returns the (possibly truncated) solution and how it ended.
fn integrate_raw(
    spec: &PotentialSpec,
    params: &ProblemParams,
    r0: f64,
    v0: f64,
    w0: f64,
    r_end: f64,
    opts: OdeOptions,
    method: &str,
) -> (RadialSolution, Outcome) {
    let (traj, outcome) = ode::integrate(
        |s, y| rhs(spec, params, s, y),
        r0.ln(),
        [v0, w0],
        r_end.ln(),
        opts,
        |_, y| {
            if y[0] <= 0.0 {
                Some("positivity".into())
            } else if y[0] > BLOWUP {
                Some("blowup".into())
            } else {
                None
            }
        },
    );
    (RadialSolution::from_trajectory(spec, params, traj, opts, method), outcome)
}

fn outcome_error(sol: &RadialSolution, outcome: Outcome, toward_lo: bool) -> Error {
    let (lo, hi) = sol.domain();
    let r = if toward_lo { lo } else { hi };
    match outcome {
        Outcome::Stopped(msg) if msg == "positivity" => Error::PositivityLost { r },
        Outcome::Stopped(msg) => Error::StepFailure { r, msg },
        Outcome::Failed(msg) => Error::StepFailure { r, msg },
        Outcome::Completed => unreachable!(),
    }
}

/// Initial value problem from (r0, v0, w0) to r_end in either direction.
pub fn solve_ivp(spec: &PotentialSpec, params: &ProblemParams, r0: f64, v0: f64, w0: f64, r_end: f64, tol: f64) -> Result<RadialSolution> {
    solve_ivp_with(spec, params, r0, v0, w0, r_end, ode_options(tol))
}

pub fn solve_ivp_with(
    spec: &PotentialSpec,
    params: &ProblemParams,
    r0: f64,
    v0: f64,
    w0: f64,
    r_end: f64,
    opts: OdeOptions,
) -> Result<RadialSolution> {
    validate_ivp(spec, params, r0, v0, w0, r_end, opts.rtol)?;
    let (sol, outcome) = integrate_raw(spec, params, r0, v0, w0, r_end, opts, "ivp");
    match outcome {
        Outcome::Completed => Ok(sol),
        other => Err(outcome_error(&sol, other, r_end < r0)),
    }
}

/// Flux w = r^{d-1}φ_p(v') of a function with derivative `dv` at r.
pub fn flux_of(params: &ProblemParams, r: f64, dv: f64) -> f64 {
    r.powf(params.dim() - 1.0) * phi(params.p, dv)
}

/// Flux of A v_{α*} + B through (r1, v1), (r2, v2), evaluated at r1.
pub fn free_flux(params: &ProblemParams, r1: f64, v1: f64, r2: f64, v2: f64) -> f64 {
    let dv = if params.p_equals_d() {
        let a = (v1 - v2) / (r1.ln() - r2.ln());
        a / r1
    } else {
        let al = params.alpha_star();
        // difference of powers in log form to avoid overflow
        let a = (v1 - v2) / (r1.powf(al) - r2.powf(al));
        a * al * r1.powf(al - 1.0)
    };
    flux_of(params, r1, dv)
}

/// Two-point boundary value problem on [r1, r2] by shooting on the flux at
/// r1. The endpoint mismatch is nondecreasing in the flux by the comparison
/// principle; positivity loss counts as -∞ and blow-up as +∞.
pub fn solve_bvp(spec: &PotentialSpec, params: &ProblemParams, r1: f64, r2: f64, v1: f64, v2: f64, tol: f64) -> Result<RadialSolution> {
    check_zeta(spec, params)?;
    if !(0.0 < r1 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidParams(format!("need 0 < r1 < r2, got {r1}, {r2}")));
    }
    if !(v1 > 0.0 && v2 > 0.0 && v1.is_finite() && v2.is_finite()) {
        return Err(Error::InvalidParams("boundary values must be positive".into()));
    }
    validate_ivp(spec, params, r1, v1, 0.0, r2, tol)?;
    let opts = ode_options(tol);
    let mut trace = ShootingTrace::default();
    let mismatch = |w0: f64, trace: &mut ShootingTrace| -> f64 {
        let (sol, outcome) = integrate_raw(spec, params, r1, v1, w0, r2, opts, "bvp");
        let m = match outcome {
            Outcome::Completed => (sol.v[sol.len() - 1] - v2) / v2,
            Outcome::Stopped(msg) if msg == "positivity" => f64::NEG_INFINITY,
            Outcome::Stopped(_) => f64::INFINITY,
            // a failed step is treated as blow-up
            Outcome::Failed(_) => f64::INFINITY,
        };
        trace.evaluations.push((w0, m));
        m
    };

    let w_start = free_flux(params, r1, v1, r2, v2);
    let natural = flux_of(params, r1, v1.max(v2) / r1).abs();
    let mut delta = w_start.abs().max(1e-6 * natural).max(f64::MIN_POSITIVE);
    let m0 = mismatch(w_start, &mut trace);
    if m0 == 0.0 {
        return finish_bvp(spec, params, r1, v1, w_start, r2, opts, trace, 0.0);
    }
    let (mut lo, mut hi, mut m_lo, mut m_hi) = (w_start, w_start, m0, m0);
    loop {
        if trace.expansions >= 60 {
            return Err(Error::BracketFailure { expansions: trace.expansions });
        }
        trace.expansions += 1;
        if m0 > 0.0 {
            lo = w_start - delta;
            m_lo = mismatch(lo, &mut trace);
            if m_lo <= 0.0 {
                break;
            }
            hi = lo;
            m_hi = m_lo;
        } else {
            hi = w_start + delta;
            m_hi = mismatch(hi, &mut trace);
            if m_hi >= 0.0 {
                break;
            }
            lo = hi;
            m_lo = m_hi;
        }
        delta *= 4.0;
    }
    let _ = (m_lo, m_hi);
    let mut best = if m_lo.abs() < m_hi.abs() { (lo, m_lo) } else { (hi, m_hi) };
    for _ in 0..200 {
        if best.1.abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        trace.bisections += 1;
        let m = mismatch(mid, &mut trace);
        if m.abs() < best.1.abs() {
            best = (mid, m);
        }
        if m <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::BracketFailure { expansions: trace.expansions });
    }
    finish_bvp(spec, params, r1, v1, best.0, r2, opts, trace, best.1)
}

#[allow(clippy::too_many_arguments)]
fn finish_bvp(
    spec: &PotentialSpec,
    params: &ProblemParams,
    r1: f64,
    v1: f64,
    w0: f64,
    r2: f64,
    opts: OdeOptions,
    mut trace: ShootingTrace,
    m: f64,
) -> Result<RadialSolution> {
    let (mut sol, outcome) = integrate_raw(spec, params, r1, v1, w0, r2, opts, "bvp");
    if outcome != Outcome::Completed {
        return Err(outcome_error(&sol, outcome, false));
    }
    let mut evals = trace.evaluations.clone();
    evals.sort_by(|a, b| a.0.total_cmp(&b.0));
    trace.monotone = evals.windows(2).all(|w| w[1].1 >= w[0].1);
    trace.relative_mismatch = m;
    sol.meta.shooting = Some(trace);
    Ok(sol)
}

/// Applies Q'_V to a radial function at r.
pub fn q_prime(v: &RadialFunction, spec: &PotentialSpec, params: &ProblemParams, r: f64) -> Result<f64> {
    let pot = spec.signed_g_log(r.ln()).unwrap_or_else(|_| spec.sign.factor(r.ln()) * spec.g_tail(r.ln())) / r.powf(params.p);
    Ok(radial_p_laplacian(v, params, r)? + pot * phi(params.p, v.value(r)))
}

/// Q'_V from value and derivatives, with the magnitude of its two terms.
pub fn q_prime_parts(params: &ProblemParams, pot: f64, r: f64, val: f64, d1: f64, d2: f64) -> (f64, f64) {
    let p = params.p;
    let (weight, lap) = if d1 == 0.0 {
        // degenerate gradient: finite only for p ≥ 2 or a flat point
        let lap = if d2 == 0.0 || p > 2.0 {
            0.0
        } else if p == 2.0 {
            -d2
        } else {
            f64::NAN
        };
        (if p == 2.0 { 1.0 } else { 0.0 }, lap)
    } else {
        let wgt = d1.abs().powf(p - 2.0);
        (wgt, -wgt * ((p - 1.0) * d2 + (params.dim() - 1.0) * d1 / r))
    };
    let pot_term = pot * phi(p, val);
    let scale = weight * ((p - 1.0) * d2.abs() + (params.dim() - 1.0) * d1.abs() / r) + pot_term.abs();
    (lap + pot_term, scale)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub radii: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_relative: f64,
}

/// Compares Q'_V(f(u)) with
/// −(p−1)|f'|^{p−2}f''|u'|^p − |f'|^{p−2}f' V u^{p−1} + V f(u)^{p−1}
/// on the given radii; the right side assumes u solves Q'_V(u) = 0.
pub fn chain_identity_residual(
    u: &RadialFunction,
    f: ChainMap,
    spec: &PotentialSpec,
    params: &ProblemParams,
    radii: &[f64],
) -> Result<ChainReport> {
    let p = params.p;
    let fu = u.compose(f);
    let mut rep = ChainReport { radii: radii.to_vec(), lhs: Vec::new(), rhs: Vec::new(), max_relative: 0.0 };
    for &r in radii {
        let x = u.value(r);
        if !(x > 0.0) {
            return Err(Error::PositivityLost { r });
        }
        let du = u.first(r);
        let pot = spec.sign.factor(r.ln()) * spec.g_tail(r.ln()) / r.powf(p);
        let lhs = q_prime(&fu, spec, params, r)?;
        let f1 = f.first(x);
        let f2 = f.second(x);
        let t1 = -(p - 1.0) * f1.abs().powf(p - 2.0) * f2 * du.abs().powf(p);
        let t2 = -f1.abs().powf(p - 2.0) * f1 * pot * x.powf(p - 1.0);
        let t3 = pot * phi(p, f.value(x));
        let rhs = t1 + t2 + t3;
        let scale = t1.abs() + t2.abs() + t3.abs();
        let dev = (lhs - rhs).abs();
        let rel = if scale == 0.0 { dev } else { dev / scale };
        rep.max_relative = rep.max_relative.max(rel);
        rep.lhs.push(lhs);
        rep.rhs.push(rhs);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests;
