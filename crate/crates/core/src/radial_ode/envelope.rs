//! Explicit sub/supersolution pairs around the two asymptotic profiles and
//! the extremal solutions built from them.

use serde::{Deserialize, Serialize};

use super::{flux_of, q_prime_parts, solve_ivp, RadialSolution};
use crate::error::{Error, Result};
use crate::params::{fundamental_solution, ProblemParams, Zeta};
use crate::potentials::{check_condition_c1, check_condition_c2, check_zeta, PotentialSpec, VerdictStatus, DEFAULT_CONDITION_TOL};
use crate::radial::RadialFunction;
use crate::wolff::{u_point, wolff_potential, WolffTable};

/// Number of log-spaced nodes on which the sign pattern is certified.
pub const CHECK_NODES: usize = 40;
/// Largest envelope constant tried is 2^C_DOUBLINGS.
pub const C_DOUBLINGS: i32 = 40;
pub const MAX_SHRINKS: usize = 60;
/// Relative slack on the sign of Q'_V.
const SIGN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// 1 ± C W̃_G.
    Unit,
    /// v_{α*} ± C Ũ_G.
    Fundamental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremal {
    Small,
    Large,
}

/// Numbers behind an envelope pair, suitable for artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub kind: EnvelopeKind,
    pub c: f64,
    /// Certified domain (r_lo, r_hi).
    pub domain: (f64, f64),
    pub shrinks: usize,
    pub certified: bool,
    /// Subsolution ≤ supersolution at every node. Reported, not required.
    pub ordered: bool,
    pub radii: Vec<f64>,
    pub sub_values: Vec<f64>,
    pub super_values: Vec<f64>,
    pub q_sub: Vec<f64>,
    pub q_super: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnvelopePair {
    pub report: EnvelopeReport,
    pub sub: RadialFunction,
    pub sup: RadialFunction,
}

/// Base profile and perturbation at the check nodes: (value, d1, d2) each.
struct NodeData {
    base: Vec<[f64; 3]>,
    pert: Vec<[f64; 3]>,
}

fn log_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn wolff_function(table: &WolffTable) -> RadialFunction {
    let (a, b, c) = (table.clone(), table.clone(), table.clone());
    RadialFunction::new(move |r| a.eval(r).map(|x| x.0).unwrap_or(f64::NAN))
        .with_first(move |r| b.first(r))
        .with_second(move |r| c.second(r))
}

fn u_function(env: &PotentialSpec, params: &ProblemParams) -> RadialFunction {
    let (e0, e1, e2) = (env.clone(), env.clone(), env.clone());
    let (p0, p1, p2) = (*params, *params, *params);
    RadialFunction::new(move |r| u_point(&e0, &p0, r).map(|x| x.value).unwrap_or(f64::NAN))
        .with_first(move |r| u_point(&e1, &p1, r).map(|x| x.d1).unwrap_or(f64::NAN))
        .with_second(move |r| u_point(&e2, &p2, r).map(|x| x.d2).unwrap_or(f64::NAN))
}

/// Sign of C in the supersolution: 1 − CW̃ when classical, 1 + CW̃ otherwise;
/// v − CŨ in both cases.
fn super_sign(kind: EnvelopeKind, params: &ProblemParams) -> f64 {
    match kind {
        EnvelopeKind::Unit if params.is_classical() => -1.0,
        EnvelopeKind::Unit => 1.0,
        EnvelopeKind::Fundamental => -1.0,
    }
}

fn node_data(spec: &PotentialSpec, params: &ProblemParams, kind: EnvelopeKind, radii: &[f64]) -> Result<NodeData> {
    match kind {
        EnvelopeKind::Unit => {
            let t = wolff_potential(spec, params, radii, true)?;
            Ok(NodeData {
                base: vec![[1.0, 0.0, 0.0]; radii.len()],
                pert: (0..radii.len()).map(|i| [t.values[i], t.d_dr[i], t.d2_dr2[i]]).collect(),
            })
        }
        EnvelopeKind::Fundamental => {
            let env = spec.envelope();
            let v = fundamental_solution(params);
            let mut d = NodeData { base: Vec::new(), pert: Vec::new() };
            for &r in radii {
                let u = u_point(&env, params, r)?;
                d.base.push([v.value(r), v.first(r), v.second(r)]);
                d.pert.push([u.value, u.d1, u.d2]);
            }
            Ok(d)
        }
    }
}

fn require_condition(spec: &PotentialSpec, params: &ProblemParams, which: u8) -> Result<()> {
    let v = if which == 1 {
        check_condition_c1(spec, params, DEFAULT_CONDITION_TOL)?
    } else {
        check_condition_c2(spec, params, DEFAULT_CONDITION_TOL)?
    };
    if matches!(v.status, VerdictStatus::Divergent) {
        return Err(Error::ConditionViolation { which, verdict: v.label().into() });
    }
    Ok(())
}

/// Tries C = 1, 2, 4, ... on fixed nodes; returns the report of the first
/// certified constant, or of the last one tried.
fn certify(spec: &PotentialSpec, params: &ProblemParams, kind: EnvelopeKind, radii: &[f64], data: &NodeData) -> EnvelopeReport {
    let sigma = super_sign(kind, params);
    let mut report = None;
    for k in 0..=C_DOUBLINGS {
        let c = 2f64.powi(k);
        let mut rep = EnvelopeReport {
            kind,
            c,
            domain: (radii[0], radii[radii.len() - 1]),
            shrinks: 0,
            certified: true,
            ordered: true,
            radii: radii.to_vec(),
            sub_values: Vec::new(),
            super_values: Vec::new(),
            q_sub: Vec::new(),
            q_super: Vec::new(),
            scale: Vec::new(),
        };
        for (i, &r) in radii.iter().enumerate() {
            let pot = spec.sign.factor(r.ln()) * spec.g_tail(r.ln()) / r.powf(params.p);
            let at = |sign: f64| {
                let [b0, b1, b2] = data.base[i];
                let [u0, u1, u2] = data.pert[i];
                let (val, d1, d2) = (b0 + sign * c * u0, b1 + sign * c * u1, b2 + sign * c * u2);
                let (q, sc) = q_prime_parts(params, pot, r, val, d1, d2);
                (val, q, sc)
            };
            let (vs, qs, ss) = at(sigma);
            let (vl, ql, sl) = at(-sigma);
            let scale = ss.max(sl);
            let ok = vs > 0.0 && vl > 0.0 && qs >= -SIGN_SLACK * ss && ql <= SIGN_SLACK * sl;
            rep.certified &= ok;
            rep.ordered &= vl <= vs;
            rep.super_values.push(vs);
            rep.sub_values.push(vl);
            rep.q_super.push(qs);
            rep.q_sub.push(ql);
            rep.scale.push(scale);
        }
        let done = rep.certified;
        report = Some(rep);
        if done {
            break;
        }
    }
    report.expect("at least one constant is tried")
}

/// Moves the domain toward ζ: the far end first, both ends once the
/// domain is shorter than a factor 4.
fn shrink(domain: (f64, f64), zeta: Zeta) -> (f64, f64) {
    let (a, b) = domain;
    match (zeta, b / a > 4.0) {
        (Zeta::Origin, true) => (a, b / 2.0),
        (Zeta::Origin, false) => (a / 2.0, b / 2.0),
        (Zeta::Infinity, true) => (2.0 * a, b),
        (Zeta::Infinity, false) => (2.0 * a, 2.0 * b),
    }
}

/// Builds a certified sub/supersolution pair of the given kind on
/// `domain`, shrinking it dyadically toward ζ when no C ≤ 2^40 works.
pub fn build_envelopes(spec: &PotentialSpec, params: &ProblemParams, kind: EnvelopeKind, domain: (f64, f64)) -> Result<EnvelopePair> {
    check_zeta(spec, params)?;
    let (mut a, mut b) = domain;
    if !(0.0 < a && a < b && b.is_finite()) {
        return Err(Error::InvalidParams(format!("envelope domain must satisfy 0 < r1 < r2, got ({a}, {b})")));
    }
    if params.p_equals_d() && kind == EnvelopeKind::Fundamental && a < 1.0 && b > 1.0 {
        return Err(Error::InvalidParams("domain must not contain r = 1 when p = d".into()));
    }
    require_condition(spec, params, if kind == EnvelopeKind::Unit { 1 } else { 2 })?;
    let mut last = String::new();
    for shrinks in 0..=MAX_SHRINKS {
        let radii = log_nodes(a, b, CHECK_NODES);
        let data = node_data(spec, params, kind, &radii)?;
        let mut report = certify(spec, params, kind, &radii, &data);
        report.shrinks = shrinks;
        if report.certified {
            let sigma = super_sign(kind, params);
            let c = report.c;
            let (sub, sup) = match kind {
                EnvelopeKind::Unit => {
                    let w = wolff_function(&wolff_potential(spec, params, &radii, true)?);
                    (w.affine(1.0, -sigma * c), w.affine(1.0, sigma * c))
                }
                EnvelopeKind::Fundamental => {
                    let u = u_function(&spec.envelope(), params);
                    (sum(&fundamental_solution(params), &u, -sigma * c), sum(&fundamental_solution(params), &u, sigma * c))
                }
            };
            return Ok(EnvelopePair { report, sub: sub.on_domain(a, b), sup: sup.on_domain(a, b) });
        }
        last = format!("domain ({a:e}, {b:e}) after {shrinks} shrinks");
        (a, b) = shrink((a, b), params.zeta);
    }
    Err(Error::EnvelopeFailure { c_max: 2f64.powi(C_DOUBLINGS), msg: last })
}

/// f + c g with derivative rules.
fn sum(f: &RadialFunction, g: &RadialFunction, c: f64) -> RadialFunction {
    let (f0, f1, f2) = (f.clone(), f.clone(), f.clone());
    let (g0, g1, g2) = (g.clone(), g.clone(), g.clone());
    RadialFunction::new(move |r| f0.value(r) + c * g0.value(r))
        .with_first(move |r| f1.first(r) + c * g1.first(r))
        .with_second(move |r| f2.second(r) + c * g2.second(r))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalSolution {
    pub which: Extremal,
    pub kind: EnvelopeKind,
    pub solution: RadialSolution,
    pub envelopes: EnvelopeReport,
    /// min(sub, sup) ≤ u ≤ max(sub, sup) at every check node.
    pub bracketed: bool,
}

/// The envelope kind whose profile the extremal follows: the small extremal
/// is the bounded one in the classical cases and the vanishing one otherwise.
pub fn extremal_kind(which: Extremal, params: &ProblemParams) -> EnvelopeKind {
    match (which, params.is_classical()) {
        (Extremal::Small, true) | (Extremal::Large, false) => EnvelopeKind::Unit,
        _ => EnvelopeKind::Fundamental,
    }
}

/// Extremal solution on `domain`. The small one is integrated away from ζ
/// starting at the near end, the large one toward ζ from the far end; in
/// both directions the wanted profile dominates, so the unwanted mode picked
/// up from the data stays negligible. The data are those of the asymptotic
/// profile at the starting radius.
pub fn construct_extremal(
    spec: &PotentialSpec,
    params: &ProblemParams,
    which: Extremal,
    domain: (f64, f64),
    tol: f64,
) -> Result<ExtremalSolution> {
    let kind = extremal_kind(which, params);
    let pair = build_envelopes(spec, params, kind, domain)?;
    let (a, b) = pair.report.domain;
    let (near, far) = match params.zeta {
        Zeta::Origin => (a, b),
        Zeta::Infinity => (b, a),
    };
    let (start, end) = match which {
        Extremal::Small => (near, far),
        Extremal::Large => (far, near),
    };
    let (v0, w0) = match kind {
        EnvelopeKind::Unit => (1.0, 0.0),
        EnvelopeKind::Fundamental => {
            let v = fundamental_solution(params);
            (v.value(start), flux_of(params, start, v.first(start)))
        }
    };
    let solution = solve_ivp(spec, params, start, v0, w0, end, tol)?;
    let bracketed = pair.report.radii.iter().enumerate().all(|(i, &r)| {
        let (lo, hi) = (pair.report.sub_values[i].min(pair.report.super_values[i]), pair.report.sub_values[i].max(pair.report.super_values[i]));
        let u = solution.value(r);
        let slack = 1e-9 * u.abs();
        u >= lo - slack && u <= hi + slack
    });
    Ok(ExtremalSolution { which, kind, solution, envelopes: pair.report, bracketed })
}
