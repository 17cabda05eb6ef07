//! Radial solution of minimal growth at infinity on B_R∖{0} (p > d, ζ = 0).

use serde::{Deserialize, Serialize};

use super::{estimate_limit, LimitEstimate};
use crate::error::{Error, Result};
use crate::params::{ProblemParams, Zeta};
use crate::potentials::PotentialSpec;
use crate::radial_ode::{solve_ivp, RadialSolution};

/// Outer data δ_k = 2^{-k} R^{α*} for these k.
const EXHAUSTION_LEVELS: [i32; 3] = [20, 21, 22];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalGrowth {
    pub solution: RadialSolution,
    pub limit: LimitEstimate,
    pub outer_values: Vec<f64>,
    /// Largest change between the two extrapolations, relative to the sup of u.
    pub extrapolation_error: f64,
}

/// Solves inward from R with vanishing outer data u(R) = δ and the outer
/// flux of R^{α*} − r^{α*}, then extrapolates δ → 0 linearly.
pub fn minimal_growth_profile(spec: &PotentialSpec, params: &ProblemParams, big_r: f64, r_min: f64, tol: f64) -> Result<MinimalGrowth> {
    if params.zeta != Zeta::Origin || params.p <= params.dim() {
        return Err(Error::InvalidParams("minimal growth profile needs p > d and ζ = 0".into()));
    }
    if !(0.0 < r_min && r_min < big_r) {
        return Err(Error::InvalidParams(format!("need 0 < r_min < R, got {r_min}, {big_r}")));
    }
    let al = params.alpha_star();
    let w0 = -al.powf(params.p - 1.0);
    let deltas: Vec<f64> = EXHAUSTION_LEVELS.iter().map(|&k| 2f64.powi(-k) * big_r.powf(al)).collect();
    let sols = deltas
        .iter()
        .map(|&dl| solve_ivp(spec, params, big_r, dl, w0, r_min, tol))
        .collect::<Result<Vec<_>>>()?;
    // common grid: the finest solution's nodes
    let (coarse, mid, fine) = (&sols[0], &sols[1], &sols[2]);
    let mut out = fine.clone();
    let mut sup = 0.0f64;
    let mut change = 0.0f64;
    for i in 0..out.len() {
        let s = out.s[i];
        let vc = coarse.state_at_log(s)[0];
        let [vm, wm] = mid.state_at_log(s);
        let (vf, wf) = (fine.v[i], fine.w[i]);
        // δ halves at each level: linear extrapolation to δ = 0
        let v0 = 2.0 * vf - vm;
        let v1 = 2.0 * vm - vc;
        out.v[i] = v0;
        out.w[i] = 2.0 * wf - wm;
        out.dv_ds[i] = 2.0 * fine.dv_ds[i] - interp_dv(mid, s);
        out.dw_ds[i] = 2.0 * fine.dw_ds[i] - interp_dw(mid, s);
        sup = sup.max(v0.abs());
        change = change.max((v0 - v1).abs());
    }
    out.meta.method = "minimal-growth".into();
    let limit = estimate_limit(&out, params)?;
    Ok(MinimalGrowth { solution: out, limit, outer_values: deltas, extrapolation_error: if sup > 0.0 { change / sup } else { change } })
}

fn interp_dv(sol: &RadialSolution, s: f64) -> f64 {
    let r = s.exp();
    sol.derivative(r) * r
}

fn interp_dw(sol: &RadialSolution, s: f64) -> f64 {
    // dw/ds = r^d V φ_p(v) evaluated on the interpolated state
    let r = s.exp();
    let [v, _] = sol.state_at_log(s);
    let src = sol.spec.sign.factor(s) * sol.spec.g_tail(s);
    src * r.powf(sol.params.dim() - sol.params.p) * crate::radial::phi(sol.params.p, v)
}
