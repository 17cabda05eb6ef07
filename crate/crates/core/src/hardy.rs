//! The Hardy potential V = −λ|x|^{−p}: critical constant and the exponents
//! γ for which |x|^γ solves Q'_V(u) = 0.
//!
//! Substituting r^γ gives the transcendental equation f(γ) = λ with
//! f(γ) = −φ_p(γ)[γ(p−1) + d − p]. f peaks at γ* = (p−d)/p with value
//! c_H = |γ*|^p and decreases to −∞ on either side.

use serde::{Deserialize, Serialize};

use crate::params::ProblemParams;
use crate::radial::phi;
use crate::radial_ode::q_prime_parts;

const MAX_EXPANSIONS: usize = 80;
const MAX_BISECTIONS: usize = 200;
/// Smallest initial bracket offset from γ*.
const FIRST_OFFSET: f64 = 1.0 / 1_048_576.0;

pub fn hardy_constant(params: &ProblemParams) -> f64 {
    params.hardy_constant()
}

/// Left side of the exponent equation.
pub fn exponent_map(params: &ProblemParams, gamma: f64) -> f64 {
    -phi(params.p, gamma) * (gamma * (params.p - 1.0) + params.dim() - params.p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardyExponents {
    pub lambda: f64,
    pub c_h: f64,
    pub gamma_star: f64,
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    /// Final bisection intervals for γ− and γ+.
    pub bracket_minus: Option<(f64, f64)>,
    pub bracket_plus: Option<(f64, f64)>,
    /// λ lies within the tolerance of c_H and the double root γ* is returned.
    pub double_root: bool,
}

/// Roots of f(γ) = λ on either side of γ*. None when λ exceeds c_H by more
/// than `tol`; the double root γ* when |λ − c_H| ≤ tol.
pub fn hardy_exponents(params: &ProblemParams, lambda: f64, tol: f64) -> HardyExponents {
    let c_h = hardy_constant(params);
    let gs = params.gamma_star();
    let mut out = HardyExponents {
        lambda,
        c_h,
        gamma_star: gs,
        gamma_minus: None,
        gamma_plus: None,
        bracket_minus: None,
        bracket_plus: None,
        double_root: false,
    };
    if (lambda - c_h).abs() <= tol {
        out.double_root = true;
        out.gamma_minus = Some(gs);
        out.gamma_plus = Some(gs);
        return out;
    }
    if lambda > c_h {
        return out;
    }
    for dir in [-1.0, 1.0] {
        if let Some((root, bracket)) = side_root(params, lambda, dir, tol) {
            if dir < 0.0 {
                out.gamma_minus = Some(root);
                out.bracket_minus = Some(bracket);
            } else {
                out.gamma_plus = Some(root);
                out.bracket_plus = Some(bracket);
            }
        }
    }
    out
}

/// Bisection on the side `dir` of γ*, where f − λ changes sign once.
fn side_root(params: &ProblemParams, lambda: f64, dir: f64, tol: f64) -> Option<(f64, (f64, f64))> {
    let gs = params.gamma_star();
    let h = |g: f64| exponent_map(params, g) - lambda;
    // near end: f > λ; far end: f ≤ λ
    let mut near = gs;
    let mut offset = FIRST_OFFSET;
    let mut far = gs + dir * offset;
    let mut n = 0;
    while h(far) > 0.0 {
        near = far;
        offset *= 2.0;
        far = gs + dir * offset;
        n += 1;
        if n > MAX_EXPANSIONS {
            return None;
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (near + far);
        if mid == near || mid == far {
            break;
        }
        if h(mid) > 0.0 {
            near = mid;
        } else {
            far = mid;
        }
        if (far - near).abs() <= 1e-16 * (1.0 + gs.abs()) && h(far).abs() <= tol {
            break;
        }
    }
    // the endpoint with the smaller residual
    let root = if h(near).abs() < h(far).abs() { near } else { far };
    Some((root, (near.min(far), near.max(far))))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardyResidual {
    pub lambda: f64,
    pub gamma: f64,
    pub radii: Vec<f64>,
    /// Q'_V(r^γ) at each radius.
    pub residuals: Vec<f64>,
    /// Largest residual relative to the size of the two terms of Q'_V.
    pub max_relative: f64,
}

/// Applies Q'_V with V = −λr^{−p} to r^γ at the given radii.
pub fn verify_hardy_solution(params: &ProblemParams, lambda: f64, gamma: f64, radii: &[f64]) -> HardyResidual {
    let p = params.p;
    let mut rep = HardyResidual { lambda, gamma, radii: radii.to_vec(), residuals: Vec::new(), max_relative: 0.0 };
    for &r in radii {
        let val = r.powf(gamma);
        let d1 = gamma * r.powf(gamma - 1.0);
        let d2 = gamma * (gamma - 1.0) * r.powf(gamma - 2.0);
        let (q, scale) = q_prime_parts(params, -lambda / r.powf(p), r, val, d1, d2);
        let rel = if scale == 0.0 { q.abs() } else { q.abs() / scale };
        rep.max_relative = rep.max_relative.max(rel);
        rep.residuals.push(q);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Zeta;

    fn pr(p: f64, d: u32) -> ProblemParams {
        ProblemParams::new(p, d, Zeta::Origin).unwrap()
    }

    #[test]
    fn critical_constants() {
        assert!((hardy_constant(&pr(2.0, 3)) - 0.25).abs() < 1e-15);
        assert_eq!(hardy_constant(&pr(3.0, 3)), 0.0);
        assert!((hardy_constant(&pr(4.0, 2)) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn peak_value_is_critical_constant() {
        for (p, d) in [(1.5, 2), (2.0, 3), (3.0, 2), (4.0, 2), (2.5, 5), (7.0, 3)] {
            let params = pr(p, d);
            let f = exponent_map(&params, params.gamma_star());
            assert!((f - params.hardy_constant()).abs() < 1e-12, "p={p} d={d}");
        }
    }

    #[test]
    fn laplacian_exponents() {
        let params = pr(2.0, 3);
        let e = hardy_exponents(&params, 0.0, 1e-14);
        assert!((e.gamma_minus.unwrap() + 1.0).abs() < 1e-12);
        assert!(e.gamma_plus.unwrap().abs() < 1e-12);
        let e = hardy_exponents(&params, 0.21, 1e-14);
        assert!((e.gamma_minus.unwrap() + 0.7).abs() < 1e-10);
        assert!((e.gamma_plus.unwrap() + 0.3).abs() < 1e-10);
        let e = hardy_exponents(&params, 0.25, 1e-14);
        assert!(e.double_root);
        assert_eq!(e.gamma_plus, Some(-0.5));
        assert!(hardy_exponents(&params, 0.3, 1e-14).gamma_plus.is_none());
    }

    #[test]
    fn exponents_solve_the_equation() {
        let params = pr(2.0, 3);
        let e = hardy_exponents(&params, 0.1, 1e-14);
        let radii = [1e-3, 0.1, 1.0, 10.0];
        for g in [e.gamma_minus.unwrap(), e.gamma_plus.unwrap()] {
            assert!(verify_hardy_solution(&params, 0.1, g, &radii).max_relative <= 1e-8);
        }
        assert_eq!(verify_hardy_solution(&params, 0.0, 0.0, &radii).max_relative, 0.0);
        let off = verify_hardy_solution(&params, 0.25, -0.4, &radii);
        assert!(off.max_relative > 1e-6);
    }
}
