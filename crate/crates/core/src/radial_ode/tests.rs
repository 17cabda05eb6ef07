use super::*;
use crate::params::{fundamental_solution, power_function, Zeta};
use crate::potentials::SignRule;

fn params(p: f64, d: u32, zeta: Zeta) -> ProblemParams {
    ProblemParams::new(p, d, zeta).unwrap()
}

#[test]
fn free_ivp_reproduces_fundamental_combination() {
    for (p, d) in [(2.0, 3), (4.0, 2), (1.5, 2)] {
        let pr = params(p, d, Zeta::Origin);
        let spec = PotentialSpec::zero(Zeta::Origin);
        let al = pr.alpha_star();
        // v = r^α* + 2
        let (r0, r1): (f64, f64) = (1.0, 1e-3);
        let w0 = flux_of(&pr, r0, al * r0.powf(al - 1.0));
        let sol = solve_ivp(&spec, &pr, r0, 3.0, w0, r1, 1e-12).unwrap();
        for &r in &[0.5f64, 0.1, 0.01, 0.002] {
            let exact = r.powf(al) + 2.0;
            assert!((sol.value(r) - exact).abs() < 1e-8 * exact, "p={p} d={d} r={r}");
        }
    }
}

#[test]
fn constant_is_a_free_solution() {
    let pr = params(3.0, 2, Zeta::Origin);
    let sol = solve_ivp(&PotentialSpec::zero(Zeta::Origin), &pr, 1.0, 1.0, 0.0, 1e-6, DEFAULT_TOL).unwrap();
    assert!(sol.v.iter().all(|&v| v == 1.0));
}

#[test]
fn flux_is_conserved_without_potential() {
    let pr = params(4.0, 2, Zeta::Origin);
    let spec = PotentialSpec::zero(Zeta::Origin);
    let sol = solve_ivp(&spec, &pr, 1.0, 1.0, -0.3, 1e-4, DEFAULT_TOL).unwrap();
    assert!(sol.w.iter().all(|&w| (w + 0.3).abs() <= 1e-10 * 0.3));
}

#[test]
fn hardy_potential_power_solution() {
    // −Δ_p r^γ + V r^{γ(p-1)} = 0 with V = -λ/r^p, λ = φ_p(γ)[γ(p-1)+d-p]·(-1)
    let (p, d) = (3.0, 3);
    let pr = params(p, d, Zeta::Origin);
    let gamma: f64 = -0.2;
    let lambda = phi(p, gamma) * (gamma * (p - 1.0) + d as f64 - p);
    let spec = PotentialSpec::new(Family::HardyConstant { lambda: lambda.abs() }, if lambda >= 0.0 { SignRule::Plus } else { SignRule::Minus }, Zeta::Origin).unwrap();
    let v = power_function(gamma);
    let sol = solve_ivp(&spec, &pr, 1.0, 1.0, flux_of(&pr, 1.0, v.first(1.0)), 1e-5, 1e-12).unwrap();
    for &r in &[0.1, 1e-3, 1e-5] {
        assert!((sol.value(r) / v.value(r) - 1.0).abs() < 1e-8, "r={r}");
    }
}

#[test]
fn bvp_hits_both_ends() {
    let pr = params(2.0, 3, Zeta::Origin);
    let spec = PotentialSpec::zero(Zeta::Origin);
    let sol = solve_bvp(&spec, &pr, 0.1, 1.0, 10.0, 1.0, 1e-11).unwrap();
    for &r in &[0.1, 0.2, 0.5, 1.0] {
        assert!((sol.value(r) - 1.0 / r).abs() < 1e-8 / r, "r={r}");
    }
    let trace = sol.meta.shooting.as_ref().unwrap();
    assert!(trace.monotone);
    assert!(trace.relative_mismatch.abs() <= 1e-11);

    let pr = params(4.0, 2, Zeta::Origin);
    let v = fundamental_solution(&pr);
    let sol = solve_bvp(&spec, &pr, 1e-3, 1.0, v.value(1e-3), 1.0, 1e-11).unwrap();
    let dev = (sol.value(0.03) / v.value(0.03) - 1.0).abs();
    assert!(dev < 1e-7, "{dev} {:?}", sol.meta.shooting);
}

#[test]
fn bvp_with_potential_is_monotone_in_flux() {
    let pr = params(4.0, 2, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
    let sol = solve_bvp(&spec, &pr, 1e-6, 1e-2, 1.0, 1e-2, 1e-10).unwrap();
    assert!(sol.meta.shooting.as_ref().unwrap().monotone);
    assert!(sol.min_value() > 0.0);
}

#[test]
fn gradient_constant_is_resolution_independent() {
    let pr = params(2.0, 3, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
    let base = ode_options(1e-10);
    let a = solve_ivp_with(&spec, &pr, 1.0, 1.0, 0.1, 1e-6, base).unwrap();
    let b = solve_ivp_with(&spec, &pr, 1.0, 1.0, 0.1, 1e-6, OdeOptions { h_max: base.h_max / 2.0, ..base }).unwrap();
    let (ka, kb) = (a.gradient_constant(), b.gradient_constant());
    assert!((ka - kb).abs() <= 0.05 * ka.max(kb), "{ka} vs {kb}");
}

#[test]
fn chain_identity_on_fundamental_power() {
    let pr = params(4.0, 2, Zeta::Origin);
    let spec = PotentialSpec::zero(Zeta::Origin);
    let v = fundamental_solution(&pr);
    let radii = [1e-3, 1e-2, 0.1, 0.5];
    let rep = chain_identity_residual(&v, ChainMap::Power { beta: 2.5 }, &spec, &pr, &radii).unwrap();
    assert!(rep.max_relative < 1e-6, "{}", rep.max_relative);
}

#[test]
fn chain_identity_on_computed_solution() {
    let pr = params(3.0, 2, Zeta::Origin);
    let spec = PotentialSpec::power_law(0.5, SignRule::Plus, Zeta::Origin);
    let sol = solve_bvp(&spec, &pr, 1e-3, 1.0, 2.0, 1.0, 1e-11).unwrap();
    let u = sol.as_function();
    let radii = [2e-3, 1e-2, 0.05, 0.3];
    let rep = chain_identity_residual(&u, ChainMap::Exp, &spec, &pr, &radii).unwrap();
    assert!(rep.max_relative < 1e-5, "{}", rep.max_relative);
}

#[test]
fn q_prime_vanishes_on_solution() {
    let pr = params(2.0, 3, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Minus, Zeta::Origin);
    let sol = solve_ivp(&spec, &pr, 1e-4, 1.0, 0.0, 1.0, 1e-12).unwrap();
    let u = sol.as_function();
    for &r in &[1e-3, 0.1, 0.9] {
        let q = q_prime(&u, &spec, &pr, r).unwrap();
        let scale = u.second(r).abs() + u.first(r).abs() / r + spec.g_tail(r.ln()) / r.powi(2) * u.value(r);
        assert!(q.abs() < 1e-6 * scale, "r={r} q={q}");
    }
}

#[test]
fn envelopes_certify_for_classical_unit() {
    let pr = params(2.0, 3, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
    let pair = build_envelopes(&spec, &pr, EnvelopeKind::Unit, (1e-8, 1e-2)).unwrap();
    assert!(pair.report.certified);
    let r = 1e-5;
    assert!(pair.sup.value(r) < 1.0 && pair.sub.value(r) > 1.0);
}

#[test]
fn envelopes_certify_for_fundamental() {
    let pr = params(4.0, 2, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
    let pair = build_envelopes(&spec, &pr, EnvelopeKind::Fundamental, (1e-8, 1e-2)).unwrap();
    assert!(pair.report.certified, "{:?}", pair.report.q_super);
}

#[test]
fn extremals_follow_their_profiles() {
    let pr = params(2.0, 3, Zeta::Origin);
    let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
    let small = construct_extremal(&spec, &pr, Extremal::Small, (1e-10, 1e-2), DEFAULT_TOL).unwrap();
    let large = construct_extremal(&spec, &pr, Extremal::Large, (1e-10, 1e-2), DEFAULT_TOL).unwrap();
    let r = 1e-9;
    assert!((small.solution.value(r) - 1.0).abs() < 1e-3);
    assert!((large.solution.value(r) * r).abs() > 0.5);
}
