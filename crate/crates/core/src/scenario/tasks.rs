use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Scenario, Task, Verdict};
use crate::analysis::{
    check_three_spheres, classify_singularity, estimate_limit, minimal_growth_profile, SpheresOptions, SpheresProfile,
};
use crate::error::{Error, Result};
use crate::format::{num, to_json};
use crate::hardy::{hardy_exponents, verify_hardy_solution};
use crate::params::{classify_case, Zeta};
use crate::potentials::{check_condition_c1, check_condition_c2, check_fuchsian, ConditionVerdict, Family, SignRule, VerdictStatus};
use crate::radial_ode::{build_envelopes, construct_extremal, solve_bvp, EnvelopeKind, Extremal};
use crate::wolff::{u_potential, verify_wolff_equation, wolff_potential};

/// Decades probed for the Fuchsian bound.
const FUCHSIAN_DECADES: usize = 8;
/// Nodes of the log grid used for tables.
const TABLE_NODES: usize = 41;
/// Nodes at which the Hardy exponents are checked.
const HARDY_NODES: usize = 9;

pub(super) struct Outcome {
    pub verdict: Verdict,
    pub detail: String,
    pub summary: Value,
    pub headline: Vec<(String, String)>,
    pub artifacts: Vec<String>,
}

/// Column names each task contributes to a sweep table.
fn headline_keys(task: Task) -> &'static [&'static str] {
    match task {
        Task::Conditions => &["c1", "c1_value", "c2", "c2_value", "fuchsian_bound"],
        Task::Wolff => &["w_near", "w_far", "residual"],
        Task::Solve => &["min_value", "gradient_constant"],
        Task::Envelopes => &["unit_c", "unit_certified", "fundamental_c", "fundamental_certified"],
        Task::Extremal => &["small_limit", "large_limit"],
        Task::ThreeSpheres => &["triples", "worst_slack"],
        Task::Hardy => &["lambda", "c_h", "gamma_minus", "gamma_plus", "double_root"],
        Task::Classify => &["small_tag", "large_tag"],
        Task::MinimalGrowth => &["limit", "extrapolation_error"],
        Task::Sweep => &["rows"],
    }
}

fn headline(task: Task, values: Vec<String>) -> Vec<(String, String)> {
    let keys = headline_keys(task);
    debug_assert_eq!(keys.len(), values.len());
    keys.iter().map(|k| k.to_string()).zip(values).collect()
}

pub(super) fn empty_headline(task: Task) -> Vec<(String, String)> {
    headline(task, vec![String::new(); headline_keys(task).len()])
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// The serialized name of a unit enum variant.
fn label<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn log_grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| if i + 1 == n { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() }).collect()
}

/// A divergent condition makes the task inapplicable rather than failed.
fn na_on_violation<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::ConditionViolation { .. } => Error::NotApplicable(e.to_string()),
        other => other,
    })
}

fn write_json<T: Serialize>(dir: Option<&Path>, name: &str, value: &T, names: &mut Vec<String>) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::write(dir.join(name), to_json(value).map_err(std::io::Error::other)?)?;
        names.push(name.into());
    }
    Ok(())
}

fn write_with(dir: Option<&Path>, name: &str, names: &mut Vec<String>, f: impl FnOnce(&Path) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = dir {
        f(&dir.join(name))?;
        names.push(name.into());
    }
    Ok(())
}

pub(super) fn run_task(task: Task, sc: &Scenario, out: Option<&Path>, timings: bool) -> Result<Outcome> {
    match task {
        Task::Conditions => conditions(sc),
        Task::Wolff => wolff(sc, out),
        Task::Solve => solve(sc, out),
        Task::Envelopes => envelopes(sc, out),
        Task::Extremal => extremal(sc, out),
        Task::ThreeSpheres => three_spheres(sc, out),
        Task::Hardy => hardy(sc, out),
        Task::Classify => classify(sc, out),
        Task::MinimalGrowth => minimal_growth(sc, out),
        Task::Sweep => sweep(sc, out, timings),
    }
}

fn verdict_cells(v: &ConditionVerdict) -> [String; 2] {
    let value = match v.status {
        VerdictStatus::Finite { value } => num(value),
        _ => String::new(),
    };
    [v.label().to_string(), value]
}

fn conditions(sc: &Scenario) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let fuchsian = check_fuchsian(&spec, &params, FUCHSIAN_DECADES)?;
    let c1 = check_condition_c1(&spec, &params, sc.tolerances.condition)?;
    let c2 = check_condition_c2(&spec, &params, sc.tolerances.condition)?;
    let conclusive = !matches!(c1.status, VerdictStatus::Inconclusive) && !matches!(c2.status, VerdictStatus::Inconclusive);
    let [c1_label, c1_value] = verdict_cells(&c1);
    let [c2_label, c2_value] = verdict_cells(&c2);
    Ok(Outcome {
        verdict: if conclusive { Verdict::Pass } else { Verdict::Fail },
        detail: format!("C1 {c1_label}, C2 {c2_label}, Fuchsian bound {} (holds: {})", num(fuchsian.bound), fuchsian.holds),
        summary: json!({ "case": classify_case(&params), "fuchsian": fuchsian, "c1": c1, "c2": c2 }),
        headline: headline(Task::Conditions, vec![c1_label, c1_value, c2_label, c2_value, num(fuchsian.bound)]),
        artifacts: Vec::new(),
    })
}

fn wolff(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let radii = log_grid(sc.domain(), TABLE_NODES);
    let table = na_on_violation(wolff_potential(&spec, &params, &radii, false))?;
    let res = verify_wolff_equation(&table, &params)?;
    let u = u_potential(&spec, &params, &radii, false);
    let mut artifacts = Vec::new();
    write_with(out, "wolff.csv", &mut artifacts, |p| table.write_csv(p))?;
    let u_summary = match &u {
        Ok(t) => {
            write_with(out, "u.csv", &mut artifacts, |p| t.write_csv(p))?;
            json!({ "max_relative_d2": t.max_relative_d2, "c2": t.c2_verdict, "branch_note": t.branch_note })
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let (near, far) = match params.zeta {
        Zeta::Origin => (table.values[0], table.values[radii.len() - 1]),
        Zeta::Infinity => (table.values[radii.len() - 1], table.values[0]),
    };
    let ok = res.max_relative <= sc.tolerances.wolff_residual && res.sign_consistent;
    Ok(Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail: format!("W̃ residual {} (bound {}), sign consistent: {}", num(res.max_relative), num(sc.tolerances.wolff_residual), res.sign_consistent),
        summary: json!({
            "case": table.case,
            "c1": table.c1_verdict,
            "residual": res.max_relative,
            "sign_consistent": res.sign_consistent,
            "u": u_summary,
        }),
        headline: headline(Task::Wolff, vec![num(near), num(far), num(res.max_relative)]),
        artifacts,
    })
}

fn solve(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let ((lo, hi), (v1, v2)) = (sc.domain(), sc.boundary());
    let sol = solve_bvp(&spec, &params, lo, hi, v1, v2, sc.tolerances.ode)?;
    let mut artifacts = Vec::new();
    write_with(out, "solution.csv", &mut artifacts, |p| sol.write_csv(p))?;
    write_with(out, "solution_meta.json", &mut artifacts, |p| sol.write_meta_json(p))?;
    let (min, k) = (sol.min_value(), sol.gradient_constant());
    Ok(Outcome {
        verdict: if min > 0.0 { Verdict::Pass } else { Verdict::Fail },
        detail: format!("{} nodes, min u = {}, gradient constant {}", sol.len(), num(min), num(k)),
        summary: json!({ "nodes": sol.len(), "min_value": min, "gradient_constant": k, "meta": sol.meta }),
        headline: headline(Task::Solve, vec![num(min), num(k)]),
        artifacts,
    })
}

fn envelopes(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let mut artifacts = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut cells = Vec::new();
    let mut details = Vec::new();
    let (mut any, mut all_certified) = (false, true);
    for (kind, name) in [(EnvelopeKind::Unit, "unit"), (EnvelopeKind::Fundamental, "fundamental")] {
        match build_envelopes(&spec, &params, kind, sc.domain()) {
            Ok(pair) => {
                let r = pair.report;
                any = true;
                all_certified &= r.certified;
                write_json(out, &format!("envelopes_{name}.json"), &r, &mut artifacts)?;
                details.push(format!("{name}: C = {}, certified {}", num(r.c), r.certified));
                cells.extend([num(r.c), r.certified.to_string()]);
                summary.insert(
                    name.into(),
                    json!({ "c": r.c, "domain": r.domain, "shrinks": r.shrinks, "certified": r.certified, "ordered": r.ordered }),
                );
            }
            Err(e @ (Error::ConditionViolation { .. } | Error::NotApplicable(_))) => {
                details.push(format!("{name}: not applicable"));
                cells.extend([String::new(), String::new()]);
                summary.insert(name.into(), json!({ "not_applicable": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    let verdict = match (any, all_certified) {
        (false, _) => Verdict::NotApplicable,
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Fail,
    };
    Ok(Outcome { verdict, detail: details.join("; "), summary: Value::Object(summary), headline: headline(Task::Envelopes, cells), artifacts })
}

fn extremal(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let mut artifacts = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut cells = Vec::new();
    let mut details = Vec::new();
    for (which, name) in [(Extremal::Small, "small"), (Extremal::Large, "large")] {
        let ext = construct_extremal(&spec, &params, which, sc.domain(), sc.tolerances.ode)?;
        let lim = estimate_limit(&ext.solution, &params)?;
        write_with(out, &format!("extremal_{name}.csv"), &mut artifacts, |p| ext.solution.write_csv(p))?;
        details.push(format!("{name}: limit {} ({})", num(lim.value), label(&lim.status)));
        cells.push(num(lim.value));
        summary.insert(
            name.into(),
            json!({
                "kind": ext.kind,
                "limit": lim.value,
                "limit_status": lim.status,
                "cauchy_gap": lim.cauchy_gap,
                "bracketed": ext.bracketed,
                "envelope_c": ext.envelopes.c,
                "envelope_domain": ext.envelopes.domain,
            }),
        );
    }
    Ok(Outcome { verdict: Verdict::Pass, detail: details.join("; "), summary: Value::Object(summary), headline: headline(Task::Extremal, cells), artifacts })
}

fn three_spheres(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let ((lo, hi), (v1, v2)) = (sc.domain(), sc.boundary());
    let w = na_on_violation(wolff_potential(&spec, &params, &[lo, hi], false))?;
    let sol = solve_bvp(&spec, &params, lo, hi, v1, v2, sc.tolerances.ode)?;
    let opts = SpheresOptions {
        n_triples: sc.spheres.triples,
        seed: sc.seed,
        window: sc.spheres.window,
        max_attempts: sc.spheres.max_attempts,
        ..Default::default()
    };
    let rep = match check_three_spheres(&SpheresProfile::radial(sol.as_function()), &w, &spec, sc.spheres.mode, (lo, hi), opts) {
        Ok(r) => r,
        Err(e @ Error::WindowNotFound(_)) => {
            return Ok(Outcome {
                verdict: Verdict::Fail,
                detail: e.to_string(),
                summary: json!({ "window_not_found": e.to_string() }),
                headline: headline(Task::ThreeSpheres, vec!["0".into(), String::new()]),
                artifacts: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut artifacts = Vec::new();
    write_with(out, "triples.csv", &mut artifacts, |p| rep.write_csv(p))?;
    write_with(out, "triples.json", &mut artifacts, |p| rep.write_json(p))?;
    Ok(Outcome {
        verdict: if rep.passed { Verdict::Pass } else { Verdict::Fail },
        detail: format!("row {}: {} of {} triples, {} failures, worst slack {}", label(&rep.row), rep.triples.len(), rep.n_requested, rep.failures.len(), num(rep.worst_slack)),
        summary: json!({
            "mode": rep.mode,
            "row": rep.row,
            "found": rep.triples.len(),
            "requested": rep.n_requested,
            "attempts": rep.attempts,
            "rejected_certificate": rep.rejected_certificate,
            "failures": rep.failures,
            "worst_slack": rep.worst_slack,
        }),
        headline: headline(Task::ThreeSpheres, vec![rep.triples.len().to_string(), num(rep.worst_slack)]),
        artifacts,
    })
}

/// λ of V = −λ r^{−p}, when the potential has that form.
fn hardy_lambda(sc: &Scenario) -> Option<f64> {
    match (&sc.potential.family, sc.potential.sign) {
        (Some(Family::Zero), _) => Some(0.0),
        (Some(Family::HardyConstant { lambda }), SignRule::Minus) => Some(*lambda),
        (Some(Family::HardyConstant { lambda }), SignRule::Plus) => Some(-*lambda),
        _ => None,
    }
}

fn hardy(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let params = sc.params;
    let lambda = hardy_lambda(sc).ok_or_else(|| Error::NotApplicable("the potential is not of the form −λ r^{−p}".into()))?;
    let e = hardy_exponents(&params, lambda, sc.tolerances.hardy);
    let radii = log_grid(sc.domain(), HARDY_NODES);
    let checks: Vec<_> = [e.gamma_minus, e.gamma_plus].into_iter().flatten().map(|g| verify_hardy_solution(&params, lambda, g, &radii)).collect();
    let worst = checks.iter().map(|c| c.max_relative).fold(0.0f64, f64::max);
    let mut artifacts = Vec::new();
    let summary = json!({ "exponents": e, "checks": checks, "max_relative_residual": worst });
    write_json(out, "hardy.json", &summary, &mut artifacts)?;
    let detail = match (e.gamma_minus, e.gamma_plus) {
        _ if e.double_root => format!("λ = c_H = {}: double root γ* = {}", num(e.c_h), num(e.gamma_star)),
        (Some(a), Some(b)) => format!("γ− = {}, γ+ = {}, residual {}", num(a), num(b), num(worst)),
        _ => format!("λ > c_H = {}: no real exponents", num(e.c_h)),
    };
    Ok(Outcome {
        verdict: if worst <= sc.tolerances.hardy_residual { Verdict::Pass } else { Verdict::Fail },
        detail,
        headline: headline(
            Task::Hardy,
            vec![num(lambda), num(e.c_h), opt(e.gamma_minus), opt(e.gamma_plus), e.double_root.to_string()],
        ),
        summary,
        artifacts,
    })
}

fn classify(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    let mut summary = serde_json::Map::new();
    let mut cells = Vec::new();
    let mut details = Vec::new();
    for (which, name) in [(Extremal::Small, "small"), (Extremal::Large, "large")] {
        let ext = construct_extremal(&spec, &params, which, sc.domain(), sc.tolerances.ode)?;
        let class = classify_singularity(&ext.solution, &spec, &params)?;
        let tag = label(&class.tag);
        details.push(format!("{name}: {tag}"));
        cells.push(tag);
        summary.insert(name.into(), serde_json::to_value(&class).map_err(std::io::Error::other)?);
    }
    let summary = Value::Object(summary);
    let mut artifacts = Vec::new();
    write_json(out, "classify.json", &summary, &mut artifacts)?;
    Ok(Outcome { verdict: Verdict::Pass, detail: details.join("; "), summary, headline: headline(Task::Classify, cells), artifacts })
}

fn minimal_growth(sc: &Scenario, out: Option<&Path>) -> Result<Outcome> {
    let (spec, params) = (sc.potential_spec(), sc.params);
    if params.zeta != Zeta::Origin || params.p <= params.dim() {
        return Err(Error::NotApplicable("minimal growth needs p > d and ζ = 0".into()));
    }
    let (lo, hi) = sc.domain();
    let big_r = sc.minimal_growth.radius.unwrap_or(hi);
    let m = minimal_growth_profile(&spec, &params, big_r, lo, sc.tolerances.ode)?;
    let mut artifacts = Vec::new();
    write_with(out, "minimal_growth.csv", &mut artifacts, |p| m.solution.write_csv(p))?;
    let ok = m.limit.is_finite() && m.limit.value > 0.0;
    Ok(Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail: format!("limit at 0: {} ({}), extrapolation change {}", num(m.limit.value), label(&m.limit.status), num(m.extrapolation_error)),
        summary: json!({
            "radius": big_r,
            "limit": m.limit.value,
            "limit_status": m.limit.status,
            "cauchy_gap": m.limit.cauchy_gap,
            "outer_values": m.outer_values,
            "extrapolation_error": m.extrapolation_error,
        }),
        headline: headline(Task::MinimalGrowth, vec![num(m.limit.value), num(m.extrapolation_error)]),
        artifacts,
    })
}

fn sweep(sc: &Scenario, out: Option<&Path>, timings: bool) -> Result<Outcome> {
    let rep = super::run_sweep(sc, timings)?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        rep.write(dir)?;
        artifacts.extend(["sweep.csv".to_string(), "sweep.json".to_string()]);
    }
    let failed = rep.rows.iter().filter(|r| !r.verdict.ok()).count();
    Ok(Outcome {
        verdict: if failed == 0 { Verdict::Pass } else { Verdict::Fail },
        detail: format!("{} rows over {}, {failed} not passing", rep.rows.len(), label(&rep.axis)),
        summary: json!({ "axis": rep.axis, "values": rep.values, "rows": rep.rows.len(), "failed": failed }),
        headline: headline(Task::Sweep, vec![rep.rows.len().to_string()]),
        artifacts,
    })
}
