//! Three-spheres inequalities with the Wolff potential as the interpolating
//! variable: M is convex and m concave as functions of W̃ near ζ, for the
//! sub/supersolutions of the eight table rows.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{to_json, write_csv};
use crate::params::{ProblemParams, Zeta};
use crate::potentials::PotentialSpec;
use crate::radial::RadialFunction;
use crate::radial_ode::q_prime_parts;
use crate::wolff::WolffTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpheresMode {
    /// M(r3) ≤ interpolant, for subsolutions.
    ConvexM,
    /// interpolant ≤ m(r3), for supersolutions.
    ConcaveM,
}

/// Rows of the hypothesis table: mode, singular point, p against d and the
/// assumed limit of u at ζ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpheresRow {
    #[serde(rename = "1.1")]
    R11,
    #[serde(rename = "1.2")]
    R12,
    #[serde(rename = "1.3")]
    R13,
    #[serde(rename = "1.4")]
    R14,
    #[serde(rename = "2.1")]
    R21,
    #[serde(rename = "2.2")]
    R22,
    #[serde(rename = "2.3")]
    R23,
    #[serde(rename = "2.4")]
    R24,
}

impl SpheresRow {
    /// The unique row for a mode and parameter set.
    pub fn for_case(params: &ProblemParams, mode: SpheresMode) -> Self {
        use std::cmp::Ordering::*;
        let pd = params.p_vs_d();
        match (mode, params.zeta) {
            (SpheresMode::ConvexM, Zeta::Origin) if pd == Greater => Self::R11,
            (SpheresMode::ConvexM, Zeta::Origin) => Self::R12,
            (SpheresMode::ConvexM, Zeta::Infinity) if pd != Less => Self::R13,
            (SpheresMode::ConvexM, Zeta::Infinity) => Self::R14,
            (SpheresMode::ConcaveM, Zeta::Origin) if pd == Greater => Self::R21,
            (SpheresMode::ConcaveM, Zeta::Origin) => Self::R22,
            (SpheresMode::ConcaveM, Zeta::Infinity) if pd != Less => Self::R23,
            (SpheresMode::ConcaveM, Zeta::Infinity) => Self::R24,
        }
    }

    /// The row assumes u → ∞ at ζ (otherwise u → 0).
    pub fn limit_infinite(self) -> bool {
        matches!(self, Self::R12 | Self::R13 | Self::R21 | Self::R24)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Triples are drawn where m(r1) > 2m(r2) (or m(r1) < m(r2)/2 when
    /// u → 0) and the interpolant passes the sub/supersolution test.
    Adaptive,
    /// Any r1 < r3 < r2 in the domain, without window tests.
    Fixed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpheresOptions {
    pub n_triples: usize,
    pub seed: u64,
    pub window: WindowMode,
    pub max_attempts: usize,
    /// Interior nodes at which the interpolant's residual sign is tested.
    pub certificate_nodes: usize,
    pub slack_tol: f64,
}

impl Default for SpheresOptions {
    fn default() -> Self {
        Self { n_triples: 200, seed: 0, window: WindowMode::Adaptive, max_attempts: 64, certificate_nodes: 12, slack_tol: 1e-9 }
    }
}

/// m and M of the profile on spheres; equal for radial profiles.
#[derive(Debug, Clone)]
pub struct SpheresProfile {
    pub lower: RadialFunction,
    pub upper: RadialFunction,
}

impl SpheresProfile {
    pub fn radial(f: RadialFunction) -> Self {
        Self { lower: f.clone(), upper: f }
    }

    fn pick(&self, mode: SpheresMode) -> &RadialFunction {
        match mode {
            SpheresMode::ConvexM => &self.upper,
            SpheresMode::ConcaveM => &self.lower,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triple {
    pub r1: f64,
    pub r3: f64,
    pub r2: f64,
    pub w1: f64,
    pub w3: f64,
    pub w2: f64,
    /// M or m at r1, r3, r2.
    pub u1: f64,
    pub u3: f64,
    pub u2: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs; nonnegative when the inequality holds.
    pub slack: f64,
    pub scale: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriplesReport {
    pub mode: SpheresMode,
    pub row: SpheresRow,
    pub window: WindowMode,
    pub seed: u64,
    pub n_requested: usize,
    pub triples: Vec<Triple>,
    pub attempts: usize,
    pub rejected_certificate: usize,
    /// Smallest slack/scale over all triples.
    pub worst_slack: f64,
    /// Indices of triples violating the inequality.
    pub failures: Vec<usize>,
    pub passed: bool,
}

impl TriplesReport {
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        write_csv(
            path,
            &["r1", "r3", "r2", "W1", "W3", "W2", "u1", "u3", "u2", "lhs", "rhs", "slack", "scale", "passed"],
            self.triples.iter().map(|t| {
                vec![t.r1, t.r3, t.r2, t.w1, t.w3, t.w2, t.u1, t.u3, t.u2, t.lhs, t.rhs, t.slack, t.scale, f64::from(u8::from(t.passed))]
            }),
        )
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, to_json(self).map_err(std::io::Error::other)?)
    }
}

struct Sampler<'a> {
    prof: &'a RadialFunction,
    w: &'a WolffTable,
    spec: &'a PotentialSpec,
    params: &'a ProblemParams,
    mode: SpheresMode,
    row: SpheresRow,
    opts: SpheresOptions,
    /// Log radius oriented so that it decreases toward ζ.
    orient: f64,
    xa: f64,
    xb: f64,
}

enum Draw {
    Found(Box<Triple>, usize, usize),
    Exhausted(usize, usize),
}

impl Sampler<'_> {
    fn radius(&self, x: f64) -> f64 {
        (self.orient * x).exp()
    }

    fn window_holds(&self, u1: f64, u2: f64) -> bool {
        if self.row.limit_infinite() {
            u1 > 2.0 * u2
        } else {
            u1 < 0.5 * u2
        }
    }

    /// Largest x < x2 on the dyadic grid from which the window condition
    /// holds all the way to the ζ end of the domain.
    fn window_edge(&self, x2: f64, u2: f64) -> Option<f64> {
        let mut grid = Vec::new();
        let mut x = x2 - std::f64::consts::LN_2;
        while x >= self.xa {
            grid.push(x);
            x -= std::f64::consts::LN_2;
        }
        let mut edge = None;
        for &x in grid.iter().rev() {
            if self.window_holds(self.prof.value(self.radius(x)), u2) {
                edge = Some(x);
            } else {
                break;
            }
        }
        edge
    }

    /// Sign test of Q'_V on the interpolant C1 + C2 W̃ between r1 and r2.
    fn certificate(&self, x1: f64, x2: f64, c1: f64, c2: f64) -> Result<bool> {
        let n = self.opts.certificate_nodes;
        for k in 1..=n {
            let x = x1 + (x2 - x1) * k as f64 / (n + 1) as f64;
            let r = self.radius(x);
            let (w, _) = self.w.eval(r)?;
            let f = c1 + c2 * w;
            let pot = self.spec.sign.factor(r.ln()) * self.spec.g_tail(r.ln()) / r.powf(self.params.p);
            let (q, scale) = q_prime_parts(self.params, pot, r, f, c2 * self.w.first(r), c2 * self.w.second(r));
            let ok = match self.mode {
                SpheresMode::ConvexM => q >= -self.opts.slack_tol * scale,
                SpheresMode::ConcaveM => q <= self.opts.slack_tol * scale,
            };
            if !(ok && f > 0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn evaluate(&self, x1: f64, x3: f64, x2: f64) -> Result<Triple> {
        let (r1, r3, r2) = (self.radius(x1), self.radius(x3), self.radius(x2));
        let (w1, w3, w2) = (self.w.eval(r1)?.0, self.w.eval(r3)?.0, self.w.eval(r2)?.0);
        let (u1, u3, u2) = (self.prof.value(r1), self.prof.value(r3), self.prof.value(r2));
        let dw = w2 - w1;
        let interp = u1 * (w2 - w3) / dw + u2 * (w3 - w1) / dw;
        let (lhs, rhs) = match self.mode {
            SpheresMode::ConvexM => (u3, interp),
            SpheresMode::ConcaveM => (interp, u3),
        };
        let slack = rhs - lhs;
        let scale = u1.abs().max(u2.abs()).max(u3.abs());
        let passed = slack >= -self.opts.slack_tol * scale;
        Ok(Triple { r1, r3, r2, w1, w3, w2, u1, u3, u2, lhs, rhs, slack, scale, passed })
    }

    fn draw(&self, seed: u64) -> Result<Draw> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rejected = 0;
        for attempt in 1..=self.opts.max_attempts {
            let (x1, x2) = match self.opts.window {
                WindowMode::Fixed => {
                    let a = rng.gen_range(self.xa..self.xb);
                    let b = rng.gen_range(self.xa..self.xb);
                    (a.min(b), a.max(b))
                }
                WindowMode::Adaptive => {
                    if self.xb - self.xa <= std::f64::consts::LN_2 {
                        return Ok(Draw::Exhausted(attempt, rejected));
                    }
                    let x2 = rng.gen_range(self.xa + std::f64::consts::LN_2..self.xb);
                    let u2 = self.prof.value(self.radius(x2));
                    let Some(edge) = self.window_edge(x2, u2) else { continue };
                    let x1 = if edge > self.xa { rng.gen_range(self.xa..edge) } else { self.xa };
                    let u1 = self.prof.value(self.radius(x1));
                    if !self.window_holds(u1, u2) {
                        continue;
                    }
                    (x1, x2)
                }
            };
            if x2 - x1 < 1e-9 {
                continue;
            }
            let x3 = x1 + (x2 - x1) * rng.gen_range(0.0..1.0f64).clamp(1e-6, 1.0 - 1e-6);
            let t = self.evaluate(x1, x3, x2)?;
            if t.w1 == t.w2 {
                continue;
            }
            if self.opts.window == WindowMode::Adaptive {
                let c2 = (t.u2 - t.u1) / (t.w2 - t.w1);
                let c1 = t.u1 - c2 * t.w1;
                if !self.certificate(x1, x2, c1, c2)? {
                    rejected += 1;
                    continue;
                }
            }
            return Ok(Draw::Found(Box::new(t), attempt, rejected));
        }
        Ok(Draw::Exhausted(self.opts.max_attempts, rejected))
    }
}

/// Samples triples r1 < r3 < r2 (ordered toward ζ as r1, r3, r2 from the
/// singular side) in `domain` and tests the three-spheres inequality of the
/// given mode. Triples are independent: each has its own RNG stream derived
/// from the seed, so results do not depend on thread scheduling.
pub fn check_three_spheres(
    profile: &SpheresProfile,
    w: &WolffTable,
    spec: &PotentialSpec,
    mode: SpheresMode,
    domain: (f64, f64),
    opts: SpheresOptions,
) -> Result<TriplesReport> {
    let params = w.params;
    if w.spec.is_zero() {
        return Err(Error::NotApplicable("the Wolff potential vanishes identically".into()));
    }
    if !(0.0 < domain.0 && domain.0 < domain.1) {
        return Err(Error::InvalidParams(format!("bad three-spheres domain {domain:?}")));
    }
    let row = SpheresRow::for_case(&params, mode);
    let orient = -params.zeta.direction();
    let (la, lb) = (orient * domain.0.ln(), orient * domain.1.ln());
    let sampler = Sampler {
        prof: profile.pick(mode),
        w,
        spec,
        params: &params,
        mode,
        row,
        opts,
        orient,
        xa: la.min(lb),
        xb: la.max(lb),
    };
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..opts.n_triples).map(|_| master.gen()).collect();
    let draws = seeds.par_iter().map(|&s| sampler.draw(s)).collect::<Result<Vec<_>>>()?;
    let mut report = TriplesReport {
        mode,
        row,
        window: opts.window,
        seed: opts.seed,
        n_requested: opts.n_triples,
        triples: Vec::new(),
        attempts: 0,
        rejected_certificate: 0,
        worst_slack: f64::INFINITY,
        failures: Vec::new(),
        passed: false,
    };
    for d in draws {
        match d {
            Draw::Found(t, a, r) => {
                report.attempts += a;
                report.rejected_certificate += r;
                if !t.passed {
                    report.failures.push(report.triples.len());
                }
                let rel = if t.scale > 0.0 { t.slack / t.scale } else { t.slack };
                report.worst_slack = report.worst_slack.min(rel);
                report.triples.push(*t);
            }
            Draw::Exhausted(a, r) => {
                report.attempts += a;
                report.rejected_certificate += r;
            }
        }
    }
    if report.triples.is_empty() {
        return Err(Error::WindowNotFound(format!(
            "no admissible triple in {} attempts on ({:e}, {:e}) for row {:?}",
            report.attempts, domain.0, domain.1, row
        )));
    }
    report.passed = report.failures.is_empty() && report.triples.len() == opts.n_triples;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SignRule;
    use crate::radial_ode::solve_bvp;
    use crate::wolff::wolff_potential;

    fn table(spec: &PotentialSpec, params: &ProblemParams, lo: f64, hi: f64) -> WolffTable {
        wolff_potential(spec, params, &[lo, hi], false).unwrap()
    }

    #[test]
    fn interpolant_has_zero_slack() {
        let params = ProblemParams::new(4.0, 2, Zeta::Origin).unwrap();
        let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
        let w = table(&spec, &params, 1e-8, 1e-2);
        let wf = w.as_function();
        let prof = SpheresProfile::radial(wf.affine(3.0, -2.0));
        let opts = SpheresOptions { n_triples: 40, seed: 7, window: WindowMode::Fixed, ..Default::default() };
        let rep = check_three_spheres(&prof, &w, &spec, SpheresMode::ConcaveM, (1e-8, 1e-2), opts).unwrap();
        assert_eq!(rep.triples.len(), 40);
        assert!(rep.triples.iter().all(|t| t.slack.abs() <= 1e-9 * t.scale));
    }

    #[test]
    fn concave_case_on_solution() {
        let params = ProblemParams::new(4.0, 2, Zeta::Origin).unwrap();
        let spec = PotentialSpec::power_law(1.0, SignRule::Plus, Zeta::Origin);
        let (lo, hi) = (1e-8, 1e-3);
        let sol = solve_bvp(&spec, &params, lo, hi, 1.0, 1e-3, 1e-10).unwrap();
        let w = table(&spec, &params, lo, hi);
        let opts = SpheresOptions { n_triples: 30, seed: 1, ..Default::default() };
        let rep = check_three_spheres(&SpheresProfile::radial(sol.as_function()), &w, &spec, SpheresMode::ConcaveM, (lo, hi), opts).unwrap();
        assert_eq!(rep.row, SpheresRow::R21);
        assert!(rep.passed, "{:?} worst {}", rep.failures, rep.worst_slack);
    }

    #[test]
    fn zero_potential_is_not_applicable() {
        let params = ProblemParams::new(2.0, 3, Zeta::Origin).unwrap();
        let spec = PotentialSpec::zero(Zeta::Origin);
        let w = table(&spec, &params, 1e-3, 1.0);
        let prof = SpheresProfile::radial(RadialFunction::constant(1.0));
        let err = check_three_spheres(&prof, &w, &spec, SpheresMode::ConvexM, (1e-3, 1.0), SpheresOptions::default());
        assert!(matches!(err, Err(Error::NotApplicable(_))));
    }

    #[test]
    fn rows_follow_the_table() {
        let p = |p: f64, d: u32, z: Zeta| ProblemParams::new(p, d, z).unwrap();
        assert_eq!(SpheresRow::for_case(&p(2.0, 3, Zeta::Infinity), SpheresMode::ConvexM), SpheresRow::R14);
        assert_eq!(SpheresRow::for_case(&p(3.0, 3, Zeta::Origin), SpheresMode::ConvexM), SpheresRow::R12);
        assert_eq!(SpheresRow::for_case(&p(3.0, 3, Zeta::Infinity), SpheresMode::ConcaveM), SpheresRow::R23);
        assert!(!SpheresRow::R14.limit_infinite() && SpheresRow::R21.limit_infinite());
    }
}
