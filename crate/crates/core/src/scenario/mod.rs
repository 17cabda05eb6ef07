//! Scenario files: a JSON description of one problem and the tasks to run
//! on it, plus the runner that produces a report and artifact files.
//!
//! Artifacts are written with 17 significant digits and contain no wall
//! times unless timings are requested, so two runs of the same scenario
//! produce identical bytes.

mod sweep;
mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use sweep::{run_sweep, sweep, SweepAxis, SweepReport, SweepRow, SweepSpec};

use crate::analysis::{SpheresMode, WindowMode};
use crate::error::{Error, Result};
use crate::format::to_json;
use crate::params::{ProblemParams, Zeta};
use crate::potentials::{parse_table, Family, PotentialSpec, SignRule, DEFAULT_CONDITION_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Conditions,
    Wolff,
    Solve,
    Envelopes,
    Extremal,
    ThreeSpheres,
    Hardy,
    Classify,
    MinimalGrowth,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Conditions => "conditions",
            Task::Wolff => "wolff",
            Task::Solve => "solve",
            Task::Envelopes => "envelopes",
            Task::Extremal => "extremal",
            Task::ThreeSpheres => "three-spheres",
            Task::Hardy => "hardy",
            Task::Classify => "classify",
            Task::MinimalGrowth => "minimal-growth",
            Task::Sweep => "sweep",
        }
    }
}

fn plus() -> SignRule {
    SignRule::Plus
}

/// The potential: either an inline family or a two-column table file
/// (resolved relative to the scenario file). ζ comes from `params`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialInput {
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default = "plus")]
    pub sign: SignRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Tail tolerance of the (C1)/(C2) integrals.
    pub condition: f64,
    /// Relative tolerance of the radial ODE solver.
    pub ode: f64,
    /// |λ − c_H| below which the Hardy double root is reported.
    pub hardy: f64,
    /// Bound on the relative residual of −Δ_p W̃ = ∓G.
    pub wolff_residual: f64,
    /// Bound on the relative residual of Q'_V(r^γ) = 0.
    pub hardy_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { condition: DEFAULT_CONDITION_TOL, ode: 1e-10, hardy: 1e-12, wolff_residual: 1e-5, hardy_residual: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpheresInput {
    pub mode: SpheresMode,
    pub triples: usize,
    pub window: WindowMode,
    /// Draws per triple before giving up on it.
    pub max_attempts: usize,
}

impl Default for SpheresInput {
    fn default() -> Self {
        Self { mode: SpheresMode::ConcaveM, triples: 200, window: WindowMode::Adaptive, max_attempts: 64 }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimalGrowthInput {
    /// Outer radius R; the far end of the domain when absent.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub params: ProblemParams,
    pub potential: PotentialInput,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Radial interval (r_min, r_max); a default tail toward ζ when absent.
    #[serde(default)]
    pub domain: Option<(f64, f64)>,
    /// Boundary values (u(r_min), u(r_max)) for the BVP tasks.
    #[serde(default)]
    pub boundary: Option<(f64, f64)>,
    #[serde(default)]
    pub spheres: SpheresInput,
    #[serde(default)]
    pub minimal_growth: MinimalGrowthInput,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn parse_err(location: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), msg: msg.into() }
}

impl Scenario {
    /// Parses and validates scenario text. `origin` names the source in
    /// error locations; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let mut sc: Scenario =
            serde_json::from_str(text).map_err(|e| parse_err(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string()))?;
        sc.base_dir = base_dir.to_path_buf();
        sc.load_table()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), &base)
    }

    fn load_table(&mut self) -> Result<()> {
        match (&self.potential.family, &self.potential.table) {
            (Some(_), Some(_)) => Err(parse_err("potential", "give either `family` or `table`, not both")),
            (None, None) => Err(parse_err("potential", "missing `family` or `table`")),
            (Some(_), None) => Ok(()),
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)?;
                let (radii, values) = parse_table(&text).map_err(|e| match e {
                    Error::Parse { location, msg } => parse_err(format!("{}: {location}", path.display()), msg),
                    other => other,
                })?;
                self.potential.family = Some(Family::Tabulated { radii, values });
                Ok(())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(parse_err("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        if self.tasks.is_empty() {
            return Err(parse_err("tasks", "the task list is empty"));
        }
        self.params.validate().map_err(|e| parse_err("params", e.to_string()))?;
        self.potential_spec().validate().map_err(|e| parse_err("potential", e.to_string()))?;
        let (lo, hi) = self.domain();
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(parse_err("domain", format!("need 0 < r_min < r_max < ∞, got ({lo}, {hi})")));
        }
        let t = &self.tolerances;
        if [t.condition, t.ode, t.hardy, t.wolff_residual, t.hardy_residual].iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(parse_err("tolerances", "tolerances must be positive and finite"));
        }
        if let Some((a, b)) = self.boundary {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(parse_err("boundary", "boundary values must be positive and finite"));
            }
        }
        if self.spheres.triples == 0 || self.spheres.max_attempts == 0 {
            return Err(parse_err("spheres", "need at least one triple and one attempt"));
        }
        match (&self.sweep, self.tasks.contains(&Task::Sweep)) {
            (None, true) => return Err(parse_err("sweep", "task `sweep` needs a `sweep` block")),
            (Some(s), _) => s.validate(self)?,
            _ => {}
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        let family = self.potential.family.clone().unwrap_or(Family::Zero);
        PotentialSpec { family, sign: self.potential.sign, zeta: self.params.zeta }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain.unwrap_or(match self.params.zeta {
            Zeta::Origin => (1e-12, 1e-2),
            Zeta::Infinity => (1e2, 1e12),
        })
    }

    pub fn boundary(&self) -> (f64, f64) {
        self.boundary.unwrap_or((1.0, 1.0))
    }

    /// The output directory: `output_dir` relative to the scenario file, or
    /// `plap-out` next to it.
    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(self.output_dir.as_deref().unwrap_or("plap-out"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    Error,
}

impl Verdict {
    pub fn ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::NotApplicable)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "N/A",
            Verdict::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskResult {
    pub index: usize,
    pub task: Task,
    pub verdict: Verdict,
    pub detail: String,
    pub summary: serde_json::Value,
    /// Scalar results, used as sweep columns.
    pub headline: Vec<(String, String)>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub tasks: Vec<TaskResult>,
    pub verdict: Verdict,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out_dir: Option<PathBuf>,
    /// Skip all file output.
    pub dry_run: bool,
    pub timings: bool,
}

/// Loads and runs a scenario file with default options.
pub fn run_scenario(path: &Path) -> Result<ScenarioReport> {
    run(&Scenario::load(path)?, &RunOptions::default())
}

/// Runs every task of the scenario in order and writes `report.json`.
/// Module errors become an ERROR verdict on their task and do not stop the
/// remaining tasks.
pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    let out = if opts.dry_run { None } else { Some(opts.out_dir.clone().unwrap_or_else(|| sc.output_path())) };
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }
    let results = run_tasks(sc, &sc.tasks, out.as_deref(), opts.timings);
    let verdict = if results.iter().all(|r| r.verdict.ok()) { Verdict::Pass } else { Verdict::Fail };
    let report = ScenarioReport { schema_version: SCHEMA_VERSION, scenario: sc.clone(), tasks: results, verdict };
    if let Some(dir) = &out {
        std::fs::write(dir.join("report.json"), to_json(&report).map_err(std::io::Error::other)?)?;
    }
    Ok(report)
}

pub(crate) fn run_tasks(sc: &Scenario, list: &[Task], out: Option<&Path>, timings: bool) -> Vec<TaskResult> {
    list.iter()
        .enumerate()
        .map(|(index, &task)| {
            let start = Instant::now();
            let mut res = match tasks::run_task(task, sc, out, timings) {
                Ok(o) => TaskResult {
                    index,
                    task,
                    verdict: o.verdict,
                    detail: o.detail,
                    summary: o.summary,
                    headline: o.headline,
                    artifacts: o.artifacts,
                    wall_time_s: None,
                },
                Err(e) => {
                    let verdict = if matches!(e, Error::NotApplicable(_)) { Verdict::NotApplicable } else { Verdict::Error };
                    let detail = match e {
                        Error::NotApplicable(msg) => msg,
                        e => Error::Task { index, task: task.name().into(), source: Box::new(e) }.to_string(),
                    };
                    TaskResult {
                        index,
                        task,
                        verdict,
                        detail,
                        summary: serde_json::Value::Null,
                        headline: tasks::empty_headline(task),
                        artifacts: Vec::new(),
                        wall_time_s: None,
                    }
                }
            };
            if timings {
                res.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            res
        })
        .collect()
}

#[cfg(test)]
mod tests;
