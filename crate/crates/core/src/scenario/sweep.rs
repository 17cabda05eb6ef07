use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_err, run_tasks, Scenario, Task, TaskResult, Verdict};
use crate::error::Result;
use crate::format::{num, to_json};
use crate::potentials::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    P,
    Epsilon,
    Beta,
    Lambda,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::P => "p",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Beta => "beta",
            SweepAxis::Lambda => "lambda",
        }
    }
}

/// One parameter varied over a list of values; `tasks` run at every point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub tasks: Vec<Task>,
}

impl SweepSpec {
    pub(super) fn validate(&self, sc: &Scenario) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("sweep.values", "need a nonempty list of finite values"));
        }
        if self.tasks.is_empty() || self.tasks.contains(&Task::Sweep) {
            return Err(parse_err("sweep.tasks", "need a nonempty task list without `sweep`"));
        }
        for &v in &self.values {
            let point = apply(sc, self, v)?;
            point.params.validate().map_err(|e| parse_err("sweep.values", e.to_string()))?;
            point.potential_spec().validate().map_err(|e| parse_err("sweep.values", e.to_string()))?;
        }
        Ok(())
    }
}

/// The scenario at one grid point, running the sweep's task list.
fn apply(sc: &Scenario, spec: &SweepSpec, value: f64) -> Result<Scenario> {
    let mut point = sc.clone();
    point.tasks = spec.tasks.clone();
    point.sweep = None;
    let family = point.potential.family.as_mut();
    match (spec.axis, family) {
        (SweepAxis::P, _) => point.params.p = value,
        (SweepAxis::Epsilon, Some(Family::PowerLaw { epsilon })) => *epsilon = value,
        (SweepAxis::Beta, Some(Family::LogPower { beta })) => *beta = value,
        (SweepAxis::Lambda, Some(Family::HardyConstant { lambda })) => *lambda = value,
        (axis, _) => return Err(parse_err("sweep.axis", format!("axis `{}` does not match the potential family", axis.name()))),
    }
    Ok(point)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub verdict: Verdict,
    pub tasks: Vec<TaskResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// `task.key` names of the headline columns.
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn csv(&self) -> String {
        let mut s = format!("{},verdict", self.axis.name());
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for row in &self.rows {
            s.push_str(&num(row.value));
            s.push(',');
            s.push_str(row.verdict.label());
            for t in &row.tasks {
                for (_, cell) in &t.headline {
                    s.push(',');
                    s.push_str(cell);
                }
            }
            s.push('\n');
        }
        s
    }

    /// Writes `sweep.csv` and `sweep.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), self.csv())?;
        std::fs::write(dir.join("sweep.json"), to_json(self).map_err(std::io::Error::other)?)?;
        Ok(())
    }
}

/// Runs the sweep's tasks at every grid point in parallel. Rows come back
/// in grid order and no per-point files are written.
pub fn run_sweep(sc: &Scenario, timings: bool) -> Result<SweepReport> {
    let spec = sc.sweep.as_ref().ok_or_else(|| parse_err("sweep", "the scenario has no `sweep` block"))?;
    let points = spec.values.iter().map(|&v| apply(sc, spec, v)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = points
        .par_iter()
        .zip(spec.values.par_iter())
        .map(|(point, &value)| {
            let tasks = run_tasks(point, &point.tasks, None, timings);
            let verdict = if tasks.iter().all(|t| t.verdict.ok()) { Verdict::Pass } else { Verdict::Fail };
            SweepRow { value, verdict, tasks }
        })
        .collect();
    let columns = spec
        .tasks
        .iter()
        .zip(&rows[0].tasks)
        .flat_map(|(task, res)| res.headline.iter().map(move |(k, _)| format!("{}.{k}", task.name())))
        .collect();
    Ok(SweepReport { axis: spec.axis, values: spec.values.clone(), columns, rows })
}

/// Loads a scenario file and runs its sweep.
pub fn sweep(path: &Path) -> Result<SweepReport> {
    run_sweep(&Scenario::load(path)?, false)
}
