//! Loading the data, running every (config, seed) pair and writing traces.

use crate::config::{DatasetSource, ExperimentSuite, PlannedRun};
use crate::error::{ConfigError, HarnessError};
use rayon::prelude::*;
use rhbb_core::synth::{generate, SyntheticSpec};
use rhbb_core::{load_libsvm, optimizers, Dataset, Problem, RunConfig, RunError, RunTrace, TraceRecord};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TRACE_HEADER: &str =
    "algo,seed,epoch,effective_passes,grad_norm,objective,step_min,step_mean,step_max,safeguards";

pub const MANIFEST_NAME: &str = "runs.csv";

pub fn load_dataset(source: &DatasetSource, dim: Option<usize>) -> Result<Dataset, ConfigError> {
    match source {
        DatasetSource::File(path) => {
            if !path.exists() {
                return Err(ConfigError::invalid("dataset", format!("file {} does not exist", path.display())));
            }
            Ok(load_libsvm(path, dim)?)
        }
        DatasetSource::Synthetic { name, rows } => {
            let mut spec = SyntheticSpec::by_name(name)
                .ok_or_else(|| ConfigError::invalid("dataset", format!("unknown synthetic dataset `{name}`")))?;
            if let Some(r) = rows {
                spec = spec.with_rows(*r);
            }
            Ok(generate(&spec)?)
        }
    }
}

/// Builds the problem and checks every run against its size.
pub fn prepare(suite: &ExperimentSuite) -> Result<Problem, ConfigError> {
    let data = load_dataset(&suite.dataset, suite.dim)?;
    let n = data.len();
    let problem = Problem::new(data, suite.lambda)?;
    for (i, run) in suite.runs.iter().enumerate() {
        run.config
            .validate(n)
            .map_err(|e| ConfigError::invalid(format!("runs[{i}] ({})", run.label), e.to_string()))?;
        run.distribution
            .build(problem.data())
            .map_err(|e| ConfigError::invalid(format!("runs[{i}] ({})", run.label), e.to_string()))?;
    }
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Diverged,
    Failed(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
            RunStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Records up to the failure for runs that did not finish.
    pub trace: RunTrace,
}

pub fn execute(problem: &Problem, run: &PlannedRun, seed: u64) -> RunOutcome {
    let cfg = RunConfig { seed, ..run.config.clone() };
    let result = run.distribution.build(problem.data()).map_err(RunError::from).and_then(|q| {
        if run.inner_only {
            optimizers::run_inner_only(problem, &cfg, Some(&q))
        } else {
            optimizers::run(problem, &cfg, Some(&q))
        }
    });
    let (status, trace) = match result {
        Ok(t) => (RunStatus::Ok, t),
        Err(RunError::Diverged { trace, .. }) => (RunStatus::Diverged, trace),
        Err(RunError::Invalid(e)) => (RunStatus::Failed(e.to_string()), RunTrace::default()),
    };
    RunOutcome { label: run.label.clone(), seed, status, trace }
}

/// All (run, seed) pairs in plan order, executed in parallel.
pub fn execute_all(suite: &ExperimentSuite, problem: &Problem) -> Vec<RunOutcome> {
    let pairs: Vec<(&PlannedRun, u64)> =
        suite.runs.iter().flat_map(|r| suite.seeds.iter().map(move |&s| (r, s))).collect();
    pairs.par_iter().map(|(run, seed)| execute(problem, run, *seed)).collect()
}

pub fn trace_file_name(label: &str, seed: u64) -> String {
    format!("{label}_seed{seed}.csv")
}

pub fn format_record(out: &mut String, label: &str, seed: u64, r: &TraceRecord) {
    let _ = writeln!(
        out,
        "{label},{seed},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
        r.epoch, r.effective_passes, r.grad_norm, r.objective, r.step_min, r.step_mean, r.step_max, r.safeguards
    );
}

pub fn trace_csv(label: &str, seed: u64, trace: &RunTrace) -> String {
    let mut out = String::with_capacity(128 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        format_record(&mut out, label, seed, r);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub outcomes: Vec<RunOutcome>,
    pub files: Vec<PathBuf>,
}

impl SuiteResult {
    pub fn any_failed(&self) -> bool {
        self.outcomes.iter().any(|o| o.status != RunStatus::Ok)
    }
}

/// Runs the suite and writes one CSV per (run, seed) plus the `runs.csv`
/// manifest into `suite.output`.
pub fn run_suite(suite: &ExperimentSuite) -> Result<SuiteResult, HarnessError> {
    let problem = prepare(suite)?;
    let out_dir = &suite.output;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let outcomes: Vec<(RunOutcome, Result<PathBuf, HarnessError>)> = suite
        .runs
        .iter()
        .flat_map(|r| suite.seeds.iter().map(move |&s| (r, s)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(run, seed)| {
            let outcome = execute(&problem, run, *seed);
            let path = out_dir.join(trace_file_name(&outcome.label, outcome.seed));
            let written = std::fs::write(&path, trace_csv(&outcome.label, outcome.seed, &outcome.trace))
                .map(|_| path.clone())
                .map_err(|e| HarnessError::io(&path, e));
            (outcome, written)
        })
        .collect();

    let mut manifest = String::from("algo,seed,status,records,file,message\n");
    let mut files = Vec::with_capacity(outcomes.len());
    let mut kept = Vec::with_capacity(outcomes.len());
    for (outcome, written) in outcomes {
        let path = written?;
        let message = match &outcome.status {
            RunStatus::Failed(m) => m.replace([',', '\n'], ";"),
            _ => String::new(),
        };
        let _ = writeln!(
            manifest,
            "{},{},{},{},{},{}",
            outcome.label,
            outcome.seed,
            outcome.status.as_str(),
            outcome.trace.records.len(),
            path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            message
        );
        files.push(path);
        kept.push(outcome);
    }
    let manifest_path = out_dir.join(MANIFEST_NAME);
    std::fs::write(&manifest_path, manifest).map_err(|e| HarnessError::io(&manifest_path, e))?;
    Ok(SuiteResult { outcomes: kept, files })
}

/// A parsed trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub algo: String,
    pub seed: u64,
    pub record: TraceRecord,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        Some(h) => return Err(format!("unexpected header `{h}`")),
        None => return Err("empty trace file".into()),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(format!("row {}: expected 10 columns, got {}", i + 2, cols.len()));
        }
        let bad = |c: &str| format!("row {}: bad value `{c}`", i + 2);
        let f = |c: &str| c.parse::<f64>().map_err(|_| bad(c));
        let u = |c: &str| c.parse::<usize>().map_err(|_| bad(c));
        rows.push(TraceRow {
            algo: cols[0].to_string(),
            seed: cols[1].parse().map_err(|_| bad(cols[1]))?,
            record: TraceRecord {
                epoch: u(cols[2])?,
                effective_passes: f(cols[3])?,
                grad_norm: f(cols[4])?,
                objective: f(cols[5])?,
                step_min: f(cols[6])?,
                step_mean: f(cols[7])?,
                step_max: f(cols[8])?,
                safeguards: u(cols[9])?,
            },
        });
    }
    Ok(rows)
}

/// Reads every trace CSV in `dir` (the manifest excluded), grouped per file
/// in file-name order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<(PathBuf, Vec<TraceRow>)>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|f| f != MANIFEST_NAME))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| HarnessError::io(&p, e))?;
        let rows = parse_trace_csv(&text).map_err(|m| HarnessError::Trace(format!("{}: {m}", p.display())))?;
        out.push((p, rows));
    }
    Ok(out)
}
