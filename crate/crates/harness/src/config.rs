//! Experiment configuration files.
//!
//! A config names a dataset, a list of seeds, a `[defaults]` table and any
//! number of `[[runs]]` tables that override it. A `preset` key expands into
//! a fixed family of runs on top of the explicit ones.

use crate::error::ConfigError;
use rhbb_core::{Adaptor, DistributionChoice, Engine, HedgeConfig, RunConfig, StepRule};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Environment variable naming the directory that holds dataset files.
pub const DATA_DIR_ENV: &str = "RHBB_DATA_DIR";

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub dataset: String,
    pub dim: Option<usize>,
    pub lambda: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub preset: Option<String>,
    /// Shorthand for `defaults.algo`.
    pub algo: Option<String>,
    #[serde(default)]
    pub defaults: RunSpec,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
    #[serde(default)]
    pub theory: TheorySpec,
}

/// Every knob of a single run. Absent keys fall back to `[defaults]`, then to
/// built-in values.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub label: Option<String>,
    /// `<engine>[-rbb|-rhbb|-rhbb-plus|-constant]`, e.g. `ms2gd-rbb`; sets
    /// `engine` and `rule` (and `alpha = 1` for `-rbb`).
    pub algo: Option<String>,
    pub engine: Option<String>,
    pub rule: Option<String>,
    /// Constant step for the `constant` rule and the SVRG family.
    pub step: Option<f64>,
    pub epochs: Option<usize>,
    pub inner: Option<usize>,
    pub batch: Option<usize>,
    pub alpha: Option<f64>,
    pub adaptor: Option<String>,
    pub adaptor_table: Option<Vec<f64>>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma2: Option<f64>,
    pub b1: Option<usize>,
    pub b2: Option<usize>,
    pub eta0: Option<Vec<f64>>,
    pub distribution: Option<String>,
    pub tau: Option<f64>,
    pub eval_every: Option<usize>,
    pub inner_only: Option<bool>,
    pub count_stepsize_passes: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        RunSpec { $($field: $top.$field.clone().or_else(|| $base.$field.clone())),+ }
    };
}

impl RunSpec {
    /// `self` with gaps filled from `base`.
    pub fn over(&self, base: &RunSpec) -> RunSpec {
        overlay!(
            base,
            self,
            label,
            algo,
            engine,
            rule,
            step,
            epochs,
            inner,
            batch,
            alpha,
            adaptor,
            adaptor_table,
            sigma1,
            sigma2,
            gamma,
            gamma2,
            b1,
            b2,
            eta0,
            distribution,
            tau,
            eval_every,
            inner_only,
            count_stepsize_passes
        )
    }
}

/// Inputs to the analytic report that the data cannot supply.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TheorySpec {
    /// Target accuracy `ε`.
    pub eps: Option<f64>,
    /// `P(w₀) − P(w*)`.
    pub sigma0: Option<f64>,
    /// `‖∇P(w̃₀)‖²`; computed from the data when absent.
    pub zeta: Option<f64>,
    /// Gradient-dominance constant `δ`.
    pub delta: Option<f64>,
    /// `c ∈ (0, 1)` in the mS2GD halving condition; default 0.5.
    pub halving_c: Option<f64>,
}

/// Where the rows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// A LIBSVM file.
    File(PathBuf),
    /// A generated stand-in, optionally truncated to `rows`.
    Synthetic { name: String, rows: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub label: String,
    pub config: RunConfig,
    pub distribution: DistributionChoice,
    pub inner_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuite {
    pub name: String,
    pub dataset: DatasetSource,
    pub dim: Option<usize>,
    pub lambda: f64,
    pub seeds: Vec<u64>,
    pub runs: Vec<PlannedRun>,
    pub output: PathBuf,
    pub theory: TheorySpec,
}

/// Command-line overrides applied after the file is read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub exclude_stepsize_passes: bool,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentSuite, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_owned(), source: e })?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base_dir, overrides)
}

/// Parses config text; relative paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<ExperimentSuite, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    build_suite(file, base_dir, overrides)
}

fn build_suite(file: ConfigFile, base_dir: &Path, overrides: &Overrides) -> Result<ExperimentSuite, ConfigError> {
    let mut specs: Vec<(String, RunSpec)> = Vec::new();
    if let Some(preset) = &file.preset {
        for spec in expand_preset(preset)? {
            specs.push((format!("preset {preset}"), spec));
        }
    }
    for (i, spec) in file.runs.iter().enumerate() {
        specs.push((format!("runs[{i}]"), spec.clone()));
    }
    if specs.is_empty() {
        specs.push(("defaults".into(), RunSpec::default()));
    }

    let mut defaults = file.defaults.clone();
    if let Some(algo) = &file.algo {
        if defaults.algo.is_some() {
            return Err(ConfigError::invalid("algo", "given both at top level and in [defaults]"));
        }
        defaults.algo = Some(algo.clone());
    }
    let mut runs = Vec::with_capacity(specs.len());
    for (key, spec) in &specs {
        let merged = spec.over(&defaults);
        let mut run = plan_run(&merged).map_err(|msg| ConfigError::invalid(key, msg))?;
        if overrides.exclude_stepsize_passes {
            run.config.count_stepsize_passes = false;
        }
        runs.push(run);
    }
    let mut labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(ConfigError::invalid("runs", format!("duplicate run label `{}`", w[0])));
    }

    let seeds = match (overrides.seed, &file.seeds, file.seed) {
        (Some(s), _, _) => vec![s],
        (None, Some(list), _) if !list.is_empty() => list.clone(),
        (None, Some(_), _) => return Err(ConfigError::invalid("seeds", "at least one seed is required")),
        (None, None, Some(s)) => vec![s],
        (None, None, None) => vec![0],
    };
    let lambda = file.lambda.unwrap_or(0.01);
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(ConfigError::invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let dataset = parse_dataset(&file.dataset, base_dir).map_err(|m| ConfigError::invalid("dataset", m))?;
    let name = file.name.clone().unwrap_or_else(|| "suite".into());
    let output = overrides
        .output
        .clone()
        .or_else(|| file.output.as_ref().map(|o| base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("runs").join(&name));
    Ok(ExperimentSuite { name, dataset, dim: file.dim, lambda, seeds, runs, output, theory: file.theory })
}

/// `synthetic:<name>[:<rows>]` or a file path. Relative paths are tried
/// against `base_dir` first, then against the data directory.
pub fn parse_dataset(text: &str, base_dir: &Path) -> Result<DatasetSource, String> {
    if let Some(rest) = text.strip_prefix("synthetic:") {
        let mut parts = rest.splitn(2, ':');
        let name = parts.next().unwrap_or_default().to_string();
        if rhbb_core::synth::SyntheticSpec::by_name(&name).is_none() {
            return Err(format!("unknown synthetic dataset `{name}`; expected mushrooms, phishing or a8a"));
        }
        let rows = match parts.next() {
            Some(r) => Some(r.parse::<usize>().map_err(|_| format!("bad synthetic row count `{r}`"))?),
            None => None,
        };
        return Ok(DatasetSource::Synthetic { name, rows });
    }
    if text.is_empty() {
        return Err("missing dataset".into());
    }
    let p = Path::new(text);
    if p.is_absolute() {
        return Ok(DatasetSource::File(p.to_owned()));
    }
    let local = base_dir.join(p);
    if local.exists() {
        return Ok(DatasetSource::File(local));
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Ok(DatasetSource::File(PathBuf::from(dir).join(p))),
        None => Ok(DatasetSource::File(local)),
    }
}

fn expand_algo(spec: &RunSpec) -> Result<RunSpec, String> {
    let Some(algo) = &spec.algo else { return Ok(spec.clone()) };
    if spec.engine.is_some() || spec.rule.is_some() {
        return Err("algo: cannot be combined with `engine` or `rule`".into());
    }
    let (engine, rest) = ["mb-sarah", "ms2gd", "svrg-bb", "svrg"]
        .iter()
        .find_map(|e| algo.strip_prefix(e).map(|r| (*e, r)))
        .ok_or_else(|| format!("algo: unknown value `{algo}`"))?;
    let mut out = RunSpec { engine: Some(engine.into()), algo: None, ..spec.clone() };
    match rest {
        "" => {}
        "-rbb" => {
            out.rule = Some("rhbb".into());
            if out.alpha.is_some_and(|a| a != 1.0) {
                return Err("algo: `-rbb` fixes alpha = 1".into());
            }
            out.alpha = Some(1.0);
        }
        "-rhbb" => out.rule = Some("rhbb".into()),
        "-rhbb-plus" => out.rule = Some("rhbb-plus".into()),
        "-constant" => out.rule = Some("constant".into()),
        _ => return Err(format!("algo: unknown value `{algo}`")),
    }
    Ok(out)
}

fn plan_run(spec: &RunSpec) -> Result<PlannedRun, String> {
    let spec = &expand_algo(spec)?;
    let engine = match spec.engine.as_deref().unwrap_or("mb-sarah") {
        "mb-sarah" => Engine::MbSarah,
        "ms2gd" => Engine::Ms2gd,
        "svrg" => Engine::Svrg,
        "svrg-bb" => Engine::SvrgBb,
        other => return Err(format!("engine: unknown value `{other}`")),
    };
    let default_rule = if matches!(engine, Engine::Svrg | Engine::SvrgBb) { "constant" } else { "rhbb" };
    let rule = match spec.rule.as_deref().unwrap_or(default_rule) {
        "constant" => StepRule::Constant(spec.step.unwrap_or(0.1)),
        "rhbb" => StepRule::Rhbb,
        "rhbb-plus" => StepRule::RhbbPlus,
        other => return Err(format!("rule: unknown value `{other}`")),
    };
    let adaptor = match (spec.adaptor.as_deref().unwrap_or("constant"), &spec.adaptor_table) {
        ("constant", None) => Adaptor::ConstantOne,
        ("inverse-linear", None) => Adaptor::InverseLinear,
        ("table", Some(t)) => Adaptor::Table(t.clone()),
        ("table", None) => return Err("adaptor: `table` needs `adaptor_table`".into()),
        (_, Some(_)) => return Err("adaptor_table: only valid with adaptor = \"table\"".into()),
        (other, None) => return Err(format!("adaptor: unknown value `{other}`")),
    };
    let tau = spec.tau.unwrap_or(2.0);
    let distribution = match spec.distribution.as_deref().unwrap_or("uniform") {
        "uniform" => DistributionChoice::Uniform,
        "option1" => DistributionChoice::Option1 { tau },
        "option2" => DistributionChoice::Option2 { tau },
        other => return Err(format!("distribution: unknown value `{other}`")),
    };
    let hedge = HedgeConfig {
        alpha: spec.alpha.unwrap_or(3.0),
        adaptor,
        sigma1: spec.sigma1.unwrap_or(0.0),
        sigma2: spec.sigma2.unwrap_or(0.0),
        b1: spec.b1.unwrap_or(40),
        b2: spec.b2.unwrap_or(40),
    };
    let defaults = RunConfig::default();
    let config = RunConfig {
        engine,
        rule,
        epochs: spec.epochs.unwrap_or(defaults.epochs),
        inner: spec.inner,
        batch: spec.batch.unwrap_or(if matches!(engine, Engine::Svrg | Engine::SvrgBb) { 1 } else { 4 }),
        hedge,
        gamma: spec.gamma.unwrap_or(1.0),
        gamma2: spec.gamma2.unwrap_or(1.0),
        eta0: spec.eta0.clone().unwrap_or(defaults.eta0),
        seed: 0,
        eval_every: spec.eval_every,
        count_stepsize_passes: spec.count_stepsize_passes.unwrap_or(true),
    };
    config.validate(usize::MAX).map_err(|e| e.to_string())?;
    let label = spec.label.clone().unwrap_or_else(|| default_label(&config, distribution));
    if label.is_empty() || label.contains(|c: char| c == '/' || c == ',' || c.is_whitespace()) {
        return Err(format!("label: `{label}` must be non-empty without commas, slashes or spaces"));
    }
    Ok(PlannedRun { label, config, distribution, inner_only: spec.inner_only.unwrap_or(false) })
}

fn default_label(cfg: &RunConfig, distribution: DistributionChoice) -> String {
    let engine = cfg.engine.name();
    match cfg.rule {
        StepRule::Constant(eta) => format!("{engine}-const{eta}"),
        StepRule::Rhbb if cfg.hedge.alpha == 1.0 => format!("{engine}-rbb"),
        StepRule::Rhbb => format!("{engine}-rhbb{}", cfg.hedge.alpha),
        StepRule::RhbbPlus => {
            let q = match distribution {
                DistributionChoice::Uniform => "uniform".to_string(),
                DistributionChoice::Option1 { tau } => format!("opt1tau{tau}"),
                DistributionChoice::Option2 { tau } => format!("opt2tau{tau}"),
            };
            format!("{engine}-rhbbplus{}-{q}", cfg.hedge.alpha)
        }
    }
}

/// Named run families.
pub fn expand_preset(name: &str) -> Result<Vec<RunSpec>, ConfigError> {
    let base = RunSpec {
        batch: Some(4),
        b1: Some(40),
        b2: Some(40),
        gamma: Some(1.0),
        gamma2: Some(1.0),
        ..RunSpec::default()
    };
    match name {
        // RBB against hedged steps with α ∈ {2, 3, 4, 5}
        "sweep-mb-sarah" | "sweep-ms2gd" => {
            let engine = if name == "sweep-mb-sarah" { "mb-sarah" } else { "ms2gd" };
            let mut out = vec![RunSpec { engine: Some(engine.into()), alpha: Some(1.0), ..base.clone() }];
            for alpha in [2.0, 3.0, 4.0, 5.0] {
                out.push(RunSpec { engine: Some(engine.into()), alpha: Some(alpha), ..base.clone() });
            }
            Ok(out)
        }
        // adaptive against non-adaptive hedging at α = 4
        "adaptive" => Ok(vec![
            RunSpec { label: Some("non-adaptive".into()), alpha: Some(4.0), ..base.clone() },
            RunSpec {
                label: Some("adaptive".into()),
                alpha: Some(4.0),
                adaptor: Some("inverse-linear".into()),
                sigma1: Some(0.6),
                sigma2: Some(0.2),
                ..base
            },
        ]),
        other => Err(ConfigError::invalid(
            "preset",
            format!("unknown preset `{other}`; known: sweep-mb-sarah, sweep-ms2gd, adaptive"),
        )),
    }
}
