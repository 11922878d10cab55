//! Command-line front end: argument definitions, config-file merging and
//! the four commands. The binary only parses arguments and maps errors to
//! exit codes.

pub mod instance_file;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::encoding::{QubitLayout, ScenarioQubo};
use crate::error::Error;
use crate::model::InstanceSpec;
use crate::oracle::benchmark_report;
use crate::qaoa::{
    layer_sweep, optimize, EvalMode, InitStrategy, OptimizerKind, QaoaConfig, StochasticQaoa,
    DEFAULT_SHOTS,
};
pub use instance_file::{load_instance, parse_instance, render_instance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "recourse-qaoa",
    version,
    about = "Exact and QAOA solvers for the two-stage EV charging recourse problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact benchmarks: here-and-now, wait-and-see, expected value, EVPI, VSS.
    SolveExact {
        #[command(flatten)]
        io: IoArgs,
    },
    /// One seeded QAOA optimization run; writes the run result as JSON.
    SolveQaoa {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        qaoa: QaoaArgs,
        /// Circuit depth.
        #[arg(long)]
        layers: Option<usize>,
    },
    /// Seeded runs over several layer counts; writes one CSV row per run.
    Sweep {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        qaoa: QaoaArgs,
        /// Comma-separated layer counts.
        #[arg(long = "layers", value_delimiter = ',')]
        layer_list: Option<Vec<usize>>,
        /// Runs per layer count.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Human-readable dump of the qubit layout, QUBO or Ising model.
    Inspect {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        penalty: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// TOML file with command options; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct QaoaArgs {
    /// annealing-ramp, random or constant [default: annealing-ramp]
    #[arg(long)]
    pub init: Option<InitStrategy>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// nelder-mead, spsa or cobyla-style [default: nelder-mead]
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long, value_enum)]
    pub eval_mode: Option<EvalKind>,
    /// Shots per evaluation in sampled mode; implies sampled
    #[arg(long)]
    pub shots: Option<u64>,
    /// Objective evaluation budget [default: 2000]
    #[arg(long = "max-evals")]
    pub max_evaluations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Penalty weight on the balance constraint [default: 1]
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Record wall-clock time (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalKind {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Layout,
    Qubo,
    Ising,
}

/// Options accepted from `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub layers: Option<usize>,
    pub init: Option<InitStrategy>,
    pub gamma_max: Option<f64>,
    pub beta_max: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
    pub eval_mode: Option<EvalKind>,
    pub shots: Option<u64>,
    pub max_evaluations: Option<usize>,
    pub seed: Option<u64>,
    pub penalty: Option<f64>,
    pub record_timing: Option<bool>,
    pub sweep_layers: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub format: Option<Format>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::Invalid(_)
            | Error::Config(_)
            | Error::NonPositivePenalty(_)
            | Error::ParamLength { .. } => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_input(path: &Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<InstanceSpec> {
    parse_instance(&read_input(path, "instance")?).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = read_input(path, "config")?;
    toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message())))
}

/// Flags over config file over defaults.
pub fn merge_config(layers: Option<usize>, flags: &QaoaArgs, file: &ConfigFile) -> QaoaConfig {
    let d = QaoaConfig::default();
    let default_shots = match d.eval_mode {
        EvalMode::Sampled { shots } => shots,
        EvalMode::Exact => DEFAULT_SHOTS,
    };
    let shots = flags.shots.or(file.shots).unwrap_or(default_shots);
    let eval_mode = match flags.eval_mode.or(file.eval_mode) {
        Some(EvalKind::Sampled) => EvalMode::Sampled { shots },
        Some(EvalKind::Exact) => EvalMode::Exact,
        None if flags.shots.is_some() || file.shots.is_some() => EvalMode::Sampled { shots },
        None => d.eval_mode,
    };
    QaoaConfig {
        layers: layers.or(file.layers).unwrap_or(d.layers),
        init: flags.init.or(file.init).unwrap_or(d.init),
        gamma_max: flags.gamma_max.or(file.gamma_max).unwrap_or(d.gamma_max),
        beta_max: flags.beta_max.or(file.beta_max).unwrap_or(d.beta_max),
        optimizer: flags.optimizer.or(file.optimizer).unwrap_or(d.optimizer),
        eval_mode,
        max_evaluations: flags
            .max_evaluations
            .or(file.max_evaluations)
            .unwrap_or(d.max_evaluations),
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
        penalty: flags.penalty.or(file.penalty).unwrap_or(d.penalty),
        record_timing: flags.timing || file.record_timing.unwrap_or(d.record_timing),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Runs one command and returns what it would print.
pub fn execute(command: &Command) -> CliResult<String> {
    match command {
        Command::SolveExact { io } => {
            let inst = load(&io.instance)?;
            to_json(&benchmark_report(&inst)?)
        }
        Command::SolveQaoa { io, qaoa, layers } => {
            let inst = load(&io.instance)?;
            let cfg = merge_config(*layers, qaoa, &load_config(io.config.as_deref())?);
            cfg.validate()?;
            to_json(&optimize(&inst, &cfg)?)
        }
        Command::Sweep {
            io,
            qaoa,
            layer_list,
            runs,
            format,
        } => {
            let inst = load(&io.instance)?;
            let file = load_config(io.config.as_deref())?;
            let cfg = merge_config(None, qaoa, &file);
            let layers = layer_list
                .clone()
                .or(file.sweep_layers.clone())
                .unwrap_or_else(|| vec![cfg.layers]);
            let runs = runs.or(file.runs).unwrap_or(1);
            if layers.is_empty() || layers.contains(&0) || runs == 0 {
                return Err(CliError::usage(
                    "--layers needs positive entries and --runs must be at least 1",
                ));
            }
            cfg.validate()?;
            let table = layer_sweep(&inst, &layers, runs, &cfg)?;
            match format.or(file.format).unwrap_or(Format::Csv) {
                Format::Csv => Ok(table.to_csv_string()?),
                Format::Json => to_json(&table),
            }
        }
        Command::Inspect { io, what, penalty } => {
            let inst = load(&io.instance)?;
            let file = load_config(io.config.as_deref())?;
            let penalty = penalty
                .or(file.penalty)
                .unwrap_or(QaoaConfig::default().penalty);
            if *what == What::Layout {
                return Ok(format!("{}\n", QubitLayout::build(&inst)));
            }
            let compiled = StochasticQaoa::new(&inst, penalty)?;
            match what {
                What::Qubo => Ok(describe_qubo(compiled.qubo(), compiled.layout())),
                _ => to_json(&compiled.ising().to_json()),
            }
        }
    }
}

/// Runs `command`, writing to `--out` when given. Returns the text for
/// stdout (empty when written to a file).
pub fn run(command: &Command) -> CliResult<String> {
    let text = execute(command)?;
    let out = match command {
        Command::SolveExact { io }
        | Command::SolveQaoa { io, .. }
        | Command::Sweep { io, .. }
        | Command::Inspect { io, .. } => io.out.as_deref(),
    };
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError {
                code: EXIT_RUNTIME,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn describe_qubo(q: &ScenarioQubo, layout: &QubitLayout) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{layout}");
    let _ = writeln!(s, "penalty lambda = {}", q.penalty);
    let _ = writeln!(s, "constant: {}", q.constant());
    let _ = writeln!(s, "linear:");
    for i in 0..q.num_vars {
        let _ = writeln!(s, "  x{i}: {}", q.linear(i));
    }
    let _ = writeln!(s, "quadratic:");
    for (&(i, k), &c) in &q.quadratic {
        let _ = writeln!(s, "  x{i} x{k}: {c}");
    }
    let _ = writeln!(s, "scenario-linear:");
    for (&(t, i), &c) in &q.scenario_linear {
        let _ = writeln!(s, "  p{t} x{i}: {c}");
    }
    let _ = writeln!(
        s,
        "scenario-quadratic: {}",
        if q.scenario_quadratic.is_empty() {
            "none"
        } else {
            "present"
        }
    );
    for (&(t, i, k), &c) in &q.scenario_quadratic {
        let _ = writeln!(s, "  p{t} x{i} x{k}: {c}");
    }
    let _ = writeln!(s, "scenario offsets:");
    for t in 0..q.horizon {
        let _ = writeln!(
            s,
            "  p{t}: {}  p{t}^2: {}",
            q.offset_linear[t], q.offset_quadratic[t]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let file: ConfigFile =
            toml::from_str("layers = 3\nseed = 4\noptimizer = \"spsa\"\neval_mode = \"sampled\"")
                .unwrap();
        let cfg = merge_config(Some(5), &QaoaArgs::default(), &file);
        assert_eq!(cfg.layers, 5);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.optimizer, OptimizerKind::Spsa);
        assert_eq!(
            cfg.eval_mode,
            EvalMode::Sampled {
                shots: DEFAULT_SHOTS
            }
        );
    }

    #[test]
    fn shots_alone_select_sampling() {
        let flags = QaoaArgs {
            shots: Some(100),
            ..Default::default()
        };
        assert_eq!(
            merge_config(None, &flags, &ConfigFile::default()).eval_mode,
            EvalMode::Sampled { shots: 100 }
        );
        let exact = QaoaArgs {
            shots: Some(100),
            eval_mode: Some(EvalKind::Exact),
            ..Default::default()
        };
        assert_eq!(
            merge_config(None, &exact, &ConfigFile::default()).eval_mode,
            EvalMode::Exact
        );
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(toml::from_str::<ConfigFile>("layerz = 3").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Config("x".into())).code, EXIT_USAGE);
        assert_eq!(
            CliError::from(Error::NonFinite {
                value: f64::NAN,
                evaluation: 1
            })
            .code,
            EXIT_RUNTIME
        );
    }

    #[test]
    fn layout_description() {
        let text = describe_qubo(
            &crate::encoding::build_qubo(
                &InstanceSpec::reference(),
                &QubitLayout::build(&InstanceSpec::reference()),
                1.0,
            )
            .unwrap(),
            &QubitLayout::build(&InstanceSpec::reference()),
        );
        assert!(text.starts_with("8 qubits: j[0..1] buy[2..3] sell[4..5] p[6..7]\n"));
        assert!(text.contains("scenario-quadratic: none"));
    }
}
