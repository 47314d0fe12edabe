//! Command-line front end.
//!
//! Every flag can also come from a `key=value` file given with
//! `--config FILE`; flags on the command line win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::folding::{EngineConfig, EngineKind, FoldingEngine};
use crate::localsearch::NarrowingProfile;
use crate::mcts::{always_gate, stabilized_gate, tiered_gate, BiasTable, MctsParams};
use crate::structure::{Base, NucleotideSequence, PairChoice, TargetStructure};
use crate::tuning::{load_dataset, tune, TuneConfig};

use super::batch::{run_batch, run_dir, run_single, write_run_artifacts, Algorithm, BatchConfig};
use super::problems::{load_problems, Problem};
use super::report::{report, summary_text};
use super::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "montparnasse",
    version,
    about = "RNA design by local search and nested rollout policy adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fold one sequence and print the engine's metrics as JSON.
    Fold(FoldArgs),
    /// Run one seeded design run and print its result as JSON.
    Solve(SolveArgs),
    /// Run many seeded runs in parallel and write per-run artifacts and a report.
    Batch(BatchArgs),
    /// Search narrowing profiles against a recorded dataset.
    Tune(TuneArgs),
    /// Rebuild histogram, curve and summary from a batch directory.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineChoice {
    Builtin,
    External,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmChoice {
    Mogrls,
    Pn,
    Mognrpalr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateChoice {
    Stabilized,
    Tiered,
    Always,
}

#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    #[arg(long, value_enum, default_value = "builtin")]
    pub engine: EngineChoice,
    /// Command speaking the FOLD line protocol (falls back to MONTPARNASSE_EXTERNAL_CMD).
    #[arg(long)]
    pub external_cmd: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub min_hairpin: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kt: f64,
    /// Seconds to wait for each external reply.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            kind: match self.engine {
                EngineChoice::Builtin => EngineKind::Builtin,
                EngineChoice::External => EngineKind::External,
            },
            min_hairpin: self.min_hairpin,
            kt: self.kt,
            external_command: self.external_cmd.clone(),
            timeout_secs: self.timeout,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// Problem TSV (`id<TAB>name<TAB>structure`).
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long)]
    pub problem_id: Option<u64>,
    /// Dot-bracket target given inline instead of a problem file.
    #[arg(long, conflicts_with = "problems")]
    pub target: Option<String>,
}

impl TargetArgs {
    pub fn resolve(&self) -> Result<Problem, CliError> {
        if let Some(text) = &self.target {
            let id = self.problem_id.unwrap_or(0);
            let target = TargetStructure::parse(text)
                .map_err(|source| CliError::InvalidStructure { id, source })?;
            return Ok(Problem {
                id,
                name: "target".into(),
                target,
            });
        }
        let path = self.problems.as_ref().ok_or_else(|| {
            CliError::Config("give --target or --problems with --problem-id".into())
        })?;
        let id = self
            .problem_id
            .ok_or_else(|| CliError::Config("--problems needs --problem-id".into()))?;
        let set = load_problems(path)?;
        set.get(id)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("problem {id} not in {}", path.display())))
    }
}

#[derive(Args, Debug, Clone)]
pub struct AlgorithmArgs {
    #[arg(long, value_enum, default_value = "mognrpalr")]
    pub algorithm: AlgorithmChoice,
    /// Evaluations per run (Progressive Narrowing uses its profile instead).
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "stabilized")]
    pub gate: GateChoice,
    /// Bias overrides, e.g. `GC=5,CG=5,A=5,AU=0`.
    #[arg(long)]
    pub biases: Option<String>,
    /// Narrowing thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<u64>>,
    #[arg(long, default_value_t = 1)]
    pub restarts: u64,
    #[arg(long, default_value_t = 0.5)]
    pub gc_target: f64,
}

impl AlgorithmArgs {
    pub fn algorithm(&self) -> Result<Algorithm, CliError> {
        match self.algorithm {
            AlgorithmChoice::Mogrls => Ok(Algorithm::Mogrls),
            AlgorithmChoice::Pn => {
                let profile = match &self.profile {
                    Some(t) => NarrowingProfile::new(t.clone(), self.restarts),
                    None => Ok(NarrowingProfile::reference()),
                }
                .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Algorithm::Pn(profile))
            }
            AlgorithmChoice::Mognrpalr => {
                if self.level == 0 {
                    return Err(CliError::Config("level must be at least 1".into()));
                }
                let bias = match &self.biases {
                    Some(spec) => parse_biases(spec)?,
                    None => BiasTable::default(),
                };
                let params = MctsParams {
                    level: self.level,
                    alpha: self.alpha,
                    bias,
                    gate: match self.gate {
                        GateChoice::Stabilized => stabilized_gate,
                        GateChoice::Tiered => tiered_gate,
                        GateChoice::Always => always_gate,
                    },
                    gc_target: self.gc_target,
                    ..MctsParams::default()
                };
                params
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Algorithm::Mognrpalr(params))
            }
        }
    }

    fn check(&self) -> Result<(), CliError> {
        if self.budget == 0 {
            return Err(CliError::Config("budget must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gc_target) {
            return Err(CliError::Config("gc-target must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// `KEY=VALUE` list over pair names (GC, CG, AU, UA, UG, GU) and bases.
pub fn parse_biases(spec: &str) -> Result<BiasTable, CliError> {
    let mut bias = BiasTable::default();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("bias {item:?} is not KEY=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bias {item:?} has a bad value")))?;
        let key = key.trim().to_ascii_uppercase();
        let pair = PairChoice::ALL.iter().find(|p| format!("{p:?}") == key);
        match (pair, key.chars().next().and_then(Base::from_char)) {
            (Some(p), _) => bias.pair[p.index()] = value,
            (None, Some(b)) if key.len() == 1 => bias.base[b.index()] = value,
            _ => return Err(CliError::Config(format!("unknown bias key {key:?}"))),
        }
    }
    Ok(bias)
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct FoldArgs {
    #[arg(long)]
    pub sequence: String,
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub algorithm: AlgorithmArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write `run_<seed>.json` and its trace under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct BatchArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub algorithm: AlgorithmArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value_t = 200)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TuneArgs {
    /// Trace CSV (`run_id,checkpoint,best_bpd`).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Per-restart budgets in checkpoint units (100 evaluations each).
    #[arg(long, value_delimiter = ',', default_value = "1350,2700")]
    pub restart_options: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    pub max_slots: usize,
    /// Allowed threshold values in checkpoint units.
    #[arg(long, value_delimiter = ',', required = true)]
    pub possible: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Whole-run budget in checkpoint units.
    #[arg(long, default_value_t = 2700)]
    pub total_budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ReportArgs {
    #[arg(long)]
    pub dir: PathBuf,
}

/// `key=value` lines, `#` comments. Keys use flag names with `-` or `_`.
pub fn config_file_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
            line: idx + 1,
            message: format!("expected key=value, got {line:?}"),
        })?;
        out.push(format!("--{}", key.trim().replace('_', "-")));
        out.push(value.trim().to_string());
    }
    Ok(out)
}

/// Splice `--config FILE` contents in right after the subcommand so that
/// later command-line flags override them.
pub fn expand_config(mut args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut k = 1;
    while k < args.len() {
        if args[k] == "--config" {
            if k + 1 >= args.len() {
                return Err(CliError::Config("--config needs a file".into()));
            }
            path = Some(args.remove(k + 1));
            args.remove(k);
        } else if let Some(p) = args[k].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(k);
        } else {
            k += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
    let injected = config_file_args(&text)?;
    let at = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
        .ok_or_else(|| CliError::Config("no subcommand given".into()))?;
    args.splice(at..at, injected);
    Ok(args)
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fold(a) => fold_cmd(&a),
        Command::Solve(a) => solve_cmd(&a),
        Command::Batch(a) => batch_cmd(&a),
        Command::Tune(a) => tune_cmd(&a),
        Command::Report(a) => {
            let r = report(&a.dir)?;
            print!("{}", summary_text(&r));
            Ok(())
        }
    }
}

fn fold_cmd(a: &FoldArgs) -> Result<(), CliError> {
    let seq: NucleotideSequence = a
        .sequence
        .parse()
        .map_err(|e| CliError::Config(format!("sequence: {e}")))?;
    let target = TargetStructure::parse(&a.target)
        .map_err(|source| CliError::InvalidStructure { id: 0, source })?;
    let cfg = a.engine.config();
    let mut engine = cfg.build().map_err(|e| CliError::Config(e.to_string()))?;
    let result = engine
        .fold(&seq, &target)
        .map_err(|e| CliError::Run(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn solve_cmd(a: &SolveArgs) -> Result<(), CliError> {
    a.algorithm.check()?;
    let problem = a.target.resolve()?;
    let algorithm = a.algorithm.algorithm()?;
    let engine = a.engine.config();
    engine
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let budget = algorithm.budget(a.algorithm.budget);
    let out = run_single(
        &problem,
        &algorithm,
        budget,
        a.seed,
        &engine,
        a.algorithm.gc_target,
    )
    .map_err(CliError::Run)?;
    if let Some(dir) = &a.out {
        let dir = run_dir(dir, problem.id, algorithm.name());
        std::fs::create_dir_all(&dir)?;
        write_run_artifacts(&dir, &out)?;
    }
    println!("{}", serde_json::to_string_pretty(&out.result)?);
    Ok(())
}

fn batch_cmd(a: &BatchArgs) -> Result<(), CliError> {
    a.algorithm.check()?;
    let problem = a.target.resolve()?;
    let cfg = BatchConfig {
        algorithm: a.algorithm.algorithm()?,
        runs: a.runs,
        budget: a.algorithm.budget,
        base_seed: a.base_seed,
        parallelism: a.parallelism,
        engine: a.engine.config(),
        gc_target: a.algorithm.gc_target,
        out_dir: a.out.clone(),
    };
    let report = run_batch(&problem, &cfg)?;
    print!("{}", summary_text(&report));
    Ok(())
}

fn tune_cmd(a: &TuneArgs) -> Result<(), CliError> {
    let dataset = load_dataset(Path::new(&a.dataset))?;
    let cfg = TuneConfig {
        restart_options: a.restart_options.clone(),
        max_slots: a.max_slots,
        possible: a.possible.clone(),
        samples: a.samples,
        total_budget: a.total_budget,
        seed: a.seed,
    };
    let outcome = tune(&dataset, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(())
}
