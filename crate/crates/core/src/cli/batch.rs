use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::folding::EngineConfig;
use crate::localsearch::{mogrls, progressive_narrowing, NarrowingProfile};
use crate::mcts::{solve, MctsParams};
use crate::objectives::ScoreVector;
use crate::run::SearchState;
use crate::tuning::{write_traces, RunTrace};

use super::problems::Problem;
use super::report::{build_report, write_report, BatchReport, RunFailure};
use super::CliError;

#[derive(Debug, Clone)]
pub enum Algorithm {
    Mogrls,
    Pn(NarrowingProfile),
    Mognrpalr(MctsParams),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mogrls => "mogrls",
            Algorithm::Pn(_) => "pn",
            Algorithm::Mognrpalr(_) => "mognrpalr",
        }
    }

    /// Evaluations one run may spend. Progressive Narrowing's budget is
    /// fixed by its profile.
    pub fn budget(&self, requested: u64) -> u64 {
        match self {
            Algorithm::Pn(p) => p.total_budget(),
            _ => requested,
        }
    }
}

/// Result record written as `run_<seed>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub problem_id: u64,
    pub algorithm: String,
    pub seed: u64,
    pub level: Option<usize>,
    pub nevals: u64,
    pub solved: bool,
    pub best_bpd: u32,
    pub best_sequence: String,
    pub score_vector: ScoreVector,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub state: SearchState,
}

impl RunOutput {
    pub fn trace(&self) -> RunTrace {
        self.state.run_trace(self.result.seed)
    }
}

/// One seeded run with its own engine instance.
pub fn run_single(
    problem: &Problem,
    algorithm: &Algorithm,
    budget: u64,
    seed: u64,
    engine: &EngineConfig,
    gc_target: f64,
) -> Result<RunOutput, String> {
    let target = &problem.target;
    let (state, level) = match algorithm {
        Algorithm::Mogrls => (
            mogrls(target, budget, seed, engine, gc_target).map_err(|e| e.to_string())?,
            None,
        ),
        Algorithm::Pn(profile) => (
            progressive_narrowing(target, profile, seed, engine, gc_target)
                .map_err(|e| e.to_string())?,
            None,
        ),
        Algorithm::Mognrpalr(params) => {
            let params = MctsParams {
                gc_target,
                ..*params
            };
            (
                solve(target, &params, engine, budget, seed).map_err(|e| e.to_string())?,
                Some(params.level),
            )
        }
    };
    let result = RunResult {
        problem_id: problem.id,
        algorithm: algorithm.name().to_string(),
        seed,
        level,
        nevals: state.nevals,
        solved: state.solved(),
        best_bpd: state.best_score.bpd,
        best_sequence: state.best_sequence.to_string(),
        score_vector: state.best_score,
    };
    Ok(RunOutput { result, state })
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub algorithm: Algorithm,
    pub runs: u64,
    pub budget: u64,
    pub base_seed: u64,
    pub parallelism: usize,
    pub engine: EngineConfig,
    pub gc_target: f64,
    pub out_dir: PathBuf,
}

/// `<out>/<problem_id>/<algorithm>`
pub fn run_dir(out: &Path, problem_id: u64, algorithm: &str) -> PathBuf {
    out.join(problem_id.to_string()).join(algorithm)
}

pub fn write_run_artifacts(dir: &Path, output: &RunOutput) -> Result<(), CliError> {
    let seed = output.result.seed;
    let json = serde_json::to_string_pretty(&output.result)?;
    fs::write(dir.join(format!("run_{seed}.json")), json + "\n")?;
    let file = fs::File::create(dir.join(format!("run_{seed}.trace.csv")))?;
    write_traces(file, &[output.trace()])?;
    Ok(())
}

fn is_run_artifact(name: &str) -> bool {
    name.starts_with("run_")
        && (name.ends_with(".json") || name.ends_with(".trace.csv") || name.ends_with(".error.txt"))
}

/// Seeds `base_seed .. base_seed + runs`, at most `parallelism` at a time.
/// A failed run is reported and left out of the histogram; the batch still
/// completes. Earlier run artifacts in the target directory are replaced.
pub fn run_batch(problem: &Problem, cfg: &BatchConfig) -> Result<BatchReport, CliError> {
    if cfg.runs == 0 {
        return Err(CliError::Config("runs must be at least 1".into()));
    }
    cfg.engine
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let dir = run_dir(&cfg.out_dir, problem.id, cfg.algorithm.name());
    fs::create_dir_all(&dir)?;
    for entry in fs::read_dir(&dir)? {
        let entry = entry?;
        if entry.file_name().to_str().is_some_and(is_run_artifact) {
            fs::remove_file(entry.path())?;
        }
    }

    let budget = cfg.algorithm.budget(cfg.budget);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let seeds: Vec<u64> = (0..cfg.runs).map(|k| cfg.base_seed + k).collect();
    let outputs: Vec<(u64, Result<RunOutput, String>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                (
                    seed,
                    run_single(
                        problem,
                        &cfg.algorithm,
                        budget,
                        seed,
                        &cfg.engine,
                        cfg.gc_target,
                    ),
                )
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (seed, out) in outputs {
        match out {
            Ok(out) => {
                write_run_artifacts(&dir, &out)?;
                traces.push(out.trace());
                results.push(out.result);
            }
            Err(error) => {
                fs::write(
                    dir.join(format!("run_{seed}.error.txt")),
                    format!("{error}\n"),
                )?;
                failures.push(RunFailure { seed, error });
            }
        }
    }
    let dataset = fs::File::create(dir.join("dataset.csv"))?;
    write_traces(dataset, &traces)?;

    let report = build_report(results, traces, failures);
    write_report(&dir, &report)?;
    Ok(report)
}
