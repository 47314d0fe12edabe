//! Narrowing-profile enumeration and offline tuning by replaying recorded
//! MOGRLS runs.
//!
//! All counts here are in checkpoint units: one unit is
//! [`CHECKPOINT_INTERVAL`](crate::run::CHECKPOINT_INTERVAL) evaluations, so
//! a 270 000-evaluation run is 2700 units.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::run::CHECKPOINT_INTERVAL;

#[derive(Error, Debug)]
pub enum TuningError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("run {run_id} has {have} checkpoints, strategy needs {needed}")]
    InsufficientTraceLength {
        run_id: u64,
        needed: usize,
        have: usize,
    },
    #[error("strategy samples {needed} runs but the dataset has {have}")]
    TooFewTraces { needed: usize, have: usize },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("dataset line {line}: {message}")]
    Dataset { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anytime record of one run: `checkpoints[c]` is the best BPD after
/// `(c + 1) * 100` evaluations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: u64,
    pub checkpoints: Vec<u32>,
}

impl RunTrace {
    pub fn new(run_id: u64, checkpoints: Vec<u32>) -> Self {
        RunTrace {
            run_id,
            checkpoints,
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.checkpoints.windows(2).all(|w| w[0] >= w[1])
    }
}

/// A narrowing schedule replayed against recorded traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub thresholds: Vec<u64>,
    pub restart_budget: u64,
}

impl Strategy {
    pub fn new(thresholds: Vec<u64>) -> Self {
        let restart_budget = thresholds.iter().sum();
        Strategy {
            thresholds,
            restart_budget,
        }
    }

    pub fn validate(&self) -> Result<(), TuningError> {
        if self.thresholds.is_empty() {
            return Err(TuningError::InvalidStrategy("no thresholds".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(TuningError::InvalidStrategy(
                "thresholds must be non-decreasing".into(),
            ));
        }
        if self.thresholds.iter().sum::<u64>() != self.restart_budget {
            return Err(TuningError::InvalidStrategy(format!(
                "thresholds {:?} do not sum to {}",
                self.thresholds, self.restart_budget
            )));
        }
        Ok(())
    }

    /// Checkpoint index inspected at stage `i`.
    fn index(&self, i: usize) -> usize {
        self.thresholds[i].saturating_sub(1) as usize
    }
}

/// Every non-decreasing `k`-tuple over `possible` whose sum is `n`, in
/// lexicographic order.
///
/// The recursion charges `k * (p - previous)` per choice, which telescopes
/// to the plain sum of the tuple.
pub fn generate_profiles(n: u64, k: usize, possible: &[u64]) -> Vec<Vec<u64>> {
    let mut values = possible.to_vec();
    values.sort_unstable();
    values.dedup();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    search(n, k, 0, &mut current, &mut out, &values);
    out
}

fn search(
    n: u64,
    k: usize,
    s: u64,
    current: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
    possible: &[u64],
) {
    if k == 0 {
        if s == n {
            out.push(current.clone());
        }
        return;
    }
    if s > n {
        return;
    }
    let start = current.last().copied().unwrap_or(0);
    for &i in possible.iter().filter(|&&i| i >= start) {
        let si = s + k as u64 * (i - start);
        if si > n {
            // Larger values only add more.
            break;
        }
        current.push(i);
        search(n, k - 1, si, current, out, possible);
        current.pop();
    }
}

fn check_dataset(strategy: &Strategy, dataset: &[RunTrace]) -> Result<(), TuningError> {
    strategy.validate()?;
    if dataset.is_empty() {
        return Err(TuningError::EmptyDataset);
    }
    if dataset.len() < strategy.thresholds.len() {
        return Err(TuningError::TooFewTraces {
            needed: strategy.thresholds.len(),
            have: dataset.len(),
        });
    }
    let needed = strategy.index(strategy.thresholds.len() - 1) + 1;
    if let Some(t) = dataset.iter().find(|t| t.checkpoints.len() < needed) {
        return Err(TuningError::InsufficientTraceLength {
            run_id: t.run_id,
            needed,
            have: t.checkpoints.len(),
        });
    }
    Ok(())
}

/// One restart: narrow a sampled group of runs down to one survivor. A run
/// counts as solved if it records BPD 0 at the last checkpoint it is kept
/// alive for.
fn replay_restart<R: Rng + ?Sized>(strategy: &Strategy, dataset: &[RunTrace], rng: &mut R) -> bool {
    let k = strategy.thresholds.len();
    let mut alive: Vec<&RunTrace> = sample(rng, dataset.len(), k)
        .into_iter()
        .map(|i| &dataset[i])
        .collect();
    for stage in 0..k - 1 {
        let at = strategy.index(stage);
        // Worst BPD leaves; on ties the larger run id leaves.
        let (pos, worst) = alive
            .iter()
            .enumerate()
            .max_by_key(|(_, t)| (t.checkpoints[at], t.run_id))
            .map(|(p, t)| (p, t.checkpoints[at]))
            .expect("at least one live run");
        if worst == 0 {
            return true;
        }
        alive.remove(pos);
    }
    alive[0].checkpoints[strategy.index(k - 1)] == 0
}

/// Fraction of `samples` replays that solve, each replay allowing
/// `total_budget / restart_budget` restarts and stopping at the first solve.
pub fn replay_strategy<R: Rng + ?Sized>(
    strategy: &Strategy,
    dataset: &[RunTrace],
    total_budget: u64,
    samples: u64,
    rng: &mut R,
) -> Result<f64, TuningError> {
    check_dataset(strategy, dataset)?;
    if samples == 0 {
        return Err(TuningError::InvalidStrategy(
            "samples must be at least 1".into(),
        ));
    }
    let restarts = total_budget / strategy.restart_budget.max(1);
    if restarts == 0 {
        return Err(TuningError::InvalidStrategy(format!(
            "restart budget {} exceeds total budget {total_budget}",
            strategy.restart_budget
        )));
    }
    let mut solved = 0u64;
    for _ in 0..samples {
        if (0..restarts).any(|_| replay_restart(strategy, dataset, rng)) {
            solved += 1;
        }
    }
    Ok(solved as f64 / samples as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    /// Per-restart budgets to try.
    pub restart_options: Vec<u64>,
    pub max_slots: usize,
    pub possible: Vec<u64>,
    pub samples: u64,
    pub total_budget: u64,
    pub seed: u64,
}

impl TuneConfig {
    /// Restarts of 1350 and 2700 units against a 2700-unit run.
    pub fn reference(possible: Vec<u64>, max_slots: usize, samples: u64, seed: u64) -> Self {
        TuneConfig {
            restart_options: vec![1350, 2700],
            max_slots,
            possible,
            samples,
            total_budget: 2700,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub strategy: Strategy,
    pub solved_fraction: f64,
    pub candidates: usize,
}

/// Every candidate is replayed from the same seed, so strategies are
/// compared on identical sample draws. Ties keep the first candidate in
/// iteration order (restart option, then slot count, then profile order).
pub fn tune(dataset: &[RunTrace], cfg: &TuneConfig) -> Result<TuneOutcome, TuningError> {
    let mut candidates = Vec::new();
    for &restart in &cfg.restart_options {
        for slots in 1..=cfg.max_slots {
            candidates.extend(
                generate_profiles(restart, slots, &cfg.possible)
                    .into_iter()
                    .map(Strategy::new),
            );
        }
    }
    if candidates.is_empty() {
        return Err(TuningError::InvalidStrategy("no feasible profile".into()));
    }
    let scores = candidates
        .par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            replay_strategy(s, dataset, cfg.total_budget, cfg.samples, &mut rng)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (i, &score) in scores.iter().enumerate() {
        if score > scores[best] {
            best = i;
        }
    }
    Ok(TuneOutcome {
        solved_fraction: scores[best],
        strategy: candidates.swap_remove(best),
        candidates: scores.len(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    run_id: u64,
    checkpoint: u64,
    best_bpd: u32,
}

/// Write traces as `run_id,checkpoint,best_bpd`, `checkpoint` counted in
/// evaluations.
pub fn write_traces<W: Write>(writer: W, traces: &[RunTrace]) -> Result<(), TuningError> {
    let mut w = csv::Writer::from_writer(writer);
    for t in traces {
        for (c, &bpd) in t.checkpoints.iter().enumerate() {
            w.serialize(TraceRow {
                run_id: t.run_id,
                checkpoint: (c as u64 + 1) * CHECKPOINT_INTERVAL,
                best_bpd: bpd,
            })?;
        }
    }
    // An empty file still gets its header.
    if traces.iter().all(|t| t.checkpoints.is_empty()) {
        w.write_record(["run_id", "checkpoint", "best_bpd"])?;
    }
    w.flush()?;
    Ok(())
}

/// Read and validate traces: each run's checkpoints must be 100, 200, ...
/// without gaps, and its BPD must never increase.
pub fn read_traces<R: Read>(reader: R) -> Result<Vec<RunTrace>, TuningError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["run_id", "checkpoint", "best_bpd"] {
        return Err(TuningError::Dataset {
            line: 1,
            message: format!("expected header run_id,checkpoint,best_bpd, got {headers:?}"),
        });
    }
    let mut runs: BTreeMap<u64, Vec<(u64, u32, u64)>> = BTreeMap::new();
    for (idx, row) in r.deserialize().enumerate() {
        let row: TraceRow = row?;
        let line = idx as u64 + 2;
        runs.entry(row.run_id)
            .or_default()
            .push((row.checkpoint, row.best_bpd, line));
    }
    let mut out = Vec::with_capacity(runs.len());
    for (run_id, mut rows) in runs {
        rows.sort_by_key(|r| r.0);
        let mut checkpoints = Vec::with_capacity(rows.len());
        for (c, &(checkpoint, bpd, line)) in rows.iter().enumerate() {
            let expected = (c as u64 + 1) * CHECKPOINT_INTERVAL;
            if checkpoint != expected {
                return Err(TuningError::Dataset {
                    line,
                    message: format!("run {run_id}: checkpoint {checkpoint}, expected {expected}"),
                });
            }
            if checkpoints.last().is_some_and(|&prev| bpd > prev) {
                return Err(TuningError::Dataset {
                    line,
                    message: format!("run {run_id}: best_bpd increases at checkpoint {checkpoint}"),
                });
            }
            checkpoints.push(bpd);
        }
        out.push(RunTrace::new(run_id, checkpoints));
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<RunTrace>, TuningError> {
    read_traces(std::fs::File::open(path)?)
}
