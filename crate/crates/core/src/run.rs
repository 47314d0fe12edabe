//! Bookkeeping shared by every searcher: evaluation budget, global
//! incumbent, anytime trace.

use serde::{Deserialize, Serialize};

use crate::objectives::{improves, ScoreVector};
use crate::structure::NucleotideSequence;
use crate::tuning::RunTrace;

/// Evaluations between two trace checkpoints.
pub const CHECKPOINT_INTERVAL: u64 = 100;

/// A strict improvement of the global incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub nevals: u64,
    pub score: ScoreVector,
}

/// Final state of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub best_sequence: NucleotideSequence,
    pub best_score: ScoreVector,
    pub nevals: u64,
    pub rng_seed: u64,
    pub budget: u64,
    /// Best BPD after `(c + 1) * CHECKPOINT_INTERVAL` evaluations. A solved
    /// run carries 0 forward to `budget / CHECKPOINT_INTERVAL` entries.
    pub trace: Vec<u32>,
    pub improvements: Vec<Improvement>,
}

impl SearchState {
    pub fn solved(&self) -> bool {
        self.best_score.is_solved()
    }

    pub fn run_trace(&self, run_id: u64) -> RunTrace {
        RunTrace::new(run_id, self.trace.clone())
    }
}

#[derive(Debug)]
pub(crate) struct Tracker {
    budget: u64,
    nevals: u64,
    best: Option<(NucleotideSequence, ScoreVector)>,
    trace: Vec<u32>,
    improvements: Vec<Improvement>,
}

impl Tracker {
    pub fn new(budget: u64) -> Self {
        Tracker {
            budget,
            nevals: 0,
            best: None,
            trace: Vec::new(),
            improvements: Vec::new(),
        }
    }

    pub fn nevals(&self) -> u64 {
        self.nevals
    }

    pub fn exhausted(&self) -> bool {
        self.nevals >= self.budget
    }

    pub fn solved(&self) -> bool {
        self.best.as_ref().is_some_and(|(_, s)| s.is_solved())
    }

    pub fn done(&self) -> bool {
        self.exhausted() || self.solved()
    }

    /// Account for one evaluation.
    pub fn record(&mut self, seq: &NucleotideSequence, score: ScoreVector) {
        self.nevals += 1;
        let better = match &self.best {
            None => true,
            Some((_, incumbent)) => improves(&score, incumbent),
        };
        if better {
            self.best = Some((seq.clone(), score));
            self.improvements.push(Improvement {
                nevals: self.nevals,
                score,
            });
        }
        if self.nevals.is_multiple_of(CHECKPOINT_INTERVAL) {
            let (_, best) = self.best.as_ref().expect("recorded above");
            self.trace.push(best.bpd);
        }
    }

    /// `None` when nothing was evaluated.
    pub fn finish(mut self, rng_seed: u64) -> Option<SearchState> {
        let (best_sequence, best_score) = self.best?;
        if best_score.is_solved() {
            let full = (self.budget / CHECKPOINT_INTERVAL) as usize;
            if self.trace.len() < full {
                self.trace.resize(full, 0);
            }
        }
        Some(SearchState {
            best_sequence,
            best_score,
            nevals: self.nevals,
            rng_seed,
            budget: self.budget,
            trace: self.trace,
            improvements: self.improvements,
        })
    }
}
