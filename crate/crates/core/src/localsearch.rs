//! Greedy randomized local search over designs (MOGRLS) and Progressive
//! Narrowing.

use std::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::folding::{EngineConfig, FoldError};
use crate::objectives::{compare, improves, Evaluator, ScoreVector};
use crate::run::{SearchState, Tracker};
use crate::structure::{Base, Element, NucleotideSequence, PairChoice, TargetStructure};

/// Evaluations (per incumbent) during which only GC/CG flips are tried.
pub const GREEDY_PHASE: u64 = 500;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("invalid search parameters: {0}")]
    InvalidParameters(String),
}

/// All pairs GC or CG uniformly at random, all unpaired positions A.
pub fn initial_sequence<R: Rng + ?Sized>(
    target: &TargetStructure,
    rng: &mut R,
) -> NucleotideSequence {
    let mut seq = NucleotideSequence::new(vec![Base::A; target.len()]);
    for (i, j) in target.pairs() {
        seq.assign_pair(i, j, greedy_choice(rng));
    }
    seq
}

fn greedy_choice<R: Rng + ?Sized>(rng: &mut R) -> PairChoice {
    if rng.gen::<bool>() {
        PairChoice::GC
    } else {
        PairChoice::CG
    }
}

/// Redraw one pair as GC or CG. Targets without pairs fall back to
/// [`random_mutation`].
pub fn greedy_mutation<R: Rng + ?Sized>(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    rng: &mut R,
) -> NucleotideSequence {
    let pairs: Vec<(usize, usize)> = target.pairs().collect();
    if pairs.is_empty() {
        return random_mutation(seq, target, rng);
    }
    let (i, j) = pairs[rng.gen_range(0..pairs.len())];
    let mut out = seq.clone();
    out.assign_pair(i, j, greedy_choice(rng));
    out
}

/// Redraw one element: a pair uniformly over the six canonical pairs, an
/// unpaired position uniformly over the four bases.
pub fn random_mutation<R: Rng + ?Sized>(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    rng: &mut R,
) -> NucleotideSequence {
    let elements = target.elements();
    let mut out = seq.clone();
    match elements[rng.gen_range(0..elements.len())] {
        Element::Pair(i, j) => {
            out.assign_pair(
                i,
                j,
                PairChoice::ALL[rng.gen_range(0..PairChoice::ALL.len())],
            );
        }
        Element::Unpaired(i) => {
            out.bases_mut()[i] = Base::ALL[rng.gen_range(0..Base::ALL.len())];
        }
    }
    out
}

fn mutate<R: Rng + ?Sized>(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    evals_so_far: u64,
    rng: &mut R,
) -> NucleotideSequence {
    if evals_so_far < GREEDY_PHASE {
        greedy_mutation(seq, target, rng)
    } else {
        random_mutation(seq, target, rng)
    }
}

/// MOGRLS with a fresh engine built from `cfg`.
pub fn mogrls(
    target: &TargetStructure,
    budget: u64,
    rng_seed: u64,
    cfg: &EngineConfig,
    gc_target: f64,
) -> Result<SearchState, SearchError> {
    let mut ev = Evaluator::from_config(cfg, target.clone(), gc_target)?;
    mogrls_with(&mut ev, budget, rng_seed)
}

/// The initial sequence is the first evaluation. Each further evaluation
/// mutates the incumbent, which is replaced on strict improvement. Stops at
/// the budget or on the first solve.
pub fn mogrls_with(
    ev: &mut Evaluator,
    budget: u64,
    rng_seed: u64,
) -> Result<SearchState, SearchError> {
    if budget == 0 {
        return Err(SearchError::InvalidParameters(
            "budget must be at least 1".into(),
        ));
    }
    let target = ev.target().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut tracker = Tracker::new(budget);

    let mut best = initial_sequence(&target, &mut rng);
    let mut best_score = ev.evaluate(&best)?;
    tracker.record(&best, best_score);

    while !tracker.done() {
        let candidate = mutate(&best, &target, tracker.nevals(), &mut rng);
        let score = ev.evaluate(&candidate)?;
        tracker.record(&candidate, score);
        if improves(&score, &best_score) {
            best = candidate;
            best_score = score;
        }
    }
    Ok(tracker.finish(rng_seed).expect("at least one evaluation"))
}

/// Cumulative per-incumbent evaluation counts at which the worst live
/// incumbent is dropped; the last entry is where the survivor stops.
/// `thresholds.len()` incumbents start each restart and the restart costs
/// `sum(thresholds)` evaluations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrowingProfile {
    pub thresholds: Vec<u64>,
    pub restarts: u64,
}

impl NarrowingProfile {
    pub fn new(thresholds: Vec<u64>, restarts: u64) -> Result<Self, SearchError> {
        let p = NarrowingProfile {
            thresholds,
            restarts,
        };
        p.validate()?;
        Ok(p)
    }

    /// The best profile reported for a 270 000-evaluation budget.
    pub fn reference() -> Self {
        NarrowingProfile {
            thresholds: vec![10_000, 10_000, 10_000, 10_000, 230_000],
            restarts: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidParameters(m.into()));
        if self.thresholds.is_empty() {
            return bad("profile needs at least one threshold");
        }
        if self.thresholds[0] == 0 {
            return bad("thresholds must be at least 1");
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return bad("thresholds must be non-decreasing");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }

    pub fn per_restart_budget(&self) -> u64 {
        self.thresholds.iter().sum()
    }

    pub fn total_budget(&self) -> u64 {
        self.per_restart_budget() * self.restarts
    }
}

struct Slot {
    id: usize,
    seq: NucleotideSequence,
    score: ScoreVector,
    evals: u64,
}

/// Index into `live` of the worst incumbent; ties go to the larger slot id.
fn worst_slot(live: &[Slot]) -> usize {
    let mut worst = 0;
    for (k, s) in live.iter().enumerate().skip(1) {
        let w = &live[worst];
        match compare(&s.score, &w.score) {
            Ordering::Greater => worst = k,
            Ordering::Equal if s.id > w.id => worst = k,
            _ => {}
        }
    }
    worst
}

pub fn progressive_narrowing(
    target: &TargetStructure,
    profile: &NarrowingProfile,
    rng_seed: u64,
    cfg: &EngineConfig,
    gc_target: f64,
) -> Result<SearchState, SearchError> {
    let mut ev = Evaluator::from_config(cfg, target.clone(), gc_target)?;
    progressive_narrowing_with(&mut ev, profile, rng_seed)
}

/// Each restart seeds one incumbent per threshold and improves them round
/// robin. When the live incumbents reach the current threshold the worst is
/// dropped; the survivor runs to the last threshold.
pub fn progressive_narrowing_with(
    ev: &mut Evaluator,
    profile: &NarrowingProfile,
    rng_seed: u64,
) -> Result<SearchState, SearchError> {
    profile.validate()?;
    let target = ev.target().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut tracker = Tracker::new(profile.total_budget());
    let stages = profile.thresholds.len();

    'restarts: for _ in 0..profile.restarts {
        let mut live = Vec::with_capacity(stages);
        for id in 0..stages {
            let seq = initial_sequence(&target, &mut rng);
            let score = ev.evaluate(&seq)?;
            tracker.record(&seq, score);
            live.push(Slot {
                id,
                seq,
                score,
                evals: 1,
            });
            if tracker.solved() {
                break 'restarts;
            }
        }

        let mut stage = 0;
        loop {
            // Incumbents advance in lockstep, so one counter decides.
            while stage < stages && live[0].evals >= profile.thresholds[stage] {
                if stage + 1 < stages {
                    let w = worst_slot(&live);
                    live.remove(w);
                }
                stage += 1;
            }
            if stage == stages {
                break;
            }
            for slot in live.iter_mut() {
                let candidate = mutate(&slot.seq, &target, slot.evals, &mut rng);
                let score = ev.evaluate(&candidate)?;
                tracker.record(&candidate, score);
                slot.evals += 1;
                if improves(&score, &slot.score) {
                    slot.seq = candidate;
                    slot.score = score;
                }
                if tracker.solved() {
                    break 'restarts;
                }
            }
        }
    }
    Ok(tracker.finish(rng_seed).expect("at least one evaluation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn t(s: &str) -> TargetStructure {
        s.parse().unwrap()
    }

    #[test]
    fn initial_sequence_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = HashSet::new();
        for _ in 0..50 {
            seen.insert(initial_sequence(&t("(...)"), &mut rng).to_string());
        }
        let expected: HashSet<String> = ["GAAAC", "CAAAG"].iter().map(|s| s.to_string()).collect();
        assert_eq!(seen, expected);
        assert_eq!(initial_sequence(&t("..."), &mut rng).to_string(), "AAA");
        let s = initial_sequence(&t("()"), &mut rng).to_string();
        assert!(s == "GC" || s == "CG");
    }

    #[test]
    fn greedy_mutation_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = t("((...))");
        let start: NucleotideSequence = "GCAAAGC".parse().unwrap();
        for _ in 0..200 {
            let m = greedy_mutation(&start, &target, &mut rng);
            let diff: Vec<usize> = (0..7)
                .filter(|&k| m.bases()[k] != start.bases()[k])
                .collect();
            // Unchanged, or both ends of exactly one pair redrawn.
            assert!(
                diff.is_empty() || diff == vec![0, 6] || diff == vec![1, 5],
                "{diff:?}"
            );
            for k in 2..5 {
                assert_eq!(m.bases()[k], Base::A);
            }
        }
        let one: NucleotideSequence = "GAAAC".parse().unwrap();
        for _ in 0..20 {
            let m = greedy_mutation(&one, &t("(...)"), &mut rng).to_string();
            assert!(m == "GAAAC" || m == "CAAAG");
        }
    }

    #[test]
    fn greedy_mutation_without_pairs_falls_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start: NucleotideSequence = "AAAA".parse().unwrap();
        let mut changed = false;
        for _ in 0..50 {
            let m = greedy_mutation(&start, &t("...."), &mut rng);
            let diff = (0..4).filter(|&k| m.bases()[k] != Base::A).count();
            assert!(diff <= 1);
            changed |= diff == 1;
        }
        assert!(changed);
    }

    #[test]
    fn random_mutation_reaches_all_choices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = t("(...)");
        let start: NucleotideSequence = "GAAAC".parse().unwrap();
        let mut pairs = HashSet::new();
        let mut loops = HashSet::new();
        for _ in 0..2000 {
            let m = random_mutation(&start, &target, &mut rng);
            let diff: Vec<usize> = (0..5)
                .filter(|&k| m.bases()[k] != start.bases()[k])
                .collect();
            assert!(diff.len() <= 2);
            if diff.len() == 1 {
                loops.insert(m.bases()[diff[0]]);
            }
            pairs.insert((m.bases()[0], m.bases()[4]));
        }
        assert_eq!(pairs.len(), 6);
        assert_eq!(loops.len(), 3);
    }

    #[test]
    fn budget_of_one() {
        let s = mogrls(&t("(((...)))"), 1, 7, &EngineConfig::default(), 0.5).unwrap();
        assert_eq!(s.nevals, 1);
        assert!(s.trace.is_empty() || s.solved());
        assert_eq!(s.improvements.len(), 1);
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(mogrls(&t("(((...)))"), 0, 7, &EngineConfig::default(), 0.5).is_err());
    }

    #[test]
    fn minimal_profile() {
        let profile = NarrowingProfile::new(vec![1, 1], 1).unwrap();
        // A target the built-in engine cannot realize keeps both incumbents
        // unsolved, so exactly one evaluation each is spent.
        let s =
            progressive_narrowing(&t("((.))"), &profile, 3, &EngineConfig::default(), 0.5).unwrap();
        assert_eq!(s.nevals, 2);
    }

    #[test]
    fn profile_validation() {
        assert!(NarrowingProfile::new(vec![], 1).is_err());
        assert!(NarrowingProfile::new(vec![2, 1], 1).is_err());
        assert!(NarrowingProfile::new(vec![0, 1], 1).is_err());
        assert!(NarrowingProfile::new(vec![1], 0).is_err());
        assert_eq!(NarrowingProfile::reference().per_restart_budget(), 270_000);
    }

    #[test]
    fn worst_slot_tie_goes_to_larger_id() {
        let seq: NucleotideSequence = "A".parse().unwrap();
        let score = ScoreVector {
            bpd: 1,
            hamming: 0,
            neg_target_probability: 0.0,
            ensemble_energy_gap: 0.0,
            ensemble_defect: 0.0,
            gc_distance: 0.0,
        };
        let live: Vec<Slot> = (0..3)
            .map(|id| Slot {
                id,
                seq: seq.clone(),
                score,
                evals: 1,
            })
            .collect();
        assert_eq!(worst_slot(&live), 2);
        let mut live = live;
        live[0].score.bpd = 2;
        assert_eq!(worst_slot(&live), 0);
    }
}
