//! Nested rollout policy adaptation for RNA design (MOGNRPALR).
//!
//! A playout walks the target's elements left to right and samples one
//! move per element: a pair choice for a pair, a base for an unpaired
//! position. Move probabilities are a softmax over policy weight plus a
//! fixed per-choice bias. Each level repeatedly calls the level below,
//! keeps its results sorted by score and adapts its own copy of the policy
//! toward the best one. A level returns as soon as the level below hands
//! back the level's current best move sequence a second time.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::folding::{EngineConfig, FoldError};
use crate::objectives::{compare, Evaluator, ScoreVector, DEFAULT_GC_TARGET};
use crate::run::{SearchState, Tracker};
use crate::structure::{Base, Element, NucleotideSequence, PairChoice, TargetStructure};

/// Choices per element in the move code space (pairs have six, bases four).
const CODES_PER_ELEMENT: usize = 6;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("evaluation budget exhausted")]
    BudgetExhausted { best: Box<LevelResult> },
    #[error("invalid search parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Pair(PairChoice),
    Base(Base),
}

impl Choice {
    fn index(self) -> usize {
        match self {
            Choice::Pair(p) => p.index(),
            Choice::Base(b) => b.index(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub element: usize,
    pub choice: Choice,
}

impl Move {
    /// Position-specific code: one weight per (element, choice).
    pub fn code(&self) -> usize {
        self.element * CODES_PER_ELEMENT + self.choice.index()
    }
}

/// Legal moves for element `element` of `target`.
pub fn legal_moves(target: &TargetStructure, element: usize) -> Vec<Move> {
    match target.elements()[element] {
        Element::Pair(..) => PairChoice::ALL
            .iter()
            .map(|&p| Move {
                element,
                choice: Choice::Pair(p),
            })
            .collect(),
        Element::Unpaired(_) => Base::ALL
            .iter()
            .map(|&b| Move {
                element,
                choice: Choice::Base(b),
            })
            .collect(),
    }
}

/// Playout weights. Codes that were never written read as 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Policy {
    weights: Vec<f64>,
}

impl Policy {
    pub fn new() -> Self {
        Policy::default()
    }

    pub fn weight(&self, code: usize) -> f64 {
        self.weights.get(code).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, code: usize, w: f64) {
        if code >= self.weights.len() {
            self.weights.resize(code + 1, 0.0);
        }
        self.weights[code] = w;
    }

    pub fn add(&mut self, code: usize, delta: f64) {
        let w = self.weight(code);
        self.set(code, w + delta);
    }
}

/// Per-choice prior added to the policy weight inside the softmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasTable {
    pub pair: [f64; 6],
    pub base: [f64; 4],
}

impl Default for BiasTable {
    /// 5.0 for GC, CG and A; 0.0 for every other pair and base.
    fn default() -> Self {
        let mut pair = [0.0; 6];
        pair[PairChoice::GC.index()] = 5.0;
        pair[PairChoice::CG.index()] = 5.0;
        let mut base = [0.0; 4];
        base[Base::A.index()] = 5.0;
        BiasTable { pair, base }
    }
}

impl BiasTable {
    pub fn zero() -> Self {
        BiasTable {
            pair: [0.0; 6],
            base: [0.0; 4],
        }
    }

    pub fn bias(&self, choice: Choice) -> f64 {
        match choice {
            Choice::Pair(p) => self.pair[p.index()],
            Choice::Base(b) => self.base[b.index()],
        }
    }
}

/// Softmax of `w + beta` over the legal moves of `element`, shifted by the
/// maximum logit.
pub fn move_probability(
    policy: &Policy,
    bias: &BiasTable,
    target: &TargetStructure,
    element: usize,
) -> Vec<(Move, f64)> {
    let moves = legal_moves(target, element);
    let logits: Vec<f64> = moves
        .iter()
        .map(|m| policy.weight(m.code()) + bias.bias(m.choice))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    moves
        .into_iter()
        .zip(exp)
        .map(|(m, o)| (m, o / z))
        .collect()
}

fn sample_move<R: Rng + ?Sized>(dist: &[(Move, f64)], rng: &mut R) -> Move {
    let mut u = rng.gen::<f64>();
    for &(m, p) in dist {
        if u < p {
            return m;
        }
        u -= p;
    }
    dist.last().expect("non-empty move list").0
}

/// Build the nucleotide sequence a complete move list describes.
pub fn moves_to_sequence(target: &TargetStructure, moves: &[Move]) -> NucleotideSequence {
    let mut seq = NucleotideSequence::new(vec![Base::A; target.len()]);
    for m in moves {
        match (target.elements()[m.element], m.choice) {
            (Element::Pair(i, j), Choice::Pair(p)) => seq.assign_pair(i, j, p),
            (Element::Unpaired(i), Choice::Base(b)) => seq.bases_mut()[i] = b,
            _ => panic!("move {m:?} does not fit element {}", m.element),
        }
    }
    seq
}

/// Sample a complete move list without evaluating it.
pub fn sample_moves<R: Rng + ?Sized>(
    policy: &Policy,
    bias: &BiasTable,
    target: &TargetStructure,
    rng: &mut R,
) -> Vec<Move> {
    (0..target.elements().len())
        .map(|e| sample_move(&move_probability(policy, bias, target, e), rng))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub scores: ScoreVector,
    pub moves: Vec<Move>,
    pub design: NucleotideSequence,
}

/// One biased playout, consuming exactly one evaluation.
pub fn playout<R: Rng + ?Sized>(
    policy: &Policy,
    bias: &BiasTable,
    evaluator: &mut Evaluator,
    rng: &mut R,
) -> Result<LevelResult, FoldError> {
    let target = evaluator.target().clone();
    let moves = sample_moves(policy, bias, &target, rng);
    let design = moves_to_sequence(&target, &moves);
    let scores = evaluator.evaluate(&design)?;
    Ok(LevelResult {
        scores,
        moves,
        design,
    })
}

/// New policy moved toward `sequence`: every legal move `m` at each step
/// shifts by `-alpha * (p_m - [m == chosen])`, with `p_m` taken from the
/// input policy.
pub fn adapt(
    policy: &Policy,
    sequence: &[Move],
    bias: &BiasTable,
    target: &TargetStructure,
    alpha: f64,
) -> Policy {
    let mut out = policy.clone();
    for chosen in sequence {
        for (m, p) in move_probability(policy, bias, target, chosen.element) {
            let delta = if m == *chosen { 1.0 } else { 0.0 };
            out.add(m.code(), -alpha * (p - delta));
        }
    }
    out
}

/// Decides whether a level adapts its policy after iteration `i`.
pub type AdaptGate = fn(level: usize, iteration: usize) -> bool;

/// `level > 2 or level < 3 and i > 3 or level == 1 and i > 3 and i % 4 == 0`
/// with the usual precedence of `and` over `or`.
#[allow(clippy::nonminimal_bool)]
pub fn stabilized_gate(level: usize, i: usize) -> bool {
    level > 2 || (level < 3 && i > 3) || (level == 1 && i > 3 && i.is_multiple_of(4))
}

/// Alternative reading of the same condition: level 2 waits four
/// iterations, level 1 additionally adapts only every fourth iteration.
pub fn tiered_gate(level: usize, i: usize) -> bool {
    level > 2 || (level == 2 && i > 3) || (level == 1 && i > 3 && i.is_multiple_of(4))
}

/// Plain NRPA: adapt after every iteration.
pub fn always_gate(_level: usize, _i: usize) -> bool {
    true
}

#[derive(Debug, Clone, Copy)]
pub struct MctsParams {
    pub level: usize,
    pub alpha: f64,
    pub bias: BiasTable,
    pub gate: AdaptGate,
    /// Longest per-level list of results kept.
    pub history_cap: usize,
    pub gc_target: f64,
}

impl Default for MctsParams {
    fn default() -> Self {
        MctsParams {
            level: 3,
            alpha: 1.0,
            bias: BiasTable::default(),
            gate: stabilized_gate,
            history_cap: 128,
            gc_target: DEFAULT_GC_TARGET,
        }
    }
}

impl MctsParams {
    pub fn validate(&self) -> Result<(), McError> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(McError::InvalidParameters(format!("alpha {}", self.alpha)));
        }
        if self.history_cap == 0 {
            return Err(McError::InvalidParameters(
                "history cap must be positive".into(),
            ));
        }
        let finite = self
            .bias
            .pair
            .iter()
            .chain(&self.bias.base)
            .all(|b| b.is_finite());
        if !finite {
            return Err(McError::InvalidParameters("biases must be finite".into()));
        }
        Ok(())
    }
}

/// Produces level-0 results. The default source samples a biased playout;
/// tests substitute deterministic stubs.
pub trait Rollout {
    fn rollout(&mut self, policy: &Policy, rng: &mut ChaCha8Rng) -> Result<LevelResult, FoldError>;
}

pub struct BiasedPlayout {
    evaluator: Evaluator,
    bias: BiasTable,
}

impl BiasedPlayout {
    pub fn new(evaluator: Evaluator, bias: BiasTable) -> Self {
        BiasedPlayout { evaluator, bias }
    }
}

impl Rollout for BiasedPlayout {
    fn rollout(&mut self, policy: &Policy, rng: &mut ChaCha8Rng) -> Result<LevelResult, FoldError> {
        playout(policy, &self.bias, &mut self.evaluator, rng)
    }
}

/// Nested search with a global evaluation budget and early exit on solve.
pub struct NestedSearch<R: Rollout> {
    rollout: R,
    target: TargetStructure,
    params: MctsParams,
    rng: ChaCha8Rng,
    tracker: Tracker,
}

impl<R: Rollout> NestedSearch<R> {
    pub fn new(
        rollout: R,
        target: TargetStructure,
        params: MctsParams,
        budget: u64,
        seed: u64,
    ) -> Self {
        NestedSearch {
            rollout,
            target,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            tracker: Tracker::new(budget),
        }
    }

    /// Playouts performed so far.
    pub fn playouts(&self) -> u64 {
        self.tracker.nevals()
    }

    pub fn solved(&self) -> bool {
        self.tracker.solved()
    }

    pub fn exhausted(&self) -> bool {
        self.tracker.exhausted()
    }

    pub fn done(&self) -> bool {
        self.tracker.done()
    }

    /// Run one search at `level` starting from a copy of `policy`. `None`
    /// only when the budget was already spent.
    pub fn level(
        &mut self,
        level: usize,
        policy: &Policy,
    ) -> Result<Option<LevelResult>, FoldError> {
        if level == 0 {
            if self.tracker.done() {
                return Ok(None);
            }
            let r = self.rollout.rollout(policy, &mut self.rng)?;
            self.tracker.record(&r.design, r.scores);
            return Ok(Some(r));
        }

        let mut policy = policy.clone();
        let mut best: Vec<LevelResult> = Vec::new();
        let mut i = 0usize;
        loop {
            if self.tracker.done() {
                return Ok(best.into_iter().next());
            }
            let Some(new) = self.level(level - 1, &policy)? else {
                return Ok(best.into_iter().next());
            };
            if best.first().is_some_and(|b| b.moves == new.moves) {
                return Ok(Some(new));
            }
            let pos =
                best.partition_point(|x| compare(&x.scores, &new.scores) != Ordering::Greater);
            best.insert(pos, new);
            best.truncate(self.params.history_cap);
            if (self.params.gate)(level, i) {
                policy = adapt(
                    &policy,
                    &best[0].moves,
                    &self.params.bias,
                    &self.target,
                    self.params.alpha,
                );
            }
            i += 1;
        }
    }

    pub fn finish(self, seed: u64) -> Option<SearchState> {
        self.tracker.finish(seed)
    }
}

/// One nested search at `level` from `policy`. Stopping on the budget
/// before the level terminates on its own is reported as
/// [`McError::BudgetExhausted`] carrying the level's best result.
#[allow(clippy::too_many_arguments)]
pub fn mognrpalr(
    level: usize,
    policy: &Policy,
    params: &MctsParams,
    target: &TargetStructure,
    cfg: &EngineConfig,
    budget: u64,
    seed: u64,
) -> Result<LevelResult, McError> {
    params.validate()?;
    let ev = Evaluator::from_config(cfg, target.clone(), params.gc_target)?;
    let mut search = NestedSearch::new(
        BiasedPlayout::new(ev, params.bias),
        target.clone(),
        *params,
        budget,
        seed,
    );
    match search.level(level, policy)? {
        None => Err(McError::InvalidParameters(
            "budget must be at least 1".into(),
        )),
        Some(r) if search.exhausted() && !search.solved() => {
            Err(McError::BudgetExhausted { best: Box::new(r) })
        }
        Some(r) => Ok(r),
    }
}

/// Full run: nested searches from a fresh zero policy, repeated until the
/// target is solved or the budget is spent.
pub fn solve(
    target: &TargetStructure,
    params: &MctsParams,
    cfg: &EngineConfig,
    budget: u64,
    seed: u64,
) -> Result<SearchState, McError> {
    params.validate()?;
    if params.level == 0 {
        return Err(McError::InvalidParameters(
            "level must be at least 1".into(),
        ));
    }
    if budget == 0 {
        return Err(McError::InvalidParameters(
            "budget must be at least 1".into(),
        ));
    }
    let ev = Evaluator::from_config(cfg, target.clone(), params.gc_target)?;
    solve_with(
        BiasedPlayout::new(ev, params.bias),
        target,
        params,
        budget,
        seed,
    )
}

pub fn solve_with<R: Rollout>(
    rollout: R,
    target: &TargetStructure,
    params: &MctsParams,
    budget: u64,
    seed: u64,
) -> Result<SearchState, McError> {
    let mut search = NestedSearch::new(rollout, target.clone(), *params, budget, seed);
    while !search.done() {
        search.level(params.level, &Policy::new())?;
    }
    Ok(search.finish(seed).expect("budget of at least one playout"))
}
