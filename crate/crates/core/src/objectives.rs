//! The six-objective score of a design and its lexicographic order.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::folding::{EngineConfig, FoldError, FoldResult, FoldingEngine};
use crate::structure::{base_pair_distance, hamming_distance, NucleotideSequence, TargetStructure};

pub const DEFAULT_GC_TARGET: f64 = 0.5;

/// Objectives in comparison order, all minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub bpd: u32,
    pub hamming: u32,
    pub neg_target_probability: f64,
    /// E(target) - G(ensemble) = -kT ln p(target); zero when the ensemble
    /// is the target alone, infinite when the target cannot form.
    #[serde(with = "non_finite")]
    pub ensemble_energy_gap: f64,
    pub ensemble_defect: f64,
    pub gc_distance: f64,
}

impl ScoreVector {
    pub const CSV_HEADER: &'static str =
        "bpd,hamming,neg_target_probability,ensemble_energy_gap,ensemble_defect,gc_distance";

    pub fn is_solved(&self) -> bool {
        self.bpd == 0
    }

    pub fn to_csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.bpd,
            self.hamming,
            self.neg_target_probability,
            self.ensemble_energy_gap,
            self.ensemble_defect,
            self.gc_distance
        )
    }
}

/// Lexicographic order over the six fields; `Less` means `a` is better.
pub fn compare(a: &ScoreVector, b: &ScoreVector) -> Ordering {
    a.bpd
        .cmp(&b.bpd)
        .then(a.hamming.cmp(&b.hamming))
        .then(
            a.neg_target_probability
                .total_cmp(&b.neg_target_probability),
        )
        .then(a.ensemble_energy_gap.total_cmp(&b.ensemble_energy_gap))
        .then(a.ensemble_defect.total_cmp(&b.ensemble_defect))
        .then(a.gc_distance.total_cmp(&b.gc_distance))
}

/// Incumbent update rule shared by every searcher: strict improvement only.
pub fn improves(candidate: &ScoreVector, incumbent: &ScoreVector) -> bool {
    compare(candidate, incumbent) == Ordering::Less
}

/// Score an already computed fold.
pub fn score_fold(
    fold: &FoldResult,
    seq: &NucleotideSequence,
    target: &TargetStructure,
    kt: f64,
    gc_target: f64,
) -> Result<ScoreVector, FoldError> {
    let bpd = base_pair_distance(&fold.mfe_structure, target.dotbracket())?;
    let hamming = hamming_distance(&fold.mfe_structure, target.dotbracket())?;
    // 0.0 - p keeps p = 0 at +0.0 so that total_cmp sees a single zero.
    let neg_target_probability = 0.0 - fold.target_probability;
    let ensemble_energy_gap = if fold.target_log_probability == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (0.0 - kt * fold.target_log_probability).max(0.0)
    };
    Ok(ScoreVector {
        bpd: bpd as u32,
        hamming: hamming as u32,
        neg_target_probability,
        ensemble_energy_gap,
        ensemble_defect: fold.ensemble_defect,
        gc_distance: (seq.gc_fraction() - gc_target).abs(),
    })
}

/// One-shot evaluation with a freshly built engine.
pub fn evaluate(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    cfg: &EngineConfig,
    gc_target: f64,
) -> Result<ScoreVector, FoldError> {
    let mut ev = Evaluator::new(cfg.build()?, target.clone(), gc_target);
    ev.evaluate(seq)
}

/// Per-run evaluator bound to one target, memoizing fold results by
/// sequence.
pub struct Evaluator {
    engine: Box<dyn FoldingEngine>,
    target: TargetStructure,
    gc_target: f64,
    memo: HashMap<NucleotideSequence, ScoreVector>,
    requests: u64,
}

impl Evaluator {
    pub fn new(engine: Box<dyn FoldingEngine>, target: TargetStructure, gc_target: f64) -> Self {
        Evaluator {
            engine,
            target,
            gc_target,
            memo: HashMap::new(),
            requests: 0,
        }
    }

    pub fn from_config(
        cfg: &EngineConfig,
        target: TargetStructure,
        gc_target: f64,
    ) -> Result<Self, FoldError> {
        Ok(Evaluator::new(cfg.build()?, target, gc_target))
    }

    pub fn target(&self) -> &TargetStructure {
        &self.target
    }

    pub fn evaluate(&mut self, seq: &NucleotideSequence) -> Result<ScoreVector, FoldError> {
        if seq.len() != self.target.len() {
            return Err(FoldError::LengthMismatch(seq.len(), self.target.len()));
        }
        self.requests += 1;
        if let Some(score) = self.memo.get(seq) {
            return Ok(*score);
        }
        let fold = self.engine.fold(seq, &self.target)?;
        let score = score_fold(&fold, seq, &self.target, self.engine.kt(), self.gc_target)?;
        self.memo.insert(seq.clone(), score);
        Ok(score)
    }

    /// Evaluation requests served so far, memo hits included.
    pub fn requests(&self) -> u64 {
        self.requests
    }

    /// Requests that reached the engine.
    pub fn engine_calls(&self) -> u64 {
        self.memo.len() as u64
    }
}

/// JSON has no infinities; encode them as `null` and read `null` back as
/// +inf.
mod non_finite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(bpd: u32, hamming: u32, rest: [f64; 4]) -> ScoreVector {
        ScoreVector {
            bpd,
            hamming,
            neg_target_probability: rest[0],
            ensemble_energy_gap: rest[1],
            ensemble_defect: rest[2],
            gc_distance: rest[3],
        }
    }

    #[test]
    fn solved_hairpin() {
        let t: TargetStructure = "(((...)))".parse().unwrap();
        let s = evaluate(
            &"GGGAAACCC".parse().unwrap(),
            &t,
            &EngineConfig::default(),
            0.5,
        )
        .unwrap();
        assert_eq!(s.bpd, 0);
        assert_eq!(s.hamming, 0);
        assert!(s.is_solved());
        assert!((s.neg_target_probability + 0.179_252_601_644_254_8).abs() < 1e-12);
    }

    #[test]
    fn open_fold_against_hairpin() {
        let t: TargetStructure = "(((...)))".parse().unwrap();
        let s = evaluate(
            &"AAAAAAAAA".parse().unwrap(),
            &t,
            &EngineConfig::default(),
            0.5,
        )
        .unwrap();
        assert_eq!(s.bpd, 3);
        assert_eq!(s.hamming, 6);
        assert_eq!(s.neg_target_probability, 0.0);
        assert_eq!(s.ensemble_energy_gap, f64::INFINITY);
    }

    #[test]
    fn gc_distance() {
        let t: TargetStructure = "....".parse().unwrap();
        let s = evaluate(&"GGCC".parse().unwrap(), &t, &EngineConfig::default(), 0.5).unwrap();
        assert_eq!(s.gc_distance, 0.5);
    }

    #[test]
    fn compare_examples() {
        let a = sv(1, 9, [0.0, 5.0, 5.0, 1.0]);
        let b = sv(2, 0, [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(compare(&a, &b), Ordering::Less);
        let c = sv(2, 1, [0.0; 4]);
        let d = sv(2, 3, [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(compare(&c, &d), Ordering::Less);
        assert_eq!(compare(&c, &c), Ordering::Equal);
        assert!(!improves(&c, &c));
        assert!(improves(&c, &d));
    }

    #[test]
    fn gap_matches_energy_difference() {
        // GAAAC: Z = 1 + e, target (...) has E = -1, so the gap is ln(1 + e) - 1.
        let t: TargetStructure = "(...)".parse().unwrap();
        let s = evaluate(&"GAAAC".parse().unwrap(), &t, &EngineConfig::default(), 0.5).unwrap();
        let expected = (1.0 + std::f64::consts::E).ln() - 1.0;
        assert!((s.ensemble_energy_gap - expected).abs() < 1e-12);
    }

    #[test]
    fn json_infinite_gap_roundtrip() {
        let s = sv(3, 6, [0.0, f64::INFINITY, 9.0, 0.5]);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"ensemble_energy_gap\":null"));
        let back: ScoreVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn memo_counts_every_request() {
        let t: TargetStructure = "(((...)))".parse().unwrap();
        let mut ev = Evaluator::from_config(&EngineConfig::default(), t, 0.5).unwrap();
        let s = "GGGAAACCC".parse().unwrap();
        let first = ev.evaluate(&s).unwrap();
        let second = ev.evaluate(&s).unwrap();
        assert_eq!(first, second);
        assert_eq!(ev.requests(), 2);
        assert_eq!(ev.engine_calls(), 1);
    }

    fn vector() -> impl Strategy<Value = ScoreVector> {
        (0u32..4, 0u32..4, 0usize..3, 0usize..3, 0usize..3, 0usize..3).prop_map(
            |(b, h, p, g, d, c)| {
                let p = [-1.0, -0.5, 0.0][p];
                let g = [0.0, 1.5, f64::INFINITY][g];
                sv(b, h, [p, g, d as f64, c as f64 * 0.25])
            },
        )
    }

    proptest! {
        #[test]
        fn compare_is_total_order(a in vector(), b in vector(), c in vector()) {
            prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
            if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare(&a, &c), Ordering::Greater);
            }
            prop_assert_eq!(compare(&a, &b) == Ordering::Equal, a == b);
        }

        #[test]
        fn later_fields_cannot_flip_earlier_decision(a in vector(), b in vector(), scale in 0.0f64..100.0) {
            let decided_by_bpd = a.bpd != b.bpd;
            let before = compare(&a, &b);
            let mut a2 = a;
            a2.hamming = a.hamming * 7 + 3;
            a2.neg_target_probability *= scale;
            a2.ensemble_defect *= scale;
            a2.gc_distance *= scale;
            if decided_by_bpd {
                prop_assert_eq!(compare(&a2, &b), before);
            }
        }
    }
}
