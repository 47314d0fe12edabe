use crate::structure::{
    is_valid_pair, render_pair_table, Base, NucleotideSequence, TargetStructure,
};

use super::{FoldError, FoldResult, FoldingEngine};

/// Symmetric base-pair probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProbabilities {
    n: usize,
    p: Vec<f64>,
}

impl PairProbabilities {
    fn new(n: usize) -> Self {
        PairProbabilities {
            n,
            p: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.p[a * self.n + b]
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.p[i * self.n + j] += v;
    }

    /// Probability that `i` is paired with anything.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.get(i, j))
            .sum()
    }

    /// Nonzero entries `(i, j, p)` with `i < j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| {
                let v = self.p[i * self.n + j];
                (v > 0.0).then_some((i, j, v))
            })
        })
    }
}

/// Pair-counting engine: E(S) = -(number of pairs), canonical pairs only,
/// every hairpin encloses at least `min_hairpin` positions.
#[derive(Debug, Clone)]
pub struct BuiltinEngine {
    min_hairpin: usize,
    kt: f64,
}

/// Segment tables indexed by half-open `[i, j)`, `0 <= i <= j <= n`.
struct Tables {
    n: usize,
    data: Vec<f64>,
}

impl Tables {
    fn new(n: usize, init: f64) -> Self {
        Tables {
            n,
            data: vec![init; (n + 1) * (n + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.n + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * (self.n + 1) + j]
    }
}

impl BuiltinEngine {
    pub fn new(min_hairpin: usize, kt: f64) -> Self {
        BuiltinEngine { min_hairpin, kt }
    }

    pub fn min_hairpin(&self) -> usize {
        self.min_hairpin
    }

    fn can_pair(&self, seq: &[Base], i: usize, k: usize) -> bool {
        k > i + self.min_hairpin && is_valid_pair(seq[i], seq[k])
    }

    /// True iff every pair of `target` is canonical on `seq` and respects
    /// the hairpin minimum.
    pub fn admits(&self, seq: &NucleotideSequence, target: &TargetStructure) -> bool {
        target
            .pairs()
            .all(|(i, j)| self.can_pair(seq.bases(), i, j))
    }

    /// Maximum pair count with the deterministic backtrace: the smallest
    /// opening index pairs first, with the smallest closing index that still
    /// reaches the optimum.
    pub fn mfe(&self, seq: &NucleotideSequence) -> (String, usize) {
        let s = seq.bases();
        let n = s.len();
        let mut best = vec![0u32; (n + 1) * (n + 1)];
        let idx = |i: usize, j: usize| i * (n + 1) + j;
        for len in 1..=n {
            for i in 0..=(n - len) {
                let j = i + len;
                let mut v = best[idx(i + 1, j)];
                for k in (i + self.min_hairpin + 1)..j {
                    if is_valid_pair(s[i], s[k]) {
                        v = v.max(1 + best[idx(i + 1, k)] + best[idx(k + 1, j)]);
                    }
                }
                best[idx(i, j)] = v;
            }
        }

        let mut table = vec![None; n];
        let mut stack = vec![(0usize, n)];
        while let Some((i, j)) = stack.pop() {
            if i >= j || best[idx(i, j)] == 0 {
                continue;
            }
            let target = best[idx(i, j)];
            let partner = ((i + self.min_hairpin + 1)..j).find(|&k| {
                is_valid_pair(s[i], s[k]) && 1 + best[idx(i + 1, k)] + best[idx(k + 1, j)] == target
            });
            match partner {
                Some(k) => {
                    table[i] = Some(k);
                    table[k] = Some(i);
                    stack.push((k + 1, j));
                    stack.push((i + 1, k));
                }
                None => stack.push((i + 1, j)),
            }
        }
        (render_pair_table(&table), best[idx(0, n)] as usize)
    }

    /// Scaled inside table. Each position carries a factor `e^{-1/(2kT)}`,
    /// so a pair's weight `e^{1/kT}` becomes 1 and values stay bounded.
    fn inside(&self, s: &[Base]) -> (Tables, f64) {
        let n = s.len();
        let unpaired = (-0.5 / self.kt).exp();
        let mut q = Tables::new(n, 1.0);
        for len in 1..=n {
            for i in 0..=(n - len) {
                let j = i + len;
                let mut v = unpaired * q.at(i + 1, j);
                for k in (i + self.min_hairpin + 1)..j {
                    if is_valid_pair(s[i], s[k]) {
                        v += q.at(i + 1, k) * q.at(k + 1, j);
                    }
                }
                *q.at_mut(i, j) = v;
            }
        }
        (q, unpaired)
    }

    /// ln Z, exact for the built-in model.
    pub fn log_partition_function(&self, seq: &NucleotideSequence) -> f64 {
        let (q, _) = self.inside(seq.bases());
        let n = seq.len();
        q.at(0, n).ln() + n as f64 * 0.5 / self.kt
    }

    /// Base-pair probabilities by reverse-mode differentiation of the inside
    /// recursion (outside pass, longest segments first).
    pub fn pair_probabilities(&self, seq: &NucleotideSequence) -> (PairProbabilities, f64) {
        let s = seq.bases();
        let n = s.len();
        let (q, unpaired) = self.inside(s);
        let total = q.at(0, n);
        let mut outside = Tables::new(n, 0.0);
        *outside.at_mut(0, n) = 1.0;
        let mut probs = PairProbabilities::new(n);
        for len in (1..=n).rev() {
            for i in 0..=(n - len) {
                let j = i + len;
                let a = outside.at(i, j);
                if a == 0.0 {
                    continue;
                }
                *outside.at_mut(i + 1, j) += a * unpaired;
                for k in (i + self.min_hairpin + 1)..j {
                    if is_valid_pair(s[i], s[k]) {
                        let inner = q.at(i + 1, k);
                        let right = q.at(k + 1, j);
                        *outside.at_mut(i + 1, k) += a * right;
                        *outside.at_mut(k + 1, j) += a * inner;
                        probs.add(i, k, a * inner * right / total);
                    }
                }
            }
        }
        let log_z = total.ln() + n as f64 * 0.5 / self.kt;
        (probs, log_z)
    }
}

impl FoldingEngine for BuiltinEngine {
    fn fold(
        &mut self,
        seq: &NucleotideSequence,
        target: &TargetStructure,
    ) -> Result<FoldResult, FoldError> {
        let n = seq.len();
        if n != target.len() {
            return Err(FoldError::LengthMismatch(n, target.len()));
        }
        let (mfe_structure, mfe_pairs) = self.mfe(seq);
        let (probs, log_z) = self.pair_probabilities(seq);

        let target_log_probability = if self.admits(seq, target) {
            target.pair_count() as f64 / self.kt - log_z
        } else {
            f64::NEG_INFINITY
        };

        let table = target.pair_table();
        let mut correct = 0.0;
        for (i, partner) in table.iter().enumerate() {
            correct += match *partner {
                Some(j) => probs.get(i, j),
                None => 1.0 - probs.row_sum(i),
            };
        }
        let ensemble_defect = (n as f64 - correct).clamp(0.0, n as f64);

        Ok(FoldResult {
            mfe_structure,
            mfe_energy: -(mfe_pairs as f64),
            ensemble_free_energy: -self.kt * log_z,
            target_probability: target_log_probability.exp().min(1.0),
            target_log_probability,
            ensemble_defect,
            pair_probabilities: Some(probs),
        })
    }

    fn kt(&self) -> f64 {
        self.kt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> NucleotideSequence {
        s.parse().unwrap()
    }

    fn target(s: &str) -> TargetStructure {
        s.parse().unwrap()
    }

    #[test]
    fn hairpin_mfe() {
        let mut e = BuiltinEngine::new(3, 1.0);
        let r = e.fold(&seq("GGGAAACCC"), &target("(((...)))")).unwrap();
        assert_eq!(r.mfe_structure, "(((...)))");
        assert_eq!(r.mfe_energy, -3.0);
    }

    #[test]
    fn unpairable_sequence() {
        let mut e = BuiltinEngine::new(3, 1.0);
        let r = e.fold(&seq("AAAAAAA"), &target(".......")).unwrap();
        assert_eq!(r.mfe_structure, ".......");
        assert_eq!(r.mfe_energy, 0.0);
        assert!((r.target_probability - 1.0).abs() < 1e-12);
        assert!(r.ensemble_defect.abs() < 1e-12);
        assert!((BuiltinEngine::new(3, 1.0).log_partition_function(&seq("AAAA"))).abs() < 1e-12);
    }

    #[test]
    fn gcgcgc_allows_one_pair_at_most() {
        // Only (0,5) clears the hairpin minimum; any nested pair would sit
        // inside a loop shorter than 3.
        let mut e = BuiltinEngine::new(3, 1.0);
        let r = e.fold(&seq("GCGCGC"), &target("((..))")).unwrap();
        assert_eq!(r.mfe_structure, "(....)");
        assert_eq!(r.target_probability, 0.0);
    }

    #[test]
    fn two_structure_ensemble() {
        let mut e = BuiltinEngine::new(3, 1.0);
        let s = seq("GAAAC");
        let z = BuiltinEngine::new(3, 1.0).log_partition_function(&s).exp();
        let expected = 1.0 + std::f64::consts::E;
        assert!((z - expected).abs() < 1e-12);

        let r = e.fold(&s, &target("(...)")).unwrap();
        let p = std::f64::consts::E / expected;
        assert!((r.target_probability - p).abs() < 1e-12);
        // Paired ends are wrong with probability 1-p, the loop is always right.
        let defect = 2.0 * (1.0 - p);
        assert!((r.ensemble_defect - defect).abs() < 1e-12);
        let probs = r.pair_probabilities.unwrap();
        assert!((probs.get(0, 4) - p).abs() < 1e-12);
        assert!((probs.get(4, 0) - p).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let mut e = BuiltinEngine::new(3, 1.0);
        assert_eq!(
            e.fold(&seq("GAAAC"), &target("(..)")).unwrap_err(),
            FoldError::LengthMismatch(5, 4)
        );
    }

    #[test]
    fn zero_hairpin_allows_adjacent_pair() {
        let mut e = BuiltinEngine::new(0, 1.0);
        let r = e.fold(&seq("GC"), &target("()")).unwrap();
        assert_eq!(r.mfe_structure, "()");
        let mut strict = BuiltinEngine::new(3, 1.0);
        let r = strict.fold(&seq("GC"), &target("()")).unwrap();
        assert_eq!(r.target_probability, 0.0);
        assert_eq!(r.target_log_probability, f64::NEG_INFINITY);
    }

    #[test]
    fn appending_unpairable_base_keeps_z() {
        // A suffix of A's cannot pair with a sequence that has no U.
        let e = BuiltinEngine::new(3, 1.0);
        let mut s = String::from("GGGCACCGC");
        let mut prev = e.log_partition_function(&seq(&s));
        for _ in 0..5 {
            s.push('A');
            let next = e.log_partition_function(&seq(&s));
            assert!(next >= prev - 1e-12);
            prev = next;
        }
    }
}
