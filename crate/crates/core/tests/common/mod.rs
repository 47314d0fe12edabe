//! Independent reference computations used by the integration tests.
//!
//! Everything here enumerates explicitly instead of using dynamic
//! programming, so it shares no code paths with the library's engine.

#![allow(dead_code)]

use montparnasse::structure::{is_valid_pair, Base};
use rand::Rng;

/// Every secondary structure of `seq` (non-crossing canonical pairs with at
/// least `min_hairpin` unpaired bases inside each pair), as pair lists.
pub fn enumerate_structures(seq: &[Base], min_hairpin: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(seq: &[Base], h: usize, i: usize, j: usize) -> Vec<Vec<(usize, usize)>> {
        // Structures on the half-open interval [i, j).
        if j <= i {
            return vec![Vec::new()];
        }
        let mut out = rec(seq, h, i + 1, j);
        for k in (i + h + 1)..j {
            if !is_valid_pair(seq[i], seq[k]) {
                continue;
            }
            let inner = rec(seq, h, i + 1, k);
            let outer = rec(seq, h, k + 1, j);
            for a in &inner {
                for b in &outer {
                    let mut s = Vec::with_capacity(1 + a.len() + b.len());
                    s.push((i, k));
                    s.extend_from_slice(a);
                    s.extend_from_slice(b);
                    out.push(s);
                }
            }
        }
        out
    }
    rec(seq, min_hairpin, 0, seq.len())
}

pub struct EnsembleOracle {
    pub max_pairs: usize,
    pub z: f64,
    /// Expected number of positions whose partner differs from the target.
    pub defect: f64,
    pub target_probability: f64,
}

/// Boltzmann statistics with energy −1 per pair.
pub fn ensemble_oracle(
    seq: &[Base],
    target: &[Option<usize>],
    min_hairpin: usize,
    kt: f64,
) -> EnsembleOracle {
    let n = seq.len();
    let mut z = 0.0;
    let mut weighted_defect = 0.0;
    let mut target_weight = 0.0;
    let mut max_pairs = 0;
    for s in enumerate_structures(seq, min_hairpin) {
        max_pairs = max_pairs.max(s.len());
        let w = (s.len() as f64 / kt).exp();
        let mut partner = vec![None; n];
        for &(i, j) in &s {
            partner[i] = Some(j);
            partner[j] = Some(i);
        }
        let wrong = (0..n).filter(|&i| partner[i] != target[i]).count();
        z += w;
        weighted_defect += w * wrong as f64;
        if wrong == 0 {
            target_weight += w;
        }
    }
    EnsembleOracle {
        max_pairs,
        z,
        defect: weighted_defect / z,
        target_probability: target_weight / z,
    }
}

pub fn random_bases<R: Rng>(rng: &mut R, n: usize) -> Vec<Base> {
    (0..n).map(|_| Base::ALL[rng.gen_range(0..4)]).collect()
}

pub fn bases_to_string(seq: &[Base]) -> String {
    seq.iter().map(|b| b.as_char()).collect()
}

/// Partner table of a dot-bracket string, computed with a plain stack.
pub fn partners(dotbracket: &str) -> Vec<Option<usize>> {
    let mut out = vec![None; dotbracket.len()];
    let mut stack = Vec::new();
    for (i, c) in dotbracket.chars().enumerate() {
        match c {
            '(' => stack.push(i),
            ')' => {
                let j = stack.pop().expect("balanced");
                out[i] = Some(j);
                out[j] = Some(i);
            }
            _ => {}
        }
    }
    out
}

/// Random structure from the pair choices of a random sequence, so that it
/// is always formable.
pub fn random_target<R: Rng>(rng: &mut R, seq: &[Base], min_hairpin: usize) -> String {
    let all = enumerate_structures(seq, min_hairpin);
    let s = &all[rng.gen_range(0..all.len())];
    let mut chars = vec!['.'; seq.len()];
    for &(i, j) in s {
        chars[i] = '(';
        chars[j] = ')';
    }
    chars.into_iter().collect()
}

/// Every non-decreasing `k`-tuple over `values` (sorted ascending) with
/// sum `n`, by exhaustive listing then filtering.
pub fn brute_force_profiles(n: u64, k: usize, values: &[u64]) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    if values.is_empty() {
        return out;
    }
    loop {
        let tuple: Vec<u64> = idx.iter().map(|&i| values[i]).collect();
        if tuple.windows(2).all(|w| w[0] <= w[1]) && tuple.iter().sum::<u64>() == n {
            out.push(tuple);
        }
        // Odometer increment over all |values|^k index tuples.
        let mut pos = k;
        loop {
            if pos == 0 {
                out.sort();
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// n choose k as f64.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
