//! Dot-bracket secondary structures, nucleotide sequences and structure
//! distances.
//!
//! Positions are 0-based everywhere, including in error messages and
//! report output.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("empty structure")]
    Empty,
    #[error("unbalanced brackets at position {0}")]
    UnbalancedBrackets(usize),
    #[error("illegal character {1:?} at position {0}")]
    IllegalCharacter(usize, char),
    #[error("illegal nucleotide {1:?} at position {0}")]
    IllegalBase(usize, char),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// One of the four RNA nucleotides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    A,
    C,
    G,
    U,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::U];

    pub fn from_char(c: char) -> Option<Base> {
        match c {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'U' => Some(Base::U),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::U => 'U',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// True iff `a` and `b` form one of the six canonical pairs
/// (CG, GC, AU, UA, UG, GU).
pub fn is_valid_pair(a: Base, b: Base) -> bool {
    matches!(
        (a, b),
        (Base::C, Base::G)
            | (Base::G, Base::C)
            | (Base::A, Base::U)
            | (Base::U, Base::A)
            | (Base::U, Base::G)
            | (Base::G, Base::U)
    )
}

/// A canonical base pair, written 5' base first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairChoice {
    CG,
    GC,
    AU,
    UA,
    UG,
    GU,
}

impl PairChoice {
    pub const ALL: [PairChoice; 6] = [
        PairChoice::CG,
        PairChoice::GC,
        PairChoice::AU,
        PairChoice::UA,
        PairChoice::UG,
        PairChoice::GU,
    ];

    pub fn bases(self) -> (Base, Base) {
        match self {
            PairChoice::CG => (Base::C, Base::G),
            PairChoice::GC => (Base::G, Base::C),
            PairChoice::AU => (Base::A, Base::U),
            PairChoice::UA => (Base::U, Base::A),
            PairChoice::UG => (Base::U, Base::G),
            PairChoice::GU => (Base::G, Base::U),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A structural element of a target: a lone unpaired position or a base
/// pair `(i, j)` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Element {
    Unpaired(usize),
    Pair(usize, usize),
}

impl Element {
    pub fn is_pair(&self) -> bool {
        matches!(self, Element::Pair(..))
    }
}

/// A parsed, validated dot-bracket target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetStructure {
    dotbracket: String,
    pair_table: Vec<Option<usize>>,
    elements: Vec<Element>,
}

impl TargetStructure {
    pub fn parse(text: &str) -> Result<Self, StructureError> {
        let pair_table = pair_table(text)?;
        let elements = pair_table
            .iter()
            .enumerate()
            .filter_map(|(i, partner)| match *partner {
                None => Some(Element::Unpaired(i)),
                Some(j) if j > i => Some(Element::Pair(i, j)),
                Some(_) => None,
            })
            .collect();
        Ok(TargetStructure {
            dotbracket: text.to_string(),
            pair_table,
            elements,
        })
    }

    pub fn dotbracket(&self) -> &str {
        &self.dotbracket
    }

    pub fn pair_table(&self) -> &[Option<usize>] {
        &self.pair_table
    }

    /// Elements ordered by their opening position.
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.pair_table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_table.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.elements.iter().filter_map(|e| match *e {
            Element::Pair(i, j) => Some((i, j)),
            Element::Unpaired(_) => None,
        })
    }

    pub fn pair_count(&self) -> usize {
        self.pairs().count()
    }

    /// Re-emit the dot-bracket text from the pair table.
    pub fn render(&self) -> String {
        render_pair_table(&self.pair_table)
    }
}

impl FromStr for TargetStructure {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TargetStructure::parse(s)
    }
}

impl fmt::Display for TargetStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dotbracket)
    }
}

/// Parse dot-bracket text into a target structure.
pub fn parse_dotbracket(text: &str) -> Result<TargetStructure, StructureError> {
    TargetStructure::parse(text)
}

/// Pair table of a dot-bracket string. An unmatched `)` is reported at its
/// own position, an unclosed `(` at the end of the text.
pub fn pair_table(text: &str) -> Result<Vec<Option<usize>>, StructureError> {
    if text.is_empty() {
        return Err(StructureError::Empty);
    }
    let mut table = vec![None; text.chars().count()];
    let mut stack = Vec::new();
    for (pos, c) in text.chars().enumerate() {
        match c {
            '.' => {}
            '(' => stack.push(pos),
            ')' => {
                let open = stack.pop().ok_or(StructureError::UnbalancedBrackets(pos))?;
                table[open] = Some(pos);
                table[pos] = Some(open);
            }
            other => return Err(StructureError::IllegalCharacter(pos, other)),
        }
    }
    if !stack.is_empty() {
        return Err(StructureError::UnbalancedBrackets(table.len()));
    }
    Ok(table)
}

pub fn render_pair_table(table: &[Option<usize>]) -> String {
    table
        .iter()
        .enumerate()
        .map(|(i, p)| match *p {
            None => '.',
            Some(j) if j > i => '(',
            Some(_) => ')',
        })
        .collect()
}

fn pair_set(text: &str) -> Result<BTreeSet<(usize, usize)>, StructureError> {
    Ok(pair_table(text)?
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| p.filter(|&j| j > i).map(|j| (i, j)))
        .collect())
}

/// Size of the symmetric difference of the two pair sets.
pub fn base_pair_distance(s1: &str, s2: &str) -> Result<usize, StructureError> {
    let (n1, n2) = (s1.chars().count(), s2.chars().count());
    if n1 != n2 {
        return Err(StructureError::LengthMismatch(n1, n2));
    }
    let a = pair_set(s1)?;
    let b = pair_set(s2)?;
    Ok(a.symmetric_difference(&b).count())
}

/// Number of positions where the two strings differ.
pub fn hamming_distance(s1: &str, s2: &str) -> Result<usize, StructureError> {
    let (n1, n2) = (s1.chars().count(), s2.chars().count());
    if n1 != n2 {
        return Err(StructureError::LengthMismatch(n1, n2));
    }
    Ok(s1.chars().zip(s2.chars()).filter(|(a, b)| a != b).count())
}

/// A candidate RNA sequence over {A, C, G, U}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NucleotideSequence(Vec<Base>);

impl NucleotideSequence {
    pub fn new(bases: Vec<Base>) -> Self {
        NucleotideSequence(bases)
    }

    pub fn bases(&self) -> &[Base] {
        &self.0
    }

    pub fn bases_mut(&mut self) -> &mut [Base] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn gc_fraction(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        let gc = self
            .0
            .iter()
            .filter(|b| matches!(b, Base::G | Base::C))
            .count();
        gc as f64 / self.0.len() as f64
    }

    /// Write a pair choice onto both ends of a pair.
    pub fn assign_pair(&mut self, i: usize, j: usize, choice: PairChoice) {
        let (a, b) = choice.bases();
        self.0[i] = a;
        self.0[j] = b;
    }
}

impl FromStr for NucleotideSequence {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, c)| Base::from_char(c).ok_or(StructureError::IllegalBase(i, c)))
            .collect::<Result<Vec<_>, _>>()
            .map(NucleotideSequence)
    }
}

impl fmt::Display for NucleotideSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_hairpin() {
        let t = parse_dotbracket("((...))").unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(
            t.elements(),
            &[
                Element::Pair(0, 6),
                Element::Pair(1, 5),
                Element::Unpaired(2),
                Element::Unpaired(3),
                Element::Unpaired(4),
            ]
        );
        assert_eq!(t.pair_table()[0], Some(6));
        assert_eq!(t.pair_table()[6], Some(0));
        assert_eq!(t.pair_table()[3], None);
    }

    #[test]
    fn single_dot() {
        let t = parse_dotbracket(".").unwrap();
        assert_eq!(t.elements(), &[Element::Unpaired(0)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            parse_dotbracket("(()").unwrap_err(),
            StructureError::UnbalancedBrackets(3)
        );
        assert_eq!(
            parse_dotbracket("())").unwrap_err(),
            StructureError::UnbalancedBrackets(2)
        );
        assert_eq!(
            parse_dotbracket("(.[.])").unwrap_err(),
            StructureError::IllegalCharacter(2, '[')
        );
        assert_eq!(parse_dotbracket("").unwrap_err(), StructureError::Empty);
    }

    #[test]
    fn distances() {
        assert_eq!(base_pair_distance("((..))", "((..))").unwrap(), 0);
        assert_eq!(base_pair_distance("(....)", "......").unwrap(), 1);
        assert_eq!(base_pair_distance("((..))", ".(..).").unwrap(), 1);
        assert_eq!(hamming_distance("(...)", "(...)").unwrap(), 0);
        assert_eq!(hamming_distance("(...)", ".....").unwrap(), 2);
        assert_eq!(hamming_distance("((..))", ".(..).").unwrap(), 2);
        assert_eq!(
            base_pair_distance("(..)", "...").unwrap_err(),
            StructureError::LengthMismatch(4, 3)
        );
        assert!(hamming_distance("..", "...").is_err());
    }

    #[test]
    fn six_pairs() {
        assert!(is_valid_pair(Base::G, Base::U));
        assert!(is_valid_pair(Base::C, Base::G));
        assert!(!is_valid_pair(Base::A, Base::A));
        let valid = Base::ALL
            .iter()
            .flat_map(|&a| Base::ALL.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| is_valid_pair(a, b))
            .count();
        assert_eq!(valid, 6);
        for p in PairChoice::ALL {
            let (a, b) = p.bases();
            assert!(is_valid_pair(a, b));
        }
    }

    #[test]
    fn sequence_roundtrip() {
        let s: NucleotideSequence = "GGCAU".parse().unwrap();
        assert_eq!(s.to_string(), "GGCAU");
        assert_eq!(
            "GGTA".parse::<NucleotideSequence>().unwrap_err(),
            StructureError::IllegalBase(2, 'T')
        );
        let gc: NucleotideSequence = "GGCC".parse().unwrap();
        assert_eq!(gc.gc_fraction(), 1.0);
    }

    /// Random balanced dot-bracket strings built by a nesting grammar.
    fn structure_strategy(max_len: usize) -> impl Strategy<Value = String> {
        proptest::collection::vec(0u8..3, 1..=max_len).prop_map(|ops| {
            let mut out = String::new();
            let mut depth = 0usize;
            let remaining = ops.len();
            for (k, op) in ops.iter().enumerate() {
                let left = remaining - k;
                if depth >= left {
                    out.push(')');
                    depth -= 1;
                    continue;
                }
                match op {
                    0 if depth + 1 < left => {
                        out.push('(');
                        depth += 1;
                    }
                    1 if depth > 0 => {
                        out.push(')');
                        depth -= 1;
                    }
                    _ => out.push('.'),
                }
            }
            out
        })
    }

    fn same_length_triple() -> impl Strategy<Value = (String, String, String)> {
        (1usize..=20).prop_flat_map(|n| {
            let fixed = move |s: String| {
                let mut s: String = s.chars().take(n).collect();
                while s.len() < n {
                    s.push('.');
                }
                // Drop brackets that lost their partner in truncation.
                let mut stack = Vec::new();
                let mut chars: Vec<char> = s.chars().collect();
                for (i, c) in chars.iter_mut().enumerate() {
                    match *c {
                        '(' => stack.push(i),
                        ')' => match stack.pop() {
                            Some(_) => {}
                            None => *c = '.',
                        },
                        _ => {}
                    }
                }
                for i in stack {
                    chars[i] = '.';
                }
                chars.into_iter().collect::<String>()
            };
            (
                structure_strategy(20).prop_map(fixed),
                structure_strategy(20).prop_map(fixed),
                structure_strategy(20).prop_map(fixed),
            )
        })
    }

    proptest! {
        #[test]
        fn render_roundtrip(s in structure_strategy(40)) {
            let t = parse_dotbracket(&s).unwrap();
            prop_assert_eq!(t.render(), s.clone());
            let weight: usize = t.elements().iter().map(|e| if e.is_pair() { 2 } else { 1 }).sum();
            prop_assert_eq!(weight, t.len());
            for (i, p) in t.pair_table().iter().enumerate() {
                if let Some(j) = *p {
                    prop_assert_ne!(i, j);
                    prop_assert_eq!(t.pair_table()[j], Some(i));
                }
            }
        }

        #[test]
        fn bpd_is_metric((a, b, c) in same_length_triple()) {
            let ab = base_pair_distance(&a, &b).unwrap();
            let ba = base_pair_distance(&b, &a).unwrap();
            let bc = base_pair_distance(&b, &c).unwrap();
            let ac = base_pair_distance(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc);
            prop_assert_eq!(base_pair_distance(&a, &a).unwrap(), 0);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert_eq!(hamming_distance(&a, &b).unwrap() == 0, a == b);
        }

        #[test]
        fn removing_one_pair((a, _, _) in same_length_triple()) {
            let t = parse_dotbracket(&a).unwrap();
            let first = t.pairs().next();
            if let Some((i, j)) = first {
                let mut chars: Vec<char> = a.chars().collect();
                chars[i] = '.';
                chars[j] = '.';
                let b: String = chars.into_iter().collect();
                prop_assert_eq!(hamming_distance(&a, &b).unwrap(), 2);
                let d = base_pair_distance(&a, &b).unwrap();
                prop_assert!(d == 1 || d == 2);
            }
        }
    }
}
