//! Words over a finite alphabet and cylinder functions.
//!
//! Words of a fixed length `k` are indexed lexicographically with the first
//! symbol most significant, so the children of the word with index `i` are
//! `i·|S| + s` and its parent is `i / |S|`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;

pub const DEFAULT_MAX_WORDS: u64 = 10_000_000;

/// Cap on the number of words any single enumeration may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_words: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

impl Budget {
    pub fn new(max_words: u64) -> Self {
        Budget { max_words }
    }

    pub fn unlimited() -> Self {
        Budget {
            max_words: u64::MAX,
        }
    }

    /// Checks that `base^k` words fit.
    pub fn check(&self, base: usize, k: usize) -> Result<usize> {
        let mut n: u128 = 1;
        for _ in 0..k {
            n = n.saturating_mul(base as u128);
            if n > self.max_words as u128 {
                return Err(Error::BudgetExceeded {
                    requested: n,
                    cap: self.max_words,
                });
            }
        }
        Ok(n as usize)
    }
}

/// Ordered symbol names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("alphabet is empty".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if a.is_empty() || a.contains('.') || a.contains(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("bad symbol name `{a}`")));
            }
            if names[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate symbol `{a}`")));
            }
        }
        Ok(Alphabet { names })
    }

    /// Symbols named `0`, `1`, ….
    pub fn numbered(n: usize) -> Self {
        Alphabet {
            names: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbol(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    fn single_char(&self) -> bool {
        self.names.iter().all(|n| n.chars().count() == 1)
    }

    /// Parses a word written in the external format.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Word::empty());
        }
        let symbols = if self.single_char() && !s.contains('.') {
            s.chars()
                .map(|c| self.symbol(&c.to_string()))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.split('.')
                .map(|p| self.symbol(p))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Word(symbols))
    }

    pub fn format_word(&self, w: &Word) -> String {
        let parts = w.0.iter().map(|&s| self.names[s].as_str());
        if self.single_char() {
            parts.collect()
        } else {
            parts.collect::<Vec<_>>().join(".")
        }
    }
}

/// A finite word; symbols are indices into the owning alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, s: usize) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    /// Drops the first symbol.
    pub fn shift(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// Lexicographic index among words of the same length.
    pub fn index(&self, base: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * base + s)
    }

    pub fn from_index(mut idx: usize, len: usize, base: usize) -> Word {
        let mut v = vec![0; len];
        for slot in v.iter_mut().rev() {
            *slot = idx % base;
            idx /= base;
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

/// All words of length `k` in lexicographic order.
pub fn enumerate(base: usize, k: usize, budget: &Budget) -> Result<Vec<Word>> {
    let n = budget.check(base, k)?;
    Ok((0..n).map(|i| Word::from_index(i, k, base)).collect())
}

/// A function of the first `depth` symbols, tabulated in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction<T> {
    depth: usize,
    base: usize,
    values: Vec<T>,
}

impl<T: Field> CylinderFunction<T> {
    pub fn new(base: usize, depth: usize, values: Vec<T>) -> Result<Self> {
        let expected = Budget::unlimited().check(base, depth)?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "cylinder function of depth {depth} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(CylinderFunction {
            depth,
            base,
            values,
        })
    }

    pub fn constant(base: usize, c: T) -> Self {
        CylinderFunction {
            depth: 0,
            base,
            values: vec![c],
        }
    }

    /// Indicator of the cylinder `w`.
    pub fn indicator(base: usize, w: &Word) -> Self {
        let n = base.pow(w.len() as u32);
        let mut values = vec![T::zero(); n];
        values[w.index(base)] = T::one();
        CylinderFunction {
            depth: w.len(),
            base,
            values,
        }
    }

    pub fn from_fn(base: usize, depth: usize, mut f: impl FnMut(&Word) -> T) -> Self {
        let n = base.pow(depth as u32);
        let values = (0..n)
            .map(|i| f(&Word::from_index(i, depth, base)))
            .collect();
        CylinderFunction {
            depth,
            base,
            values,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.values[idx]
    }

    /// Value on any word of length at least `depth`.
    pub fn eval(&self, w: &Word) -> T {
        assert!(w.len() >= self.depth, "word shorter than function depth");
        self.values[w.prefix(self.depth).index(self.base)].clone()
    }

    /// The same function tabulated at a deeper level.
    pub fn refine(&self, depth: usize) -> Self {
        assert!(depth >= self.depth);
        let step = self.base.pow((depth - self.depth) as u32);
        let values = (0..self.values.len() * step)
            .map(|i| self.values[i / step].clone())
            .collect();
        CylinderFunction {
            depth,
            base: self.base,
            values,
        }
    }

    /// `f ∘ T`: the function of one more symbol ignoring the first.
    pub fn compose_shift(&self) -> Self {
        let n = self.values.len();
        let values = (0..n * self.base)
            .map(|i| self.values[i % n].clone())
            .collect();
        CylinderFunction {
            depth: self.depth + 1,
            base: self.base,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_lexicographic() {
        let b = Budget::default();
        assert_eq!(enumerate(3, 0, &b).unwrap(), vec![Word::empty()]);
        let w1 = enumerate(3, 1, &b).unwrap();
        assert_eq!(w1, vec![Word(vec![0]), Word(vec![1]), Word(vec![2])]);
        let w2 = enumerate(3, 2, &b).unwrap();
        assert_eq!(w2.len(), 9);
        assert_eq!(w2[0], Word(vec![0, 0]));
        assert_eq!(w2[1], Word(vec![0, 1]));
        assert_eq!(w2[8], Word(vec![2, 2]));
    }

    #[test]
    fn budget_is_enforced() {
        let b = Budget::new(100);
        assert!(enumerate(3, 4, &b).is_ok());
        assert!(matches!(
            enumerate(3, 5, &b),
            Err(Error::BudgetExceeded {
                requested: 243,
                cap: 100
            })
        ));
    }

    #[test]
    fn index_round_trip() {
        for i in 0..81 {
            assert_eq!(Word::from_index(i, 4, 3).index(3), i);
        }
    }

    #[test]
    fn word_formatting() {
        let a = Alphabet::numbered(3);
        let w = a.parse_word("012").unwrap();
        assert_eq!(w, Word(vec![0, 1, 2]));
        assert_eq!(a.format_word(&w), "012");
        assert_eq!(a.parse_word("").unwrap(), Word::empty());
        let long = Alphabet::numbered(12);
        let w = long.parse_word("11.0.3").unwrap();
        assert_eq!(w, Word(vec![11, 0, 3]));
        assert_eq!(long.format_word(&w), "11.0.3");
        assert!(a.parse_word("03").is_err());
    }

    #[test]
    fn concat_and_shift() {
        let a = Word(vec![0]);
        let b = Word(vec![1]);
        assert_eq!(a.concat(&b), Word(vec![0, 1]));
        assert_eq!(Word::empty().concat(&b), b);
        assert_eq!(Word(vec![2, 0, 1]).shift(), Word(vec![0, 1]));
    }

    #[test]
    fn cylinder_refine_and_shift() {
        let f = CylinderFunction::<f64>::indicator(3, &Word(vec![0]));
        let g = f.refine(2);
        assert_eq!(g.values()[..4], [1.0, 1.0, 1.0, 0.0]);
        let h = f.compose_shift();
        assert_eq!(h.eval(&Word(vec![2, 0])), 1.0);
        assert_eq!(h.eval(&Word(vec![0, 2])), 0.0);
    }
}
