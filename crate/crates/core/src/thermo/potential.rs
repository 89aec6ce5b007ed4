//! Locally constant potentials on a subshift.

use crate::error::{Error, Result};
use crate::sft::{format_word, parse_word, TransitionMatrix, Word, WordIndex};

/// A potential `g(xi) = table[xi(0..k)]`.
#[derive(Debug, Clone)]
pub struct Potential {
    depth: usize,
    words: Vec<Word>,
    values: Vec<f64>,
    index: WordIndex,
}

impl Potential {
    /// Table over `a.enumerate_words(depth)`, in that order.
    pub fn new(a: &TransitionMatrix, depth: usize, values: Vec<f64>) -> Result<Self> {
        let words = a.enumerate_words(depth)?;
        if values.len() != words.len() {
            return Err(Error::InvalidPotential(format!(
                "{} values for {} words of length {depth}",
                values.len(),
                words.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "non-finite value at word {}",
                format_word(&words[i])
            )));
        }
        let index = a.word_index(&words);
        Ok(Self {
            depth,
            words,
            values,
            index,
        })
    }

    pub fn from_fn(a: &TransitionMatrix, depth: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let words = a.enumerate_words(depth)?;
        let values = words.iter().map(|w| f(w)).collect();
        Self::new(a, depth, values)
    }

    pub fn constant(a: &TransitionMatrix, c: f64) -> Result<Self> {
        Self::new(a, 1, vec![c; a.size()])
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    /// Value on the cylinder fixed by the first `depth` symbols of `w`.
    #[inline]
    pub fn eval(&self, w: &[usize]) -> f64 {
        let i = self
            .index
            .get(&w[..self.depth])
            .expect("inadmissible word passed to potential");
        self.values[i]
    }

    pub fn try_eval(&self, w: &[usize]) -> Option<f64> {
        (w.len() >= self.depth)
            .then(|| self.index.get(&w[..self.depth]))
            .flatten()
            .map(|i| self.values[i])
    }

    /// Birkhoff sum `S_m g` on a word of length `m + depth - 1`.
    pub fn birkhoff(&self, w: &[usize], m: usize) -> f64 {
        assert!(w.len() + 1 >= m + self.depth, "word too short for Birkhoff sum");
        (0..m).map(|j| self.eval(&w[j..])).sum()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// The same function re-tabulated at a greater depth.
    pub fn lift(&self, a: &TransitionMatrix, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidPotential(format!(
                "cannot lower depth {} to {depth}",
                self.depth
            )));
        }
        Self::from_fn(a, depth, |w| self.eval(w))
    }

    /// Pointwise sum, tabulated at the larger depth.
    pub fn add(&self, a: &TransitionMatrix, other: &Self) -> Result<Self> {
        let d = self.depth.max(other.depth);
        Self::from_fn(a, d, |w| self.eval(w) + other.eval(w))
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, a: &TransitionMatrix, other: &Self) -> Result<f64> {
        let d = self.depth.max(other.depth);
        Ok(a.enumerate_words(d)?
            .iter()
            .map(|w| (self.eval(w) - other.eval(w)).abs())
            .fold(0.0, f64::max))
    }

    /// Adds the coboundary `phi∘sigma - phi` of a depth-`d` table `phi`.
    pub fn add_coboundary(&self, a: &TransitionMatrix, phi: &Self) -> Result<Self> {
        let d = self.depth.max(phi.depth + 1);
        Self::from_fn(a, d, |w| self.eval(w) + phi.eval(&w[1..]) - phi.eval(w))
    }

    /// Writes `word,value` lines with quoted 1-based words.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,value\n");
        for (w, v) in self.words.iter().zip(&self.values) {
            s.push_str(&format!("\"{}\",{v:e}\n", format_word(w)));
        }
        s
    }

    pub fn from_csv(a: &TransitionMatrix, text: &str) -> Result<Self> {
        let mut rows: Vec<(Word, f64)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.starts_with("word")) {
                continue;
            }
            let (w, v) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected word,value", n + 1)))?;
            let w = parse_word(w.trim_matches('"'))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            rows.push((w, v));
        }
        let depth = rows
            .first()
            .map(|r| r.0.len())
            .ok_or_else(|| Error::Parse("empty potential".into()))?;
        let words = a.enumerate_words(depth)?;
        let index = a.word_index(&words);
        let mut values = vec![f64::NAN; words.len()];
        for (w, v) in rows {
            let i = index.get(&w).ok_or_else(|| {
                Error::InvalidPotential(format!("word {} is not admissible", format_word(&w)))
            })?;
            values[i] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidPotential("table does not cover every word".into()));
        }
        Self::new(a, depth, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let a = TransitionMatrix::golden_mean();
        let g = Potential::from_fn(&a, 2, |w| w[0] as f64 - 0.25 * w[1] as f64).unwrap();
        let back = Potential::from_csv(&a, &g.to_csv()).unwrap();
        assert_eq!(back.values(), g.values());
    }

    #[test]
    fn birkhoff_sums() {
        let a = TransitionMatrix::full_shift(2);
        let g = Potential::new(&a, 1, vec![1.0, 10.0]).unwrap();
        assert_eq!(g.birkhoff(&[0, 1, 1, 0], 4), 22.0);
        let h = Potential::from_fn(&a, 2, |w| (w[0] * 2 + w[1]) as f64).unwrap();
        assert_eq!(h.birkhoff(&[0, 1, 1], 2), 1.0 + 3.0);
    }

    #[test]
    fn rejects_bad_tables() {
        let a = TransitionMatrix::golden_mean();
        assert!(Potential::new(&a, 2, vec![0.0; 4]).is_err());
        assert!(Potential::new(&a, 1, vec![0.0, f64::NAN]).is_err());
    }
}
