//! Subshifts of finite type.
//!
//! Transition matrices use the (next, current) convention: `a[i][j] == 1`
//! permits the step "current symbol `j`, next symbol `i`". Most references use
//! the transpose, so be careful when importing matrices from elsewhere.
//! Symbols are 0-based internally and 1-based in all text I/O.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of words any enumeration will materialize.
pub const DEFAULT_WORD_BUDGET: u128 = 1 << 24;

/// A 0/1 transition matrix with no dead symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    k: usize,
    a: Vec<Vec<u8>>,
}

/// A finite admissible word over `0..k`.
pub type Word = Vec<usize>;

/// A cylinder set, represented by the word fixing its first symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cylinder {
    pub word: Word,
}

impl Cylinder {
    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

impl TransitionMatrix {
    /// Builds a matrix from rows; `rows[i][j] == 1` allows `j -> i`.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {} entries, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&x| x > 1) {
                return Err(Error::InvalidMatrix(format!("row {} is not 0/1", i + 1)));
            }
            if row.iter().all(|&x| x == 0) {
                return Err(Error::InvalidMatrix(format!("row {} is all zero", i + 1)));
            }
        }
        for j in 0..k {
            if rows.iter().all(|r| r[j] == 0) {
                return Err(Error::InvalidMatrix(format!("column {} is all zero", j + 1)));
            }
        }
        Ok(Self { k, a: rows })
    }

    pub fn full_shift(k: usize) -> Self {
        Self::new(vec![vec![1; k]; k]).expect("full shift is valid")
    }

    /// The golden-mean shift: rows (1,1),(1,0).
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![1, 1], vec![1, 0]]).expect("golden mean is valid")
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.a
    }

    /// Whether the step `current -> next` is allowed.
    #[inline]
    pub fn allows(&self, current: usize, next: usize) -> bool {
        self.a[next][current] == 1
    }

    /// Symbols that may follow `current`, in increasing order.
    pub fn successors(&self, current: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&i| self.a[i][current] == 1)
    }

    /// Symbols that may precede `next`, in increasing order.
    pub fn predecessors(&self, next: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&j| self.a[next][j] == 1)
    }

    pub fn is_admissible(&self, w: &[usize]) -> bool {
        w.iter().all(|&s| s < self.k) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// First position `t` with an illegal step `w[t] -> w[t+1]`.
    pub fn check_admissible(&self, w: &[usize]) -> Result<()> {
        if let Some(t) = w.iter().position(|&s| s >= self.k) {
            return Err(Error::Inadmissible { position: t });
        }
        match w.windows(2).position(|p| !self.allows(p[0], p[1])) {
            Some(t) => Err(Error::Inadmissible { position: t }),
            None => Ok(()),
        }
    }

    /// Boolean product `self * other`.
    fn bool_mul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let k = a.len();
        let mut out = vec![vec![0u8; k]; k];
        for i in 0..k {
            for l in 0..k {
                if a[i][l] == 0 {
                    continue;
                }
                for j in 0..k {
                    out[i][j] |= b[l][j];
                }
            }
        }
        out
    }

    /// Smallest `m0 <= max_power` with every entry of `A^m0` positive.
    pub fn mixing_exponent(&self, max_power: usize) -> Option<usize> {
        let mut p = self.a.clone();
        for m in 1..=max_power {
            if p.iter().all(|r| r.iter().all(|&x| x == 1)) {
                return Some(m);
            }
            p = Self::bool_mul(&p, &self.a);
        }
        None
    }

    /// Symbols lying on some bi-infinite admissible path (the recurrent core).
    ///
    /// With no dead rows or columns every symbol extends forever, but this
    /// stays correct for matrices built by restriction.
    pub fn extendable_symbols(&self) -> Vec<bool> {
        let mut alive = vec![true; self.k];
        loop {
            let mut changed = false;
            for s in 0..self.k {
                if alive[s] && !self.successors(s).any(|t| alive[t]) {
                    alive[s] = false;
                    changed = true;
                }
            }
            if !changed {
                return alive;
            }
        }
    }

    /// Number of admissible words of length `m` (sum of entries of `A^(m-1)`).
    pub fn word_count(&self, m: usize) -> u128 {
        if m == 0 {
            return 1;
        }
        let alive = self.extendable_symbols();
        let mut v: Vec<u128> = alive.iter().map(|&a| a as u128).collect();
        for _ in 1..m {
            let mut next = vec![0u128; self.k];
            for (c, &cnt) in v.iter().enumerate() {
                if cnt == 0 {
                    continue;
                }
                for n in self.successors(c) {
                    if alive[n] {
                        next[n] = next[n].saturating_add(cnt);
                    }
                }
            }
            v = next;
        }
        v.iter().fold(0u128, |s, &x| s.saturating_add(x))
    }

    /// All extendable admissible words of length `m`, lexicographically.
    pub fn enumerate_words(&self, m: usize) -> Result<Vec<Word>> {
        self.enumerate_words_with_budget(m, DEFAULT_WORD_BUDGET)
    }

    pub fn enumerate_words_with_budget(&self, m: usize, budget: u128) -> Result<Vec<Word>> {
        if m == 0 {
            return Err(Error::EmptyDepth);
        }
        let n = self.word_count(m);
        if n > budget {
            return Err(Error::Budget {
                requested: n,
                budget,
            });
        }
        let alive = self.extendable_symbols();
        let mut out = Vec::with_capacity(n as usize);
        let mut stack: Vec<usize> = Vec::with_capacity(m);
        fn rec(
            a: &TransitionMatrix,
            alive: &[bool],
            m: usize,
            stack: &mut Vec<usize>,
            out: &mut Vec<Word>,
        ) {
            if stack.len() == m {
                out.push(stack.clone());
                return;
            }
            let cands: Vec<usize> = match stack.last() {
                None => (0..a.k).collect(),
                Some(&c) => a.successors(c).collect(),
            };
            for s in cands {
                if alive[s] {
                    stack.push(s);
                    rec(a, alive, m, stack, out);
                    stack.pop();
                }
            }
        }
        rec(self, &alive, m, &mut stack, &mut out);
        Ok(out)
    }

    /// Lexicographic index of each word of length `m`, via a dense map.
    pub fn word_index(&self, words: &[Word]) -> WordIndex {
        WordIndex::new(self.k, words)
    }

    /// The m-block presentation: alphabet = admissible words of length `m`,
    /// with `u -> v` allowed when `u_last -> v_first` is allowed.
    pub fn block_matrix(&self, m: usize) -> Result<(TransitionMatrix, Vec<Word>)> {
        let words = self.enumerate_words(m)?;
        let n = words.len();
        let mut rows = vec![vec![0u8; n]; n];
        for (j, u) in words.iter().enumerate() {
            for (i, v) in words.iter().enumerate() {
                if self.allows(*u.last().unwrap(), v[0]) {
                    rows[i][j] = 1;
                }
            }
        }
        Ok((TransitionMatrix::new(rows)?, words))
    }

    /// Parses the plain-text format: first line `k`, then `k` rows of 0/1.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let k: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("missing size line".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("size: {e}")))?;
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {}", i + 1)))?;
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u8>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1))))
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.k);
        for r in &self.a {
            let row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Dense lookup from admissible words of a fixed length to their position.
#[derive(Debug, Clone)]
pub struct WordIndex {
    k: usize,
    len: usize,
    slots: Vec<u32>,
}

impl WordIndex {
    const EMPTY: u32 = u32::MAX;

    pub fn new(k: usize, words: &[Word]) -> Self {
        let len = words.first().map_or(0, |w| w.len());
        let total = k.checked_pow(len as u32).expect("word index too large");
        let mut slots = vec![Self::EMPTY; total];
        for (i, w) in words.iter().enumerate() {
            slots[Self::code(k, w)] = i as u32;
        }
        Self { k, len, slots }
    }

    #[inline]
    fn code(k: usize, w: &[usize]) -> usize {
        w.iter().fold(0, |c, &s| c * k + s)
    }

    #[inline]
    pub fn get(&self, w: &[usize]) -> Option<usize> {
        if w.len() != self.len {
            return None;
        }
        match self.slots[Self::code(self.k, w)] {
            Self::EMPTY => None,
            i => Some(i as usize),
        }
    }

    pub fn word_len(&self) -> usize {
        self.len
    }
}

/// Drops the first symbol.
pub fn shift(w: &[usize]) -> Result<Word> {
    if w.len() < 2 {
        return Err(Error::ShortWord(w.len()));
    }
    Ok(w[1..].to_vec())
}

/// Distance between two truncated sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaDistance {
    pub value: f64,
    /// True when the truncations agree on their common range, so `value`
    /// only bounds the distance of any extensions from above.
    pub upper_bound: bool,
}

/// `exp(-m)` where `m` is the first index at which `x` and `y` differ.
pub fn d_sigma(x: &[usize], y: &[usize]) -> SigmaDistance {
    let n = x.len().min(y.len());
    match (0..n).find(|&i| x[i] != y[i]) {
        Some(m) => SigmaDistance {
            value: (-(m as f64)).exp(),
            upper_bound: false,
        },
        None if x.len() == y.len() => SigmaDistance {
            value: 0.0,
            upper_bound: false,
        },
        None => SigmaDistance {
            value: (-(n as f64)).exp(),
            upper_bound: true,
        },
    }
}

/// Formats a word with 1-based symbols, comma separated.
pub fn format_word(w: &[usize]) -> String {
    let parts: Vec<String> = w.iter().map(|s| (s + 1).to_string()).collect();
    parts.join(",")
}

/// Parses a comma- or space-separated list of 1-based symbols.
pub fn parse_word(s: &str) -> Result<Word> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: usize = t.parse().map_err(|e| Error::Parse(format!("symbol {t:?}: {e}")))?;
            v.checked_sub(1)
                .ok_or_else(|| Error::Parse("symbols are 1-based".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(a: &TransitionMatrix, m: usize) -> Vec<Word> {
        let k = a.size();
        let mut out = Vec::new();
        for code in 0..k.pow(m as u32) {
            let mut w = vec![0; m];
            let mut c = code;
            for t in (0..m).rev() {
                w[t] = c % k;
                c /= k;
            }
            if a.is_admissible(&w) {
                out.push(w);
            }
        }
        out
    }

    #[test]
    fn mixing_exponents() {
        assert_eq!(TransitionMatrix::full_shift(2).mixing_exponent(10), Some(1));
        assert_eq!(TransitionMatrix::golden_mean().mixing_exponent(10), Some(2));
        let id = TransitionMatrix::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(id.mixing_exponent(50), None);
    }

    #[test]
    fn word_counts() {
        assert_eq!(TransitionMatrix::full_shift(2).enumerate_words(5).unwrap().len(), 32);
        let gm = TransitionMatrix::golden_mean();
        let w = gm.enumerate_words(5).unwrap();
        assert_eq!(w.len(), 13);
        assert_eq!(w, brute_force(&gm, 5));
        let id = TransitionMatrix::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(id.enumerate_words(3).unwrap(), vec![vec![0, 0, 0], vec![1, 1, 1]]);
        assert!(matches!(gm.enumerate_words(0), Err(Error::EmptyDepth)));
    }

    #[test]
    fn convention_is_next_current() {
        // Row 0 = (1, 0): from 0 to 0 allowed, from 1 to 0 forbidden.
        let a = TransitionMatrix::new(vec![vec![1, 0], vec![1, 1]]).unwrap();
        assert!(a.allows(0, 1));
        assert!(!a.allows(1, 0));
        assert!(a.is_admissible(&[0, 0, 1, 1]));
        assert!(!a.is_admissible(&[1, 0]));
    }

    #[test]
    fn counts_bounded_by_alphabet_growth() {
        let gm = TransitionMatrix::golden_mean();
        for m in 1..12 {
            assert!(gm.word_count(m + 1) <= 2 * gm.word_count(m));
            assert_eq!(gm.word_count(m) as usize, gm.enumerate_words(m).unwrap().len());
        }
    }

    #[test]
    fn shift_is_onto() {
        let gm = TransitionMatrix::golden_mean();
        for m in 2..=8 {
            let mut img: Vec<Word> = gm
                .enumerate_words(m)
                .unwrap()
                .iter()
                .map(|w| shift(w).unwrap())
                .collect();
            img.sort();
            img.dedup();
            assert_eq!(img, gm.enumerate_words(m - 1).unwrap());
        }
        assert_eq!(shift(&[0, 1, 0]).unwrap(), vec![1, 0]);
        assert!(shift(&[0]).is_err());
    }

    #[test]
    fn metric_values() {
        assert_eq!(d_sigma(&[0, 1, 0], &[0, 1, 0]).value, 0.0);
        assert_eq!(d_sigma(&[0, 1], &[1, 1]).value, 1.0);
        let d = d_sigma(&[0, 1, 0, 0, 1], &[0, 1, 0, 1, 0]);
        assert!((d.value - (-3.0f64).exp()).abs() < 1e-15);
        assert!(d_sigma(&[0, 1], &[0, 1, 0]).upper_bound);
    }

    #[test]
    fn ultrametric_on_golden_mean() {
        let w = TransitionMatrix::golden_mean().enumerate_words(6).unwrap();
        for x in &w {
            for y in &w {
                let dxy = d_sigma(x, y).value;
                for z in &w {
                    assert!(d_sigma(x, z).value <= dxy.max(d_sigma(y, z).value));
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let gm = TransitionMatrix::golden_mean();
        assert_eq!(TransitionMatrix::parse(&gm.to_text()).unwrap(), gm);
        assert!(TransitionMatrix::parse("2\n0 0\n1 1\n").is_err());
        assert_eq!(parse_word(&format_word(&[0, 1, 1])).unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn block_matrix_of_golden_mean() {
        let (b, words) = TransitionMatrix::golden_mean().block_matrix(2).unwrap();
        assert_eq!(words.len(), 3);
        assert!(b.mixing_exponent(10).is_some());
    }
}
