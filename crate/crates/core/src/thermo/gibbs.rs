//! Gibbs eigen-data of a locally constant potential.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::potential::Potential;
use super::pressure::{spectral_perron, transfer_matrix, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::perron;
use crate::sft::{format_word, TransitionMatrix, Word};

/// Conformal measure `mu`, density `h` and pressure `P` of a potential.
///
/// `mu` satisfies `mu([w]) = exp(g(w) - P) mu([sigma w])` for words longer
/// than the potential depth; `h mu` is shift-invariant.
#[derive(Debug, Clone)]
pub struct GibbsData {
    pub pressure: f64,
    a: TransitionMatrix,
    g: Potential,
    /// Density on depth-`k` cylinders, aligned with `g.words()`.
    h: Vec<f64>,
    /// Measure of depth-`k` cylinders, aligned with `g.words()`.
    mu: Vec<f64>,
}

/// JSON export: cylinder tables keyed by 1-based comma-separated words.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsExport {
    pub pressure: f64,
    pub depth: usize,
    pub h: BTreeMap<String, f64>,
    pub mu: BTreeMap<String, f64>,
}

pub fn gibbs(a: &TransitionMatrix, g: &Potential) -> Result<GibbsData> {
    gibbs_with(a, g, SolverOptions::default())
}

pub fn gibbs_with(a: &TransitionMatrix, g: &Potential, opts: SolverOptions) -> Result<GibbsData> {
    let right = spectral_perron(a, g, None, opts)?;
    let pressure = right.value.ln();
    let shift = g.values().iter().sum::<f64>() / g.values().len() as f64;
    let qt = transfer_matrix(a, &g.map(|v| v - shift)).transpose();
    let left = perron(&qt, opts.tol, opts.max_iter)?;
    let mu = right.vector;
    let norm: f64 = left.vector.iter().zip(&mu).map(|(h, m)| h * m).sum();
    if !(norm > 0.0) {
        return Err(Error::Integrity("degenerate Perron vectors".into()));
    }
    let h = left.vector.iter().map(|x| x / norm).collect();
    Ok(GibbsData {
        pressure,
        a: a.clone(),
        g: g.clone(),
        h,
        mu,
    })
}

impl GibbsData {
    pub fn potential(&self) -> &Potential {
        &self.g
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.a
    }

    /// Depth of the potential, i.e. of the eigenvector tables.
    pub fn depth(&self) -> usize {
        self.g.depth()
    }

    /// Measures of depth-`k` cylinders in the order of `potential().words()`.
    pub fn base_masses(&self) -> &[f64] {
        &self.mu
    }

    pub fn base_density(&self) -> &[f64] {
        &self.h
    }

    fn extensions(&self, w: &[usize]) -> Vec<Word> {
        let k = self.depth();
        let mut out = vec![w.to_vec()];
        while out[0].len() < k {
            let mut next = Vec::new();
            for v in &out {
                for s in self.a.successors(*v.last().unwrap()) {
                    let mut x = v.clone();
                    x.push(s);
                    next.push(x);
                }
            }
            out = next;
        }
        out
    }

    /// `mu([w])`; zero for inadmissible words, one for the empty word.
    pub fn mu(&self, w: &[usize]) -> f64 {
        let k = self.depth();
        if w.is_empty() {
            return 1.0;
        }
        if !self.a.is_admissible(w) {
            return 0.0;
        }
        if w.len() < k {
            return self.extensions(w).iter().map(|x| self.mu(x)).sum();
        }
        let tail = &w[w.len() - k..];
        let base = match self.g.index().get(tail) {
            Some(i) => self.mu[i],
            None => return 0.0,
        };
        let n = w.len() - k;
        let s: f64 = (0..n).map(|j| self.g.eval(&w[j..])).sum();
        (s - n as f64 * self.pressure).exp() * base
    }

    /// Density value on `[w]` for `|w| >= k`.
    pub fn h(&self, w: &[usize]) -> f64 {
        let i = self
            .g
            .index()
            .get(&w[..self.depth()])
            .expect("inadmissible word");
        self.h[i]
    }

    /// Invariant measure `(h mu)([w])`.
    pub fn invariant(&self, w: &[usize]) -> f64 {
        if w.len() < self.depth() {
            return self.extensions(w).iter().map(|x| self.invariant(x)).sum();
        }
        if !self.a.is_admissible(w) {
            return 0.0;
        }
        self.h(w) * self.mu(w)
    }

    /// `mu` on every admissible word of length `depth`, lexicographically.
    pub fn table(&self, depth: usize) -> Result<Vec<(Word, f64)>> {
        Ok(self
            .a
            .enumerate_words(depth)?
            .into_iter()
            .map(|w| {
                let m = self.mu(&w);
                (w, m)
            })
            .collect())
    }

    pub fn export(&self, depth: usize) -> Result<GibbsExport> {
        let h = self
            .g
            .words()
            .iter()
            .zip(&self.h)
            .map(|(w, v)| (format_word(w), *v))
            .collect();
        let mu = self
            .table(depth)?
            .into_iter()
            .map(|(w, v)| (format_word(&w), v))
            .collect();
        Ok(GibbsExport {
            pressure: self.pressure,
            depth,
            h,
            mu,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bernoulli() {
        let a = TransitionMatrix::full_shift(2);
        let gd = gibbs(&a, &Potential::constant(&a, 0.0).unwrap()).unwrap();
        assert!((gd.pressure - 2f64.ln()).abs() < 1e-12);
        for (w, m) in gd.table(4).unwrap() {
            assert!((m - 1.0 / 16.0).abs() < 1e-12);
            assert!((gd.h(&w) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_one_product_measure() {
        let a = TransitionMatrix::full_shift(2);
        let (x, y) = (0.4, -0.9);
        let gd = gibbs(&a, &Potential::new(&a, 1, vec![x, y]).unwrap()).unwrap();
        let z = x.exp() + y.exp();
        for (w, m) in gd.table(3).unwrap() {
            for (i, gi) in [x, y].into_iter().enumerate() {
                let mut iw = vec![i];
                iw.extend(&w);
                assert!((gd.mu(&iw) - gi.exp() / z * m).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tables_sum_to_one_and_are_additive() {
        let a = TransitionMatrix::golden_mean();
        let g = Potential::from_fn(&a, 2, |w| 0.3 * w[0] as f64 - 0.2 * w[1] as f64).unwrap();
        let gd = gibbs(&a, &g).unwrap();
        for d in 1..6 {
            let t = gd.table(d).unwrap();
            let total: f64 = t.iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let inv: f64 = t.iter().map(|x| gd.invariant(&x.0)).sum();
            assert!((inv - 1.0).abs() < 1e-12);
            for (w, m) in &t {
                let ext: f64 = a
                    .successors(*w.last().unwrap())
                    .map(|s| {
                        let mut x = w.clone();
                        x.push(s);
                        gd.mu(&x)
                    })
                    .sum();
                assert!((ext - m).abs() < 1e-11, "{w:?} {ext} {m}");
            }
        }
    }
}
