//! Sparse nonnegative matrices and Perron eigen-solves.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row count above which matrix-vector products run in parallel.
const PAR_ROWS: usize = 4096;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets.
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        let row = |i: usize| -> f64 {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            s
        };
        if self.n >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, t)
    }
}

/// Leading eigen-data of a nonnegative matrix.
#[derive(Debug, Clone)]
pub struct Perron {
    /// Midpoint of the Collatz–Wielandt bracket.
    pub value: f64,
    /// Lower Collatz–Wielandt bound `min (Av)_i / v_i`.
    pub lower: f64,
    /// Upper Collatz–Wielandt bound `max (Av)_i / v_i`.
    pub upper: f64,
    /// Positive eigenvector, normalized to unit sum.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

impl Perron {
    /// Bound on `|log value - log rho|`.
    pub fn log_error(&self) -> f64 {
        (self.upper / self.lower).ln()
    }
}

/// Power iteration from the all-ones vector.
///
/// Stops once the Collatz–Wielandt bracket has relative width below `tol`.
/// For a primitive matrix the bracket always contains the spectral radius.
pub fn perron(m: &SparseMatrix, tol: f64, max_iter: usize) -> Result<Perron> {
    perron_from(m, None, tol, max_iter)
}

/// Power iteration from a caller-supplied positive start vector.
pub fn perron_from(
    m: &SparseMatrix,
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Perron> {
    let n = m.size();
    let mut v = match start {
        Some(s) if s.len() == n && s.iter().all(|&x| x > 0.0 && x.is_finite()) => s.to_vec(),
        _ => vec![1.0; n],
    };
    let mut w = vec![0.0; n];
    let mut best = f64::INFINITY;
    for it in 1..=max_iter {
        m.mul_into(&v, &mut w);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut positive = true;
        for i in 0..n {
            if v[i] > 0.0 {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            } else {
                positive = false;
            }
        }
        let scale: f64 = w.iter().sum();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::NoConvergence {
                what: "power iteration",
                iterations: it,
                residual: f64::NAN,
            });
        }
        if positive && lo > 0.0 {
            let width = (hi - lo) / lo;
            best = best.min(width);
            if width <= tol {
                let total: f64 = v.iter().sum();
                let vector: Vec<f64> = v.iter().map(|x| x / total).collect();
                return Ok(Perron {
                    value: 0.5 * (lo + hi),
                    lower: lo,
                    upper: hi,
                    vector,
                    iterations: it,
                });
            }
        }
        for i in 0..n {
            v[i] = w[i] / scale;
        }
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: max_iter,
        residual: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_radius() {
        let m = SparseMatrix::from_triplets(3, vec![]);
        assert_eq!(m.nnz(), 0);
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]);
        let p = perron(&m, 1e-13, 10_000).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.value - phi).abs() < 1e-12);
        assert!(p.lower <= phi + 1e-15 && phi <= p.upper + 1e-15);
        let ratio = p.vector[0] / p.vector[1];
        assert!((ratio - phi).abs() < 1e-10);
    }

    #[test]
    fn transpose_and_duplicates() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 2.0), (0, 1, 1.0), (1, 0, 5.0)]);
        let t = m.transpose();
        assert_eq!(t.mul(&[1.0, 1.0]), vec![5.0, 3.0]);
    }

    #[test]
    fn non_primitive_does_not_converge() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        // The bracket is already tight for the all-ones vector...
        assert!(perron(&m, 1e-12, 100).is_ok());
        // ...but a generic start oscillates forever.
        let r = perron_from(&m, Some(&[1.0, 2.0]), 1e-12, 100);
        assert!(r.is_err());
    }
}
