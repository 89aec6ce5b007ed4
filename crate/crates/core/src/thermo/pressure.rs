//! Topological pressure by partition sums and by the transfer matrix.

use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::linalg::{perron_from, Perron, SparseMatrix};
use crate::sft::{TransitionMatrix, Word, DEFAULT_WORD_BUDGET};

/// Largest power tried when looking for a mixing exponent.
pub const MIXING_SEARCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMethod {
    PartitionSum,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub method: PressureMethod,
    /// Truncation length for partition sums; potential depth for spectral.
    pub depth: usize,
    pub error_bound: f64,
}

/// Power-iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative width of the Collatz–Wielandt bracket at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500_000,
        }
    }
}

/// Transfer matrix on depth-`k` word states: entry `(w, w')` is `exp g(w)`
/// when `w' = w[1..]·j` is admissible.
///
/// Its spectral radius is `exp P(g)`; the right Perron vector is the
/// conformal measure on depth-`k` cylinders and the left one is the density.
pub fn transfer_matrix(a: &TransitionMatrix, g: &Potential) -> SparseMatrix {
    let k = g.depth();
    let words = g.words();
    let index = g.index();
    let mut t = Vec::with_capacity(words.len() * 2);
    let mut next: Word = vec![0; k];
    for (i, w) in words.iter().enumerate() {
        let weight = g.values()[i].exp();
        next[..k - 1].copy_from_slice(&w[1..]);
        for s in a.successors(w[k - 1]) {
            next[k - 1] = s;
            if let Some(j) = index.get(&next) {
                t.push((i, j, weight));
            }
        }
    }
    SparseMatrix::from_triplets(words.len(), t)
}

fn require_mixing(a: &TransitionMatrix) -> Result<usize> {
    a.mixing_exponent(MIXING_SEARCH)
        .ok_or(Error::NotMixing(MIXING_SEARCH))
}

/// Spectral pressure with an optional warm-start vector.
pub(crate) fn spectral_perron(
    a: &TransitionMatrix,
    g: &Potential,
    start: Option<&[f64]>,
    opts: SolverOptions,
) -> Result<Perron> {
    require_mixing(a)?;
    // Subtracting the mean keeps the iteration away from overflow.
    let shift = g.values().iter().sum::<f64>() / g.values().len() as f64;
    let q = transfer_matrix(a, &g.map(|v| v - shift));
    let mut p = perron_from(&q, start, opts.tol, opts.max_iter)?;
    let e = shift.exp();
    p.value *= e;
    p.lower *= e;
    p.upper *= e;
    Ok(p)
}

/// `log` of the spectral radius of the transfer matrix.
pub fn transfer_spectral_pressure(a: &TransitionMatrix, g: &Potential) -> Result<PressureEstimate> {
    transfer_spectral_pressure_with(a, g, SolverOptions::default())
}

pub fn transfer_spectral_pressure_with(
    a: &TransitionMatrix,
    g: &Potential,
    opts: SolverOptions,
) -> Result<PressureEstimate> {
    let p = spectral_perron(a, g, None, opts)?;
    Ok(PressureEstimate {
        value: p.value.ln(),
        method: PressureMethod::Spectral,
        depth: g.depth(),
        error_bound: p.log_error(),
    })
}

/// Log-domain accumulator for sums of exponentials.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    shift: f64,
    acc: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x > self.shift {
            self.acc = self.acc * (self.shift - x).exp() + 1.0;
            self.shift = x;
        } else {
            self.acc += (x - self.shift).exp();
        }
    }

    fn ln(&self) -> f64 {
        self.shift + self.acc.ln()
    }
}

/// Partition-sum estimate `(1/m) log sum_w exp sup_[w] S_m g`.
///
/// The value is an upper bound for the pressure (partition sums are
/// submultiplicative). For mixing `A` with exponent `m0`, concatenating
/// words through connectors of length `m0 - 1` gives the lower bound
/// `[log Z_inf + (m0 - 1) inf g] / (m + m0 - 1)`; the reported error bound is
/// the gap between the two. It is infinite when `A` is not mixing.
pub fn pressure_partition_sum(
    a: &TransitionMatrix,
    g: &Potential,
    m: usize,
) -> Result<PressureEstimate> {
    pressure_partition_sum_with_budget(a, g, m, DEFAULT_WORD_BUDGET)
}

pub fn pressure_partition_sum_with_budget(
    a: &TransitionMatrix,
    g: &Potential,
    m: usize,
    budget: u128,
) -> Result<PressureEstimate> {
    let k = g.depth();
    if m < k {
        return Err(Error::Parameter(format!(
            "truncation length {m} is below the potential depth {k}"
        )));
    }
    let total = a.word_count(m + k - 1);
    if total > budget {
        return Err(Error::Budget {
            requested: total,
            budget,
        });
    }
    let alive = a.extendable_symbols();
    let mut zsup = LogSum::new();
    let mut zinf = LogSum::new();
    let mut w: Word = Vec::with_capacity(m + k);

    // Extremes of the Birkhoff sum over completions of `w` to length `target`.
    fn extremes(
        a: &TransitionMatrix,
        g: &Potential,
        alive: &[bool],
        w: &mut Word,
        sum: f64,
        target: usize,
    ) -> (f64, f64) {
        if w.len() == target {
            return (sum, sum);
        }
        let k = g.depth();
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        let last = *w.last().unwrap();
        for s in a.successors(last) {
            if !alive[s] {
                continue;
            }
            w.push(s);
            let add = if w.len() >= k { g.eval(&w[w.len() - k..]) } else { 0.0 };
            let (h, l) = extremes(a, g, alive, w, sum + add, target);
            w.pop();
            hi = hi.max(h);
            lo = lo.min(l);
        }
        (hi, lo)
    }

    #[allow(clippy::too_many_arguments)]
    fn words(
        a: &TransitionMatrix,
        g: &Potential,
        alive: &[bool],
        w: &mut Word,
        sum: f64,
        m: usize,
        zsup: &mut LogSum,
        zinf: &mut LogSum,
    ) {
        let k = g.depth();
        if w.len() == m {
            let (hi, lo) = extremes(a, g, alive, w, sum, m + k - 1);
            zsup.add(hi);
            zinf.add(lo);
            return;
        }
        let cands: Vec<usize> = match w.last() {
            None => (0..a.size()).collect(),
            Some(&c) => a.successors(c).collect(),
        };
        for s in cands {
            if !alive[s] {
                continue;
            }
            w.push(s);
            let add = if w.len() >= k { g.eval(&w[w.len() - k..]) } else { 0.0 };
            words(a, g, alive, w, sum + add, m, zsup, zinf);
            w.pop();
        }
    }

    words(a, g, &alive, &mut w, 0.0, m, &mut zsup, &mut zinf);
    let upper = zsup.ln() / m as f64;
    let error_bound = match a.mixing_exponent(MIXING_SEARCH) {
        Some(m0) => {
            let lower = (zinf.ln() + (m0 as f64 - 1.0) * g.inf()) / (m + m0 - 1) as f64;
            (upper - lower).max(0.0)
        }
        None => f64::INFINITY,
    };
    Ok(PressureEstimate {
        value: upper,
        method: PressureMethod::PartitionSum,
        depth: m,
        error_bound,
    })
}

/// Per-state extremes of `S_m g` for `m = 1..=max_m`, via dynamic programming
/// over depth-`k` word states. Returns `(inf S_m g, sup S_m g)` for each `m`.
pub fn birkhoff_extremes(a: &TransitionMatrix, g: &Potential, max_m: usize) -> Vec<(f64, f64)> {
    let q = transfer_matrix(a, g);
    let vals = g.values();
    let mut lo = vals.to_vec();
    let mut hi = vals.to_vec();
    let mut out = Vec::with_capacity(max_m);
    for m in 1..=max_m {
        out.push((
            lo.iter().copied().fold(f64::INFINITY, f64::min),
            hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ));
        if m == max_m {
            break;
        }
        let mut nlo = vec![0.0; lo.len()];
        let mut nhi = vec![0.0; hi.len()];
        for i in 0..lo.len() {
            let (mut l, mut h) = (f64::INFINITY, f64::NEG_INFINITY);
            for (j, _) in q.row(i) {
                l = l.min(lo[j]);
                h = h.max(hi[j]);
            }
            nlo[i] = vals[i] + l;
            nhi[i] = vals[i] + h;
        }
        lo = nlo;
        hi = nhi;
    }
    out
}

/// The `m`-block presentation of `(A, S_m g)`: the pressure of the returned
/// pair is `m * P(g)`.
pub fn iterate_system(
    a: &TransitionMatrix,
    g: &Potential,
    m: usize,
) -> Result<(TransitionMatrix, Potential)> {
    if m == 0 {
        return Err(Error::EmptyDepth);
    }
    let (b, blocks) = a.block_matrix(m)?;
    let k = g.depth();
    let depth = (m + k - 1).div_ceil(m);
    let gm = Potential::from_fn(&b, depth, |bw| {
        let flat: Vec<usize> = bw.iter().flat_map(|&i| blocks[i].iter().copied()).collect();
        g.birkhoff(&flat, m)
    })?;
    Ok((b, gm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_zero_potential() {
        let a = TransitionMatrix::full_shift(2);
        let g = Potential::constant(&a, 0.0).unwrap();
        for m in [1, 4, 9] {
            let p = pressure_partition_sum(&a, &g, m).unwrap();
            assert!((p.value - 2f64.ln()).abs() < 1e-14);
        }
        let s = transfer_spectral_pressure(&a, &g).unwrap();
        assert!((s.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_partition_sum_is_word_count() {
        let a = TransitionMatrix::golden_mean();
        let g = Potential::constant(&a, 0.0).unwrap();
        let p = pressure_partition_sum(&a, &g, 10).unwrap();
        let n = a.enumerate_words(10).unwrap().len() as f64;
        assert!((p.value - n.ln() / 10.0).abs() < 1e-14);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.value - phi.ln()).abs() < 0.07);
        assert!(p.value - p.error_bound <= phi.ln() + 1e-12);
    }

    #[test]
    fn depth_one_closed_form() {
        let a = TransitionMatrix::full_shift(2);
        let (x, y) = (0.3, -1.2);
        let g = Potential::new(&a, 1, vec![x, y]).unwrap();
        let s = transfer_spectral_pressure(&a, &g).unwrap();
        assert!((s.value - (x.exp() + y.exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn constants_shift_pressure() {
        let a = TransitionMatrix::golden_mean();
        let p0 = transfer_spectral_pressure(&a, &Potential::constant(&a, 0.0).unwrap()).unwrap();
        let pc = pressure_partition_sum(&a, &Potential::constant(&a, 0.7).unwrap(), 8).unwrap();
        assert!((pc.value - (p0.value + 0.7)).abs() <= pc.error_bound + 1e-12);
    }

    #[test]
    fn non_mixing_is_rejected() {
        let a = TransitionMatrix::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let g = Potential::constant(&a, 0.0).unwrap();
        assert!(matches!(transfer_spectral_pressure(&a, &g), Err(Error::NotMixing(_))));
        assert!(pressure_partition_sum(&a, &g, 4).unwrap().error_bound.is_infinite());
    }

    #[test]
    fn budget_is_enforced() {
        let a = TransitionMatrix::full_shift(3);
        let g = Potential::constant(&a, 0.0).unwrap();
        assert!(matches!(
            pressure_partition_sum_with_budget(&a, &g, 12, 1000),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn extremes_match_enumeration() {
        let a = TransitionMatrix::golden_mean();
        let g = Potential::from_fn(&a, 2, |w| w[0] as f64 - 0.5 * w[1] as f64 + 0.1).unwrap();
        let ex = birkhoff_extremes(&a, &g, 5);
        for (m, &(lo, hi)) in ex.iter().enumerate().map(|(i, e)| (i + 1, e)) {
            let sums: Vec<f64> = a
                .enumerate_words(m + 1)
                .unwrap()
                .iter()
                .map(|w| g.birkhoff(w, m))
                .collect();
            let blo = sums.iter().copied().fold(f64::INFINITY, f64::min);
            let bhi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((lo - blo).abs() < 1e-12 && (hi - bhi).abs() < 1e-12);
        }
    }
}
