//! The root `rho` of `s -> P(-s g)` for eventually positive `g`.

use serde::{Deserialize, Serialize};

use super::potential::Potential;
use super::pressure::{birkhoff_extremes, spectral_perron, SolverOptions};
use crate::error::{Error, Result};
use crate::sft::TransitionMatrix;

#[derive(Debug, Clone, Copy)]
pub struct RhoOptions {
    /// Largest Birkhoff length tried when checking eventual positivity.
    pub max_steps: usize,
    /// Required `|P(-rho g)|`.
    pub tol: f64,
    /// Grid points used to confirm strict decrease on the bracket.
    pub monotone_grid: usize,
    pub solver: SolverOptions,
}

impl Default for RhoOptions {
    fn default() -> Self {
        Self {
            max_steps: 64,
            tol: 1e-10,
            monotone_grid: 9,
            solver: SolverOptions {
                tol: 1e-13,
                max_iter: 1_000_000,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rho {
    pub value: f64,
    /// `P(-value * g)`.
    pub residual: f64,
    /// Initial bracket `[m P(0) / sup S_m g, m P(0) / inf S_m g]`.
    pub bracket: (f64, f64),
    /// Birkhoff length `m` at which `inf S_m g > 0`.
    pub steps: usize,
}

pub fn find_rho(a: &TransitionMatrix, g: &Potential) -> Result<Rho> {
    find_rho_with(a, g, RhoOptions::default())
}

pub fn find_rho_with(a: &TransitionMatrix, g: &Potential, opts: RhoOptions) -> Result<Rho> {
    let ext = birkhoff_extremes(a, g, opts.max_steps);
    let (m, (lo, hi)) = ext
        .iter()
        .enumerate()
        .find(|(_, e)| e.0 > 0.0)
        .map(|(i, &e)| (i + 1, e))
        .ok_or(Error::NotEventuallyPositive(opts.max_steps))?;

    let mut warm: Option<Vec<f64>> = None;
    let mut pressure = |s: f64| -> Result<f64> {
        let p = spectral_perron(a, &g.scale(-s), warm.as_deref(), opts.solver)?;
        let v = p.value.ln();
        warm = Some(p.vector);
        Ok(v)
    };

    let p0 = pressure(0.0)?;
    if !(p0 > 0.0) {
        return Err(Error::Bracket(format!("P(0) = {p0} is not positive")));
    }
    let (mut a_lo, mut a_hi) = (m as f64 * p0 / hi, m as f64 * p0 / lo);
    let bracket = (a_lo, a_hi);
    let (f_lo, f_hi) = (pressure(a_lo)?, pressure(a_hi)?);
    if f_lo < -opts.tol || f_hi > opts.tol {
        return Err(Error::Bracket(format!(
            "P(-s g) does not change sign on [{a_lo}, {a_hi}] ({f_lo}, {f_hi})"
        )));
    }

    let n = opts.monotone_grid.max(2);
    let mut prev = f64::INFINITY;
    for i in 0..n {
        let s = a_lo + (a_hi - a_lo) * i as f64 / (n - 1) as f64;
        let v = pressure(s)?;
        if a_hi > a_lo && v >= prev {
            return Err(Error::Bracket(format!(
                "P(-s g) is not strictly decreasing near s = {s}"
            )));
        }
        prev = v;
    }

    for _ in 0..200 {
        let mid = 0.5 * (a_lo + a_hi);
        if mid <= a_lo || mid >= a_hi {
            break;
        }
        let v = pressure(mid)?;
        if v > 0.0 {
            a_lo = mid;
        } else {
            a_hi = mid;
        }
        if a_hi - a_lo <= 1e-15 * a_hi {
            break;
        }
    }
    let value = 0.5 * (a_lo + a_hi);
    let residual = pressure(value)?;
    if residual.abs() > opts.tol {
        return Err(Error::NoConvergence {
            what: "rho bisection",
            iterations: 200,
            residual: residual.abs(),
        });
    }
    Ok(Rho {
        value,
        residual,
        bracket,
        steps: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::transfer_spectral_pressure;

    #[test]
    fn constant_potential() {
        let a = TransitionMatrix::golden_mean();
        let c = 0.37;
        let r = find_rho(&a, &Potential::constant(&a, c).unwrap()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r.value - phi.ln() / c).abs() < 1e-10);
    }

    #[test]
    fn eventually_positive_only() {
        let a = TransitionMatrix::full_shift(2);
        let g = Potential::from_fn(&a, 2, |w| if w == [0, 1] { -0.5 } else { 1.0 }).unwrap();
        let r = find_rho(&a, &g).unwrap();
        assert_eq!(r.steps, 2);
        let p = transfer_spectral_pressure(&a, &g.scale(-r.value)).unwrap();
        assert!(p.value.abs() < 1e-10);
        let neg = Potential::new(&a, 1, vec![1.0, -1.0]).unwrap();
        assert!(matches!(find_rho(&a, &neg), Err(Error::NotEventuallyPositive(_))));
    }
}
