//! Gradient correction `X = Y + Grad_h f` with `Δ_h f = -Div_h Y`, solved
//! by conjugate gradients in the `e^{nh}`-weighted inner product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{pairwise_sum, GridScalarField, GridVectorField};
use super::ops::{divergence, weighted_gradient, weighted_laplacian};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoissonOptions {
    /// Sup-norm bound on the residual of `Δ_h f = -Div_h Y`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Correction {
    pub field: GridVectorField,
    pub potential: GridScalarField,
    pub iterations: usize,
    /// Sup norm of the final residual.
    pub residual: f64,
    /// Largest weighted mean removed from the right-hand side.
    pub projected: f64,
    /// Sup norm of `Div_h X`.
    pub divergence: f64,
}

/// Weighted inner product `Σ ω a b`, reduced in a fixed order.
fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let p: Vec<f64> = w.par_iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).collect();
    pairwise_sum(&p)
}

/// Parity class of every node: the kernel of the centered gradient
/// consists of functions of `i_a mod 2` on axes with an even node count.
fn parity_classes(f: &GridScalarField) -> (Vec<usize>, usize) {
    let dims = f.dims().to_vec();
    let even: Vec<bool> = dims.iter().map(|m| m % 2 == 0).collect();
    let count = 1usize << even.iter().filter(|&&e| e).count();
    let classes = (0..f.len())
        .map(|mut i| {
            let mut c = 0;
            for a in (0..dims.len()).rev() {
                let k = i % dims[a];
                i /= dims[a];
                if even[a] {
                    c = 2 * c + k % 2;
                }
            }
            c
        })
        .collect();
    (classes, count)
}

/// Removes the weighted mean on every parity class; returns the largest
/// mean removed.
fn project(b: &mut [f64], w: &[f64], classes: &[usize], count: usize) -> f64 {
    let mut num = vec![Vec::new(); count];
    let mut den = vec![Vec::new(); count];
    for i in 0..b.len() {
        num[classes[i]].push(w[i] * b[i]);
        den[classes[i]].push(w[i]);
    }
    let means: Vec<f64> = (0..count).map(|c| pairwise_sum(&num[c]) / pairwise_sum(&den[c])).collect();
    for (bi, &c) in b.iter_mut().zip(classes) {
        *bi -= means[c];
    }
    means.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn poisson_correct(y: &GridVectorField, h: &GridScalarField, opts: PoissonOptions) -> Result<Correction> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {} must be positive", opts.tol)));
    }
    y.same_grid(h)?;
    let dims = h.dims().to_vec();
    let nf = dims.len() as f64;
    let hmax = h.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = h.values().iter().map(|v| (nf * (v - hmax)).exp()).collect();
    let (classes, count) = parity_classes(h);

    // With A = -Δ_h, A f = Div_h Y gives Div_h (Y + Grad_h f) = 0.
    let mut b = divergence(y, Some(h))?.into_values();
    let projected = project(&mut b, &w, &classes, count);
    let apply = |f: &[f64]| -> Result<Vec<f64>> {
        let lf = weighted_laplacian(&GridScalarField::from_vec(&dims, f.to_vec())?, h)?;
        Ok(lf.into_values().into_iter().map(|v| -v).collect())
    };

    let n = b.len();
    let mut f = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&w, &r, &r);
    let mut iterations = 0;
    let mut residual = sup(&r);
    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                what: "conjugate gradients",
                iterations,
                residual,
            });
        }
        iterations += 1;
        let ap = apply(&p)?;
        let pap = dot(&w, &p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        f.par_iter_mut().zip(&p).for_each(|(fi, pi)| *fi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        residual = sup(&r);
        if residual <= opts.tol {
            // Confirm against the true residual before stopping.
            let af = apply(&f)?;
            r = b.iter().zip(&af).map(|(b, a)| b - a).collect();
            residual = sup(&r);
            if residual > opts.tol {
                p.clone_from(&r);
                rr = dot(&w, &r, &r);
                continue;
            }
            break;
        }
        let rr_new = dot(&w, &r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }

    let potential = GridScalarField::from_vec(&dims, f)?;
    let grad = weighted_gradient(&potential, h)?;
    let field = y.zip_map(&grad, |a, g| a + g)?;
    let div = divergence(&field, Some(h))?.sup_norm();
    Ok(Correction {
        field,
        potential,
        iterations,
        residual,
        projected,
        divergence: div,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn weight(dims: &[usize]) -> GridScalarField {
        GridScalarField::from_fn(dims, |x| {
            0.25 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + x.get(2).map_or(0.0, |z| 0.1 * (2.0 * PI * z).cos())
        })
        .unwrap()
    }

    fn generic_field(dims: &[usize]) -> GridVectorField {
        GridVectorField::from_fn(dims, |x| {
            let z = x.get(2).copied().unwrap_or(0.0);
            let mut v = vec![
                1.0 + 0.4 * (2.0 * PI * x[1]).sin() + 0.3 * (2.0 * PI * x[0]).cos(),
                0.2 * (2.0 * PI * (x[0] + z)).sin() - 0.1 * (4.0 * PI * x[1]).cos(),
            ];
            if x.len() == 3 {
                v.push(0.5 + 0.2 * (2.0 * PI * (z - x[1])).cos());
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn corrected_fields_are_divergence_free() {
        for dims in [vec![64, 64], vec![64, 64, 64]] {
            let h = weight(&dims);
            let c = poisson_correct(&generic_field(&dims), &h, PoissonOptions::default()).unwrap();
            assert!(c.residual <= 1e-10);
            assert!(c.divergence <= 1e-8, "{dims:?}: {}", c.divergence);
        }
    }

    #[test]
    fn divergence_free_input_is_unchanged() {
        let dims = [48, 40];
        let h = weight(&dims);
        let c0 = poisson_correct(&generic_field(&dims), &h, PoissonOptions::default()).unwrap();
        let c1 = poisson_correct(&c0.field, &h, PoissonOptions::default()).unwrap();
        let d = c1.field.zip_map(&c0.field, |a, b| a - b).unwrap().sup_norm();
        assert!(d <= 1e-8, "{d}");
    }

    #[test]
    fn gradient_field_reduces_to_its_harmonic_part() {
        // Y = (0.7, -0.2) + ∇(sin 2πx cos 2πy).
        let err = |m: usize| {
            let dims = [m, m];
            let y = GridVectorField::from_fn(&dims, |x| {
                vec![
                    0.7 + 2.0 * PI * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos(),
                    -0.2 - 2.0 * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin(),
                ]
            })
            .unwrap();
            let h = GridScalarField::zeros(&dims).unwrap();
            let c = poisson_correct(&y, &h, PoissonOptions::default()).unwrap();
            let target = GridVectorField::from_fn(&dims, |_| vec![0.7, -0.2]).unwrap();
            c.field.zip_map(&target, |a, b| a - b).unwrap().sup_norm()
        };
        // A single Fourier mode lies in the range of the discrete gradient.
        for m in [32, 64] {
            assert!(err(m) < 1e-10, "{}", err(m));
        }
    }

    #[test]
    fn correction_is_linear_in_the_divergent_part() {
        let dims = [48, 48];
        let h = weight(&dims);
        let free = poisson_correct(&generic_field(&dims), &h, PoissonOptions::default()).unwrap().field;
        let bump = GridVectorField::from_fn(&dims, |x| {
            vec![(2.0 * PI * x[0]).sin(), (2.0 * PI * (x[0] + x[1])).cos()]
        })
        .unwrap();
        let dist = |eps: f64| {
            let y = free.zip_map(&bump, |a, b| a + eps * b).unwrap();
            let c = poisson_correct(&y, &h, PoissonOptions::default()).unwrap();
            c.field.zip_map(&y, |a, b| a - b).unwrap().c1_norm()
        };
        let (d1, d2) = (dist(1e-2), dist(2e-2));
        assert!(d1 > 0.0);
        assert!((d2 / d1 - 2.0).abs() < 1e-4, "{d1} {d2}");
    }

    #[test]
    fn odd_grids_have_only_constant_kernel() {
        let h = GridScalarField::zeros(&[5, 6, 7]).unwrap();
        assert_eq!(parity_classes(&h).1, 2);
        let c = poisson_correct(&generic_field(&[15, 17]), &GridScalarField::zeros(&[15, 17]).unwrap(), PoissonOptions::default()).unwrap();
        assert!(c.divergence <= 1e-8);
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let dims = [32, 32];
        let opts = PoissonOptions { tol: 1e-10, max_iter: 2 };
        let e = poisson_correct(&generic_field(&dims), &weight(&dims), opts);
        assert!(matches!(e, Err(Error::NoConvergence { .. })));
    }
}
