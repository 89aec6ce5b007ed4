//! Difference operators for the conformal metric `e^h g_0` on the flat
//! torus, and periodic mollification.
//!
//! Lengths scale by `e^h`, so the volume form is `e^{nh} dx` and
//! `Div_{e^h g_0} X = e^{-nh} ∇·(e^{nh} X) = ∇·X + n X·∇h`. All derivatives
//! are centered second-order differences; the weighted divergence is taken
//! in the conservative form so that it is the exact negative adjoint of the
//! weighted gradient.

use rayon::prelude::*;

use super::grid::{GridScalarField, GridVectorField};
use crate::error::{Error, Result};

/// `Div_{e^h g_0} X`, or the flat divergence when `h` is `None`.
pub fn divergence(x: &GridVectorField, h: Option<&GridScalarField>) -> Result<GridScalarField> {
    let first = x.component(0);
    if let Some(h) = h {
        x.same_grid(h)?;
    }
    let n = x.ndim();
    let nf = n as f64;
    let len = first.len();
    let data = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for a in 0..n {
                let c = x.component(a).values();
                let (lo, hi) = first.neighbours(i, a);
                let h2 = 2.0 * first.spacing(a);
                s += match h {
                    None => (c[hi] - c[lo]) / h2,
                    Some(h) => {
                        let hv = h.values();
                        let (wl, wh) = ((nf * (hv[lo] - hv[i])).exp(), (nf * (hv[hi] - hv[i])).exp());
                        (wh * c[hi] - wl * c[lo]) / h2
                    }
                };
            }
            s
        })
        .collect();
    GridScalarField::from_vec(first.dims(), data)
}

/// `Grad_{e^h g_0} f = e^{-2h} ∇f`.
pub fn weighted_gradient(f: &GridScalarField, h: &GridScalarField) -> Result<GridVectorField> {
    f.same_grid(h)?;
    let comps = (0..f.ndim())
        .map(|a| f.centered_diff(a).zip_map(h, |d, hv| (-2.0 * hv).exp() * d))
        .collect::<Result<Vec<_>>>()?;
    GridVectorField::new(comps)
}

/// `Δ_h f = Div_{e^h g_0} Grad_{e^h g_0} f`, self-adjoint for the inner
/// product weighted by `e^{nh}`.
pub fn weighted_laplacian(f: &GridScalarField, h: &GridScalarField) -> Result<GridScalarField> {
    divergence(&weighted_gradient(f, h)?, Some(h))
}

/// `Div_{e^h} X - Div X - n X·∇h` with centered `∇h`; vanishes to second
/// order in the grid spacing.
pub fn conformal_residual(x: &GridVectorField, h: &GridScalarField) -> Result<GridScalarField> {
    let weighted = divergence(x, Some(h))?;
    let flat = divergence(x, None)?;
    let nf = x.ndim() as f64;
    let mut out = weighted.zip_map(&flat, |a, b| a - b)?;
    for a in 0..x.ndim() {
        let dh = h.centered_diff(a);
        let term = x.component(a).zip_map(&dh, |c, d| nf * c * d)?;
        out = out.zip_map(&term, |o, t| o - t)?;
    }
    Ok(out)
}

/// `exp(-1 / (1 - s²))` on `|s| < 1`.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Discrete unit-mass kernel of radius `bandwidth` on an axis of `m` nodes.
fn kernel(bandwidth: f64, m: usize) -> Result<Vec<(isize, f64)>> {
    let r = bandwidth * m as f64;
    if !(r >= 2.0) {
        return Err(Error::Parameter(format!(
            "bandwidth {bandwidth} spans {r:.3} cells; at least 2 are needed"
        )));
    }
    let k = r.ceil() as isize;
    let mut w: Vec<(isize, f64)> = (-k..=k)
        .map(|j| (j, bump(j as f64 / r)))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    let total: f64 = w.iter().map(|&(_, v)| v).sum();
    for e in &mut w {
        e.1 /= total;
    }
    Ok(w)
}

/// Periodic convolution with the product of one-dimensional bumps of
/// radius `bandwidth`, each normalized to unit discrete mass.
pub fn mollify(f: &GridScalarField, bandwidth: f64) -> Result<GridScalarField> {
    let dims = f.dims().to_vec();
    let mut cur = f.clone();
    for (a, &m) in dims.iter().enumerate() {
        let w = kernel(bandwidth, m)?;
        let stride: usize = dims[a + 1..].iter().product();
        let src = cur.values();
        let data: Vec<f64> = (0..src.len())
            .into_par_iter()
            .map(|i| {
                let k = (i / stride) % m;
                let base = i - k * stride;
                w.iter()
                    .map(|&(j, wj)| {
                        let kk = (k as isize + j).rem_euclid(m as isize) as usize;
                        wj * src[base + kk * stride]
                    })
                    .sum()
            })
            .collect();
        cur = GridScalarField::from_vec(&dims, data)?;
    }
    Ok(cur)
}

pub fn mollify_vector(x: &GridVectorField, bandwidth: f64) -> Result<GridVectorField> {
    let comps = x
        .components()
        .iter()
        .map(|c| mollify(c, bandwidth))
        .collect::<Result<Vec<_>>>()?;
    GridVectorField::new(comps)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::volume::grid::pairwise_sum;

    fn wavy(dims: &[usize]) -> GridScalarField {
        GridScalarField::from_fn(dims, |x| {
            0.3 * (2.0 * PI * x[0]).sin() + 0.2 * (2.0 * PI * (x[1] + 2.0 * x[0])).cos()
                + x.get(2).map_or(0.0, |z| 0.1 * (2.0 * PI * z).sin())
        })
        .unwrap()
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let x = GridVectorField::from_fn(&[16, 12], |_| vec![1.5, -0.5]).unwrap();
        assert!(divergence(&x, None).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn rotational_field_is_discretely_divergence_free() {
        let psi = |x: &[f64]| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos();
        let dims = [32, 48];
        let p = GridScalarField::from_fn(&dims, psi).unwrap();
        let x = GridVectorField::new(vec![p.centered_diff(1), p.centered_diff(0).map(|v| -v)]).unwrap();
        assert!(divergence(&x, None).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn sine_divergence_converges_at_second_order() {
        let err = |m: usize| {
            let x = GridVectorField::from_fn(&[m, m], |x| vec![(2.0 * PI * x[0]).sin(), 0.0]).unwrap();
            let exact = GridScalarField::from_fn(&[m, m], |x| 2.0 * PI * (2.0 * PI * x[0]).cos()).unwrap();
            divergence(&x, None).unwrap().zip_map(&exact, |a, b| a - b).unwrap().sup_norm()
        };
        for m in [16, 32, 64] {
            let ratio = err(m) / err(2 * m);
            assert!((3.9..4.1).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn conformal_rule_holds_to_second_order() {
        let res = |m: usize| {
            let dims = [m, m];
            let x = GridVectorField::from_fn(&dims, |x| {
                vec![1.0 + 0.5 * (2.0 * PI * x[1]).sin(), (2.0 * PI * (x[0] - x[1])).cos()]
            })
            .unwrap();
            conformal_residual(&x, &wavy(&dims)).unwrap().sup_norm()
        };
        for m in [32, 64, 128] {
            let ratio = res(m) / res(2 * m);
            assert!((3.5..4.5).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn weighted_laplacian_is_self_adjoint() {
        for dims in [vec![24, 20], vec![10, 12, 8]] {
            let h = wavy(&dims);
            let f = GridScalarField::from_fn(&dims, |x| (x[0] * 7.0).sin() * x[1]).unwrap();
            let g = GridScalarField::from_fn(&dims, |x| (x[1] * 5.0 + x[0]).cos()).unwrap();
            let nf = dims.len() as f64;
            let inner = |a: &GridScalarField, b: &GridScalarField| {
                let v: Vec<f64> = (0..a.len())
                    .map(|i| (nf * h.values()[i]).exp() * a.values()[i] * b.values()[i])
                    .collect();
                pairwise_sum(&v)
            };
            let lf = weighted_laplacian(&f, &h).unwrap();
            let lg = weighted_laplacian(&g, &h).unwrap();
            let (a, b) = (inner(&lf, &g), inner(&f, &lg));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn mollifier_preserves_constants_and_mean() {
        let dims = [40, 36];
        let c = GridScalarField::from_fn(&dims, |_| 2.5).unwrap();
        let mc = mollify(&c, 0.1).unwrap();
        assert!(mc.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
        let f = wavy(&dims).map(|v| v + 1.0);
        let mf = mollify(&f, 0.13).unwrap();
        assert!((mf.mean() - f.mean()).abs() < 1e-12);
        assert!(mf.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn mollifier_is_linear_and_converges() {
        let dims = [128, 128];
        let f = wavy(&dims);
        let g = GridScalarField::from_fn(&dims, |x| x[0] * (1.0 - x[0]) * x[1]).unwrap();
        let lhs = mollify(&f.zip_map(&g, |a, b| 2.0 * a - b).unwrap(), 0.05).unwrap();
        let rhs = mollify(&f, 0.05).unwrap().zip_map(&mollify(&g, 0.05).unwrap(), |a, b| 2.0 * a - b).unwrap();
        assert!(lhs.zip_map(&rhs, |a, b| a - b).unwrap().sup_norm() < 1e-13);
        let dist = |b: f64| mollify(&f, b).unwrap().zip_map(&f, |a, c| a - c).unwrap().sup_norm();
        let ds: Vec<f64> = [0.2, 0.1, 0.05, 0.025].into_iter().map(dist).collect();
        for w in ds.windows(2) {
            assert!(w[1] < 0.5 * w[0], "{ds:?}");
        }
    }

    #[test]
    fn bandwidth_below_two_cells_is_rejected() {
        let f = GridScalarField::zeros(&[32, 32]).unwrap();
        assert!(matches!(mollify(&f, 1.5 / 32.0), Err(Error::Parameter(_))));
        assert!(mollify(&f, 2.0 / 32.0).is_ok());
    }
}
