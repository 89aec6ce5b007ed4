//! Approximating a field with a continuous invariant density by smooth
//! fields preserving a smooth volume: mollify `h_0` and `X_0` at bandwidth
//! `1/k`, then correct the divergence for the metric `e^{h_k} g_0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{GridScalarField, GridVectorField};
use super::ops::{divergence, mollify, mollify_vector};
use super::poisson::{poisson_correct, PoissonOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoOptions {
    /// Mollifier bandwidths are `1/k`.
    pub ks: Vec<usize>,
    /// Largest accepted `sup |Div_{e^{h_0}} X_0|` on the grid.
    pub consistency_tol: f64,
    pub poisson: PoissonOptions,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            ks: vec![4, 8, 16],
            consistency_tol: 1e-2,
            poisson: PoissonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoRow {
    pub k: usize,
    pub bandwidth: f64,
    /// Discrete `C¹` distance `‖X_k - X_0‖`.
    pub c1_distance: f64,
    /// `sup |Div_{e^{h_k}} X_k|`.
    pub divergence: f64,
    /// `sup |Div_{e^{h_k}} Y_k|` before correction.
    pub divergence_before: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoReport {
    pub dims: Vec<usize>,
    /// `sup |Div_{e^{h_0}} X_0|`, zero up to discretization.
    pub consistency_residual: f64,
    pub rows: Vec<DemoRow>,
}

impl DemoReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,bandwidth,c1_distance,divergence_before,divergence,iterations\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.k, r.bandwidth, r.c1_distance, r.divergence_before, r.divergence, r.iterations
            ));
        }
        out
    }
}

pub fn invariant_volume_demo(x0: &GridVectorField, h0: &GridScalarField, opts: &DemoOptions) -> Result<DemoReport> {
    x0.same_grid(h0)?;
    let consistency = divergence(x0, Some(h0))?.sup_norm();
    if consistency > opts.consistency_tol {
        return Err(Error::Parameter(format!(
            "X_0 does not preserve e^(n h_0) dx: residual {consistency:e} exceeds {:e}",
            opts.consistency_tol
        )));
    }
    let mut rows = Vec::with_capacity(opts.ks.len());
    for &k in &opts.ks {
        if k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        let bw = 1.0 / k as f64;
        let hk = mollify(h0, bw)?;
        let yk = mollify_vector(x0, bw)?;
        let before = divergence(&yk, Some(&hk))?.sup_norm();
        let c = poisson_correct(&yk, &hk, opts.poisson)?;
        rows.push(DemoRow {
            k,
            bandwidth: bw,
            c1_distance: c.field.zip_map(x0, |a, b| a - b)?.c1_norm(),
            divergence: c.divergence,
            divergence_before: before,
            iterations: c.iterations,
        });
    }
    Ok(DemoReport {
        dims: h0.dims().to_vec(),
        consistency_residual: consistency,
        rows,
    })
}

/// `h_0` of the analytic test pair.
pub fn analytic_h0(x: &[f64]) -> f64 {
    let z = x.get(2).copied().unwrap_or(0.0);
    0.2 * (2.0 * PI * x[0]).sin() + 0.1 * (2.0 * PI * (x[1] + z)).cos()
}

/// `X_0 = e^{-n h_0} R` with `R = (1 + ∂ψ/∂y, -∂ψ/∂x, c)` divergence-free,
/// so that `n X_0 h_0 = -Div X_0`.
pub fn analytic_x0(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let z = x.get(2).copied().unwrap_or(0.0);
    // ψ = 0.15 sin(2π(x + y)) cos(2πz) / 2π.
    let s = 0.15 * (2.0 * PI * (x[0] + x[1])).cos() * (2.0 * PI * z).cos();
    let e = (-n * analytic_h0(x)).exp();
    let mut v = vec![e * (1.0 + s), -e * s];
    if x.len() == 3 {
        v.push(0.5 * e);
    }
    v
}

/// The analytic pair `(X_0, h_0)` sampled on `dims`.
pub fn analytic_pair(dims: &[usize]) -> Result<(GridVectorField, GridScalarField)> {
    Ok((
        GridVectorField::from_fn(dims, analytic_x0)?,
        GridScalarField::from_fn(dims, analytic_h0)?,
    ))
}
