//! The reparametrization `η_p(y) = ∫_0^y d(ν_p ∘ L_p)` and chart transitions
//! between reparametrized leaves.

use serde::{Deserialize, Serialize};

use super::family::{LeafMeasureFamily, LeafSegment, SegmentMeasure};
use super::verify::{relative_offset, same_chart};
use crate::coding::{u, unstable_lift, FlowPoint};
use crate::error::{Error, Result};

/// Dyadic fit of Hölder exponents of `η` and `η^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    /// `η(y + s) - η(y) ≲ s^forward`.
    pub forward: f64,
    /// `|η^{-1}(z + δ) - η^{-1}(z)| ≲ δ^inverse`.
    pub inverse: f64,
    /// `(s, max Δη, min Δη)` per dyadic scale.
    pub scales: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reparametrization {
    pub segment: LeafSegment,
    /// `η` at the `N + 1` cell knots.
    pub eta: Vec<f64>,
    pub holder: HolderFit,
}

pub fn reparametrize(m: &SegmentMeasure) -> Result<Reparametrization> {
    if let Some(j) = m.masses.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Integrity(format!("cell {j} has zero mass")));
    }
    let c0 = m.cumulative(0.0);
    let eta: Vec<f64> = m.cum.iter().map(|c| c - c0).collect();
    let holder = fit_holder(&eta, m.segment.cells);
    Ok(Reparametrization {
        segment: m.segment,
        eta,
        holder,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn fit_holder(eta: &[f64], n: usize) -> HolderFit {
    let levels = (n as f64).log2().floor() as usize;
    let mut scales = Vec::new();
    for j in 1..=levels.saturating_sub(2).min(12) {
        let w = n >> j;
        let mut hi: f64 = 0.0;
        let mut lo = f64::INFINITY;
        for a in (0..n).step_by(w) {
            let d = eta[(a + w).min(n)] - eta[a];
            hi = hi.max(d);
            lo = lo.min(d);
        }
        scales.push((2.0 * w as f64 / n as f64, hi, lo));
    }
    if scales.len() < 2 {
        return HolderFit {
            forward: f64::NAN,
            inverse: f64::NAN,
            scales,
        };
    }
    let ls: Vec<f64> = scales.iter().map(|s| s.0.ln()).collect();
    let hi: Vec<f64> = scales.iter().map(|s| s.1.ln()).collect();
    let lo: Vec<f64> = scales.iter().map(|s| s.2.ln()).collect();
    HolderFit {
        forward: slope(&ls, &hi),
        inverse: 1.0 / slope(&ls, &lo),
        scales,
    }
}

impl Reparametrization {
    /// `η(v)`, linear between knots.
    pub fn eval(&self, v: f64) -> f64 {
        let n = self.segment.cells;
        let x = self.segment.index(v).clamp(0.0, n as f64);
        let j = (x.floor() as usize).min(n - 1);
        self.eta[j] + (x - j as f64) * (self.eta[j + 1] - self.eta[j])
    }

    /// `η^{-1}(z)` by monotone interpolation.
    pub fn inverse(&self, z: f64) -> f64 {
        let n = self.segment.cells;
        let j = self.eta.partition_point(|&e| e <= z).clamp(1, n) - 1;
        let d = self.eta[j + 1] - self.eta[j];
        let frac = ((z - self.eta[j]) / d).clamp(0.0, 1.0);
        self.segment.knot(j) + frac * self.segment.cell_width()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.eta.windows(2).all(|w| w[1] > w[0])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartTransitionReport {
    /// `(d_u, d_s)` of `q` relative to `p`.
    pub offset: [f64; 2],
    pub samples: usize,
    pub skipped: usize,
    /// Largest `|ΔT - ∫ exp(ρ u) dz|`, in mean cell masses.
    pub max_residual_cells: f64,
}

/// Compares increments of `T = η_p ∘ φ_{qp} ∘ η_q^{-1}` with the integral of
/// the holonomy derivative `exp(ρ u(h(y), y))` over `samples` windows of
/// `window_cells` cells; windows crossing a chart boundary are skipped.
pub fn check_chart_transition(
    fam: &LeafMeasureFamily,
    p: FlowPoint,
    q: FlowPoint,
    samples: usize,
    window_cells: usize,
) -> Result<ChartTransitionReport> {
    let sys = fam.sys;
    let ell = fam.opts.half_length;
    let (p, _) = sys.normalize(p.x, p.h);
    let (qk, d) = relative_offset(fam, p, q)?;
    let mp = fam.measure_at(p)?;
    let mq = fam.measure(&fam.segment_through(qk, ell))?;
    let (ep, eq) = (reparametrize(&mp)?, reparametrize(&mq)?);
    let b = d[0] / ell;
    let width = window_cells as f64 * mq.segment.cell_width();
    let lo = (-1.0f64).max(-1.0 - b) + 1e-9;
    let hi = 1.0f64.min(1.0 - b) - width - 1e-9;
    if hi <= lo || samples == 0 {
        return Err(Error::Atlas("charts of p and q do not overlap".into()));
    }
    let rho = fam.rho();
    let mut worst: f64 = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for s in 0..samples {
        let va = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
        let vb = va + width;
        if !same_chart(&mq, va, vb, &mp, va + b, vb + b) {
            skipped += 1;
            continue;
        }
        let (za, zb) = (eq.eval(va), eq.eval(vb));
        let dt = ep.eval(eq.inverse(zb) + b) - ep.eval(eq.inverse(za) + b);
        let seg = &mq.segment;
        let (ia, ib) = (seg.index(va), seg.index(vb));
        let mut integral = 0.0;
        for j in ia.floor() as usize..(ib.ceil() as usize).min(seg.cells) {
            let a = seg.knot(j).max(va);
            let c = seg.knot(j + 1).min(vb);
            if c <= a {
                continue;
            }
            let mid = 0.5 * (a + c);
            let y = seg.point(sys, mid);
            let hy = unstable_lift(sys, p, (mid + b) * ell);
            let (y, _) = sys.normalize(y.x, y.h);
            let (hy, _) = sys.normalize(hy.x, hy.h);
            let w = u(sys, fam.f, hy, y, &fam.opts.u)?.value;
            integral += (rho * w).exp() * mq.mass(a, c);
        }
        let cell = mq.mass(va, vb) / window_cells as f64;
        worst = worst.max((dt - integral).abs() / cell);
        used += 1;
    }
    Ok(ChartTransitionReport {
        offset: d,
        samples: used,
        skipped,
        max_residual_cells: worst,
    })
}
