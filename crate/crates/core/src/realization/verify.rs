//! Numerical checks of the realization: Radon–Nikodym derivatives along
//! the flow and the stable holonomy, the deformed transverse cocycle, chart
//! overlaps and the value of `ρ` for the contraction rate.
//!
//! Derivatives are estimated on windows that are images of cylinders
//! `π_A([ξ_0 … ξ_{d-1}])` around the anchor, so that the discretized `μ'`
//! masses on both sides are exact cylinder sums.

use serde::{Deserialize, Serialize};

use super::family::{Chart, LeafMeasureFamily, MuTable, SegmentMeasure};
use super::reparam::reparametrize;
use crate::coding::{
    alpha, f_a_potential, itinerary, orbit_integral, u, unstable_lift, ContractionRate, FlowPoint,
    ItineraryOptions, MarkovPartition, SuspensionSystem, TrigPoly, TrigTerm, UOptions,
};
use crate::error::{Error, Result};
use crate::sft::Word;
use crate::thermo::find_rho;

const ALIGN_TOL: f64 = 1e-9;

/// Log mass ratio on one cylinder window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub depth: usize,
    pub v: [f64; 2],
    pub log_ratio: f64,
}

/// Log-derivative estimates on nested windows, finest last, with the
/// Richardson extrapolation `(λ E(d) - E(d-1)) / (λ - 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSeries {
    pub windows: Vec<WindowEstimate>,
    pub finest: f64,
    pub extrapolated: f64,
}

fn relative_error(est: f64, exact: f64) -> f64 {
    if est == exact {
        0.0
    } else {
        (est - exact).abs() / exact.abs()
    }
}

/// Itinerary word of the anchor of `m`.
fn anchor_word(fam: &LeafMeasureFamily, m: &SegmentMeasure, len: usize) -> Result<Word> {
    let it = itinerary(fam.sys, fam.part, m.segment.anchor, len, ItineraryOptions::default())?;
    Ok(it.xi)
}

/// Parameter interval of `π_A([w])` on the piece of `m` through the anchor.
fn cylinder_window(part: &MarkovPartition, m: &SegmentMeasure, w: &[usize]) -> Result<[f64; 2]> {
    let pc = m
        .piece_at(0.0)
        .ok_or_else(|| Error::Atlas("anchor is not on a piece".into()))?;
    if pc.rect != w[0] {
        return Err(Error::Atlas("anchor piece disagrees with the itinerary".into()));
    }
    let j = part.cylinder_image(w);
    let (va, vb) = (pc.v_at(j[0]), pc.v_at(j[1]));
    if va < pc.v0 - 1e-12 || vb > pc.v1 + 1e-12 {
        return Err(Error::Atlas(format!(
            "cylinder window [{va}, {vb}] leaves the anchor piece [{}, {}]",
            pc.v0, pc.v1
        )));
    }
    Ok([va, vb])
}

/// Whether `[va, vb]` lies in one piece of `m` with endpoints on `μ'` knots.
fn aligned(table: &MuTable, m: &SegmentMeasure, va: f64, vb: f64) -> bool {
    let Some(pc) = m.piece_at(0.5 * (va + vb)) else {
        return false;
    };
    if va < pc.v0 - 1e-12 || vb > pc.v1 + 1e-12 {
        return false;
    }
    let cdf = &table.rects[pc.rect];
    cdf.knot_distance(pc.u_at(va)) < ALIGN_TOL && cdf.knot_distance(pc.u_at(vb)) < ALIGN_TOL
}

/// Whether `[a0, a1]` on `ma` and `[b0, b1]` on `mb` lie in single pieces
/// of the same rectangle with matching model coordinates.
pub(crate) fn same_chart(ma: &SegmentMeasure, a0: f64, a1: f64, mb: &SegmentMeasure, b0: f64, b1: f64) -> bool {
    let (Some(pa), Some(pb)) = (ma.piece_at(a0), mb.piece_at(b0)) else {
        return false;
    };
    pa.contains(a1)
        && pb.contains(b1)
        && pa.rect == pb.rect
        && (pa.u_at(a0) - pb.u_at(b0)).abs() < ALIGN_TOL
        && (pa.u_at(a1) - pb.u_at(b1)).abs() < ALIGN_TOL
}

/// Log ratios `log ν_dst(W) / ν_src(W)` on cylinder windows of depths
/// `depth - 2 ..= depth` that are at least `min_depth` deep.
pub fn window_series(
    fam: &LeafMeasureFamily,
    src: &SegmentMeasure,
    dst: &SegmentMeasure,
    min_depth: usize,
) -> Result<WindowSeries> {
    let k = fam.opts.depth;
    let word = anchor_word(fam, src, k)?;
    let mut windows = Vec::new();
    let mut fixed: Option<SegmentMeasure> = None;
    for d in k.saturating_sub(2).max(min_depth).max(1)..=k {
        let [va, vb] = cylinder_window(fam.part, src, &word[..d])?;
        let target = if aligned(&fam.table, dst, va, vb) {
            dst
        } else {
            // A window straddling a sheet crossing is charted on the
            // earliest sheet it meets; ν does not depend on the chart.
            if fixed.is_none() {
                let sheet = dst
                    .pieces
                    .iter()
                    .filter(|pc| pc.v1 > va && pc.v0 < vb)
                    .map(|pc| pc.sheet)
                    .min()
                    .ok_or_else(|| Error::Atlas("window is not on the target segment".into()))?;
                fixed = Some(fam.measure_in(&dst.segment, Chart::Sheet(sheet), &fam.table)?);
            }
            let alt = fixed.as_ref().unwrap();
            if !aligned(&fam.table, alt, va, vb) {
                return Err(Error::Atlas(format!(
                    "depth-{d} window is not cylinder-aligned in the target chart"
                )));
            }
            alt
        };
        windows.push(WindowEstimate {
            depth: d,
            v: [va, vb],
            log_ratio: (target.mass(va, vb) / src.mass(va, vb)).ln(),
        });
    }
    let n = windows.len();
    if n == 0 {
        return Err(Error::Atlas("no window is deep enough".into()));
    }
    let finest = windows[n - 1].log_ratio;
    let lam = fam.part.lambda_u;
    let extrapolated = if n >= 2 {
        (lam * finest - windows[n - 2].log_ratio) / (lam - 1.0)
    } else {
        finest
    };
    Ok(WindowSeries {
        windows,
        finest,
        extrapolated,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RnReport {
    pub p: FlowPoint,
    pub t: f64,
    pub crossings: i64,
    /// `log ν_{Φ^t p}(Φ^t W) / ν_p(W)` on the finest window.
    pub lhs: f64,
    pub extrapolated: f64,
    /// `ρ ∫_0^t f(Φ^τ p) dτ`.
    pub rhs: f64,
    pub rel_err: f64,
    pub series: WindowSeries,
}

impl RnReport {
    pub fn csv_header() -> &'static str {
        "x,y,h,t,lhs,rhs,rel_err"
    }

    pub fn csv_row(&self) -> String {
        let x = self.p.x.to_f64();
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            x[0], x[1], self.p.h, self.t, self.lhs, self.rhs, self.rel_err
        )
    }
}

/// Compares the log mass ratio of `Φ^t` on windows around `p` with
/// `ρ ∫_0^t f(Φ^τ p) dτ`.
pub fn verify_radon_nikodym(fam: &LeafMeasureFamily, p: FlowPoint, t: f64) -> Result<RnReport> {
    let src = fam.measure_at(p)?;
    verify_radon_nikodym_on(fam, &src, t)
}

/// As [`verify_radon_nikodym`] with a precomputed source segment.
pub fn verify_radon_nikodym_on(fam: &LeafMeasureFamily, src: &SegmentMeasure, t: f64) -> Result<RnReport> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time {t} must be nonnegative")));
    }
    let p = src.segment.anchor;
    let (pt, n) = fam.sys.flow(p, t);
    let dst = if n == 0 && t == 0.0 {
        src.clone()
    } else {
        let mut seg = src.segment;
        seg.anchor = pt;
        seg.half_length *= fam.part.lambda_u.powi(n as i32);
        fam.measure(&seg)?
    };
    let series = window_series(fam, src, &dst, n.max(0) as usize + 1)?;
    let rhs = fam.rho() * orbit_integral(fam.sys, fam.f, p, t);
    Ok(RnReport {
        p,
        t,
        crossings: n,
        lhs: series.finest,
        extrapolated: series.extrapolated,
        rhs,
        rel_err: relative_error(series.finest, rhs),
        series,
    })
}

/// Representation of `q` on the sheet of `p` nearest to it, and its
/// eigen-offset `(d_u, d_s)` from `p`.
pub(crate) fn relative_offset(fam: &LeafMeasureFamily, p: FlowPoint, q: FlowPoint) -> Result<(FlowPoint, [f64; 2])> {
    let sys = fam.sys;
    let mut best: Option<(f64, FlowPoint, [f64; 2])> = None;
    for k in -2..=2 {
        let qk = sys.sheet(q, k);
        let d = sys.base.to_eigen(p.x.delta(qk.x));
        let score = d[0].abs() + d[1].abs() + (qk.h - p.h).abs();
        if best.map_or(true, |b| score < b.0) {
            best = Some((score, qk, d));
        }
    }
    let (_, qk, d) = best.expect("nonempty sheet range");
    let r = fam.part.radii[0];
    if d[0].abs() > r || d[1].abs() > r {
        return Err(Error::OffPlaque(format!(
            "q is {:.3e} (unstable), {:.3e} (stable) from p; holonomy needs both below {r}",
            d[0], d[1]
        )));
    }
    Ok((qk, d))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub p: FlowPoint,
    pub q: FlowPoint,
    pub offset: [f64; 2],
    /// `d(ν_q ∘ h_{qp}) / dν_p` at `p` on the finest window.
    pub estimate: f64,
    pub extrapolated: f64,
    /// `exp(ρ u(h_{qp}(p), p))`.
    pub expected: f64,
    pub rel_err: f64,
}

/// Windowed estimate of the derivative of `ν_q ∘ h_{qp}` against `ν_p` at `p`.
pub fn holonomy_derivative(fam: &LeafMeasureFamily, p: FlowPoint, q: FlowPoint) -> Result<HolonomyReport> {
    let (p, _) = fam.sys.normalize(p.x, p.h);
    let (qk, d) = relative_offset(fam, p, q)?;
    let hp = unstable_lift(fam.sys, qk, -d[0]);
    let src = fam.measure_at(p)?;
    let dst = fam.measure(&fam.segment_through(hp, fam.opts.half_length))?;
    let series = window_series(fam, &src, &dst, 1)?;
    let (hn, _) = fam.sys.normalize(hp.x, hp.h);
    let expected = (fam.rho() * u(fam.sys, fam.f, hn, p, &fam.opts.u)?.value).exp();
    let estimate = series.finest.exp();
    Ok(HolonomyReport {
        p,
        q,
        offset: d,
        estimate,
        extrapolated: series.extrapolated.exp(),
        expected,
        rel_err: relative_error(estimate, expected),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformedReport {
    pub t: f64,
    pub alpha: f64,
    /// Transverse log-expansion of `η_{Φ^t p} ∘ Φ^t ∘ η_p^{-1}` at `0`.
    pub alpha_perp_deformed: f64,
    /// `|α̌⊥ + ρ α|`.
    pub residual: f64,
    pub relative: f64,
}

/// `|α̌⊥ + ρ α|` for a family realized from the contraction rate.
pub fn deformed_cocycle_check(fam: &LeafMeasureFamily, p: FlowPoint, t: f64) -> Result<DeformedReport> {
    let src = fam.measure_at(p)?;
    let p = src.segment.anchor;
    let (pt, n) = fam.sys.flow(p, t);
    let dst = if t == 0.0 {
        src.clone()
    } else {
        let mut seg = src.segment;
        seg.anchor = pt;
        seg.half_length *= fam.part.lambda_u.powi(n as i32);
        fam.measure(&seg)?
    };
    let (ep, eq) = (reparametrize(&src)?, reparametrize(&dst)?);
    let word = anchor_word(fam, &src, fam.opts.depth)?;
    let [va, vb] = cylinder_window(fam.part, &src, &word)?;
    if !aligned(&fam.table, &dst, va, vb) {
        return Err(Error::Atlas("window is not cylinder-aligned along the orbit".into()));
    }
    // Φ^t is the identity in segment parameters; conjugate by η.
    let (za, zb) = (ep.eval(va), ep.eval(vb));
    let slope = (eq.eval(ep.inverse(zb)) - eq.eval(ep.inverse(za))) / (zb - za);
    let deformed = slope.ln();
    let a = alpha(fam.sys, p, t);
    let residual = (deformed + fam.rho() * a).abs();
    Ok(DeformedReport {
        t,
        alpha: a,
        alpha_perp_deformed: deformed,
        residual,
        relative: if a == 0.0 { residual } else { residual / a.abs() },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Largest difference of cumulative masses, in mean cell masses.
    pub max_cells: f64,
    pub cells: usize,
}

/// Charts every point of the segment through `p` on the previous sheet
/// (with `μ'` one level deeper there) and compares with the natural chart.
pub fn overlap_consistency(fam: &LeafMeasureFamily, p: FlowPoint) -> Result<OverlapReport> {
    let seg = fam.segment_through(p, fam.opts.half_length);
    let natural = fam.measure(&seg)?;
    let deeper = MuTable::new(fam.part, &fam.gibbs, fam.opts.depth + 1)?;
    let previous = fam.measure_in(&seg, Chart::Previous, &deeper)?;
    let cell = natural.mean_cell_mass();
    let max = natural
        .cum
        .iter()
        .zip(&previous.cum)
        .map(|(a, b)| (a - b).abs() / cell)
        .fold(0.0, f64::max);
    Ok(OverlapReport {
        max_cells: max,
        cells: seg.cells,
    })
}

/// Compares the segment through `p` with the one through `L_p(shift)`,
/// `shift` a whole number of cells, on their common cells.
pub fn same_leaf_consistency(fam: &LeafMeasureFamily, p: FlowPoint, shift_cells: usize) -> Result<OverlapReport> {
    let a = fam.measure_at(p)?;
    let n = a.segment.cells;
    if shift_cells >= n {
        return Err(Error::Parameter("shift exceeds the segment".into()));
    }
    let v = shift_cells as f64 * a.segment.cell_width();
    let q = unstable_lift(fam.sys, a.segment.anchor, v * a.segment.half_length);
    let mut seg = a.segment;
    let (qn, m) = fam.sys.normalize(q.x, q.h);
    seg.anchor = qn;
    seg.half_length *= fam.part.lambda_u.powi(m as i32);
    let b = fam.measure(&seg)?;
    let cell = a.mean_cell_mass();
    let mut max: f64 = 0.0;
    for j in 0..=(n - shift_cells) {
        let da = a.cum[j + shift_cells] - a.cum[shift_cells];
        let db = b.cum[j] - b.cum[0];
        max = max.max((da - db).abs() / cell);
    }
    Ok(OverlapReport {
        max_cells: max,
        cells: n - shift_cells,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoOneReport {
    pub depth: usize,
    pub rho: f64,
    pub deviation: f64,
    /// `ρ` after adding a bump to the conformal weight, and the drift.
    pub bump_rho: f64,
    pub bump_drift: f64,
    /// `ρ` after perturbing the weight on the section, and the drift.
    pub section_rho: f64,
    pub section_drift: f64,
    /// `ρ` for `2f`, and its distance from `ρ/2`.
    pub doubled_rho: f64,
    pub halving_error: f64,
}

/// `ρ` for `f = -∂α/∂t(·, 0)` with its coboundary and scaling diagnostics.
pub fn rho_equals_one_check(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    depth: usize,
    opts: &UOptions,
) -> Result<RhoOneReport> {
    let rho_of = |s: &SuspensionSystem| -> Result<(f64, crate::thermo::Potential)> {
        let fa = f_a_potential(s, part, &ContractionRate, depth, opts)?;
        Ok((find_rho(&part.a, &fa.potential)?.value, fa.potential))
    };
    let (rho, fa) = rho_of(sys)?;
    let mut bumped = sys.weight.clone();
    bumped.bump.constant += 0.02;
    bumped.bump.terms.push(TrigTerm { k: [1, 1], cos: 0.01, sin: 0.0 });
    let (bump_rho, _) = rho_of(&sys.with_weight(bumped)?)?;
    let mut shifted = sys.weight.clone();
    shifted.section = TrigPoly {
        constant: shifted.section.constant,
        terms: shifted
            .section
            .terms
            .iter()
            .cloned()
            .chain([TrigTerm { k: [0, 1], cos: 0.01, sin: 0.0 }])
            .collect(),
    };
    let (section_rho, _) = rho_of(&sys.with_weight(shifted)?)?;
    let doubled_rho = find_rho(&part.a, &fa.scale(2.0))?.value;
    Ok(RhoOneReport {
        depth,
        rho,
        deviation: (rho - 1.0).abs(),
        bump_rho,
        bump_drift: (bump_rho - rho).abs(),
        section_rho,
        section_drift: (section_rho - rho).abs(),
        doubled_rho,
        halving_error: (doubled_rho - 0.5 * rho).abs(),
    })
}
