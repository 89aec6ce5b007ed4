//! The family `{ν_p}` of leaf measures and its discretization on unstable
//! segments.
//!
//! On a point `q` of the flow box over `R_i`,
//! `dν_p(q) = exp(ρ u(q, π_i(q))) dμ'(π_i(q))`, where `μ' = μ ∘ π_A^{-1}` is
//! the pushforward of the Gibbs measure of `-ρ f_A` onto the unstable model
//! segment of `R_i` and `π_i` slides along weak-stable leaves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{
    f_a_potential, system_hash, u_to_model, unstable_lift, FaPotential, FlowPoint, Located,
    MarkovPartition, Observable, SuspensionSystem, TorusPoint, UOptions,
};
use crate::error::{Error, Result};
use crate::thermo::{find_rho, gibbs, GibbsData, Rho};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RealizeOptions {
    /// Cylinder depth `k` of the `f_A` potential and of the `μ'` tables.
    pub depth: usize,
    /// Cells per segment, `N`.
    pub cells: usize,
    /// Reference half-length `ℓ` of segments, in unstable arc length.
    pub half_length: f64,
    /// Cells between exact evaluations of `u(q, π_i(q))`.
    pub node_stride: usize,
    pub u: UOptions,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            depth: 8,
            cells: 1 << 16,
            half_length: 0.08,
            node_stride: 64,
            u: UOptions::default(),
        }
    }
}

/// Piecewise-linear distribution function of `μ'` on the model segment of
/// one rectangle, with knots at the images of depth-`d` cylinders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderCdf {
    pub knots: Vec<f64>,
    /// `cum[j] = μ'([knots[0], knots[j]])`.
    pub cum: Vec<f64>,
}

impl CylinderCdf {
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.knots.len();
        if u <= self.knots[0] {
            return 0.0;
        }
        if u >= self.knots[n - 1] {
            return self.cum[n - 1];
        }
        let j = self.knots.partition_point(|&k| k <= u) - 1;
        let w = self.knots[j + 1] - self.knots[j];
        let frac = if w > 0.0 { (u - self.knots[j]) / w } else { 0.0 };
        self.cum[j] + frac * (self.cum[j + 1] - self.cum[j])
    }

    /// Distance from `u` to the nearest knot.
    pub fn knot_distance(&self, u: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k <= u);
        let mut d = f64::INFINITY;
        if j > 0 {
            d = d.min((u - self.knots[j - 1]).abs());
        }
        if j < self.knots.len() {
            d = d.min((self.knots[j] - u).abs());
        }
        d
    }

    pub fn min_gap(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// `μ'` on every model segment from the Gibbs masses of depth-`d` cylinders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuTable {
    pub depth: usize,
    pub rects: Vec<CylinderCdf>,
}

impl MuTable {
    pub fn new(part: &MarkovPartition, mu: &GibbsData, depth: usize) -> Result<Self> {
        let words = part.a.enumerate_words(depth)?;
        let mut per: Vec<Vec<([f64; 2], f64)>> = vec![Vec::new(); part.len()];
        for w in &words {
            per[w[0]].push((part.cylinder_image(w), mu.mu(w)));
        }
        let mut rects = Vec::with_capacity(part.len());
        for mut iv in per {
            iv.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
            let mut knots = vec![iv[0].0[0]];
            let mut cum = vec![0.0];
            for (j, &(span, m)) in iv.iter().enumerate() {
                if m < 0.0 || !m.is_finite() {
                    return Err(Error::Integrity(format!("cylinder mass {m}")));
                }
                let end = if j + 1 < iv.len() { iv[j + 1].0[0] } else { span[1] };
                knots.push(end);
                cum.push(cum.last().unwrap() + m);
            }
            rects.push(CylinderCdf { knots, cum });
        }
        Ok(Self { depth, rects })
    }
}

/// `L_p(v) = (x_p + v ℓ e_u, h_p + θ^u(x_p, v ℓ))` for `v ∈ (-1, 1)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeafSegment {
    /// Normalized anchor, `L_p(0) = p`.
    pub anchor: FlowPoint,
    pub half_length: f64,
    pub cells: usize,
}

impl LeafSegment {
    /// Lifted point at parameter `v`, on the sheet of the anchor.
    pub fn point(&self, sys: &SuspensionSystem, v: f64) -> FlowPoint {
        unstable_lift(sys, self.anchor, v * self.half_length)
    }

    pub fn cell_width(&self) -> f64 {
        2.0 / self.cells as f64
    }

    /// Fractional cell index of `v`.
    pub fn index(&self, v: f64) -> f64 {
        (v + 1.0) * self.cells as f64 / 2.0
    }

    pub fn knot(&self, j: usize) -> f64 {
        -1.0 + 2.0 * j as f64 / self.cells as f64
    }
}

/// Maximal parameter interval on which the segment stays on one sheet and
/// in one rectangle; the model coordinate is affine there:
/// `u(v) = u0 + slope (v - v0)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Piece {
    pub v0: f64,
    pub v1: f64,
    pub rect: usize,
    /// Sheet of the chart relative to the anchor.
    pub sheet: i64,
    pub u0: f64,
    pub s: f64,
    pub slope: f64,
}

impl Piece {
    pub fn u_at(&self, v: f64) -> f64 {
        self.u0 + self.slope * (v - self.v0)
    }

    pub fn v_at(&self, u: f64) -> f64 {
        self.v0 + (u - self.u0) / self.slope
    }

    pub fn contains(&self, v: f64) -> bool {
        self.v0 <= v && v <= self.v1
    }
}

/// Discretized `ν_p ∘ L_p` on `N` cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentMeasure {
    pub segment: LeafSegment,
    pub pieces: Vec<Piece>,
    pub masses: Vec<f64>,
    /// `cum[j] = Σ_{i<j} masses[i]`, `N + 1` entries.
    pub cum: Vec<f64>,
}

impl SegmentMeasure {
    /// `ν` of `L_p([-1, v])`, linear inside cells.
    pub fn cumulative(&self, v: f64) -> f64 {
        let n = self.masses.len();
        let x = self.segment.index(v).clamp(0.0, n as f64);
        let j = (x.floor() as usize).min(n - 1);
        self.cum[j] + (x - j as f64) * self.masses[j]
    }

    pub fn mass(&self, va: f64, vb: f64) -> f64 {
        self.cumulative(vb) - self.cumulative(va)
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn piece_at(&self, v: f64) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.contains(v))
    }

    pub fn mean_cell_mass(&self) -> f64 {
        self.total() / self.masses.len() as f64
    }
}

/// Which sheet each point is charted on: its own (`0`), the previous one
/// (`-1`, for overlap checks), or one fixed sheet relative to the anchor
/// (for windows that straddle a sheet crossing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Natural,
    Previous,
    Sheet(i64),
}

/// `{ν_p}` for a positive function `f`: `f_A`, `ρ`, the Gibbs data and the
/// `μ'` tables, with segments discretized on demand.
pub struct LeafMeasureFamily<'a> {
    pub sys: &'a SuspensionSystem,
    pub part: &'a MarkovPartition,
    pub f: &'a dyn Observable,
    pub opts: RealizeOptions,
    pub fa: FaPotential,
    pub rho: Rho,
    pub gibbs: GibbsData,
    pub table: MuTable,
}

/// Builds the family: `f_A` at depth `k`, `ρ`, the Gibbs measure of
/// `-ρ f_A` and its pushforward onto the model segments.
pub fn realize<'a>(
    sys: &'a SuspensionSystem,
    part: &'a MarkovPartition,
    f: &'a dyn Observable,
    opts: RealizeOptions,
) -> Result<LeafMeasureFamily<'a>> {
    if opts.depth == 0 || opts.cells < 2 || opts.node_stride == 0 {
        return Err(Error::Parameter("depth, cells and node stride must be positive".into()));
    }
    if !(opts.half_length > 0.0 && opts.half_length < part.radii[0]) {
        return Err(Error::Parameter(format!(
            "half length {} must lie in (0, δ0 = {})",
            opts.half_length, part.radii[0]
        )));
    }
    let fa = f_a_potential(sys, part, f, opts.depth, &opts.u)?;
    let rho = find_rho(&part.a, &fa.potential)?;
    let gibbs = gibbs(&part.a, &fa.potential.scale(-rho.value))?;
    let table = MuTable::new(part, &gibbs, opts.depth)?;
    let min_gap = table.rects.iter().map(CylinderCdf::min_gap).fold(f64::INFINITY, f64::min);
    let cell = 2.0 * opts.half_length / opts.cells as f64;
    if cell > min_gap {
        return Err(Error::Resolution(format!(
            "cell width {cell:e} exceeds the smallest cylinder image {min_gap:e}"
        )));
    }
    Ok(LeafMeasureFamily {
        sys,
        part,
        f,
        opts,
        fa,
        rho,
        gibbs,
        table,
    })
}

impl LeafMeasureFamily<'_> {
    pub fn rho(&self) -> f64 {
        self.rho.value
    }

    /// Segment through the possibly lifted point `p` with half-length `ℓ`
    /// measured on the sheet of `p`.
    pub fn segment_through(&self, p: FlowPoint, half_length: f64) -> LeafSegment {
        let (pn, m) = self.sys.normalize(p.x, p.h);
        LeafSegment {
            anchor: pn,
            half_length: half_length * self.part.lambda_u.powi(m as i32),
            cells: self.opts.cells,
        }
    }

    pub fn measure_at(&self, p: FlowPoint) -> Result<SegmentMeasure> {
        self.measure(&self.segment_through(p, self.opts.half_length))
    }

    pub fn measure(&self, seg: &LeafSegment) -> Result<SegmentMeasure> {
        self.measure_in(seg, Chart::Natural, &self.table)
    }

    /// Discretizes `ν` on `seg`, charting points on the sheet given by
    /// `chart` and reading `μ'` from `table`.
    pub fn measure_in(&self, seg: &LeafSegment, chart: Chart, table: &MuTable) -> Result<SegmentMeasure> {
        let pieces = self.pieces(seg, chart)?;
        let n = seg.cells;
        let rho = self.rho();
        let mut masses = vec![0.0; n];
        let stride = self.opts.node_stride as f64 * seg.cell_width();
        let per_piece: Vec<Result<Vec<(usize, f64)>>> = pieces
            .par_iter()
            .map(|pc| {
                let count = ((pc.v1 - pc.v0) / stride).ceil().max(1.0) as usize;
                let nodes: Vec<f64> = (0..=count)
                    .map(|j| pc.v0 + (pc.v1 - pc.v0) * j as f64 / count as f64)
                    .collect();
                let vals = nodes
                    .iter()
                    .map(|&v| self.u_chart(seg, pc, v))
                    .collect::<Result<Vec<f64>>>()?;
                let cdf = &table.rects[pc.rect];
                let first = seg.index(pc.v0).floor().max(0.0) as usize;
                let last = (seg.index(pc.v1).ceil() as usize).min(n);
                let mut out = Vec::with_capacity(last.saturating_sub(first));
                for j in first..last {
                    let a = seg.knot(j).max(pc.v0);
                    let b = seg.knot(j + 1).min(pc.v1);
                    if b <= a {
                        continue;
                    }
                    let d = cdf.eval(pc.u_at(b)) - cdf.eval(pc.u_at(a));
                    let mid = 0.5 * (a + b);
                    let t = ((mid - pc.v0) / (pc.v1 - pc.v0) * count as f64).clamp(0.0, count as f64);
                    let i = (t.floor() as usize).min(count - 1);
                    let uval = vals[i] + (t - i as f64) * (vals[i + 1] - vals[i]);
                    out.push((j, (rho * uval).exp() * d));
                }
                Ok(out)
            })
            .collect();
        for r in per_piece {
            for (j, m) in r? {
                masses[j] += m;
            }
        }
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for &m in &masses {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Integrity(format!("cell mass {m} is not positive")));
            }
            cum.push(cum.last().unwrap() + m);
        }
        Ok(SegmentMeasure {
            segment: *seg,
            pieces,
            masses,
            cum,
        })
    }

    /// `u(q, π_i(q))` at `q = L_p(v)` in the chart of `piece`.
    fn u_chart(&self, seg: &LeafSegment, pc: &Piece, v: f64) -> Result<f64> {
        let q = seg.point(self.sys, v);
        let q = self.sys.sheet(q, pc.sheet);
        let loc = Located {
            rect: pc.rect,
            local: [pc.u_at(v), pc.s],
            on_corner: false,
        };
        Ok(u_to_model(self.sys, self.part, self.f, q, &loc, &self.opts.u)?.value)
    }

    fn sheet_of(&self, seg: &LeafSegment, v: f64) -> i64 {
        let q = seg.point(self.sys, v);
        self.sys.normalize(q.x, q.h).1
    }

    /// Splits `(-1, 1)` at sheet crossings and rectangle edges.
    pub fn pieces(&self, seg: &LeafSegment, chart: Chart) -> Result<Vec<Piece>> {
        if let Chart::Sheet(sheet) = chart {
            let mut pieces = Vec::new();
            self.split_rects(seg, -1.0, 1.0, sheet, &mut pieces)?;
            return Ok(pieces);
        }
        let stride = self.opts.node_stride.min(seg.cells);
        let nodes: Vec<f64> = (0..=seg.cells / stride).map(|j| seg.knot(j * stride)).chain([1.0]).collect();
        let mut cuts = vec![(-1.0, self.sheet_of(seg, -1.0))];
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (sa, sb) = (self.sheet_of(seg, a), self.sheet_of(seg, b));
            if sa != sb {
                self.bisect_sheets(seg, a, sa, b, sb, &mut cuts, 0);
            }
        }
        cuts.push((1.0, 0));
        let offset = match chart {
            Chart::Natural => 0,
            Chart::Previous => -1,
            Chart::Sheet(_) => unreachable!("handled above"),
        };
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let ((va, sheet), (vb, _)) = (w[0], w[1]);
            if vb > va {
                self.split_rects(seg, va, vb, sheet + offset, &mut pieces)?;
            }
        }
        Ok(pieces)
    }

    #[allow(clippy::too_many_arguments)]
    fn bisect_sheets(
        &self,
        seg: &LeafSegment,
        a: f64,
        sa: i64,
        b: f64,
        sb: i64,
        cuts: &mut Vec<(f64, i64)>,
        depth: usize,
    ) {
        if depth > 60 || b - a < 1e-15 {
            cuts.push((b, sb));
            return;
        }
        let m = 0.5 * (a + b);
        let sm = self.sheet_of(seg, m);
        if sm != sa {
            self.bisect_sheets(seg, a, sa, m, sm, cuts, depth + 1);
        }
        if sm != sb {
            self.bisect_sheets(seg, m, sm, b, sb, cuts, depth + 1);
        }
    }

    fn split_rects(&self, seg: &LeafSegment, va: f64, vb: f64, sheet: i64, out: &mut Vec<Piece>) -> Result<()> {
        let base = self.sys.base.iterate(seg.anchor.x, sheet);
        let scale = self.part.lambda_u.powi(sheet as i32);
        let slope = scale * seg.half_length;
        let e = self.sys.base.e_u;
        let at = |v: f64| -> TorusPoint { base.add([slope * v * e[0], slope * v * e[1]]) };
        let probe = 1e-12 / slope.min(1.0);
        let mut cur = va;
        let mut guard = 0;
        while cur < vb {
            guard += 1;
            if guard > 10_000 {
                return Err(Error::Integrity("segment splits into too many pieces".into()));
            }
            let t = (cur + probe).min(0.5 * (cur + vb));
            let loc = self.part.locate(at(t), 0.0);
            let r = &self.part.rects[loc.rect];
            let u0 = loc.local[0] - slope * (t - cur);
            let exit = cur + (r.u[1] - u0) / slope;
            let end = exit.min(vb).max(t);
            out.push(Piece {
                v0: cur,
                v1: end,
                rect: loc.rect,
                sheet,
                u0,
                s: loc.local[1],
                slope,
            });
            cur = end;
        }
        Ok(())
    }

    /// JSON header and CSV mass tables of the given segments.
    pub fn export(&self, segments: &[SegmentMeasure]) -> FamilyExport {
        let mut csv = String::from("segment,cell,v_lo,v_hi,mass\n");
        for (i, s) in segments.iter().enumerate() {
            for (j, m) in s.masses.iter().enumerate() {
                csv.push_str(&format!(
                    "{i},{j},{:.17e},{:.17e},{:.17e}\n",
                    s.segment.knot(j),
                    s.segment.knot(j + 1),
                    m
                ));
            }
        }
        FamilyExport {
            header: FamilyHeader {
                rho: self.rho(),
                depth: self.opts.depth,
                cells: self.opts.cells,
                half_length: self.opts.half_length,
                system_hash: system_hash(&self.sys.config),
                anchors: segments.iter().map(|s| s.segment.anchor).collect(),
            },
            csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyHeader {
    pub rho: f64,
    pub depth: usize,
    pub cells: usize,
    pub half_length: f64,
    pub system_hash: String,
    pub anchors: Vec<FlowPoint>,
}

#[derive(Debug, Clone)]
pub struct FamilyExport {
    pub header: FamilyHeader,
    pub csv: String,
}
