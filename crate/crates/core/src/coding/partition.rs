//! Markov partitions of hyperbolic toral automorphisms by rectangles in
//! eigen-coordinates.

use serde::{Deserialize, Serialize};

use super::torus::{ToralAutomorphism, TorusPoint};
use crate::error::{Error, Result};
use crate::sft::{TransitionMatrix, Word};

const EDGE_EPS: f64 = 1e-12;
const LATTICE_RANGE: i32 = 8;
const LOCATE_RANGE: i32 = 3;

/// Axis-parallel box `[u0, u1] × [s0, s1]` in eigen-coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u: [f64; 2],
    pub s: [f64; 2],
}

impl Rect {
    pub fn width_u(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn width_s(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn diameter(&self) -> f64 {
        self.width_u().hypot(self.width_s())
    }

    /// Half-open membership `[u0, u1) × [s0, s1)`.
    pub fn contains(&self, y: [f64; 2]) -> bool {
        self.u[0] <= y[0] && y[0] < self.u[1] && self.s[0] <= y[1] && y[1] < self.s[1]
    }

    pub fn contains_closed(&self, y: [f64; 2], tol: f64) -> bool {
        self.u[0] - tol <= y[0]
            && y[0] <= self.u[1] + tol
            && self.s[0] - tol <= y[1]
            && y[1] <= self.s[1] + tol
    }

    fn translate(&self, l: [f64; 2]) -> Rect {
        Rect {
            u: [self.u[0] + l[0], self.u[1] + l[0]],
            s: [self.s[0] + l[1], self.s[1] + l[1]],
        }
    }

    fn intersect(&self, other: &Rect) -> Option<Rect> {
        let u = [self.u[0].max(other.u[0]), self.u[1].min(other.u[1])];
        let s = [self.s[0].max(other.s[0]), self.s[1].min(other.s[1])];
        (u[1] - u[0] > EDGE_EPS && s[1] - s[0] > EDGE_EPS).then_some(Rect { u, s })
    }
}

/// Where a base point sits in the partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub rect: usize,
    /// Eigen-coordinates in the rectangle's frame.
    pub local: [f64; 2],
    /// Within the corner tolerance of a rectangle corner.
    pub on_corner: bool,
}

/// `π_A(ξ)` on the unstable model segment of `ξ(0)`, with error radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiA {
    pub rect: usize,
    pub u: f64,
    pub radius: f64,
}

/// Sampled check of the Markov boundary inclusions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovReport {
    pub samples: usize,
    /// Largest distance from `B(stable boundary)` to the stable boundary.
    pub stable_defect: f64,
    /// Largest distance from `B^{-1}(unstable boundary)` to the unstable boundary.
    pub unstable_defect: f64,
    /// Random points covered by exactly one rectangle (half-open).
    pub tiling_ok: bool,
    /// Rectangles with `a_ii = 1`; these meet their own image along
    /// stable and unstable boundary pieces.
    pub self_transitions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovPartition {
    pub rects: Vec<Rect>,
    /// Index of the base box each rectangle refines.
    pub parent: Vec<usize>,
    pub base_boxes: Vec<Rect>,
    pub a: TransitionMatrix,
    /// `shifts[i][j]`: lattice vector `l` with `B R_j + l` crossing `R_i`.
    shifts: Vec<Vec<Option<[f64; 2]>>>,
    /// Images of the integer lattice basis in eigen-coordinates.
    pub lattice: [[f64; 2]; 2],
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub level: usize,
    pub mixing_exponent: usize,
    pub radii: [f64; 3],
    base: ToralAutomorphism,
}

/// Builds the two-box partition of a symmetric hyperbolic automorphism and
/// refines it `level` times (one forward and one backward step per level).
pub fn build_partition(
    base: &ToralAutomorphism,
    level: usize,
    radii: [f64; 3],
) -> Result<MarkovPartition> {
    let [[p, q], [r, _]] = base.matrix;
    if q != r || p <= 0 || q <= 0 {
        return Err(Error::Partition(
            "the two-box construction needs a symmetric matrix with positive entries".into(),
        ));
    }
    let lattice = base.lattice_basis();
    let (a, b) = (lattice[0][0], -lattice[0][1]);
    let rotated = (lattice[1][0] - b).abs() < 1e-12 && (lattice[1][1] - a).abs() < 1e-12;
    if !(a > 0.0 && b > 0.0 && rotated) {
        return Err(Error::Partition(format!(
            "unexpected lattice in eigen-coordinates: {lattice:?}"
        )));
    }
    let base_boxes = vec![
        Rect { u: [0.0, a], s: [0.0, a] },
        Rect { u: [a, a + b], s: [a - b, a] },
    ];
    let lat = lattice_vectors(&lattice, LATTICE_RANGE);
    let lu = base.lambda_u;
    let ls = base.lambda_s;

    let mut pieces: Vec<(Rect, usize)> = base_boxes.iter().copied().zip(0..).collect();
    pieces = refine_forward(&pieces, &lat, lu, ls);
    for _ in 0..level {
        pieces = refine_forward(&pieces, &lat, lu, ls);
        pieces = refine_backward(&pieces, &lat, lu, ls);
    }
    let rects: Vec<Rect> = pieces.iter().map(|x| x.0).collect();
    let parent: Vec<usize> = pieces.iter().map(|x| x.1).collect();

    let n = rects.len();
    let mut rows = vec![vec![0u8; n]; n];
    let mut shifts = vec![vec![None; n]; n];
    for (j, rj) in rects.iter().enumerate() {
        let img = Rect {
            u: [lu * rj.u[0], lu * rj.u[1]],
            s: [ls * rj.s[0], ls * rj.s[1]],
        };
        for (i, ri) in rects.iter().enumerate() {
            for l in &lat {
                let Some(x) = img.translate(*l).intersect(ri) else {
                    continue;
                };
                if rows[i][j] == 1 {
                    return Err(Error::Partition(format!(
                        "rectangle {j} crosses rectangle {i} more than once"
                    )));
                }
                let u_full = (x.u[0] - ri.u[0]).abs() < 1e-9 && (x.u[1] - ri.u[1]).abs() < 1e-9;
                let s_in = (x.s[0] - img.s[0] - l[1]).abs() < 1e-9
                    && (x.s[1] - img.s[1] - l[1]).abs() < 1e-9;
                if !(u_full && s_in) {
                    return Err(Error::Partition(format!(
                        "transition {j} -> {i} is not a Markov crossing"
                    )));
                }
                rows[i][j] = 1;
                shifts[i][j] = Some(*l);
            }
        }
    }
    let a = TransitionMatrix::new(rows)?;
    let mixing_exponent = a
        .mixing_exponent(64)
        .ok_or_else(|| Error::Partition("transition matrix is not mixing".into()))?;
    Ok(MarkovPartition {
        rects,
        parent,
        base_boxes,
        a,
        shifts,
        lattice,
        lambda_u: lu,
        lambda_s: ls,
        level,
        mixing_exponent,
        radii,
        base: base.clone(),
    })
}

fn lattice_vectors(lattice: &[[f64; 2]; 2], range: i32) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for m in -range..=range {
        for n in -range..=range {
            out.push([
                m as f64 * lattice[0][0] + n as f64 * lattice[1][0],
                m as f64 * lattice[0][1] + n as f64 * lattice[1][1],
            ]);
        }
    }
    out
}

/// Cuts each box along the preimages of the others' unstable edges.
fn refine_forward(p: &[(Rect, usize)], lat: &[[f64; 2]], lu: f64, ls: f64) -> Vec<(Rect, usize)> {
    let mut out = Vec::new();
    for (bx, parent) in p {
        let img = Rect {
            u: [lu * bx.u[0], lu * bx.u[1]],
            s: [ls * bx.s[0], ls * bx.s[1]],
        };
        let mut cut = Vec::new();
        for (bj, _) in p {
            for l in lat {
                if let Some(x) = img.translate(*l).intersect(bj) {
                    cut.push(Rect {
                        u: [(x.u[0] - l[0]) / lu, (x.u[1] - l[0]) / lu],
                        s: bx.s,
                    });
                }
            }
        }
        cut.sort_by(|a, b| a.u[0].total_cmp(&b.u[0]));
        out.extend(cut.into_iter().map(|r| (r, *parent)));
    }
    out
}

/// Cuts each box along the images of the others' stable edges.
fn refine_backward(p: &[(Rect, usize)], lat: &[[f64; 2]], lu: f64, ls: f64) -> Vec<(Rect, usize)> {
    let mut out = Vec::new();
    for (bx, parent) in p {
        let img = Rect {
            u: [bx.u[0] / lu, bx.u[1] / lu],
            s: [bx.s[0] / ls, bx.s[1] / ls],
        };
        let mut cut = Vec::new();
        for (bj, _) in p {
            for l in lat {
                if let Some(x) = img.translate(*l).intersect(bj) {
                    cut.push(Rect {
                        u: bx.u,
                        s: [(x.s[0] - l[1]) * ls, (x.s[1] - l[1]) * ls],
                    });
                }
            }
        }
        cut.sort_by(|a, b| a.s[0].total_cmp(&b.s[0]));
        out.extend(cut.into_iter().map(|r| (r, *parent)));
    }
    out
}

impl MarkovPartition {
    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn base(&self) -> &ToralAutomorphism {
        &self.base
    }

    /// Lattice shift `l` with `B R_current + l` crossing `R_next`.
    pub fn shift(&self, next: usize, current: usize) -> Option<[f64; 2]> {
        self.shifts[next][current]
    }

    pub fn max_diameter(&self) -> f64 {
        self.rects.iter().map(Rect::diameter).fold(0.0, f64::max)
    }

    /// Stable coordinate of the unstable model segment of `R_i`.
    pub fn model_s(&self, i: usize) -> f64 {
        0.5 * (self.rects[i].s[0] + self.rects[i].s[1])
    }

    /// Torus point with eigen-coordinates `(u, s)` in the frame of `R_i`.
    pub fn point_at(&self, us: [f64; 2]) -> TorusPoint {
        TorusPoint::from_f64(self.base.from_eigen(us))
    }

    /// The model point `(u, s*_i)`.
    pub fn model_point(&self, i: usize, u: f64) -> TorusPoint {
        self.point_at([u, self.model_s(i)])
    }

    /// Rectangle containing `x` under half-open membership, falling back to
    /// the lowest-index closed rectangle when rounding leaves a gap.
    pub fn locate(&self, x: TorusPoint, corner_tol: f64) -> Located {
        let e = self.base.to_eigen(x.to_f64());
        let mut fallback: Option<(usize, [f64; 2])> = None;
        for m in -LOCATE_RANGE..=LOCATE_RANGE {
            for n in -LOCATE_RANGE..=LOCATE_RANGE {
                let y = [
                    e[0] - m as f64 * self.lattice[0][0] - n as f64 * self.lattice[1][0],
                    e[1] - m as f64 * self.lattice[0][1] - n as f64 * self.lattice[1][1],
                ];
                for (b, bx) in self.base_boxes.iter().enumerate() {
                    if !bx.contains_closed(y, 1e-9) {
                        continue;
                    }
                    for (i, r) in self.rects.iter().enumerate() {
                        if self.parent[i] != b {
                            continue;
                        }
                        if r.contains(y) {
                            return self.located(i, y, corner_tol);
                        }
                        if r.contains_closed(y, 1e-9) && fallback.map_or(true, |f| i < f.0) {
                            fallback = Some((i, y));
                        }
                    }
                }
            }
        }
        let (i, y) = fallback.expect("rectangles cover the torus");
        let r = &self.rects[i];
        let y = [y[0].clamp(r.u[0], r.u[1]), y[1].clamp(r.s[0], r.s[1])];
        self.located(i, y, corner_tol)
    }

    fn located(&self, i: usize, y: [f64; 2], tol: f64) -> Located {
        let r = &self.rects[i];
        let near_u = (y[0] - r.u[0]).abs() < tol || (r.u[1] - y[0]).abs() < tol;
        let near_s = (y[1] - r.s[0]).abs() < tol || (r.s[1] - y[1]).abs() < tol;
        Located {
            rect: i,
            local: y,
            on_corner: near_u && near_s,
        }
    }

    /// `π_A(ξ)`: backward contraction from the midpoint of the last
    /// unstable segment.
    pub fn pi_a(&self, xi: &[usize]) -> Result<PiA> {
        if xi.is_empty() {
            return Err(Error::EmptyDepth);
        }
        self.a.check_admissible(xi)?;
        let last = &self.rects[xi[xi.len() - 1]];
        let mut u = 0.5 * (last.u[0] + last.u[1]);
        for j in (0..xi.len() - 1).rev() {
            let l = self.shifts[xi[j + 1]][xi[j]].expect("admissible transition has a shift");
            u = (u - l[0]) / self.lambda_u;
        }
        let radius = 0.5 * last.width_u() * self.lambda_u.powi(-(xi.len() as i32 - 1));
        Ok(PiA { rect: xi[0], u, radius })
    }

    /// Unstable interval `π_A([w])` inside `R^u_{w(0)}`.
    pub fn cylinder_image(&self, w: &[usize]) -> [f64; 2] {
        let last = &self.rects[w[w.len() - 1]];
        let mut iv = last.u;
        for j in (0..w.len() - 1).rev() {
            let l = self.shifts[w[j + 1]][w[j]].expect("admissible transition has a shift");
            iv = [(iv[0] - l[0]) / self.lambda_u, (iv[1] - l[0]) / self.lambda_u];
        }
        iv
    }

    /// Samples stable and unstable rectangle edges, maps them forward and
    /// backward, and measures their distance to the partition boundary;
    /// also checks that random points are covered exactly once.
    pub fn verify(&self, samples_per_rect: usize) -> MarkovReport {
        let mut stable_defect: f64 = 0.0;
        let mut unstable_defect: f64 = 0.0;
        let (lu, ls) = (self.lambda_u, self.lambda_s);
        let mut count = 0;
        for r in &self.rects {
            for k in 0..samples_per_rect {
                let t = (k as f64 + 0.5) / samples_per_rect as f64;
                let edge = if k % 2 == 0 { 0 } else { 1 };
                let ys = [r.u[edge], r.s[0] + t * r.width_s()];
                stable_defect = stable_defect.max(self.edge_distance([lu * ys[0], ls * ys[1]], true));
                let yu = [r.u[0] + t * r.width_u(), r.s[edge]];
                unstable_defect =
                    unstable_defect.max(self.edge_distance([yu[0] / lu, yu[1] / ls], false));
                count += 2;
            }
        }
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut tiling_ok = true;
        for _ in 0..2000 {
            let y = [4.0 * next() - 2.0, 4.0 * next() - 2.0];
            if self.cover_count(y) != 1 {
                tiling_ok = false;
            }
        }
        let self_transitions = (0..self.len()).filter(|&i| self.a.allows(i, i)).collect();
        MarkovReport {
            samples: count,
            stable_defect,
            unstable_defect,
            tiling_ok,
            self_transitions,
        }
    }

    fn cover_count(&self, y: [f64; 2]) -> usize {
        let mut c = 0;
        for m in -5..=5 {
            for n in -5..=5 {
                let z = [
                    y[0] - m as f64 * self.lattice[0][0] - n as f64 * self.lattice[1][0],
                    y[1] - m as f64 * self.lattice[0][1] - n as f64 * self.lattice[1][1],
                ];
                c += self.rects.iter().filter(|r| r.contains(z)).count();
            }
        }
        c
    }

    /// Distance from `y` to the nearest stable (`u` = const) or unstable
    /// (`s` = const) edge of any translated rectangle containing it.
    fn edge_distance(&self, y: [f64; 2], stable: bool) -> f64 {
        let mut best = f64::INFINITY;
        for m in -LATTICE_RANGE..=LATTICE_RANGE {
            for n in -LATTICE_RANGE..=LATTICE_RANGE {
                let z = [
                    y[0] - m as f64 * self.lattice[0][0] - n as f64 * self.lattice[1][0],
                    y[1] - m as f64 * self.lattice[0][1] - n as f64 * self.lattice[1][1],
                ];
                for r in &self.rects {
                    if !r.contains_closed(z, 1e-9) {
                        continue;
                    }
                    let d = if stable {
                        (z[0] - r.u[0]).abs().min((z[0] - r.u[1]).abs())
                    } else {
                        (z[1] - r.s[0]).abs().min((z[1] - r.s[1]).abs())
                    };
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// Lowest-index admissible continuation of `w` to length `len`.
    pub fn continue_low(&self, w: &[usize], len: usize) -> Word {
        self.continue_with(w, len, |mut it| it.next())
    }

    /// Highest-index admissible continuation of `w` to length `len`.
    pub fn continue_high(&self, w: &[usize], len: usize) -> Word {
        self.continue_with(w, len, |it| it.last())
    }

    fn continue_with<F>(&self, w: &[usize], len: usize, pick: F) -> Word
    where
        F: Fn(Box<dyn Iterator<Item = usize> + '_>) -> Option<usize>,
    {
        let mut out = w.to_vec();
        while out.len() < len {
            let last = *out.last().expect("nonempty word");
            let s = pick(Box::new(self.a.successors(last))).expect("no dead symbols");
            out.push(s);
        }
        out
    }
}
