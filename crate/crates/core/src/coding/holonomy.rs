//! Stable holonomy data: the alignment time `η`, the cocycle `u` on pairs
//! of points on a common weak-stable leaf, and the symbolic function `f_A`.
//!
//! Points are handled in lifted coordinates `(x, h)` with
//! `(x, h) ≡ (Bx, h - r(x))`. A pair `(p, q)` on a weak-stable leaf is
//! brought to the form `x_q = x_p + a e_s`, in which
//! `u(p, q) = G(x_p, h_p) - G(x_q, h_q) + D(x_p, a)`, where `G` integrates
//! `f` from the section along the lifted fiber and
//! `D(x, a) = Σ_j [F(B^j x + λ_s^j a e_s) - F(B^j x)]` sums fiber-integral
//! differences of the forward-asymptotic orbits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::itinerary::{itinerary, ItineraryOptions};
use super::observable::{orbit_integral_quad, Observable};
use super::partition::{Located, MarkovPartition};
use super::system::{FlowPoint, SuspensionSystem};
use super::torus::TorusPoint;
use crate::error::{Error, Result};
use crate::thermo::Potential;

/// Terms kept in the strong-leaf height offsets.
const LEAF_TERMS: i32 = 64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UOptions {
    /// Orbit time after which the stable tail is truncated.
    pub t_max: f64,
    /// Largest acceptable tail bound.
    pub tol: f64,
    /// Largest stable offset `|a|` accepted when aligning arbitrary pairs.
    pub plaque_radius: f64,
    /// Largest unstable offset treated as zero when aligning.
    pub leaf_tol: f64,
}

impl Default for UOptions {
    fn default() -> Self {
        Self {
            t_max: 40.0,
            tol: 1e-12,
            plaque_radius: 0.5,
            leaf_tol: 1e-9,
        }
    }
}

/// `p = (x, h)` and `q = (x + a e_s, hq)` on the same sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StablePair {
    pub x: TorusPoint,
    pub h: f64,
    pub a: f64,
    pub hq: f64,
}

impl StablePair {
    pub fn xq(&self, sys: &SuspensionSystem) -> TorusPoint {
        offset_s(sys, self.x, self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UValue {
    pub value: f64,
    pub tail_bound: f64,
}

fn offset_s(sys: &SuspensionSystem, x: TorusPoint, a: f64) -> TorusPoint {
    let e = sys.base.e_s;
    x.add([a * e[0], a * e[1]])
}

fn offset_u(sys: &SuspensionSystem, x: TorusPoint, v: f64) -> TorusPoint {
    let e = sys.base.e_u;
    x.add([v * e[0], v * e[1]])
}

/// Expresses `q` on the sheet of `p` with `x_q - x_p` along `e_s`.
pub fn align(sys: &SuspensionSystem, p: FlowPoint, q: FlowPoint, opts: &UOptions) -> Result<StablePair> {
    let mut best: Option<(f64, StablePair)> = None;
    for k in -2..=2 {
        let qk = sys.sheet(q, k);
        let us = sys.base.to_eigen(p.x.delta(qk.x));
        if us[0].abs() > opts.leaf_tol || us[1].abs() > opts.plaque_radius {
            continue;
        }
        let score = us[1].abs() + (qk.h - p.h).abs();
        if best.map_or(true, |b| score < b.0) {
            best = Some((
                score,
                StablePair {
                    x: p.x,
                    h: p.h,
                    a: us[1],
                    hq: qk.h,
                },
            ));
        }
    }
    best.map(|b| b.1).ok_or_else(|| {
        Error::OffPlaque(format!(
            "no sheet puts q within {} of the weak-stable leaf of p",
            opts.plaque_radius
        ))
    })
}

/// Height offset `θ(x, a)` of the strong-stable leaf: `(x + a e_s, h + θ)`
/// is forward-asymptotic to `(x, h)`.
pub fn theta_s(sys: &SuspensionSystem, x: TorusPoint, a: f64) -> f64 {
    let ls = sys.base.lambda_s;
    let mut y = x;
    let mut scale = a;
    let mut total = 0.0;
    for _ in 0..LEAF_TERMS {
        total += sys.r(offset_s(sys, y, scale)) - sys.r(y);
        y = sys.base.apply(y);
        scale *= ls;
    }
    total
}

/// Height offset `θ^u(x, v)` of the strong-unstable leaf: `(x + v e_u, h + θ^u)`
/// is backward-asymptotic to `(x, h)`.
pub fn theta_u(sys: &SuspensionSystem, x: TorusPoint, v: f64) -> f64 {
    let ls = sys.base.lambda_s;
    let mut y = x;
    let mut scale = v;
    let mut total = 0.0;
    for _ in 0..LEAF_TERMS {
        y = sys.base.apply_inverse(y);
        scale *= ls;
        total -= sys.r(offset_u(sys, y, scale)) - sys.r(y);
    }
    total
}

/// Point of the strong-unstable leaf of `p` at unstable offset `v`, lifted
/// to the sheet of `p` (height may leave `[0, r)`).
pub fn unstable_lift(sys: &SuspensionSystem, p: FlowPoint, v: f64) -> FlowPoint {
    FlowPoint {
        x: offset_u(sys, p.x, v),
        h: p.h + theta_u(sys, p.x, v),
    }
}

/// `η(p, q)`: `Φ^η(p)` lies on the strong-stable leaf of `q`.
pub fn eta_pair(sys: &SuspensionSystem, pair: &StablePair) -> f64 {
    pair.hq - pair.h - theta_s(sys, pair.x, pair.a)
}

pub fn eta(sys: &SuspensionSystem, p: FlowPoint, q: FlowPoint, opts: &UOptions) -> Result<f64> {
    Ok(eta_pair(sys, &align(sys, p, q, opts)?))
}

/// `G(x, h) = ∫_0^h f` along the lifted fiber over `x`, for any real `h`.
pub fn orbit_integral_lifted(sys: &SuspensionSystem, f: &dyn Observable, x: TorusPoint, h: f64) -> f64 {
    let mut x = x;
    let mut h = h;
    let mut acc = 0.0;
    loop {
        if h < 0.0 {
            x = sys.base.apply_inverse(x);
            h += sys.r(x);
            acc -= f.fiber_integral(sys, x);
            continue;
        }
        let r = sys.r(x);
        if h > r {
            acc += f.fiber_integral(sys, x);
            h -= r;
            x = sys.base.apply(x);
            continue;
        }
        return acc + f.partial_integral(sys, x, h);
    }
}

/// `∫_0^t f(Φ^τ p) dτ` from the closed-form fiber integrals.
pub fn orbit_integral(sys: &SuspensionSystem, f: &dyn Observable, p: FlowPoint, t: f64) -> f64 {
    orbit_integral_lifted(sys, f, p.x, p.h + t) - orbit_integral_lifted(sys, f, p.x, p.h)
}

fn stable_terms(sys: &SuspensionSystem, opts: &UOptions) -> usize {
    let (_, rmax) = sys.roof_bounds();
    ((opts.t_max / rmax).ceil() as usize).max(1)
}

fn tail_bound(sys: &SuspensionSystem, f: &dyn Observable, a: f64, n: usize) -> f64 {
    let ls = sys.base.lambda_s;
    f.stable_lipschitz(sys) * a.abs() * ls.powi(n as i32) / (1.0 - ls)
}

/// `D(x, a)` truncated after `n` terms.
pub fn stable_sum(sys: &SuspensionSystem, f: &dyn Observable, x: TorusPoint, a: f64, n: usize) -> f64 {
    let ls = sys.base.lambda_s;
    let mut y = x;
    let mut scale = a;
    let mut total = 0.0;
    for _ in 0..n {
        total += f.fiber_integral(sys, offset_s(sys, y, scale)) - f.fiber_integral(sys, y);
        y = sys.base.apply(y);
        scale *= ls;
    }
    total
}

/// `D(x, a)` with the truncation set by `opts.t_max` and its tail bound.
pub fn stable_sum_checked(
    sys: &SuspensionSystem,
    f: &dyn Observable,
    x: TorusPoint,
    a: f64,
    opts: &UOptions,
) -> Result<UValue> {
    let n = stable_terms(sys, opts);
    let bound = tail_bound(sys, f, a, n);
    if bound > opts.tol {
        let ls = sys.base.lambda_s;
        let l = f.stable_lipschitz(sys) * a.abs() / (1.0 - ls);
        let need = ((opts.tol / l).ln() / ls.ln()).ceil().max(1.0);
        return Err(Error::TailBound {
            bound,
            tol: opts.tol,
            suggested_t_max: need * sys.roof_bounds().1,
        });
    }
    Ok(UValue {
        value: stable_sum(sys, f, x, a, n),
        tail_bound: bound,
    })
}

/// `u` on an aligned pair.
pub fn u_pair(sys: &SuspensionSystem, f: &dyn Observable, pair: &StablePair, opts: &UOptions) -> Result<UValue> {
    let d = stable_sum_checked(sys, f, pair.x, pair.a, opts)?;
    let gp = orbit_integral_lifted(sys, f, pair.x, pair.h);
    let gq = orbit_integral_lifted(sys, f, pair.xq(sys), pair.hq);
    Ok(UValue {
        value: gp - gq + d.value,
        tail_bound: d.tail_bound,
    })
}

/// `u(p, q)` for `q` on the local weak-stable leaf of `p`.
pub fn u(sys: &SuspensionSystem, f: &dyn Observable, p: FlowPoint, q: FlowPoint, opts: &UOptions) -> Result<UValue> {
    u_pair(sys, f, &align(sys, p, q, opts)?, opts)
}

/// `u(p, π_i(p))`, with `π_i(p)` the model point of rectangle `i` at height 0
/// on the weak-stable leaf of `p`; `loc` locates `x_p`.
pub fn u_to_model(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    f: &dyn Observable,
    p: FlowPoint,
    loc: &Located,
    opts: &UOptions,
) -> Result<UValue> {
    let pair = StablePair {
        x: p.x,
        h: p.h,
        a: part.model_s(loc.rect) - loc.local[1],
        hq: 0.0,
    };
    let d = stable_sum_checked(sys, f, pair.x, pair.a, opts)?;
    Ok(UValue {
        value: orbit_integral_lifted(sys, f, p.x, p.h) + d.value,
        tail_bound: d.tail_bound,
    })
}

/// `f_A` as a function of the unstable model coordinate: for `ξ` starting
/// `s0 s1` with `π_A(ξ) = u`, `f_A(ξ) = u(π_A(σξ), π_A(ξ))` depends on `ξ`
/// only through `(s0, s1, u)`.
pub fn f_a_at(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    f: &dyn Observable,
    s0: usize,
    s1: usize,
    u: f64,
    opts: &UOptions,
) -> Result<UValue> {
    let l = part
        .shift(s1, s0)
        .ok_or(Error::Inadmissible { position: 0 })?;
    let xq = part.model_point(s0, u);
    let xp = part.model_point(s1, part.lambda_u * u + l[0]);
    let a = part.lambda_s * part.model_s(s0) + l[1] - part.model_s(s1);
    let d = stable_sum_checked(sys, f, xp, a, opts)?;
    Ok(UValue {
        value: f.fiber_integral(sys, xq) + d.value,
        tail_bound: d.tail_bound,
    })
}

/// `f_A(ξ) = u(π_A(σξ), π_A(ξ))` on a truncated admissible sequence; the
/// tail bound includes the uncertainty of `π_A` from truncation.
pub fn f_a(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    f: &dyn Observable,
    xi: &[usize],
    opts: &UOptions,
) -> Result<UValue> {
    if xi.len() < 2 {
        return Err(Error::ShortWord(xi.len()));
    }
    let q = part.pi_a(xi)?;
    let v = f_a_at(sys, part, f, xi[0], xi[1], q.u, opts)?;
    Ok(UValue {
        value: v.value,
        tail_bound: v.tail_bound + q.radius * part.lambda_u * f.stable_lipschitz(sys),
    })
}

/// `f_A` on depth-`k` cylinders, evaluated at the midpoint of each
/// cylinder image `π_A([w])`, with the largest oscillation between the
/// image endpoints as a variation diagnostic.
#[derive(Debug, Clone)]
pub struct FaPotential {
    pub potential: Potential,
    pub variation: f64,
}

pub fn f_a_potential(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    f: &dyn Observable,
    depth: usize,
    opts: &UOptions,
) -> Result<FaPotential> {
    if depth < 2 {
        return Err(Error::ShortWord(depth));
    }
    let words = part.a.enumerate_words(depth)?;
    let rows: Vec<Result<(f64, f64)>> = words
        .par_iter()
        .map(|w| {
            let j = part.cylinder_image(w);
            let at = |u: f64| f_a_at(sys, part, f, w[0], w[1], u, opts).map(|v| v.value);
            let (lo, mid, hi) = (at(j[0])?, at(0.5 * (j[0] + j[1]))?, at(j[1])?);
            Ok((mid, (lo - mid).abs().max((hi - mid).abs())))
        })
        .collect();
    let mut values = Vec::with_capacity(words.len());
    let mut variation: f64 = 0.0;
    for r in rows {
        let (v, var) = r?;
        values.push(v);
        variation = variation.max(var);
    }
    Ok(FaPotential {
        potential: Potential::new(&part.a, depth, values)?,
        variation,
    })
}

/// Both sides of `∫_0^{τ_m} f∘Φ^τ(p) dτ = u(Φ^{τ_m} p, π_A σ^m ξ) - u(p, π_A ξ)
/// + Σ_{j<m} f_A(σ^j ξ)` along the itinerary `(τ, ξ)` of `p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopingReport {
    pub p: FlowPoint,
    pub m: usize,
    pub t: f64,
    /// Orbit integral by adaptive quadrature.
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn telescoping_check(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    f: &dyn Observable,
    p: FlowPoint,
    m: usize,
    opts: &UOptions,
) -> Result<TelescopingReport> {
    const TAIL: usize = 40;
    const QUAD_TOL: f64 = 1e-10;
    let (p, _) = sys.normalize(p.x, p.h);
    let it = itinerary(sys, part, p, m + TAIL, ItineraryOptions::default())?;
    let t = if m == 0 { 0.0 } else { it.tau[m] };
    let pm = if m == 0 { p } else { FlowPoint { x: sys.base.iterate(p.x, m as i64), h: 0.0 } };
    let loc = |j: usize| Located {
        rect: it.xi[j],
        local: it.local[j],
        on_corner: false,
    };
    let sum = (0..m)
        .map(|j| f_a(sys, part, f, &it.xi[j..], opts).map(|v| v.value))
        .sum::<Result<f64>>()?;
    let rhs = u_to_model(sys, part, f, pm, &loc(m), opts)?.value - u_to_model(sys, part, f, p, &loc(0), opts)?.value + sum;
    let lhs = orbit_integral_quad(sys, f, p, t, QUAD_TOL);
    Ok(TelescopingReport {
        p,
        m,
        t,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::observable::{orbit_integral_quad, ConstantFn, TrigFlowFunction};
    use super::super::partition::build_partition;
    use super::super::system::SystemConfig;
    use super::super::trig::{TrigPoly, TrigTerm};
    use super::*;

    fn wavy() -> SuspensionSystem {
        SuspensionSystem::new(SystemConfig {
            roof: TrigPoly {
                constant: 1.0,
                terms: vec![TrigTerm { k: [1, 0], cos: 0.1, sin: 0.05 }],
            },
            ..SystemConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn strong_stable_points_converge() {
        let sys = wavy();
        let x = TorusPoint::from_f64([0.2, 0.7]);
        let a = 0.05;
        let th = theta_s(&sys, x, a);
        let p = FlowPoint { x, h: 0.3 };
        let q = FlowPoint { x: offset_s(&sys, x, a), h: 0.3 + th };
        let (pt, n) = sys.flow(p, 15.0);
        let (qt, _) = sys.flow(q, 15.0);
        let us = sys.base.to_eigen(pt.x.delta(qt.x));
        // stable part contracts by λ_s per crossing; the unstable part is
        // offset rounding amplified by λ_u per crossing
        assert!((us[1].abs() - a * sys.base.lambda_s.powi(n as i32)).abs() < 1e-12);
        assert!(us[0].abs() < 1e-9);
        assert!((pt.h - qt.h).abs() < 1e-7);
    }

    #[test]
    fn strong_unstable_points_converge_backward() {
        let sys = wavy();
        let p = FlowPoint::new([0.6, 0.1], 0.4);
        let q = unstable_lift(&sys, p, 0.03);
        let (q, _) = sys.normalize(q.x, q.h);
        let (pt, _) = sys.flow(p, -20.0);
        let (qt, _) = sys.flow(q, -20.0);
        let d = pt.x.delta(qt.x);
        assert!(d[0].abs() + d[1].abs() < 1e-8);
        assert!((pt.h - qt.h).abs() < 1e-8);
    }

    #[test]
    fn eta_and_u_along_the_flow() {
        let sys = wavy();
        let f = TrigFlowFunction::generic();
        let opts = UOptions::default();
        let p = FlowPoint::new([0.35, 0.55], 0.2);
        assert_eq!(eta(&sys, p, p, &opts).unwrap(), 0.0);
        assert_eq!(u(&sys, &f, p, p, &opts).unwrap().value, 0.0);
        for t in [0.1, 0.5, 1.7] {
            let (q, _) = sys.flow(p, t);
            assert!((eta(&sys, p, q, &opts).unwrap() - t).abs() < 1e-12);
            let oracle = orbit_integral_quad(&sys, &f, p, t, 1e-12);
            let v = u(&sys, &f, q, p, &opts).unwrap().value;
            assert!((v - oracle).abs() < 1e-9, "{v} {oracle}");
        }
    }

    #[test]
    fn tail_bound_error_suggests_longer_horizon() {
        let sys = wavy();
        let f = TrigFlowFunction::generic();
        let opts = UOptions { t_max: 2.0, ..Default::default() };
        match stable_sum_checked(&sys, &f, TorusPoint::ZERO, 0.3, &opts) {
            Err(Error::TailBound { suggested_t_max, .. }) => {
                let opts = UOptions { t_max: suggested_t_max, ..opts };
                assert!(stable_sum_checked(&sys, &f, TorusPoint::ZERO, 0.3, &opts).is_ok());
            }
            other => panic!("expected a tail-bound error, got {other:?}"),
        }
    }

    #[test]
    fn f_a_is_the_return_time_for_unit_f() {
        let sys = SuspensionSystem::cat_constant(0.8).unwrap();
        let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
        let fa = f_a_potential(&sys, &part, &ConstantFn(1.0), 3, &UOptions::default()).unwrap();
        for v in fa.potential.values() {
            assert!((v - 0.8).abs() < 1e-12);
        }
    }

    fn weighted() -> SuspensionSystem {
        SuspensionSystem::new(SystemConfig {
            roof: TrigPoly {
                constant: 1.0,
                terms: vec![TrigTerm { k: [1, 0], cos: 0.1, sin: 0.05 }],
            },
            weight: super::super::system::ConformalWeight {
                section: TrigPoly {
                    constant: 0.0,
                    terms: vec![TrigTerm { k: [0, 1], cos: 0.05, sin: 0.02 }],
                },
                bump: TrigPoly::constant(0.03),
            },
            ..SystemConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn u_is_additive_on_a_weak_stable_leaf() {
        let sys = wavy();
        let f = TrigFlowFunction::generic();
        let opts = UOptions::default();
        let x = TorusPoint::from_f64([0.13, 0.42]);
        let p = FlowPoint { x, h: 0.2 };
        let q = FlowPoint { x: offset_s(&sys, x, 0.07), h: 0.6 };
        let r = FlowPoint { x: offset_s(&sys, x, -0.04), h: 0.1 };
        let pq = u(&sys, &f, p, q, &opts).unwrap().value;
        let qr = u(&sys, &f, q, r, &opts).unwrap().value;
        let pr = u(&sys, &f, p, r, &opts).unwrap().value;
        assert!((pq + qr - pr).abs() < 1e-10);
        let qp = u(&sys, &f, q, p, &opts).unwrap().value;
        assert!((pq + qp).abs() < 1e-12);
    }

    #[test]
    fn u_matches_asymptotic_orbit_integrals() {
        let sys = wavy();
        let f = TrigFlowFunction::generic();
        let x = TorusPoint::from_f64([0.71, 0.26]);
        let a = 0.06;
        let p = FlowPoint { x, h: 0.35 };
        let q = FlowPoint { x: offset_s(&sys, x, a), h: 0.35 + theta_s(&sys, x, a) };
        let (qn, _) = sys.normalize(q.x, q.h);
        let t = 14.0;
        let oracle = orbit_integral_quad(&sys, &f, qn, t, 1e-12) - orbit_integral_quad(&sys, &f, p, t, 1e-12);
        let v = u(&sys, &f, p, qn, &UOptions::default()).unwrap().value;
        let tail = f.stable_lipschitz(&sys) * a * sys.base.lambda_s.powf(t / 1.2) / (1.0 - sys.base.lambda_s);
        assert!((v - oracle).abs() < tail + 1e-9, "{v} {oracle}");
    }

    #[test]
    fn coboundary_shifts_u_by_endpoint_values() {
        let sys = weighted();
        let f = TrigFlowFunction::generic();
        let phi = super::super::system::ConformalWeight {
            section: TrigPoly {
                constant: 0.0,
                terms: vec![TrigTerm { k: [1, 1], cos: 0.2, sin: 0.0 }],
            },
            bump: TrigPoly::constant(0.1),
        };
        let g = super::super::observable::WithCoboundary { base: &f, phi: phi.clone() };
        let opts = UOptions::default();
        let x = TorusPoint::from_f64([0.52, 0.18]);
        let p = FlowPoint { x, h: 0.3 };
        let q = FlowPoint { x: offset_s(&sys, x, 0.05), h: 0.8 };
        let (qn, _) = sys.normalize(q.x, q.h);
        let val = |pt: FlowPoint| phi.eval(&sys.base, pt.x, sys.sigma(pt));
        let uf = u(&sys, &f, p, qn, &opts).unwrap().value;
        let ug = u(&sys, &g, p, qn, &opts).unwrap().value;
        assert!((ug - uf - (val(p) - val(qn))).abs() < 1e-10, "{} {}", ug - uf, val(p) - val(qn));
    }

    #[test]
    fn telescoping_check_matches_for_random_points() {
        let sys = wavy();
        let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
        let f = TrigFlowFunction::generic();
        for k in 0..10 {
            let p = sys.point_from_unit([(0.093 * k as f64 + 0.05) % 1.0, (0.61 * k as f64 + 0.2) % 1.0, 0.37]);
            let r = telescoping_check(&sys, &part, &f, p, k % 7, &UOptions::default()).unwrap();
            assert!(r.residual < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn f_a_sums_telescope_to_orbit_integrals() {
        use super::super::itinerary::{itinerary, ItineraryOptions};
        let sys = wavy();
        let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
        let f = TrigFlowFunction::generic();
        let opts = UOptions::default();
        let n = 6;
        let p = FlowPoint::new([0.318, 0.127], 0.0);
        let it = itinerary(&sys, &part, p, n + 40, ItineraryOptions::default()).unwrap();
        let lhs: f64 = (0..n).map(|j| f_a(&sys, &part, &f, &it.xi[j..], &opts).unwrap().value).sum();
        let pn = FlowPoint { x: sys.base.iterate(p.x, n as i64), h: 0.0 };
        let l0 = part.locate(p.x, 1e-10);
        let ln = part.locate(pn.x, 1e-10);
        let rhs = orbit_integral_quad(&sys, &f, p, it.tau[n], 1e-12)
            + u_to_model(&sys, &part, &f, p, &l0, &opts).unwrap().value
            - u_to_model(&sys, &part, &f, pn, &ln, &opts).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} {rhs}");
    }
}
