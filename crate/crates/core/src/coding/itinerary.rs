//! Itineraries of flow orbits through the Markov rectangles.

use serde::{Deserialize, Serialize};

use super::partition::MarkovPartition;
use super::system::{FlowPoint, SuspensionSystem};
use crate::error::{Error, Result};
use crate::sft::{format_word, Word};

#[derive(Debug, Clone, Copy)]
pub struct ItineraryOptions {
    /// Distance to a rectangle corner treated as a corner hit.
    pub corner_tol: f64,
    /// Return corner hits in `degenerate` instead of failing.
    pub allow_degenerate: bool,
}

impl Default for ItineraryOptions {
    fn default() -> Self {
        Self {
            corner_tol: 1e-10,
            allow_degenerate: false,
        }
    }
}

/// `(τ, ξ)`: section hitting times and rectangle labels along an orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Itinerary {
    /// `τ(0) = 0`, then successive returns to the section.
    pub tau: Vec<f64>,
    pub xi: Word,
    /// Eigen-coordinates of `B^j x` in the frame of `R_{ξ(j)}`.
    pub local: Vec<[f64; 2]>,
    /// Steps at which the orbit passed within tolerance of a corner.
    pub degenerate: Vec<usize>,
}

impl Itinerary {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `π_{ξ(0)}(p)`: unstable coordinate on the model segment.
    pub fn projection(&self) -> f64 {
        self.local[0][0]
    }

    /// CSV rows `step,tau,symbol,u,s` with 1-based symbols.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,tau,symbol,u,s\n");
        for j in 0..self.len() {
            out.push_str(&format!(
                "{j},{:.17e},{},{:.17e},{:.17e}\n",
                self.tau[j],
                format_word(&self.xi[j..j + 1]),
                self.local[j][0],
                self.local[j][1]
            ));
        }
        out
    }
}

/// First `m` symbols of the itinerary of `p`; ties on rectangle edges are
/// broken by half-open membership.
pub fn itinerary(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    p: FlowPoint,
    m: usize,
    opts: ItineraryOptions,
) -> Result<Itinerary> {
    if m == 0 {
        return Err(Error::EmptyDepth);
    }
    let mut x = p.x;
    let mut tau = Vec::with_capacity(m);
    let mut xi = Vec::with_capacity(m);
    let mut local = Vec::with_capacity(m);
    let mut degenerate = Vec::new();
    let mut t = -p.h;
    for j in 0..m {
        let loc = part.locate(x, opts.corner_tol);
        if loc.on_corner {
            if !opts.allow_degenerate {
                return Err(Error::DegenerateOrbit { step: j });
            }
            degenerate.push(j);
        }
        tau.push(t.max(0.0));
        xi.push(loc.rect);
        local.push(loc.local);
        t += sys.r(x);
        x = sys.base.apply(x);
    }
    part.a.check_admissible(&xi)?;
    Ok(Itinerary {
        tau,
        xi,
        local,
        degenerate,
    })
}

/// `π_A` of a truncated itinerary against the direct projection of `p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrip {
    pub p: FlowPoint,
    pub rect: usize,
    pub projection: f64,
    pub pi_a: f64,
    pub radius: f64,
    pub error: f64,
}

pub fn round_trip(sys: &SuspensionSystem, part: &MarkovPartition, p: FlowPoint, m: usize) -> Result<RoundTrip> {
    let it = itinerary(sys, part, p, m, ItineraryOptions::default())?;
    let pa = part.pi_a(&it.xi)?;
    Ok(RoundTrip {
        p,
        rect: pa.rect,
        projection: it.projection(),
        pi_a: pa.u,
        radius: pa.radius,
        error: (pa.u - it.projection()).abs(),
    })
}

/// Least-squares decay rate of `max_p |π_A(ξ_p[..m]) - π(p)|` in `m`; the
/// coding contracts like `λ_u^{-m}`, so this estimates `log λ_u`.
pub fn fit_contraction_exponent(
    sys: &SuspensionSystem,
    part: &MarkovPartition,
    points: &[FlowPoint],
    lengths: std::ops::RangeInclusive<usize>,
) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for m in lengths {
        let mut worst: f64 = 0.0;
        for &p in points {
            worst = worst.max(round_trip(sys, part, p, m)?.error);
        }
        if worst > 0.0 {
            xs.push(m as f64);
            ys.push(worst.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Parameter("need at least two lengths with nonzero error".into()));
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::super::partition::build_partition;
    use super::super::torus::TorusPoint;
    use super::*;

    #[test]
    fn fixed_point_has_constant_itinerary() {
        let sys = SuspensionSystem::cat_constant(0.7).unwrap();
        let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
        let p = FlowPoint { x: TorusPoint::ZERO, h: 0.0 };
        assert!(itinerary(&sys, &part, p, 5, ItineraryOptions::default()).is_err());
        let it = itinerary(
            &sys,
            &part,
            p,
            12,
            ItineraryOptions { allow_degenerate: true, ..Default::default() },
        )
        .unwrap();
        assert!(it.xi.iter().all(|&s| s == it.xi[0]));
        for (j, t) in it.tau.iter().enumerate() {
            assert!((t - 0.7 * j as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn period_two_orbit_has_periodic_itinerary() {
        let sys = SuspensionSystem::cat_constant(1.0).unwrap();
        let part = build_partition(&sys.base, 1, sys.config.radii).unwrap();
        let opts = ItineraryOptions { allow_degenerate: true, ..Default::default() };
        let pts = sys.base.periodic_points(2);
        let mut seen = 0;
        for x in pts {
            if sys.base.apply(x).delta(x).iter().all(|d| d.abs() < 1e-12) {
                continue;
            }
            seen += 1;
            let it = itinerary(&sys, &part, FlowPoint { x, h: 0.0 }, 10, opts).unwrap();
            for j in 0..8 {
                assert_eq!(it.xi[j], it.xi[j + 2]);
            }
            assert_ne!(it.xi[0], it.xi[1]);
        }
        assert_eq!(seen, 4);
    }

    #[test]
    fn contraction_exponent_is_log_lambda() {
        let sys = SuspensionSystem::cat_constant(1.0).unwrap();
        let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
        let pts: Vec<FlowPoint> = (0..200)
            .map(|k| sys.point_from_unit([(0.0371 * k as f64 + 0.013) % 1.0, (0.6180339 * k as f64 + 0.1) % 1.0, 0.5]))
            .collect();
        let e = fit_contraction_exponent(&sys, &part, &pts, 4..=16).unwrap();
        let l = sys.base.log_lambda();
        assert!((e - l).abs() < 0.05 * l, "{e} vs {l}");
    }

    #[test]
    fn projection_matches_symbolic_coordinate() {
        let sys = SuspensionSystem::cat_constant(1.0).unwrap();
        let part = build_partition(&sys.base, 1, sys.config.radii).unwrap();
        for k in 0..20 {
            let p = FlowPoint::new([0.037 * k as f64 + 0.011, 0.61 - 0.029 * k as f64], 0.0);
            let it = itinerary(&sys, &part, p, 30, ItineraryOptions::default()).unwrap();
            let pa = part.pi_a(&it.xi).unwrap();
            assert_eq!(pa.rect, it.xi[0]);
            assert!((pa.u - it.projection()).abs() <= pa.radius + 1e-12);
        }
    }
}
