//! The suspension flow of a toral automorphism under a roof function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::torus::{ToralAutomorphism, TorusPoint};
use super::trig::TrigPoly;
use crate::error::{Error, Result};

/// Conformal weight `w` of the flow-box metric
/// `g = e^{2w} (λ_u^{2σ} du² + λ_s^{2σ} ds² + dσ²)`, where `σ = h / r(x)`.
///
/// `w(x, σ) = A(x) + (A(Bx) - A(x)) S(σ) + C(x) sin²(πσ)` with the
/// smoothstep `S`, so `w(x, 1) = w(Bx, 0)`, `∂w/∂σ` vanishes at both ends and
/// the metric is `C¹` in the flow direction across the gluing. The `C` part
/// vanishes on the section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConformalWeight {
    #[serde(default)]
    pub section: TrigPoly,
    #[serde(default)]
    pub bump: TrigPoly,
}

impl ConformalWeight {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn is_flat(&self) -> bool {
        self.section.is_constant() && self.bump.is_constant() && self.bump.constant == 0.0
    }

    /// `w(x, σ)`.
    pub fn eval(&self, base: &ToralAutomorphism, x: TorusPoint, s: f64) -> f64 {
        let a0 = self.section.eval(x.to_f64());
        let a1 = self.section.eval(base.apply(x).to_f64());
        a0 + (a1 - a0) * smoothstep(s) + self.bump.eval(x.to_f64()) * bump_shape(s)
    }

    /// `∂w/∂σ (x, σ)`.
    pub fn d_sigma(&self, base: &ToralAutomorphism, x: TorusPoint, s: f64) -> f64 {
        let a0 = self.section.eval(x.to_f64());
        let a1 = self.section.eval(base.apply(x).to_f64());
        (a1 - a0) * smoothstep_deriv(s) + self.bump.eval(x.to_f64()) * bump_shape_deriv(s)
    }
}

#[inline]
pub fn smoothstep(s: f64) -> f64 {
    s * s * (3.0 - 2.0 * s)
}

#[inline]
pub fn smoothstep_deriv(s: f64) -> f64 {
    6.0 * s * (1.0 - s)
}

/// `sin²(πσ)`: vanishes with its derivative at both ends.
#[inline]
pub fn bump_shape(s: f64) -> f64 {
    let v = (PI * s).sin();
    v * v
}

#[inline]
pub fn bump_shape_deriv(s: f64) -> f64 {
    PI * (2.0 * PI * s).sin()
}

/// Serializable description of a suspension system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub matrix: [[i64; 2]; 2],
    pub roof: TrigPoly,
    #[serde(default)]
    pub weight: ConformalWeight,
    #[serde(default)]
    pub refinement_level: usize,
    /// Holonomy radii `δ0 < δ1 < δ2`.
    #[serde(default = "default_radii")]
    pub radii: [f64; 3],
}

fn default_radii() -> [f64; 3] {
    [0.1, 0.2, 0.4]
}

impl Default for SystemConfig {
    /// Cat map, unit roof, flat metric, coarsest partition.
    fn default() -> Self {
        Self {
            matrix: [[2, 1], [1, 1]],
            roof: TrigPoly::constant(1.0),
            weight: ConformalWeight::flat(),
            refinement_level: 0,
            radii: default_radii(),
        }
    }
}

/// Hex SHA-256 of the canonical JSON form of a configuration.
pub fn system_hash(config: &SystemConfig) -> String {
    let text = serde_json::to_string(config).expect("configuration serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// A point of the suspension, `(x, h)` with `0 <= h < r(x)` when normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub x: TorusPoint,
    pub h: f64,
}

impl FlowPoint {
    pub fn new(x: [f64; 2], h: f64) -> Self {
        Self {
            x: TorusPoint::from_f64(x),
            h,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuspensionSystem {
    pub base: ToralAutomorphism,
    pub roof: TrigPoly,
    pub weight: ConformalWeight,
    pub config: SystemConfig,
    roof_min: f64,
    roof_max: f64,
}

impl SuspensionSystem {
    pub fn new(config: SystemConfig) -> Result<Self> {
        let base = ToralAutomorphism::new(config.matrix)?;
        let (lo, hi) = config.roof.bounds();
        if !(lo > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "roof lower bound {lo} is not positive"
            )));
        }
        let [d0, d1, d2] = config.radii;
        if !(0.0 < d0 && d0 < d1 && d1 < d2) {
            return Err(Error::InvalidSystem("radii must satisfy 0 < δ0 < δ1 < δ2".into()));
        }
        Ok(Self {
            base,
            roof: config.roof.clone(),
            weight: config.weight.clone(),
            roof_min: lo,
            roof_max: hi,
            config,
        })
    }

    /// Cat map under a constant roof with the flat metric.
    pub fn cat_constant(c: f64) -> Result<Self> {
        Self::new(SystemConfig {
            roof: TrigPoly::constant(c),
            ..SystemConfig::default()
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn with_weight(&self, weight: ConformalWeight) -> Result<Self> {
        Self::new(SystemConfig {
            weight,
            ..self.config.clone()
        })
    }

    #[inline]
    pub fn r(&self, x: TorusPoint) -> f64 {
        self.roof.eval(x.to_f64())
    }

    pub fn roof_bounds(&self) -> (f64, f64) {
        (self.roof_min, self.roof_max)
    }

    pub fn has_constant_roof(&self) -> bool {
        self.roof.is_constant()
    }

    /// Sum of roof values over `x, Bx, ..., B^{n-1}x` (negative `n` walks back).
    pub fn return_time(&self, x: TorusPoint, n: i64) -> f64 {
        let b = &self.base;
        if n >= 0 {
            let mut y = x;
            let mut t = 0.0;
            for _ in 0..n {
                t += self.r(y);
                y = b.apply(y);
            }
            t
        } else {
            let mut y = x;
            let mut t = 0.0;
            for _ in 0..(-n) {
                y = b.apply_inverse(y);
                t -= self.r(y);
            }
            t
        }
    }

    /// Moves a lifted point `(x, h)` to the sheet with `0 <= h < r`.
    /// Returns the point and the number of sheets crossed forward.
    pub fn normalize(&self, mut x: TorusPoint, mut h: f64) -> (FlowPoint, i64) {
        let mut n = 0;
        loop {
            let r = self.r(x);
            if h >= r {
                h -= r;
                x = self.base.apply(x);
                n += 1;
            } else if h < 0.0 {
                x = self.base.apply_inverse(x);
                h += self.r(x);
                n -= 1;
            } else {
                return (FlowPoint { x, h }, n);
            }
        }
    }

    /// `Φ^t(p)` and the number of section crossings.
    pub fn flow(&self, p: FlowPoint, t: f64) -> (FlowPoint, i64) {
        self.normalize(p.x, p.h + t)
    }

    /// Re-expresses `p` on the sheet `k` steps forward, without normalizing.
    pub fn sheet(&self, p: FlowPoint, k: i64) -> FlowPoint {
        let t = self.return_time(p.x, k);
        FlowPoint {
            x: self.base.iterate(p.x, k),
            h: p.h - t,
        }
    }

    pub fn sigma(&self, p: FlowPoint) -> f64 {
        p.h / self.r(p.x)
    }

    /// Conformal weight at a normalized point.
    pub fn w(&self, p: FlowPoint) -> f64 {
        self.weight.eval(&self.base, p.x, self.sigma(p))
    }

    /// `∂w/∂h` at a normalized point.
    pub fn dw_dh(&self, p: FlowPoint) -> f64 {
        let r = self.r(p.x);
        self.weight.d_sigma(&self.base, p.x, p.h / r) / r
    }

    /// Random normalized point from two uniform draws and a height fraction.
    pub fn point_from_unit(&self, u: [f64; 3]) -> FlowPoint {
        let x = TorusPoint::from_f64([u[0], u[1]]);
        FlowPoint {
            x,
            h: u[2] * self.r(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::trig::TrigTerm;
    use super::*;

    fn wavy() -> SuspensionSystem {
        SuspensionSystem::new(SystemConfig {
            roof: TrigPoly {
                constant: 1.0,
                terms: vec![TrigTerm { k: [1, 0], cos: 0.2, sin: 0.0 }],
            },
            weight: ConformalWeight {
                section: TrigPoly {
                    constant: 0.0,
                    terms: vec![TrigTerm { k: [0, 1], cos: 0.1, sin: 0.05 }],
                },
                bump: TrigPoly {
                    constant: 0.02,
                    terms: vec![],
                },
            },
            ..SystemConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn roof_must_be_positive() {
        let cfg = SystemConfig {
            roof: TrigPoly {
                constant: 0.1,
                terms: vec![TrigTerm { k: [1, 1], cos: 0.2, sin: 0.0 }],
            },
            ..SystemConfig::default()
        };
        assert!(SuspensionSystem::new(cfg).is_err());
    }

    #[test]
    fn flow_is_a_group_action() {
        let sys = wavy();
        let p = FlowPoint::new([0.3, 0.6], 0.2);
        let (a, _) = sys.flow(p, 2.7);
        let (b, _) = sys.flow(a, -1.1);
        let (c, _) = sys.flow(p, 1.6);
        assert_eq!(b.x, c.x);
        assert!((b.h - c.h).abs() < 1e-12);
    }

    #[test]
    fn weight_is_continuous_across_gluing() {
        let sys = wavy();
        let x = TorusPoint::from_f64([0.41, 0.13]);
        let r = sys.r(x);
        let below = sys.w(FlowPoint { x, h: r * (1.0 - 1e-12) });
        let above = sys.w(FlowPoint { x: sys.base.apply(x), h: 0.0 });
        assert!((below - above).abs() < 1e-9);
        let p = FlowPoint { x, h: 0.3 };
        let e = 1e-6;
        let fd = (sys.w(FlowPoint { h: 0.3 + e, ..p }) - sys.w(FlowPoint { h: 0.3 - e, ..p })) / (2.0 * e);
        assert!((fd - sys.dw_dh(p)).abs() < 1e-8);
    }
}
