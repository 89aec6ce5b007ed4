//! Functions on the suspension and their integrals along fibers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quad::adaptive_simpson;
use super::system::{smoothstep, ConformalWeight, FlowPoint, SuspensionSystem};
use super::torus::TorusPoint;
use super::trig::TrigPoly;

const FIBER_TOL: f64 = 1e-13;

/// A continuous function on the suspension, `f(x, h)` for `0 <= h <= r(x)`,
/// with `f(x, r(x)) = f(Bx, 0)`.
///
/// The integral methods default to adaptive Simpson; implementations with
/// closed forms override them.
pub trait Observable: Send + Sync {
    fn eval(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64;

    /// `∫_0^h f(x, t) dt` for `0 <= h <= r(x)`.
    fn partial_integral(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        adaptive_simpson(|t| self.eval(sys, x, t), 0.0, h, FIBER_TOL)
    }

    /// `∫_0^{r(x)} f(x, t) dt`.
    fn fiber_integral(&self, sys: &SuspensionSystem, x: TorusPoint) -> f64 {
        self.partial_integral(sys, x, sys.r(x))
    }

    /// Bound on the derivative of the fiber integral along `e_s`.
    fn stable_lipschitz(&self, sys: &SuspensionSystem) -> f64;

    fn describe(&self) -> String;
}

/// `f ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantFn(pub f64);

impl Observable for ConstantFn {
    fn eval(&self, _: &SuspensionSystem, _: TorusPoint, _: f64) -> f64 {
        self.0
    }

    fn partial_integral(&self, _: &SuspensionSystem, _: TorusPoint, h: f64) -> f64 {
        self.0 * h
    }

    fn fiber_integral(&self, sys: &SuspensionSystem, x: TorusPoint) -> f64 {
        self.0 * sys.r(x)
    }

    fn stable_lipschitz(&self, sys: &SuspensionSystem) -> f64 {
        self.0.abs() * sys.roof.lipschitz_along(sys.base.e_s)
    }

    fn describe(&self) -> String {
        format!("constant {}", self.0)
    }
}

/// `f = A(x) + (A(Bx) - A(x)) S(σ) + C(x) sin(πσ)`, `σ = h / r(x)`.
///
/// Continuous across the gluing for any trigonometric `A`, `C`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigFlowFunction {
    pub section: TrigPoly,
    #[serde(default)]
    pub bump: TrigPoly,
}

impl TrigFlowFunction {
    /// A mildly varying positive default.
    pub fn generic() -> Self {
        use super::trig::TrigTerm;
        Self {
            section: TrigPoly {
                constant: 1.0,
                terms: vec![
                    TrigTerm { k: [1, 0], cos: 0.15, sin: 0.0 },
                    TrigTerm { k: [0, 1], cos: 0.0, sin: 0.1 },
                ],
            },
            bump: TrigPoly {
                constant: 0.1,
                terms: vec![TrigTerm { k: [1, 1], cos: 0.05, sin: 0.0 }],
            },
        }
    }

    /// Lower bound, positive means `f > 0` everywhere.
    pub fn lower_bound(&self) -> f64 {
        let (a, _) = self.section.bounds();
        let (b, _) = self.bump.bounds();
        a + b.min(0.0)
    }
}

impl Observable for TrigFlowFunction {
    fn eval(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        let s = h / sys.r(x);
        let a0 = self.section.eval(x.to_f64());
        let a1 = self.section.eval(sys.base.apply(x).to_f64());
        a0 + (a1 - a0) * smoothstep(s) + self.bump.eval(x.to_f64()) * (PI * s).sin()
    }

    fn partial_integral(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        let r = sys.r(x);
        let s = h / r;
        let a0 = self.section.eval(x.to_f64());
        let a1 = self.section.eval(sys.base.apply(x).to_f64());
        let c = self.bump.eval(x.to_f64());
        let s3 = s * s * s;
        r * (a0 * s + (a1 - a0) * (s3 - 0.5 * s3 * s) + c * (1.0 - (PI * s).cos()) / PI)
    }

    fn fiber_integral(&self, sys: &SuspensionSystem, x: TorusPoint) -> f64 {
        let a0 = self.section.eval(x.to_f64());
        let a1 = self.section.eval(sys.base.apply(x).to_f64());
        let c = self.bump.eval(x.to_f64());
        sys.r(x) * (0.5 * (a0 + a1) + 2.0 * c / PI)
    }

    fn stable_lipschitz(&self, sys: &SuspensionSystem) -> f64 {
        let es = sys.base.e_s;
        let (rlo, rhi) = sys.roof_bounds();
        let (alo, ahi) = self.section.bounds();
        let (clo, chi) = self.bump.bounds();
        let amax = alo.abs().max(ahi.abs());
        let cmax = clo.abs().max(chi.abs());
        let la = self.section.lipschitz_along(es);
        let inner = amax + 2.0 * cmax / PI;
        let d_inner = 0.5 * la * (1.0 + sys.base.lambda_s) + 2.0 * self.bump.lipschitz_along(es) / PI;
        sys.roof.lipschitz_along(es) * inner + rhi.max(rlo.abs()) * d_inner
    }

    fn describe(&self) -> String {
        "trigonometric flow function".into()
    }
}

/// `f = -∂α/∂t(·, 0) = log λ_u / r - ∂w/∂h`: the infinitesimal stable
/// contraction rate of the flow-box metric, sign-flipped.
///
/// Continuous within fibers; across the section it jumps by
/// `log λ_u (1/r(x) - 1/r(Bx))`, so it is continuous exactly when the roof
/// is constant. Orbit integrals are unaffected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionRate;

impl Observable for ContractionRate {
    fn eval(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        sys.base.log_lambda() / sys.r(x) - sys.dw_dh(FlowPoint { x, h })
    }

    fn partial_integral(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        let r = sys.r(x);
        let w0 = sys.w(FlowPoint { x, h: 0.0 });
        let w1 = sys.w(FlowPoint { x, h });
        sys.base.log_lambda() * h / r - (w1 - w0)
    }

    fn fiber_integral(&self, sys: &SuspensionSystem, x: TorusPoint) -> f64 {
        let a = &sys.weight.section;
        sys.base.log_lambda() - a.eval(sys.base.apply(x).to_f64()) + a.eval(x.to_f64())
    }

    fn stable_lipschitz(&self, sys: &SuspensionSystem) -> f64 {
        sys.weight.section.lipschitz_along(sys.base.e_s) * (1.0 + sys.base.lambda_s)
    }

    fn describe(&self) -> String {
        "contraction rate".into()
    }
}

/// `f + ∂φ/∂h` for a gluing-continuous `φ` of conformal-weight shape: adds
/// a flow coboundary, leaving every closed-orbit integral unchanged.
pub struct WithCoboundary<'a> {
    pub base: &'a dyn Observable,
    pub phi: ConformalWeight,
}

impl WithCoboundary<'_> {
    fn phi(&self, sys: &SuspensionSystem, x: TorusPoint, s: f64) -> f64 {
        self.phi.eval(&sys.base, x, s)
    }
}

impl Observable for WithCoboundary<'_> {
    fn eval(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        let r = sys.r(x);
        self.base.eval(sys, x, h) + self.phi.d_sigma(&sys.base, x, h / r) / r
    }

    fn partial_integral(&self, sys: &SuspensionSystem, x: TorusPoint, h: f64) -> f64 {
        let s = h / sys.r(x);
        self.base.partial_integral(sys, x, h) + self.phi(sys, x, s) - self.phi(sys, x, 0.0)
    }

    fn fiber_integral(&self, sys: &SuspensionSystem, x: TorusPoint) -> f64 {
        self.base.fiber_integral(sys, x) + self.phi(sys, x, 1.0) - self.phi(sys, x, 0.0)
    }

    fn stable_lipschitz(&self, sys: &SuspensionSystem) -> f64 {
        self.base.stable_lipschitz(sys)
            + self.phi.section.lipschitz_along(sys.base.e_s) * (1.0 + sys.base.lambda_s)
    }

    fn describe(&self) -> String {
        format!("{} plus a flow coboundary", self.base.describe())
    }
}

/// `∫_0^t f(Φ^τ p) dτ` by adaptive Simpson, split at section crossings.
/// Independent of the closed-form fiber integrals; used as an oracle.
pub fn orbit_integral_quad(
    sys: &SuspensionSystem,
    f: &dyn Observable,
    p: FlowPoint,
    t: f64,
    tol: f64,
) -> f64 {
    if t < 0.0 {
        let (q, _) = sys.flow(p, t);
        return -orbit_integral_quad(sys, f, q, -t, tol);
    }
    let mut x = p.x;
    let mut h = p.h;
    let mut left = t;
    let mut total = 0.0;
    while left > 0.0 {
        let r = sys.r(x);
        let end = (h + left).min(r);
        total += adaptive_simpson(|s| f.eval(sys, x, s), h, end, tol);
        left -= end - h;
        if left > 0.0 {
            x = sys.base.apply(x);
            h = 0.0;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::super::system::SystemConfig;
    use super::super::trig::TrigTerm;
    use super::*;

    fn wavy() -> SuspensionSystem {
        SuspensionSystem::new(SystemConfig {
            roof: TrigPoly {
                constant: 1.0,
                terms: vec![TrigTerm { k: [1, 0], cos: 0.15, sin: 0.05 }],
            },
            weight: ConformalWeight {
                section: TrigPoly {
                    constant: 0.0,
                    terms: vec![TrigTerm { k: [0, 1], cos: 0.1, sin: 0.0 }],
                },
                bump: TrigPoly::constant(0.05),
            },
            ..SystemConfig::default()
        })
        .unwrap()
    }

    fn check_closed_forms(sys: &SuspensionSystem, f: &dyn Observable, continuous: bool) {
        for k in 0..10 {
            let x = TorusPoint::from_f64([0.07 * k as f64 + 0.01, 0.31 * k as f64 + 0.2]);
            let r = sys.r(x);
            let fiber = adaptive_simpson(|t| f.eval(sys, x, t), 0.0, r, 1e-13);
            assert!((fiber - f.fiber_integral(sys, x)).abs() < 1e-11, "{}", f.describe());
            let h = 0.37 * r;
            let part = adaptive_simpson(|t| f.eval(sys, x, t), 0.0, h, 1e-13);
            assert!((part - f.partial_integral(sys, x, h)).abs() < 1e-11);
            let top = f.eval(sys, x, r);
            let bottom = f.eval(sys, sys.base.apply(x), 0.0);
            if continuous {
                assert!((top - bottom).abs() < 1e-9, "{} not continuous", f.describe());
            }
        }
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let sys = wavy();
        check_closed_forms(&sys, &ConstantFn(1.3), true);
        check_closed_forms(&sys, &TrigFlowFunction::generic(), true);
        check_closed_forms(&sys, &ContractionRate, false);
        let flat_roof = sys.with_weight(sys.weight.clone()).unwrap();
        let flat_roof = SuspensionSystem::new(SystemConfig {
            roof: TrigPoly::constant(0.9),
            ..flat_roof.config
        })
        .unwrap();
        check_closed_forms(&flat_roof, &ContractionRate, true);
        let base = TrigFlowFunction::generic();
        let cob = WithCoboundary {
            base: &base,
            phi: ConformalWeight {
                section: TrigPoly {
                    constant: 0.0,
                    terms: vec![TrigTerm { k: [2, 1], cos: 0.03, sin: 0.02 }],
                },
                bump: TrigPoly::constant(0.04),
            },
        };
        check_closed_forms(&sys, &cob, true);
    }

    #[test]
    fn stable_lipschitz_bounds_fiber_slope() {
        let sys = wavy();
        let fs: [&dyn Observable; 3] = [&ConstantFn(1.0), &TrigFlowFunction::generic(), &ContractionRate];
        for f in fs {
            let l = f.stable_lipschitz(&sys);
            for k in 0..20 {
                let x = TorusPoint::from_f64([0.05 * k as f64, 0.13 * k as f64 + 0.4]);
                let e = 1e-6;
                let es = sys.base.e_s;
                let d = (f.fiber_integral(&sys, x.add([e * es[0], e * es[1]]))
                    - f.fiber_integral(&sys, x.add([-e * es[0], -e * es[1]])))
                    / (2.0 * e);
                assert!(d.abs() <= l + 1e-6, "{}: {d} > {l}", f.describe());
            }
        }
    }
}
