//! Expansion cocycles of the suspension flow for the flow-box metric
//! `e^{2w} (λ_u^{2σ} du² + λ_s^{2σ} ds² + dh²)`.
//!
//! With `F` the weak-stable foliation, `α` is the log-determinant of the
//! normal (strong-stable) action, `α⊥` the log-determinant of the linear
//! holonomy on the transverse (unstable) direction, and `β` the log operator
//! norm of the normal action. All three reduce to sheet counts plus
//! potential differences `Ψ(Φ^t p) - Ψ(p)`.

use serde::{Deserialize, Serialize};

use super::system::{FlowPoint, SuspensionSystem};

/// `σ log λ_s + w`.
pub fn psi_s(sys: &SuspensionSystem, p: FlowPoint) -> f64 {
    sys.sigma(p) * sys.base.lambda_s.ln() + sys.w(p)
}

/// `σ log λ_u + w`.
pub fn psi_u(sys: &SuspensionSystem, p: FlowPoint) -> f64 {
    sys.sigma(p) * sys.base.lambda_u.ln() + sys.w(p)
}

/// `α(p, t)`.
pub fn alpha(sys: &SuspensionSystem, p: FlowPoint, t: f64) -> f64 {
    let (q, n) = sys.flow(p, t);
    n as f64 * sys.base.lambda_s.ln() + psi_s(sys, q) - psi_s(sys, p)
}

/// `α⊥(p, t)`.
pub fn alpha_perp(sys: &SuspensionSystem, p: FlowPoint, t: f64) -> f64 {
    let (q, n) = sys.flow(p, t);
    n as f64 * sys.base.lambda_u.ln() + psi_u(sys, q) - psi_u(sys, p)
}

/// `β(p, t)`; the normal bundle is one-dimensional, so it equals `α`.
pub fn beta(sys: &SuspensionSystem, p: FlowPoint, t: f64) -> f64 {
    alpha(sys, p, t)
}

/// Sampled evaluation of the two inequalities of property `(A)_ε`:
/// `min(α⊥, -β) > C` and `|ρα + α⊥| < ε C` at time `T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyAReport {
    pub rho: f64,
    pub eps: f64,
    pub t: f64,
    pub samples: usize,
    /// Largest admissible `C`: `inf min(α⊥, -β)`.
    pub c: f64,
    /// `sup |ρα + α⊥|`.
    pub margin: f64,
    pub first_holds: bool,
    pub second_holds: bool,
}

impl PropertyAReport {
    pub fn holds(&self) -> bool {
        self.first_holds && self.second_holds
    }
}

pub fn check_property_a(
    sys: &SuspensionSystem,
    rho: f64,
    eps: f64,
    t: f64,
    points: &[FlowPoint],
) -> PropertyAReport {
    let mut c = f64::INFINITY;
    let mut margin: f64 = 0.0;
    for &p in points {
        let a = alpha(sys, p, t);
        let ap = alpha_perp(sys, p, t);
        c = c.min(ap.min(-beta(sys, p, t)));
        margin = margin.max((rho * a + ap).abs());
    }
    PropertyAReport {
        rho,
        eps,
        t,
        samples: points.len(),
        c,
        margin,
        first_holds: c > 0.0,
        second_holds: c > 0.0 && margin < eps * c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_closed_form() {
        let c = 0.9;
        let sys = SuspensionSystem::cat_constant(c).unwrap();
        let p = FlowPoint::new([0.3, 0.8], 0.25);
        for t in [0.0, 0.4, 2.35] {
            let expect = t * sys.base.log_lambda() / c;
            assert!((alpha_perp(&sys, p, t) - expect).abs() < 1e-12);
            assert!((alpha(&sys, p, t) + expect).abs() < 1e-12);
        }
        let pts: Vec<_> = (0..20).map(|k| FlowPoint::new([0.05 * k as f64, 0.3], 0.1)).collect();
        let rep = check_property_a(&sys, 1.0, 1e-6, 2.0, &pts);
        assert!(rep.holds() && rep.margin < 1e-12);
        let rep = check_property_a(&sys, 1.5, 0.1, 2.0, &pts);
        assert!(rep.first_holds && !rep.second_holds);
    }
}
