//! Truncated trigonometric polynomials on the torus.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// One mode `a cos 2π(k·x) + b sin 2π(k·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// `c + sum of modes`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0)
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let ph = TAU * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
            let (s, c) = ph.sin_cos();
            v += t.cos * c + t.sin * s;
        }
        v
    }

    /// Gradient with respect to `x`.
    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for t in &self.terms {
            let ph = TAU * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
            let (s, c) = ph.sin_cos();
            let d = TAU * (-t.cos * s + t.sin * c);
            g[0] += d * t.k[0] as f64;
            g[1] += d * t.k[1] as f64;
        }
        g
    }

    /// Sum of mode amplitudes, bounding `|p - constant|`.
    pub fn amplitude(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum()
    }

    /// Guaranteed lower and upper bounds.
    pub fn bounds(&self) -> (f64, f64) {
        let a = self.amplitude();
        (self.constant - a, self.constant + a)
    }

    /// Bound on the gradient norm.
    pub fn lipschitz(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| TAU * (t.cos.abs() + t.sin.abs()) * (t.k[0] as f64).hypot(t.k[1] as f64))
            .sum()
    }

    /// Directional derivative bound along a unit vector.
    pub fn lipschitz_along(&self, e: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                TAU * (t.cos.abs() + t.sin.abs()) * (t.k[0] as f64 * e[0] + t.k[1] as f64 * e[1]).abs()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let p = TrigPoly {
            constant: 1.0,
            terms: vec![
                TrigTerm { k: [1, 0], cos: 0.1, sin: -0.05 },
                TrigTerm { k: [1, 2], cos: 0.0, sin: 0.03 },
            ],
        };
        let x = [0.31, 0.77];
        let g = p.grad(x);
        let h = 1e-6;
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fd = (p.eval(a) - p.eval(b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        let (lo, hi) = p.bounds();
        assert!(lo <= p.eval(x) && p.eval(x) <= hi);
    }
}
