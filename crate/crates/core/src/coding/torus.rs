//! Hyperbolic toral automorphisms with exact fixed-point orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO64: f64 = 18_446_744_073_709_551_616.0;

/// A point of `R^2 / Z^2` stored as 64-bit fixed point per coordinate.
///
/// Integer matrices act exactly (wrapping arithmetic is reduction mod 1), so
/// long orbits carry no accumulated rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPoint(pub [u64; 2]);

impl TorusPoint {
    pub const ZERO: Self = Self([0, 0]);

    /// Reduces each coordinate mod 1.
    pub fn from_f64(x: [f64; 2]) -> Self {
        Self([frac_to_fixed(x[0]), frac_to_fixed(x[1])])
    }

    /// Coordinates in `[0, 1)`.
    pub fn to_f64(self) -> [f64; 2] {
        [fixed_to_frac(self.0[0]), fixed_to_frac(self.0[1])]
    }

    /// Translation by a real vector.
    pub fn add(self, d: [f64; 2]) -> Self {
        Self([
            self.0[0].wrapping_add(frac_to_fixed(d[0])),
            self.0[1].wrapping_add(frac_to_fixed(d[1])),
        ])
    }

    /// Shortest representative of `other - self` in `[-1/2, 1/2)^2`.
    pub fn delta(self, other: Self) -> [f64; 2] {
        let d = |a: u64, b: u64| b.wrapping_sub(a) as i64 as f64 / TWO64;
        [d(self.0[0], other.0[0]), d(self.0[1], other.0[1])]
    }
}

fn frac_to_fixed(x: f64) -> u64 {
    let f = x - x.floor();
    // Split to keep all 53 mantissa bits without overflowing at f -> 1.
    let hi = (f * 4294967296.0).floor();
    let lo = ((f * 4294967296.0 - hi) * 4294967296.0).round();
    ((hi as u64) << 32).wrapping_add(lo as u64)
}

fn fixed_to_frac(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// An orientation-preserving hyperbolic automorphism `x -> Bx` of the torus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToralAutomorphism {
    pub matrix: [[i64; 2]; 2],
    pub lambda_u: f64,
    pub lambda_s: f64,
    /// Unit unstable eigenvector.
    pub e_u: [f64; 2],
    /// Unit stable eigenvector.
    pub e_s: [f64; 2],
    /// Inverse of the column matrix `[e_u e_s]`, mapping `x` to `(u, s)`.
    to_eigen: [[f64; 2]; 2],
}

impl ToralAutomorphism {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = matrix;
        let det = a * d - b * c;
        let tr = a + d;
        if det != 1 {
            return Err(Error::NotHyperbolic(format!("determinant {det}, expected 1")));
        }
        if tr <= 2 {
            return Err(Error::NotHyperbolic(format!(
                "trace {tr}; need trace > 2 for positive real eigenvalues off the unit circle"
            )));
        }
        let t = tr as f64;
        let disc = (t * t - 4.0).sqrt();
        let lambda_u = 0.5 * (t + disc);
        let lambda_s = 1.0 / lambda_u;
        let eig = |l: f64| -> [f64; 2] {
            // (B - l) v = 0: pick the better-conditioned row.
            let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
            let v = if (a - l).abs() + b.abs() >= c.abs() + (d - l).abs() {
                [b, l - a]
            } else {
                [l - d, c]
            };
            let n = v[0].hypot(v[1]);
            let mut v = [v[0] / n, v[1] / n];
            if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
                v = [-v[0], -v[1]];
            }
            v
        };
        let e_u = eig(lambda_u);
        let mut e_s = eig(lambda_s);
        // Orient (e_u, e_s) positively.
        if e_u[0] * e_s[1] - e_u[1] * e_s[0] < 0.0 {
            e_s = [-e_s[0], -e_s[1]];
        }
        let det_e = e_u[0] * e_s[1] - e_u[1] * e_s[0];
        let to_eigen = [
            [e_s[1] / det_e, -e_s[0] / det_e],
            [-e_u[1] / det_e, e_u[0] / det_e],
        ];
        Ok(Self {
            matrix,
            lambda_u,
            lambda_s,
            e_u,
            e_s,
            to_eigen,
        })
    }

    /// The cat map `[[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self::new([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda_u.ln()
    }

    pub fn apply(&self, p: TorusPoint) -> TorusPoint {
        apply_fixed(self.matrix, p)
    }

    pub fn apply_inverse(&self, p: TorusPoint) -> TorusPoint {
        let [[a, b], [c, d]] = self.matrix;
        apply_fixed([[d, -b], [-c, a]], p)
    }

    /// `B^n p` for any integer `n`.
    pub fn iterate(&self, mut p: TorusPoint, n: i64) -> TorusPoint {
        if n >= 0 {
            for _ in 0..n {
                p = self.apply(p);
            }
        } else {
            for _ in 0..(-n) {
                p = self.apply_inverse(p);
            }
        }
        p
    }

    pub fn apply_vec(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.matrix;
        [
            m[0][0] as f64 * v[0] + m[0][1] as f64 * v[1],
            m[1][0] as f64 * v[0] + m[1][1] as f64 * v[1],
        ]
    }

    /// Eigen-coordinates `(u, s)` with `v = u e_u + s e_s`.
    pub fn to_eigen(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.to_eigen;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn from_eigen(&self, us: [f64; 2]) -> [f64; 2] {
        [
            us[0] * self.e_u[0] + us[1] * self.e_s[0],
            us[0] * self.e_u[1] + us[1] * self.e_s[1],
        ]
    }

    /// Images of the standard lattice basis in eigen-coordinates.
    pub fn lattice_basis(&self) -> [[f64; 2]; 2] {
        [self.to_eigen([1.0, 0.0]), self.to_eigen([0.0, 1.0])]
    }

    /// Points `x` with `B^n x = x`, i.e. solutions of `(B^n - I) x in Z^2`.
    pub fn periodic_points(&self, n: u32) -> Vec<TorusPoint> {
        let mut m = [[1i64, 0], [0, 1]];
        for _ in 0..n {
            m = mat_mul(m, self.matrix);
        }
        let k = [[m[0][0] - 1, m[0][1]], [m[1][0], m[1][1] - 1]];
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        let dabs = det.abs();
        // x = K^{-1} z for integer z; enumerate z over a fundamental set.
        let inv = [[k[1][1], -k[0][1]], [-k[1][0], k[0][0]]];
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for z0 in 0..dabs {
            for z1 in 0..dabs {
                let nx = inv[0][0] * z0 + inv[0][1] * z1;
                let ny = inv[1][0] * z0 + inv[1][1] * z1;
                let key = (nx.rem_euclid(dabs), ny.rem_euclid(dabs));
                if seen.insert(key) {
                    out.push(TorusPoint::from_f64([
                        key.0 as f64 / dabs as f64,
                        key.1 as f64 / dabs as f64,
                    ]));
                }
            }
        }
        out
    }
}

fn mat_mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn apply_fixed(m: [[i64; 2]; 2], p: TorusPoint) -> TorusPoint {
    let [x, y] = p.0;
    let row = |r: [i64; 2]| (r[0] as u64).wrapping_mul(x).wrapping_add((r[1] as u64).wrapping_mul(y));
    TorusPoint([row(m[0]), row(m[1])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_eigendata() {
        let b = ToralAutomorphism::cat();
        let lu = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((b.lambda_u - lu).abs() < 1e-14);
        let bu = b.apply_vec(b.e_u);
        let bs = b.apply_vec(b.e_s);
        for i in 0..2 {
            assert!((bu[i] - b.lambda_u * b.e_u[i]).abs() < 1e-12);
            assert!((bs[i] - b.lambda_s * b.e_s[i]).abs() < 1e-12);
        }
        let us = b.to_eigen([0.3, -0.7]);
        let back = b.from_eigen(us);
        assert!((back[0] - 0.3).abs() < 1e-15 && (back[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hyperbolic() {
        assert!(ToralAutomorphism::new([[1, 1], [0, 1]]).is_err());
        assert!(ToralAutomorphism::new([[0, 1], [1, 0]]).is_err());
        assert!(ToralAutomorphism::new([[-2, 1], [1, -1]]).is_err());
        assert!(ToralAutomorphism::new([[3, 1], [2, 1]]).is_ok());
    }

    #[test]
    fn fixed_point_orbits_are_exact() {
        let b = ToralAutomorphism::cat();
        let p = TorusPoint::from_f64([0.123456789, 0.987654321]);
        let q = b.iterate(b.iterate(p, 100), -100);
        assert_eq!(p, q);
    }

    #[test]
    fn conversion_round_trip() {
        for x in [0.0, 0.25, 0.999_999_999_999, -0.25, 1.5] {
            let p = TorusPoint::from_f64([x, 0.5]);
            let y = p.to_f64()[0];
            assert!((y - (x - x.floor())).abs() < 1e-15);
            assert!(y < 1.0);
        }
        let a = TorusPoint::from_f64([0.1, 0.9]);
        let d = a.delta(a.add([0.05, 0.2]));
        assert!((d[0] - 0.05).abs() < 1e-15 && (d[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn period_two_points() {
        let b = ToralAutomorphism::cat();
        // det(B^2 - I) = -5 for the cat map: five points of period dividing 2.
        let pts = b.periodic_points(2);
        assert_eq!(pts.len(), 5);
        for p in pts {
            let q = b.iterate(p, 2);
            let d = p.delta(q);
            assert!(d[0].abs() < 1e-15 && d[1].abs() < 1e-15);
        }
    }
}
