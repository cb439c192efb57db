use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Direction;
use crate::error::{Error, Result};

pub const SINGULAR_DET: f64 = 1e-300;
pub const HYPERBOLIC_GAP: f64 = 1e-12;

pub type Vec2 = [f64; 2];

/// Row-major 2x2 real matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    /// `[a11, a12, a21, a22]`
    pub const fn from_row_major(m: [f64; 4]) -> Self {
        Mat2 { a: m[0], b: m[1], c: m[2], d: m[3] }
    }

    pub fn to_row_major(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Mat2 { a: x, b: 0.0, c: 0.0, d: y }
    }

    /// Counterclockwise rotation by `phi` radians.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2 { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if !(det.abs() > SINGULAR_DET) || !det.is_finite() {
            return Err(Error::SingularMatrix { det });
        }
        let r = 1.0 / det;
        Ok(Mat2 { a: self.d * r, b: -self.b * r, c: -self.c * r, d: self.a * r })
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Largest singular value, from the symmetric form `A A^T`.
    pub fn op_norm(&self) -> f64 {
        let (p, q, r) = self.gram();
        let half = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        (half + rad).max(0.0).sqrt()
    }

    /// Smallest singular value `|det| / ||A||`.
    pub fn min_singular(&self) -> f64 {
        let n = self.op_norm();
        if n == 0.0 {
            0.0
        } else {
            self.det().abs() / n
        }
    }

    fn gram(&self) -> (f64, f64, f64) {
        (
            self.a * self.a + self.b * self.b,
            self.a * self.c + self.b * self.d,
            self.c * self.c + self.d * self.d,
        )
    }

    /// Closed-form SVD `A = U diag(alpha2, alpha1) V^T`, `alpha1 <= alpha2`.
    pub fn svd(&self) -> Result<Svd2> {
        let det = self.det();
        if !(det.abs() > SINGULAR_DET) || !self.is_finite() {
            return Err(Error::SingularMatrix { det });
        }
        let (p, q, r) = self.gram();
        let phi = 0.5 * (2.0 * q).atan2(p - r);
        let half = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let alpha2 = (half + rad).sqrt();
        let alpha1 = det.abs() / alpha2;
        let u = Mat2::rotation(phi);
        let v1 = self.transpose().apply([u.a, u.c]);
        let n1 = v1[0].hypot(v1[1]);
        let (x, y) = (v1[0] / n1, v1[1] / n1);
        // det V = sign(det A)
        let s = det.signum();
        let v = Mat2 { a: x, b: -s * y, c: y, d: s * x };
        Ok(Svd2 { u, alpha1, alpha2, v })
    }

    /// Major axis direction of the ellipse `A(B(0,1))`.
    ///
    /// Read off `A A^T` alone, so nearly rank-one products (where `det` has
    /// cancelled to zero) still have an axis.
    pub fn theta(&self) -> Result<Direction> {
        if !self.is_finite() {
            return Err(Error::SingularMatrix { det: self.det() });
        }
        let (p, q, r) = self.gram();
        let half = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        if !(half > 0.0) {
            return Err(Error::SingularMatrix { det: 0.0 });
        }
        // alpha2^2 - alpha1^2 = 2 rad; compare alpha2 - alpha1 with 1e-12 alpha2
        if rad <= 1e-12 * (half + rad) {
            return Err(Error::DegenerateAxes);
        }
        Ok(Direction::new(0.5 * (2.0 * q).atan2(p - r)))
    }

    /// Eigen-decomposition with `|lambda1| <= |lambda2|`.
    pub fn eigen(&self) -> Eigen2 {
        let tau = self.trace();
        let det = self.det();
        let disc = 0.25 * tau * tau - det;
        if disc < 0.0 {
            return Eigen2::Complex { re: 0.5 * tau, im: (-disc).sqrt() };
        }
        let s = disc.sqrt();
        // avoid cancellation: the larger-magnitude root first
        let big = if tau >= 0.0 { 0.5 * tau + s } else { 0.5 * tau - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (l1, l2) = if small.abs() <= big.abs() { (small, big) } else { (big, small) };
        Eigen2::Real {
            lambda1: l1,
            lambda2: l2,
            v1: self.eigendirection(l1),
            v2: self.eigendirection(l2),
        }
    }

    fn eigendirection(&self, lambda: f64) -> Option<Direction> {
        let r1 = [self.b, lambda - self.a];
        let r2 = [lambda - self.d, self.c];
        let n1 = r1[0].hypot(r1[1]);
        let n2 = r2[0].hypot(r2[1]);
        let scale = self.max_abs().max(lambda.abs()).max(f64::MIN_POSITIVE);
        let v = if n1 >= n2 { r1 } else { r2 };
        if n1.max(n2) <= 1e-14 * scale {
            None
        } else {
            Some(Direction::from_vector(v))
        }
    }

    pub fn is_scalar(&self) -> bool {
        let s = self.max_abs().max(f64::MIN_POSITIVE);
        self.b.abs() <= 1e-14 * s && self.c.abs() <= 1e-14 * s && (self.a - self.d).abs() <= 1e-14 * s
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub u: Mat2,
    pub alpha1: f64,
    pub alpha2: f64,
    pub v: Mat2,
}

impl Svd2 {
    pub fn major_axis(&self) -> Direction {
        Direction::from_vector([self.u.a, self.u.c])
    }

    pub fn reconstruct(&self) -> Mat2 {
        self.u * Mat2::diag(self.alpha2, self.alpha1) * self.v.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eigen2 {
    Real {
        lambda1: f64,
        lambda2: f64,
        v1: Option<Direction>,
        v2: Option<Direction>,
    },
    Complex {
        re: f64,
        im: f64,
    },
}

impl Eigen2 {
    /// `(|lambda1|, |lambda2|)`
    pub fn moduli(&self) -> (f64, f64) {
        match *self {
            Eigen2::Real { lambda1, lambda2, .. } => (lambda1.abs(), lambda2.abs()),
            Eigen2::Complex { re, im } => {
                let m = re.hypot(im);
                (m, m)
            }
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        let (m1, m2) = self.moduli();
        matches!(self, Eigen2::Real { .. }) && m2 - m1 > HYPERBOLIC_GAP
    }

    /// Real eigendirections, attracting (`v2`) first.
    pub fn directions(&self) -> Vec<Direction> {
        match *self {
            Eigen2::Real { v1, v2, .. } => {
                let mut out = Vec::new();
                if let Some(d) = v2 {
                    out.push(d);
                }
                if let Some(d) = v1 {
                    if out.iter().all(|e| e.dist(d) > 1e-12) {
                        out.push(d);
                    }
                }
                out
            }
            Eigen2::Complex { .. } => Vec::new(),
        }
    }
}
