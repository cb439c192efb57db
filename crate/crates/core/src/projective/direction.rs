use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::mat2::{Mat2, Vec2};

/// A point of RP^1 stored as an angle in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(f64);

impl Direction {
    pub const X_AXIS: Direction = Direction(0.0);
    pub const Y_AXIS: Direction = Direction(FRAC_PI_2);

    pub fn new(angle: f64) -> Self {
        let mut t = angle.rem_euclid(PI);
        if t >= PI || t.is_nan() {
            t = 0.0;
        }
        Direction(t)
    }

    pub fn from_vector(v: Vec2) -> Self {
        Direction::new(v[1].atan2(v[0]))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// Canonical unit representative `(cos t, sin t)`.
    pub fn unit(self) -> Vec2 {
        let (s, c) = self.0.sin_cos();
        [c, s]
    }

    pub fn perp(self) -> Self {
        Direction::new(self.0 + FRAC_PI_2)
    }

    /// Angular distance on RP^1, in `[0, pi/2]`.
    pub fn dist(self, o: Direction) -> f64 {
        let d = (self.0 - o.0).abs();
        d.min(PI - d)
    }

    /// Counterclockwise arc length from `self` to `o`, in `[0, pi)`.
    pub fn ccw_to(self, o: Direction) -> f64 {
        let d = (o.0 - self.0).rem_euclid(PI);
        if d >= PI {
            0.0
        } else {
            d
        }
    }

    /// Projective action of `m` on this direction.
    pub fn act(self, m: &Mat2) -> Direction {
        Direction::from_vector(m.apply(self.unit()))
    }

    /// Shortest rotation taking this line onto the y-axis; the x-axis turns clockwise.
    pub fn rotation_to_y(self) -> Mat2 {
        let phi = if self.0 == 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 - self.0 };
        Mat2::rotation(phi)
    }

    /// Orthogonal projection coordinate onto this line.
    pub fn project(self, p: Vec2) -> f64 {
        let u = self.unit();
        u[0] * p[0] + u[1] * p[1]
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}", self.0)
    }
}
