use serde::{Deserialize, Serialize};

use crate::ifs::{Ball, Ellipse};
use crate::projective::{Direction, Vec2};

/// Rectangle centred at `center` with long half-side along `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub center: Vec2,
    pub direction: Direction,
    pub half_long: f64,
    pub half_short: f64,
}

impl Rectangle {
    /// `Y_{x,theta,r1,r2}`: sides `2^-r1` along `theta` and `2^-r2` across.
    pub fn dyadic(center: Vec2, direction: Direction, r1: f64, r2: f64) -> Self {
        Rectangle {
            center,
            direction,
            half_long: 0.5 * (-r1).exp2(),
            half_short: 0.5 * (-r2).exp2(),
        }
    }

    fn local(&self, p: Vec2) -> Vec2 {
        let u = self.direction.unit();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        [u[0] * d[0] + u[1] * d[1], -u[1] * d[0] + u[0] * d[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    All,
    Ball(Ball),
    /// Standard dyadic cell `prod_d [index_d 2^-level, (index_d + 1) 2^-level)`.
    Cell { level: i32, index: [i64; 2] },
    Rect(Rectangle),
    /// Half-open `[lo, hi)` on the x-axis, for 1-D measures.
    Interval { lo: f64, hi: f64 },
}

impl Region {
    pub fn cell_containing(p: Vec2, level: i32) -> Region {
        let s = (level as f64).exp2();
        Region::Cell { level, index: [(p[0] * s).floor() as i64, (p[1] * s).floor() as i64] }
    }

    /// Lower corner and side of a dyadic cell.
    pub fn cell_geometry(level: i32, index: [i64; 2]) -> (Vec2, f64) {
        let side = (-(level as f64)).exp2();
        ([index[0] as f64 * side, index[1] as f64 * side], side)
    }

    pub fn contains(&self, p: Vec2, dim: usize) -> bool {
        match self {
            Region::All => true,
            Region::Ball(b) => {
                if dim == 1 {
                    (p[0] - b.center[0]).abs() <= b.radius
                } else {
                    b.contains(p)
                }
            }
            Region::Cell { level, index } => {
                let (lo, side) = Region::cell_geometry(*level, *index);
                let inx = p[0] >= lo[0] && p[0] < lo[0] + side;
                inx && (dim == 1 || (p[1] >= lo[1] && p[1] < lo[1] + side))
            }
            Region::Rect(r) => {
                let q = r.local(p);
                q[0].abs() <= r.half_long && q[1].abs() <= r.half_short
            }
            Region::Interval { lo, hi } => p[0] >= *lo && p[0] < *hi,
        }
    }

    /// Smallest width, the scale used to stop refining zoom cylinders.
    pub fn scale(&self) -> f64 {
        match self {
            Region::All => f64::INFINITY,
            Region::Ball(b) => 2.0 * b.radius,
            Region::Cell { level, .. } => (-(*level as f64)).exp2(),
            Region::Rect(r) => 2.0 * r.half_short,
            Region::Interval { lo, hi } => hi - lo,
        }
    }

    fn axis_box(&self, dim: usize) -> Option<(Vec2, Vec2)> {
        match self {
            Region::Cell { level, index } => {
                let (lo, side) = Region::cell_geometry(*level, *index);
                let (ylo, yhi) = if dim == 1 { (f64::NEG_INFINITY, f64::INFINITY) } else { (lo[1], lo[1] + side) };
                Some(([lo[0], ylo], [lo[0] + side, yhi]))
            }
            Region::Interval { lo, hi } => Some(([*lo, f64::NEG_INFINITY], [*hi, f64::INFINITY])),
            _ => None,
        }
    }

    /// Conservative: `false` only if the ellipse misses the region.
    pub fn may_intersect(&self, e: &Ellipse, dim: usize) -> bool {
        match self {
            Region::All => true,
            Region::Ball(b) => {
                let d = (e.center[0] - b.center[0]).hypot(e.center[1] - b.center[1]);
                d <= b.radius + e.shape.op_norm()
            }
            Region::Rect(r) => {
                let u = r.direction.unit();
                let v = r.direction.perp().unit();
                let c = r.local(e.center);
                c[0].abs() <= r.half_long + ext(e, u) && c[1].abs() <= r.half_short + ext(e, v)
            }
            _ => {
                let (lo, hi) = self.axis_box(dim).unwrap();
                let h = e.half_extents();
                e.center[0] + h[0] >= lo[0]
                    && e.center[0] - h[0] < hi[0]
                    && e.center[1] + h[1] >= lo[1]
                    && e.center[1] - h[1] < hi[1]
            }
        }
    }

    /// Conservative: `true` only if the whole ellipse lies in the region.
    pub fn contains_ellipse(&self, e: &Ellipse, dim: usize) -> bool {
        match self {
            Region::All => true,
            Region::Ball(b) => {
                let d = (e.center[0] - b.center[0]).hypot(e.center[1] - b.center[1]);
                d + e.shape.op_norm() < b.radius
            }
            Region::Rect(r) => {
                let u = r.direction.unit();
                let v = r.direction.perp().unit();
                let c = r.local(e.center);
                c[0].abs() + ext(e, u) < r.half_long && c[1].abs() + ext(e, v) < r.half_short
            }
            _ => {
                let (lo, hi) = self.axis_box(dim).unwrap();
                let h = e.half_extents();
                e.center[0] - h[0] > lo[0]
                    && e.center[0] + h[0] < hi[0]
                    && e.center[1] - h[1] > lo[1]
                    && e.center[1] + h[1] < hi[1]
            }
        }
    }
}

/// Half-width of the ellipse along unit `n`.
fn ext(e: &Ellipse, n: Vec2) -> f64 {
    let t = e.shape.transpose().apply(n);
    t[0].hypot(t[1])
}
