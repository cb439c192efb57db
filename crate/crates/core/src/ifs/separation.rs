use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{AffineIfs, AffineMap2};
use crate::projective::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec2,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: Vec2) -> bool {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) <= self.radius
    }

    pub fn scaled(&self, factor: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * factor }
    }
}

/// Solid ellipse `{center + M u : |u| <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Vec2,
    pub shape: Mat2,
}

impl Ellipse {
    pub fn disk(b: &Ball) -> Self {
        Ellipse { center: b.center, shape: Mat2::diag(b.radius, b.radius) }
    }

    pub fn image_of_ball(f: &AffineMap2, b: &Ball) -> Self {
        Ellipse { center: f.apply(b.center), shape: f.linear.scale(b.radius) }
    }

    pub fn image(&self, f: &AffineMap2) -> Self {
        Ellipse { center: f.apply(self.center), shape: f.linear * self.shape }
    }

    /// Support function `max <n, x>` over the ellipse.
    pub fn support(&self, n: Vec2) -> f64 {
        let t = self.shape.transpose().apply(n);
        n[0] * self.center[0] + n[1] * self.center[1] + t[0].hypot(t[1])
    }

    /// Half-extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> Vec2 {
        let m = &self.shape;
        [m.a.hypot(m.b), m.c.hypot(m.d)]
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.shape.op_norm()
    }

    /// `max |x - p|` over the ellipse, via the secular equation of the
    /// trust-region problem `max_{|u|=1} |d + M u|^2`.
    pub fn max_distance_from(&self, p: Vec2) -> f64 {
        let d = [self.center[0] - p[0], self.center[1] - p[1]];
        let m = self.shape;
        let s = m.transpose() * m;
        let (s1, s2, v) = sym_eigen(&s);
        let mtd = m.transpose().apply(d);
        let b = [v.a * mtd[0] + v.c * mtd[1], v.b * mtd[0] + v.d * mtd[1]];
        let f = |lam: f64| {
            let x = b[0] / (lam - s1);
            let y = b[1] / (lam - s2);
            x * x + y * y
        };
        let nb = b[0].hypot(b[1]);
        let mut up = [0.0; 2];
        let eps = 1e-300_f64.max(1e-15 * s1.abs());
        let hard = b[0].abs() <= 1e-300 && (s1 - s2 <= eps || f(s1 + eps) < 1.0);
        if hard {
            up[1] = if s1 - s2 > eps { b[1] / (s1 - s2) } else { 0.0 };
            up[0] = (1.0 - up[1] * up[1]).max(0.0).sqrt();
        } else {
            let mut lo = s1;
            let mut hi = s1 + nb + 1e-300;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lam = hi;
            up = [b[0] / (lam - s1), b[1] / (lam - s2)];
            let n = up[0].hypot(up[1]);
            if n > 0.0 {
                up = [up[0] / n, up[1] / n];
            }
        }
        let u = v.apply(up);
        let mu = m.apply(u);
        let secular = (d[0] + mu[0]).hypot(d[1] + mu[1]);
        // guard against a bad branch with a sweep
        let sweep = (0..256)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 256.0;
                let w = m.apply([t.cos(), t.sin()]);
                (d[0] + w[0]).hypot(d[1] + w[1])
            })
            .fold(0.0, f64::max);
        secular.max(sweep)
    }
}

fn sym_eigen(s: &Mat2) -> (f64, f64, Mat2) {
    let phi = 0.5 * (2.0 * s.b).atan2(s.a - s.d);
    let half = 0.5 * (s.a + s.d);
    let rad = (0.25 * (s.a - s.d) * (s.a - s.d) + s.b * s.b).sqrt();
    (half + rad, half - rad, Mat2::rotation(phi))
}

/// Largest `min_{y in f} <n,y> - max_{x in e} <n,x>` over unit `n`; equals the
/// Euclidean distance when positive. Returns the gap and the maximizing normal.
pub fn ellipse_gap(e: &Ellipse, f: &Ellipse, n_dirs: usize) -> (f64, Vec2) {
    let g = |phi: f64| {
        let n = [phi.cos(), phi.sin()];
        -f.support([-n[0], -n[1]]) - e.support(n)
    };
    let n_dirs = n_dirs.max(16);
    let step = 2.0 * PI / n_dirs as f64;
    let (mut best_phi, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..n_dirs {
        let phi = k as f64 * step;
        let v = g(phi);
        if v > best {
            best = v;
            best_phi = phi;
        }
    }
    let (mut a, mut b) = (best_phi - step, best_phi + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..120 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    let phi = 0.5 * (a + b);
    let v = g(phi);
    if v > best {
        (v, [phi.cos(), phi.sin()])
    } else {
        (best, [best_phi.cos(), best_phi.sin()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SeparationVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub verdict: SeparationVerdict,
    pub ball: Ball,
    /// `min_i (R - max_{x in phi_i(V)} |x - c|)`
    pub containment_margin: f64,
    /// Smallest pairwise image distance, 0 when some pair meets.
    pub min_gap: f64,
    /// Signed version of `min_gap` (negative under overlap).
    pub signed_gap: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_map: Option<usize>,
}

/// Strong separation with respect to `V`: images of the closed ball lie in
/// the open ball and are pairwise disjoint.
pub fn check_strong_separation(ifs: &AffineIfs, v: &Ball, n_dirs: usize) -> SeparationReport {
    let images: Vec<Ellipse> = ifs.maps.iter().map(|f| Ellipse::image_of_ball(f, v)).collect();
    let mut containment_margin = f64::INFINITY;
    let mut worst_map = None;
    for (k, e) in images.iter().enumerate() {
        let m = v.radius - e.max_distance_from(v.center);
        if m < containment_margin {
            containment_margin = m;
            worst_map = Some(k);
        }
    }
    let mut signed_gap = f64::INFINITY;
    let mut worst_pair = None;
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            let (g, _) = ellipse_gap(&images[i], &images[j], n_dirs);
            if g < signed_gap {
                signed_gap = g;
                worst_pair = Some((i, j));
            }
        }
    }
    let tiny = 1e-12 * v.radius.max(f64::MIN_POSITIVE);
    let pass = containment_margin > tiny && signed_gap > tiny;
    SeparationReport {
        verdict: if pass { SeparationVerdict::Pass } else { SeparationVerdict::Fail },
        ball: *v,
        containment_margin,
        min_gap: signed_gap.max(0.0),
        signed_gap,
        worst_pair,
        worst_map: if containment_margin > tiny { None } else { worst_map },
    }
}
