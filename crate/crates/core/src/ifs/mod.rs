//! Affine iterated function systems on the plane.

mod config;
mod schedule;
mod separation;

pub use config::{load_ifs_toml, parse_ifs_toml};
pub use schedule::{
    scale_index_ell_k, stopping_schedule, stopping_time_i_k, LogProduct, ScheduleRow, MIN_THRESHOLD_EXPONENT,
    StoppingSchedule,
};
pub use separation::{check_strong_separation, ellipse_gap, Ball, Ellipse, SeparationReport, SeparationVerdict};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::{Eigen2, Mat2, Vec2, PREFIX_CAP};

pub type Word = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub linear: Mat2,
    pub translation: Vec2,
}

impl AffineMap2 {
    pub const IDENTITY: AffineMap2 = AffineMap2 { linear: Mat2::IDENTITY, translation: [0.0, 0.0] };

    pub fn new(linear: Mat2, translation: Vec2) -> Self {
        AffineMap2 { linear, translation }
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        let y = self.linear.apply(x);
        [y[0] + self.translation[0], y[1] + self.translation[1]]
    }

    /// `self o other`
    pub fn compose(&self, other: &AffineMap2) -> AffineMap2 {
        AffineMap2 { linear: self.linear * other.linear, translation: self.apply(other.translation) }
    }

    pub fn fixed_point(&self) -> Result<Vec2> {
        let l = &self.linear;
        let i_minus_a = Mat2::new(1.0 - l.a, -l.b, -l.c, 1.0 - l.d);
        Ok(i_minus_a.inverse()?.apply(self.translation))
    }
}

/// Invertible strictly contracting affine maps with a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineIfs {
    pub maps: Vec<AffineMap2>,
    pub probs: Vec<f64>,
}

impl AffineIfs {
    /// Validates contraction, invertibility and the weights; weights within
    /// 1e-9 of summing to one are renormalized.
    pub fn new(maps: Vec<AffineMap2>, probs: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSystem("empty alphabet".into()));
        }
        if maps.len() != probs.len() {
            return Err(Error::InvalidSystem(format!(
                "{} maps but {} weights",
                maps.len(),
                probs.len()
            )));
        }
        for (k, f) in maps.iter().enumerate() {
            if !f.linear.is_finite() || !f.translation.iter().all(|t| t.is_finite()) {
                return Err(Error::InvalidSystem(format!("map {k} has non-finite entries")));
            }
            let det = f.linear.det();
            if det.abs() <= crate::projective::SINGULAR_DET {
                return Err(Error::SingularMatrix { det });
            }
            let n = f.linear.op_norm();
            if n >= 1.0 {
                return Err(Error::InvalidSystem(format!("map {k} has norm {n} >= 1")));
            }
        }
        if probs.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidSystem("weights must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSystem(format!("weights sum to {total}")));
        }
        let probs = probs.iter().map(|p| p / total).collect();
        Ok(AffineIfs { maps, probs })
    }

    pub fn uniform(maps: Vec<AffineMap2>) -> Result<Self> {
        let n = maps.len().max(1);
        AffineIfs::new(maps, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn matrices(&self) -> Vec<Mat2> {
        self.maps.iter().map(|f| f.linear).collect()
    }

    pub fn adjoint_matrices(&self) -> Vec<Mat2> {
        self.maps.iter().map(|f| f.linear.transpose()).collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.maps.iter().map(|f| f.linear.op_norm()).fold(0.0, f64::max)
    }

    pub fn check_word(&self, w: &[usize]) -> Result<()> {
        match w.iter().find(|&&s| s >= self.len()) {
            Some(s) => Err(Error::InvalidSystem(format!("symbol {s} outside alphabet {}", self.len()))),
            None => Ok(()),
        }
    }

    pub fn eigen(&self) -> Vec<Eigen2> {
        self.maps.iter().map(|f| f.linear.eigen()).collect()
    }

    /// Ball `B(c, R)` with `phi_i(B) ⊂ B` for every map, centred at the mean fixed point.
    pub fn invariant_ball(&self) -> Result<Ball> {
        let mut c = [0.0; 2];
        for f in &self.maps {
            let p = f.fixed_point()?;
            c[0] += p[0];
            c[1] += p[1];
        }
        let n = self.len() as f64;
        let c = [c[0] / n, c[1] / n];
        let mut r: f64 = 0.0;
        for f in &self.maps {
            let y = f.apply(c);
            let d = (y[0] - c[0]).hypot(y[1] - c[1]);
            r = r.max(d / (1.0 - f.linear.op_norm()));
        }
        Ok(Ball { center: c, radius: r })
    }

    /// Bound on `|x|` over the attractor.
    pub fn attractor_radius(&self) -> Result<f64> {
        let b = self.invariant_ball()?;
        Ok(b.center[0].hypot(b.center[1]) + b.radius)
    }

    pub fn transformed(&self, f: impl Fn(&AffineMap2) -> AffineMap2) -> Result<Self> {
        AffineIfs::new(self.maps.iter().map(f).collect(), self.probs.clone())
    }
}

pub fn cylinder_map(ifs: &AffineIfs, word: &[usize]) -> Result<AffineMap2> {
    ifs.check_word(word)?;
    Ok(word.iter().fold(AffineMap2::IDENTITY, |acc, &s| acc.compose(&ifs.maps[s])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub point: Vec2,
    pub depth: usize,
    pub error_bound: f64,
}

/// `Pi(i)`: the limit of `phi_{i|n}(0)`, evaluated until the tail bound is below `tol`.
pub fn natural_projection(ifs: &AffineIfs, word: impl Fn(usize) -> usize, tol: f64) -> Result<Projection> {
    let radius = ifs.attractor_radius()?;
    let mut lin = Mat2::IDENTITY;
    let mut x = [0.0, 0.0];
    let mut bound = radius;
    for n in 0..PREFIX_CAP {
        if bound <= tol {
            return Ok(Projection { point: x, depth: n, error_bound: bound });
        }
        let s = word(n);
        let f = ifs
            .maps
            .get(s)
            .ok_or_else(|| Error::InvalidSystem(format!("symbol {s} outside alphabet")))?;
        let t = lin.apply(f.translation);
        x = [x[0] + t[0], x[1] + t[1]];
        lin = lin * f.linear;
        bound = lin.op_norm() * radius;
    }
    Err(Error::NoConvergence { steps: PREFIX_CAP, last_step: bound })
}

/// `Pi` of a finite prefix extended cyclically.
pub fn project_cyclic(ifs: &AffineIfs, prefix: &[usize], tol: f64) -> Result<Projection> {
    if prefix.is_empty() {
        return Err(Error::PrefixTooShort { len: 0, needed: 1 });
    }
    ifs.check_word(prefix)?;
    natural_projection(ifs, |n| prefix[n % prefix.len()], tol)
}

/// Diagonal product of two line systems `x -> r x + a` (same alphabet size).
pub fn product_system(x: &[(f64, f64)], y: &[(f64, f64)], px: &[f64], py: &[f64]) -> Result<AffineIfs> {
    let mut maps = Vec::new();
    let mut probs = Vec::new();
    for (i, &(rx, ax)) in x.iter().enumerate() {
        for (j, &(ry, ay)) in y.iter().enumerate() {
            maps.push(AffineMap2::new(Mat2::diag(rx, ry), [ax, ay]));
            probs.push(px[i] * py[j]);
        }
    }
    AffineIfs::new(maps, probs)
}

/// Line system `x -> r x + a` embedded on the x-axis as `diag(r, r)`.
pub fn line_system(maps: &[(f64, f64)], probs: &[f64]) -> Result<AffineIfs> {
    AffineIfs::new(
        maps.iter().map(|&(r, a)| AffineMap2::new(Mat2::diag(r, r), [a, 0.0])).collect(),
        probs.to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor_line() -> AffineIfs {
        line_system(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn compose_is_application_order() {
        let f = AffineMap2::new(Mat2::diag(0.5, 0.25), [1.0, 2.0]);
        let g = AffineMap2::new(Mat2::new(0.1, 0.2, -0.3, 0.4), [-1.0, 0.5]);
        let x = [0.3, -0.7];
        let a = f.compose(&g).apply(x);
        let b = f.apply(g.apply(x));
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_systems() {
        let big = AffineMap2::new(Mat2::diag(1.0, 0.5), [0.0, 0.0]);
        assert!(matches!(AffineIfs::uniform(vec![big]), Err(Error::InvalidSystem(_))));
        let sing = AffineMap2::new(Mat2::new(0.5, 0.25, 0.5, 0.25), [0.0, 0.0]);
        assert!(matches!(AffineIfs::uniform(vec![sing]), Err(Error::SingularMatrix { .. })));
        let ok = AffineMap2::new(Mat2::diag(0.5, 0.5), [0.0, 0.0]);
        assert!(AffineIfs::new(vec![ok, ok], vec![0.5, 0.6]).is_err());
        let w = AffineIfs::new(vec![ok, ok], vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((w.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cantor_projection_of_constant_words() {
        let ifs = cantor_line();
        let p = project_cyclic(&ifs, &[1], 1e-12).unwrap();
        assert!((p.point[0] - 1.0).abs() < 1e-12);
        let p = project_cyclic(&ifs, &[0, 1], 1e-12).unwrap();
        // 0.020202..._3 = 2/8 = 1/4
        assert!((p.point[0] - 0.25).abs() < 1e-12);
        assert!(p.error_bound <= 1e-12);
    }

    #[test]
    fn invariant_ball_is_invariant() {
        let ifs = AffineIfs::uniform(vec![
            AffineMap2::new(Mat2::new(0.4, 0.1, -0.2, 0.3), [0.0, 0.0]),
            AffineMap2::new(Mat2::new(0.3, -0.2, 0.1, 0.5), [1.0, 0.5]),
        ])
        .unwrap();
        let b = ifs.invariant_ball().unwrap();
        for f in &ifs.maps {
            let e = Ellipse::image_of_ball(f, &b);
            assert!(e.max_distance_from(b.center) <= b.radius * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cylinder_map_matches_composition() {
        let ifs = cantor_line();
        let f = cylinder_map(&ifs, &[1, 0, 1]).unwrap();
        let x = f.apply([0.0, 0.0]);
        assert!((x[0] - (2.0 / 3.0 + 2.0 / 27.0)).abs() < 1e-15);
        assert!(cylinder_map(&ifs, &[2]).is_err());
    }
}
