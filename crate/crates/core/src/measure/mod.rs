//! Weighted point clouds standing in for self-affine measures.
//!
//! One-dimensional measures are carried as points on the x-axis.

mod io;
mod levy;
mod morton;
mod ops;
mod region;
pub(crate) mod sample;

pub use io::{read_snapshot, read_snapshot_file, write_csv, write_snapshot, write_snapshot_file};
pub use levy::levy_distance;
pub use morton::{MortonIndex, MAX_DEPTH_1D, MAX_DEPTH_2D};
pub use ops::{convolve_empirical, convolve_full, dyadic_rescale, magnify_unit_ball, rectangle_normalize, tube_slice, TubeSlice};
pub use region::{Rectangle, Region};
pub use sample::{
    depth_for_resolution, random_word, sample_selfaffine, seeded_rng, zoom_sample, ZoomOptions, ZoomSample, CHUNK,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::AffineMap2;
use crate::projective::{Direction, Vec2};

pub const DEFAULT_MASS_FLOOR: f64 = 200.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub depth: u32,
    /// Truncation bound `|Pi(i) - phi_{i|depth}(0)|`.
    pub truncation: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<Vec2>,
    weights: Vec<f64>,
    pub provenance: Provenance,
    index: Option<Arc<MortonIndex>>,
}

impl PartialEq for EmpiricalMeasure {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.points == o.points && self.weights == o.weights
    }
}

impl EmpiricalMeasure {
    /// Weights are normalized to total mass one; equal weights become exactly `1/n`.
    pub fn new(dim: usize, points: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::DimensionMismatch(format!("dimension {dim}")));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points, {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSystem("weights must be finite and non-negative".into()));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidSystem("non-finite coordinate".into()));
        }
        let total: f64 = weights.iter().sum();
        if points.is_empty() || !(total > 0.0) {
            return Err(Error::EmptySupport);
        }
        let mut points = points;
        if dim == 1 {
            points.iter_mut().for_each(|p| p[1] = 0.0);
        }
        let w0 = weights[0];
        let weights = if weights.iter().all(|&w| w == w0) {
            vec![1.0 / weights.len() as f64; weights.len()]
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        Ok(EmpiricalMeasure { dim, points, weights, provenance: Provenance::default(), index: None })
    }

    /// Keeps the weights bit-exact when they already sum to one within 1e-9.
    pub fn from_normalized(dim: usize, points: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let mut m = EmpiricalMeasure::new(dim, points, weights.clone())?;
        if (total - 1.0).abs() <= 1e-9 {
            m.weights = weights;
        }
        Ok(m)
    }

    pub fn uniform(dim: usize, points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        EmpiricalMeasure::new(dim, points, vec![1.0; n])
    }

    pub fn from_line(xs: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        EmpiricalMeasure::new(1, xs.into_iter().map(|x| [x, 0.0]).collect(), weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[0])
    }

    /// Kish effective sample size `1 / sum w^2`.
    pub fn n_eff(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn is_uniformly_weighted(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| w == w0)
    }

    pub fn mean(&self) -> Vec2 {
        let mut m = [0.0; 2];
        for (p, w) in self.points.iter().zip(&self.weights) {
            m[0] += w * p[0];
            m[1] += w * p[1];
        }
        m
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn max_abs_coordinate(&self) -> f64 {
        self.points.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max)
    }

    /// Attach a Morton index at `depth`; later entropy queries reuse it.
    pub fn build_index(&mut self, depth: u32) -> Result<()> {
        self.index = Some(Arc::new(MortonIndex::build(self, depth)?));
        Ok(())
    }

    pub fn index(&self) -> Option<&MortonIndex> {
        self.index.as_deref()
    }

    pub(crate) fn index_for_level(&self, n: u32) -> Result<std::borrow::Cow<'_, MortonIndex>> {
        match &self.index {
            Some(ix) if ix.depth >= n => Ok(std::borrow::Cow::Borrowed(ix.as_ref())),
            Some(ix) => Err(Error::DepthExceeded { requested: n, available: ix.depth }),
            None => {
                let max = MortonIndex::max_depth(self);
                if n > max {
                    return Err(Error::DepthExceeded { requested: n, available: max });
                }
                Ok(std::borrow::Cow::Owned(MortonIndex::build(self, max)?))
            }
        }
    }

    fn rebuild(&self, dim: usize, points: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        let mut m = EmpiricalMeasure::from_normalized(dim, points, weights)?;
        m.provenance = self.provenance.clone();
        Ok(m)
    }

    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Result<Self> {
        self.rebuild(self.dim, self.points.iter().map(|&p| f(p)).collect(), self.weights.clone())
    }

    pub fn pushforward(&self, f: &AffineMap2) -> Result<Self> {
        self.map_points(|p| f.apply(p))
    }

    pub fn translate(&self, v: Vec2) -> Result<Self> {
        self.map_points(|p| [p[0] + v[0], p[1] + v[1]])
    }

    /// Keep the points satisfying `keep`, renormalize, and require at least
    /// `mass_floor` effective samples.
    pub fn restrict(&self, keep: impl Fn(Vec2) -> bool, mass_floor: f64) -> Result<Self> {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            if keep(*p) {
                pts.push(*p);
                ws.push(*w);
            }
        }
        if pts.is_empty() {
            return Err(Error::EmptySupport);
        }
        let m = self.rebuild(self.dim, pts, ws)?;
        let n_eff = m.n_eff();
        if n_eff < mass_floor {
            return Err(Error::InsufficientMass { n_eff, floor: mass_floor });
        }
        Ok(m)
    }

    pub fn restrict_normalize(&self, region: &Region, mass_floor: f64) -> Result<Self> {
        let dim = self.dim;
        self.restrict(|p| region.contains(p, dim), mass_floor)
    }

    /// Mass of `region` under the (normalized) measure.
    pub fn mass_of(&self, region: &Region) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| region.contains(**p, self.dim))
            .map(|(_, w)| w)
            .sum()
    }

    /// Orthogonal projection onto the line `theta`, as a 1-D measure.
    pub fn project_line(&self, theta: Direction) -> Result<Self> {
        let u = theta.unit();
        self.rebuild(
            1,
            self.points.iter().map(|p| [u[0] * p[0] + u[1] * p[1], 0.0]).collect(),
            self.weights.clone(),
        )
    }

    pub fn project_x(&self) -> Result<Self> {
        self.project_line(Direction::X_AXIS)
    }

    pub fn project_y(&self) -> Result<Self> {
        self.project_line(Direction::Y_AXIS)
    }

    /// Lift a 1-D measure onto the x-axis of the plane.
    pub fn embed_plane(&self) -> Result<Self> {
        self.rebuild(2, self.points.clone(), self.weights.clone())
    }
}
