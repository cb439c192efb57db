use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::{seeded_rng, CHUNK};
use super::{EmpiricalMeasure, Provenance, Rectangle, Region};
use crate::error::{Error, Result};
use crate::ifs::Ball;
use crate::projective::{Direction, Mat2, Vec2};

enum Picker {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl Picker {
    fn new(m: &EmpiricalMeasure) -> Result<Self> {
        if m.is_uniformly_weighted() {
            Ok(Picker::Uniform(m.len()))
        } else {
            WeightedIndex::new(m.weights())
                .map(Picker::Weighted)
                .map_err(|e| Error::InvalidSystem(e.to_string()))
        }
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            Picker::Uniform(n) => rng.gen_range(0..*n),
            Picker::Weighted(w) => w.sample(rng),
        }
    }
}

fn same_dim(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", mu.dim(), nu.dim())));
    }
    Ok(())
}

/// `n_pairs` points `X + Y` with `X ~ mu`, `Y ~ nu` independent.
pub fn convolve_empirical(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, n_pairs: usize, seed: u64) -> Result<EmpiricalMeasure> {
    same_dim(mu, nu)?;
    if n_pairs == 0 {
        return Err(Error::EmptySupport);
    }
    let (pa, pb) = (Picker::new(mu)?, Picker::new(nu)?);
    let (a, b) = (mu.points(), nu.points());
    let mut out = vec![[0.0; 2]; n_pairs];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15, c as u64);
        for p in chunk.iter_mut() {
            let x = a[pa.pick(&mut rng)];
            let y = b[pb.pick(&mut rng)];
            *p = [x[0] + y[0], x[1] + y[1]];
        }
    });
    let mut m = EmpiricalMeasure::uniform(mu.dim(), out)?;
    m.provenance = Provenance { seed, depth: mu.provenance.depth.min(nu.provenance.depth), truncation: mu.provenance.truncation + nu.provenance.truncation, note: "convolution".into() };
    Ok(m)
}

/// Exact convolution of two small empirical measures (all `n m` pairs).
pub fn convolve_full(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    same_dim(mu, nu)?;
    if mu.len().saturating_mul(nu.len()) > 100_000_000 {
        return Err(Error::InvalidSystem("full convolution above 1e8 pairs".into()));
    }
    let mut pts = Vec::with_capacity(mu.len() * nu.len());
    let mut ws = Vec::with_capacity(mu.len() * nu.len());
    for (x, wx) in mu.points().iter().zip(mu.weights()) {
        for (y, wy) in nu.points().iter().zip(nu.weights()) {
            pts.push([x[0] + y[0], x[1] + y[1]]);
            ws.push(wx * wy);
        }
    }
    EmpiricalMeasure::new(mu.dim(), pts, ws)
}

/// `mu^{D}` for `D = D_level(x)`: restrict to the cell and rescale it onto `[-1,1)^d`.
pub fn dyadic_rescale(mu: &EmpiricalMeasure, x: Vec2, level: i32, mass_floor: f64) -> Result<EmpiricalMeasure> {
    let region = Region::cell_containing(x, level);
    let Region::Cell { index, .. } = region else { unreachable!() };
    let (lo, side) = Region::cell_geometry(level, index);
    mu.restrict_normalize(&region, mass_floor)?
        .map_points(|p| [2.0 * (p[0] - lo[0]) / side - 1.0, 2.0 * (p[1] - lo[1]) / side - 1.0])
}

/// `S_r`: scale by `2^r`, restrict to the closed unit ball, renormalize.
pub fn magnify_unit_ball(mu: &EmpiricalMeasure, r: f64, mass_floor: f64) -> Result<EmpiricalMeasure> {
    let s = r.exp2();
    mu.map_points(|p| [s * p[0], s * p[1]])?
        .restrict_normalize(&Region::Ball(Ball { center: [0.0, 0.0], radius: 1.0 }), mass_floor)
}

/// `H_Y`: restrict to the rectangle and stretch it onto `R_theta^{-1} [-1,1]^2`.
pub fn rectangle_normalize(mu: &EmpiricalMeasure, y: &Rectangle, mass_floor: f64) -> Result<EmpiricalMeasure> {
    let r = y.direction.rotation_to_y();
    let rinv = r.transpose();
    let stretch = Mat2::diag(1.0 / y.half_short, 1.0 / y.half_long);
    let h = rinv * stretch * r;
    let c = y.center;
    mu.restrict_normalize(&Region::Rect(*y), mass_floor)?
        .map_points(|p| h.apply([p[0] - c[0], p[1] - c[1]]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TubeSlice {
    pub direction: Direction,
    pub center: Vec2,
    pub half_width: f64,
    #[serde(skip)]
    pub profile: Option<EmpiricalMeasure>,
}

impl TubeSlice {
    pub fn measure(&self) -> &EmpiricalMeasure {
        self.profile.as_ref().expect("slice profile")
    }
}

/// Points within `half_width` of the line `center + theta`, rotated by
/// `R_theta` and translated so the line is the y-axis; the profile is the
/// resulting y-coordinate.
pub fn tube_slice(mu: &EmpiricalMeasure, theta: Direction, center: Vec2, half_width: f64, mass_floor: f64) -> Result<TubeSlice> {
    if mu.dim() != 2 {
        return Err(Error::DimensionMismatch("slices need a planar measure".into()));
    }
    let r = theta.rotation_to_y();
    let n = theta.perp().unit();
    let tube = mu.restrict(
        |p| ((p[0] - center[0]) * n[0] + (p[1] - center[1]) * n[1]).abs() <= half_width,
        mass_floor,
    )?;
    let profile = tube.map_points(|p| [r.apply([p[0] - center[0], p[1] - center[1]])[1], 0.0])?;
    let profile = EmpiricalMeasure::new(1, profile.points().to_vec(), profile.weights().to_vec())?;
    Ok(TubeSlice { direction: theta, center, half_width, profile: Some(profile) })
}
