use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EmpiricalMeasure, Provenance, Region};
use crate::error::{Error, Result};
use crate::ifs::{AffineIfs, AffineMap2, Ellipse};
use crate::projective::Vec2;

/// Samples per RNG stream; results do not depend on the thread count.
pub const CHUNK: usize = 1 << 14;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) struct SymbolTable {
    cumulative: Vec<f64>,
}

impl SymbolTable {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        SymbolTable { cumulative }
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// I.i.d. word of length `len` drawn from the IFS weights.
pub fn random_word(ifs: &AffineIfs, len: usize, seed: u64, stream: u64) -> Vec<usize> {
    let table = SymbolTable::new(&ifs.probs);
    let mut rng = seeded_rng(seed, stream);
    (0..len).map(|_| table.draw(&mut rng)).collect()
}

/// Depth at which `max||A_i||^depth * radius <= resolution`.
pub fn depth_for_resolution(ifs: &AffineIfs, resolution: f64) -> Result<u32> {
    let rho = ifs.max_norm();
    let radius = ifs.attractor_radius()?.max(1e-300);
    if resolution >= radius {
        return Ok(1);
    }
    Ok(((resolution / radius).ln() / rho.ln()).ceil().max(1.0) as u32)
}

fn truncated_point<R: Rng>(ifs: &AffineIfs, table: &SymbolTable, depth: u32, rng: &mut R, buf: &mut Vec<usize>) -> Vec2 {
    buf.clear();
    buf.extend((0..depth).map(|_| table.draw(rng)));
    let mut x = [0.0, 0.0];
    for &s in buf.iter().rev() {
        x = ifs.maps[s].apply(x);
    }
    x
}

/// `n` i.i.d. points `phi_{i|depth}(0)` with `i` drawn from the Bernoulli measure.
pub fn sample_selfaffine(ifs: &AffineIfs, n: usize, depth: u32, seed: u64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let table = SymbolTable::new(&ifs.probs);
    let mut points = vec![[0.0; 2]; n];
    points.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = seeded_rng(seed, c as u64);
        let mut buf = Vec::with_capacity(depth as usize);
        for p in chunk.iter_mut() {
            *p = truncated_point(ifs, &table, depth, &mut rng, &mut buf);
        }
    });
    let mut m = EmpiricalMeasure::uniform(2, points)?;
    m.provenance = Provenance {
        seed,
        depth,
        truncation: ifs.max_norm().powi(depth as i32) * ifs.attractor_radius()?,
        note: "chaos".into(),
    };
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoomOptions {
    /// Stop refining once a cylinder's diameter is below `refine * region.scale()`.
    pub refine: f64,
    /// Sampling resolution relative to `region.scale()`.
    pub resolution: f64,
    pub max_leaves: usize,
    pub dim: usize,
}

impl Default for ZoomOptions {
    fn default() -> Self {
        ZoomOptions { refine: 0.125, resolution: 1e-6, max_leaves: 1 << 20, dim: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct ZoomSample {
    pub measure: EmpiricalMeasure,
    /// Estimated `mu(region)`.
    pub mass: f64,
    pub leaves: usize,
}

struct Leaf {
    map: AffineMap2,
    prob: f64,
    full: bool,
}

/// Draws `mu` conditioned on `region` by expanding only the cylinders whose
/// image of an invariant ball meets the region.
pub fn zoom_sample(ifs: &AffineIfs, region: &Region, n_target: usize, seed: u64, opts: ZoomOptions) -> Result<ZoomSample> {
    let ball = ifs.invariant_ball()?.scaled(1.0 + 1e-9);
    let base = Ellipse::disk(&ball);
    let scale = region.scale();
    let mut leaves = Vec::new();
    let mut stack = vec![(AffineMap2::IDENTITY, 1.0_f64)];
    while let Some((f, p)) = stack.pop() {
        let e = base.image(&f);
        if !region.may_intersect(&e, opts.dim) {
            continue;
        }
        if region.contains_ellipse(&e, opts.dim) {
            leaves.push(Leaf { map: f, prob: p, full: true });
        } else if e.diameter() <= opts.refine * scale || p < 1e-300 {
            leaves.push(Leaf { map: f, prob: p, full: false });
        } else {
            for (g, q) in ifs.maps.iter().zip(&ifs.probs).rev() {
                stack.push((f.compose(g), p * q));
            }
        }
        if leaves.len() + stack.len() > opts.max_leaves {
            return Err(Error::InsufficientMass { n_eff: 0.0, floor: n_target as f64 });
        }
    }
    if leaves.is_empty() {
        return Err(Error::EmptySupport);
    }
    let total: f64 = leaves.iter().map(|l| l.prob).sum();
    let table = SymbolTable::new(&ifs.probs);
    let radius = ifs.attractor_radius()?;
    let rho = ifs.max_norm();
    let target_res = opts.resolution * scale.min(radius.max(1e-300) * 2.0);
    let per_leaf: Vec<(Vec<Vec2>, Vec<f64>, f64)> = leaves
        .par_iter()
        .enumerate()
        .map(|(idx, leaf)| {
            let n_a = ((n_target as f64) * leaf.prob / total).ceil().max(1.0) as usize;
            let norm = leaf.map.linear.op_norm();
            let depth = if norm * radius <= target_res {
                0
            } else {
                ((target_res / (norm * radius)).ln() / rho.ln()).ceil().max(0.0) as u32
            };
            let mut rng = seeded_rng(seed, idx as u64);
            let mut buf = Vec::with_capacity(depth as usize);
            let w = leaf.prob / n_a as f64;
            let mut pts = Vec::new();
            let mut ws = Vec::new();
            let mut kept = 0.0;
            for _ in 0..n_a {
                let x = leaf.map.apply(truncated_point(ifs, &table, depth, &mut rng, &mut buf));
                if leaf.full || region.contains(x, opts.dim) {
                    pts.push(x);
                    ws.push(w);
                    kept += w;
                }
            }
            (pts, ws, kept)
        })
        .collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut mass = 0.0;
    for (p, w, k) in per_leaf {
        points.extend(p);
        weights.extend(w);
        mass += k;
    }
    if points.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut measure = EmpiricalMeasure::new(opts.dim, points, weights)?;
    measure.provenance = Provenance { seed, depth: 0, truncation: target_res, note: "zoom".into() };
    Ok(ZoomSample { measure, mass, leaves: leaves.len() })
}
