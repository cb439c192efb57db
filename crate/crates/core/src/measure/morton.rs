use super::EmpiricalMeasure;
use crate::error::{Error, Result};

/// Per-coordinate bits are `depth + exponent + 1`; two interleaved coordinates fit in 64 bits.
pub const MAX_DEPTH_2D: u32 = 31;
pub const MAX_DEPTH_1D: u32 = 52;

/// Points keyed by Z-order at resolution `2^-depth`, sorted.
///
/// Coordinates are offset by `2^exponent` before quantization so that the
/// prefix of a key at level `n` is exactly the standard dyadic cell of side
/// `2^-n` containing the point.
#[derive(Debug, Clone, PartialEq)]
pub struct MortonIndex {
    pub dim: usize,
    pub depth: u32,
    pub exponent: u32,
    pub keys: Vec<u64>,
    pub weights: Vec<f64>,
}

fn spread_bits(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

pub fn interleave(x: u32, y: u32) -> u64 {
    spread_bits(x) | (spread_bits(y) << 1)
}

fn extent_exponent(m: &EmpiricalMeasure) -> u32 {
    let r = m.max_abs_coordinate();
    let mut e = 0u32;
    while (2f64).powi(e as i32) <= r && e < 60 {
        e += 1;
    }
    e
}

impl MortonIndex {
    pub fn max_depth(m: &EmpiricalMeasure) -> u32 {
        let e = extent_exponent(m);
        let cap: u32 = if m.dim() == 1 { 62 } else { 31 };
        cap.saturating_sub(e).min(if m.dim() == 1 { MAX_DEPTH_1D } else { MAX_DEPTH_2D })
    }

    pub fn build(m: &EmpiricalMeasure, depth: u32) -> Result<Self> {
        let exponent = extent_exponent(m);
        let max = MortonIndex::max_depth(m);
        if depth > max {
            return Err(Error::DepthExceeded { requested: depth, available: max });
        }
        let offset = (2f64).powi(exponent as i32);
        let scale = (2f64).powi(depth as i32);
        let limit = if m.dim() == 1 { u64::MAX >> 1 } else { (1u64 << 32) - 1 };
        let q = |x: f64| -> u64 { (((x + offset) * scale).floor().max(0.0) as u64).min(limit) };
        let key = |p: &[f64; 2]| if m.dim() == 1 { q(p[0]) } else { interleave(q(p[0]) as u32, q(p[1]) as u32) };
        let (keys, weights) = if m.is_uniformly_weighted() {
            let mut keys: Vec<u64> = m.points().iter().map(key).collect();
            keys.sort_unstable();
            let w = m.weights().first().copied().unwrap_or(0.0);
            let weights = vec![w; keys.len()];
            (keys, weights)
        } else {
            let mut pairs: Vec<(u64, f64)> = m.points().iter().zip(m.weights()).map(|(p, &w)| (key(p), w)).collect();
            pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            pairs.into_iter().unzip()
        };
        Ok(MortonIndex { dim: m.dim(), depth, exponent, keys, weights })
    }

    fn shift(&self, n: u32) -> u32 {
        self.dim as u32 * (self.depth - n)
    }

    /// Masses of the occupied level-`n` cells, in key order.
    pub fn cell_masses(&self, n: u32) -> Result<Vec<f64>> {
        if n > self.depth {
            return Err(Error::DepthExceeded { requested: n, available: self.depth });
        }
        let s = self.shift(n);
        let mut out = Vec::new();
        let mut cur: Option<u64> = None;
        for (&k, &w) in self.keys.iter().zip(&self.weights) {
            let c = if s >= 64 { 0 } else { k >> s };
            if cur == Some(c) {
                *out.last_mut().unwrap() += w;
            } else {
                out.push(w);
                cur = Some(c);
            }
        }
        Ok(out)
    }

    pub fn occupied(&self, n: u32) -> Result<usize> {
        Ok(self.cell_masses(n)?.len())
    }
}
