//! Dyadic entropies, dimension estimates, magnifications and local entropy averages.

mod fiber;
mod magnify;

pub use fiber::{fiber_structure_check, fiber_structure_pooled, FiberOptions, FiberRecord, FiberReport};
pub use magnify::{
    local_entropy_average, magnification_cylinder, magnification_dyadic, LeaMode, LeaOptions, LeaRecord,
    LeaResult, SystemSample, F64_LEVEL_LIMIT,
};

use std::f64::consts::LN_2;
use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::projective::Direction;

pub const RELIABILITY_RATIO: f64 = 8.0;
pub const MIN_RELIABLE_SCALES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub miller_madow: bool,
    /// Scale reliable when `n_eff / occupied >= reliability_ratio`.
    pub reliability_ratio: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions { miller_madow: true, reliability_ratio: RELIABILITY_RATIO }
    }
}

impl EntropyOptions {
    pub fn plug_in() -> Self {
        EntropyOptions { miller_madow: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntropy {
    pub n: u32,
    /// Bits, Miller–Madow corrected when requested.
    pub bits: f64,
    pub plug_in: f64,
    pub n_eff: f64,
    pub occupied: usize,
    pub reliable: bool,
}

fn from_masses(n: u32, masses: &[f64], n_eff: f64, opts: &EntropyOptions) -> ScaleEntropy {
    let plug_in: f64 = masses.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    let occupied = masses.iter().filter(|&&p| p > 0.0).count();
    let bits = if opts.miller_madow {
        plug_in + (occupied as f64 - 1.0) / (2.0 * n_eff * LN_2)
    } else {
        plug_in
    };
    ScaleEntropy {
        n,
        bits,
        plug_in,
        n_eff,
        occupied,
        reliable: n_eff / occupied.max(1) as f64 >= opts.reliability_ratio,
    }
}

/// `H_n(mu) = H(mu, D_n)` in bits, `D_n` the cells of side `2^-n`.
pub fn dyadic_entropy(mu: &EmpiricalMeasure, n: u32, opts: &EntropyOptions) -> Result<ScaleEntropy> {
    let ix = mu.index_for_level(n)?;
    Ok(from_masses(n, &ix.cell_masses(n)?, mu.n_eff(), opts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub dim: usize,
    pub rows: Vec<ScaleEntropy>,
}

impl EntropyProfile {
    pub fn get(&self, n: u32) -> Option<&ScaleEntropy> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Header `n,H_bits,n_eff,occupied,reliable`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,H_bits,n_eff,occupied,reliable")?;
        for r in &self.rows {
            writeln!(w, "{},{:.12},{:.3},{},{}", r.n, r.bits, r.n_eff, r.occupied, r.reliable)?;
        }
        Ok(())
    }
}

/// All levels in `levels` from one sorted Morton index.
pub fn entropy_profile(mu: &EmpiricalMeasure, levels: RangeInclusive<u32>, opts: &EntropyOptions) -> Result<EntropyProfile> {
    let top = *levels.end();
    let ix = mu.index_for_level(top)?;
    let n_eff = mu.n_eff();
    let rows = levels
        .map(|n| Ok(from_masses(n, &ix.cell_masses(n)?, n_eff, opts)))
        .collect::<Result<_>>()?;
    Ok(EntropyProfile { dim: mu.dim(), rows })
}

/// `H_n(mu | pi_theta)`: entropy on the grid rotated to `(theta, theta^perp)`
/// minus the entropy of the projection onto `theta`.
pub fn conditional_entropy(mu: &EmpiricalMeasure, theta: Direction, n: u32, opts: &EntropyOptions) -> Result<f64> {
    if mu.dim() != 2 {
        return Err(Error::DimensionMismatch("conditional entropy needs a planar measure".into()));
    }
    let u = theta.unit();
    let v = theta.perp().unit();
    let rotated = mu.map_points(|p| [u[0] * p[0] + u[1] * p[1], v[0] * p[0] + v[1] * p[1]])?;
    let joint = dyadic_entropy(&rotated, n, opts)?;
    let proj = dyadic_entropy(&rotated.project_x()?, n, opts)?;
    Ok((joint.bits - proj.bits).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub scales: Vec<u32>,
    pub profile: EntropyProfile,
}

/// Least-squares slope of `H_n` against `n` over the reliable scales of the window.
pub fn entropy_dimension(mu: &EmpiricalMeasure, window: RangeInclusive<u32>, opts: &EntropyOptions) -> Result<DimensionEstimate> {
    let profile = entropy_profile(mu, window, opts)?;
    dimension_from_profile(profile)
}

pub fn dimension_from_profile(profile: EntropyProfile) -> Result<DimensionEstimate> {
    let used: Vec<&ScaleEntropy> = profile.rows.iter().filter(|r| r.reliable).collect();
    if used.len() < MIN_RELIABLE_SCALES {
        return Err(Error::UnreliableScales { reliable: used.len(), needed: MIN_RELIABLE_SCALES });
    }
    let (slope, intercept, stderr) = least_squares(
        &used.iter().map(|r| r.n as f64).collect::<Vec<_>>(),
        &used.iter().map(|r| r.bits).collect::<Vec<_>>(),
    );
    let scales = used.iter().map(|r| r.n).collect();
    Ok(DimensionEstimate { slope, stderr, intercept, scales, profile })
}

/// `(slope, intercept, stderr of slope)`
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, intercept, stderr)
}
