use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::AffineIfs;
use crate::measure::{levy_distance, sample::SymbolTable, seeded_rng, EmpiricalMeasure, CHUNK};
use crate::projective::{Direction, Mat2};

pub const BURN_IN: u32 = 50;
pub const HISTOGRAM_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FurstenbergKind {
    /// `mu_F`: directions `theta(A_{in}^{-1} ... A_{i0}^{-1})`.
    Inverse,
    /// `mu_F*`: directions `theta(A*_{in} ... A*_{i0})`.
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurstenbergSample {
    pub kind: FurstenbergKind,
    pub depth: u32,
    pub angles: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurstenbergSummary {
    pub kind: FurstenbergKind,
    pub n: usize,
    /// Masses of `HISTOGRAM_BINS` equal cells of `[0, pi)`.
    pub histogram: Vec<f64>,
    pub max_cell_mass: f64,
    /// Lévy distance between the sample and its image under one random step.
    pub stationarity: f64,
    /// Axial mean direction and its resultant length in `[0, 1]`.
    pub mean_direction: Direction,
    pub concentration: f64,
}

fn step_matrices(ifs: &AffineIfs, kind: FurstenbergKind) -> Result<Vec<Mat2>> {
    ifs.maps
        .iter()
        .map(|f| match kind {
            FurstenbergKind::Inverse => f.linear.inverse(),
            FurstenbergKind::Adjoint => Ok(f.linear.transpose()),
        })
        .collect()
}

/// I.i.d. samples of the stationary measure on RP^1, `depth >= 50` steps each.
pub fn sample_furstenberg(ifs: &AffineIfs, n: usize, depth: u32, seed: u64, kind: FurstenbergKind) -> Result<FurstenbergSample> {
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let depth = depth.max(BURN_IN);
    let mats = step_matrices(ifs, kind)?;
    let table = SymbolTable::new(&ifs.probs);
    let mut angles = vec![Direction::X_AXIS; n];
    angles.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = seeded_rng(seed ^ 0x5f0e_57e3, c as u64);
        for out in chunk.iter_mut() {
            let mut p = Mat2::IDENTITY;
            for _ in 0..depth {
                p = mats[table.draw(&mut rng)] * p;
                p = p.scale(1.0 / p.op_norm());
            }
            *out = p.theta().unwrap_or(Direction::X_AXIS);
        }
    });
    Ok(FurstenbergSample { kind, depth, angles })
}

impl FurstenbergSample {
    pub fn as_measure(&self) -> Result<EmpiricalMeasure> {
        EmpiricalMeasure::from_line(self.angles.iter().map(|a| a.angle()).collect(), vec![1.0; self.angles.len()])
    }

    pub fn histogram(&self, bins: usize) -> Vec<f64> {
        let mut h = vec![0.0; bins];
        let w = 1.0 / self.angles.len() as f64;
        for a in &self.angles {
            let b = ((a.angle() / PI * bins as f64) as usize).min(bins - 1);
            h[b] += w;
        }
        h
    }

    pub fn summarize(&self, ifs: &AffineIfs, seed: u64) -> Result<FurstenbergSummary> {
        let mats = step_matrices(ifs, self.kind)?;
        let table = SymbolTable::new(&ifs.probs);
        let mut rng = seeded_rng(seed ^ 0x51a7, 0);
        let pushed: Vec<f64> = self
            .angles
            .iter()
            .map(|a| a.act(&mats[table.draw(&mut rng)]).angle())
            .collect();
        let pushed = EmpiricalMeasure::from_line(pushed, vec![1.0; self.angles.len()])?;
        let stationarity = levy_distance(&self.as_measure()?, &pushed)?;
        let histogram = self.histogram(HISTOGRAM_BINS);
        let max_cell_mass = histogram.iter().cloned().fold(0.0, f64::max);
        let (mut c, mut s) = (0.0, 0.0);
        for a in &self.angles {
            c += (2.0 * a.angle()).cos();
            s += (2.0 * a.angle()).sin();
        }
        let n = self.angles.len() as f64;
        Ok(FurstenbergSummary {
            kind: self.kind,
            n: self.angles.len(),
            histogram,
            max_cell_mass,
            stationarity,
            mean_direction: Direction::new(0.5 * s.atan2(c)),
            concentration: c.hypot(s) / n,
        })
    }
}
