use serde::{Deserialize, Serialize};

use super::AffineIfs;
use crate::error::{Error, Result};
use crate::projective::{Direction, Mat2};

pub const MIN_THRESHOLD_EXPONENT: u64 = 900;

/// Matrix product kept as `2^log_scale * q` with `||q|| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProduct {
    pub q: Mat2,
    pub log_scale: f64,
    pub log_det: f64,
}

impl Default for LogProduct {
    fn default() -> Self {
        LogProduct { q: Mat2::IDENTITY, log_scale: 0.0, log_det: 0.0 }
    }
}

impl LogProduct {
    /// Right-multiply by `m`.
    pub fn push(&mut self, m: &Mat2) {
        let p = self.q * *m;
        let n = p.op_norm();
        self.q = p.scale(1.0 / n);
        self.log_scale += n.log2();
        self.log_det += m.det().abs().log2();
    }

    pub fn log_alpha2(&self) -> f64 {
        self.log_scale
    }

    pub fn log_alpha1(&self) -> f64 {
        self.log_det - self.log_scale
    }
}

/// Least `n` with `||B*_{j|n} restricted to theta*|| <= 2^{-kN}`.
pub fn stopping_time_i_k(ifs: &AffineIfs, prefix: &[usize], k: u32, n_stride: u32, theta_star: Direction) -> Result<usize> {
    let exponent = k as u64 * n_stride as u64;
    if exponent > MIN_THRESHOLD_EXPONENT {
        return Err(Error::ThresholdTooSmall { exponent });
    }
    ifs.check_word(prefix)?;
    let target = -(exponent as f64) + 1e-12;
    let mut v = theta_star.unit();
    let mut s = 0.0;
    for (n, &j) in prefix.iter().enumerate() {
        if s <= target {
            return Ok(n);
        }
        let w = ifs.maps[j].linear.transpose().apply(v);
        let norm = w[0].hypot(w[1]);
        s += norm.log2();
        v = [w[0] / norm, w[1] / norm];
    }
    if s <= target {
        return Ok(prefix.len());
    }
    Err(Error::PrefixTooShort { len: prefix.len(), needed: prefix.len() + 1 })
}

/// `max{n : alpha1(A_{i|n}) >= 2^{-(k-1)N}}`, with `ell_0 = 0`.
pub fn scale_index_ell_k(ifs: &AffineIfs, prefix: &[usize], k: u32, n_stride: u32) -> Result<usize> {
    if k == 0 {
        return Ok(0);
    }
    let exponent = (k as u64 - 1) * n_stride as u64;
    if exponent > MIN_THRESHOLD_EXPONENT {
        return Err(Error::ThresholdTooSmall { exponent });
    }
    ifs.check_word(prefix)?;
    let target = -(exponent as f64) - 1e-12;
    let mut prod = LogProduct::default();
    for (n, &i) in prefix.iter().enumerate() {
        prod.push(&ifs.maps[i].linear);
        if prod.log_alpha1() < target {
            return Ok(n);
        }
    }
    Err(Error::PrefixTooShort { len: prefix.len(), needed: prefix.len() + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub k: u32,
    pub i_k: usize,
    pub ell_k: usize,
    /// `||B_{j|i_k}|| 2^{kN}`
    pub comparability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingSchedule {
    pub n_stride: u32,
    pub rows: Vec<ScheduleRow>,
}

impl StoppingSchedule {
    /// Observed `[c, C]` for the comparability constants.
    pub fn comparability_range(&self) -> (f64, f64) {
        self.rows.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| {
            (lo.min(r.comparability), hi.max(r.comparability))
        })
    }
}

/// `i_k` along `j` for `psi` and `ell_k` along `i` for `phi`, `k = 0..=k_max`.
pub fn stopping_schedule(
    phi: &AffineIfs,
    word_i: &[usize],
    psi: &AffineIfs,
    word_j: &[usize],
    theta_star: Direction,
    n_stride: u32,
    k_max: u32,
) -> Result<StoppingSchedule> {
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let i_k = stopping_time_i_k(psi, word_j, k, n_stride, theta_star)?;
        let ell_k = scale_index_ell_k(phi, word_i, k, n_stride)?;
        let mut p = LogProduct::default();
        for &j in &word_j[..i_k] {
            p.push(&psi.maps[j].linear);
        }
        let comparability = (p.log_alpha2() + (k * n_stride) as f64).exp2();
        rows.push(ScheduleRow { k, i_k, ell_k, comparability });
    }
    Ok(StoppingSchedule { n_stride, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;

    fn diag_system(x: f64, y: f64) -> AffineIfs {
        AffineIfs::uniform(vec![AffineMap2::new(Mat2::diag(x, y), [0.0, 0.0])]).unwrap()
    }

    #[test]
    fn constant_quarter_hits_threshold_at_multiples() {
        let psi = diag_system(0.25, 0.25);
        let w = vec![0; 100];
        for (k, expect) in [(0, 0), (1, 2), (2, 4), (3, 6)] {
            assert_eq!(stopping_time_i_k(&psi, &w, k, 4, Direction::X_AXIS).unwrap(), expect);
        }
    }

    #[test]
    fn ell_k_for_half_quarter() {
        let phi = diag_system(0.5, 0.25);
        let w = vec![0; 200];
        for k in 1..10u32 {
            let n = 6;
            assert_eq!(scale_index_ell_k(&phi, &w, k, n).unwrap(), ((k - 1) * n / 2) as usize);
        }
    }

    #[test]
    fn errors() {
        let psi = diag_system(0.5, 0.5);
        assert!(matches!(
            stopping_time_i_k(&psi, &[0; 3], 2, 4, Direction::X_AXIS),
            Err(Error::PrefixTooShort { .. })
        ));
        assert!(matches!(
            stopping_time_i_k(&psi, &[0; 3000], 100, 10, Direction::X_AXIS),
            Err(Error::ThresholdTooSmall { .. })
        ));
        assert!(matches!(scale_index_ell_k(&psi, &[0; 3], 5, 4), Err(Error::PrefixTooShort { .. })));
    }

    #[test]
    fn monotone_in_k() {
        let psi = AffineIfs::uniform(vec![
            AffineMap2::new(Mat2::new(0.5, 0.1, 0.0, 0.3), [0.0, 0.0]),
            AffineMap2::new(Mat2::new(0.4, -0.1, 0.2, 0.35), [1.0, 0.0]),
        ])
        .unwrap();
        let w: Vec<usize> = (0..400).map(|n| (n * 7 + n / 3) % 2).collect();
        let t = Direction::new(0.3);
        let s = stopping_schedule(&psi, &w, &psi, &w, t, 3, 20).unwrap();
        for pair in s.rows.windows(2) {
            assert!(pair[0].i_k <= pair[1].i_k);
            assert!(pair[0].ell_k <= pair[1].ell_k);
        }
    }
}
