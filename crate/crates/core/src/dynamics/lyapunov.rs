use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::AffineIfs;
use crate::measure::{sample::SymbolTable, seeded_rng};
use crate::projective::Mat2;

pub const REORTHOGONALIZE_EVERY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `lim (1/n) log2 alpha2(A_{i|n})`
    pub top: f64,
    /// `lim (1/n) log2 alpha1(A_{i|n})`
    pub bottom: f64,
    pub stderr_top: f64,
    pub stderr_bottom: f64,
    pub steps: usize,
    pub orbits: usize,
}

/// Gram–Schmidt on the columns: `m = Q R`, returns `(Q, R11, R22)`.
fn qr(m: &Mat2) -> (Mat2, f64, f64) {
    let c1 = [m.a, m.c];
    let c2 = [m.b, m.d];
    let r11 = c1[0].hypot(c1[1]);
    let q1 = [c1[0] / r11, c1[1] / r11];
    let r12 = q1[0] * c2[0] + q1[1] * c2[1];
    let w = [c2[0] - r12 * q1[0], c2[1] - r12 * q1[1]];
    let r22 = w[0].hypot(w[1]);
    (Mat2::new(q1[0], w[0] / r22, q1[1], w[1] / r22), r11, r22)
}

fn mean_err(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Random-product exponents by periodically re-orthogonalized products.
pub fn lyapunov_exponents(ifs: &AffineIfs, steps: usize, orbits: usize, seed: u64) -> Result<LyapunovEstimate> {
    if steps == 0 || orbits == 0 {
        return Err(Error::EmptySupport);
    }
    let table = SymbolTable::new(&ifs.probs);
    let per: Vec<(f64, f64)> = (0..orbits)
        .into_par_iter()
        .map(|o| {
            let mut rng = seeded_rng(seed ^ 0x1a9b, o as u64);
            let mut y = Mat2::rotation(0.618_033_988_7);
            let (mut s1, mut s2) = (0.0, 0.0);
            for t in 1..=steps {
                y = ifs.maps[table.draw(&mut rng)].linear * y;
                if t % REORTHOGONALIZE_EVERY == 0 || t == steps {
                    let (q, r11, r22) = qr(&y);
                    s1 += r11.log2();
                    s2 += r22.log2();
                    y = q;
                }
            }
            (s1 / steps as f64, s2 / steps as f64)
        })
        .collect();
    let (top, stderr_top) = mean_err(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let (bottom, stderr_bottom) = mean_err(&per.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(LyapunovEstimate { top, bottom, stderr_top, stderr_bottom, steps, orbits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;

    #[test]
    fn diagonal_pair_exponents() {
        let ifs = AffineIfs::uniform(vec![
            AffineMap2::new(Mat2::diag(0.5, 0.25), [0.0, 0.0]),
            AffineMap2::new(Mat2::diag(0.5, 0.125), [0.5, 0.5]),
        ])
        .unwrap();
        let l = lyapunov_exponents(&ifs, 4000, 16, 3).unwrap();
        // O(1/n) transient from the generic initial frame
        assert!((l.top + 1.0).abs() < 1e-3, "{}", l.top);
        assert!((l.bottom + 2.5).abs() < 0.05, "{}", l.bottom);
    }
}
