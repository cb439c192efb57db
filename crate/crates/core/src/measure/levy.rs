use super::EmpiricalMeasure;
use crate::error::{Error, Result};

pub const LEVY_GRID: usize = 1 << 12;

struct Cdf {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl Cdf {
    fn new(m: &EmpiricalMeasure) -> Self {
        let mut pairs: Vec<(f64, f64)> = m.xs().zip(m.weights().iter().copied()).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let (xs, cum) = pairs
            .into_iter()
            .map(|(x, w)| {
                acc += w;
                (x, acc)
            })
            .unzip();
        Cdf { xs, cum }
    }

    /// `F(t) = mu((-inf, t])`
    fn at(&self, t: f64) -> f64 {
        let k = self.xs.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1].min(1.0)
        }
    }
}

/// Lévy distance between two 1-D measures, checked on a `2^12`-point grid
/// over the joint support and bisected in `eps`.
pub fn levy_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::DimensionMismatch("Lévy distance needs 1-D measures".into()));
    }
    let (f, g) = (Cdf::new(mu), Cdf::new(nu));
    let lo = f.xs[0].min(g.xs[0]);
    let hi = f.xs[f.xs.len() - 1].max(g.xs[g.xs.len() - 1]);
    let span = (hi - lo).max(1e-300);
    let grid: Vec<f64> = (0..=LEVY_GRID).map(|k| lo + span * k as f64 / LEVY_GRID as f64).collect();
    let fg: Vec<(f64, f64)> = grid.iter().map(|&t| (f.at(t), g.at(t))).collect();
    let ok = |eps: f64| {
        grid.iter().zip(&fg).all(|(&t, &(ft, gt))| {
            gt <= f.at(t + eps) + eps && ft <= g.at(t + eps) + eps && f.at(t - eps) - eps <= gt && g.at(t - eps) - eps <= ft
        })
    };
    if ok(0.0) {
        return Ok(0.0);
    }
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if ok(m) {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}
