use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::cocycle::Space;
use crate::error::{Error, Result};
use crate::ifs::{AffineIfs, LogProduct};
use crate::projective::{limit_direction, Direction, Eigen2, LimitKind, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Roof {
    /// `f(i, theta) = -log2 ||A_{i0} restricted to A_{i0}^-1 theta||`
    F,
    /// `g(j, theta) = -log2 ||B_{j0}^T restricted to theta||`
    G,
}

impl Roof {
    pub fn space(self) -> Space {
        match self {
            Roof::F => Space::Phi,
            Roof::G => Space::Psi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoofSample {
    pub which: Roof,
    pub word: Vec<usize>,
    pub directions: Vec<Direction>,
    pub values: Vec<f64>,
    /// `birkhoff[n] = sum_{k<n} values[k]`
    pub birkhoff: Vec<f64>,
    /// The same sum evaluated on the product matrix.
    pub direct: f64,
}

impl RoofSample {
    pub fn telescoping_residual(&self) -> f64 {
        (self.birkhoff.last().copied().unwrap_or(0.0) - self.direct).abs()
    }
}

/// Per-step roof values along the orbit of `theta0`.
pub fn roof_function(ifs: &AffineIfs, prefix: &[usize], theta0: Direction, n: usize, which: Roof) -> Result<RoofSample> {
    if prefix.len() < n {
        return Err(Error::PrefixTooShort { len: prefix.len(), needed: n });
    }
    let word = &prefix[..n];
    ifs.check_word(word)?;
    let mut t = theta0;
    let mut directions = vec![t];
    let mut values = Vec::with_capacity(n);
    let mut birkhoff = vec![0.0];
    for &s in word {
        let a = &ifs.maps[s].linear;
        let (v, next) = match which {
            Roof::F => {
                let w = a.inverse()?.apply(t.unit());
                (w[0].hypot(w[1]).log2(), Direction::from_vector(w))
            }
            Roof::G => {
                let w = a.transpose().apply(t.unit());
                (-w[0].hypot(w[1]).log2(), Direction::from_vector(w))
            }
        };
        values.push(v);
        birkhoff.push(birkhoff.last().unwrap() + v);
        directions.push(next);
        t = next;
    }
    let e = theta0.unit();
    let direct = match which {
        Roof::F => {
            // A^{-1} = adj(q) 2^{log_scale} / det A
            let mut p = LogProduct::default();
            for &s in word {
                p.push(&ifs.maps[s].linear);
            }
            let q = p.q;
            let adj = Mat2::new(q.d, -q.b, -q.c, q.a);
            let w = adj.apply(e);
            w[0].hypot(w[1]).log2() + p.log_scale - p.log_det
        }
        Roof::G => {
            let mut p = LogProduct::default();
            for &s in word {
                p.push(&ifs.maps[s].linear);
            }
            let w = p.q.transpose().apply(e);
            -(w[0].hypot(w[1]).log2() + p.log_scale)
        }
    };
    Ok(RoofSample { which, word: word.to_vec(), directions, values, birkhoff, direct })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub symbol: usize,
    pub which: Roof,
    pub value: f64,
    /// `-log2 |lambda_1(A_i)|` for `F`, `-log2 |lambda_2(B_j)|` for `G`.
    pub expected: f64,
}

impl FixedPointCheck {
    pub fn residual(&self) -> f64 {
        (self.value - self.expected).abs()
    }
}

/// `f'` (resp. `g'`) on the constant word of `symbol`; `None` unless the generator is hyperbolic.
pub fn fixed_point_identity(ifs: &AffineIfs, symbol: usize, which: Roof) -> Result<Option<FixedPointCheck>> {
    ifs.check_word(&[symbol])?;
    let a = ifs.maps[symbol].linear;
    let (l1, l2) = match a.eigen() {
        e @ Eigen2::Real { .. } if e.is_hyperbolic() => e.moduli(),
        _ => return Ok(None),
    };
    let kind = match which {
        Roof::F => LimitKind::Inverse,
        Roof::G => LimitKind::Adjoint,
    };
    let theta = limit_direction(&ifs.matrices(), &[symbol], kind, 1e-14)?.direction;
    let value = roof_function(ifs, &[symbol], theta, 1, which)?.values[0];
    let expected = match which {
        Roof::F => -l1.log2(),
        Roof::G => -l2.log2(),
    };
    Ok(Some(FixedPointCheck { symbol, which, value, expected }))
}

/// Two-sided word `... tail tail past[L-1] ... past[0] ; future[0] future[1] ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSidedWord {
    /// `past[0] = i_{-1}`
    pub past: Vec<usize>,
    /// Symbol repeated forever before the listed past.
    pub tail: usize,
    /// `future[0] = i_0`
    pub future: Vec<usize>,
}

impl TwoSidedWord {
    /// Negative coordinates replaced by `i_0`.
    pub fn r(&self) -> TwoSidedWord {
        TwoSidedWord { past: Vec::new(), tail: self.future[0], future: self.future.clone() }
    }

    pub fn shift(&self) -> TwoSidedWord {
        let mut past = Vec::with_capacity(self.past.len() + 1);
        past.push(self.future[0]);
        past.extend_from_slice(&self.past);
        TwoSidedWord { past, tail: self.tail, future: self.future[1..].to_vec() }
    }

    pub fn shift_by(&self, k: usize) -> TwoSidedWord {
        let mut past: Vec<usize> = self.future[..k].iter().rev().copied().collect();
        past.extend_from_slice(&self.past);
        TwoSidedWord { past, tail: self.tail, future: self.future[k..].to_vec() }
    }
}

/// `theta^-(i^-)`: the `A^{-1}` images of the attracting direction of the tail.
pub fn theta_minus(ifs: &AffineIfs, w: &TwoSidedWord) -> Result<Direction> {
    let v1 = match ifs.maps[w.tail].linear.eigen() {
        e @ Eigen2::Real { v1: Some(v), .. } if e.is_hyperbolic() => v,
        _ => return Err(Error::InvalidSystem(format!("tail symbol {} is not hyperbolic", w.tail))),
    };
    let mut t = v1;
    for &s in w.past.iter().rev() {
        t = t.act(&ifs.maps[s].linear.inverse()?);
    }
    Ok(t)
}

/// `f'(i) = f(i^+, theta^-(i^-))`
pub fn f_prime(ifs: &AffineIfs, w: &TwoSidedWord) -> Result<f64> {
    let t = theta_minus(ifs, w)?;
    let v = ifs.maps[w.future[0]].linear.inverse()?.apply(t.unit());
    Ok(v[0].hypot(v[1]).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferValue {
    pub u: f64,
    pub terms: usize,
    /// `L delta_K / (1 - q)`
    pub tail_bound: f64,
    pub ratio: f64,
}

fn lipschitz(ifs: &AffineIfs) -> f64 {
    ifs.maps
        .iter()
        .map(|m| {
            let c = m.linear.op_norm() / m.linear.min_singular();
            0.5 * (c - 1.0 / c) / LN_2
        })
        .fold(0.0, f64::max)
}

/// `u(i) = sum_{k<K} (f'(sigma^k i) - f'(sigma^k r(i)))` with a geometric tail bound.
pub fn transfer_function_u(ifs: &AffineIfs, w: &TwoSidedWord, k_terms: usize, tol: f64) -> Result<TransferValue> {
    if w.future.len() <= k_terms {
        return Err(Error::PrefixTooShort { len: w.future.len(), needed: k_terms + 1 });
    }
    ifs.check_word(&w.future)?;
    ifs.check_word(&w.past)?;
    ifs.check_word(&[w.tail])?;
    let rw = w.r();
    let mut t = theta_minus(ifs, w)?;
    let mut tr = theta_minus(ifs, &rw)?;
    let mut u = 0.0;
    let mut deltas = Vec::with_capacity(k_terms + 1);
    for k in 0..=k_terms {
        deltas.push(t.dist(tr));
        if k == k_terms {
            break;
        }
        let inv = ifs.maps[w.future[k]].linear.inverse()?;
        let a = inv.apply(t.unit());
        let b = inv.apply(tr.unit());
        u += a[0].hypot(a[1]).log2() - b[0].hypot(b[1]).log2();
        t = Direction::from_vector(a);
        tr = Direction::from_vector(b);
    }
    let ratio = contraction_ratio(&deltas);
    let d_k = deltas[k_terms];
    let tail_bound = if d_k == 0.0 { 0.0 } else { lipschitz(ifs) * d_k / (1.0 - ratio) };
    if d_k > 0.0 && (ratio >= 1.0 || tail_bound > tol) {
        return Err(Error::TailNotCertified { bound: tail_bound, ratio });
    }
    Ok(TransferValue { u, terms: k_terms, tail_bound, ratio })
}

/// Worst one-step ratio of the separations above the rounding floor.
fn contraction_ratio(deltas: &[f64]) -> f64 {
    let usable: Vec<f64> = deltas.iter().copied().take_while(|&d| d > 1e-13).collect();
    if usable.len() < 2 {
        return 0.0;
    }
    let ls = usable.len() - 1;
    let fitted = (usable[ls] / usable[0]).powf(1.0 / ls as f64);
    let worst_tail = usable[ls / 2..]
        .windows(2)
        .map(|p| p[1] / p[0])
        .fold(0.0, f64::max);
    fitted.max(worst_tail.min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohomologyCheck {
    pub f_prime: f64,
    /// `f' o r + u o sigma o r`, which depends on the positive coordinates only.
    pub h: f64,
    pub u: f64,
    pub u_shift: f64,
    /// `|f' - h - u + u o sigma|`
    pub residual: f64,
    /// Same identity with `h = f' o r` taken literally.
    pub residual_literal: f64,
}

pub fn cohomology_check(ifs: &AffineIfs, w: &TwoSidedWord, k_terms: usize, tol: f64) -> Result<CohomologyCheck> {
    if w.future.len() < k_terms + 2 {
        return Err(Error::PrefixTooShort { len: w.future.len(), needed: k_terms + 2 });
    }
    let fp = f_prime(ifs, w)?;
    let rw = w.r();
    let u = transfer_function_u(ifs, w, k_terms, tol)?.u;
    let sw = w.shift();
    let u_shift = transfer_function_u(ifs, &sw, k_terms, tol)?.u;
    let fr = f_prime(ifs, &rw)?;
    let h = fr + transfer_function_u(ifs, &rw.shift(), k_terms, tol)?.u;
    Ok(CohomologyCheck {
        f_prime: fp,
        h,
        u,
        u_shift,
        residual: (fp - h - u + u_shift).abs(),
        residual_literal: (fp - fr - u + u_shift).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;

    fn sys(ms: &[Mat2]) -> AffineIfs {
        AffineIfs::uniform(ms.iter().map(|&m| AffineMap2::new(m, [0.0, 0.0])).collect()).unwrap()
    }

    #[test]
    fn diagonal_fixed_points() {
        let s = sys(&[Mat2::diag(0.5, 1.0 / 3.0), Mat2::diag(0.25, 0.5)]);
        let f = fixed_point_identity(&s, 0, Roof::F).unwrap().unwrap();
        assert!((f.value - 3f64.log2()).abs() < 1e-12);
        let g = fixed_point_identity(&s, 1, Roof::G).unwrap().unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        assert!(fixed_point_identity(&sys(&[Mat2::diag(0.5, 0.5)]), 0, Roof::F).unwrap().is_none());
    }

    #[test]
    fn constant_past_gives_zero_transfer() {
        let s = sys(&[Mat2::rotation(0.3) * Mat2::diag(0.6, 0.2), Mat2::diag(0.5, 0.3)]);
        let w = TwoSidedWord { past: vec![], tail: 1, future: vec![1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1] };
        assert_eq!(transfer_function_u(&s, &w, 10, 1e-6).unwrap().u, 0.0);
    }

    #[test]
    fn shift_bookkeeping() {
        let w = TwoSidedWord { past: vec![2, 1], tail: 0, future: vec![3, 4, 5] };
        assert_eq!(w.shift(), TwoSidedWord { past: vec![3, 2, 1], tail: 0, future: vec![4, 5] });
        assert_eq!(w.shift().shift(), w.shift_by(2));
    }
}
