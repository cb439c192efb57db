use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_DENOM_BOUND: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Arithmeticity {
    Arithmetic,
    NotArithmetic,
}

/// Best continued-fraction approximation `p/q` of `logs[j] / logs[i]` with `q <= denom_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub i: usize,
    pub j: usize,
    pub ratio: f64,
    pub p: u64,
    pub q: u64,
    /// `|q ratio - p|`
    pub error: f64,
    pub commensurable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticVerdict {
    pub verdict: Arithmeticity,
    pub logs: Vec<f64>,
    /// Best common unit found; for `NotArithmetic` the candidate with least residual.
    pub alpha: f64,
    /// `max_i |logs_i / alpha - round(logs_i / alpha)|`
    pub residual: f64,
    pub multipliers: Vec<u64>,
    pub tol: f64,
    pub denom_bound: u64,
    pub pairs: Vec<PairRatio>,
    pub witness: Option<(usize, usize)>,
}

impl ArithmeticVerdict {
    pub fn is_arithmetic(&self) -> bool {
        self.verdict == Arithmeticity::Arithmetic
    }

    /// `{"alpha":..,"residual":..,"verdict":..}`
    pub fn json_line(&self) -> String {
        serde_json::json!({ "alpha": self.alpha, "residual": self.residual, "verdict": self.verdict }).to_string()
    }
}

/// Convergents `p/q` of `x >= 0` with `q <= bound`.
pub fn convergents(x: f64, bound: u64) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut out = vec![(p1, q1)];
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as u64;
        let (Some(p2), Some(q2)) = (a.checked_mul(p1).and_then(|v| v.checked_add(p0)), a.checked_mul(q1).and_then(|v| v.checked_add(q0))) else {
            break;
        };
        if q2 > bound {
            break;
        }
        out.push((p2, q2));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

fn real_gcd(mut a: f64, mut b: f64, eps: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..200 {
        if b <= eps {
            return a;
        }
        let r = a % b;
        if r <= eps || b - r <= eps {
            return b;
        }
        a = b;
        b = r;
    }
    b
}

fn gcd_u(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd_u(b, a % b) }
}

/// Integer multipliers for the unit `alpha0`, reduced by their gcd, then the
/// minimax unit for those multipliers.
fn fit(logs: &[f64], alpha0: f64, denom_bound: u64) -> Option<(f64, f64, Vec<u64>)> {
    let n: Vec<u64> = logs.iter().map(|x| (x / alpha0).round().max(0.0) as u64).collect();
    if n.iter().any(|&m| m == 0 || m > denom_bound) {
        return None;
    }
    let g = n.iter().copied().fold(0, gcd_u);
    let n: Vec<u64> = n.into_iter().map(|m| m / g).collect();
    // max_i |x_i beta - n_i| is convex in beta = 1/alpha
    let cost = |beta: f64| logs.iter().zip(&n).map(|(x, &m)| (x * beta - m as f64).abs()).fold(0.0, f64::max);
    let b0 = n[0] as f64 / logs[0];
    let (mut lo, mut hi) = (b0 * (1.0 - 0.5 / n[0] as f64), b0 * (1.0 + 0.5 / n[0] as f64));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if cost(m1) <= cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let beta = 0.5 * (lo + hi);
    Some((1.0 / beta, cost(beta), n))
}

/// Tolerance decision for `logs ⊂ alpha N`.
pub fn arithmetic_set_detect(logs: &[f64], tol: f64, denom_bound: u64) -> Result<ArithmeticVerdict> {
    if logs.is_empty() || logs.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidSystem("arithmetic detection needs positive finite inputs".into()));
    }
    let xmin = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = logs.iter().copied().fold(0.0, f64::max);
    let iref = logs.iter().position(|&x| x == xmin).unwrap();

    let mut pairs = Vec::new();
    for i in 0..logs.len() {
        for j in i + 1..logs.len() {
            let ratio = logs[j] / logs[i];
            let (p, q, error) = convergents(ratio, denom_bound)
                .into_iter()
                .map(|(p, q)| (p, q, (q as f64 * ratio - p as f64).abs()))
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .unwrap();
            pairs.push(PairRatio { i, j, ratio, p, q, error, commensurable: error < tol });
        }
    }

    let mut candidates = Vec::new();
    let eps = 8.0 * tol * xmax;
    let g = logs.iter().skip(1).fold(logs[0], |a, &x| real_gcd(a, x, eps));
    candidates.push(g);
    let mut lcm: u64 = 1;
    for j in 0..logs.len() {
        if j == iref {
            continue;
        }
        let ratio = logs[j] / xmin;
        if let Some(&(_, q)) = convergents(ratio, denom_bound)
            .iter()
            .find(|(p, q)| (*q as f64 * ratio - *p as f64).abs() < tol)
        {
            lcm = lcm / gcd_u(lcm, q) * q;
            if lcm > denom_bound {
                break;
            }
        }
    }
    if lcm <= denom_bound {
        candidates.push(xmin / lcm as f64);
    }

    let best = candidates
        .iter()
        .filter_map(|&a| fit(logs, a, denom_bound))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let witness = pairs.iter().find(|p| !p.commensurable).map(|p| (p.i, p.j));
    let (verdict, alpha, residual, multipliers) = match best {
        Some((alpha, residual, n)) if residual < tol => (Arithmeticity::Arithmetic, alpha, residual, n),
        Some((alpha, residual, n)) => (Arithmeticity::NotArithmetic, alpha, residual, n),
        None => {
            let residual = logs.iter().map(|x| (x / xmin - (x / xmin).round()).abs()).fold(0.0, f64::max);
            let n = logs.iter().map(|x| (x / xmin).round() as u64).collect();
            (Arithmeticity::NotArithmetic, xmin, residual, n)
        }
    };
    Ok(ArithmeticVerdict {
        verdict,
        logs: logs.to_vec(),
        alpha,
        residual,
        multipliers,
        tol,
        denom_bound,
        pairs,
        witness: if verdict == Arithmeticity::Arithmetic { None } else { witness },
    })
}
