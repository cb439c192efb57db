use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::AffineIfs;
use crate::projective::{Direction, Mat2, Vec2};

pub const DEGENERATE_Y: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Steps `theta -> A_i^{-1} theta`.
    Phi,
    /// Steps `theta -> B_j^T theta`.
    Psi,
}

impl Space {
    pub fn step_matrices(self, ifs: &AffineIfs) -> Result<Vec<Mat2>> {
        ifs.maps
            .iter()
            .map(|f| match self {
                Space::Phi => f.linear.inverse(),
                Space::Psi => Ok(f.linear.transpose()),
            })
            .collect()
    }
}

/// Orbit of a direction under the word, with reflection signs and
/// `log2 |M_k x_k|` for the canonical unit `x_k` of each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveOrbit {
    pub space: Space,
    /// `theta_0 .. theta_n`
    pub directions: Vec<Direction>,
    /// Per-step sign `chi_k` in `{-1, +1}`.
    pub signs: Vec<i8>,
    /// `rho(k) = chi_0 ... chi_{k-1}`, with `rho(0) = 1`.
    pub rho: Vec<i8>,
    pub log_norm_increments: Vec<f64>,
}

impl ProjectiveOrbit {
    /// Header `k,theta,sign,log_norm_increment`; `sign` is the cumulative `rho(k)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,theta,sign,log_norm_increment")?;
        for k in 0..self.directions.len() {
            let inc = self.log_norm_increments.get(k).copied().unwrap_or(f64::NAN);
            writeln!(w, "{},{:.15},{},{:.15}", k, self.directions[k].angle(), self.rho[k], inc)?;
        }
        Ok(())
    }
}

/// `sign(y(x) y(M x))` with `x = e(theta)`, and the image.
fn signed_step(m: &Mat2, theta: Direction, step: usize) -> Result<(i8, Direction, f64)> {
    let x = theta.unit();
    let y = m.apply(x);
    let norm = y[0].hypot(y[1]);
    if x[1].abs() <= DEGENERATE_Y || (y[1] / norm).abs() <= DEGENERATE_Y {
        return Err(Error::DegenerateDirection { theta: theta.angle(), step });
    }
    let s = if x[1] * y[1] > 0.0 { 1 } else { -1 };
    Ok((s, Direction::from_vector(y), norm.log2()))
}

/// Reflection cocycle `rho(n, (i, theta))` along the orbit of `theta0`.
pub fn reflection_cocycle(ifs: &AffineIfs, prefix: &[usize], theta0: Direction, n: usize, space: Space) -> Result<ProjectiveOrbit> {
    if prefix.len() < n {
        return Err(Error::PrefixTooShort { len: prefix.len(), needed: n });
    }
    ifs.check_word(&prefix[..n])?;
    let mats = space.step_matrices(ifs)?;
    let mut directions = vec![theta0];
    let mut signs = Vec::with_capacity(n);
    let mut rho = vec![1i8];
    let mut incs = Vec::with_capacity(n);
    let mut t = theta0;
    for (k, &s) in prefix[..n].iter().enumerate() {
        let (sg, next, inc) = signed_step(&mats[s], t, k)?;
        signs.push(sg);
        rho.push(rho[k] * sg);
        incs.push(inc);
        directions.push(next);
        t = next;
    }
    Ok(ProjectiveOrbit { space, directions, signs, rho, log_norm_increments: incs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarCheck {
    /// Sign from the y-coordinate rule (geometric sign where that rule degenerates).
    pub rho: i8,
    /// `sign <R_{A^-1 theta} A^-1 x, R_theta x>`
    pub rho_geometric: i8,
    /// `max |A^-1 x - ||A^-1 x|| R_{A^-1 theta}^-1 rho R_theta x|` over both unit representatives.
    pub residual: f64,
}

/// Checks `A^{-1} x = ||A^{-1} x|| R_{A^{-1}theta}^{-1} rho R_theta x` for unit `x` in `theta`.
pub fn verify_polar_decomposition(a: &Mat2, theta: Direction) -> Result<PolarCheck> {
    let inv = a.inverse()?;
    let image = theta.act(&inv);
    let r_theta = theta.rotation_to_y();
    let r_image = image.rotation_to_y();
    let x = theta.unit();
    let ax = inv.apply(x);
    let g = r_image.apply(ax);
    let rx = r_theta.apply(x);
    let rho_geometric: i8 = if g[0] * rx[0] + g[1] * rx[1] >= 0.0 { 1 } else { -1 };
    let rho = match signed_step(&inv, theta, 0) {
        Ok((s, _, _)) => s,
        Err(_) => rho_geometric,
    };
    let mut residual: f64 = 0.0;
    for sgn in [1.0, -1.0] {
        let x: Vec2 = [sgn * x[0], sgn * x[1]];
        let lhs = inv.apply(x);
        let n = lhs[0].hypot(lhs[1]);
        let r = r_theta.apply(x);
        let r = [rho as f64 * r[0], rho as f64 * r[1]];
        let rhs = r_image.transpose().apply(r);
        residual = residual.max((lhs[0] - n * rhs[0]).abs().max((lhs[1] - n * rhs[1]).abs()));
    }
    Ok(PolarCheck { rho, rho_geometric, residual })
}
