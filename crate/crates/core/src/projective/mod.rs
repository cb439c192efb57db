//! 2x2 linear algebra and the projective line RP^1.

mod direction;
mod mat2;

pub use direction::Direction;
pub use mat2::{Eigen2, Mat2, Svd2, Vec2, HYPERBOLIC_GAP, SINGULAR_DET};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PREFIX_CAP: usize = 10_000;
pub const DEFAULT_CONE_RESOLUTION: usize = 2048;

pub fn act_direction(m: &Mat2, theta: Direction) -> Direction {
    theta.act(m)
}

pub fn theta_of(m: &Mat2) -> Result<Direction> {
    m.theta()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitKind {
    /// `theta(A_{i0} ... A_{in})`
    Forward,
    /// `theta(A_{i0}^-1 ... A_{in}^-1)`
    Inverse,
    /// `theta(A_{i0}^T ... A_{in}^T)`
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDirection {
    pub direction: Direction,
    pub steps: usize,
    /// `alpha1 / alpha2` of the last product.
    pub gap_ratio: f64,
}

/// Limit of major axes along the word, extended cyclically past the prefix.
///
/// Stops once consecutive axes agree within `tol` and the singular gap of
/// the running product is below `tol`.
pub fn limit_direction(
    matrices: &[Mat2],
    prefix: &[usize],
    kind: LimitKind,
    tol: f64,
) -> Result<LimitDirection> {
    if prefix.is_empty() {
        return Err(Error::PrefixTooShort { len: 0, needed: 1 });
    }
    let factors: Vec<Mat2> = matrices
        .iter()
        .map(|m| match kind {
            LimitKind::Forward => Ok(*m),
            LimitKind::Inverse => m.inverse(),
            LimitKind::Adjoint => Ok(m.transpose()),
        })
        .collect::<Result<_>>()?;
    if let Some(&bad) = prefix.iter().find(|&&s| s >= factors.len()) {
        return Err(Error::InvalidSystem(format!("symbol {bad} outside alphabet")));
    }
    let mut p = Mat2::IDENTITY;
    let mut prev: Option<Direction> = None;
    let mut last_step = f64::INFINITY;
    for n in 0..PREFIX_CAP {
        p = p * factors[prefix[n % prefix.len()]];
        let norm = p.op_norm();
        p = p.scale(1.0 / norm);
        let Ok(svd) = p.svd() else {
            return Err(Error::SingularMatrix { det: p.det() });
        };
        let ratio = svd.alpha1 / svd.alpha2;
        if svd.alpha2 - svd.alpha1 <= 1e-12 * svd.alpha2 {
            prev = None;
            continue;
        }
        let t = svd.major_axis();
        if let Some(q) = prev {
            last_step = q.dist(t);
            if last_step < tol && ratio < tol {
                return Ok(LimitDirection { direction: t, steps: n + 1, gap_ratio: ratio });
            }
        }
        prev = Some(t);
    }
    Err(Error::NoConvergence { steps: PREFIX_CAP, last_step })
}

/// Closed arc `[start, start + length]` on RP^1, counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: Direction,
    pub length: f64,
}

impl Arc {
    pub fn end(&self) -> Direction {
        Direction::new(self.start.angle() + self.length)
    }

    pub fn contains(&self, t: Direction) -> bool {
        self.start.ccw_to(t) <= self.length
    }

    /// Distance from `t` to the complement of the arc (0 if outside).
    pub fn depth(&self, t: Direction) -> f64 {
        let a = self.start.ccw_to(t);
        if a > self.length {
            0.0
        } else {
            a.min(self.length - a)
        }
    }

    pub fn image(&self, m: &Mat2) -> Arc {
        let a = self.start.act(m);
        let b = self.end().act(m);
        if m.det() > 0.0 {
            Arc { start: a, length: a.ccw_to(b) }
        } else {
            Arc { start: b, length: b.ccw_to(a) }
        }
    }
}

/// Finite union of closed arcs mapped strictly into its interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multicone {
    pub resolution: usize,
    pub arcs: Vec<Arc>,
}

impl Multicone {
    pub fn contains(&self, t: Direction) -> bool {
        self.arcs.iter().any(|a| a.contains(t))
    }

    pub fn depth(&self, t: Direction) -> f64 {
        self.arcs.iter().map(|a| a.depth(t)).fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MulticoneVerdict {
    Found(Multicone),
    /// No cone at this resolution; says nothing about domination.
    Inconclusive { resolution: usize },
}

impl MulticoneVerdict {
    pub fn found(&self) -> Option<&Multicone> {
        match self {
            MulticoneVerdict::Found(c) => Some(c),
            MulticoneVerdict::Inconclusive { .. } => None,
        }
    }
}

struct CellSet {
    cells: Vec<bool>,
    delta: f64,
}

impl CellSet {
    fn new(res: usize) -> Self {
        CellSet { cells: vec![false; res], delta: PI / res as f64 }
    }

    fn res(&self) -> usize {
        self.cells.len()
    }

    fn cell_of(&self, t: Direction) -> usize {
        ((t.angle() / self.delta) as usize).min(self.res() - 1)
    }

    fn mark_arc(&mut self, arc: &Arc, margin: usize) -> bool {
        let res = self.res();
        let first = self.cell_of(arc.start);
        let span = ((arc.start.angle() - first as f64 * self.delta + arc.length) / self.delta) as usize;
        let total = span + 1 + 2 * margin;
        if total >= res {
            let changed = self.cells.iter().any(|c| !c);
            self.cells.iter_mut().for_each(|c| *c = true);
            return changed;
        }
        let mut changed = false;
        for k in 0..total {
            let j = (first + res - margin + k) % res;
            if !self.cells[j] {
                self.cells[j] = true;
                changed = true;
            }
        }
        changed
    }

    fn full(&self) -> bool {
        self.cells.iter().all(|&c| c)
    }

    fn arcs(&self) -> Vec<Arc> {
        let res = self.res();
        let Some(gap) = self.cells.iter().position(|&c| !c) else {
            return vec![Arc { start: Direction::X_AXIS, length: PI }];
        };
        let mut out = Vec::new();
        let mut k = 0;
        while k < res {
            let j = (gap + k) % res;
            if self.cells[j] {
                let mut len = 0;
                while len < res && self.cells[(j + len) % res] {
                    len += 1;
                }
                out.push(Arc {
                    start: Direction::new(j as f64 * self.delta),
                    length: len as f64 * self.delta,
                });
                k += len;
            } else {
                k += 1;
            }
        }
        out
    }
}

/// Grid search for a forward-invariant multicone.
///
/// Grows the closure of the attracting eigendirections under the action,
/// padding every image arc by one cell; a proper fixed point is a multicone.
pub fn find_invariant_multicone(matrices: &[Mat2], resolution: usize) -> MulticoneVerdict {
    let resolution = resolution.max(8);
    let mut set = CellSet::new(resolution);
    let mut seeded = false;
    for m in matrices {
        let e = m.eigen();
        if e.is_hyperbolic() {
            if let Eigen2::Real { v2: Some(v), .. } = e {
                set.mark_arc(&Arc { start: v, length: 0.0 }, 1);
                seeded = true;
            }
        }
    }
    if !seeded || matrices.iter().any(|m| m.det().abs() <= SINGULAR_DET) {
        return MulticoneVerdict::Inconclusive { resolution };
    }
    for _ in 0..=resolution {
        let arcs = set.arcs();
        let mut changed = false;
        for arc in &arcs {
            for m in matrices {
                changed |= set.mark_arc(&arc.image(m), 1);
            }
        }
        if set.full() {
            return MulticoneVerdict::Inconclusive { resolution };
        }
        if !changed {
            return MulticoneVerdict::Found(Multicone { resolution, arcs: set.arcs() });
        }
    }
    MulticoneVerdict::Inconclusive { resolution }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Irreducibility {
    /// `margin` is the grid minimum of `max_i d(A_i t, t)`.
    Irreducible { margin: f64 },
    Reducible { witness: Direction },
}

impl Irreducibility {
    pub fn is_irreducible(&self) -> bool {
        matches!(self, Irreducibility::Irreducible { .. })
    }
}

/// Exact test for a common invariant direction via eigendirections.
pub fn check_irreducible(matrices: &[Mat2], grid_resolution: usize) -> Irreducibility {
    let displacement = |t: Direction| {
        matrices.iter().map(|m| t.act(m).dist(t)).fold(0.0, f64::max)
    };
    let Some(first) = matrices.iter().find(|m| !m.is_scalar()) else {
        return Irreducibility::Reducible { witness: Direction::X_AXIS };
    };
    for cand in first.eigen().directions() {
        if displacement(cand) < 1e-9 {
            return Irreducibility::Reducible { witness: cand };
        }
    }
    let res = grid_resolution.max(1);
    let margin = (0..res)
        .map(|j| displacement(Direction::new(j as f64 * PI / res as f64)))
        .fold(f64::INFINITY, f64::min);
    Irreducibility::Irreducible { margin }
}
