use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{entropy_profile, EntropyOptions};
use crate::error::{Error, Result};
use crate::ifs::{natural_projection, project_cyclic, scale_index_ell_k, stopping_time_i_k, AffineIfs, LogProduct};
use crate::measure::{convolve_empirical, zoom_sample, EmpiricalMeasure, Region, ZoomOptions};
use crate::projective::{limit_direction, Direction, LimitKind, Vec2};

/// Deepest absolute dyadic level usable with f64 coordinates: cells of
/// side `2^-44` still hold about 2^8 distinct values per axis near `|x| ~ 1`.
pub const F64_LEVEL_LIMIT: u32 = 44;

/// An IFS together with a base sample of its self-affine measure.
#[derive(Debug, Clone)]
pub struct SystemSample {
    pub ifs: AffineIfs,
    pub base: EmpiricalMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeaMode {
    /// `mu^{i,k}`: restriction to the dyadic cell `D_{kN}(Pi(i))`.
    Dyadic,
    /// `mu_{i|i_k}`: cylinder magnification at the stopping time.
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaOptions {
    pub n_stride: u32,
    pub k_min: u32,
    pub k_max: u32,
    pub mode: LeaMode,
    pub n_pairs: usize,
    pub zoom_samples: usize,
    pub mass_floor: f64,
    pub seed: u64,
    pub entropy: EntropyOptions,
    /// Entropies of the x-coordinate only (line-embedded systems).
    pub line: bool,
}

impl Default for LeaOptions {
    fn default() -> Self {
        LeaOptions {
            n_stride: 6,
            k_min: 1,
            k_max: 6,
            mode: LeaMode::Cylinder,
            n_pairs: 1 << 20,
            zoom_samples: 1 << 17,
            mass_floor: crate::measure::DEFAULT_MASS_FLOOR,
            seed: 1,
            entropy: EntropyOptions::default(),
            line: false,
        }
    }
}

impl LeaOptions {
    pub fn k_range(&self) -> RangeInclusive<u32> {
        self.k_min..=self.k_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaRecord {
    pub k: u32,
    pub i_k: usize,
    pub ell_k: usize,
    /// `H(eta, D_N | D_0)` of the convolved magnifications, bits.
    pub h_conv: f64,
    /// Same for the two magnifications projected on the long axis of the `nu` cylinder.
    pub h_proj_mu: f64,
    pub h_proj_nu: f64,
    pub reliable: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaResult {
    pub mode: LeaMode,
    pub n_stride: u32,
    /// `(1/N) mean_k h_conv` over reliable `k`.
    pub average: f64,
    pub reliable_count: usize,
    pub records: Vec<LeaRecord>,
    /// Observed `[c, C]` of `||B_{j|i_k}|| 2^{kN}`.
    pub comparability: (f64, f64),
}

impl LeaResult {
    /// Header `k,i_k,ell_k,H_N_conv,H_N_proj_mu,H_N_proj_nu,reliable`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,i_k,ell_k,H_N_conv,H_N_proj_mu,H_N_proj_nu,reliable")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{:.9},{:.9},{:.9},{}",
                r.k, r.i_k, r.ell_k, r.h_conv, r.h_proj_mu, r.h_proj_nu, r.reliable
            )?;
        }
        Ok(())
    }
}

/// `mu_{i|i_k} = S_{kN} A_{i|i_k} (mu - Pi(sigma^{i_k} i))`, restricted to `B(0,1)`.
///
/// Works on differences `p - Pi(sigma^{i_k} i)` so precision does not degrade with `k`.
pub fn magnification_cylinder(
    ifs: &AffineIfs,
    base: &EmpiricalMeasure,
    prefix: &[usize],
    i_k: usize,
    scale_exp: f64,
    mass_floor: f64,
) -> Result<EmpiricalMeasure> {
    if prefix.len() <= i_k {
        return Err(Error::PrefixTooShort { len: prefix.len(), needed: i_k + 1 });
    }
    ifs.check_word(prefix)?;
    let tail = &prefix[i_k..];
    let x = natural_projection(ifs, |n| tail[n % tail.len()], 1e-15)?.point;
    let mut lin = LogProduct::default();
    for &s in &prefix[..i_k] {
        lin.push(&ifs.maps[s].linear);
    }
    let a = lin.q.scale((lin.log_scale + scale_exp).exp2());
    let m = base.map_points(|p| a.apply([p[0] - x[0], p[1] - x[1]]))?;
    m.restrict(|p| p[0].hypot(p[1]) <= 1.0, mass_floor)
}

/// `mu^{D}` for `D = D_level(x)` by symbolic zoom, rescaled onto `[-1,1)^d`.
pub fn magnification_dyadic(
    ifs: &AffineIfs,
    x: Vec2,
    level: u32,
    n_target: usize,
    seed: u64,
    dim: usize,
    mass_floor: f64,
) -> Result<EmpiricalMeasure> {
    let region = Region::cell_containing(x, level as i32);
    let Region::Cell { index, .. } = region else { unreachable!() };
    let (lo, side) = Region::cell_geometry(level as i32, index);
    let region = if dim == 1 { Region::Interval { lo: lo[0], hi: lo[0] + side } } else { region };
    let opts = ZoomOptions { dim, ..ZoomOptions::default() };
    let z = zoom_sample(ifs, &region, n_target, seed, opts)?;
    let m = z
        .measure
        .map_points(|p| [2.0 * (p[0] - lo[0]) / side - 1.0, 2.0 * (p[1] - lo[1]) / side - 1.0])?;
    let n_eff = m.n_eff();
    if n_eff < mass_floor {
        return Err(Error::InsufficientMass { n_eff, floor: mass_floor });
    }
    Ok(m)
}

fn scale_entropy(m: &EmpiricalMeasure, n: u32, opts: &EntropyOptions) -> Result<(f64, bool)> {
    let p = entropy_profile(m, 0..=n, opts)?;
    let (bottom, top) = (&p.rows[0], &p.rows[p.rows.len() - 1]);
    Ok((top.bits - bottom.bits, top.reliable))
}

fn theta_star(ifs: &AffineIfs, word: &[usize]) -> Option<Direction> {
    limit_direction(&ifs.matrices(), word, LimitKind::Adjoint, 1e-12).ok().map(|l| l.direction)
}

/// Stopping time with `||B*|_{theta*}||`, or the operator norm when `theta*` is undefined.
fn stopping_time(ifs: &AffineIfs, word: &[usize], k: u32, n: u32, ts: Option<Direction>) -> Result<usize> {
    if let Some(t) = ts {
        return stopping_time_i_k(ifs, word, k, n, t);
    }
    let target = -((k * n) as f64) + 1e-12;
    let mut p = LogProduct::default();
    for (idx, &s) in word.iter().enumerate() {
        if p.log_alpha2() <= target {
            return Ok(idx);
        }
        p.push(&ifs.maps[s].linear);
    }
    Err(Error::PrefixTooShort { len: word.len(), needed: word.len() + 1 })
}

/// Averages `(1/N) H(mu_k * nu_{j|i_k}, D_N | D_0)` over the reliable `k`.
///
/// In dyadic mode the cell magnification is taken at the common factor `2^{kN}`
/// (onto `[-1/2, 1/2)^d`) so both factors are magnified alike.
pub fn local_entropy_average(
    mu: &SystemSample,
    nu: &SystemSample,
    word_i: &[usize],
    word_j: &[usize],
    opts: &LeaOptions,
) -> Result<LeaResult> {
    let n = opts.n_stride;
    let dim = if opts.line { 1 } else { 2 };
    let ts_nu = theta_star(&nu.ifs, word_j);
    let ts_mu = theta_star(&mu.ifs, word_i);
    let axis = if opts.line {
        Direction::X_AXIS
    } else {
        limit_direction(&nu.ifs.matrices(), word_j, LimitKind::Forward, 1e-12)
            .map(|l| l.direction)
            .unwrap_or(Direction::X_AXIS)
    };
    let x_mu = project_cyclic(&mu.ifs, word_i, 1e-15)?.point;
    let mut records = Vec::new();
    let mut comparability = (f64::INFINITY, 0.0_f64);
    for k in opts.k_range() {
        let i_k = stopping_time(&nu.ifs, word_j, k, n, ts_nu)?;
        let ell_k = scale_index_ell_k(&mu.ifs, word_i, k, n).unwrap_or(0);
        let mut p = LogProduct::default();
        for &s in &word_j[..i_k] {
            p.push(&nu.ifs.maps[s].linear);
        }
        let c = (p.log_alpha2() + (k * n) as f64).exp2();
        comparability = (comparability.0.min(c), comparability.1.max(c));
        let unreliable = |note: String| LeaRecord {
            k,
            i_k,
            ell_k,
            h_conv: f64::NAN,
            h_proj_mu: f64::NAN,
            h_proj_nu: f64::NAN,
            reliable: false,
            note: Some(note),
        };
        let nu_k = match magnification_cylinder(&nu.ifs, &nu.base, word_j, i_k, (k * n) as f64, opts.mass_floor) {
            Ok(m) => m,
            Err(e) => {
                records.push(unreliable(format!("nu magnification: {e}")));
                continue;
            }
        };
        let mu_k = match opts.mode {
            LeaMode::Dyadic if k * n + n > F64_LEVEL_LIMIT => {
                records.push(unreliable(format!("level {} beyond f64 resolution", k * n + n)));
                continue;
            }
            LeaMode::Dyadic => magnification_dyadic(
                &mu.ifs,
                x_mu,
                k * n,
                opts.zoom_samples,
                opts.seed ^ (k as u64).wrapping_mul(0x2545_f491_4f6c_dd1d),
                dim,
                opts.mass_floor,
            )
            .and_then(|m| m.map_points(|p| [0.5 * p[0], 0.5 * p[1]])),
            LeaMode::Cylinder => stopping_time(&mu.ifs, word_i, k, n, ts_mu).and_then(|t| {
                magnification_cylinder(&mu.ifs, &mu.base, word_i, t, (k * n) as f64, opts.mass_floor)
            }),
        };
        let mu_k = match mu_k {
            Ok(m) => m,
            Err(e) => {
                records.push(unreliable(format!("mu magnification: {e}")));
                continue;
            }
        };
        let (mu_k, nu_k) = if opts.line {
            (mu_k.project_x()?, nu_k.project_x()?)
        } else {
            (mu_k, nu_k)
        };
        let conv = convolve_empirical(&mu_k, &nu_k, opts.n_pairs, opts.seed.wrapping_add(k as u64 * 7919))?;
        let (h_conv, reliable) = scale_entropy(&conv, n, &opts.entropy)?;
        let (h_proj_mu, _) = scale_entropy(&mu_k.project_line(axis)?, n, &opts.entropy)?;
        let (h_proj_nu, _) = scale_entropy(&nu_k.project_line(axis)?, n, &opts.entropy)?;
        records.push(LeaRecord {
            k,
            i_k,
            ell_k,
            h_conv,
            h_proj_mu,
            h_proj_nu,
            reliable,
            note: if reliable { None } else { Some("n_eff / occupied below ratio".into()) },
        });
    }
    let good: Vec<f64> = records.iter().filter(|r| r.reliable).map(|r| r.h_conv).collect();
    let average = if good.is_empty() {
        f64::NAN
    } else {
        good.iter().sum::<f64>() / (good.len() as f64 * n as f64)
    };
    Ok(LeaResult { mode: opts.mode, n_stride: n, average, reliable_count: good.len(), records, comparability })
}
