use serde::{Deserialize, Serialize};

use crate::dynamics::{reflection_cocycle, roof_function, Roof, Space};
use crate::error::{Error, Result};
use crate::ifs::{natural_projection, scale_index_ell_k, AffineIfs};
use crate::measure::{levy_distance, random_word, zoom_sample, EmpiricalMeasure, Rectangle, Region, ZoomOptions};
use crate::projective::{Direction, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberOptions {
    pub n_stride: u32,
    /// Extra dyadic depth of the magnified cell, `D_{kN+m}`.
    pub m: u32,
    pub k_min: u32,
    pub k_max: u32,
    pub samples: usize,
    /// Tube half-width over tube half-length.
    pub tube_ratio: f64,
    /// `false` forces `rho = +1` (ablation).
    pub use_cocycle: bool,
    pub epsilon: f64,
    pub mass_floor: f64,
    pub seed: u64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        FiberOptions {
            n_stride: 2,
            m: 2,
            k_min: 3,
            k_max: 12,
            samples: 1 << 15,
            tube_ratio: 1.0 / 64.0,
            use_cocycle: true,
            epsilon: 0.1,
            mass_floor: crate::measure::DEFAULT_MASS_FLOOR,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub word: usize,
    pub k: u32,
    pub ell: usize,
    pub rho: i8,
    /// Lévy distance on `I_k` rescaled to `[-1, 1)`; NaN when not evaluated.
    pub distance: f64,
    pub n_eff_cell: f64,
    pub n_eff_slice: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub records: Vec<FiberRecord>,
    pub evaluated: usize,
    /// Passing fraction of all records, unevaluated ones counting as failures.
    pub pass_rate: f64,
    pub options: FiberOptions,
}

impl FiberReport {
    fn new(records: Vec<FiberRecord>, options: FiberOptions) -> Self {
        let evaluated = records.iter().filter(|r| r.distance.is_finite()).count();
        let passed = records.iter().filter(|r| r.pass).count();
        let pass_rate = if records.is_empty() { 0.0 } else { passed as f64 / records.len() as f64 };
        FiberReport { records, evaluated, pass_rate, options }
    }
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn window(z: Vec<f64>, w: Vec<f64>, lo: f64, hi: f64) -> Result<EmpiricalMeasure> {
    let (xs, ws): (Vec<f64>, Vec<f64>) = z
        .into_iter()
        .zip(w)
        .filter(|(z, _)| *z >= lo && *z < hi)
        .map(|(z, w)| (2.0 * (z - lo) / (hi - lo) - 1.0, w))
        .unzip();
    if xs.is_empty() {
        return Err(Error::EmptySupport);
    }
    EmpiricalMeasure::from_line(xs, ws)
}

struct Sides {
    ell: usize,
    rho: i8,
    cell: EmpiricalMeasure,
    slice: EmpiricalMeasure,
}

fn build_sides(ifs: &AffineIfs, word: &[usize], x: Vec2, theta: Direction, k: u32, stream: u64, o: &FiberOptions) -> Result<Sides> {
    let kn = k * o.n_stride;
    let level = (kn + o.m) as i32;
    let e = theta.unit();
    let mag = (kn as f64).exp2();
    let zopts = ZoomOptions::default();

    let region = Region::cell_containing(x, level);
    let Region::Cell { index, .. } = region else { unreachable!() };
    let (lo, side) = Region::cell_geometry(level, index);
    let corners = [lo, [lo[0] + side, lo[1]], [lo[0], lo[1] + side], [lo[0] + side, lo[1] + side]];
    let proj: Vec<f64> = corners.iter().map(|c| mag * dot([c[0] - x[0], c[1] - x[1]], e)).collect();
    let z_lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
    let z_hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let cell = zoom_sample(ifs, &region, o.samples, o.seed ^ stream.wrapping_mul(0x9e37_79b9), zopts)?.measure;
    let zs = cell.points().iter().map(|p| mag * dot([p[0] - x[0], p[1] - x[1]], e)).collect();
    let cell = window(zs, cell.weights().to_vec(), z_lo, z_hi)?;

    let ell = scale_index_ell_k(ifs, word, k, o.n_stride)?;
    let roof = roof_function(ifs, word, theta, ell, Roof::F)?;
    let theta_k = roof.directions[ell];
    let s_sum = roof.birkhoff[ell];
    let rho = if o.use_cocycle && ell > 0 {
        reflection_cocycle(ifs, word, theta, ell, Space::Phi)?.rho[ell]
    } else {
        1
    };
    let c = natural_projection(ifs, |n| word[(ell + n) % word.len()], 1e-15)?.point;
    let scale = (kn as f64 - s_sum).exp2();
    let (s_lo, s_hi) = if rho > 0 { (z_lo / scale, z_hi / scale) } else { (-z_hi / scale, -z_lo / scale) };
    let f = theta_k.unit();
    let mid = 0.5 * (s_lo + s_hi);
    let half_long = 0.5 * (s_hi - s_lo) * 1.05;
    let rect = Rectangle {
        center: [c[0] + mid * f[0], c[1] + mid * f[1]],
        direction: theta_k,
        half_long,
        half_short: half_long * o.tube_ratio,
    };
    let slice = zoom_sample(ifs, &Region::Rect(rect), o.samples, o.seed ^ stream.wrapping_mul(0x85eb_ca6b) ^ 1, zopts)?.measure;
    let zs = slice
        .points()
        .iter()
        .map(|q| rho as f64 * scale * dot([q[0] - c[0], q[1] - c[1]], f))
        .collect();
    let slice = window(zs, slice.weights().to_vec(), z_lo, z_hi)?;
    Ok(Sides { ell, rho, cell, slice })
}

fn check_word(ifs: &AffineIfs, word: &[usize], word_index: usize, theta: Direction, o: &FiberOptions) -> Result<Vec<FiberRecord>> {
    ifs.check_word(word)?;
    let x = natural_projection(ifs, |n| word[n % word.len()], 1e-15)?.point;
    let mut out = Vec::new();
    for k in o.k_min..=o.k_max {
        let stream = ((word_index as u64) << 32) | k as u64;
        let rec = match build_sides(ifs, word, x, theta, k, stream, o) {
            Ok(s) if s.cell.n_eff() < o.mass_floor || s.slice.n_eff() < o.mass_floor => FiberRecord {
                word: word_index,
                k,
                ell: s.ell,
                rho: s.rho,
                distance: f64::NAN,
                n_eff_cell: s.cell.n_eff(),
                n_eff_slice: s.slice.n_eff(),
                pass: false,
                note: Some("below mass floor".into()),
            },
            Ok(s) => {
                let d = levy_distance(&s.cell, &s.slice)?;
                FiberRecord {
                    word: word_index,
                    k,
                    ell: s.ell,
                    rho: s.rho,
                    distance: d,
                    n_eff_cell: s.cell.n_eff(),
                    n_eff_slice: s.slice.n_eff(),
                    pass: d < o.epsilon,
                    note: None,
                }
            }
            Err(e) => FiberRecord {
                word: word_index,
                k,
                ell: 0,
                rho: 1,
                distance: f64::NAN,
                n_eff_cell: 0.0,
                n_eff_slice: 0.0,
                pass: false,
                note: Some(e.to_string()),
            },
        };
        out.push(rec);
    }
    Ok(out)
}

/// Compares `pi_theta` of the cell magnification `D_{kN+m}(Pi(i))` with the signed,
/// rescaled slice through `Pi(sigma^{ell_k} i)` along `A_{i|ell_k}^{-1} theta`,
/// both restricted to the projected cell `I_k`.
pub fn fiber_structure_check(ifs: &AffineIfs, word: &[usize], theta: Direction, opts: &FiberOptions) -> Result<FiberReport> {
    Ok(FiberReport::new(check_word(ifs, word, 0, theta, opts)?, opts.clone()))
}

/// Same check pooled over `n_words` random words of length `word_len`.
pub fn fiber_structure_pooled(
    ifs: &AffineIfs,
    theta: Direction,
    n_words: usize,
    word_len: usize,
    opts: &FiberOptions,
) -> Result<FiberReport> {
    let mut records = Vec::new();
    for w in 0..n_words {
        let word = random_word(ifs, word_len, opts.seed, 0xf1be_0000 + w as u64);
        records.extend(check_word(ifs, &word, w, theta, opts)?);
    }
    Ok(FiberReport::new(records, opts.clone()))
}
