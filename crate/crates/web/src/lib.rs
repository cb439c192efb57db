//! Browser demo over `afrl`: attractor density, entropy profile and
//! Furstenberg histogram of a system pasted as TOML.
//!
//! The plain functions are what the page needs; the `#[wasm_bindgen]`
//! wrappers only convert errors into `JsValue`s.

use afrl::dynamics::{sample_furstenberg, FurstenbergKind};
use afrl::entropy::{entropy_dimension, EntropyOptions};
use afrl::ifs::{parse_ifs_toml, AffineIfs};
use afrl::measure::{depth_for_resolution, sample_selfaffine, EmpiricalMeasure};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_SAMPLES: usize = 1 << 22;
pub const MAX_PIXELS: usize = 2048 * 2048;

pub fn parse_system(src: &str) -> Result<AffineIfs, String> {
    parse_ifs_toml(src).map_err(|e| e.to_string())
}

fn sample(ifs: &AffineIfs, samples: usize, level: u32, seed: u64) -> Result<EmpiricalMeasure, String> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("samples must be in 1..={MAX_SAMPLES}"));
    }
    let depth = depth_for_resolution(ifs, (-(level as f64) - 4.0).exp2()).map_err(|e| e.to_string())?;
    sample_selfaffine(ifs, samples, depth, seed).map_err(|e| e.to_string())
}

/// Row-major RGBA image of the log point density over the sample's bounding box
/// (y up), white background.
pub fn attractor_density(src: &str, samples: usize, width: usize, height: usize, seed: u64) -> Result<Vec<u8>, String> {
    if width == 0 || height == 0 || width * height > MAX_PIXELS {
        return Err("image size out of range".into());
    }
    let ifs = parse_system(src)?;
    let level = (width.max(height) as f64).log2().ceil() as u32;
    let m = sample(&ifs, samples, level, seed)?;
    let (lo, hi) = m.bounds();
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12) * 1.04;
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let scale = (width.min(height) as f64) / span;
    let mut counts = vec![0u32; width * height];
    for p in m.points() {
        let px = ((p[0] - cx) * scale + 0.5 * width as f64).floor();
        let py = (0.5 * height as f64 - (p[1] - cy) * scale).floor();
        if px >= 0.0 && py >= 0.0 && (px as usize) < width && (py as usize) < height {
            counts[py as usize * width + px as usize] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut rgba = Vec::with_capacity(4 * counts.len());
    for &c in &counts {
        if c == 0 {
            rgba.extend_from_slice(&[255, 255, 255, 255]);
            continue;
        }
        let t = (1.0 + c as f64).ln() / (1.0 + max).ln();
        rgba.extend_from_slice(&ramp(t));
    }
    Ok(rgba)
}

// light blue to near black
fn ramp(t: f64) -> [u8; 4] {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    [lerp(150.0, 10.0), lerp(190.0, 20.0), lerp(240.0, 60.0), 255]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileView {
    pub n: Vec<u32>,
    pub bits: Vec<f64>,
    pub reliable: Vec<bool>,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
}

/// `H_n` for `n = 0..=n_max` and the slope fitted on `[n_min, n_max]`.
pub fn entropy_profile(src: &str, samples: usize, n_min: u32, n_max: u32, seed: u64) -> Result<ProfileView, String> {
    if n_min >= n_max || n_max > 24 {
        return Err("need n_min < n_max <= 24".into());
    }
    let ifs = parse_system(src)?;
    let m = sample(&ifs, samples, n_max, seed)?;
    let all = afrl::entropy::entropy_profile(&m, 0..=n_max, &EntropyOptions::default()).map_err(|e| e.to_string())?;
    let fit = entropy_dimension(&m, n_min..=n_max, &EntropyOptions::default()).ok();
    Ok(ProfileView {
        n: all.rows.iter().map(|r| r.n).collect(),
        bits: all.rows.iter().map(|r| r.bits).collect(),
        reliable: all.rows.iter().map(|r| r.reliable).collect(),
        slope: fit.as_ref().map(|f| f.slope),
        stderr: fit.as_ref().map(|f| f.stderr),
    })
}

/// Masses of `bins` equal cells of `[0, pi)`.
pub fn furstenberg_histogram(src: &str, samples: usize, bins: usize, adjoint: bool, seed: u64) -> Result<Vec<f64>, String> {
    if samples == 0 || samples > MAX_SAMPLES || bins == 0 || bins > 4096 {
        return Err("samples or bins out of range".into());
    }
    let ifs = parse_system(src)?;
    let kind = if adjoint { FurstenbergKind::Adjoint } else { FurstenbergKind::Inverse };
    let s = sample_furstenberg(&ifs, samples, 60, seed, kind).map_err(|e| e.to_string())?;
    Ok(s.histogram(bins))
}

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen(js_name = attractorDensity)]
pub fn attractor_density_js(src: &str, samples: u32, width: u32, height: u32, seed: u32) -> Result<Vec<u8>, JsValue> {
    attractor_density(src, samples as usize, width as usize, height as usize, seed as u64).map_err(js)
}

/// JSON `{n, bits, reliable, slope, stderr}`.
#[wasm_bindgen(js_name = entropyProfile)]
pub fn entropy_profile_js(src: &str, samples: u32, n_min: u32, n_max: u32, seed: u32) -> Result<String, JsValue> {
    let v = entropy_profile(src, samples as usize, n_min, n_max, seed as u64).map_err(js)?;
    serde_json::to_string(&v).map_err(|e| js(e.to_string()))
}

#[wasm_bindgen(js_name = furstenbergHistogram)]
pub fn furstenberg_histogram_js(src: &str, samples: u32, bins: u32, adjoint: bool, seed: u32) -> Result<Vec<f64>, JsValue> {
    furstenberg_histogram(src, samples as usize, bins as usize, adjoint, seed as u64).map_err(js)
}
