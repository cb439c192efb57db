//! Experiment pipeline: hypothesis checks, dimensions of `mu`, `nu`, `mu * nu`,
//! local entropy averages, the arithmetic detector and the final classification.

mod report;

pub use report::{emit_report, summary_text, svg_line_chart, ReportFormat};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    arithmetic_set_detect, lyapunov_exponents, sample_furstenberg, ArithmeticVerdict, FurstenbergKind,
    FurstenbergSummary, LyapunovEstimate,
};
use crate::entropy::{
    entropy_dimension, fiber_structure_pooled, local_entropy_average, DimensionEstimate, EntropyOptions,
    FiberOptions, FiberReport, LeaMode, LeaOptions, LeaResult, SystemSample,
};
use crate::error::{Error, Result};
use crate::ifs::{check_strong_separation, load_ifs_toml, AffineIfs, SeparationReport, SeparationVerdict};
use crate::measure::{convolve_empirical, depth_for_resolution, random_word, sample_selfaffine, EmpiricalMeasure};
use crate::projective::{check_irreducible, find_invariant_multicone, Irreducibility, DEFAULT_CONE_RESOLUTION};

/// Ball enlargements tried, in order, for the separation hypothesis.
pub const SEPARATION_SLACKS: [f64; 4] = [0.01, 0.05, 0.1, 0.25];
pub const SEPARATION_DIRECTIONS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Planar,
    /// Both systems act on the x-axis; entropies of the x-coordinate.
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Margins {
    /// Deficit needed to call a drop.
    pub drop: f64,
    /// Largest deficit still consistent with no drop.
    pub consistency: f64,
    /// Drop must also exceed `sigma * stderr`.
    pub sigma: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins { drop: 0.08, consistency: 0.08, sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeaConfig {
    pub n_stride: u32,
    pub k_min: u32,
    pub k_max: u32,
    pub modes: Vec<LeaMode>,
    pub n_pairs: usize,
    pub zoom_samples: usize,
}

impl Default for LeaConfig {
    fn default() -> Self {
        LeaConfig { n_stride: 6, k_min: 1, k_max: 6, modes: vec![LeaMode::Cylinder, LeaMode::Dyadic], n_pairs: 1 << 18, zoom_samples: 1 << 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArithmeticConfig {
    pub tol: f64,
    pub denom_bound: u64,
}

impl Default for ArithmeticConfig {
    fn default() -> Self {
        ArithmeticConfig { tol: crate::dynamics::DEFAULT_TOL, denom_bound: crate::dynamics::DEFAULT_DENOM_BOUND }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// IFS files, relative to the config file when loaded from one.
    pub mu: Option<PathBuf>,
    pub nu: Option<PathBuf>,
    pub geometry: Geometry,
    pub samples: usize,
    pub conv_samples: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub seed: u64,
    pub lea: LeaConfig,
    pub margins: Margins,
    pub arithmetic: ArithmeticConfig,
    pub fiber: bool,
    pub furstenberg_samples: usize,
    pub lyapunov_steps: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mu: None,
            nu: None,
            geometry: Geometry::Planar,
            samples: 4_000_000,
            conv_samples: 4_000_000,
            n_min: 8,
            n_max: 16,
            seed: 1,
            lea: LeaConfig::default(),
            margins: Margins::default(),
            arithmetic: ArithmeticConfig::default(),
            fiber: false,
            furstenberg_samples: 1 << 13,
            lyapunov_steps: 2000,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Parses and resolves the IFS paths against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_toml(&src)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.mu, &mut c.nu].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.samples == 0 || self.conv_samples == 0 {
            return bad("sample counts must be positive");
        }
        if self.n_min >= self.n_max || self.n_max > 30 {
            return bad("need n_min < n_max <= 30");
        }
        if self.lea.n_stride == 0 || self.lea.k_min == 0 || self.lea.k_min > self.lea.k_max {
            return bad("need n_stride >= 1 and 1 <= k_min <= k_max");
        }
        if self.lea.k_max as u64 * self.lea.n_stride as u64 > crate::ifs::MIN_THRESHOLD_EXPONENT {
            return bad("k_max * n_stride above 900");
        }
        let m = &self.margins;
        if !(m.drop >= 0.0 && m.consistency >= 0.0 && m.sigma >= 0.0) {
            return bad("margins must be non-negative");
        }
        if !(self.arithmetic.tol > 0.0) || self.arithmetic.denom_bound == 0 {
            return bad("arithmetic tol and denom_bound must be positive");
        }
        Ok(())
    }

    pub fn load_systems(&self) -> Result<(AffineIfs, AffineIfs)> {
        let get = |p: &Option<PathBuf>, name: &str| -> Result<AffineIfs> {
            let p = p.as_ref().ok_or_else(|| Error::Config(format!("missing path for {name}")))?;
            load_ifs_toml(p)
        };
        Ok((get(&self.mu, "mu")?, get(&self.nu, "nu")?))
    }

    fn cap(&self) -> f64 {
        match self.geometry {
            Geometry::Planar => 2.0,
            Geometry::Line => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisChecks {
    pub separation: SeparationReport,
    pub separation_slack: Option<f64>,
    /// `None` in line geometry, where only separation is required.
    pub hyperbolic: Option<bool>,
    pub irreducible: Option<Irreducibility>,
    pub dominated: Option<bool>,
    pub failed: Vec<String>,
}

impl HypothesisChecks {
    pub fn all_pass(&self) -> bool {
        self.failed.is_empty()
    }
}

pub fn check_hypotheses(ifs: &AffineIfs, geometry: Geometry) -> Result<HypothesisChecks> {
    let ball = ifs.invariant_ball()?;
    let mut separation = None;
    let mut slack = None;
    for s in SEPARATION_SLACKS {
        let r = check_strong_separation(ifs, &ball.scaled(1.0 + s), SEPARATION_DIRECTIONS);
        let pass = r.verdict == SeparationVerdict::Pass;
        separation = Some(r);
        if pass {
            slack = Some(s);
            break;
        }
    }
    let separation = separation.unwrap();
    let mut failed = Vec::new();
    if slack.is_none() {
        failed.push("strong separation".to_string());
    }
    let (hyperbolic, irreducible, dominated) = match geometry {
        Geometry::Line => (None, None, None),
        Geometry::Planar => {
            let h = ifs.eigen().iter().all(|e| e.is_hyperbolic());
            let mats = ifs.matrices();
            let irr = check_irreducible(&mats, DEFAULT_CONE_RESOLUTION);
            let dom = find_invariant_multicone(&mats, DEFAULT_CONE_RESOLUTION).found().is_some();
            if !h {
                failed.push("hyperbolicity".into());
            }
            if !irr.is_irreducible() {
                failed.push("irreducibility".into());
            }
            if !dom {
                failed.push("domination".into());
            }
            (Some(h), Some(irr), Some(dom))
        }
    };
    Ok(HypothesisChecks { separation, separation_slack: slack, hyperbolic, irreducible, dominated, failed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "DISSONANT-CONSISTENT")]
    DissonantConsistent,
    #[serde(rename = "RESONANT-ARITHMETIC")]
    ResonantArithmetic,
    #[serde(rename = "RESONANT-NONARITHMETIC-FLAG")]
    ResonantNonarithmeticFlag,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::DissonantConsistent => "DISSONANT-CONSISTENT",
            Classification::ResonantArithmetic => "RESONANT-ARITHMETIC",
            Classification::ResonantNonarithmeticFlag => "RESONANT-NONARITHMETIC-FLAG",
            Classification::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub const NONARITHMETIC_CAVEAT: &str = "numerical drop without arithmetic eigenvalue logarithms; \
finite-sample estimates are not counterexamples, treat as INCONCLUSIVE-grade";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub mu: f64,
    pub mu_stderr: f64,
    pub nu: f64,
    pub nu_stderr: f64,
    pub conv: f64,
    pub conv_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub classification: Classification,
    /// `min{cap, dim mu + dim nu}`
    pub expected: f64,
    pub deficit: f64,
    pub stderr: f64,
    /// Deficit above which a drop is called.
    pub drop_threshold: f64,
    /// `dim mu > 1 > dim nu` (either order), reported when a drop is called.
    pub side_condition: Option<bool>,
    pub caveat: Option<String>,
    pub notes: Vec<String>,
}

/// Rule table mapping dimensions, detector and hypotheses to a classification.
pub fn resonance_verdict(
    dims: &Dims,
    arithmetic: &ArithmeticVerdict,
    hypotheses_pass: bool,
    failed: &[String],
    margins: &Margins,
    cap: f64,
) -> Verdict {
    let expected = cap.min(dims.mu + dims.nu);
    let deficit = expected - dims.conv;
    let stderr = [dims.mu_stderr, dims.nu_stderr, dims.conv_stderr]
        .iter()
        .map(|s| if s.is_finite() { s * s } else { 0.0 })
        .sum::<f64>()
        .sqrt();
    let drop_threshold = margins.drop.max(margins.sigma * stderr).max(margins.consistency);
    let mut notes = Vec::new();
    let mut caveat = None;
    let mut side_condition = None;
    let finite = dims.mu.is_finite() && dims.nu.is_finite() && dims.conv.is_finite();
    let classification = if !finite {
        notes.push("dimension estimate missing".into());
        Classification::Inconclusive
    } else if deficit <= margins.consistency {
        Classification::DissonantConsistent
    } else if deficit > drop_threshold {
        side_condition = Some((dims.mu > 1.0 && dims.nu < 1.0) || (dims.nu > 1.0 && dims.mu < 1.0));
        if !hypotheses_pass {
            notes.push(format!("drop detected but hypotheses failed: {}", failed.join(", ")));
            Classification::Inconclusive
        } else if arithmetic.is_arithmetic() {
            Classification::ResonantArithmetic
        } else {
            caveat = Some(NONARITHMETIC_CAVEAT.to_string());
            Classification::ResonantNonarithmeticFlag
        }
    } else {
        notes.push(format!("deficit {deficit:.4} between consistency margin and drop threshold {drop_threshold:.4}"));
        Classification::Inconclusive
    };
    Verdict { classification, expected, deficit, stderr, drop_threshold, side_condition, caveat, notes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub lyapunov: LyapunovEstimate,
    pub furstenberg: Option<FurstenbergSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub config: ExperimentConfig,
    pub mu_system: AffineIfs,
    pub nu_system: AffineIfs,
    pub hypotheses_mu: HypothesisChecks,
    pub hypotheses_nu: HypothesisChecks,
    pub dim_mu: DimensionEstimate,
    pub dim_nu: DimensionEstimate,
    pub dim_conv: DimensionEstimate,
    pub lea: Vec<LeaResult>,
    pub lea_errors: Vec<String>,
    pub dynamics_mu: DynamicsSummary,
    pub dynamics_nu: DynamicsSummary,
    pub fiber: Option<FiberReport>,
    /// `-log2 |lambda_1(A_i)|` then `-log2 |lambda_2(B_j)|`.
    pub eigen_logs: Vec<f64>,
    pub arithmetic: ArithmeticVerdict,
    pub verdict: Verdict,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name.into(), source: Box::new(e) })
}

fn sample(ifs: &AffineIfs, cfg: &ExperimentConfig, seed: u64) -> Result<EmpiricalMeasure> {
    let depth = depth_for_resolution(ifs, (-(cfg.n_max as f64) - 8.0).exp2())?;
    let m = sample_selfaffine(ifs, cfg.samples, depth, seed)?;
    match cfg.geometry {
        Geometry::Planar => Ok(m),
        Geometry::Line => m.project_x(),
    }
}

fn dynamics(ifs: &AffineIfs, cfg: &ExperimentConfig, seed: u64) -> Result<DynamicsSummary> {
    let lyapunov = lyapunov_exponents(ifs, cfg.lyapunov_steps, 8, seed)?;
    let conformal = ifs.maps.iter().all(|m| m.linear.is_scalar());
    let furstenberg = if cfg.geometry == Geometry::Planar && !conformal {
        let s = sample_furstenberg(ifs, cfg.furstenberg_samples, 60, seed, FurstenbergKind::Inverse)?;
        Some(s.summarize(ifs, seed)?)
    } else {
        None
    };
    Ok(DynamicsSummary { lyapunov, furstenberg })
}

fn word_len(ifs: &AffineIfs, lea: &LeaConfig) -> usize {
    let bits = -ifs.max_norm().log2();
    ((2.0 * (lea.k_max * lea.n_stride) as f64 / bits).ceil() as usize).max(64) + 256
}

pub fn eigen_logs(mu: &AffineIfs, nu: &AffineIfs) -> Vec<f64> {
    let mut logs: Vec<f64> = mu.eigen().iter().map(|e| -e.moduli().0.log2()).collect();
    logs.extend(nu.eigen().iter().map(|e| -e.moduli().1.log2()));
    logs
}

pub fn run_experiment(cfg: &ExperimentConfig, mu: &AffineIfs, nu: &AffineIfs) -> Result<ResonanceReport> {
    stage("config", cfg.validate())?;
    let hyp_mu = stage("hypotheses", check_hypotheses(mu, cfg.geometry))?;
    let hyp_nu = stage("hypotheses", check_hypotheses(nu, cfg.geometry))?;

    let eopts = EntropyOptions::default();
    let window = cfg.n_min..=cfg.n_max;
    let sm = stage("sample", sample(mu, cfg, cfg.seed))?;
    let sn = stage("sample", sample(nu, cfg, cfg.seed.wrapping_add(0x51)))?;
    let dim_mu = stage("dimension", entropy_dimension(&sm, window.clone(), &eopts))?;
    let dim_nu = stage("dimension", entropy_dimension(&sn, window.clone(), &eopts))?;
    let conv = stage("convolution", convolve_empirical(&sm, &sn, cfg.conv_samples, cfg.seed.wrapping_add(0xc0))) ?;
    let dim_conv = stage("dimension", entropy_dimension(&conv, window, &eopts))?;
    drop(conv);

    let to_plane = |m: EmpiricalMeasure| -> Result<EmpiricalMeasure> {
        if m.dim() == 1 { m.embed_plane() } else { Ok(m) }
    };
    let mu_sys = SystemSample { ifs: mu.clone(), base: stage("sample", to_plane(sm))? };
    let nu_sys = SystemSample { ifs: nu.clone(), base: stage("sample", to_plane(sn))? };
    let wi = random_word(mu, word_len(mu, &cfg.lea), cfg.seed, 0x1ea_0001);
    let wj = random_word(nu, word_len(nu, &cfg.lea), cfg.seed, 0x1ea_0002);
    let mut lea = Vec::new();
    let mut lea_errors = Vec::new();
    for &mode in &cfg.lea.modes {
        let o = LeaOptions {
            n_stride: cfg.lea.n_stride,
            k_min: cfg.lea.k_min,
            k_max: cfg.lea.k_max,
            mode,
            n_pairs: cfg.lea.n_pairs,
            zoom_samples: cfg.lea.zoom_samples,
            seed: cfg.seed,
            line: cfg.geometry == Geometry::Line,
            ..LeaOptions::default()
        };
        match local_entropy_average(&mu_sys, &nu_sys, &wi, &wj, &o) {
            Ok(r) => lea.push(r),
            Err(e) => lea_errors.push(format!("{mode:?}: {e}")),
        }
    }
    drop((mu_sys, nu_sys));

    let dynamics_mu = stage("dynamics", dynamics(mu, cfg, cfg.seed))?;
    let dynamics_nu = stage("dynamics", dynamics(nu, cfg, cfg.seed.wrapping_add(1)))?;
    let fiber = match (&dynamics_mu.furstenberg, cfg.fiber) {
        (Some(f), true) => Some(stage(
            "fiber",
            fiber_structure_pooled(mu, f.mean_direction, 4, 256, &FiberOptions { seed: cfg.seed, ..FiberOptions::default() }),
        )?),
        _ => None,
    };

    let logs = eigen_logs(mu, nu);
    let arithmetic = stage("arithmetic", arithmetic_set_detect(&logs, cfg.arithmetic.tol, cfg.arithmetic.denom_bound))?;
    let dims = Dims {
        mu: dim_mu.slope,
        mu_stderr: dim_mu.stderr,
        nu: dim_nu.slope,
        nu_stderr: dim_nu.stderr,
        conv: dim_conv.slope,
        conv_stderr: dim_conv.stderr,
    };
    let mut failed: Vec<String> = hyp_mu.failed.iter().map(|f| format!("mu {f}")).collect();
    failed.extend(hyp_nu.failed.iter().map(|f| format!("nu {f}")));
    let verdict = resonance_verdict(&dims, &arithmetic, failed.is_empty(), &failed, &cfg.margins, cfg.cap());
    Ok(ResonanceReport {
        config: cfg.clone(),
        mu_system: mu.clone(),
        nu_system: nu.clone(),
        hypotheses_mu: hyp_mu,
        hypotheses_nu: hyp_nu,
        dim_mu,
        dim_nu,
        dim_conv,
        lea,
        lea_errors,
        dynamics_mu,
        dynamics_nu,
        fiber,
        eigen_logs: logs,
        arithmetic,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn av(a: bool) -> ArithmeticVerdict {
        let logs = if a { vec![2.0, 2.0] } else { vec![1.0, 3f64.log2()] };
        arithmetic_set_detect(&logs, 1e-6, 10_000).unwrap()
    }

    fn dims(conv: f64) -> Dims {
        Dims { mu: 0.5, mu_stderr: 0.005, nu: 0.5, nu_stderr: 0.005, conv, conv_stderr: 0.005 }
    }

    #[test]
    fn rule_table() {
        let m = Margins::default();
        let v = resonance_verdict(&dims(0.75), &av(true), true, &[], &m, 1.0);
        assert_eq!(v.classification, Classification::ResonantArithmetic);
        assert_eq!(v.side_condition, Some(false));
        let v = resonance_verdict(&dims(0.98), &av(false), true, &[], &m, 1.0);
        assert_eq!(v.classification, Classification::DissonantConsistent);
        let v = resonance_verdict(&dims(0.75), &av(true), false, &["mu irreducibility".into()], &m, 1.0);
        assert_eq!(v.classification, Classification::Inconclusive);
        assert!(v.notes[0].contains("irreducibility"));
        let v = resonance_verdict(&dims(0.75), &av(false), true, &[], &m, 1.0);
        assert_eq!(v.classification, Classification::ResonantNonarithmeticFlag);
        assert!(v.caveat.is_some());
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = ExperimentConfig::from_toml("geometry = \"line\"\nsamples = 1000\n[lea]\nk_max = 3\n").unwrap();
        assert_eq!(c.geometry, Geometry::Line);
        assert_eq!(c.lea.k_max, 3);
        assert_eq!(c.margins, Margins::default());
        assert!(matches!(ExperimentConfig::from_toml("n_min = 20\nn_max = 10"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
    }
}
