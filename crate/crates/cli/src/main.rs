use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use afrl::dynamics::{
    cohomology_check, fixed_point_identity, lyapunov_exponents, roof_function, sample_furstenberg, FurstenbergKind, Roof,
    TwoSidedWord,
};
use afrl::entropy::{entropy_dimension, fiber_structure_pooled, EntropyOptions, FiberOptions, LeaMode};
use afrl::ifs::{load_ifs_toml, AffineIfs};
use afrl::measure::{depth_for_resolution, random_word, sample_selfaffine};
use afrl::projective::{find_invariant_multicone, Direction, DEFAULT_CONE_RESOLUTION};
use afrl::resonance::{check_hypotheses, emit_report, run_experiment, summary_text, ExperimentConfig, Geometry, ReportFormat};
use afrl::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_HYPOTHESES: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "afrl", version, about = "Self-affine measures, entropies and resonance experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Auto,
    Planar,
    Line,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dyadic,
    Cylinder,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Separation, hyperbolicity, irreducibility and domination checks.
    Check {
        ifs: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        geometry: GeometryArg,
        #[arg(long)]
        require_hypotheses: bool,
        #[arg(long)]
        json: bool,
    },
    /// Entropy-slope dimension of the self-affine measure.
    Dim {
        ifs: PathBuf,
        #[arg(long, default_value_t = 4_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        nmin: u32,
        #[arg(long, default_value_t = 16)]
        nmax: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        geometry: GeometryArg,
        #[arg(long)]
        json: bool,
    },
    /// Full resonance experiment on a pair of systems.
    Resonance {
        mu: PathBuf,
        nu: PathBuf,
        /// Experiment settings; command-line flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "N")]
        n_stride: Option<u32>,
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "auto")]
        geometry: GeometryArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of csv,svg,text.
        #[arg(long, value_delimiter = ',', default_value = "csv,svg,text")]
        format: Vec<ReportFormatArg>,
        #[arg(long)]
        fiber: bool,
        #[arg(long)]
        require_hypotheses: bool,
    },
    /// Furstenberg measure histogram and summary.
    Furstenberg {
        ifs: PathBuf,
        #[arg(long, default_value_t = 8192)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        depth: u32,
        #[arg(long, default_value_t = 32)]
        bins: usize,
        #[arg(long)]
        adjoint: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Roof-function identities: fixed points, telescoping, cohomology.
    FlowCheck {
        ifs: PathBuf,
        #[arg(long, default_value_t = 20)]
        words: usize,
        #[arg(long, default_value_t = 60)]
        terms: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Fiber-structure check of cell projections against signed slices.
    Fiber {
        ifs: PathBuf,
        #[arg(long)]
        theta_from_furstenberg: bool,
        /// Angle in radians, used unless --theta-from-furstenberg.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        theta: f64,
        #[arg(long, default_value_t = 6)]
        words: usize,
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, default_value_t = 3)]
        kmin: u32,
        #[arg(long, default_value_t = 12)]
        kmax: u32,
        #[arg(long)]
        no_cocycle: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Csv,
    Svg,
    Text,
}

enum Failure {
    Config(String),
    Hypotheses(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let mut root = &e;
        while let Error::Stage { stage, source } = root {
            if stage == "config" {
                return Failure::Config(msg);
            }
            root = source;
        }
        match root {
            Error::Config(_) | Error::Io(_) | Error::InvalidSystem(_) => Failure::Config(msg),
            _ => Failure::Numeric(msg),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// The x-axis is invariant and carries the attractor.
fn is_line_system(ifs: &AffineIfs) -> bool {
    ifs.maps.iter().all(|m| m.linear.c == 0.0 && m.translation[1] == 0.0)
}

fn geometry(arg: GeometryArg, systems: &[&AffineIfs]) -> Geometry {
    match arg {
        GeometryArg::Planar => Geometry::Planar,
        GeometryArg::Line => Geometry::Line,
        GeometryArg::Auto if systems.iter().all(|s| is_line_system(s)) => Geometry::Line,
        GeometryArg::Auto => Geometry::Planar,
    }
}

fn load(p: &Path) -> std::result::Result<AffineIfs, Failure> {
    Ok(load_ifs_toml(p)?)
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn check(path: &Path, g: GeometryArg, require: bool, json: bool) -> CliResult {
    let ifs = load(path)?;
    let h = check_hypotheses(&ifs, geometry(g, &[&ifs]))?;
    if json {
        print_json(&h);
    } else {
        println!("separation {:?} (slack {:?}, signed gap {:.3e})", h.separation.verdict, h.separation_slack, h.separation.signed_gap);
        if let Some(x) = h.hyperbolic {
            println!("hyperbolic {x}");
        }
        if let Some(i) = &h.irreducible {
            println!("irreducible {}", i.is_irreducible());
        }
        if let Some(d) = h.dominated {
            println!("dominated {d}");
        }
        let e: Vec<String> = ifs.eigen().iter().map(|e| format!("{:?}", e.moduli())).collect();
        println!("eigenvalue moduli {}", e.join(" "));
        if h.failed.is_empty() {
            println!("all hypotheses pass");
        } else {
            println!("failed: {}", h.failed.join(", "));
        }
    }
    if require && !h.failed.is_empty() {
        return Err(Failure::Hypotheses(format!("failed: {}", h.failed.join(", "))));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn dim(path: &Path, samples: usize, nmin: u32, nmax: u32, seed: u64, g: GeometryArg, json: bool) -> CliResult {
    if samples == 0 || nmin >= nmax || nmax > 30 {
        return Err(Failure::Config("need samples > 0 and nmin < nmax <= 30".into()));
    }
    let ifs = load(path)?;
    let depth = depth_for_resolution(&ifs, (-(nmax as f64) - 8.0).exp2())?;
    let mut m = sample_selfaffine(&ifs, samples, depth, seed)?;
    if geometry(g, &[&ifs]) == Geometry::Line {
        m = m.project_x()?;
    }
    let d = entropy_dimension(&m, nmin..=nmax, &EntropyOptions::default())?;
    if json {
        print_json(&d);
    } else {
        println!("n,H_bits,reliable");
        for r in &d.profile.rows {
            println!("{},{:.6},{}", r.n, r.bits, r.reliable);
        }
        println!("dimension {:.4} +- {:.4} over {} scales", d.slope, d.stderr, d.scales.len());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn resonance(
    mu_path: &Path,
    nu_path: &Path,
    config: Option<&Path>,
    n_stride: Option<u32>,
    kmax: Option<u32>,
    mode: Option<ModeArg>,
    samples: Option<usize>,
    seed: Option<u64>,
    g: GeometryArg,
    out: Option<&Path>,
    formats: &[ReportFormatArg],
    fiber: bool,
    require: bool,
) -> CliResult {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let (mu, nu) = (load(mu_path)?, load(nu_path)?);
    cfg.mu = Some(mu_path.to_path_buf());
    cfg.nu = Some(nu_path.to_path_buf());
    if config.is_none() || !matches!(g, GeometryArg::Auto) {
        cfg.geometry = geometry(g, &[&mu, &nu]);
    }
    if let Some(n) = n_stride {
        cfg.lea.n_stride = n;
    }
    if let Some(k) = kmax {
        cfg.lea.k_max = k;
        cfg.lea.k_min = cfg.lea.k_min.min(k);
    }
    match mode {
        Some(ModeArg::Dyadic) => cfg.lea.modes = vec![LeaMode::Dyadic],
        Some(ModeArg::Cylinder) => cfg.lea.modes = vec![LeaMode::Cylinder],
        Some(ModeArg::Both) => cfg.lea.modes = vec![LeaMode::Cylinder, LeaMode::Dyadic],
        None => {}
    }
    if let Some(s) = samples {
        cfg.samples = s;
        cfg.conv_samples = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.fiber |= fiber;
    if let Some(o) = out {
        cfg.out_dir = Some(o.to_path_buf());
    }
    cfg.validate()?;
    if require {
        let mut failed = Vec::new();
        for (name, s) in [("mu", &mu), ("nu", &nu)] {
            let h = check_hypotheses(s, cfg.geometry)?;
            failed.extend(h.failed.iter().map(|f| format!("{name} {f}")));
        }
        if !failed.is_empty() {
            return Err(Failure::Hypotheses(format!("failed: {}", failed.join(", "))));
        }
    }
    let report = run_experiment(&cfg, &mu, &nu)?;
    print!("{}", summary_text(&report));
    if let Some(dir) = &cfg.out_dir {
        let formats: Vec<ReportFormat> = formats
            .iter()
            .map(|f| match f {
                ReportFormatArg::Csv => ReportFormat::Csv,
                ReportFormatArg::Svg => ReportFormat::Svg,
                ReportFormatArg::Text => ReportFormat::Text,
            })
            .collect();
        for f in emit_report(&report, dir, &formats)? {
            eprintln!("wrote {}", f.display());
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn furstenberg(path: &Path, samples: usize, depth: u32, bins: usize, adjoint: bool, seed: u64, json: bool) -> CliResult {
    if samples == 0 || bins == 0 {
        return Err(Failure::Config("samples and bins must be positive".into()));
    }
    let ifs = load(path)?;
    let kind = if adjoint { FurstenbergKind::Adjoint } else { FurstenbergKind::Inverse };
    let s = sample_furstenberg(&ifs, samples, depth, seed, kind)?;
    let summary = s.summarize(&ifs, seed)?;
    let lyap = lyapunov_exponents(&ifs, 2000, 8, seed)?;
    if json {
        print_json(&serde_json::json!({ "summary": summary, "histogram": s.histogram(bins), "lyapunov": lyap }));
        return Ok(());
    }
    println!("{kind:?} Furstenberg measure, {} samples, depth {depth}", summary.n);
    println!(
        "mean direction {:.6} rad, concentration {:.4}, max cell mass {:.4}, stationarity {:.4}",
        summary.mean_direction.angle(),
        summary.concentration,
        summary.max_cell_mass,
        summary.stationarity
    );
    println!("Lyapunov exponents (bits): top {:.5}, bottom {:.5}", lyap.top, lyap.bottom);
    println!("bin_lo,bin_hi,mass");
    let w = std::f64::consts::PI / bins as f64;
    for (i, m) in s.histogram(bins).iter().enumerate() {
        println!("{:.6},{:.6},{:.6}", i as f64 * w, (i + 1) as f64 * w, m);
    }
    Ok(())
}

fn flow_check(path: &Path, words: usize, terms: usize, seed: u64, json: bool) -> CliResult {
    let ifs = load(path)?;
    let mut fixed = Vec::new();
    for s in 0..ifs.len() {
        for which in [Roof::F, Roof::G] {
            if let Some(c) = fixed_point_identity(&ifs, s, which)? {
                fixed.push(c);
            }
        }
    }
    let mut telescoping = 0.0_f64;
    for w in 0..words {
        let word = random_word(&ifs, 64, seed, 0xf10_0000 + w as u64);
        for which in [Roof::F, Roof::G] {
            let r = roof_function(&ifs, &word, Direction::new(0.7), 64, which)?;
            telescoping = telescoping.max(r.telescoping_residual());
        }
    }
    let dominated = find_invariant_multicone(&ifs.matrices(), DEFAULT_CONE_RESOLUTION).found().is_some();
    let mut cohomology = Vec::new();
    if dominated {
        for w in 0..words {
            let full = random_word(&ifs, 30 + terms + 12, seed, 0xc0b0_0000 + w as u64);
            let tw = TwoSidedWord { past: full[..29].to_vec(), tail: full[29], future: full[30..].to_vec() };
            cohomology.push(cohomology_check(&ifs, &tw, terms, 1e-6)?);
        }
    }
    let worst_fixed = fixed.iter().map(|c| c.residual()).fold(0.0, f64::max);
    let worst_cohomology = cohomology.iter().map(|c| c.residual).fold(0.0, f64::max);
    if json {
        print_json(&serde_json::json!({
            "fixed_points": fixed,
            "telescoping_residual": telescoping,
            "dominated": dominated,
            "cohomology": cohomology,
        }));
        return Ok(());
    }
    println!("symbol,roof,value,expected,residual");
    for c in &fixed {
        println!("{},{:?},{:.12},{:.12},{:.3e}", c.symbol, c.which, c.value, c.expected, c.residual());
    }
    println!("worst fixed-point residual {worst_fixed:.3e}");
    println!("worst Birkhoff telescoping residual {telescoping:.3e} over {words} words");
    if dominated {
        println!("worst cohomology residual {worst_cohomology:.3e} over {} words, {terms} terms", cohomology.len());
    } else {
        println!("no invariant multicone found; cohomology check skipped");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fiber(
    path: &Path,
    from_furstenberg: bool,
    theta: f64,
    words: usize,
    opts: FiberOptions,
    json: bool,
) -> CliResult {
    if !theta.is_finite() || words == 0 || opts.k_min > opts.k_max {
        return Err(Failure::Config("need finite theta, words > 0 and kmin <= kmax".into()));
    }
    let ifs = load(path)?;
    let theta = if from_furstenberg {
        let s = sample_furstenberg(&ifs, 4096, 60, opts.seed, FurstenbergKind::Inverse)?;
        s.summarize(&ifs, opts.seed)?.mean_direction
    } else {
        Direction::new(theta)
    };
    let r = fiber_structure_pooled(&ifs, theta, words, 256, &opts)?;
    if json {
        print_json(&r);
        return Ok(());
    }
    println!("theta {:.6} rad", theta.angle());
    println!("word,k,ell,rho,distance,pass");
    for x in &r.records {
        println!("{},{},{},{},{:.5},{}", x.word, x.k, x.ell, x.rho, x.distance, x.pass);
    }
    println!("pass rate {:.3} ({} of {} evaluated)", r.pass_rate, r.evaluated, r.records.len());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.cmd {
        Cmd::Check { ifs, geometry, require_hypotheses, json } => check(&ifs, geometry, require_hypotheses, json),
        Cmd::Dim { ifs, samples, nmin, nmax, seed, geometry, json } => dim(&ifs, samples, nmin, nmax, seed, geometry, json),
        Cmd::Resonance { mu, nu, config, n_stride, kmax, mode, samples, seed, geometry, out, format, fiber, require_hypotheses } => {
            resonance(
                &mu,
                &nu,
                config.as_deref(),
                n_stride,
                kmax,
                mode,
                samples,
                seed,
                geometry,
                out.as_deref(),
                &format,
                fiber,
                require_hypotheses,
            )
        }
        Cmd::Furstenberg { ifs, samples, depth, bins, adjoint, seed, json } => {
            furstenberg(&ifs, samples, depth, bins, adjoint, seed, json)
        }
        Cmd::FlowCheck { ifs, words, terms, seed, json } => flow_check(&ifs, words, terms, seed, json),
        Cmd::Fiber { ifs, theta_from_furstenberg, theta, words, m, kmin, kmax, no_cocycle, seed, json } => {
            let opts = FiberOptions { m, k_min: kmin, k_max: kmax, use_cocycle: !no_cocycle, seed, ..FiberOptions::default() };
            fiber(&ifs, theta_from_furstenberg, theta, words, opts, json)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Hypotheses(m)) => {
            eprintln!("hypothesis check failed: {m}");
            ExitCode::from(EXIT_HYPOTHESES)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numeric failure: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
