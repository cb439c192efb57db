use afrl::dynamics::arithmetic_set_detect;
use afrl::entropy::LeaMode;
use afrl::ifs::load_ifs_toml;
use afrl::resonance::*;
use proptest::prelude::*;

fn system(name: &str) -> afrl::ifs::AffineIfs {
    load_ifs_toml(format!("{}/../../systems/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn quick_line_config() -> ExperimentConfig {
    ExperimentConfig {
        geometry: Geometry::Line,
        samples: 1 << 18,
        conv_samples: 1 << 18,
        n_min: 6,
        n_max: 12,
        seed: 3,
        lea: LeaConfig { n_stride: 6, k_min: 1, k_max: 2, modes: vec![LeaMode::Cylinder, LeaMode::Dyadic], n_pairs: 1 << 16, zoom_samples: 1 << 14 },
        furstenberg_samples: 512,
        lyapunov_steps: 200,
        ..ExperimentConfig::default()
    }
}

fn quick_c4_report() -> ResonanceReport {
    let c4 = system("cantor4_line");
    run_experiment(&quick_line_config(), &c4, &c4).unwrap()
}

fn dims(mu: f64, nu: f64, conv: f64, se: f64) -> Dims {
    Dims { mu, mu_stderr: se, nu, nu_stderr: se, conv, conv_stderr: se }
}

#[test]
fn rule_table_cases() {
    let arith = arithmetic_set_detect(&[2.0, 2.0], 1e-6, 10_000).unwrap();
    let irr = arithmetic_set_detect(&[3f64.log2(), 2.0], 1e-6, 10_000).unwrap();
    let m = Margins::default();

    let v = resonance_verdict(&dims(0.5, 0.5, 0.75, 0.005), &arith, true, &[], &m, 1.0);
    assert_eq!(v.classification, Classification::ResonantArithmetic);
    assert!((v.expected - 1.0).abs() < 1e-15 && (v.deficit - 0.25).abs() < 1e-12);
    assert_eq!(v.side_condition, Some(false));

    let v = resonance_verdict(&dims(0.63, 0.5, 1.0, 0.005), &irr, true, &[], &m, 1.0);
    assert_eq!(v.classification, Classification::DissonantConsistent);

    let failed = vec!["mu irreducibility".to_string()];
    let v = resonance_verdict(&dims(1.2, 0.6, 1.5, 0.005), &arith, false, &failed, &m, 2.0);
    assert_eq!(v.classification, Classification::Inconclusive);
    assert!(v.notes.iter().any(|n| n.contains("irreducibility")));
    assert_eq!(v.side_condition, Some(true));

    let v = resonance_verdict(&dims(0.5, 0.5, 0.75, 0.005), &irr, true, &[], &m, 1.0);
    assert_eq!(v.classification, Classification::ResonantNonarithmeticFlag);
    assert_eq!(v.caveat.as_deref(), Some(NONARITHMETIC_CAVEAT));

    // between the consistency margin and a drop threshold inflated by the noise
    let v = resonance_verdict(&dims(0.5, 0.5, 0.85, 0.04), &arith, true, &[], &m, 1.0);
    assert_eq!(v.classification, Classification::Inconclusive);
    assert!(v.drop_threshold > 0.1);

    let v = resonance_verdict(&dims(f64::NAN, 0.5, 0.75, 0.005), &arith, true, &[], &m, 1.0);
    assert_eq!(v.classification, Classification::Inconclusive);

    assert_eq!(serde_json::to_string(&Classification::ResonantNonarithmeticFlag).unwrap(), "\"RESONANT-NONARITHMETIC-FLAG\"");
    assert_eq!(Classification::DissonantConsistent.to_string(), "DISSONANT-CONSISTENT");
}

fn is_resonant(c: Classification) -> bool {
    matches!(c, Classification::ResonantArithmetic | Classification::ResonantNonarithmeticFlag)
}

proptest! {
    #[test]
    fn raising_the_drop_margin_never_creates_a_drop(
        mu in 0.0f64..2.0, nu in 0.0f64..2.0, conv in 0.0f64..2.0, se in 0.0f64..0.1,
        d1 in 0.0f64..0.5, extra in 0.0f64..0.5, arithmetic in any::<bool>(), pass in any::<bool>(), cap in prop::sample::select(vec![1.0, 2.0]),
    ) {
        let logs = if arithmetic { vec![2.0, 4.0] } else { vec![1.0, 3f64.log2()] };
        let av = arithmetic_set_detect(&logs, 1e-6, 10_000).unwrap();
        let failed = if pass { vec![] } else { vec!["nu domination".to_string()] };
        let lo = Margins { drop: d1, ..Margins::default() };
        let hi = Margins { drop: d1 + extra, ..Margins::default() };
        let a = resonance_verdict(&dims(mu, nu, conv, se), &av, pass, &failed, &lo, cap).classification;
        let b = resonance_verdict(&dims(mu, nu, conv, se), &av, pass, &failed, &hi, cap).classification;
        if is_resonant(b) {
            prop_assert_eq!(a, b);
        }
        if a != b {
            prop_assert!(is_resonant(a));
            prop_assert_eq!(b, Classification::Inconclusive);
        }
        if is_resonant(a) {
            prop_assert!(pass);
        }
    }
}

#[test]
fn hypothesis_checks() {
    let h = check_hypotheses(&system("rotated_separated"), Geometry::Planar).unwrap();
    assert!(h.all_pass(), "{:?}", h.failed);
    assert_eq!((h.hyperbolic, h.dominated), (Some(true), Some(true)));

    let h = check_hypotheses(&system("carpet"), Geometry::Planar).unwrap();
    assert!(h.failed.iter().any(|f| f == "irreducibility"), "{:?}", h.failed);

    let h = check_hypotheses(&system("square"), Geometry::Planar).unwrap();
    assert!(h.failed.iter().any(|f| f == "hyperbolicity"));

    for name in ["cantor3_line", "cantor4_line"] {
        let h = check_hypotheses(&system(name), Geometry::Line).unwrap();
        assert!(h.all_pass() && h.hyperbolic.is_none() && h.irreducible.is_none());
        assert!(h.separation_slack.is_some());
    }
}

#[test]
fn config_round_trip_and_validation() {
    let c = quick_line_config();
    let back = ExperimentConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    for bad in ["samples = 0", "n_min = 12\nn_max = 12", "[lea]\nk_min = 3\nk_max = 2", "[margins]\ndrop = -1.0", "[arithmetic]\ntol = 0.0"] {
        assert!(matches!(ExperimentConfig::from_toml(bad), Err(afrl::Error::Config(_))), "{bad}");
    }
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../experiments/line_dissonant.toml");
    let c = ExperimentConfig::load(path).unwrap();
    let (mu, nu) = c.load_systems().unwrap();
    assert_eq!((mu.len(), nu.len()), (2, 2));
    assert!(matches!(ExperimentConfig::default().load_systems(), Err(afrl::Error::Config(_))));
}

#[test]
fn stage_errors_are_tagged() {
    let c4 = system("cantor4_line");
    let cfg = ExperimentConfig { samples: 500, n_min: 20, n_max: 28, ..quick_line_config() };
    match run_experiment(&cfg, &c4, &c4) {
        Err(afrl::Error::Stage { stage, .. }) => assert_eq!(stage, "dimension"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn emit_report_formats() {
    let r = quick_c4_report();
    let dir = tempfile::tempdir().unwrap();

    let only = dir.path().join("none");
    let files = emit_report(&r, &only, &[]).unwrap();
    assert_eq!(files, vec![only.join("verdict.json")]);
    assert_eq!(std::fs::read_dir(&only).unwrap().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert!(v["verdict"]["classification"].is_string());

    let csv = dir.path().join("csv");
    emit_report(&r, &csv, &[ReportFormat::Csv]).unwrap();
    for name in ["mu", "nu", "conv"] {
        let text = std::fs::read_to_string(csv.join(format!("entropy_profile_{name}.csv"))).unwrap();
        assert!(text.starts_with("n,H_bits,n_eff,occupied,reliable\n"));
        assert_eq!(text.lines().count(), 1 + 7);
    }
    let lea = std::fs::read_to_string(csv.join("lea_series.csv")).unwrap();
    assert!(lea.starts_with("k,i_k,ell_k,H_N_conv,H_N_proj_mu,H_N_proj_nu,reliable\n"));
    assert!(!csv.join("report.txt").exists() && !csv.join("entropy_profiles.svg").exists());

    let all = dir.path().join("all");
    emit_report(&r, &all, &[ReportFormat::Csv, ReportFormat::Svg, ReportFormat::Text]).unwrap();
    let txt = std::fs::read_to_string(all.join("report.txt")).unwrap();
    assert!(txt.contains(r.verdict.classification.label()));
    let svg = std::fs::read_to_string(all.join("entropy_profiles.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(all.join("lea_series.svg").exists());

    assert!(matches!(emit_report(&r, all.join("report.txt").join("x"), &[]), Err(afrl::Error::Io(_))));
}

#[test]
fn verdict_json_is_byte_stable_across_runs_and_threads() {
    let c4 = system("cantor4_line");
    let cfg = quick_line_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| run_experiment(&cfg, &c4, &c4).unwrap());
        let dir = tempfile::tempdir().unwrap();
        emit_report(&r, dir.path(), &[ReportFormat::Csv]).unwrap();
        let json = std::fs::read(dir.path().join("verdict.json")).unwrap();
        let lea = std::fs::read(dir.path().join("lea_series.csv")).unwrap();
        (json, lea)
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
}
