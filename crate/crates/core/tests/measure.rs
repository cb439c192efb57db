use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

use afrl::entropy::{entropy_dimension, EntropyOptions};
use afrl::ifs::*;
use afrl::measure::*;
use afrl::projective::{Direction, Mat2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square() -> AffineIfs {
    product_system(&[(0.5, 0.0), (0.5, 0.5)], &[(0.5, 0.0), (0.5, 0.5)], &[0.5, 0.5], &[0.5, 0.5]).unwrap()
}

fn cantor3_product() -> AffineIfs {
    let c = [(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)];
    product_system(&c, &c, &[0.5, 0.5], &[0.5, 0.5]).unwrap()
}

fn rotated() -> AffineIfs {
    AffineIfs::uniform(vec![
        AffineMap2::new(Mat2::rotation(0.3) * Mat2::diag(0.6, 0.2), [0.0, 0.0]),
        AffineMap2::new(Mat2::rotation(-0.2) * Mat2::diag(0.5, 0.25), [0.5, 0.3]),
    ])
    .unwrap()
}

fn sample(ifs: &AffineIfs, n: usize, seed: u64) -> EmpiricalMeasure {
    let depth = depth_for_resolution(ifs, 1e-9).unwrap();
    sample_selfaffine(ifs, n, depth, seed).unwrap()
}

fn uniform_line(n: usize, a: f64, b: f64, seed: u64) -> EmpiricalMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmpiricalMeasure::from_line((0..n).map(|_| rng.gen_range(a..b)).collect(), vec![1.0; n]).unwrap()
}

fn uniform_disk(n: usize, seed: u64) -> EmpiricalMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            pts.push(p);
        }
    }
    EmpiricalMeasure::uniform(2, pts).unwrap()
}

fn uniform_unit_square(n: usize, seed: u64) -> EmpiricalMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmpiricalMeasure::uniform(2, (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()).unwrap()
}

#[test]
fn single_map_samples_its_fixed_point() {
    let f = AffineMap2::new(Mat2::rotation(0.4) * Mat2::diag(0.5, 0.3), [0.2, -0.1]);
    let ifs = AffineIfs::uniform(vec![f]).unwrap();
    let m = sample_selfaffine(&ifs, 1000, 30, 1).unwrap();
    let x = f.fixed_point().unwrap();
    for p in m.points() {
        assert!((p[0] - x[0]).hypot(p[1] - x[1]) <= m.provenance.truncation);
    }
}

#[test]
fn square_level_two_cells_are_uniform() {
    let n = 1 << 18;
    let m = sample(&square(), n, 3);
    let sigma = (n as f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt() / n as f64;
    for i in 0..4 {
        for j in 0..4 {
            let mass = m.mass_of(&Region::Cell { level: 2, index: [i, j] });
            assert!((mass - 1.0 / 16.0).abs() < 3.0 * sigma, "cell ({i},{j}) {mass}");
        }
    }
}

#[test]
fn cantor_product_matches_exact_cylinder_weights() {
    // each level-6 cylinder of the product of two middle-third Cantor sets has mass 4^-6
    let n = 1 << 20;
    let m = sample(&cantor3_product(), n, 4);
    let mut counts: HashMap<(i64, i64), usize> = HashMap::new();
    let scale = 3f64.powi(6);
    for p in m.points() {
        *counts.entry(((p[0] * scale + 1e-9).floor() as i64, (p[1] * scale + 1e-9).floor() as i64)).or_default() += 1;
    }
    let cells = 4096.0;
    assert_eq!(counts.len(), 4096);
    let expected = n as f64 / cells;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // chi-square with 4095 degrees of freedom: mean 4095, sd about 90.5
    assert!(chi2 < 4095.0 + 5.0 * 90.5, "chi2 {chi2}");
}

#[test]
fn sampling_is_deterministic_across_thread_counts() {
    let ifs = rotated();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let a = sample(&ifs, 100_000, 11);
                let b = convolve_empirical(&a, &a, 50_000, 12).unwrap();
                (a, b)
            })
    };
    let (a1, b1) = run(1);
    let (a4, b4) = run(4);
    assert_eq!(a1, a4);
    assert_eq!(b1, b4);
    assert_ne!(a1, sample(&ifs, 100_000, 13));
}

#[test]
fn pushforward_identities() {
    let m = sample(&rotated(), 10_000, 1);
    assert_eq!(m.pushforward(&AffineMap2::IDENTITY).unwrap(), m);
    let d = uniform_disk(10_000, 2);
    assert_eq!(magnify_unit_ball(&d, 0.0, 1.0).unwrap(), d);
}

#[test]
fn magnification_keeps_area_ratio() {
    let r = 1.0;
    let d = uniform_disk(400_000, 3);
    let scaled = d.map_points(|p| [2.0 * p[0], 2.0 * p[1]]).unwrap();
    let kept = scaled.mass_of(&Region::Ball(Ball { center: [0.0, 0.0], radius: 1.0 }));
    assert!((kept - 0.25).abs() < 0.005, "{kept}");
    let m = magnify_unit_ball(&d, r, 1.0).unwrap();
    assert!((m.len() as f64 / d.len() as f64 - 0.25).abs() < 0.005);
    assert!(m.points().iter().all(|p| p[0].hypot(p[1]) <= 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn pushforward_is_functorial(a in 0.2f64..0.9, b in -0.3f64..0.3, phi in 0.0f64..3.0, tx in -1.0f64..1.0) {
        let m = sample(&rotated(), 2000, 5);
        let f = AffineMap2::new(Mat2::new(a, b, 0.1, a), [tx, 0.0]);
        let g = AffineMap2::new(Mat2::rotation(phi), [0.3, tx]);
        let two = m.pushforward(&g).unwrap().pushforward(&f).unwrap();
        let one = m.pushforward(&f.compose(&g)).unwrap();
        for (p, q) in two.points().iter().zip(one.points()) {
            prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }
        prop_assert_eq!(two.weights(), one.weights());
    }

    #[test]
    fn cell_masses_partition(level in 0i32..5, seed in 0u64..1000) {
        let m = uniform_unit_square(2000, seed);
        let k = 1i64 << level;
        let total: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| m.mass_of(&Region::Cell { level, index: [i, j] })).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn restrict_to_everything_is_identity() {
    let m = sample(&rotated(), 10_000, 7);
    assert_eq!(m.restrict_normalize(&Region::All, 1.0).unwrap(), m);
}

#[test]
fn left_half_of_square_doubles_weights() {
    let m = uniform_unit_square(100_000, 8);
    let left = Region::Rect(Rectangle { center: [0.25, 0.5], direction: Direction::Y_AXIS, half_long: 0.5, half_short: 0.25 });
    let r = m.restrict_normalize(&left, 1.0).unwrap();
    assert!(r.points().iter().all(|p| p[0] <= 0.5));
    let ratio = r.weights()[0] / m.weights()[0];
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
}

#[test]
fn cantor_restricted_to_first_third_is_a_copy() {
    let c = line_system(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], &[0.5, 0.5]).unwrap();
    let m = sample(&c, 1 << 18, 9).project_x().unwrap();
    let part = m.restrict_normalize(&Region::Interval { lo: 0.0, hi: 0.5 }, 100.0).unwrap();
    let rescaled = part.map_points(|p| [3.0 * p[0], 0.0]).unwrap();
    let d = levy_distance(&rescaled, &m).unwrap();
    assert!(d < 0.02, "{d}");
}

#[test]
fn dyadic_rescale_of_uniform_square_is_uniform() {
    let m = uniform_unit_square(1 << 20, 10);
    let x = [0.3, 0.7];
    let r = dyadic_rescale(&m, x, 3, 100.0).unwrap();
    assert!(r.points().iter().all(|p| (-1.0..1.0).contains(&p[0]) && (-1.0..1.0).contains(&p[1])));
    let q = r.mass_of(&Region::Cell { level: 0, index: [0, 0] });
    assert!((q - 0.25).abs() < 0.02, "{q}");
    let mean = r.mean();
    assert!(mean[0].abs() < 0.02 && mean[1].abs() < 0.02);
}

#[test]
fn dyadic_rescale_moves_corner_atom_to_corner() {
    let m = EmpiricalMeasure::uniform(2, vec![[0.25, 0.5]]).unwrap();
    let r = dyadic_rescale(&m, [0.3, 0.6], 2, 1.0).unwrap();
    assert_eq!(r.points(), &[[-1.0, -1.0]]);
}

#[test]
fn dyadic_rescale_matches_cylinder_enumeration() {
    // product of two C(1/4) Cantor sets (digits 0 and 3): the cell D_4(x) holds
    // exactly one level-2 cylinder, so the rescaled measure is a scaled copy of the whole
    let c = [(0.25, 0.0), (0.25, 0.75)];
    let ifs = product_system(&c, &c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
    let m = sample(&ifs, 1 << 20, 12);
    let x = [0.75 + 0.1875 + 0.001, 0.0 + 0.001];
    let r = dyadic_rescale(&m, x, 4, 100.0).unwrap();
    let whole = m.map_points(|p| [2.0 * p[0] - 1.0, 2.0 * p[1] - 1.0]).unwrap();
    let (a, b) = (r.project_x().unwrap(), whole.project_x().unwrap());
    assert!(levy_distance(&a, &b).unwrap() < 0.02);
    let (a, b) = (r.project_y().unwrap(), whole.project_y().unwrap());
    assert!(levy_distance(&a, &b).unwrap() < 0.02);
    assert!((r.len() as f64 / m.len() as f64 - 1.0 / 16.0).abs() < 0.002);
}

#[test]
fn projections_of_products() {
    let sq = uniform_unit_square(1 << 18, 13);
    let px = sq.project_x().unwrap();
    assert!(levy_distance(&px, &uniform_line(1 << 18, 0.0, 1.0, 14)).unwrap() < 0.01);

    let c3 = [(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)];
    let c4 = [(0.25, 0.0), (0.25, 0.75)];
    let prod = product_system(&c3, &c4, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
    let marginal = sample(&prod, 1 << 18, 15).project_x().unwrap();
    let first = sample(&line_system(&c3, &[0.5, 0.5]).unwrap(), 1 << 18, 16).project_x().unwrap();
    assert!(levy_distance(&marginal, &first).unwrap() < 0.01);
}

#[test]
fn generic_projection_of_cantor_square_is_full_dimensional() {
    let m = sample(&cantor3_product(), 1 << 22, 17).project_line(Direction::new(1.0)).unwrap();
    let d = entropy_dimension(&m, 8..=16, &EntropyOptions::default()).unwrap();
    assert!((d.slope - 1.0).abs() < 0.05, "{}", d.slope);
}

#[test]
fn diagonal_projection_of_cantor_square_is_resonant() {
    // x + y has base-3 digits {0, 2, 4} with weights (1/4, 1/2, 1/4) and touching
    // first-level intervals: dimension 1.5 / log2 3
    let m = sample(&cantor3_product(), 1 << 22, 17).project_line(Direction::new(FRAC_PI_4)).unwrap();
    let d = entropy_dimension(&m, 8..=16, &EntropyOptions::default()).unwrap();
    let exact = 1.5 / 3f64.log2();
    assert!((d.slope - exact).abs() < 0.02, "{} vs {exact}", d.slope);
}

#[test]
fn vertical_tube_of_square_is_uniform() {
    let m = uniform_unit_square(1 << 20, 18);
    let s = tube_slice(&m, Direction::Y_AXIS, [0.4, 0.5], 0.01, 100.0).unwrap();
    let prof = s.measure();
    let u = uniform_line(1 << 16, -0.5, 0.5, 19);
    let d = levy_distance(prof, &u).unwrap();
    assert!(d < 0.02, "{d}");
}

#[test]
fn horizontal_slice_of_cantor_square_has_cantor_dimension() {
    let m = sample(&cantor3_product(), 1 << 22, 20);
    let center = m.points()[0];
    let s = tube_slice(&m, Direction::X_AXIS, center, 3f64.powi(-6), 100.0).unwrap();
    let d = entropy_dimension(s.measure(), 4..=10, &EntropyOptions::default()).unwrap();
    assert!((d.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{}", d.slope);
}

#[test]
fn shrinking_tubes_converge() {
    let ifs = rotated();
    let m = sample(&ifs, 1 << 22, 21);
    let center = m.points()[3];
    let theta = Direction::new(1.2);
    let slices: Vec<EmpiricalMeasure> = (3..=8)
        .map(|t| tube_slice(&m, theta, center, (-(t as f64)).exp2(), 100.0).unwrap().measure().clone())
        .collect();
    let gaps: Vec<f64> = slices.windows(2).map(|p| levy_distance(&p[0], &p[1]).unwrap()).collect();
    assert!(gaps.last().unwrap() < &0.05, "{gaps:?}");
    assert!(gaps.last().unwrap() < gaps.first().unwrap(), "{gaps:?}");
}

#[test]
fn convolution_of_atoms() {
    let a = EmpiricalMeasure::uniform(2, vec![[0.5, -1.0]]).unwrap();
    let b = EmpiricalMeasure::uniform(2, vec![[0.25, 2.0]]).unwrap();
    for c in [convolve_empirical(&a, &b, 10, 1).unwrap(), convolve_full(&a, &b).unwrap()] {
        assert!(c.points().iter().all(|p| *p == [0.75, 1.0]));
    }
}

#[test]
fn uniform_convolution_is_triangular() {
    let n = 1 << 20;
    let u = uniform_line(1 << 16, 0.0, 1.0, 22);
    let c = convolve_empirical(&u, &u, n, 23).unwrap();
    // level-3 cells of [0, 2): exact triangle masses
    let tri = |x: f64| if x <= 1.0 { x * x / 2.0 } else { 1.0 - (2.0 - x).powi(2) / 2.0 };
    for k in 0..16 {
        let (lo, hi) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
        let p = tri(hi) - tri(lo);
        let mass = c.mass_of(&Region::Interval { lo, hi });
        // the 2^16-point base adds its own noise; allow 3 sigma of the combined binomial
        let sigma = (p * (1.0 - p) / n as f64 + 2.0 * p * (1.0 - p) / (1 << 16) as f64).sqrt();
        assert!((mass - p).abs() < 3.0 * sigma + 1e-12, "cell {k}: {mass} vs {p}");
    }
}

#[test]
fn cantor_quarter_convolution_has_digit_sum_law() {
    let c4 = line_system(&[(0.25, 0.0), (0.25, 0.75)], &[0.5, 0.5]).unwrap();
    let m = sample(&c4, 1 << 18, 24).project_x().unwrap();
    let conv = convolve_empirical(&m, &m, 1 << 18, 25).unwrap();
    // oracle: digits {0, 3, 6} in base 4 with weights (1/4, 1/2, 1/4)
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let exact: Vec<f64> = (0..1 << 18)
        .map(|_| {
            (1..=30)
                .map(|k| {
                    let u: f64 = rng.gen();
                    let digit = if u < 0.25 { 0.0 } else if u < 0.75 { 3.0 } else { 6.0 };
                    digit * 0.25f64.powi(k)
                })
                .sum()
        })
        .collect();
    let exact = EmpiricalMeasure::from_line(exact, vec![1.0; 1 << 18]).unwrap();
    let d = levy_distance(&conv, &exact).unwrap();
    assert!(d < 0.01, "{d}");
}

#[test]
fn levy_distance_closed_forms() {
    let u = uniform_line(1 << 16, 0.0, 1.0, 27);
    assert_eq!(levy_distance(&u, &u).unwrap(), 0.0);
    let a = EmpiricalMeasure::from_line(vec![0.0], vec![1.0]).unwrap();
    let b = EmpiricalMeasure::from_line(vec![0.5], vec![1.0]).unwrap();
    assert!((levy_distance(&a, &b).unwrap() - 0.5).abs() < 1e-6);
    // U[0,1] against U[0,1.1]: the binding constraint is x/1.1 >= (x - e) - e at x = 1 + e, e = 1/21
    let v = uniform_line(1 << 16, 0.0, 1.1, 28);
    let d = levy_distance(&u, &v).unwrap();
    assert!((d - 1.0 / 21.0).abs() < 0.004, "{d}");
}

#[test]
fn snapshot_round_trip() {
    let mut m = sample(&rotated(), 5000, 29);
    m.provenance.note = "x".into();
    let mut buf = Vec::new();
    write_snapshot(&m, &mut buf).unwrap();
    let back = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.provenance.depth, m.provenance.depth);

    let line = uniform_line(100, 0.0, 1.0, 30);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    write_snapshot_file(&line, &path).unwrap();
    assert_eq!(read_snapshot_file(&path).unwrap(), line);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_snapshot(bad.as_slice()).is_err());
    assert!(read_snapshot(&buf[..buf.len() - 3]).is_err());
}

#[test]
fn empty_and_invalid_measures_are_errors() {
    assert!(EmpiricalMeasure::uniform(2, vec![]).is_err());
    assert!(EmpiricalMeasure::new(2, vec![[0.0, 0.0]], vec![-1.0]).is_err());
    assert!(EmpiricalMeasure::new(2, vec![[f64::NAN, 0.0]], vec![1.0]).is_err());
    assert!(EmpiricalMeasure::new(3, vec![[0.0, 0.0]], vec![1.0]).is_err());
    let m = uniform_unit_square(10, 1);
    assert!(m.restrict_normalize(&Region::Ball(Ball { center: [5.0, 5.0], radius: 0.1 }), 1.0).is_err());
    assert!(sample_selfaffine(&rotated(), 0, 10, 1).is_err());
}
