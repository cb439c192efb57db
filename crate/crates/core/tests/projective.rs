use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use afrl::projective::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_mat(rng: &mut ChaCha8Rng) -> Mat2 {
    Mat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn norm_along(m: &Mat2, t: f64) -> f64 {
    let v = m.apply([t.cos(), t.sin()]);
    v[0].hypot(v[1])
}

// Direction of the image of the unit vector that A stretches most, found by
// an angle sweep refined with golden-section search.
fn major_axis_by_search(m: &Mat2) -> Direction {
    let grid = 720;
    let best = (0..grid)
        .map(|i| PI * i as f64 / grid as f64)
        .max_by(|&a, &b| norm_along(m, a).total_cmp(&norm_along(m, b)))
        .unwrap();
    let (mut lo, mut hi) = (best - PI / grid as f64, best + PI / grid as f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if norm_along(m, x1) < norm_along(m, x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let t = 0.5 * (lo + hi);
    Direction::from_vector(m.apply([t.cos(), t.sin()]))
}

#[test]
fn svd_closed_forms() {
    let s = Mat2::IDENTITY.svd().unwrap();
    assert!(close(s.alpha1, 1.0, 1e-15) && close(s.alpha2, 1.0, 1e-15));
    assert!(s.reconstruct().max_abs_diff(&Mat2::IDENTITY) < 1e-15);

    let s = Mat2::diag(0.5, 1.0 / 3.0).svd().unwrap();
    assert!(close(s.alpha2, 0.5, 1e-15) && close(s.alpha1, 1.0 / 3.0, 1e-15));
    assert_eq!(Mat2::diag(0.5, 1.0 / 3.0).theta().unwrap(), Direction::X_AXIS);

    let s = Mat2::new(1.0, 1.0, 0.0, 1.0).svd().unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!(close(s.alpha2, phi, 1e-12));
    assert!(close(s.alpha1, phi - 1.0, 1e-12));
}

proptest! {
    #[test]
    fn svd_reconstructs(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let m = Mat2::new(a, b, c, d);
        prop_assume!(m.det().abs() > 1e-6);
        let s = m.svd().unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&m) < 1e-10);
        prop_assert!(s.alpha2 >= s.alpha1 && s.alpha1 > 0.0);
        for q in [s.u, s.v] {
            prop_assert!((q.transpose() * q).max_abs_diff(&Mat2::IDENTITY) < 1e-12);
        }
    }

    #[test]
    fn act_is_a_group_action(phi in 0.0f64..PI, a in 0.1f64..1.0, b in -1.0f64..1.0, c in 0.1f64..1.0) {
        let m = Mat2::new(a, b, 0.0, c);
        let n = Mat2::rotation(0.7) * Mat2::diag(0.5, 0.2);
        let t = Direction::new(phi);
        prop_assert!(t.act(&n).act(&m).dist(t.act(&(m * n))) < 1e-10);
    }
}

#[test]
fn eigen_cases() {
    match Mat2::diag(0.5, -1.0 / 3.0).eigen() {
        e @ Eigen2::Real { lambda1, lambda2, v2, .. } => {
            assert!(close(lambda1, -1.0 / 3.0, 1e-15));
            assert!(close(lambda2, 0.5, 1e-15));
            assert_eq!(v2, Some(Direction::X_AXIS));
            assert!(e.is_hyperbolic());
        }
        e => panic!("{e:?}"),
    }
    let rot = (Mat2::rotation(PI / 3.0)).scale(0.5).eigen();
    assert!(matches!(rot, Eigen2::Complex { .. }) && !rot.is_hyperbolic());
    let swap = Mat2::new(0.0, 0.5, 0.5, 0.0).eigen();
    let (m1, m2) = swap.moduli();
    assert!(close(m1, 0.5, 1e-15) && close(m2, 0.5, 1e-15));
    assert!(!swap.is_hyperbolic());
}

#[test]
fn theta_cases() {
    assert_eq!(theta_of(&Mat2::diag(0.5, 1.0 / 3.0)).unwrap(), Direction::X_AXIS);
    assert!(theta_of(&Mat2::diag(1.0 / 3.0, 0.5)).unwrap().dist(Direction::Y_AXIS) < 1e-15);
    let m = Mat2::rotation(FRAC_PI_4) * Mat2::diag(0.5, 0.25);
    assert!(theta_of(&m).unwrap().dist(Direction::new(FRAC_PI_4)) < 1e-14);
}

#[test]
fn theta_agrees_with_search_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let m = random_mat(&mut rng);
        let s = m.svd().unwrap();
        // a near-conformal matrix has a poorly defined axis
        if s.alpha2 < 1.05 * s.alpha1 {
            continue;
        }
        worst = worst.max(theta_of(&m).unwrap().dist(major_axis_by_search(&m)));
        assert!(theta_of(&m).unwrap().dist(s.major_axis()) < 1e-9);
        n += 1;
    }
    assert!(worst < 1e-6, "worst {worst}");
}

#[test]
fn act_direction_cases() {
    let t = Direction::new(1.1);
    assert!(act_direction(&Mat2::IDENTITY, t).dist(t) < 1e-15);
    assert_eq!(act_direction(&Mat2::diag(2.0, 4.0), Direction::X_AXIS), Direction::X_AXIS);
    let img = act_direction(&Mat2::diag(2.0, 4.0), Direction::new(FRAC_PI_4));
    assert!(img.dist(Direction::new(2f64.atan())) < 1e-15);
}

#[test]
fn limit_direction_constant_words() {
    let mats = [Mat2::diag(0.5, 0.25)];
    let f = limit_direction(&mats, &[0], LimitKind::Forward, 1e-10).unwrap();
    assert!(f.direction.dist(Direction::X_AXIS) < 1e-10);
    let i = limit_direction(&mats, &[0], LimitKind::Inverse, 1e-10).unwrap();
    assert!(i.direction.dist(Direction::Y_AXIS) < 1e-10);
}

#[test]
fn limit_direction_matches_doubled_depth_product() {
    let mats = [Mat2::diag(0.5, 0.25), Mat2::rotation(0.1) * Mat2::diag(0.5, 0.25)];
    let prefix = [0, 1];
    for kind in [LimitKind::Forward, LimitKind::Inverse, LimitKind::Adjoint] {
        let l = limit_direction(&mats, &prefix, kind, 1e-10).unwrap();
        let mut p = Mat2::IDENTITY;
        for n in 0..2 * l.steps {
            let m = mats[prefix[n % 2]];
            let f = match kind {
                LimitKind::Forward => m,
                LimitKind::Inverse => m.inverse().unwrap(),
                LimitKind::Adjoint => m.transpose(),
            };
            p = p * f;
            p = p.scale(1.0 / p.op_norm());
        }
        let d = l.direction.dist(p.theta().unwrap());
        assert!(d < 1e-10, "{kind:?}: {d}");
    }
}

#[test]
fn multicone_cases() {
    let diag = [Mat2::diag(0.5, 0.25), Mat2::diag(0.5, 0.125)];
    let c = find_invariant_multicone(&diag, 256);
    let c = c.found().expect("cone around the x-axis");
    assert!(c.contains(Direction::X_AXIS));
    assert!(!c.contains(Direction::Y_AXIS));

    let rot = [Mat2::rotation(1.0).scale(0.5)];
    for res in [64, 256, 1024, 4096] {
        assert!(find_invariant_multicone(&rot, res).found().is_none());
    }
}

#[test]
fn shear_multicone_traps_orbits() {
    // the parabolic pair fixes the x-axis, so no cone maps strictly inside itself
    let a = Mat2::new(1.0, 1.0, 0.0, 1.0).scale(0.4);
    assert!(find_invariant_multicone(&[a, a.transpose()], 2048).found().is_none());

    let a = Mat2::new(1.0, 1.0, 0.2, 1.0).scale(0.4);
    let mats = [a, a.transpose()];
    let verdict = find_invariant_multicone(&mats, 2048);
    let cone = verdict.found().expect("positive quadrant type cone");
    // forward invariance on a fine sample of the cone
    for i in 0..4096 {
        let t = Direction::new(PI * (i as f64 + 0.5) / 4096.0);
        if cone.contains(t) {
            for m in &mats {
                assert!(cone.contains(t.act(m)));
            }
        }
    }
    // brute-force orbits are eventually trapped and stay trapped
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..4096 {
        let mut t = Direction::new(PI * i as f64 / 4096.0);
        let mut entered = None;
        for step in 0..60 {
            t = t.act(&mats[rng.gen_range(0..2)]);
            if cone.contains(t) {
                entered.get_or_insert(step);
            } else {
                assert!(entered.is_none(), "orbit left the cone");
            }
        }
        assert!(entered.is_some());
    }
}

#[test]
fn irreducibility_cases() {
    let diag = [Mat2::diag(0.5, 0.25), Mat2::diag(0.3, 0.6)];
    match check_irreducible(&diag, 512) {
        Irreducibility::Reducible { witness } => {
            assert!(witness.dist(Direction::X_AXIS) < 1e-12 || witness.dist(Direction::Y_AXIS) < 1e-12)
        }
        v => panic!("{v:?}"),
    }

    let pair = [Mat2::diag(0.5, 0.25), Mat2::rotation(FRAC_PI_4) * Mat2::diag(0.5, 0.25)];
    assert!(check_irreducible(&pair, 512).is_irreducible());
    // oracle: no eigendirection of any generator is fixed by all generators
    let candidates: Vec<Direction> = pair.iter().flat_map(|m| m.eigen().directions()).collect();
    assert!(!candidates.is_empty() && candidates.len() <= 4);
    for t in candidates {
        assert!(pair.iter().any(|m| t.act(m).dist(t) > 1e-6));
    }

    let single = [Mat2::new(0.5, 0.2, 0.0, 0.25)];
    let v2 = single[0].eigen().directions()[0];
    match check_irreducible(&single, 512) {
        Irreducibility::Reducible { witness } => assert!(witness.act(&single[0]).dist(witness) < 1e-12 && (witness.dist(v2) < 1e-12 || witness.dist(Direction::X_AXIS) < 1e-12)),
        v => panic!("{v:?}"),
    }
}

#[test]
fn direction_normalization() {
    assert!(close(Direction::new(-FRAC_PI_2).angle(), FRAC_PI_2, 1e-15));
    assert!(close(Direction::new(3.0 * PI + 0.25).angle(), 0.25, 1e-12));
    assert!(close(Direction::new(0.1).dist(Direction::new(PI - 0.1)), 0.2, 1e-12));
    assert!(close(Direction::new(0.3).perp().angle(), 0.3 + FRAC_PI_2, 1e-15));
}

#[test]
fn tangent_identity_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 10_000 {
        let m = random_mat(&mut rng);
        let Ok(s) = m.svd() else { continue };
        if s.alpha2 < 1.05 * s.alpha1 {
            continue;
        }
        let t = Direction::new(rng.gen_range(0.0..PI));
        let major = theta_of(&m).unwrap();
        if t.dist(major) < 1e-3 {
            continue;
        }
        let inv = m.inverse().unwrap();
        let lhs = t.act(&inv).dist(theta_of(&inv).unwrap()).tan();
        let rhs = s.alpha1 / s.alpha2 * t.dist(major.perp()).tan();
        worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
        n += 1;
    }
    assert!(worst < 1e-9, "worst {worst}");
}
