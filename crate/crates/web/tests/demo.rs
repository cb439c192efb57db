use afrl_web::{attractor_density, entropy_profile, furstenberg_histogram, parse_system};

const SQUARE: &str = "[system]\nalphabet = 4\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.5]\nt = [0.0, 0.0]\np = 0.25\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.5]\nt = [0.5, 0.0]\np = 0.25\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.5]\nt = [0.0, 0.5]\np = 0.25\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.5]\nt = [0.5, 0.5]\np = 0.25\n";

const DIAG: &str = "[system]\nalphabet = 2\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.25]\nt = [0.0, 0.0]\np = 0.5\n\
[[map]]\nA = [0.5, 0.0, 0.0, 0.25]\nt = [0.5, 0.75]\np = 0.5\n";

#[test]
fn bad_toml_is_an_error_string() {
    assert!(parse_system("[system]\nalphabet = 3\n").is_err());
    let e = attractor_density("not toml", 100, 8, 8, 1).unwrap_err();
    assert!(e.contains("config"), "{e}");
}

#[test]
fn density_image_shape_and_coverage() {
    let img = attractor_density(SQUARE, 200_000, 64, 48, 3).unwrap();
    assert_eq!(img.len(), 64 * 48 * 4);
    assert!(img.chunks(4).all(|p| p[3] == 255));
    // the square fills the central 46x46 block up to the 4% margin
    let inked = img.chunks(4).filter(|p| p[0] != 255).count();
    assert!(inked > 40 * 40, "{inked}");
    assert!(attractor_density(SQUARE, 100, 0, 10, 1).is_err());
}

#[test]
fn density_is_deterministic() {
    assert_eq!(attractor_density(DIAG, 50_000, 32, 32, 9).unwrap(), attractor_density(DIAG, 50_000, 32, 32, 9).unwrap());
}

#[test]
fn square_profile_slope_is_two() {
    let v = entropy_profile(SQUARE, 1 << 20, 3, 8, 1).unwrap();
    assert_eq!(v.n, (0..=8).collect::<Vec<_>>());
    let s = v.slope.unwrap();
    assert!((s - 2.0).abs() < 0.02, "{s}");
    assert!(entropy_profile(SQUARE, 1000, 5, 5, 1).is_err());
}

#[test]
fn diagonal_histogram_sits_on_the_y_axis() {
    let h = furstenberg_histogram(DIAG, 2000, 16, false, 1).unwrap();
    assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // A^{-1} = diag(2, 4) pushes every direction to pi/2, the left edge of bin 8
    let near: f64 = h[7] + h[8];
    assert!(near > 0.999, "{h:?}");
    assert!(furstenberg_histogram(DIAG, 10, 0, false, 1).is_err());
}
