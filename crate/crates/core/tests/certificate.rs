mod common;

use common::random_poles;
use fracrk::certificate::*;
use fracrk::discretize::SpectralInterval;
use fracrk::functions::{gamma_k, ParametricFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn direct_r(p: &[f64], x: f64) -> f64 {
    p.iter().map(|&xi| (x + xi) / (x - xi)).product()
}

#[test]
fn r_eval_matches_product() {
    let p = [-3.0, -40.0, -700.0, -0.5];
    for x in [0.1, 1.0, 3.0, 17.0, 1e4] {
        let a = r_eval(&p, x).value();
        let b = direct_r(&p, x);
        assert!((a - b).abs() <= 4e-15 * b.abs(), "x={x}");
    }
    assert_eq!(r_eval(&p, 3.0).sign, 0);
    assert_eq!(r_eval(&p, 3.0).value(), 0.0);
    assert_eq!(r_eval(&[], 5.0).value(), 1.0);
}

#[test]
fn r_eval_survives_underflow() {
    let p: Vec<f64> = (0..400).map(|j| -1.0 - j as f64 * 1e-3).collect();
    let v = r_eval(&p, 1.2345);
    assert!(v.log_mag.is_finite() && v.log_mag < -700.0);
}

#[test]
fn derivatives_match_finite_differences() {
    let p = [-2.0, -9.0, -50.0];
    for x in [1.0, 4.0, 20.0, 100.0] {
        let (r, d1, d2) = r_derivatives(&p, x);
        let h = 1e-4 * x;
        let fd1 = (direct_r(&p, x + h) - direct_r(&p, x - h)) / (2.0 * h);
        let fd2 = (direct_r(&p, x + h) - 2.0 * direct_r(&p, x) + direct_r(&p, x - h)) / (h * h);
        assert!((r - direct_r(&p, x)).abs() < 1e-14);
        assert!((d1 - fd1).abs() < 1e-6 * fd1.abs().max(1e-3), "x={x}: {d1} vs {fd1}");
        assert!((d2 - fd2).abs() < 1e-4 * fd2.abs().max(1e-3), "x={x}: {d2} vs {fd2}");
    }
}

#[test]
fn single_pole_at_geometric_mean_equioscillates() {
    let iv = SpectralInterval::new(1.0, 4.0).unwrap();
    let c = certify(&[-2.0], &iv).unwrap();
    assert!((c.delta - 1.0 / 3.0).abs() < 1e-16);
    assert!(c.extrema.is_empty());
    assert!((r_eval(&[-2.0], 1.0).abs() - r_eval(&[-2.0], 4.0).abs()).abs() < 1e-16);
}

#[test]
fn two_pole_extremum_closed_form() {
    // r′ = 0 at λ² = ξ₁ξ₂ between the poles.
    let p = [-2.0, -18.0];
    let e = interior_extrema(&p).unwrap();
    assert_eq!(e.len(), 1);
    assert!((e[0] - 6.0).abs() < 1e-12);
    let iv = SpectralInterval::new(1.0, 50.0).unwrap();
    let c = certify(&p, &iv).unwrap();
    let want = direct_r(&p, 1.0).abs().max(direct_r(&p, 50.0).abs()).max(direct_r(&p, 6.0).abs());
    assert!((c.delta - want).abs() < 1e-15);
}

#[test]
fn validation_errors() {
    let iv = SpectralInterval::new(1.0, 10.0).unwrap();
    assert!(matches!(certify(&[1.0], &iv), Err(CertificateError::NotNegative { .. })));
    assert!(matches!(certify(&[-2.0, -2.0], &iv), Err(CertificateError::Coincident(_))));
    assert!(matches!(certify(&[-20.0], &iv), Err(CertificateError::OutsideInterval { .. })));
    assert!(matches!(interior_extrema(&[-2.0]), Err(CertificateError::TooFewPoles(1))));
    assert!(matches!(certify_bruteforce(&[-2.0], &iv, 100), Err(CertificateError::GridTooSmall(100))));
    assert!(matches!(certify(&[f64::NAN], &iv), Err(CertificateError::NotNegative { .. })));
    assert_eq!(certify(&[], &iv).unwrap().delta, 1.0);
}

#[test]
fn bound_assembly() {
    let iv = SpectralInterval::new(10.0, 1000.0).unwrap();
    let f = ParametricFunction::pow_neg(0.5).unwrap();
    let p = [-30.0, -300.0];
    let delta = certify(&p, &iv).unwrap().delta;
    let b = error_bound(&f, &p, &iv, 2, 3.0, true).unwrap();
    assert!((b - 2.0 * 10f64.powf(-0.5) * 3.0 * delta).abs() < 1e-15 * b);
    let nb = error_bound(&f, &p, &iv, 2, 3.0, false).unwrap();
    assert!((nb / b - CROUZEIX_CONSTANT).abs() < 1e-12);
    assert_eq!(error_constant(&ParametricFunction::pow_pos(1.0).unwrap(), &iv, 2).unwrap(), 1000.0);
    assert_eq!(error_constant(&ParametricFunction::pow_neg(1.0).unwrap(), &iv, 2).unwrap(), 0.1);
    let ml = ParametricFunction::ml(1.0, 1.0, 1.0, 1.0).unwrap();
    assert!((error_constant(&ml, &iv, 4).unwrap() - 4.0 * gamma_k(4, &iv)).abs() < 1e-12);
    assert_eq!(uniform_pow_neg_bound(0.5, &iv, 2.0, true), 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extrema_interlace(seed in 0u64..100_000, k in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_poles(&mut rng, 0.1, 1e7, k);
        let e = interior_extrema(&p).unwrap();
        let mut s = p.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(e.len(), k - 1);
        for (j, x) in e.iter().enumerate() {
            prop_assert!(-s[j] < *x && *x < -s[j + 1]);
            // Local maximum of |r| on the gap.
            let v = r_eval(&s, *x).log_mag;
            prop_assert!(r_eval(&s, x * (1.0 + 1e-6)).log_mag <= v + 1e-12);
            prop_assert!(r_eval(&s, x * (1.0 - 1e-6)).log_mag <= v + 1e-12);
        }
    }

    #[test]
    fn certificate_matches_brute_force(seed in 0u64..100_000, k in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let iv = SpectralInterval::new(2.0, 2e5).unwrap();
        let p = random_poles(&mut rng, 2.0, 2e5, k);
        let a = certify(&p, &iv).unwrap().delta;
        let b = certify_bruteforce(&p, &iv, 20_000).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
        prop_assert!(a <= 1.0);
    }

    #[test]
    fn r_is_contractive_on_positive_axis(seed in 0u64..1000, k in 1usize..10, x in 0.01f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_poles(&mut rng, 1.0, 100.0, k);
        let v = r_eval(&p, x);
        let d = direct_r(&p, x);
        prop_assert!(v.abs() < 1.0);
        prop_assert!((v.value() - d).abs() <= 1e-13 * d.abs() + 1e-300);
    }
}
