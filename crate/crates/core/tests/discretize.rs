mod common;

use common::fd2d_eigenpairs;
use fracrk::discretize::*;
use fracrk::linalg::{sym_generalized_eig, OperatorPair, SparseMatrix};
use proptest::prelude::*;
use std::f64::consts::PI;

fn smallest(op: &OperatorPair) -> f64 {
    sym_generalized_eig(op).unwrap().values[0]
}

#[test]
fn fd2d_bounds_are_exact() {
    for n in [3, 8, 15] {
        let op = fd_laplacian_2d(n).unwrap();
        let iv = spectral_bounds(&op, 1.5).unwrap();
        assert_eq!(iv.exactness, Exactness::Analytic);
        let mut ev: Vec<f64> = fd2d_eigenpairs(n).into_iter().map(|p| p.0).collect();
        ev.sort_by(f64::total_cmp);
        assert!((iv.lo - ev[0]).abs() < 1e-12 * ev[0]);
        assert!((iv.hi - ev[ev.len() - 1]).abs() < 1e-12 * iv.hi);
    }
}

#[test]
fn fd2d_matches_stencil_oracle() {
    let n = 6;
    let op = fd_laplacian_2d(n).unwrap();
    for (l, v) in fd2d_eigenpairs(n) {
        let av = op.apply_a(&v);
        let r = av.iter().zip(&v).map(|(a, x)| (a - l * x).powi(2)).sum::<f64>().sqrt();
        assert!(r < 1e-11 * l);
    }
}

#[test]
fn fd2d_31_interval() {
    let iv = spectral_bounds(&fd_laplacian_2d(31).unwrap(), 1.0).unwrap();
    assert!((iv.lo - 19.723_359_550_681_554).abs() < 1e-9);
    assert!((iv.hi - 8_172.276_640_449_319).abs() < 1e-7);
}

#[test]
fn fem1d_pencil_eigenvalues() {
    let n = 30;
    let op = fem_p1_1d(n).unwrap();
    let e = sym_generalized_eig(&op).unwrap();
    for (k, l) in e.values.iter().enumerate() {
        let want = fem1d_eigenvalue(n, k + 1);
        assert!((l - want).abs() < 1e-10 * want, "k={k}: {l} vs {want}");
    }
    // Converges from above to π².
    let l1 = fem1d_eigenvalue(200, 1);
    assert!(l1 > PI * PI && l1 - PI * PI < 1e-3);
}

#[test]
fn fem2d_smallest_eigenvalue() {
    // Frozen value for n = 4; the 2π² limit is approached from above.
    let l4 = smallest(&fem_p1_2d(4).unwrap());
    assert!((l4 - 21.722_206_674_197_004).abs() < 1e-11);
    let l8 = smallest(&fem_p1_2d(8).unwrap());
    let target = 2.0 * PI * PI;
    assert!(l8 > target && (l8 - target) / target < 0.05);
    assert!(l8 < l4);
}

#[test]
fn fem2d_constant_source_is_projection() {
    // M c = ∫ φ_i for the L² projection of 1; interior hat integrals are h².
    let g = Generator::Fem2d(5);
    let op = g.build().unwrap();
    let c = g.constant_source(&op).unwrap();
    let h = 1.0 / 6.0;
    for v in op.apply_m(&c) {
        assert!((v - h * h).abs() < 1e-14);
    }
}

#[test]
fn fem_matrices_are_symmetric() {
    for op in [fem_p1_1d(10).unwrap(), fem_p1_2d(6).unwrap()] {
        assert!(op.a.is_symmetric() && op.m.is_symmetric());
    }
}

#[test]
fn lanczos_estimates_enclose_after_safety() {
    let op = fem_p1_2d(10).unwrap();
    let e = sym_generalized_eig(&op).unwrap();
    let (lo, hi) = (e.values[0], *e.values.last().unwrap());
    let (elo, ehi) = lanczos_bounds(&op).unwrap();
    assert!((elo - lo).abs() < 1e-6 * lo, "{elo} vs {lo}");
    assert!((ehi - hi).abs() < 1e-3 * hi, "{ehi} vs {hi}");
    let iv = spectral_bounds(&op, 1.05).unwrap();
    assert_eq!(iv.exactness, Exactness::Estimated);
    assert!(iv.lo <= lo && iv.hi >= hi);
}

#[test]
fn lanczos_on_diagonal_pencil() {
    let d: Vec<f64> = (1..=50).map(|i| (i * i) as f64).collect();
    let op = OperatorPair::new(SparseMatrix::diagonal(&d), SparseMatrix::identity(50)).unwrap();
    let (lo, hi) = lanczos_bounds(&op).unwrap();
    assert!((lo - 1.0).abs() < 1e-8);
    assert!((hi - 2500.0).abs() < 1e-6 * 2500.0);
}

#[test]
fn validation_errors() {
    assert!(matches!(spectral_bounds(&fem_p1_1d(4).unwrap(), 0.9), Err(DiscretizeError::Safety(_))));
    assert!(fem_p1_2d(1).is_err());
    assert!(fem_p1_1d(0).is_err());
    assert!(SpectralInterval::new(1.0, f64::INFINITY).is_err());
    assert!(matches!("fem3d:4".parse::<Generator>(), Err(DiscretizeError::UnknownGenerator(_))));
    assert_eq!(Generator::Fem2d(7).to_string(), "fem2d:7");
}

proptest! {
    #[test]
    fn log_grid_is_monotone_and_spans(lo in 1e-3f64..1e3, ratio in 1.001f64..1e6, count in 2usize..500) {
        let iv = SpectralInterval::new(lo, lo * ratio).unwrap();
        let g = iv.log_grid(count);
        prop_assert_eq!(g.len(), count);
        prop_assert_eq!(g[0], iv.lo);
        prop_assert_eq!(g[count - 1], iv.hi);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fem1d_eigenvalues_increase(n in 2usize..200) {
        let v: Vec<f64> = (1..=n).map(|k| fem1d_eigenvalue(n, k)).collect();
        prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(v[0] > PI * PI);
    }
}
