//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fracrk::linalg::OperatorPair;
use rand::Rng;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite 20-point Gauss-Legendre on equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

/// e^{x²} erfc(x) = (2/√π) ∫₀^∞ e^{−u² − 2xu} du.
pub fn erfcx_quadrature(x: f64) -> f64 {
    2.0 / PI.sqrt() * integrate(|u| (-u * u - 2.0 * x * u).exp(), 0.0, 12.0, 600)
}

/// K(k) = ∫₀^{π/2} dθ / √(1 − k² sin²θ).
pub fn ellip_k_quadrature(k: f64) -> f64 {
    integrate(|t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 400)
}

/// Eigenpairs of the 5-point Laplacian on the n×n interior grid, closed form.
pub fn fd2d_eigenpairs(n: usize) -> Vec<(f64, Vec<f64>)> {
    let h = 1.0 / (n + 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for p in 1..=n {
        for q in 1..=n {
            let lam = 4.0 / (h * h) * ((p as f64 * PI * h / 2.0).sin().powi(2) + (q as f64 * PI * h / 2.0).sin().powi(2));
            let mut v = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    v[i * n + j] = (p as f64 * PI * (i + 1) as f64 * h).sin() * (q as f64 * PI * (j + 1) as f64 * h).sin();
                }
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            out.push((lam, v));
        }
    }
    out
}

/// Σ_j g(λ_j) ⟨φ_j, b⟩ φ_j for an orthonormal eigenbasis.
pub fn apply_spectral(pairs: &[(f64, Vec<f64>)], b: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut u = vec![0.0; b.len()];
    for (lam, v) in pairs {
        let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * g(*lam);
        u.iter_mut().zip(v).for_each(|(ui, vi)| *ui += c * vi);
    }
    u
}

/// k distinct negative poles, log-uniform in [−hi, −lo].
pub fn random_poles(rng: &mut impl Rng, lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let mut p: Vec<f64> = Vec::with_capacity(k);
    while p.len() < k {
        let x = -(lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp();
        if !p.contains(&x) {
            p.push(x);
        }
    }
    p
}

pub fn normalized(op: &OperatorPair, b: &[f64]) -> Vec<f64> {
    let n = op.m_norm(b);
    b.iter().map(|x| x / n).collect()
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
