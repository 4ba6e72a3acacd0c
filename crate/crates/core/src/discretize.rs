//! Desk-scale operators on the unit square/interval with homogeneous Dirichlet
//! conditions and spectral interval estimation.

use crate::linalg::{dense_sym_eig, dot, CholeskyFactor, DenseSymMatrix, LinalgError, MOrthoBasis, OperatorPair, SparseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum DiscretizeError {
    #[error("{generator} needs n >= {min}, got {n}")]
    Size { generator: &'static str, n: usize, min: usize },
    #[error("invalid spectral interval [{lo}, {hi}]: need 0 < lo < hi")]
    Interval { lo: f64, hi: f64 },
    #[error("safety factor {0} must be >= 1")]
    Safety(f64),
    #[error("unknown generator '{0}' (expected fd2d, fem1d or fem2d)")]
    UnknownGenerator(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Analytic,
    Estimated,
    Given,
}

/// Interval [λ_L, λ_U] enclosing the spectrum of L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    pub lo: f64,
    pub hi: f64,
    pub exactness: Exactness,
}

impl SpectralInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DiscretizeError> {
        Self::with_exactness(lo, hi, Exactness::Given)
    }

    pub fn with_exactness(lo: f64, hi: f64, exactness: Exactness) -> Result<Self, DiscretizeError> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(DiscretizeError::Interval { lo, hi });
        }
        Ok(Self { lo, hi, exactness })
    }

    /// The interval [19, 348475] used for mesh-independent pole experiments.
    pub fn reference() -> Self {
        Self { lo: 19.0, hi: 348_475.0, exactness: Exactness::Given }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Logarithmically spaced points covering the interval, endpoints included.
    pub fn log_grid(&self, count: usize) -> Vec<f64> {
        let count = count.max(2);
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let mut g: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
        g[0] = self.lo;
        g[count - 1] = self.hi;
        g
    }
}

/// Named operator generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Fd2d(usize),
    Fem1d(usize),
    Fem2d(usize),
}

impl Generator {
    pub fn build(&self) -> Result<OperatorPair, DiscretizeError> {
        match *self {
            Generator::Fd2d(n) => fd_laplacian_2d(n),
            Generator::Fem1d(n) => fem_p1_1d(n),
            Generator::Fem2d(n) => fem_p1_2d(n),
        }
    }

    /// Coefficients of the L²-projection of the constant function 1.
    pub fn constant_source(&self, op: &OperatorPair) -> Result<Vector, DiscretizeError> {
        let n = op.dim();
        match *self {
            Generator::Fd2d(_) => Ok(vec![1.0; n]),
            Generator::Fem1d(k) => Ok(op.solve_m(&vec![1.0 / (k + 1) as f64; n])?),
            Generator::Fem2d(k) => {
                let h = 1.0 / (k + 1) as f64;
                Ok(op.solve_m(&vec![h * h; n])?)
            }
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Fd2d(n) => write!(f, "fd2d:{n}"),
            Generator::Fem1d(n) => write!(f, "fem1d:{n}"),
            Generator::Fem2d(n) => write!(f, "fem2d:{n}"),
        }
    }
}

impl Generator {
    pub fn from_name(name: &str, n: usize) -> Result<Self, DiscretizeError> {
        match name {
            "fd2d" => Ok(Generator::Fd2d(n)),
            "fem1d" => Ok(Generator::Fem1d(n)),
            "fem2d" => Ok(Generator::Fem2d(n)),
            other => Err(DiscretizeError::UnknownGenerator(other.to_string())),
        }
    }
}

impl FromStr for Generator {
    type Err = DiscretizeError;

    /// `name:size`, e.g. `fd2d:31`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, size) = s.split_once(':').ok_or_else(|| DiscretizeError::UnknownGenerator(s.to_string()))?;
        let n = size.trim().parse().map_err(|_| DiscretizeError::UnknownGenerator(s.to_string()))?;
        Self::from_name(name.trim(), n)
    }
}

/// 5-point Laplacian on n×n interior nodes, h = 1/(n+1), M = I.
pub fn fd_laplacian_2d(n: usize) -> Result<OperatorPair, DiscretizeError> {
    if n < 2 {
        return Err(DiscretizeError::Size { generator: "fd2d", n, min: 2 });
    }
    let h = 1.0 / (n + 1) as f64;
    let s = 1.0 / (h * h);
    let idx = |i: usize, j: usize| i * n + j;
    let mut t = Vec::with_capacity(5 * n * n);
    for i in 0..n {
        for j in 0..n {
            let p = idx(i, j);
            t.push((p, p, 4.0 * s));
            if i > 0 {
                t.push((p, idx(i - 1, j), -s));
            }
            if i + 1 < n {
                t.push((p, idx(i + 1, j), -s));
            }
            if j > 0 {
                t.push((p, idx(i, j - 1), -s));
            }
            if j + 1 < n {
                t.push((p, idx(i, j + 1), -s));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n * n, &t);
    let c = PI * h / 2.0;
    let lo = 8.0 * s * c.sin().powi(2);
    let hi = 8.0 * s * c.cos().powi(2);
    Ok(OperatorPair::new(a, SparseMatrix::identity(n * n))?.with_analytic_bounds(lo, hi))
}

/// Pencil eigenvalues of the 1D P1 pair: (6/h²)(1−cos(kπh))/(2+cos(kπh)).
pub fn fem1d_eigenvalue(n: usize, k: usize) -> f64 {
    let h = 1.0 / (n + 1) as f64;
    let c = (k as f64 * PI * h).cos();
    6.0 / (h * h) * (1.0 - c) / (2.0 + c)
}

/// P1 elements on a uniform mesh with n interior nodes.
pub fn fem_p1_1d(n: usize) -> Result<OperatorPair, DiscretizeError> {
    if n < 1 {
        return Err(DiscretizeError::Size { generator: "fem1d", n, min: 1 });
    }
    let h = 1.0 / (n + 1) as f64;
    let mut ta = Vec::new();
    let mut tm = Vec::new();
    for i in 0..n {
        ta.push((i, i, 2.0 / h));
        tm.push((i, i, 4.0 * h / 6.0));
        if i + 1 < n {
            for (p, q) in [(i, i + 1), (i + 1, i)] {
                ta.push((p, q, -1.0 / h));
                tm.push((p, q, h / 6.0));
            }
        }
    }
    let op = OperatorPair::new(SparseMatrix::from_triplets(n, &ta), SparseMatrix::from_triplets(n, &tm))?;
    Ok(op.with_analytic_bounds(fem1d_eigenvalue(n, 1), fem1d_eigenvalue(n, n)))
}

/// P1 elements on the Friedrichs-Keller triangulation with n×n interior nodes,
/// h = 1/(n+1); boundary degrees of freedom eliminated.
pub fn fem_p1_2d(n: usize) -> Result<OperatorPair, DiscretizeError> {
    if n < 2 {
        return Err(DiscretizeError::Size { generator: "fem2d", n, min: 2 });
    }
    let cells = n + 1;
    let h = 1.0 / cells as f64;
    let dof = |i: usize, j: usize| -> Option<usize> {
        if i == 0 || j == 0 || i == cells || j == cells {
            None
        } else {
            Some((i - 1) * n + (j - 1))
        }
    };
    let mut ta = Vec::new();
    let mut tm = Vec::new();
    let area = 0.5 * h * h;
    for i in 0..cells {
        for j in 0..cells {
            for tri in [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]] {
                let p: Vec<(f64, f64)> = tri.iter().map(|&(a, b)| (a as f64 * h, b as f64 * h)).collect();
                // Gradients of barycentric coordinates: ∇φ_a = (y_b − y_c, x_c − x_b)/(2·area).
                let grads: Vec<(f64, f64)> = (0..3)
                    .map(|a| {
                        let b = (a + 1) % 3;
                        let c = (a + 2) % 3;
                        ((p[b].1 - p[c].1) / (2.0 * area), (p[c].0 - p[b].0) / (2.0 * area))
                    })
                    .collect();
                for a in 0..3 {
                    let Some(ra) = dof(tri[a].0, tri[a].1) else { continue };
                    for b in 0..3 {
                        let Some(rb) = dof(tri[b].0, tri[b].1) else { continue };
                        let k = area * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                        let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                        ta.push((ra, rb, k));
                        tm.push((ra, rb, m));
                    }
                }
            }
        }
    }
    let nd = n * n;
    Ok(OperatorPair::new(SparseMatrix::from_triplets(nd, &ta), SparseMatrix::from_triplets(nd, &tm))?)
}

const LANCZOS_MAX_ITER: usize = 60;

/// Extreme Ritz values of a self-adjoint map in the M-inner product.
struct LanczosOutcome {
    max: f64,
    breakdown: bool,
}

fn lanczos(
    op: &OperatorPair,
    start: &[f64],
    apply: &dyn Fn(&[f64]) -> Result<Vector, LinalgError>,
) -> Result<LanczosOutcome, LinalgError> {
    let n = op.dim();
    let steps = LANCZOS_MAX_ITER.min(n);
    let mut basis = MOrthoBasis::new();
    let mm = |x: &[f64]| op.apply_m(x);
    basis.push(start.to_vec(), mm, 0.0);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut breakdown = false;
    for j in 0..steps {
        let v = basis.cols[j].clone();
        let mut w = apply(&v)?;
        let a = dot(&basis.mcols[j], &w);
        alpha.push(a);
        if j + 1 == steps {
            break;
        }
        for _ in 0..2 {
            for (c, mc) in basis.cols.iter().zip(&basis.mcols) {
                let hcoef = dot(mc, &w);
                crate::linalg::axpy(-hcoef, c, &mut w);
            }
        }
        let b = op.m_norm(&w);
        let scale = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if b <= 1e-12 * scale {
            breakdown = true;
            break;
        }
        beta.push(b);
        let inv = 1.0 / b;
        let w: Vector = w.iter().map(|x| x * inv).collect();
        let mw = op.apply_m(&w);
        basis.cols.push(w);
        basis.mcols.push(mw);
    }
    let m = alpha.len();
    let t = DenseSymMatrix::from_fn(m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let e = dense_sym_eig(&t);
    Ok(LanczosOutcome { max: e.values[m - 1], breakdown: breakdown && m < n })
}

fn start_vector(n: usize) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..n).map(|_| rng.gen_range(0.5..1.5)).collect()
}

/// Lanczos estimates (λ_min, λ_max) of L = M⁻¹A; the lower end runs on L⁻¹.
pub fn lanczos_bounds(op: &OperatorPair) -> Result<(f64, f64), DiscretizeError> {
    let (lo, hi, _) = lanczos_bounds_from(op, &start_vector(op.dim()))?;
    Ok((lo, hi))
}

fn lanczos_bounds_from(op: &OperatorPair, start: &[f64]) -> Result<(f64, f64, bool), DiscretizeError> {
    let upper = lanczos(op, start, &|x| op.apply_l(x))?;
    let chol = CholeskyFactor::new(&op.a)?;
    let lower = lanczos(op, start, &|x| Ok(chol.solve(&op.apply_m(x))))?;
    Ok((1.0 / lower.max, upper.max, upper.breakdown || lower.breakdown))
}

/// Gershgorin upper bound for M⁻¹A and an inverse-iteration estimate of λ_min.
fn fallback_bounds(op: &OperatorPair) -> Result<(f64, f64), DiscretizeError> {
    let n = op.dim();
    let a_max = (0..n).map(|i| op.a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let m_min = (0..n)
        .map(|i| op.m.row(i).map(|(j, v)| if j == i { v } else { -v.abs() }).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let hi = if m_min > 0.0 { a_max / m_min } else { a_max / op.m.get(0, 0).abs().max(f64::MIN_POSITIVE) };
    let chol = CholeskyFactor::new(&op.a)?;
    let mut x = start_vector(n);
    for _ in 0..30 {
        x = chol.solve(&op.apply_m(&x));
        let nrm = op.m_norm(&x);
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    let lo = dot(&x, &op.apply_a(&x)) / op.m_inner(&x, &x);
    Ok((lo, hi))
}

/// Interval enclosing the spectrum, widened by `safety` unless known exactly.
pub fn spectral_bounds(op: &OperatorPair, safety: f64) -> Result<SpectralInterval, DiscretizeError> {
    if !(safety >= 1.0) {
        return Err(DiscretizeError::Safety(safety));
    }
    if let Some((lo, hi)) = op.analytic_bounds {
        return SpectralInterval::with_exactness(lo, hi, Exactness::Analytic);
    }
    let (lo, hi, breakdown) = lanczos_bounds_from(op, &start_vector(op.dim()))?;
    let (lo, hi) = if breakdown { fallback_bounds(op)? } else { (lo, hi) };
    SpectralInterval::with_exactness(lo / safety, hi * safety, Exactness::Estimated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fem1d_single_element() {
        let op = fem_p1_1d(1).unwrap();
        assert!((op.a.get(0, 0) - 4.0).abs() < 1e-15);
        assert!((op.m.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn generator_names() {
        assert_eq!("fd2d:31".parse::<Generator>().unwrap(), Generator::Fd2d(31));
        assert!("fd3d:4".parse::<Generator>().is_err());
        assert!(fd_laplacian_2d(1).is_err());
    }

    #[test]
    fn interval_validation() {
        assert!(SpectralInterval::new(2.0, 1.0).is_err());
        assert!(SpectralInterval::new(0.0, 1.0).is_err());
    }

    #[test]
    fn breakdown_triggers_fallback() {
        let op = OperatorPair::new(SparseMatrix::diagonal(&[1.0, 2.0, 3.0]), SparseMatrix::identity(3)).unwrap();
        let (_, _, breakdown) = lanczos_bounds_from(&op, &[1.0, 0.0, 0.0]).unwrap();
        assert!(breakdown);
        let (lo, hi) = fallback_bounds(&op).unwrap();
        assert!((lo - 1.0).abs() < 1e-6);
        assert!(hi >= 3.0);
    }
}
