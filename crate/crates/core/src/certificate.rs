//! The rational function r_Ξ(λ) = ∏ (λ+ξ_j)/(λ−ξ_j), its interior extrema,
//! the certificate Δ_Ξ = max_Σ |r_Ξ| and the resulting error bound.

use crate::discretize::SpectralInterval;
use crate::functions::{bound_constant, classify, FunctionError, ParametricFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertificateError {
    #[error("pole {pole} is not a negative real number")]
    NotNegative { pole: f64 },
    #[error("pole {pole} lies outside [-{hi}, -{lo}]")]
    OutsideInterval { pole: f64, lo: f64, hi: f64 },
    #[error("coincident poles at {0}")]
    Coincident(f64),
    #[error("interior extrema need at least two poles, got {0}")]
    TooFewPoles(usize),
    #[error("brute-force grid needs at least 10000 points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// Constant C of the quasi-optimality estimate for non-symmetric operators.
pub const CROUZEIX_CONSTANT: f64 = 11.08;

/// sign · exp(log_mag); sign 0 exactly when log_mag = −∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSignedValue {
    pub log_mag: f64,
    pub sign: i8,
}

impl LogSignedValue {
    pub fn zero() -> Self {
        Self { log_mag: f64::NEG_INFINITY, sign: 0 }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    pub fn abs(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.log_mag.exp()
        }
    }
}

/// r_Ξ(λ) in log-signed form.
pub fn r_eval(poles: &[f64], lambda: f64) -> LogSignedValue {
    let mut log_mag = 0.0;
    let mut sign = 1i8;
    for &xi in poles {
        let num = lambda + xi;
        if num == 0.0 {
            return LogSignedValue::zero();
        }
        if num < 0.0 {
            sign = -sign;
        }
        log_mag += num.abs().ln() - (lambda - xi).ln();
    }
    LogSignedValue { log_mag, sign }
}

/// r_Ξ(λ) with the poles at the listed positions left out.
fn r_leave_out(poles: &[f64], lambda: f64, skip: &[usize]) -> f64 {
    let mut log_mag = 0.0;
    let mut sign = 1.0;
    for (i, &xi) in poles.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        let num = lambda + xi;
        if num == 0.0 {
            return 0.0;
        }
        if num < 0.0 {
            sign = -sign;
        }
        log_mag += num.abs().ln() - (lambda - xi).ln();
    }
    sign * log_mag.exp()
}

/// (r, r′, r″) from the leave-one-out representation
/// r′ = −2 Σ ξ_j/(λ−ξ_j)² r_{Ξ_j}, r″ = −2 Σ ξ_j/(λ−ξ_j)² (r′_{Ξ_j} − 2 r_{Ξ_j}/(λ−ξ_j)).
pub fn r_derivatives(poles: &[f64], lambda: f64) -> (f64, f64, f64) {
    let r = r_eval(poles, lambda).value();
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (j, &xj) in poles.iter().enumerate() {
        let wj = -2.0 * xj / ((lambda - xj) * (lambda - xj));
        let rj = r_leave_out(poles, lambda, &[j]);
        let mut rj_prime = 0.0;
        for (i, &xi) in poles.iter().enumerate() {
            if i != j {
                let wi = -2.0 * xi / ((lambda - xi) * (lambda - xi));
                rj_prime += wi * r_leave_out(poles, lambda, &[i, j]);
            }
        }
        d1 += wj * rj;
        d2 += wj * (rj_prime - 2.0 / (lambda - xj) * rj);
    }
    (r, d1, d2)
}

/// g = r′/r and g′, both free of over/underflow.
fn log_derivatives(poles: &[f64], lambda: f64) -> (f64, f64) {
    let l2 = lambda * lambda;
    let mut g = 0.0;
    let mut gp = 0.0;
    for &xi in poles {
        let d = l2 - xi * xi;
        g += -2.0 * xi / d;
        gp += 4.0 * xi * lambda / (d * d);
    }
    (g, gp)
}

fn sorted_descending(poles: &[f64]) -> Vec<f64> {
    let mut p = poles.to_vec();
    p.sort_by(|a, b| b.total_cmp(a));
    p
}

fn validate(poles: &[f64]) -> Result<Vec<f64>, CertificateError> {
    for &p in poles {
        if !(p < 0.0) || !p.is_finite() {
            return Err(CertificateError::NotNegative { pole: p });
        }
    }
    let p = sorted_descending(poles);
    for w in p.windows(2) {
        if w[0] == w[1] {
            return Err(CertificateError::Coincident(w[0]));
        }
    }
    Ok(p)
}

const SCAN_POINTS: usize = 20;
const NEWTON_ITERS: usize = 80;
const BISECTIONS: usize = 200;

/// Zero of r′ inside (a, b) between consecutive sorted poles.
fn bracket_extremum(poles: &[f64], a: f64, b: f64) -> f64 {
    // 20-point scan, equispaced in ln λ, tightening the sign bracket of r′/r.
    let (la, lb) = (a.ln(), b.ln());
    let mut lo = a;
    let mut hi = b;
    let mut best = None::<(f64, f64)>;
    for i in 1..=SCAN_POINTS {
        let x = (la + (lb - la) * i as f64 / (SCAN_POINTS + 1) as f64).exp();
        let v = r_eval(poles, x).log_mag;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((x, v));
        }
        let (g, _) = log_derivatives(poles, x);
        if g > 0.0 {
            lo = lo.max(x);
        } else if g < 0.0 {
            hi = hi.min(x);
        } else {
            return x;
        }
    }
    let mut x = best.map(|b| b.0).unwrap_or(0.5 * (a + b));
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    let tol = 1e-13 * b;
    for _ in 0..NEWTON_ITERS {
        let (g, gp) = log_derivatives(poles, x);
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol {
            return 0.5 * (lo + hi);
        }
        let step = g / (gp + g * g);
        let mut next = x - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
    }
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (g, _) = log_derivatives(poles, mid);
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The k−1 zeros of r′, the j-th inside (−ξ_j, −ξ_{j+1}) for ξ_k < … < ξ_1.
pub fn interior_extrema(poles: &[f64]) -> Result<Vec<f64>, CertificateError> {
    let p = validate(poles)?;
    if p.len() < 2 {
        return Err(CertificateError::TooFewPoles(p.len()));
    }
    Ok(p.windows(2).map(|w| bracket_extremum(&p, -w[0], -w[1])).collect())
}

/// Δ_Ξ with the locations and values of the interior extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub delta: f64,
    pub extrema: Vec<(f64, f64)>,
    pub interval: SpectralInterval,
}

fn check_inside(poles: &[f64], interval: &SpectralInterval) -> Result<(), CertificateError> {
    let slack = 1e-12;
    for &p in poles {
        if -p < interval.lo * (1.0 - slack) || -p > interval.hi * (1.0 + slack) {
            return Err(CertificateError::OutsideInterval { pole: p, lo: interval.lo, hi: interval.hi });
        }
    }
    Ok(())
}

/// Δ_Ξ = max |r_Ξ| over {λ_L, λ_U} and the interior extrema.
pub fn certify(poles: &[f64], interval: &SpectralInterval) -> Result<Certificate, CertificateError> {
    let p = validate(poles)?;
    check_inside(&p, interval)?;
    if p.is_empty() {
        return Ok(Certificate { delta: 1.0, extrema: Vec::new(), interval: *interval });
    }
    let mut delta = r_eval(&p, interval.lo).abs().max(r_eval(&p, interval.hi).abs());
    let mut extrema = Vec::new();
    if p.len() >= 2 {
        for x in interior_extrema(&p)? {
            let v = r_eval(&p, x).abs();
            delta = delta.max(v);
            extrema.push((x, v));
        }
    }
    Ok(Certificate { delta, extrema, interval: *interval })
}

/// max |r_Ξ| over a log-spaced grid, each grid-local maximum refined by golden section.
pub fn certify_bruteforce(
    poles: &[f64],
    interval: &SpectralInterval,
    gridpoints: usize,
) -> Result<f64, CertificateError> {
    if gridpoints < 10_000 {
        return Err(CertificateError::GridTooSmall(gridpoints));
    }
    let p = validate(poles)?;
    if p.is_empty() {
        return Ok(1.0);
    }
    let grid = interval.log_grid(gridpoints);
    let vals: Vec<f64> = grid.iter().map(|&x| r_eval(&p, x).log_mag).collect();
    let mut best = vals[0].max(vals[vals.len() - 1]);
    let f = |u: f64| r_eval(&p, u.exp()).log_mag;
    for i in 1..grid.len() - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            best = best.max(golden_max(&f, grid[i - 1].ln(), grid[i + 1].ln()));
        }
    }
    Ok(best.exp())
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

/// Constant c in ‖f(L)b − u‖ ≤ 2C c ‖b‖ Δ_Ξ.
///
/// λ^s at s = 1 and λ^{−s} at s = 1 sit on the boundary of the CB and CS
/// families; their constants are the limits f(λ_U) and f(λ_L) of those
/// branches (for λ^{−1} this is the resolvent estimate at ζ = 0).
pub fn error_constant(f: &ParametricFunction, interval: &SpectralInterval, k: usize) -> Result<f64, CertificateError> {
    match *f {
        ParametricFunction::PowPos { s: 1.0 } => Ok(f.evaluate(interval.hi)?),
        ParametricFunction::PowNeg { s: 1.0 } => Ok(f.evaluate(interval.lo)?),
        _ => Ok(bound_constant(f, classify(f), interval, k)?),
    }
}

/// 2·C·c_k·‖b‖·Δ_Ξ with C = 1 for symmetric operators.
pub fn error_bound(
    f: &ParametricFunction,
    poles: &[f64],
    interval: &SpectralInterval,
    k: usize,
    norm_b: f64,
    symmetric: bool,
) -> Result<f64, CertificateError> {
    let delta = certify(poles, interval)?.delta;
    error_bound_from_delta(f, delta, interval, k, norm_b, symmetric)
}

pub fn error_bound_from_delta(
    f: &ParametricFunction,
    delta: f64,
    interval: &SpectralInterval,
    k: usize,
    norm_b: f64,
    symmetric: bool,
) -> Result<f64, CertificateError> {
    let c = if symmetric { 1.0 } else { CROUZEIX_CONSTANT };
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * c * error_constant(f, interval, k)? * norm_b * delta)
}

/// The s-independent bound 2C max{1, 1/λ_L} ‖b‖ Δ_Ξ for the family λ^{−s}, s ∈ [0, 1].
pub fn uniform_pow_neg_bound(delta: f64, interval: &SpectralInterval, norm_b: f64, symmetric: bool) -> f64 {
    let c = if symmetric { 1.0 } else { CROUZEIX_CONSTANT };
    2.0 * c * 1f64.max(1.0 / interval.lo) * norm_b * delta
}
