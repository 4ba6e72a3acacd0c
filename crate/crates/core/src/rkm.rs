//! Rational Krylov spaces Q = span{b, (A−ξ_jM)⁻¹Mb}, Rayleigh-Ritz extraction
//! u = V f(VᵀAV) VᵀMb, the dense spectral oracle and the FODE solution formula.

use crate::functions::{FunctionError, ParametricFunction};
use crate::linalg::{
    axpy, dense_sym_eig, dot, sym_generalized_eig, DenseSymMatrix, LinalgError, MOrthoBasis, OperatorPair, SymEigen,
    Vector, DEFLATION_TOL,
};
use crate::poles::PoleSet;
use crate::specfun::gamma_fn;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum RkmError {
    #[error("right-hand side vector is zero")]
    ZeroVector,
    #[error("vector length {found} does not match operator dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("pole {0} must be negative and distinct from the poles already used")]
    InvalidPole(f64),
    #[error("basis was built from a different vector b")]
    ForeignVector,
    #[error("function value at Ritz value {at} is not finite")]
    NonFinite { at: f64 },
    #[error("parameter {name} = {value} outside {domain}")]
    Parameter { name: &'static str, value: f64, domain: &'static str },
    #[error("forcing degree {0} exceeds 6")]
    Degree(usize),
    #[error("requested {requested} poles but the pole set has {available}")]
    PoleCount { requested: usize, available: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Specfun(#[from] crate::specfun::SpecfunError),
}

/// M-orthonormal basis of the rational Krylov space together with A·V.
#[derive(Debug, Clone)]
pub struct KrylovBasis<'a> {
    op: &'a OperatorPair,
    b: Vector,
    basis: MOrthoBasis,
    acols: Vec<Vector>,
    poles: Vec<f64>,
    deflated: Vec<f64>,
    coeffs: Vec<f64>,
}

impl<'a> KrylovBasis<'a> {
    /// V = [b/‖b‖_M].
    pub fn new(op: &'a OperatorPair, b: &[f64]) -> Result<Self, RkmError> {
        if b.len() != op.dim() {
            return Err(RkmError::Dimension { expected: op.dim(), found: b.len() });
        }
        let mut basis = MOrthoBasis::new();
        if !basis.push(b.to_vec(), |x| op.apply_m(x), 0.0) {
            return Err(RkmError::ZeroVector);
        }
        let acols = vec![op.apply_a(&basis.cols[0])];
        let coeffs = vec![dot(&basis.mcols[0], b)];
        Ok(Self { op, b: b.to_vec(), basis, acols, poles: Vec::new(), deflated: Vec::new(), coeffs })
    }

    pub fn operator(&self) -> &'a OperatorPair {
        self.op
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    fn check_pole(&self, pole: f64) -> Result<(), RkmError> {
        if !(pole < 0.0) || !pole.is_finite() || self.poles.contains(&pole) || self.deflated.contains(&pole) {
            return Err(RkmError::InvalidPole(pole));
        }
        Ok(())
    }

    fn push_direction(&mut self, pole: f64, x: Vector) -> bool {
        let op = self.op;
        if self.basis.push(x, |v| op.apply_m(v), DEFLATION_TOL) {
            let v = self.basis.cols.last().unwrap();
            self.acols.push(op.apply_a(v));
            self.coeffs.push(dot(self.basis.mcols.last().unwrap(), &self.b));
            self.poles.push(pole);
            true
        } else {
            self.deflated.push(pole);
            false
        }
    }

    /// Append (A − ξM)⁻¹Mb; returns false when the direction deflates.
    pub fn extend(&mut self, pole: f64) -> Result<bool, RkmError> {
        self.check_pole(pole)?;
        let x = self.op.factor_shifted(pole)?.solve(&self.op.apply_m(&self.b));
        Ok(self.push_direction(pole, x))
    }

    /// Append several poles; the shifted solves run concurrently.
    pub fn extend_all(&mut self, poles: &[f64]) -> Result<(), RkmError> {
        for (i, &p) in poles.iter().enumerate() {
            self.check_pole(p)?;
            if poles[..i].contains(&p) {
                return Err(RkmError::InvalidPole(p));
            }
        }
        let mb = self.op.apply_m(&self.b);
        let op = self.op;
        let dirs: Vec<Result<Vector, LinalgError>> =
            poles.par_iter().map(|&p| op.factor_shifted(p).map(|f| f.solve(&mb))).collect();
        for (&p, d) in poles.iter().zip(dirs) {
            self.push_direction(p, d?);
        }
        Ok(())
    }

    /// Number of basis columns k+1 (after deflation).
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Poles that contributed a column, in insertion order.
    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    /// Poles whose direction was already contained in the space.
    pub fn deflated(&self) -> &[f64] {
        &self.deflated
    }

    pub fn columns(&self) -> &[Vector] {
        &self.basis.cols
    }

    /// A·V, column by column.
    pub fn a_columns(&self) -> &[Vector] {
        &self.acols
    }

    /// M·V, column by column.
    pub fn m_columns(&self) -> &[Vector] {
        &self.basis.mcols
    }

    /// VᵀAV restricted to the first m columns.
    pub fn reduced_prefix(&self, m: usize) -> DenseSymMatrix {
        DenseSymMatrix::from_fn(m, |i, j| dot(&self.basis.cols[i], &self.acols[j]))
    }

    pub fn reduced(&self) -> DenseSymMatrix {
        self.reduced_prefix(self.dim())
    }

    pub fn ritz_values(&self) -> Vec<f64> {
        dense_sym_eig(&self.reduced()).values
    }

    /// V f(L_{m}) VᵀMb using the first m columns.
    pub fn apply_fn_prefix(&self, m: usize, f: impl Fn(f64) -> Result<f64, RkmError>) -> Result<Vector, RkmError> {
        let m = m.min(self.dim());
        let eig = dense_sym_eig(&self.reduced_prefix(m));
        let mut y = vec![0.0; m];
        for (theta, phi) in eig.values.iter().zip(&eig.vectors) {
            let fv = f(*theta)?;
            if !fv.is_finite() {
                return Err(RkmError::NonFinite { at: *theta });
            }
            let w = fv * dot(phi, &self.coeffs[..m]);
            axpy(w, phi, &mut y);
        }
        let mut u = vec![0.0; self.op.dim()];
        for (c, v) in y.iter().zip(&self.basis.cols) {
            axpy(*c, v, &mut u);
        }
        Ok(u)
    }

    pub fn apply_fn(&self, f: impl Fn(f64) -> Result<f64, RkmError>) -> Result<Vector, RkmError> {
        self.apply_fn_prefix(self.dim(), f)
    }

    pub fn apply_parametric(&self, f: &ParametricFunction) -> Result<Vector, RkmError> {
        self.apply_fn(|x| Ok(f.evaluate(x)?))
    }

    /// Approximation from the space spanned by b and the first j poles.
    pub fn apply_parametric_poles(&self, f: &ParametricFunction, j: usize) -> Result<Vector, RkmError> {
        self.apply_fn_prefix(1 + j.min(self.poles.len()), |x| Ok(f.evaluate(x)?))
    }
}

/// Basis of span{b} ∪ {(A − ξ_jM)⁻¹Mb}.
pub fn build_basis<'a>(op: &'a OperatorPair, b: &[f64], poles: &PoleSet) -> Result<KrylovBasis<'a>, RkmError> {
    let mut basis = KrylovBasis::new(op, b)?;
    basis.extend_all(poles.generation_order())?;
    Ok(basis)
}

/// u_{k+1} = V f(L_{k+1}) VᵀMb.
pub fn apply_f(basis: &KrylovBasis<'_>, f: &ParametricFunction, b: &[f64]) -> Result<Vector, RkmError> {
    if b != basis.rhs() {
        return Err(RkmError::ForeignVector);
    }
    basis.apply_parametric(f)
}

pub fn ritz_values(basis: &KrylovBasis<'_>) -> Vec<f64> {
    basis.ritz_values()
}

/// Dense generalized eigendecomposition used as the exact reference.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    eig: SymEigen,
    mphi: Vec<Vector>,
}

impl SpectralOracle {
    pub fn new(op: &OperatorPair) -> Result<Self, RkmError> {
        let eig = sym_generalized_eig(op)?;
        let mphi = eig.vectors.iter().map(|v| op.apply_m(v)).collect();
        Ok(Self { eig, mphi })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eigenvectors(&self) -> &[Vector] {
        &self.eig.vectors
    }

    /// Φ diag(f(λ_j)) Φᵀ M b.
    pub fn apply_fn(&self, b: &[f64], f: impl Fn(f64) -> Result<f64, RkmError>) -> Result<Vector, RkmError> {
        if b.len() != self.eig.values.len() {
            return Err(RkmError::Dimension { expected: self.eig.values.len(), found: b.len() });
        }
        let mut u = vec![0.0; b.len()];
        for ((lam, phi), mphi) in self.eig.values.iter().zip(&self.eig.vectors).zip(&self.mphi) {
            let c = dot(mphi, b);
            if c == 0.0 {
                continue;
            }
            let fv = f(*lam)?;
            if !fv.is_finite() {
                return Err(RkmError::NonFinite { at: *lam });
            }
            axpy(fv * c, phi, &mut u);
        }
        Ok(u)
    }

    pub fn apply(&self, f: &ParametricFunction, b: &[f64]) -> Result<Vector, RkmError> {
        self.apply_fn(b, |x| Ok(f.evaluate(x)?))
    }
}

/// f(L)b from the generalized eigendecomposition.
pub fn exact_apply(op: &OperatorPair, f: &ParametricFunction, b: &[f64]) -> Result<Vector, RkmError> {
    SpectralOracle::new(op)?.apply(f, b)
}

pub fn m_distance(op: &OperatorPair, x: &[f64], y: &[f64]) -> f64 {
    let d: Vector = x.iter().zip(y).map(|(a, b)| a - b).collect();
    op.m_norm(&d)
}

/// E(k, Ξ, τ) = ‖f(L)b − u_{k+1}‖_M using the first k poles of Ξ.
pub fn rkm_error(
    op: &OperatorPair,
    f: &ParametricFunction,
    poles: &PoleSet,
    b: &[f64],
    k: usize,
) -> Result<f64, RkmError> {
    let oracle = SpectralOracle::new(op)?;
    rkm_error_with(&oracle, op, f, poles, b, k)
}

pub fn rkm_error_with(
    oracle: &SpectralOracle,
    op: &OperatorPair,
    f: &ParametricFunction,
    poles: &PoleSet,
    b: &[f64],
    k: usize,
) -> Result<f64, RkmError> {
    if k > poles.len() {
        return Err(RkmError::PoleCount { requested: k, available: poles.len() });
    }
    let mut basis = KrylovBasis::new(op, b)?;
    basis.extend_all(&poles.generation_order()[..k])?;
    let u = basis.apply_parametric(f)?;
    Ok(m_distance(op, &oracle.apply(f, b)?, &u))
}

/// How the Mittag-Leffler terms of the FODE formula are applied.
#[derive(Debug, Clone, Copy)]
pub enum FodeMode<'a> {
    Oracle(&'a SpectralOracle),
    Rkm(&'a PoleSet),
}

pub const MAX_FORCING_DEGREE: usize = 6;

/// u(t) = E_{α,1}(−t^α L^s) u₀ + Σ_k Γ(k+1) t^{α+k} E_{α,α+k+1}(−t^α L^s) v_k
/// for the forcing Σ_k v_k t^k.
pub fn solve_fode(
    op: &OperatorPair,
    u0: &[f64],
    forcing: &[(usize, Vector)],
    alpha: f64,
    s: f64,
    t: f64,
    mode: FodeMode<'_>,
) -> Result<Vector, RkmError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RkmError::Parameter { name: "alpha", value: alpha, domain: "(0, 1]" });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(RkmError::Parameter { name: "s", value: s, domain: "[0, 1]" });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(RkmError::Parameter { name: "t", value: t, domain: "t >= 0" });
    }
    if u0.len() != op.dim() {
        return Err(RkmError::Dimension { expected: op.dim(), found: u0.len() });
    }
    for (deg, v) in forcing {
        if *deg > MAX_FORCING_DEGREE {
            return Err(RkmError::Degree(*deg));
        }
        if v.len() != op.dim() {
            return Err(RkmError::Dimension { expected: op.dim(), found: v.len() });
        }
    }
    if t == 0.0 {
        return Ok(u0.to_vec());
    }
    let apply = |f: &ParametricFunction, v: &[f64]| -> Result<Vector, RkmError> {
        match mode {
            FodeMode::Oracle(o) => o.apply(f, v),
            FodeMode::Rkm(poles) => {
                if v.iter().all(|x| *x == 0.0) {
                    return Ok(vec![0.0; v.len()]);
                }
                build_basis(op, v, poles)?.apply_parametric(f)
            }
        }
    };
    let mut u = if u0.iter().all(|x| *x == 0.0) {
        vec![0.0; op.dim()]
    } else {
        apply(&ParametricFunction::ml(alpha, 1.0, t, s)?, u0)?
    };
    for (deg, v) in forcing {
        let k = *deg as f64;
        let f = ParametricFunction::ml(alpha, alpha + k + 1.0, t, s)?;
        let w = apply(&f, v)?;
        axpy(gamma_fn(k + 1.0)? * t.powf(alpha + k), &w, &mut u);
    }
    Ok(u)
}
