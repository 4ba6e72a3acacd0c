//! Sparse and dense symmetric linear algebra: CSR matrices, envelope Cholesky
//! for shifted solves, Jacobi eigensolver for reduced operators, the dense
//! generalized eigenproblem oracle and Gram-Schmidt in the M-inner product.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("dense eigensolver limited to N <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("input vectors span the zero space")]
    EmptySpan,
    #[error("matrix market line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Vector = Vec<f64>;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Square sparse matrix in compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in r {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), &t)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "dense input must be square");
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Whether this is exactly the identity.
    pub fn is_identity(&self) -> bool {
        self.nnz() == self.n && (0..self.n).all(|i| self.get(i, i) == 1.0)
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        SparseMatrix::from_triplets(self.n, &t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Cholesky factor stored by rows over the lower envelope.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i))
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let start = fi.max(fj);
                let mut s = data[offset[i] + j - fi];
                let ri = offset[i] + start - fi;
                let rj = offset[j] + start - fj;
                let len = j - start;
                s -= dot(&data[ri..ri + len], &data[rj..rj + len]);
                if j < i {
                    data[offset[i] + j - fi] = s / data[offset[j] + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    data[offset[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self { first, offset, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vector {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (p, l) in (fi..i).zip(row) {
                y[p] -= l * xi;
            }
        }
        y
    }
}

/// Stiffness/mass pair defining L = M⁻¹A.
#[derive(Debug)]
pub struct OperatorPair {
    pub a: SparseMatrix,
    pub m: SparseMatrix,
    /// Exact extreme eigenvalues when the generator knows them.
    pub analytic_bounds: Option<(f64, f64)>,
    mass_identity: bool,
    mass_factor: OnceLock<Result<CholeskyFactor, String>>,
}

impl Clone for OperatorPair {
    fn clone(&self) -> Self {
        Self {
            a: self.a.clone(),
            m: self.m.clone(),
            analytic_bounds: self.analytic_bounds,
            mass_identity: self.mass_identity,
            mass_factor: OnceLock::new(),
        }
    }
}

impl OperatorPair {
    pub fn new(a: SparseMatrix, m: SparseMatrix) -> Result<Self, LinalgError> {
        if a.dim() != m.dim() {
            return Err(LinalgError::Dimension { expected: a.dim(), found: m.dim() });
        }
        let mass_identity = m.is_identity();
        Ok(Self { a, m, analytic_bounds: None, mass_identity, mass_factor: OnceLock::new() })
    }

    pub fn with_analytic_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.analytic_bounds = Some((lo, hi));
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn mass_is_identity(&self) -> bool {
        self.mass_identity
    }

    pub fn apply_a(&self, x: &[f64]) -> Vector {
        self.a.matvec(x)
    }

    pub fn apply_m(&self, x: &[f64]) -> Vector {
        if self.mass_identity {
            x.to_vec()
        } else {
            self.m.matvec(x)
        }
    }

    pub fn m_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply_m(y))
    }

    pub fn m_norm(&self, x: &[f64]) -> f64 {
        self.m_inner(x, x).max(0.0).sqrt()
    }

    /// M⁻¹x.
    pub fn solve_m(&self, x: &[f64]) -> Result<Vector, LinalgError> {
        if self.mass_identity {
            return Ok(x.to_vec());
        }
        let f = self.mass_factor.get_or_init(|| CholeskyFactor::new(&self.m).map_err(|e| e.to_string()));
        match f {
            Ok(f) => Ok(f.solve(x)),
            Err(_) => CholeskyFactor::new(&self.m).map(|f| f.solve(x)),
        }
    }

    /// L x = M⁻¹A x.
    pub fn apply_l(&self, x: &[f64]) -> Result<Vector, LinalgError> {
        self.solve_m(&self.apply_a(x))
    }

    /// Factor A − shift·M.
    pub fn factor_shifted(&self, shift: f64) -> Result<CholeskyFactor, LinalgError> {
        CholeskyFactor::new(&self.a.combine(1.0, &self.m, -shift))
    }
}

/// Solve (A − shift·M) x = rhs.
pub fn solve_shifted(op: &OperatorPair, shift: f64, rhs: &[f64]) -> Result<Vector, LinalgError> {
    if rhs.len() != op.dim() {
        return Err(LinalgError::Dimension { expected: op.dim(), found: rhs.len() });
    }
    Ok(op.factor_shifted(shift)?.solve(rhs))
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymMatrix {
    /// Build from a row-major array, symmetrizing explicitly.
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        let mut m = Self { n, data };
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self::new(n, data)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Eigenvalues in ascending order with matching eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// vectors[j] is the eigenvector for values[j].
    pub vectors: Vec<Vector>,
}

/// Cyclic Jacobi eigensolver.
pub fn dense_sym_eig(m: &DenseSymMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    SymEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order.iter().map(|&j| (0..n).map(|k| v[k * n + j]).collect()).collect(),
    }
}

pub const DENSE_EIG_MAX: usize = 4000;

/// Generalized eigenpairs A φ = λ M φ with Φᵀ M Φ = I.
pub fn sym_generalized_eig(op: &OperatorPair) -> Result<SymEigen, LinalgError> {
    use nalgebra::DMatrix;
    let n = op.dim();
    if n > DENSE_EIG_MAX {
        return Err(LinalgError::TooLarge { n, max: DENSE_EIG_MAX });
    }
    let dense = |s: &SparseMatrix| {
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for (j, v) in s.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    };
    let a = dense(&op.a);
    let (c, l_inv_t) = if op.mass_is_identity() {
        (a, None)
    } else {
        let chol = nalgebra::Cholesky::new(dense(&op.m))
            .ok_or(LinalgError::NotPositiveDefinite { row: 0, pivot: f64::NAN })?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(LinalgError::NotPositiveDefinite { row: 0, pivot: f64::NAN })?;
        let c = &l_inv * a * l_inv.transpose();
        (c, Some(l_inv.transpose()))
    };
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vecs = match l_inv_t {
        Some(t) => t * &eig.eigenvectors,
        None => eig.eigenvectors.clone(),
    };
    Ok(SymEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order.iter().map(|&j| vecs.column(j).iter().copied().collect()).collect(),
    })
}

pub const DEFLATION_TOL: f64 = 1e-10;

/// Incrementally grown M-orthonormal basis with cached M·v columns.
#[derive(Debug, Clone, Default)]
pub struct MOrthoBasis {
    pub cols: Vec<Vector>,
    pub mcols: Vec<Vector>,
}

impl MOrthoBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Orthogonalize `w` against the basis (two MGS passes) and append it unless
    /// its remaining M-norm is below `tol` times its original M-norm.
    pub fn push(&mut self, mut w: Vector, apply_m: impl Fn(&[f64]) -> Vector, tol: f64) -> bool {
        let original = dot(&w, &apply_m(&w)).max(0.0).sqrt();
        if original == 0.0 || !original.is_finite() {
            return false;
        }
        for _pass in 0..2 {
            for (v, mv) in self.cols.iter().zip(&self.mcols) {
                let h = dot(mv, &w);
                axpy(-h, v, &mut w);
            }
        }
        let mw = apply_m(&w);
        let nrm = dot(&w, &mw).max(0.0).sqrt();
        if nrm <= tol * original {
            return false;
        }
        let inv = 1.0 / nrm;
        self.cols.push(w.iter().map(|x| x * inv).collect());
        self.mcols.push(mw.iter().map(|x| x * inv).collect());
        true
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass in the M-inner product.
pub fn mgs_m_orthonormalize(
    vectors: &[Vector],
    m: &SparseMatrix,
    deflation_tol: f64,
) -> Result<(Vec<Vector>, usize), LinalgError> {
    let mut basis = MOrthoBasis::new();
    for v in vectors {
        if v.len() != m.dim() {
            return Err(LinalgError::Dimension { expected: m.dim(), found: v.len() });
        }
        basis.push(v.clone(), |x| m.matvec(x), deflation_tol);
    }
    if basis.is_empty() {
        return Err(LinalgError::EmptySpan);
    }
    let k = basis.len();
    Ok((basis.cols, k))
}

/// Write the lower triangle in Matrix Market symmetric coordinate format.
pub fn write_matrix_market(m: &SparseMatrix, mut w: impl Write) -> Result<(), LinalgError> {
    let entries: Vec<(usize, usize, f64)> =
        (0..m.dim()).flat_map(|i| m.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v))).collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.dim(), m.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> LinalgError {
    LinalgError::Parse { line, msg: msg.into() }
}

/// Read a square coordinate-format Matrix Market matrix (symmetric or general).
pub fn read_matrix_market(r: impl BufRead) -> Result<SparseMatrix, LinalgError> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix coordinate ...' header"));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field type '{}'", fields[3])));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "size line needs 'rows cols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad integer '{s}'")));
                let (r, c, nnz) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
                if r != c {
                    return Err(parse_err(lineno, "matrix must be square"));
                }
                size = Some((r, nnz));
            }
            Some((n, _)) => {
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "entry needs 'row col value'"));
                }
                let i: usize = parts[0].parse().map_err(|_| parse_err(lineno, "bad row index"))?;
                let j: usize = parts[1].parse().map_err(|_| parse_err(lineno, "bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| parse_err(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(lineno, format!("index ({i},{j}) outside {n}x{n}")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(parse_err(1, format!("declared {nnz} entries, found {stored}")));
    }
    Ok(SparseMatrix::from_triplets(n, &triplets))
}

/// Write a vector as a Matrix Market dense array.
pub fn write_vector(x: &[f64], mut w: impl Write) -> Result<(), LinalgError> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", x.len())?;
    for v in x {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

/// Read a vector: either a Matrix Market array or plain text, one value per line.
pub fn read_vector(r: impl BufRead) -> Result<Vector, LinalgError> {
    let mut out = Vec::new();
    let mut array_header = false;
    let mut expected: Option<usize> = None;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if idx == 0 && t.to_ascii_lowercase().starts_with("%%matrixmarket") {
            array_header = true;
            continue;
        }
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        if array_header && expected.is_none() {
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() != 2 || parts[1] != "1" {
                return Err(parse_err(idx + 1, "array size line must be 'n 1'"));
            }
            expected = Some(parts[0].parse().map_err(|_| parse_err(idx + 1, "bad length"))?);
            continue;
        }
        out.push(t.parse::<f64>().map_err(|_| parse_err(idx + 1, format!("bad value '{t}'")))?);
    }
    if let Some(n) = expected {
        if n != out.len() {
            return Err(LinalgError::Dimension { expected: n, found: out.len() });
        }
    }
    Ok(out)
}
