//! Pole selection: Zolotarev (Z), EDS (E), weak greedy (G), spectral adaptive (S),
//! automatic (A) and fully automatic (F).

use crate::certificate::{interior_extrema, r_eval, CertificateError};
use crate::discretize::SpectralInterval;
use crate::linalg::{dense_sym_eig, dot, DenseSymMatrix, LinalgError, MOrthoBasis, OperatorPair, Vector, DEFLATION_TOL};
use crate::rkm::{KrylovBasis, RkmError};
use crate::specfun::{carlson_rf, ellip_k_complementary, jacobi_sncndn_complementary, SpecfunError};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum PolesError {
    #[error("pole count k = {k} below the minimum {min}")]
    Count { k: usize, min: usize },
    #[error("degenerate interval [{0}, {0}] gives coincident poles for k > 1")]
    Degenerate(f64),
    #[error("pole {0} is not a negative finite number")]
    NotNegative(f64),
    #[error("pole {0} occurs twice")]
    Coincident(f64),
    #[error("span{{b, Lb}} is one-dimensional; b is an eigenvector")]
    Breakdown,
    #[error("root finder for g(t) = {target} did not converge")]
    Root { target: f64 },
    #[error("training grid has {size} points, at least {required} required")]
    TrainingGrid { size: usize, required: usize },
    #[error("unknown strategy '{0}' (expected one of Z, E, G, S, A, F)")]
    UnknownStrategy(String),
    #[error("strategy {0} needs an operator and a vector b")]
    NeedsOperator(Strategy),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Rkm(#[from] RkmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Zolotarev,
    Eds,
    WeakGreedy,
    Spectral,
    Auto,
    FullyAuto,
    Custom,
}

impl Strategy {
    pub const ALL: [Strategy; 6] =
        [Self::Zolotarev, Self::Eds, Self::WeakGreedy, Self::Spectral, Self::Auto, Self::FullyAuto];

    pub fn letter(&self) -> char {
        match self {
            Self::Zolotarev => 'Z',
            Self::Eds => 'E',
            Self::WeakGreedy => 'G',
            Self::Spectral => 'S',
            Self::Auto => 'A',
            Self::FullyAuto => 'F',
            Self::Custom => 'C',
        }
    }

    pub fn needs_operator(&self) -> bool {
        matches!(self, Self::WeakGreedy | Self::Spectral | Self::FullyAuto)
    }

    /// Whether pole sets of this strategy for k and k+1 share the first k poles.
    pub fn is_nested(&self) -> bool {
        !matches!(self, Self::Zolotarev | Self::Custom)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Strategy {
    type Err = PolesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "Z" | "ZOLOTAREV" => Self::Zolotarev,
            "E" | "EDS" => Self::Eds,
            "G" | "GREEDY" => Self::WeakGreedy,
            "S" | "SPECTRAL" => Self::Spectral,
            "A" | "AUTO" => Self::Auto,
            "F" | "FULLYAUTO" => Self::FullyAuto,
            "C" | "CUSTOM" => Self::Custom,
            _ => return Err(PolesError::UnknownStrategy(s.to_string())),
        })
    }
}

/// Negative poles, kept both sorted (ξ_k < … < ξ_1) and in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    sorted: Vec<f64>,
    order: Vec<f64>,
    strategy: Strategy,
    interval: Option<SpectralInterval>,
}

impl PoleSet {
    /// Poles in the order they were generated; nested strategies rely on it.
    pub fn new(order: Vec<f64>, strategy: Strategy, interval: Option<SpectralInterval>) -> Result<Self, PolesError> {
        for &p in &order {
            if !(p < 0.0) || !p.is_finite() {
                return Err(PolesError::NotNegative(p));
            }
        }
        let mut sorted = order.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(PolesError::Coincident(w[0]));
            }
        }
        Ok(Self { sorted, order, strategy, interval })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Strictly decreasing: ξ_1 closest to zero first.
    pub fn poles(&self) -> &[f64] {
        &self.sorted
    }

    pub fn generation_order(&self) -> &[f64] {
        &self.order
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn interval(&self) -> Option<&SpectralInterval> {
        self.interval.as_ref()
    }

    /// The first k generated poles.
    pub fn prefix(&self, k: usize) -> PoleSet {
        let order = self.order[..k.min(self.order.len())].to_vec();
        let mut sorted = order.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        PoleSet { sorted, order, strategy: self.strategy, interval: self.interval }
    }

    /// One pole per line in generation order, `#` header with the strategy.
    pub fn write(&self, mut w: impl Write) -> Result<(), PolesError> {
        writeln!(w, "# fracrk-poles v1 strategy={} k={}", self.strategy, self.len())?;
        if let Some(iv) = &self.interval {
            writeln!(w, "# interval={:.17e},{:.17e}", iv.lo, iv.hi)?;
        }
        for p in &self.order {
            writeln!(w, "{p:.17e}")?;
        }
        Ok(())
    }

    /// Reads the format of [`PoleSet::write`] or a bare list of numbers.
    pub fn read(r: impl BufRead) -> Result<PoleSet, PolesError> {
        let mut order = Vec::new();
        let mut strategy = Strategy::Custom;
        let mut interval = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if let Some(c) = t.strip_prefix('#') {
                for item in c.split_whitespace() {
                    if let Some(v) = item.strip_prefix("strategy=") {
                        strategy = v.parse()?;
                    } else if let Some(v) = item.strip_prefix("interval=") {
                        let parts: Vec<f64> = v
                            .split(',')
                            .map(|x| x.parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|e| PolesError::Parse { line: i + 1, msg: e.to_string() })?;
                        if parts.len() != 2 {
                            return Err(PolesError::Parse { line: i + 1, msg: "interval needs lo,hi".into() });
                        }
                        interval = Some(
                            SpectralInterval::new(parts[0], parts[1])
                                .map_err(|e| PolesError::Parse { line: i + 1, msg: e.to_string() })?,
                        );
                    }
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            let v: f64 = t.parse().map_err(|_| PolesError::Parse { line: i + 1, msg: format!("not a number: '{t}'") })?;
            order.push(v);
        }
        PoleSet::new(order, strategy, interval)
    }
}

fn require_k(k: usize, min: usize) -> Result<(), PolesError> {
    if k < min {
        Err(PolesError::Count { k, min })
    } else {
        Ok(())
    }
}

/// Zolotarev nodes Z_j = b·dn(((2(k−j)+1)/(2k))·K(δ′), δ′), j = 1..k, for [a, b].
pub fn zolotarev_nodes(a: f64, b: f64, k: usize) -> Result<Vec<f64>, PolesError> {
    require_k(k, 1)?;
    if a == b && a > 0.0 {
        if k == 1 {
            return Ok(vec![a]);
        }
        return Err(PolesError::Degenerate(a));
    }
    let delta = a / b;
    let big_k = ellip_k_complementary(delta)?;
    (1..=k)
        .map(|j| {
            let u = (2 * (k - j) + 1) as f64 / (2 * k) as f64 * big_k;
            Ok(b * jacobi_sncndn_complementary(u, delta)?.2)
        })
        .collect()
}

pub fn zolotarev(interval: &SpectralInterval, k: usize) -> Result<PoleSet, PolesError> {
    let nodes = zolotarev_nodes(interval.lo, interval.hi, k)?;
    PoleSet::new(nodes.into_iter().map(|z| -z).collect(), Strategy::Zolotarev, Some(*interval))
}

/// C* = πK(μ₁)/(4K(μ)), μ = ((1−√δ)/(1+√δ))², μ₁ = √(1−μ²).
pub fn zolotarev_rate(interval: &SpectralInterval) -> Result<f64, PolesError> {
    let sd = (interval.lo / interval.hi).sqrt();
    let mu = ((1.0 - sd) / (1.0 + sd)).powi(2);
    // 1 − μ = 4√δ/(1+√δ)² without cancellation.
    let one_minus_mu = 4.0 * sd / (1.0 + sd).powi(2);
    let mu1 = (one_minus_mu * (1.0 + mu)).sqrt();
    let k_mu = ellip_k_complementary(mu1)?;
    let k_mu1 = if mu > 0.0 { ellip_k_complementary(mu)? } else { f64::INFINITY };
    Ok(PI * k_mu1 / (4.0 * k_mu))
}

/// Small-δ form π²/(2 ln(4/δ)).
pub fn zolotarev_rate_asymptotic(interval: &SpectralInterval) -> f64 {
    PI * PI / (2.0 * (4.0 * interval.hi / interval.lo).ln())
}

/// s_j = j√2 − ⌊j√2⌋.
pub fn eds_sequence(k: usize) -> Vec<f64> {
    (1..=k).map(|j| (j as f64 * SQRT_2).fract()).collect()
}

/// g(t) = (1/(2M))∫_{δ²}^t dy/√((y−δ²)y(1−y)) with M = K(δ′), for t ∈ [δ², 1].
pub fn eds_g(t: f64, delta: f64) -> Result<f64, PolesError> {
    let d2 = delta * delta;
    let t = t.clamp(d2, 1.0);
    let m = ellip_k_complementary(delta)?;
    // g(t) = 1 − F(ψ, δ′)/M with sin²ψ = (1−t)/(1−δ²); 1 − δ′²sin²ψ = t.
    let sin2 = ((1.0 - t) / (1.0 - d2)).clamp(0.0, 1.0);
    let cos2 = ((t - d2) / (1.0 - d2)).clamp(0.0, 1.0);
    let f = sin2.sqrt() * carlson_rf(cos2, t, 1.0);
    Ok(1.0 - f / m)
}

fn eds_root(target: f64, delta: f64, m: f64) -> Result<f64, PolesError> {
    let d2 = delta * delta;
    let (mut lo, mut hi) = (d2, 1.0);
    let mut t = d2 + target * (1.0 - d2);
    for _ in 0..200 {
        let r = eds_g(t, delta)? - target;
        if r.abs() <= 1e-15 {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if hi - lo <= 1e-16 * hi {
            return Ok(0.5 * (lo + hi));
        }
        let gp = 1.0 / (2.0 * m * ((t - d2) * t * (1.0 - t)).sqrt());
        let mut next = t - r / gp;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        t = next;
    }
    Err(PolesError::Root { target })
}

/// ξ_j = −λ_U·√t_j where g(t_j) = s_j; eds(k) is a prefix of eds(k+1).
pub fn eds(interval: &SpectralInterval, k: usize) -> Result<PoleSet, PolesError> {
    require_k(k, 1)?;
    let delta = interval.lo / interval.hi;
    let m = ellip_k_complementary(delta)?;
    let poles = eds_sequence(k)
        .into_iter()
        .map(|s| Ok(-interval.hi * eds_root(s, delta, m)?.sqrt()))
        .collect::<Result<Vec<_>, PolesError>>()?;
    PoleSet::new(poles, Strategy::Eds, Some(*interval))
}

/// Estimator used by the weak greedy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyEstimator {
    /// ‖(ζM + A)V y(ζ) − Mb‖_{M⁻¹} with the Galerkin solution y(ζ).
    #[default]
    Residual,
    /// ‖b − V(ζI + L_{k+1})⁻¹VᵀMb‖_M.
    Literal,
}

/// Default training grid: 100·k log-spaced points.
pub fn default_training_size(k: usize) -> usize {
    100 * k.max(1)
}

fn training_grid(interval: &SpectralInterval, k: usize, size: Option<usize>) -> Result<Vec<f64>, PolesError> {
    let size = size.unwrap_or_else(|| default_training_size(k));
    let required = 10 * k.max(1);
    if size < required {
        return Err(PolesError::TrainingGrid { size, required });
    }
    Ok(interval.log_grid(size))
}

/// Solves the small SPD system (ζI + L) y = c through the eigenpairs of L.
fn reduced_shifted_solve(theta: &[f64], phis: &[Vector], c: &[f64], zeta: f64) -> Vector {
    let mut y = vec![0.0; c.len()];
    for (t, phi) in theta.iter().zip(phis) {
        let w = dot(phi, c) / (zeta + t);
        for (yi, pi) in y.iter_mut().zip(phi) {
            *yi += w * pi;
        }
    }
    y
}

struct GreedyState<'a> {
    op: &'a OperatorPair,
    b: Vector,
    mb: Vector,
    basis: KrylovBasis<'a>,
}

impl<'a> GreedyState<'a> {
    fn estimator(&self, zeta: f64, kind: GreedyEstimator, eig: &(Vec<f64>, Vec<Vector>), c: &[f64]) -> f64 {
        let y = reduced_shifted_solve(&eig.0, &eig.1, c, zeta);
        let n = self.op.dim();
        let cols = self.basis.columns();
        match kind {
            GreedyEstimator::Residual => {
                // r = (ζM + A)Vy − Mb; ‖r‖²_{M⁻¹} = rᵀM⁻¹r.
                let mut r: Vector = self.mb.iter().map(|x| -x).collect();
                let acols = self.basis.a_columns();
                let mcols = self.basis.m_columns();
                for (j, yj) in y.iter().enumerate() {
                    for i in 0..n {
                        r[i] += yj * (zeta * mcols[j][i] + acols[j][i]);
                    }
                }
                if self.op.mass_is_identity() {
                    dot(&r, &r).sqrt()
                } else {
                    match self.op.solve_m(&r) {
                        Ok(d) => dot(&r, &d).max(0.0).sqrt(),
                        Err(_) => f64::NAN,
                    }
                }
            }
            GreedyEstimator::Literal => {
                let mut d = self.b.clone();
                for (j, yj) in y.iter().enumerate() {
                    for i in 0..n {
                        d[i] -= yj * cols[j][i];
                    }
                }
                self.op.m_norm(&d)
            }
        }
    }
}

/// Weak greedy selection over a log-spaced training grid ⊂ [λ_L, λ_U].
/// Stops early when the estimator vanishes on the whole grid.
pub fn weak_greedy(
    op: &OperatorPair,
    b: &[f64],
    interval: &SpectralInterval,
    k: usize,
    training: Option<usize>,
) -> Result<PoleSet, PolesError> {
    weak_greedy_with(op, b, interval, k, training, GreedyEstimator::Residual)
}

pub fn weak_greedy_with(
    op: &OperatorPair,
    b: &[f64],
    interval: &SpectralInterval,
    k: usize,
    training: Option<usize>,
    estimator: GreedyEstimator,
) -> Result<PoleSet, PolesError> {
    require_k(k, 1)?;
    let grid = training_grid(interval, k, training)?;
    let basis = KrylovBasis::new(op, b)?;
    let norm_b = op.m_norm(b);
    let mut state = GreedyState { op, b: b.to_vec(), mb: op.apply_m(b), basis };
    let mut order = Vec::with_capacity(k);
    while order.len() < k {
        let red = state.basis.reduced();
        let e = dense_sym_eig(&red);
        let eig = (e.values, e.vectors);
        let c: Vector = state.basis.m_columns().iter().map(|mv| dot(mv, b)).collect();
        let values: Vec<f64> = grid.par_iter().map(|&z| state.estimator(z, estimator, &eig, &c)).collect();
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in values.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
        let Some((i, v)) = best else { break };
        if v <= 1e-12 * norm_b {
            break;
        }
        let pole = -grid[i];
        if order.contains(&pole) {
            break;
        }
        order.push(pole);
        state.basis.extend(pole)?;
    }
    PoleSet::new(order, Strategy::WeakGreedy, Some(*interval))
}

/// Eigenvalues of VᵀAV for an M-orthonormalized set of vectors.
fn ritz_of(op: &OperatorPair, vectors: &[Vector]) -> Vec<f64> {
    let mut basis = MOrthoBasis::new();
    for v in vectors {
        basis.push(v.clone(), |x| op.apply_m(x), DEFLATION_TOL);
    }
    let acols: Vec<Vector> = basis.cols.iter().map(|v| op.apply_a(v)).collect();
    let red = DenseSymMatrix::from_fn(basis.len(), |i, j| dot(&basis.cols[i], &acols[j]));
    dense_sym_eig(&red).values
}

/// ln of ∏|λ+ξ_j| / ∏(λ+μ_j).
pub fn spectral_objective(lambda: f64, poles: &[f64], ritz: &[f64]) -> f64 {
    let num: f64 = poles.iter().map(|p| (lambda + p).abs().ln()).sum();
    let den: f64 = ritz.iter().map(|m| (lambda + m).ln()).sum();
    num - den
}

/// Spectral adaptive selection, ξ₁ = −λ_L; Ritz values come from the
/// space spanned by the resolvent images (A − ξ_jM)⁻¹Mb.
pub fn spectral_adaptive(
    op: &OperatorPair,
    b: &[f64],
    interval: &SpectralInterval,
    k: usize,
    training: Option<usize>,
) -> Result<PoleSet, PolesError> {
    require_k(k, 1)?;
    let grid = training_grid(interval, k, training)?;
    let mb = op.apply_m(b);
    let mut order = vec![-interval.lo];
    let mut images = vec![op.factor_shifted(-interval.lo)?.solve(&mb)];
    while order.len() < k {
        let ritz = ritz_of(op, &images);
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&l| {
                if ritz.iter().any(|m| (l - m).abs() <= 1e-12 * l) {
                    f64::NEG_INFINITY
                } else {
                    spectral_objective(l, &order, &ritz)
                }
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in values.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
        let Some((i, _)) = best else { break };
        let pole = -grid[i];
        if order.contains(&pole) {
            break;
        }
        order.push(pole);
        images.push(op.factor_shifted(pole)?.solve(&mb));
    }
    PoleSet::new(order, Strategy::Spectral, Some(*interval))
}

/// Largest |r_Ξ| among the candidates; ties go to the smallest location.
fn argmax_deviation(poles: &[f64], candidates: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &x in candidates {
        let v = r_eval(poles, x).abs();
        match best {
            Some((bx, bv)) if v < bv || (v == bv && x >= bx) => {}
            _ => best = Some((x, v)),
        }
    }
    best.map(|b| b.0)
}

/// Automatic selection: Ξ = {−λ_L, −λ_U}, then repeatedly add the negative of
/// the interior extremum with the largest |r_Ξ|.
pub fn auto_poles(interval: &SpectralInterval, k: usize) -> Result<PoleSet, PolesError> {
    require_k(k, 2)?;
    let mut order = vec![-interval.lo, -interval.hi];
    while order.len() < k {
        let ext = interior_extrema(&order)?;
        let x = argmax_deviation(&order, &ext).expect("k >= 2 gives at least one extremum");
        if order.contains(&-x) {
            break;
        }
        order.push(-x);
    }
    PoleSet::new(order, Strategy::Auto, Some(*interval))
}

/// Ritz hull [μ_min, μ_max] after each round of the fully automatic selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FullyAutoRun {
    pub poles: PoleSet,
    pub hulls: Vec<(f64, f64)>,
}

/// Fully automatic selection: start from the Ritz values of span{b, Lb} and
/// maximize |r_Ξ| over the current Ritz hull including its endpoints.
pub fn fully_auto_poles(op: &OperatorPair, b: &[f64], k: usize) -> Result<PoleSet, PolesError> {
    Ok(fully_auto_run(op, b, k)?.poles)
}

pub fn fully_auto_run(op: &OperatorPair, b: &[f64], k: usize) -> Result<FullyAutoRun, PolesError> {
    require_k(k, 2)?;
    let lb = op.apply_l(b)?;
    let mut k2 = MOrthoBasis::new();
    if !k2.push(b.to_vec(), |x| op.apply_m(x), 0.0) {
        return Err(RkmError::ZeroVector.into());
    }
    if !k2.push(lb, |x| op.apply_m(x), DEFLATION_TOL) {
        return Err(PolesError::Breakdown);
    }
    let mu = ritz_of(op, &k2.cols);
    let (mut lo, mut hi) = (mu[0], mu[1]);
    if !(hi > lo) {
        return Err(PolesError::Breakdown);
    }
    let mut order = vec![-lo, -hi];
    let mut basis = KrylovBasis::new(op, b)?;
    basis.extend_all(&order)?;
    update_hull(&basis, &mut lo, &mut hi);
    let mut hulls = vec![(lo, hi)];
    while order.len() < k {
        let mut cand = vec![lo];
        cand.extend(interior_extrema(&order)?);
        cand.push(hi);
        let x = argmax_deviation(&order, &cand).expect("candidate list is nonempty");
        if order.contains(&-x) {
            break;
        }
        order.push(-x);
        basis.extend(-x)?;
        update_hull(&basis, &mut lo, &mut hi);
        hulls.push((lo, hi));
    }
    Ok(FullyAutoRun { poles: PoleSet::new(order, Strategy::FullyAuto, None)?, hulls })
}

fn update_hull(basis: &KrylovBasis<'_>, lo: &mut f64, hi: &mut f64) {
    let r = basis.ritz_values();
    if let (Some(first), Some(last)) = (r.first(), r.last()) {
        *lo = lo.min(*first);
        *hi = hi.max(*last);
    }
}

/// Dispatch by strategy; operator-based strategies need `problem`.
pub fn select(
    strategy: Strategy,
    interval: &SpectralInterval,
    k: usize,
    problem: Option<(&OperatorPair, &[f64])>,
    training: Option<usize>,
) -> Result<PoleSet, PolesError> {
    match strategy {
        Strategy::Zolotarev => zolotarev(interval, k),
        Strategy::Eds => eds(interval, k),
        Strategy::Auto => auto_poles(interval, k),
        Strategy::WeakGreedy | Strategy::Spectral | Strategy::FullyAuto | Strategy::Custom => {
            let Some((op, b)) = problem else { return Err(PolesError::NeedsOperator(strategy)) };
            match strategy {
                Strategy::WeakGreedy => weak_greedy(op, b, interval, k, training),
                Strategy::Spectral => spectral_adaptive(op, b, interval, k, training),
                Strategy::FullyAuto => fully_auto_poles(op, b, k),
                _ => Err(PolesError::NeedsOperator(strategy)),
            }
        }
    }
}
