//! Parameter, convergence and certificate sweeps with deterministic CSV output.

pub mod config;

pub use config::{ConfigError, FodeModeSpec, FunctionKind, SweepConfig, VectorSpec};

use crate::certificate::{certify, error_bound_from_delta, CertificateError};
use crate::discretize::{spectral_bounds, DiscretizeError, Generator, SpectralInterval};
use crate::functions::{FunctionError, ParametricFunction};
use crate::linalg::{read_vector, LinalgError, OperatorPair, Vector, DENSE_EIG_MAX};
use crate::poles::{self, PoleSet, PolesError, Strategy};
use crate::rkm::{self, KrylovBasis, RkmError, SpectralOracle};
use crate::specfun::{mittag_leffler_neg, MLParams, SpecfunError};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Poles(#[from] PolesError),
    #[error(transparent)]
    Rkm(#[from] RkmError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("operator dimension {0} exceeds the dense oracle limit {DENSE_EIG_MAX}")]
    OracleTooLarge(usize),
    #[error("invalid FRACRK_WORKERS value '{0}'")]
    Workers(String),
    #[error("{0}")]
    Pool(String),
}

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "FRACRK_WORKERS";

/// Thread pool sized by `FRACRK_WORKERS` (all cores when unset).
pub fn worker_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| ExperimentError::Workers(v.clone()))?;
        if n == 0 {
            return Err(ExperimentError::Workers(v));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// A table with a versioned schema tag, written as `# fracrk-csv v1 <kind>`
/// followed by a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.12e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

pub const CSV_SCHEMA: &str = "fracrk-csv v1";

impl CsvTable {
    pub fn write(&self, mut w: impl Write) -> Result<(), ExperimentError> {
        writeln!(w, "# {CSV_SCHEMA} {}", self.kind)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.columns)?;
        for row in &self.rows {
            cw.write_record(row.iter().map(Cell::render))?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn to_string(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Reads a vector source for an operator built from `generator`.
pub fn load_vector(
    spec: &VectorSpec,
    generator: &Generator,
    op: &OperatorPair,
    seed: u64,
) -> Result<Vector, ExperimentError> {
    let v = match spec {
        VectorSpec::Constant => generator.constant_source(op)?,
        VectorSpec::Ones => vec![1.0; op.dim()],
        VectorSpec::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        VectorSpec::File(path) => {
            let f = std::fs::File::open(path)?;
            read_vector(std::io::BufReader::new(f))?
        }
    };
    if v.len() != op.dim() {
        return Err(RkmError::Dimension { expected: op.dim(), found: v.len() }.into());
    }
    Ok(v)
}

/// Operator, interval and right-hand side b normalized to ‖b‖_M = 1.
pub struct Problem {
    pub generator: Generator,
    pub op: OperatorPair,
    pub interval: SpectralInterval,
    pub b: Vector,
}

impl Problem {
    pub fn from_config(cfg: &SweepConfig) -> Result<Problem, ExperimentError> {
        let op = cfg.generator.build()?;
        let interval = match cfg.interval {
            Some(iv) => iv,
            None => spectral_bounds(&op, cfg.safety)?,
        };
        let b = load_vector(&cfg.rhs, &cfg.generator, &op, cfg.seed)?;
        let nb = op.m_norm(&b);
        if !(nb > 0.0) {
            return Err(RkmError::ZeroVector.into());
        }
        let b = b.iter().map(|x| x / nb).collect();
        Ok(Problem { generator: cfg.generator, op, interval, b })
    }

    pub fn oracle(&self) -> Result<SpectralOracle, ExperimentError> {
        if self.op.dim() > DENSE_EIG_MAX {
            return Err(ExperimentError::OracleTooLarge(self.op.dim()));
        }
        Ok(SpectralOracle::new(&self.op)?)
    }
}

/// Pole sets for every requested k. Nested strategies are generated once at
/// the largest k and truncated; Zolotarev is regenerated per k.
pub fn pole_sets(
    strategy: Strategy,
    ks: &[usize],
    interval: &SpectralInterval,
    problem: Option<(&OperatorPair, &[f64])>,
    training: Option<usize>,
    custom: Option<&PoleSet>,
) -> Result<Vec<(usize, PoleSet)>, ExperimentError> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let empty = || PoleSet::new(Vec::new(), strategy, Some(*interval));
    let mut out = Vec::new();
    match strategy {
        Strategy::Zolotarev => {
            for &k in ks {
                out.push((k, if k == 0 { empty()? } else { poles::zolotarev(interval, k)? }));
            }
        }
        Strategy::Custom => {
            let full = custom.ok_or(PolesError::NeedsOperator(Strategy::Custom))?;
            for &k in ks.iter().filter(|&&k| k <= full.len()) {
                out.push((k, full.prefix(k)));
            }
        }
        _ => {
            let min = if matches!(strategy, Strategy::Auto | Strategy::FullyAuto) { 2 } else { 1 };
            let full = if k_max == 0 { empty()? } else { poles::select(strategy, interval, k_max.max(min), problem, training)? };
            for &k in ks.iter().filter(|&&k| k <= full.len()) {
                out.push((k, full.prefix(k)));
            }
        }
    }
    Ok(out)
}

/// E_{α,β}(−t^α λ_L^s) for ML, f(λ_L) for powers.
pub fn reference_value(f: &ParametricFunction, lambda_lo: f64) -> Result<f64, ExperimentError> {
    Ok(match *f {
        ParametricFunction::ML { alpha, beta, t, s } if alpha > 0.0 => {
            mittag_leffler_neg(MLParams::new(alpha, beta)?, t.powf(alpha) * lambda_lo.powf(s))?
        }
        _ => f.evaluate(lambda_lo)?,
    })
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub k: usize,
    pub function: ParametricFunction,
    pub error: f64,
    pub delta: f64,
    pub bound: f64,
    pub reference: f64,
}

fn function_cells(f: &ParametricFunction) -> Vec<Cell> {
    match *f {
        ParametricFunction::PowPos { s } => vec![Cell::Text("pow+".into()), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Float(s)],
        ParametricFunction::PowNeg { s } => vec![Cell::Text("pow-".into()), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Float(s)],
        ParametricFunction::ML { alpha, beta, t, s } => {
            vec![Cell::Text("ml".into()), Cell::Float(alpha), Cell::Float(beta), Cell::Float(t), Cell::Float(s)]
        }
    }
}

/// Errors, certificates and bounds over strategies × k × function grid.
/// Rows are ordered by (strategy as listed, k ascending, function grid order).
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    let problem = Problem::from_config(cfg)?;
    let oracle = problem.oracle()?;
    let functions = cfg.functions()?;
    let custom = match &cfg.poles_file {
        Some(path) => Some(read_pole_file(path)?),
        None => None,
    };
    let pool = worker_pool()?;
    pool.install(|| {
        let exact: Vec<Vector> = functions
            .par_iter()
            .map(|f| oracle.apply(f, &problem.b))
            .collect::<Result<_, _>>()?;
        let mut jobs = Vec::new();
        for &st in &cfg.strategies {
            let sets = pole_sets(
                st,
                &cfg.k,
                &problem.interval,
                Some((&problem.op, &problem.b)),
                cfg.training,
                custom.as_ref(),
            )?;
            jobs.extend(sets.into_iter().map(|(k, p)| (st, k, p)));
        }
        let blocks: Vec<Vec<SweepRow>> = jobs
            .par_iter()
            .map(|(st, k, ps)| -> Result<Vec<SweepRow>, ExperimentError> {
                let basis = rkm::build_basis(&problem.op, &problem.b, ps)?;
                let delta = certify(ps.poles(), &problem.interval)?.delta;
                functions
                    .par_iter()
                    .zip(&exact)
                    .map(|(f, ex)| {
                        let u = basis.apply_parametric(f)?;
                        let error = rkm::m_distance(&problem.op, ex, &u);
                        let bound = error_bound_from_delta(f, delta, &problem.interval, *k, 1.0, true)?;
                        let reference = reference_value(f, problem.interval.lo)?;
                        Ok(SweepRow { strategy: *st, k: *k, function: *f, error, delta, bound, reference })
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(blocks.into_iter().flatten().collect())
    })
}

/// Columns alpha, beta, t, s, strategy, k, error, reference, bound.
pub fn run_paramstudy(cfg: &SweepConfig) -> Result<CsvTable, ExperimentError> {
    let rows = sweep(cfg)?;
    Ok(CsvTable {
        kind: "paramstudy",
        columns: vec!["kind", "alpha", "beta", "t", "s", "strategy", "k", "error", "reference", "bound"],
        rows: rows
            .iter()
            .map(|r| {
                let mut c = function_cells(&r.function);
                c.extend([
                    Cell::Text(r.strategy.to_string()),
                    Cell::Int(r.k),
                    Cell::Float(r.error),
                    Cell::Float(r.reference),
                    Cell::Float(r.bound),
                ]);
                c
            })
            .collect(),
    })
}

/// Columns strategy, k, function, error, delta, bound.
pub fn run_convergence(cfg: &SweepConfig) -> Result<CsvTable, ExperimentError> {
    let rows = sweep(cfg)?;
    Ok(CsvTable {
        kind: "converge",
        columns: vec!["strategy", "k", "kind", "alpha", "beta", "t", "s", "error", "delta", "bound"],
        rows: rows
            .iter()
            .map(|r| {
                let mut c = vec![Cell::Text(r.strategy.to_string()), Cell::Int(r.k)];
                c.extend(function_cells(&r.function));
                c.extend([Cell::Float(r.error), Cell::Float(r.delta), Cell::Float(r.bound)]);
                c
            })
            .collect(),
    })
}

/// Columns strategy, k, delta, zolotarev_bound = 2e^{−C*k}. The operator is
/// built only when a strategy needs it.
pub fn run_certificates(cfg: &SweepConfig) -> Result<CsvTable, ExperimentError> {
    let needs_op = cfg.strategies.iter().any(|s| s.needs_operator());
    let problem = if needs_op || cfg.interval.is_none() { Some(Problem::from_config(cfg)?) } else { None };
    let interval = match (&cfg.interval, &problem) {
        (Some(iv), _) => *iv,
        (None, Some(p)) => p.interval,
        (None, None) => unreachable!("problem is built when no interval is given"),
    };
    let custom = match &cfg.poles_file {
        Some(path) => Some(read_pole_file(path)?),
        None => None,
    };
    let rate = poles::zolotarev_rate(&interval)?;
    let pool = worker_pool()?;
    pool.install(|| {
        let mut rows = Vec::new();
        for &st in &cfg.strategies {
            let sets = pole_sets(
                st,
                &cfg.k,
                &interval,
                problem.as_ref().map(|p| (&p.op, p.b.as_slice())),
                cfg.training,
                custom.as_ref(),
            )?;
            let deltas: Vec<f64> = sets
                .par_iter()
                .map(|(_, ps)| certify(ps.poles(), &interval).map(|c| c.delta))
                .collect::<Result<_, _>>()?;
            for ((k, _), d) in sets.iter().zip(deltas) {
                rows.push(vec![
                    Cell::Text(st.to_string()),
                    Cell::Int(*k),
                    Cell::Float(d),
                    Cell::Float(2.0 * (-rate * *k as f64).exp()),
                ]);
            }
        }
        Ok(CsvTable { kind: "certcmp", columns: vec!["strategy", "k", "delta", "zolotarev_bound"], rows })
    })
}

pub fn read_pole_file(path: &Path) -> Result<PoleSet, ExperimentError> {
    let f = std::fs::File::open(path)?;
    Ok(PoleSet::read(std::io::BufReader::new(f))?)
}

/// Rational Krylov approximation of f(L)b with the M-distance to the oracle
/// when the operator is small enough for it.
pub fn apply_with_error(
    problem: &Problem,
    f: &ParametricFunction,
    poles: &PoleSet,
) -> Result<(Vector, Option<f64>), ExperimentError> {
    let basis = KrylovBasis::new(&problem.op, &problem.b).and_then(|mut b| {
        b.extend_all(poles.generation_order())?;
        Ok(b)
    })?;
    let u = basis.apply_parametric(f)?;
    let err = if problem.op.dim() <= DENSE_EIG_MAX {
        let ex = problem.oracle()?.apply(f, &problem.b)?;
        Some(rkm::m_distance(&problem.op, &ex, &u))
    } else {
        None
    };
    Ok((u, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_format() {
        let t = CsvTable {
            kind: "demo",
            columns: vec!["a", "b"],
            rows: vec![vec![Cell::Float(0.5), Cell::Int(3)], vec![Cell::Empty, Cell::Text("Z".into())]],
        };
        assert_eq!(t.to_string().unwrap(), "# fracrk-csv v1 demo\na,b\n5.000000000000e-1,3\n,Z\n");
    }
}
