use clap::{Args, Parser, Subcommand};
use fracrk::certificate::{certify, r_eval};
use fracrk::discretize::{Generator, SpectralInterval};
use fracrk::experiments::{
    self, load_vector, pole_sets, read_pole_file, Cell, CsvTable, ExperimentError, FodeModeSpec, Problem,
    SweepConfig, VectorSpec,
};
use fracrk::functions::ParametricFunction;
use fracrk::linalg::{write_matrix_market, write_vector};
use fracrk::poles::{PoleSet, Strategy};
use fracrk::rkm::{self, FodeMode, SpectralOracle};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracrk", version, about = "Rational Krylov methods for fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Operator generator, e.g. fd2d:31, fem1d:100, fem2d:15.
    #[arg(long)]
    generator: Option<Generator>,
    /// Spectral interval override `lo,hi`.
    #[arg(long, value_parser = parse_interval)]
    interval: Option<SpectralInterval>,
    /// Right-hand side: constant, ones, random or a vector file.
    #[arg(long)]
    rhs: Option<String>,
}

#[derive(Args, Clone, Default)]
struct PoleChoice {
    /// Strategy letter: Z, E, G, S, A, F.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Number of poles.
    #[arg(long)]
    k: Option<usize>,
    /// Pole file written by `fracrk poles`.
    #[arg(long)]
    poles: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pole set.
    Poles {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: PoleChoice,
    },
    /// Certificate Δ_Ξ and the interior extrema of r_Ξ.
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: PoleChoice,
    },
    /// Rational Krylov approximation of f(L)b.
    Apply {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: PoleChoice,
        /// Function descriptor, e.g. pow:+0.5, pow:-0.5, ml:alpha=0.5,t=1,s=0.75.
        #[arg(long)]
        function: Option<ParametricFunction>,
    },
    /// Solution of the fractional-in-time-and-space problem at time t.
    Fode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        choice: PoleChoice,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Initial value: constant, ones, random or a vector file.
        #[arg(long)]
        u0: Option<String>,
        /// Polynomial forcing term `degree:vector`, repeatable.
        #[arg(long)]
        forcing: Vec<String>,
        /// oracle or rkm.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Parameter study over the (α, β, t, s) grid.
    Paramstudy {
        #[command(flatten)]
        common: Common,
    },
    /// Convergence in k for each strategy.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Certificates Δ_Ξ(k) for each strategy.
    Certcmp {
        #[command(flatten)]
        common: Common,
    },
    /// Write A and M of a generator in Matrix Market format.
    Export {
        #[arg(long)]
        generator: Generator,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        m: PathBuf,
    },
}

fn parse_interval(s: &str) -> Result<SpectralInterval, String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number '{hi}'"))?;
    SpectralInterval::new(lo, hi).map_err(|e| e.to_string())
}

fn load_config(common: &Common) -> Result<SweepConfig, ExperimentError> {
    let mut cfg = match &common.config {
        Some(p) => SweepConfig::from_path(p)?,
        None => SweepConfig::default(),
    };
    if let Some(g) = common.generator {
        cfg.generator = g;
    }
    if common.interval.is_some() {
        cfg.interval = common.interval;
    }
    if let Some(r) = &common.rhs {
        cfg.rhs = VectorSpec::parse(r);
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    Ok(cfg)
}

fn apply_choice(cfg: &mut SweepConfig, choice: &PoleChoice) {
    if let Some(s) = choice.strategy {
        cfg.strategies = vec![s];
    }
    if let Some(k) = choice.k {
        cfg.k = vec![k];
    }
    if let Some(p) = &choice.poles {
        cfg.poles_file = Some(p.clone());
        if choice.strategy.is_none() {
            cfg.strategies = vec![Strategy::Custom];
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, ExperimentError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// The single pole set selected by the configuration (first strategy, largest k).
fn chosen_poles(cfg: &SweepConfig, problem: Option<&Problem>) -> Result<PoleSet, ExperimentError> {
    if let Some(path) = &cfg.poles_file {
        if cfg.strategies.first() == Some(&Strategy::Custom) {
            return read_pole_file(path);
        }
    }
    let strategy = cfg.strategies[0];
    let k = cfg.k_max();
    let interval = match (&cfg.interval, problem) {
        (Some(iv), _) => *iv,
        (None, Some(p)) => p.interval,
        (None, None) => Problem::from_config(cfg)?.interval,
    };
    let sets = pole_sets(strategy, &[k], &interval, problem.map(|p| (&p.op, p.b.as_slice())), cfg.training, None)?;
    sets.into_iter()
        .next()
        .map(|(_, p)| p)
        .ok_or(ExperimentError::Poles(fracrk::poles::PolesError::Count { k, min: 1 }))
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Poles { common, choice } => {
            let mut cfg = load_config(&common)?;
            apply_choice(&mut cfg, &choice);
            let problem =
                if cfg.strategies[0].needs_operator() || cfg.interval.is_none() { Some(Problem::from_config(&cfg)?) } else { None };
            let poles = chosen_poles(&cfg, problem.as_ref())?;
            if poles.len() < cfg.k_max() {
                eprintln!("strategy {} stopped early with {} of {} poles", poles.strategy(), poles.len(), cfg.k_max());
            }
            poles.write(output(cfg.output.as_deref())?)?;
        }
        Command::Certify { common, choice } => {
            let mut cfg = load_config(&common)?;
            apply_choice(&mut cfg, &choice);
            let poles = chosen_poles(&cfg, None)?;
            let interval = match cfg.interval.or(poles.interval().copied()) {
                Some(iv) => iv,
                None => Problem::from_config(&cfg)?.interval,
            };
            let cert = certify(poles.poles(), &interval)?;
            let mut rows = vec![vec![
                Cell::Text("endpoint".into()),
                Cell::Float(interval.lo),
                Cell::Float(r_eval(poles.poles(), interval.lo).abs()),
            ]];
            for (x, v) in &cert.extrema {
                rows.push(vec![Cell::Text("extremum".into()), Cell::Float(*x), Cell::Float(*v)]);
            }
            rows.push(vec![
                Cell::Text("endpoint".into()),
                Cell::Float(interval.hi),
                Cell::Float(r_eval(poles.poles(), interval.hi).abs()),
            ]);
            rows.push(vec![Cell::Text("delta".into()), Cell::Empty, Cell::Float(cert.delta)]);
            CsvTable { kind: "certify", columns: vec!["point", "lambda", "abs_r"], rows }
                .write(output(cfg.output.as_deref())?)?;
        }
        Command::Apply { common, choice, function } => {
            let mut cfg = load_config(&common)?;
            apply_choice(&mut cfg, &choice);
            let f = match function {
                Some(f) => f,
                None => cfg.functions()?[0],
            };
            let problem = Problem::from_config(&cfg)?;
            let poles = chosen_poles(&cfg, Some(&problem))?;
            let (u, err) = experiments::apply_with_error(&problem, &f, &poles)?;
            if let Some(e) = err {
                eprintln!("k = {}, relative error {e:.6e}", poles.len());
            }
            write_vector(&u, output(cfg.output.as_deref())?)?;
        }
        Command::Fode { common, choice, alpha, s, t, u0, forcing, mode } => {
            let mut cfg = load_config(&common)?;
            apply_choice(&mut cfg, &choice);
            let alpha = alpha.unwrap_or(cfg.alpha[0]);
            let s = s.unwrap_or(cfg.s[0]);
            let t = t.unwrap_or(cfg.t[0]);
            if let Some(u) = u0 {
                cfg.fode.u0 = VectorSpec::parse(&u);
            }
            for item in &forcing {
                let (deg, spec) = item.split_once(':').ok_or_else(|| {
                    experiments::ConfigError::Field { field: "forcing", msg: format!("'{item}' is not degree:vector") }
                })?;
                let deg: usize = deg.trim().parse().map_err(|_| experiments::ConfigError::Field {
                    field: "forcing",
                    msg: format!("'{deg}' is not a degree"),
                })?;
                cfg.fode.forcing.push((deg, VectorSpec::parse(spec)));
            }
            if let Some(m) = mode {
                cfg.fode.mode = match m.as_str() {
                    "oracle" => FodeModeSpec::Oracle,
                    "rkm" => FodeModeSpec::Rkm,
                    other => {
                        return Err(experiments::ConfigError::Field {
                            field: "mode",
                            msg: format!("'{other}' is not one of oracle, rkm"),
                        }
                        .into())
                    }
                };
            }
            let problem = Problem::from_config(&cfg)?;
            let u0 = load_vector(&cfg.fode.u0, &cfg.generator, &problem.op, cfg.seed)?;
            let forcing = cfg
                .fode
                .forcing
                .iter()
                .map(|(d, spec)| Ok((*d, load_vector(spec, &cfg.generator, &problem.op, cfg.seed)?)))
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            let u = match cfg.fode.mode {
                FodeModeSpec::Oracle => {
                    let oracle = SpectralOracle::new(&problem.op)?;
                    rkm::solve_fode(&problem.op, &u0, &forcing, alpha, s, t, FodeMode::Oracle(&oracle))?
                }
                FodeModeSpec::Rkm => {
                    let poles = chosen_poles(&cfg, Some(&problem))?;
                    rkm::solve_fode(&problem.op, &u0, &forcing, alpha, s, t, FodeMode::Rkm(&poles))?
                }
            };
            write_vector(&u, output(cfg.output.as_deref())?)?;
        }
        Command::Paramstudy { common } => {
            let cfg = load_config(&common)?;
            experiments::run_paramstudy(&cfg)?.write(output(cfg.output.as_deref())?)?;
        }
        Command::Converge { common } => {
            let cfg = load_config(&common)?;
            experiments::run_convergence(&cfg)?.write(output(cfg.output.as_deref())?)?;
        }
        Command::Certcmp { common } => {
            let cfg = load_config(&common)?;
            experiments::run_certificates(&cfg)?.write(output(cfg.output.as_deref())?)?;
        }
        Command::Export { generator, a, m } => {
            let op = generator.build()?;
            write_matrix_market(&op.a, BufWriter::new(File::create(a)?))?;
            write_matrix_market(&op.m, BufWriter::new(File::create(m)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
