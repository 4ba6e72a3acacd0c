//! TOML sweep configuration.
//!
//! ```toml
//! [operator]
//! generator = "fd2d:31"
//! safety = 1.05
//! rhs = "constant"
//!
//! [function]
//! kind = "ml"
//! alpha = [0.25, 0.5, 0.75]
//! t = "0.1:0.1:2"
//! s = 0.75
//!
//! [poles]
//! strategies = ["Z", "E", "A"]
//! k = "1:25"
//! ```

use crate::discretize::{Generator, SpectralInterval};
use crate::functions::ParametricFunction;
use crate::poles::Strategy;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("field {field}: {msg}")]
    Field { field: &'static str, msg: String },
}

fn field(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, msg: msg.into() }
}

pub const MAX_K: usize = 60;

/// A scalar, a list, or an inclusive `a:step:b` range (`a:b` for unit steps).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Number(f64),
    Text(String),
    List(Vec<GridItem>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridItem {
    Number(f64),
    Text(String),
}

fn expand_text(name: &'static str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let nums: Vec<f64> = part
            .split(':')
            .map(|x| x.trim().parse::<f64>().map_err(|_| field(name, format!("'{part}' is not a number or range"))))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [x] => out.push(x),
            [a, b] => out.extend(expand_range(name, a, 1.0, b)?),
            [a, step, b] => out.extend(expand_range(name, a, step, b)?),
            _ => return Err(field(name, format!("'{part}' has too many ':' separators"))),
        }
    }
    Ok(out)
}

fn expand_range(name: &'static str, a: f64, step: f64, b: f64) -> Result<Vec<f64>, ConfigError> {
    if !(step > 0.0) || b < a {
        return Err(field(name, format!("range {a}:{step}:{b} needs step > 0 and end >= start")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(field(name, "range expands to more than 100000 values"));
    }
    // Round to the step's decimal grid so 0:0.1:1 gives 0.3 rather than 0.30000000000000004.
    Ok((0..=n).map(|i| tidy(a + step * i as f64)).collect())
}

fn tidy(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if (r - x).abs() <= 1e-12 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

impl GridValue {
    fn expand(&self, name: &'static str) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            GridValue::Number(x) => vec![*x],
            GridValue::Text(t) => expand_text(name, t)?,
            GridValue::List(items) => {
                let mut out = Vec::new();
                for it in items {
                    match it {
                        GridItem::Number(x) => out.push(*x),
                        GridItem::Text(t) => out.extend(expand_text(name, t)?),
                    }
                }
                out
            }
        };
        if v.is_empty() {
            return Err(field(name, "grid is empty"));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(field(name, format!("{x} is not finite")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NameList {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    operator: RawOperator,
    #[serde(default)]
    function: RawFunction,
    #[serde(default)]
    poles: RawPoles,
    #[serde(default)]
    fode: RawFode,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    generator: Option<String>,
    safety: Option<f64>,
    interval: Option<Vec<f64>>,
    rhs: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    kind: Option<String>,
    alpha: Option<GridValue>,
    beta: Option<GridValue>,
    t: Option<GridValue>,
    s: Option<GridValue>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoles {
    strategies: Option<NameList>,
    k: Option<GridValue>,
    training: Option<usize>,
    file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForcing {
    degree: usize,
    vector: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFode {
    u0: Option<String>,
    forcing: Option<Vec<RawForcing>>,
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
}

/// Source of a right-hand side or initial vector.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSpec {
    /// L²-projection of the constant function 1 for the chosen generator.
    Constant,
    Ones,
    /// Uniform entries in [−1, 1] from the configured seed.
    Random,
    File(PathBuf),
}

impl VectorSpec {
    pub fn parse(text: &str) -> VectorSpec {
        match text.trim() {
            "constant" => VectorSpec::Constant,
            "ones" => VectorSpec::Ones,
            "random" => VectorSpec::Random,
            path => VectorSpec::File(PathBuf::from(path)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    PowPos,
    PowNeg,
    ML,
}

impl FunctionKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionKind::PowPos => "pow+",
            FunctionKind::PowNeg => "pow-",
            FunctionKind::ML => "ml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FodeModeSpec {
    Oracle,
    Rkm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FodeConfig {
    pub u0: VectorSpec,
    pub forcing: Vec<(usize, VectorSpec)>,
    pub mode: FodeModeSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub generator: Generator,
    pub safety: f64,
    pub interval: Option<SpectralInterval>,
    pub rhs: VectorSpec,
    pub seed: u64,
    pub kind: FunctionKind,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub k: Vec<usize>,
    pub training: Option<usize>,
    pub poles_file: Option<PathBuf>,
    pub fode: FodeConfig,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            generator: Generator::Fd2d(31),
            safety: 1.05,
            interval: None,
            rhs: VectorSpec::Constant,
            seed: 0,
            kind: FunctionKind::ML,
            alpha: vec![1.0],
            beta: vec![1.0],
            t: vec![1.5],
            s: vec![0.75],
            strategies: vec![Strategy::Zolotarev],
            k: (1..=20).collect(),
            training: None,
            poles_file: None,
            fode: FodeConfig { u0: VectorSpec::Constant, forcing: Vec::new(), mode: FodeModeSpec::Oracle },
            output: None,
        }
    }
}

fn check_all(name: &'static str, v: &[f64], ok: impl Fn(f64) -> bool, domain: &str) -> Result<(), ConfigError> {
    match v.iter().find(|x| !ok(**x)) {
        Some(x) => Err(field(name, format!("{x} outside {domain}"))),
        None => Ok(()),
    }
}

impl SweepConfig {
    pub fn from_path(path: &Path) -> Result<SweepConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Parses TOML text; keys absent from the file keep their defaults.
    pub fn parse(text: &str) -> Result<SweepConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut cfg = SweepConfig::default();

        let op = raw.operator;
        if let Some(g) = op.generator {
            cfg.generator = g.parse().map_err(|e: crate::discretize::DiscretizeError| field("operator.generator", e.to_string()))?;
        }
        if let Some(s) = op.safety {
            if !(s >= 1.0 && s.is_finite()) {
                return Err(field("operator.safety", format!("{s} must be >= 1")));
            }
            cfg.safety = s;
        }
        if let Some(iv) = op.interval {
            if iv.len() != 2 {
                return Err(field("operator.interval", "expected [lo, hi]"));
            }
            cfg.interval =
                Some(SpectralInterval::new(iv[0], iv[1]).map_err(|e| field("operator.interval", e.to_string()))?);
        }
        if let Some(r) = op.rhs {
            cfg.rhs = VectorSpec::parse(&r);
        }
        if let Some(seed) = op.seed {
            cfg.seed = seed;
        }

        let f = raw.function;
        if let Some(kind) = f.kind {
            cfg.kind = match kind.trim() {
                "ml" => FunctionKind::ML,
                "pow+" | "pow_pos" => FunctionKind::PowPos,
                "pow-" | "pow_neg" => FunctionKind::PowNeg,
                other => return Err(field("function.kind", format!("'{other}' is not one of ml, pow+, pow-"))),
            };
        }
        if let Some(v) = f.alpha {
            cfg.alpha = v.expand("function.alpha")?;
        }
        if let Some(v) = f.beta {
            cfg.beta = v.expand("function.beta")?;
        }
        if let Some(v) = f.t {
            cfg.t = v.expand("function.t")?;
        }
        if let Some(v) = f.s {
            cfg.s = v.expand("function.s")?;
        }
        check_all("function.alpha", &cfg.alpha, |x| (0.0..=1.0).contains(&x), "[0, 1]")?;
        check_all("function.beta", &cfg.beta, |x| x > 0.0, "(0, inf)")?;
        check_all("function.t", &cfg.t, |x| x >= 0.0, "[0, inf)")?;
        check_all("function.s", &cfg.s, |x| (0.0..=1.0).contains(&x), "[0, 1]")?;

        let p = raw.poles;
        if let Some(list) = p.strategies {
            let names = match list {
                NameList::One(s) => s.split(',').map(str::to_string).collect(),
                NameList::Many(v) => v,
            };
            cfg.strategies = names
                .iter()
                .filter(|n| !n.trim().is_empty())
                .map(|n| n.parse::<Strategy>().map_err(|e| field("poles.strategies", e.to_string())))
                .collect::<Result<_, _>>()?;
            if cfg.strategies.is_empty() {
                return Err(field("poles.strategies", "list is empty"));
            }
        }
        if let Some(v) = p.k {
            let ks = v.expand("poles.k")?;
            cfg.k = ks
                .iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 && x <= MAX_K as f64 {
                        Ok(x as usize)
                    } else {
                        Err(field("poles.k", format!("{x} is not an integer in [0, {MAX_K}]")))
                    }
                })
                .collect::<Result<_, _>>()?;
        }
        cfg.training = p.training;
        cfg.poles_file = p.file;
        if cfg.strategies.contains(&Strategy::Custom) && cfg.poles_file.is_none() {
            return Err(field("poles.file", "strategy C needs a pole file"));
        }

        let fode = raw.fode;
        if let Some(u0) = fode.u0 {
            cfg.fode.u0 = VectorSpec::parse(&u0);
        }
        if let Some(list) = fode.forcing {
            cfg.fode.forcing = list
                .into_iter()
                .map(|f| {
                    if f.degree > crate::rkm::MAX_FORCING_DEGREE {
                        Err(field("fode.forcing", format!("degree {} exceeds 6", f.degree)))
                    } else {
                        Ok((f.degree, VectorSpec::parse(&f.vector)))
                    }
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(m) = fode.mode {
            cfg.fode.mode = match m.trim() {
                "oracle" => FodeModeSpec::Oracle,
                "rkm" => FodeModeSpec::Rkm,
                other => return Err(field("fode.mode", format!("'{other}' is not one of oracle, rkm"))),
            };
        }
        cfg.output = raw.output.path;
        Ok(cfg)
    }

    /// Every function of the (α, β, t, s) grid; α, β and t are ignored for powers.
    pub fn functions(&self) -> Result<Vec<ParametricFunction>, ConfigError> {
        let mut out = Vec::new();
        match self.kind {
            FunctionKind::PowPos | FunctionKind::PowNeg => {
                for &s in &self.s {
                    out.push(if self.kind == FunctionKind::PowPos {
                        ParametricFunction::pow_pos(s)
                    } else {
                        ParametricFunction::pow_neg(s)
                    }
                    .map_err(|e| field("function.s", e.to_string()))?);
                }
            }
            FunctionKind::ML => {
                for &a in &self.alpha {
                    for &b in &self.beta {
                        for &t in &self.t {
                            for &s in &self.s {
                                out.push(
                                    ParametricFunction::ml(a, b, t, s)
                                        .map_err(|e| field("function.beta", e.to_string()))?,
                                );
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn k_max(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(0)
    }
}
