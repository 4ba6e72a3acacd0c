//! Parametric function catalog f^τ, Stieltjes/Bernstein classification and
//! the constants entering the a-posteriori error bounds.

use crate::discretize::SpectralInterval;
use crate::specfun::{mittag_leffler_neg, MLParams, SpecfunError};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionError {
    #[error("parameter {name} = {value} outside its domain {domain}")]
    Domain { name: &'static str, value: f64, domain: &'static str },
    #[error("cannot parse function descriptor '{0}'")]
    Parse(String),
    #[error("f(0+) is unbounded for {0}; bound the shifted function f(λ+η) with η > 0 instead")]
    ShiftRequired(String),
    #[error("{0} has no Laplace-Stieltjes, Cauchy-Stieltjes or complete Bernstein representation")]
    Unclassified(String),
    #[error("function evaluated at non-positive λ = {0}")]
    Argument(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// f(λ) = λ^s, λ^{−s} or E_{α,β}(−t^α λ^s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParametricFunction {
    PowPos { s: f64 },
    PowNeg { s: f64 },
    ML { alpha: f64, beta: f64, t: f64, s: f64 },
}

fn check(name: &'static str, value: f64, ok: bool, domain: &'static str) -> Result<(), FunctionError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(FunctionError::Domain { name, value, domain })
    }
}

impl ParametricFunction {
    pub fn pow_pos(s: f64) -> Result<Self, FunctionError> {
        check("s", s, (0.0..=1.0).contains(&s), "[0, 1]")?;
        Ok(Self::PowPos { s })
    }

    pub fn pow_neg(s: f64) -> Result<Self, FunctionError> {
        check("s", s, (0.0..=1.0).contains(&s), "[0, 1]")?;
        Ok(Self::PowNeg { s })
    }

    pub fn ml(alpha: f64, beta: f64, t: f64, s: f64) -> Result<Self, FunctionError> {
        check("alpha", alpha, (0.0..=1.0).contains(&alpha), "[0, 1]")?;
        check("beta", beta, beta > 0.0 && beta >= alpha, "beta > 0 and beta >= alpha")?;
        check("t", t, t >= 0.0, "t >= 0")?;
        check("s", s, (0.0..=1.0).contains(&s), "[0, 1]")?;
        Ok(Self::ML { alpha, beta, t, s })
    }

    /// Exponent s shared by all variants.
    pub fn s(&self) -> f64 {
        match *self {
            Self::PowPos { s } | Self::PowNeg { s } | Self::ML { s, .. } => s,
        }
    }

    pub fn evaluate(&self, lambda: f64) -> Result<f64, FunctionError> {
        if !(lambda > 0.0) {
            return Err(FunctionError::Argument(lambda));
        }
        Ok(match *self {
            Self::PowPos { s } => lambda.powf(s),
            Self::PowNeg { s } => lambda.powf(-s),
            Self::ML { alpha, beta, t, s } => {
                if alpha == 0.0 {
                    1.0 / (1.0 + lambda.powf(s))
                } else {
                    mittag_leffler_neg(MLParams::new(alpha, beta)?, t.powf(alpha) * lambda.powf(s))?
                }
            }
        })
    }

    /// lim_{λ→0⁺} f(λ); infinite for negative powers.
    pub fn value_at_zero(&self) -> Result<f64, FunctionError> {
        Ok(match *self {
            Self::PowPos { s } => {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::PowNeg { s } => {
                if s == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ML { alpha, beta, t, s } => {
                if alpha == 0.0 {
                    if s == 0.0 {
                        0.5
                    } else {
                        1.0
                    }
                } else if s == 0.0 {
                    mittag_leffler_neg(MLParams::new(alpha, beta)?, t.powf(alpha))?
                } else {
                    crate::specfun::rgamma(beta)
                }
            }
        })
    }
}

impl fmt::Display for ParametricFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowPos { s } => write!(f, "pow:+{s}"),
            Self::PowNeg { s } => write!(f, "pow:-{s}"),
            Self::ML { alpha, beta, t, s } => write!(f, "ml:alpha={alpha},beta={beta},t={t},s={s}"),
        }
    }
}

impl FromStr for ParametricFunction {
    type Err = FunctionError;

    /// `pow:+0.5`, `pow:-0.5`, `ml:alpha=0.5,beta=1,t=1.5,s=0.75` (beta defaults to 1).
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || FunctionError::Parse(text.to_string());
        let (kind, rest) = text.trim().split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "pow" => {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix('-') {
                    Self::pow_neg(v.parse().map_err(|_| bad())?)
                } else {
                    let v = rest.strip_prefix('+').unwrap_or(rest);
                    Self::pow_pos(v.parse().map_err(|_| bad())?)
                }
            }
            "ml" => {
                let (mut alpha, mut beta, mut t, mut s) = (None, Some(1.0), None, None);
                for item in rest.split(',') {
                    let (k, v) = item.split_once('=').ok_or_else(bad)?;
                    let v: f64 = v.trim().parse().map_err(|_| bad())?;
                    match k.trim() {
                        "alpha" => alpha = Some(v),
                        "beta" => beta = Some(v),
                        "t" => t = Some(v),
                        "s" => s = Some(v),
                        _ => return Err(bad()),
                    }
                }
                Self::ml(alpha.ok_or_else(bad)?, beta.ok_or_else(bad)?, t.ok_or_else(bad)?, s.ok_or_else(bad)?)
            }
            _ => Err(bad()),
        }
    }
}

/// Membership flags: Laplace-Stieltjes, Cauchy-Stieltjes, complete Bernstein.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FunctionClass {
    pub ls: bool,
    pub cs: bool,
    pub cb: bool,
}

pub fn classify(f: &ParametricFunction) -> FunctionClass {
    match *f {
        ParametricFunction::PowPos { s } => FunctionClass { ls: s == 0.0, cs: false, cb: s > 0.0 && s < 1.0 },
        ParametricFunction::PowNeg { s } => {
            let cs = s > 0.0 && s < 1.0;
            FunctionClass { ls: true, cs, cb: false }
        }
        ParametricFunction::ML { alpha, t, s, .. } => {
            let cs = t > 0.0 && s > 0.0 && s + alpha / 2.0 < 1.0;
            FunctionClass { ls: true, cs, cb: false }
        }
    }
}

/// γ_k = 2.23 + (2/π) ln(4k √(λ_U/(λ_L π))).
pub fn gamma_k(k: usize, interval: &SpectralInterval) -> f64 {
    let k = k.max(1) as f64;
    2.23 + 2.0 / PI * (4.0 * k * (interval.hi / (interval.lo * PI)).sqrt()).ln()
}

/// c_k: minimum over the applicable branches CS → f(λ_L), CB → f(λ_U), LS → 4γ_k f(0⁺).
pub fn bound_constant(
    f: &ParametricFunction,
    cls: FunctionClass,
    interval: &SpectralInterval,
    k: usize,
) -> Result<f64, FunctionError> {
    let mut best = f64::INFINITY;
    if cls.cs {
        best = best.min(f.evaluate(interval.lo)?);
    }
    if cls.cb {
        best = best.min(f.evaluate(interval.hi)?);
    }
    if cls.ls {
        let f0 = f.value_at_zero()?;
        if f0.is_finite() {
            best = best.min(4.0 * gamma_k(k, interval) * f0);
        } else if !cls.cs && !cls.cb {
            return Err(FunctionError::ShiftRequired(f.to_string()));
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(FunctionError::Unclassified(f.to_string()))
    }
}

/// 2·c_α·(1/λ_L + (1/s) ln(1 + t^{−α})).
pub fn laplace_bound(alpha: f64, s: f64, t: f64, lambda_lo: f64, c_alpha: f64) -> Result<f64, FunctionError> {
    check("alpha", alpha, alpha > 0.0 && alpha <= 1.0, "(0, 1]")?;
    check("s", s, s > 0.0 && s <= 1.0, "(0, 1]")?;
    check("t", t, t > 0.0, "t > 0")?;
    check("lambda_lo", lambda_lo, lambda_lo > 0.0, "> 0")?;
    check("c_alpha", c_alpha, c_alpha > 0.0, "> 0")?;
    Ok(2.0 * c_alpha * (1.0 / lambda_lo + (1.0 / s) * (1.0 + t.powf(-alpha)).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_roundtrip() {
        for d in ["pow:+0.5", "pow:-0.25", "ml:alpha=0.5,beta=1,t=1.5,s=0.75"] {
            let f: ParametricFunction = d.parse().unwrap();
            assert_eq!(f.to_string(), d);
        }
        assert!("pow:2".parse::<ParametricFunction>().is_err());
        assert!("ml:alpha=0.5,t=1".parse::<ParametricFunction>().is_err());
        assert!("exp:1".parse::<ParametricFunction>().is_err());
    }

    #[test]
    fn ml_default_beta() {
        let f: ParametricFunction = "ml:alpha=0.5,t=1,s=1".parse().unwrap();
        assert_eq!(f, ParametricFunction::ML { alpha: 0.5, beta: 1.0, t: 1.0, s: 1.0 });
    }

    #[test]
    fn evaluate_rejects_nonpositive() {
        assert!(ParametricFunction::pow_pos(0.5).unwrap().evaluate(0.0).is_err());
    }
}
