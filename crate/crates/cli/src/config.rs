//! The parameter record echoed into every output file, and the small
//! parsers behind the command-line values.

use std::path::Path;

use bcl_core::exact3::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything that determines a command's output, in a fixed field order.
/// Thread count and wall time are deliberately absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn new(command: &str) -> Self {
        ExperimentConfig { command: command.to_owned(), ..Default::default() }
    }

    /// One-line JSON, as embedded in CSV comment lines.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Reads a config from a JSON file holding either the bare record or any
    /// output document with a `config` field.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| CliError::parse(path, e))
    }
}

/// `uniform` or `list:x1,x2,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Uniform,
    List(Vec<String>),
}

impl InitSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(InitSpec::Uniform);
        }
        let Some(rest) = s.strip_prefix("list:") else {
            return Err(CliError::usage(format!("--init must be `uniform` or `list:x1,x2,...`, got `{s}`")));
        };
        let items: Vec<String> = rest.split(',').map(|x| x.trim().to_owned()).collect();
        if items.iter().any(|x| x.is_empty()) {
            return Err(CliError::usage("--init list has an empty entry"));
        }
        Ok(InitSpec::List(items))
    }

    pub fn floats(items: &[String]) -> CliResult<Vec<f64>> {
        items
            .iter()
            .map(|x| {
                parse_rational(x)
                    .map(|r| bcl_core::exact3::to_f64(&r))
                    .or_else(|| x.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .ok_or_else(|| CliError::usage(format!("not a number: `{x}`")))
            })
            .collect()
    }

    pub fn rationals(items: &[String]) -> CliResult<Vec<Rational>> {
        items
            .iter()
            .map(|x| parse_rational(x).ok_or_else(|| CliError::usage(format!("not an exact number: `{x}`"))))
            .collect()
    }

    /// Canonical text form, as echoed in configs.
    pub fn to_text(&self) -> String {
        match self {
            InitSpec::Uniform => "uniform".to_owned(),
            InitSpec::List(items) => format!("list:{}", items.join(",")),
        }
    }
}

/// Exact value of a decimal (`-0.25`, `1.5e-3`), integer or fraction (`3/8`).
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        return (!den.is_zero()).then(|| Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * pow)
    } else {
        Rational::new(all, pow)
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Thread count: `BCL_THREADS` when set, else the flag, else all cores.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    match std::env::var("BCL_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("BCL_THREADS must be a non-negative integer, got `{v}`"))),
        _ => Ok(flag.unwrap_or(0)),
    }
}

/// `a/b` with `b = 1` kept explicit.
pub fn fraction_string(r: &Rational) -> String {
    if r.denom().is_one() {
        format!("{}/1", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn rationals_from_text() {
        assert_eq!(parse_rational("0.25"), Some(r(1, 4)));
        assert_eq!(parse_rational("-0.5"), Some(r(-1, 2)));
        assert_eq!(parse_rational("100"), Some(r(100, 1)));
        assert_eq!(parse_rational("3/8"), Some(r(3, 8)));
        assert_eq!(parse_rational("1.5e-3"), Some(r(3, 2000)));
        assert_eq!(parse_rational("2E2"), Some(r(200, 1)));
        assert_eq!(parse_rational(".5"), Some(r(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
        assert_eq!(parse_rational("1.2.3"), None);
    }

    #[test]
    fn init_specs() {
        assert_eq!(InitSpec::parse("uniform").unwrap(), InitSpec::Uniform);
        let l = InitSpec::parse("list:0.25, 0.5,3/4").unwrap();
        assert_eq!(l.to_text(), "list:0.25,0.5,3/4");
        let InitSpec::List(items) = l else { panic!() };
        assert_eq!(InitSpec::floats(&items).unwrap(), vec![0.25, 0.5, 0.75]);
        assert!(InitSpec::parse("grid").is_err());
        assert!(InitSpec::parse("list:1,,2").is_err());
        assert!(InitSpec::floats(&["x".into()]).is_err());
    }

    #[test]
    fn config_round_trips() {
        let mut c = ExperimentConfig::new("simulate");
        c.n_points = Some(3);
        c.tol = Some(1e-4);
        c.init = Some("uniform".into());
        let line = c.to_line();
        assert!(!line.contains("dim"));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&line).unwrap(), c);
    }

    #[test]
    fn fractions_print_with_denominator() {
        assert_eq!(fraction_string(&r(29, 96)), "29/96");
        assert_eq!(fraction_string(&r(1, 1)), "1/1");
        assert_eq!(fraction_string(&r(-7, 12)), "-7/12");
    }
}
