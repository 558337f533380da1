//! Flat `key = value` run configuration.
//!
//! ```text
//! # fixture
//! n = 3
//! base = circle(1)
//! r = 1
//! epsilon = 0.5236
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors. Exactly one of `base` (swept into a semi-helix) or `surface`
//! (certified as given) must be present.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::euclid::{AngleWindow, Direction, VecN};
use crate::presets::Preset;
use crate::surface::JacobianMode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
}

const KEYS: &[&str] = &[
    "n",
    "base",
    "surface",
    "r",
    "theta0",
    "epsilon",
    "d",
    "flip_eta",
    "grid",
    "jacobian",
    "out",
    "seed",
    "start",
    "span",
    "step",
    "cloud",
    "cloud_samples",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Hypersurface of ℝⁿ⁻¹ swept into a semi-helix of ℝⁿ.
    Base(Preset),
    /// Hypersurface of ℝⁿ taken as given.
    Surface(Preset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub geometry: Geometry,
    /// Sweep radius; required for `base`.
    pub r: Option<f64>,
    pub window: AngleWindow<f64>,
    pub d: Direction<f64>,
    pub flip_eta: bool,
    /// Samples per chart axis.
    pub grid: Vec<usize>,
    pub jacobian: JacobianMode,
    pub out: PathBuf,
    pub seed: u64,
    /// Chart coordinates for `trace` and `reconstruct`.
    pub start: Option<Vec<f64>>,
    pub span: f64,
    pub step: f64,
    pub cloud: Option<PathBuf>,
    pub cloud_samples: usize,
}

impl RunConfig {
    /// Dimension of the chart being sampled.
    pub fn chart_dim(&self) -> usize {
        self.n - 1
    }
}

/// Splits the document into key/value pairs.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        if pairs.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::Parse {
                line,
                message: format!("`{key}` given twice"),
            });
        }
    }
    Ok(pairs)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parses `text`, then replaces or adds the given pairs before validation.
pub fn parse_config_with(text: &str, overrides: &[(&str, String)]) -> Result<RunConfig, ConfigError> {
    let mut pairs = parse_pairs(text)?;
    for (key, value) in overrides {
        if !KEYS.contains(key) {
            return Err(invalid(key, "unknown key"));
        }
        pairs.insert((*key).to_string(), value.clone());
    }
    validate(&pairs)
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError> {
    pairs
        .get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| invalid(key, format!("`{v}` is not a number")))
        })
        .transpose()
}

fn list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    value
        .trim_matches(|c| c == '(' || c == ')' || c == '[' || c == ']')
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| invalid(key, format!("`{}` is not a number", s.trim())))
        })
        .collect()
}

fn validate(pairs: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let n: usize = number(pairs, "n")?.ok_or_else(|| invalid("n", "ambient dimension is required"))?;
    if n < 2 {
        return Err(invalid("n", "ambient dimension must be at least 2"));
    }

    let preset = |key: &str| -> Result<Option<Preset>, ConfigError> {
        pairs
            .get(key)
            .map(|v| v.parse::<Preset>().map_err(|e| invalid(key, e.to_string())))
            .transpose()
    };
    let geometry = match (preset("base")?, preset("surface")?) {
        (Some(b), None) => {
            if n < 3 {
                return Err(invalid("n", "a swept base needs n >= 3"));
            }
            if let Some(dim) = b.natural_ambient_dim() {
                if dim != n - 1 {
                    return Err(invalid(
                        "base",
                        format!("{b} lives in R^{dim}; the base must live in R^{}", n - 1),
                    ));
                }
            }
            Geometry::Base(b)
        }
        (None, Some(s)) => {
            if let Some(dim) = s.natural_ambient_dim() {
                if dim != n {
                    return Err(invalid("surface", format!("{s} lives in R^{dim}, not R^{n}")));
                }
            }
            Geometry::Surface(s)
        }
        (Some(_), Some(_)) => return Err(invalid("base", "give either `base` or `surface`, not both")),
        (None, None) => return Err(invalid("base", "one of `base` or `surface` is required")),
    };

    let r: Option<f64> = number(pairs, "r")?;
    match (geometry, r) {
        (Geometry::Base(_), None) => return Err(invalid("r", "sweep radius is required with `base`")),
        (_, Some(r)) if !(r > 0.0 && r.is_finite()) => {
            return Err(invalid("r", format!("sweep radius must be positive, got {r}")))
        }
        _ => {}
    }

    let theta0: f64 = number(pairs, "theta0")?.unwrap_or(0.0);
    let epsilon: f64 = number(pairs, "epsilon")?.ok_or_else(|| invalid("epsilon", "window half-width is required"))?;
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&epsilon) {
        return Err(invalid(
            "epsilon",
            format!("{epsilon} violates the angle window bound 0 <= epsilon < pi/2"),
        ));
    }
    let window = AngleWindow::new(theta0, epsilon).map_err(|e| invalid("theta0", e.to_string()))?;

    let d = match pairs.get("d") {
        Some(v) => {
            let coords: Vec<f64> = list(v, "d")?;
            if coords.len() != n {
                return Err(invalid("d", format!("expected {n} coordinates, got {}", coords.len())));
            }
            let v = VecN::new(coords).map_err(|e| invalid("d", e.to_string()))?;
            Direction::new(v).map_err(|e| invalid("d", e.to_string()))?
        }
        None => Direction::last_axis(n),
    };

    let flip_eta = match pairs.get("flip_eta").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(v) => return Err(invalid("flip_eta", format!("expected true or false, got `{v}`"))),
    };

    let chart_dim = n - 1;
    let grid = match pairs.get("grid") {
        Some(v) => {
            let counts: Vec<usize> = list(v, "grid")?;
            match counts.len() {
                1 => vec![counts[0]; chart_dim],
                k if k == chart_dim => counts,
                k => return Err(invalid("grid", format!("expected 1 or {chart_dim} counts, got {k}"))),
            }
        }
        None => {
            let mut g = vec![17; chart_dim];
            g[0] = 33;
            g
        }
    };
    if grid.iter().any(|&c| c < 2) {
        return Err(invalid("grid", "every axis needs at least 2 samples"));
    }

    let jacobian = match pairs.get("jacobian").map(String::as_str) {
        None | Some("analytic") => JacobianMode::Analytic,
        Some("fd") | Some("finite-difference") => JacobianMode::FiniteDifference,
        Some(v) => return Err(invalid("jacobian", format!("expected analytic or fd, got `{v}`"))),
    };

    let start = match pairs.get("start") {
        Some(v) => {
            let coords: Vec<f64> = list(v, "start")?;
            if coords.len() != chart_dim {
                return Err(invalid(
                    "start",
                    format!("expected {chart_dim} chart coordinates, got {}", coords.len()),
                ));
            }
            Some(coords)
        }
        None => None,
    };
    let span: f64 = number(pairs, "span")?.unwrap_or(0.5);
    if !span.is_finite() {
        return Err(invalid("span", "must be finite"));
    }
    let step: f64 = number(pairs, "step")?.unwrap_or(1e-3);
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", "must be positive"));
    }
    let cloud_samples: usize = number(pairs, "cloud_samples")?.unwrap_or(500);
    if cloud_samples < 10 {
        return Err(invalid("cloud_samples", "the direction fit needs at least 10 samples"));
    }

    Ok(RunConfig {
        n,
        geometry,
        r,
        window,
        d,
        flip_eta,
        grid,
        jacobian,
        out: PathBuf::from(pairs.get("out").map_or("out", String::as_str)),
        seed: number(pairs, "seed")?.unwrap_or(0),
        start,
        span,
        step,
        cloud: pairs.get("cloud").map(PathBuf::from),
        cloud_samples,
    })
}
