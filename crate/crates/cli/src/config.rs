//! Run configuration from flat `key = value` files or JSON.
//!
//! Keys left out fall back to the experiment defaults, which depend on the
//! method (continuation or direct) and on the symmetry mode.

use crate::error::{CliError, Result};
use balconf::continuation::ContinuationSettings;
use balconf::multistart::MultistartSettings;
use balconf::sampling::{SamplerKind, SamplerSpec};
use balconf::{MassSystem, ScaleMatrix, SymmetryMode};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cc,
    Bc,
}

impl Mode {
    pub fn symmetry(self) -> SymmetryMode {
        match self {
            Mode::Cc => SymmetryMode::Central,
            Mode::Bc => SymmetryMode::Balanced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Continuation,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub mass: f64,
    pub epsilon: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub mode: Mode,
    pub method: Method,
    pub sampler: SamplerKind,
    pub sample_count: usize,
    pub k_star: usize,
    pub restricted_sample_count: usize,
    pub delta: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// Keys as written in a configuration file; everything is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub mass: Option<f64>,
    pub epsilon: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub mode: Option<Mode>,
    pub method: Option<Method>,
    pub sampler: Option<SamplerKind>,
    pub sample_count: Option<usize>,
    pub k_star: Option<usize>,
    pub restricted_sample_count: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub mode: Option<Mode>,
}

enum KeyType {
    Count,
    Real,
    Text,
}

fn key_type(key: &str) -> Option<KeyType> {
    Some(match key {
        "n" | "sample_count" | "k_star" | "restricted_sample_count" | "seed" => KeyType::Count,
        "mass" | "epsilon" | "sigma_x" | "sigma_y" | "delta" => KeyType::Real,
        "mode" | "method" | "sampler" | "output_dir" => KeyType::Text,
        _ => return None,
    })
}

/// Parses configuration text; JSON when the first non-blank character is `{`.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str::<Value>(text)
            .map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?
    } else {
        Value::Object(parse_flat(text)?)
    };
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Config(format!("key '{}': {}", e.path(), e.inner())))
}

fn parse_flat(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::Config(format!("line {}: {msg}", number + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected 'key = value', found '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let kind = key_type(key).ok_or_else(|| bad(format!("unknown key '{key}'")))?;
        let parsed = match kind {
            KeyType::Count => {
                // counts may be written as 1e6
                let v: f64 = value
                    .parse()
                    .map_err(|_| bad(format!("'{key}' expects an integer, found '{value}'")))?;
                if !(v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)) {
                    return Err(bad(format!(
                        "'{key}' expects a non-negative integer, found '{value}'"
                    )));
                }
                Value::from(v as u64)
            }
            KeyType::Real => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| bad(format!("'{key}' expects a number, found '{value}'")))?;
                if !v.is_finite() {
                    return Err(bad(format!("'{key}' must be finite")));
                }
                Value::from(v)
            }
            KeyType::Text => Value::from(value),
        };
        if map.insert(key.to_string(), parsed).is_some() {
            return Err(bad(format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

impl RunConfig {
    /// Fills in defaults for `method` and checks every field.
    pub fn resolve(file: ConfigFile, overrides: &Overrides, method: Method) -> Result<Self> {
        if let Some(m) = file.method {
            if m != method {
                return Err(CliError::Config(format!(
                    "configuration requests method {m:?} but the command runs {method:?}"
                )));
            }
        }
        let mode = overrides.mode.or(file.mode);
        let sigma_x = file.sigma_x.unwrap_or(1.0);
        let sigma_y = match (file.sigma_y, mode) {
            (Some(s), _) => s,
            (None, Some(Mode::Bc)) => 0.3,
            (None, _) => sigma_x,
        };
        let implied = if sigma_x == sigma_y {
            Mode::Cc
        } else {
            Mode::Bc
        };
        let mode = match mode {
            Some(Mode::Bc) if implied == Mode::Cc => {
                return Err(CliError::Config(format!(
                    "mode bc needs sigma_x != sigma_y, got sigma_x = sigma_y = {sigma_x}"
                )))
            }
            Some(Mode::Cc) if implied == Mode::Bc => {
                return Err(CliError::Config(format!(
                    "mode cc needs sigma_x = sigma_y, got {sigma_x} and {sigma_y}"
                )))
            }
            _ => implied,
        };
        let (sampler, sample_count, k_star) = match method {
            Method::Continuation => (SamplerKind::Faure, 1_000_000, 200),
            Method::Direct => (SamplerKind::Chaotic, 9_000_000, 3000),
        };
        let cfg = RunConfig {
            n: file.n.unwrap_or(4),
            mass: file.mass.unwrap_or(0.1),
            epsilon: overrides.epsilon.or(file.epsilon).unwrap_or(1e-8),
            sigma_x,
            sigma_y,
            mode,
            method,
            sampler: file.sampler.unwrap_or(sampler),
            sample_count: file.sample_count.unwrap_or(sample_count),
            k_star: file.k_star.unwrap_or(k_star),
            restricted_sample_count: file.restricted_sample_count.unwrap_or(50_000),
            delta: overrides.delta.or(file.delta).unwrap_or(0.05),
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from(".")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.n < 2 {
            return fail(format!("n = {} but at least 2 bodies are needed", self.n));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return fail(format!("mass {} must be positive", self.mass));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon {} must be non-negative", self.epsilon));
        }
        if !(self.sigma_x > 0.0 && self.sigma_y > 0.0) {
            return fail(format!(
                "sigma ({}, {}) must be positive",
                self.sigma_x, self.sigma_y
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta {} must lie in (0, 1)", self.delta));
        }
        if self.sample_count == 0 || self.k_star == 0 || self.restricted_sample_count == 0 {
            return fail("sample counts and k_star must be positive".into());
        }
        Ok(())
    }

    pub fn masses(&self) -> Result<MassSystem> {
        Ok(MassSystem::equal(self.n, self.mass)?)
    }

    /// Primaries plus the small mass `epsilon * mass`.
    pub fn extended_masses(&self) -> Result<MassSystem> {
        Ok(self.masses()?.with_small_mass(self.epsilon * self.mass)?)
    }

    pub fn scale(&self) -> Result<ScaleMatrix> {
        Ok(ScaleMatrix::new(self.sigma_x, self.sigma_y)?)
    }

    pub fn sampler_spec(&self) -> SamplerSpec {
        SamplerSpec::new(self.sampler, self.seed)
    }

    /// Multistart settings for the n-body step or the direct method.
    pub fn multistart(&self, parallel: bool) -> MultistartSettings {
        MultistartSettings {
            sample_count: self.sample_count,
            k_star: Some(self.k_star),
            sampler: self.sampler_spec(),
            parallel,
            ..MultistartSettings::default()
        }
    }

    pub fn continuation(&self, parallel: bool) -> ContinuationSettings {
        let mut s = ContinuationSettings {
            delta: self.delta,
            epsilon: self.epsilon,
            n_body: self.multistart(parallel),
            ..ContinuationSettings::default()
        };
        s.restricted.sample_count = self.restricted_sample_count;
        s.restricted.sampler.seed = self.seed;
        s.restricted.parallel = parallel;
        s
    }
}
