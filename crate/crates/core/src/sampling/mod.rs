//! Sample points in a box.
//!
//! Every sampler produces points of the unit cube which are then mapped
//! affinely onto the box. Low-discrepancy sequences (Halton, Sobol, Faure)
//! start at index `skip`. Seed 0 leaves them unchanged; any other seed applies
//! a random shift modulo 1 (a Cranley–Patterson rotation), which keeps the
//! low discrepancy and gives independent replicas for different seeds.

mod chaotic;
mod discrepancy;
mod faure;
mod halton;
mod latin;
mod sobol;

pub use chaotic::ChaoticSequence;
pub use discrepancy::discrepancy_estimate;
pub use faure::FaureSequence;
pub use halton::{radical_inverse, HaltonSequence};
pub use latin::latin_hypercube;
pub use sobol::{SobolSequence, SOBOL_MAX_DIMENSION};

use crate::error::{CoreError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Axis-aligned box `[a_1, b_1] x ... x [a_N, b_N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(CoreError::InvalidBox(format!(
                "{} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(CoreError::InvalidBox(format!(
                    "axis {i}: [{a}, {b}] is empty"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Box `[-half_width_i, half_width_i]` on every axis.
    pub fn symmetric(half_widths: &[f64]) -> Result<Self> {
        Self::new(
            half_widths.iter().map(|h| -h).collect(),
            half_widths.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (a, b)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*a, *b);
        }
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (a, b))| (a + t * (b - a)).clamp(*a, *b))
            .collect()
    }

    /// Maps a point of the box into the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (a, b))| (v - a) / (b - a))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    PseudoRandom,
    Halton,
    Sobol,
    Faure,
    LatinHypercube,
    Chaotic,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 6] = [
        SamplerKind::PseudoRandom,
        SamplerKind::Halton,
        SamplerKind::Sobol,
        SamplerKind::Faure,
        SamplerKind::LatinHypercube,
        SamplerKind::Chaotic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::PseudoRandom => "pseudo-random",
            SamplerKind::Halton => "halton",
            SamplerKind::Sobol => "sobol",
            SamplerKind::Faure => "faure",
            SamplerKind::LatinHypercube => "latin-hypercube",
            SamplerKind::Chaotic => "chaotic",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| CoreError::Config(format!("unsupported sampler kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub seed: u64,
    /// Burn-in for the deterministic sequences.
    pub skip: u64,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            skip: 0,
        }
    }

    /// Shift modulo 1 applied to low-discrepancy points.
    fn rotation(&self, dim: usize) -> Vec<f64> {
        if self.seed == 0 {
            return vec![0.0; dim];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..dim).map(|_| rng.random::<f64>()).collect()
    }
}

enum Source {
    Random(ChaCha8Rng),
    Halton(HaltonSequence),
    Sobol(SobolSequence),
    Faure(FaureSequence),
    Chaotic(ChaoticSequence),
    Latin(std::vec::IntoIter<Vec<f64>>),
}

/// Iterator over exactly `count` points of a box.
pub struct Sampler {
    bounds: Bounds,
    source: Source,
    shift: Vec<f64>,
    remaining: usize,
}

impl Sampler {
    pub fn new(spec: &SamplerSpec, bounds: &Bounds, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(CoreError::Config("sample count must be at least 1".into()));
        }
        let dim = bounds.dim();
        let source = match spec.kind {
            SamplerKind::PseudoRandom => Source::Random(ChaCha8Rng::seed_from_u64(spec.seed)),
            SamplerKind::Halton => Source::Halton(HaltonSequence::new(dim, spec.skip)),
            SamplerKind::Sobol => Source::Sobol(SobolSequence::new(dim, spec.skip)?),
            SamplerKind::Faure => Source::Faure(FaureSequence::new(dim, spec.skip)),
            SamplerKind::Chaotic => Source::Chaotic(ChaoticSequence::new(dim, spec.seed)),
            SamplerKind::LatinHypercube => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                Source::Latin(latin_hypercube(dim, count, &mut rng).into_iter())
            }
        };
        let shift = match spec.kind {
            SamplerKind::Halton | SamplerKind::Sobol | SamplerKind::Faure => spec.rotation(dim),
            _ => vec![0.0; dim],
        };
        Ok(Self {
            bounds: bounds.clone(),
            source,
            shift,
            remaining: count,
        })
    }
}

impl Iterator for Sampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let dim = self.bounds.dim();
        let mut unit: Vec<f64> = match &mut self.source {
            Source::Random(rng) => (0..dim).map(|_| rng.random::<f64>()).collect(),
            Source::Halton(s) => s.next_point(),
            Source::Sobol(s) => s.next_point(),
            Source::Faure(s) => s.next_point(),
            Source::Chaotic(s) => s.next_point(),
            Source::Latin(it) => it.next()?,
        };
        for (u, t) in unit.iter_mut().zip(&self.shift) {
            if *t != 0.0 {
                *u += t;
                if *u >= 1.0 {
                    *u -= 1.0;
                }
            }
        }
        Some(self.bounds.from_unit(&unit))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Sampler {}

/// Collects `count` points of `bounds` drawn according to `spec`.
pub fn sample(bounds: &Bounds, count: usize, spec: &SamplerSpec) -> Result<Vec<Vec<f64>>> {
    Ok(Sampler::new(spec, bounds, count)?.collect())
}
