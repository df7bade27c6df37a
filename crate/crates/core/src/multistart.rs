//! Stochastic multistart search for all zeros of a residual system in a box.
//!
//! Samples are drawn from the box; a sample becomes a start point unless it
//! lies within the typical distance of a known solution or of an earlier start
//! point. Each start point is refined by the local solver, and converged
//! points below [`ACCEPTANCE_THRESHOLD`] are registered unless they are
//! equivalent to a registered solution. The loop ends after `sample_count`
//! samples or, when the plateau rule is enabled, once `k_star` consecutive
//! samples brought no new solution.
//!
//! Samples are processed in chunks. Start decisions for a chunk are taken
//! against the state at the start of the chunk, the local searches of the
//! chunk may run in parallel, and their results are committed in sample
//! order. The outcome therefore does not depend on the number of threads.

use crate::error::{CoreError, Result};
use crate::local_solver::{minimize, LocalResult, LocalSolverSettings, ResidualSystem};
use crate::mechanics::{objective, symmetry_orbit_match, SymmetryMode, DEDUP_TOLERANCE};
use crate::sampling::{Bounds, Sampler, SamplerKind, SamplerSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A local result is a solution when `F = |f|^2 / 2` is below this.
pub const ACCEPTANCE_THRESHOLD: f64 = 1e-20;

/// Samples between two progress reports.
pub const PROGRESS_INTERVAL: usize = 10_000;

/// A residual system with the box to search and the rules for identifying solutions.
pub trait MultistartProblem: ResidualSystem + Sync {
    fn bounds(&self) -> &Bounds;

    /// Post-processing of a converged point before registration, for
    /// instance normalization. `None` discards the point.
    fn finalize(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        Some(x)
    }

    fn identification(&self) -> Identification;
}

/// When two solutions count as the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Identification {
    /// Equal up to the symmetry group of `mode` and permutations of equal masses.
    Orbit {
        masses: Vec<f64>,
        mode: SymmetryMode,
        tolerance: f64,
    },
    /// Equal coordinates within `tolerance` in the max norm.
    Exact { tolerance: f64 },
}

impl Identification {
    pub fn orbit(masses: Vec<f64>, mode: SymmetryMode) -> Self {
        Identification::Orbit {
            masses,
            mode,
            tolerance: DEDUP_TOLERANCE,
        }
    }

    pub fn same(&self, a: &[f64], b: &[f64]) -> bool {
        match self {
            Identification::Orbit {
                masses,
                mode,
                tolerance,
            } => symmetry_orbit_match(masses, a, b, *mode, *tolerance),
            Identification::Exact { tolerance } => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= *tolerance)
            }
        }
    }

    pub fn mode(&self) -> Option<SymmetryMode> {
        match self {
            Identification::Orbit { mode, .. } => Some(*mode),
            Identification::Exact { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub point: Vec<f64>,
    pub objective: f64,
    pub residual_inf: f64,
    /// Index of the sample whose local search produced this record.
    pub sample_index: usize,
}

/// The set of distinct solutions found so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRegistry {
    records: Vec<SolutionRecord>,
    identification: Identification,
}

impl SolutionRegistry {
    pub fn new(identification: Identification) -> Self {
        Self {
            records: Vec::new(),
            identification,
        }
    }

    pub fn records(&self) -> &[SolutionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<SolutionRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn identification(&self) -> &Identification {
        &self.identification
    }

    pub fn mode(&self) -> Option<SymmetryMode> {
        self.identification.mode()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.records
            .iter()
            .any(|r| self.identification.same(&r.point, x))
    }

    /// Inserts `candidate` if it converged below [`ACCEPTANCE_THRESHOLD`] and
    /// is not equivalent to a registered solution.
    pub fn register(&mut self, candidate: &LocalResult) -> bool {
        self.register_at(candidate, self.records.len())
    }

    pub fn register_at(&mut self, candidate: &LocalResult, sample_index: usize) -> bool {
        if !candidate.converged
            || !(candidate.objective < ACCEPTANCE_THRESHOLD)
            || self.contains(&candidate.point)
        {
            return false;
        }
        self.records.push(SolutionRecord {
            point: candidate.point.clone(),
            objective: candidate.objective,
            residual_inf: candidate.residual_inf,
            sample_index,
        });
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartSettings {
    pub sample_count: usize,
    /// Plateau length in samples; `None` exhausts all samples.
    pub k_star: Option<usize>,
    pub sampler: SamplerSpec,
    /// Orbit identification tolerance (ignored for exact identification).
    pub dedup_tol: f64,
    pub typical_distance_init: f64,
    /// Multiplier on the typical distance in the start-point test; 0 accepts every sample.
    pub start_filter_scale: f64,
    pub local: LocalSolverSettings,
    /// Run the local searches of a chunk on the rayon thread pool.
    pub parallel: bool,
    pub chunk_size: usize,
}

impl Default for MultistartSettings {
    fn default() -> Self {
        Self {
            sample_count: 1_000_000,
            k_star: Some(200),
            sampler: SamplerSpec::new(SamplerKind::Faure, 0),
            dedup_tol: DEDUP_TOLERANCE,
            typical_distance_init: 0.0,
            start_filter_scale: 0.1,
            local: LocalSolverSettings::default(),
            parallel: true,
            chunk_size: 16,
        }
    }
}

impl MultistartSettings {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(CoreError::Config("sample count must be at least 1".into()));
        }
        if self.k_star == Some(0) {
            return Err(CoreError::Config("k* must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(CoreError::Config("chunk size must be at least 1".into()));
        }
        if !(self.dedup_tol > 0.0)
            || !(self.typical_distance_init >= 0.0)
            || !(self.start_filter_scale >= 0.0)
        {
            return Err(CoreError::Config("tolerances must be positive".into()));
        }
        self.local.validate()
    }
}

/// Progress snapshot, printed as a tab-separated line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub samples: usize,
    pub solutions: usize,
    pub typical_distance: f64,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            self.samples, self.solutions, self.typical_distance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultistartDiagnostics {
    pub samples_visited: usize,
    pub local_searches: usize,
    /// Local searches that did not end at a point below the acceptance threshold.
    pub failed_searches: usize,
    pub rejected_samples: usize,
    pub stopped_by_plateau: bool,
    pub typical_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartOutcome {
    pub registry: SolutionRegistry,
    pub diagnostics: MultistartDiagnostics,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Whether `s` is far enough from every known minimum and every earlier start point.
pub fn is_start_point(
    s: &[f64],
    minima: &[SolutionRecord],
    starts: &[Vec<f64>],
    typical_distance: f64,
) -> bool {
    if typical_distance <= 0.0 {
        return true;
    }
    minima
        .iter()
        .all(|m| distance(s, &m.point) >= typical_distance)
        && starts.iter().all(|p| distance(s, p) >= typical_distance)
}

/// Runs the search without progress reporting.
pub fn run<P: MultistartProblem + ?Sized>(
    problem: &P,
    settings: &MultistartSettings,
) -> Result<MultistartOutcome> {
    run_with_progress(problem, settings, &mut |_| {})
}

pub fn run_with_progress<P: MultistartProblem + ?Sized>(
    problem: &P,
    settings: &MultistartSettings,
    progress: &mut dyn FnMut(&Progress),
) -> Result<MultistartOutcome> {
    settings.validate()?;
    let bounds = problem.bounds();
    if bounds.dim() != problem.dim() {
        return Err(CoreError::Dimension {
            expected: problem.dim(),
            actual: bounds.dim(),
        });
    }
    let identification = match problem.identification() {
        Identification::Orbit { masses, mode, .. } => Identification::Orbit {
            masses,
            mode,
            tolerance: settings.dedup_tol,
        },
        exact => exact,
    };
    let mut registry = SolutionRegistry::new(identification);
    let mut diag = MultistartDiagnostics {
        typical_distance: settings.typical_distance_init,
        ..Default::default()
    };
    let mut sampler = Sampler::new(&settings.sampler, bounds, settings.sample_count)?;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut distance_sum = 0.0;
    let mut last_insert = 0usize;
    let mut index = 0usize;

    'outer: while index < settings.sample_count {
        let chunk: Vec<Vec<f64>> = sampler.by_ref().take(settings.chunk_size).collect();
        if chunk.is_empty() {
            break;
        }
        let td = settings.start_filter_scale * diag.typical_distance;
        let mut chosen: Vec<Option<Vec<f64>>> = Vec::with_capacity(chunk.len());
        for s in chunk {
            if is_start_point(&s, registry.records(), &starts, td) {
                starts.push(s.clone());
                chosen.push(Some(s));
            } else {
                chosen.push(None);
            }
        }
        let search = |s: &Option<Vec<f64>>| {
            s.as_ref()
                .map(|s| finish(problem, minimize(problem, bounds, s, &settings.local)))
        };
        let results: Vec<Option<(Vec<f64>, Option<LocalResult>)>> = if settings.parallel {
            chosen.par_iter().map(search).collect()
        } else {
            chosen.iter().map(search).collect()
        };

        for (start, result) in chosen.iter().zip(results) {
            match (start, result) {
                (Some(s), Some((raw, candidate))) => {
                    diag.local_searches += 1;
                    distance_sum += distance(s, &raw);
                    diag.typical_distance = distance_sum / diag.local_searches as f64;
                    match candidate {
                        Some(c) if registry.register_at(&c, index) => last_insert = index,
                        Some(_) => {}
                        None => diag.failed_searches += 1,
                    }
                }
                _ => diag.rejected_samples += 1,
            }
            index += 1;
            diag.samples_visited = index;
            if index.is_multiple_of(PROGRESS_INTERVAL) {
                progress(&Progress {
                    samples: index,
                    solutions: registry.len(),
                    typical_distance: diag.typical_distance,
                });
            }
            if let Some(k) = settings.k_star {
                if index > last_insert + k && index < settings.sample_count {
                    diag.stopped_by_plateau = true;
                    break 'outer;
                }
            }
        }
    }
    Ok(MultistartOutcome {
        registry,
        diagnostics: diag,
    })
}

/// Finalizes a local result. Returns the raw end point and, when it is a
/// solution, the finalized candidate with its residual recomputed.
fn finish<P: MultistartProblem + ?Sized>(
    problem: &P,
    result: LocalResult,
) -> (Vec<f64>, Option<LocalResult>) {
    let raw = result.point.clone();
    if !result.converged || !(result.objective < ACCEPTANCE_THRESHOLD) {
        return (raw, None);
    }
    let Some(point) = problem.finalize(result.point.clone()) else {
        return (raw, None);
    };
    let mut f = vec![0.0; problem.residual_len()];
    if problem.residual(&point, &mut f).is_err() {
        return (raw, None);
    }
    let obj = objective(&f);
    if !(obj < ACCEPTANCE_THRESHOLD) {
        return (raw, None);
    }
    let candidate = LocalResult {
        point,
        objective: obj,
        residual_inf: f.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        ..result
    };
    (raw, Some(candidate))
}
