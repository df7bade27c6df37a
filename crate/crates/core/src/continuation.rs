//! (n+1)-body solutions by continuation from the small mass `0`.
//!
//! Step 1 finds all normalized n-body solutions. Step 2 finds, for each of
//! them, every critical point of the restricted potential of a massless
//! particle. Step 3 uses each pair as the initial guess of a local search for
//! the full (n+1)-body system with the small mass switched on, confined to the
//! box `|x - x0| <= delta |x0|` around the guess.

use crate::error::{CoreError, Result};
use crate::local_solver::ResidualSystem;
use crate::local_solver::{minimize, LocalResult, LocalSolverSettings, Termination};
use crate::mechanics::{
    canonical_orientation, objective, rotate, symmetry_orbit_match, MassSystem, ScaleMatrix,
    SymmetryMode, DEDUP_TOLERANCE,
};
use crate::multistart::{self, MultistartSettings, Progress, ACCEPTANCE_THRESHOLD};
use crate::problems::{delta_box, ExtendedProblem, NBodyProblem, RestrictedProblem};
use crate::sampling::{Bounds, SamplerKind, SamplerSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Restricted critical points must have a gradient below this in the max norm.
pub const RESTRICTED_GRADIENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    pub delta: f64,
    pub n_body: MultistartSettings,
    pub restricted: MultistartSettings,
    /// Local solver used in step 3.
    pub refine: LocalSolverSettings,
    /// Mass ratio `m_{n+1} / m`.
    pub epsilon: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            delta: 5e-2,
            n_body: MultistartSettings::default(),
            restricted: MultistartSettings {
                sample_count: 50_000,
                k_star: None,
                sampler: SamplerSpec::new(SamplerKind::PseudoRandom, 0),
                ..MultistartSettings::default()
            },
            refine: LocalSolverSettings::default(),
            epsilon: 1e-8,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CoreError::Config(format!(
                "delta {} is not in (0, 1)",
                self.delta
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(CoreError::Config(format!(
                "epsilon {} is negative",
                self.epsilon
            )));
        }
        self.n_body.validate()?;
        self.restricted.validate()?;
        self.refine.validate()
    }
}

/// Step 3 outcome for one pair `(k, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedSolution {
    /// All `n + 1` points, small body last.
    pub point: Vec<f64>,
    pub objective: f64,
    pub residual_inf: f64,
    /// Converged with `F` below the acceptance threshold.
    pub accepted: bool,
    pub termination: Termination,
    /// RMS distance of the `n + 1` points from the initial guess.
    pub delta_q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTree {
    pub masses: Vec<f64>,
    pub scale: ScaleMatrix,
    /// Normalized n-body solutions, indexed by `k`.
    pub n_body_solutions: Vec<Vec<f64>>,
    /// Restricted critical points of base `k`, indexed by `l`.
    pub restricted_solutions: Vec<Vec<[f64; 2]>>,
    /// Small mass used in step 3, if it ran.
    pub small_mass: Option<f64>,
    /// Refinements in the same `(k, l)` layout; empty until step 3 runs.
    pub refined_solutions: Vec<Vec<RefinedSolution>>,
}

impl ContinuationTree {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn mode(&self) -> SymmetryMode {
        self.scale.mode()
    }

    /// `N_sol(n)`.
    pub fn n_sol_n(&self) -> usize {
        self.n_body_solutions.len()
    }

    /// `N_sol(k, n)` per base.
    pub fn n_sol_per_base(&self) -> Vec<usize> {
        self.restricted_solutions.iter().map(Vec::len).collect()
    }

    /// `N_sol(n+1) = sum_k N_sol(k, n)`.
    pub fn n_sol_n1(&self) -> usize {
        self.restricted_solutions.iter().map(Vec::len).sum()
    }

    /// The initial guess `(q0^(k), p0^(k,l))` on `2n + 2` coordinates.
    pub fn initial_guess(&self, k: usize, l: usize) -> Vec<f64> {
        let mut g = self.n_body_solutions[k].clone();
        g.extend_from_slice(&self.restricted_solutions[k][l]);
        g
    }

    /// `(k, l)` of every refinement that did not produce a solution.
    pub fn failed_refinements(&self) -> Vec<(usize, usize)> {
        self.refined_solutions
            .iter()
            .enumerate()
            .flat_map(|(k, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, r)| !r.accepted)
                    .map(move |(l, _)| (k, l))
            })
            .collect()
    }

    /// The `n + 1` masses with the small mass of step 3 (0 before it ran).
    pub fn extended_masses(&self) -> Vec<f64> {
        let mut m = self.masses.clone();
        m.push(self.small_mass.unwrap_or(0.0));
        m
    }

    /// Accepted refined solutions with their `(k, l)` index.
    pub fn accepted(&self) -> Vec<((usize, usize), &RefinedSolution)> {
        self.refined_solutions
            .iter()
            .enumerate()
            .flat_map(|(k, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, r)| r.accepted)
                    .map(move |(l, r)| ((k, l), r))
            })
            .collect()
    }
}

/// Step 1: all normalized n-body solutions.
///
/// Central configurations are rotated into a canonical orientation, so that
/// configurations with a reflection axis are symmetric about a coordinate axis.
pub fn step1_nbody(
    masses: &MassSystem,
    scale: ScaleMatrix,
    settings: &MultistartSettings,
) -> Result<Vec<Vec<f64>>> {
    step1_nbody_with_progress(masses, scale, settings, &mut |_| {})
}

/// [`step1_nbody`] reporting multistart progress.
pub fn step1_nbody_with_progress(
    masses: &MassSystem,
    scale: ScaleMatrix,
    settings: &MultistartSettings,
    progress: &mut dyn FnMut(&Progress),
) -> Result<Vec<Vec<f64>>> {
    let problem = NBodyProblem::new(masses, scale)?;
    let outcome = multistart::run_with_progress(&problem, settings, progress)?;
    if outcome.registry.is_empty() {
        return Err(CoreError::Pipeline("no base solutions".into()));
    }
    Ok(outcome
        .registry
        .into_records()
        .into_iter()
        .map(|r| {
            if scale.is_central() {
                canonical_orientation(masses.masses(), &r.point)
            } else {
                r.point
            }
        })
        .collect())
}

/// Step 2: all restricted critical points of one base solution.
pub fn step2_restricted(
    masses: &MassSystem,
    scale: ScaleMatrix,
    base: &[f64],
    settings: &MultistartSettings,
) -> Result<Vec<[f64; 2]>> {
    let problem = RestrictedProblem::new(masses, scale, base)?;
    let outcome = multistart::run(&problem, settings)?;
    Ok(outcome
        .registry
        .records()
        .iter()
        .filter(|r| r.residual_inf < RESTRICTED_GRADIENT_TOLERANCE)
        .map(|r| [r.point[0], r.point[1]])
        .collect())
}

/// Tree of steps 1 and 2, before refinement.
pub fn build_tree(
    masses: &MassSystem,
    scale: ScaleMatrix,
    settings: &ContinuationSettings,
) -> Result<ContinuationTree> {
    settings.validate()?;
    let bases = step1_nbody(masses, scale, &settings.n_body)?;
    tree_from_bases(masses, scale, bases, &settings.restricted)
}

/// Step 2 for given base solutions.
pub fn tree_from_bases(
    masses: &MassSystem,
    scale: ScaleMatrix,
    bases: Vec<Vec<f64>>,
    restricted: &MultistartSettings,
) -> Result<ContinuationTree> {
    let restricted = bases
        .par_iter()
        .map(|b| step2_restricted(masses, scale, b, restricted))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuationTree {
        masses: masses.masses().to_vec(),
        scale,
        n_body_solutions: bases,
        restricted_solutions: restricted,
        small_mass: None,
        refined_solutions: Vec::new(),
    })
}

/// RMS distance between corresponding points of two configurations.
pub fn rms_point_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / n as f64).sqrt()
}

/// Undoes the rotation a refined central configuration picked up along the
/// rotational null direction, keeping the result only if it still solves the
/// system inside the box.
fn align_rotation(problem: &ExtendedProblem, bounds: &Bounds, guess: &[f64], r: &mut LocalResult) {
    let point = &r.point;
    let (mut cross, mut dot) = (0.0, 0.0);
    for (g, p) in guess.chunks_exact(2).zip(point.chunks_exact(2)) {
        cross += g[0] * p[1] - g[1] * p[0];
        dot += g[0] * p[0] + g[1] * p[1];
    }
    let aligned = rotate(point, -cross.atan2(dot));
    if !bounds.contains(&aligned) {
        return;
    }
    let mut f = vec![0.0; problem.residual_len()];
    if problem.residual(&aligned, &mut f).is_err() {
        return;
    }
    let value = objective(&f);
    if value < ACCEPTANCE_THRESHOLD {
        r.point = aligned;
        r.objective = value;
        r.residual_inf = f.iter().fold(0.0, |a, v| a.max(v.abs()));
    }
}

/// Step 3: local refinement of every `(k, l)` with small mass `epsilon * m`,
/// where `m` is the smallest primary mass.
pub fn step3_refine(
    tree: &ContinuationTree,
    epsilon: f64,
    delta: f64,
    local: &LocalSolverSettings,
) -> Result<ContinuationTree> {
    let m = tree.masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let system = MassSystem::new(tree.masses.clone())?.with_small_mass(epsilon * m)?;
    let jobs: Vec<(usize, usize)> = tree
        .restricted_solutions
        .iter()
        .enumerate()
        .flat_map(|(k, row)| (0..row.len()).map(move |l| (k, l)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(k, l)| {
            let guess = tree.initial_guess(k, l);
            let bounds = delta_box(&guess, delta)?;
            let problem = ExtendedProblem::with_bounds(&system, tree.scale, bounds.clone())?;
            let mut r = minimize(&problem, &bounds, &guess, local);
            if tree.scale.is_central() && r.converged {
                align_rotation(&problem, &bounds, &guess, &mut r);
            }
            Ok(RefinedSolution {
                delta_q0: rms_point_distance(&r.point, &guess),
                accepted: r.converged && r.objective < ACCEPTANCE_THRESHOLD,
                objective: r.objective,
                residual_inf: r.residual_inf,
                termination: r.termination,
                point: r.point,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut refined: Vec<Vec<RefinedSolution>> = tree
        .restricted_solutions
        .iter()
        .map(|row| Vec::with_capacity(row.len()))
        .collect();
    for ((k, _), r) in jobs.into_iter().zip(results) {
        refined[k].push(r);
    }
    Ok(ContinuationTree {
        small_mass: Some(system.small_mass()),
        refined_solutions: refined,
        ..tree.clone()
    })
}

/// Steps 1 to 3 with `masses` as primaries and `settings.epsilon` as mass ratio.
pub fn run_continuation(
    masses: &MassSystem,
    scale: ScaleMatrix,
    settings: &ContinuationSettings,
) -> Result<ContinuationTree> {
    let tree = build_tree(masses, scale, settings)?;
    step3_refine(&tree, settings.epsilon, settings.delta, &settings.refine)
}

/// Representatives of the symmetry classes among the accepted refined
/// solutions, as `(k, l)` indices.
pub fn distinct_classes(tree: &ContinuationTree, mode: SymmetryMode) -> Vec<(usize, usize)> {
    let masses = tree.extended_masses();
    let mut reps: Vec<((usize, usize), &[f64])> = Vec::new();
    for (kl, r) in tree.accepted() {
        let known = reps
            .iter()
            .any(|(_, q)| symmetry_orbit_match(&masses, q, &r.point, mode, DEDUP_TOLERANCE));
        if !known {
            reps.push((kl, &r.point));
        }
    }
    reps.into_iter().map(|(kl, _)| kl).collect()
}

/// `N0_sol(n+1)`: number of symmetry classes among the refined solutions.
pub fn quotient_distinct(tree: &ContinuationTree, mode: SymmetryMode) -> usize {
    distinct_classes(tree, mode).len()
}
