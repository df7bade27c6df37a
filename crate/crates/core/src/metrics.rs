//! Verification of solutions and the RMS deviation metrics between
//! continuation and direct results.

use crate::continuation::{distinct_classes, ContinuationTree};
use crate::error::{CoreError, Result};
use crate::mechanics::{
    center_of_mass, distance_signature, hessian, moment_of_inertia, potential, residual,
    symmetry_orbit_match, HessianReport, PlanarConfiguration, ScaleMatrix, SymmetryMode,
    DEDUP_TOLERANCE,
};
use serde::{Deserialize, Serialize};

/// Quantities recomputed from a configuration alone.
///
/// For colliding configurations only the center of mass and the moment of
/// inertia can be evaluated; the other fields are `None` and `failure` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residual_inf: Option<f64>,
    pub com_norm: f64,
    /// `|I_S - 1|`.
    pub inertia_dev: f64,
    pub lambda: Option<f64>,
    pub hessian: Option<HessianReport>,
    pub failure: Option<String>,
}

impl VerificationReport {
    /// No failure and a residual below `residual_tol`.
    pub fn passed(&self, residual_tol: f64) -> bool {
        self.failure.is_none() && self.residual_inf.is_some_and(|r| r < residual_tol)
    }
}

pub fn verify(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    mode: SymmetryMode,
) -> VerificationReport {
    let mut report = VerificationReport {
        residual_inf: None,
        com_norm: f64::NAN,
        inertia_dev: f64::NAN,
        lambda: None,
        hessian: None,
        failure: None,
    };
    if masses.is_empty() || q.len() != 2 * masses.len() {
        report.failure = Some(format!(
            "{} coordinates for {} masses",
            q.len(),
            masses.len()
        ));
        report.com_norm = 0.0;
        report.inertia_dev = 0.0;
        return report;
    }
    let c = center_of_mass(masses, q);
    report.com_norm = c[0].hypot(c[1]);
    report.inertia_dev = (moment_of_inertia(masses, scale, q) - 1.0).abs();

    let checked = PlanarConfiguration::new(q.to_vec()).and_then(|p| p.check_collisions());
    if let Err(e) = checked {
        report.failure = Some(e.to_string());
        return report;
    }
    match residual(masses, scale, q) {
        Ok(f) => report.residual_inf = Some(f.iter().fold(0.0, |a, v| a.max(v.abs()))),
        Err(e) => report.failure = Some(e.to_string()),
    }
    // lambda = U / I_S; at a normalized solution this is U itself.
    if let Ok(u) = potential(masses, q) {
        report.lambda = Some(u / moment_of_inertia(masses, scale, q));
    }
    if let Ok((_, mut h)) = hessian(masses, scale, q) {
        let dim = 2 * masses.len();
        let expected = match mode {
            SymmetryMode::Central => dim - 1,
            SymmetryMode::Balanced => dim,
        };
        h.nondegenerate = h.rank == expected;
        report.hessian = Some(h);
    }
    report
}

/// `Delta q0_kl` per pair and the aggregate
/// `sqrt(mean_k mean_l Delta q0_kl^2)`.
pub fn delta_q0(tree: &ContinuationTree) -> Result<(Vec<Vec<f64>>, f64)> {
    if tree.refined_solutions.is_empty() {
        return Err(CoreError::Pipeline(
            "continuation tree is not refined".into(),
        ));
    }
    let per: Vec<Vec<f64>> = tree
        .refined_solutions
        .iter()
        .map(|row| row.iter().map(|r| r.delta_q0).collect())
        .collect();
    Ok((per.clone(), two_level_rms(&per)))
}

/// `sqrt` of the mean over groups of the mean of squares within each group.
/// Empty groups are skipped.
pub fn two_level_rms(groups: &[Vec<f64>]) -> f64 {
    let means: Vec<f64> = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64)
        .collect();
    if means.is_empty() {
        return 0.0;
    }
    (means.iter().sum::<f64>() / means.len() as f64).sqrt()
}

/// Which mutual distances decide the nearest continuation solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchDistances {
    /// All `n (n + 1) / 2` pairs.
    #[default]
    AllBodies,
    /// Only pairs among the first `n` bodies. `Delta R_m` still uses all pairs.
    Primaries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub direct: usize,
    pub k: usize,
    pub l: usize,
    pub delta_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub matches: Vec<MatchEntry>,
    /// `sqrt(mean_m Delta R_m^2)`.
    pub delta_r: f64,
    pub delta_q0: f64,
    pub direct_count: usize,
    pub distinct_continued: usize,
    /// `N0_sol(n+1) == N_hat_sol(n+1)`.
    pub counts_agree: bool,
    /// Every direct solution matched a different symmetry class.
    pub one_to_one: bool,
}

fn sorted_distances(q: &[f64], bodies: usize) -> Vec<f64> {
    distance_signature(&q[..2 * bodies]).sorted_distances
}

fn squared_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Matches each direct (n+1)-body solution to the refined continuation
/// solution with the closest sorted distances and computes `Delta R`.
pub fn match_and_delta_r(
    direct: &[Vec<f64>],
    continued: &ContinuationTree,
    by: MatchDistances,
) -> Result<ComparisonReport> {
    let candidates = continued.accepted();
    if direct.is_empty() || candidates.is_empty() {
        return Err(CoreError::Pipeline("nothing to compare".into()));
    }
    let bodies = continued.n() + 1;
    let pairs = bodies * (bodies - 1) / 2;
    let key_bodies = match by {
        MatchDistances::AllBodies => bodies,
        MatchDistances::Primaries => bodies - 1,
    };
    for q in direct {
        if q.len() != 2 * bodies {
            return Err(CoreError::Dimension {
                expected: 2 * bodies,
                actual: q.len(),
            });
        }
    }

    let mode = continued.mode();
    let masses = continued.extended_masses();
    let reps = distinct_classes(continued, mode);
    let class_of = |q: &[f64]| {
        reps.iter().position(|&(k, l)| {
            let r = &continued.refined_solutions[k][l].point;
            symmetry_orbit_match(&masses, r, q, mode, DEDUP_TOLERANCE)
        })
    };

    let cand_full: Vec<Vec<f64>> = candidates
        .iter()
        .map(|(_, r)| sorted_distances(&r.point, bodies))
        .collect();
    let cand_key: Vec<Vec<f64>> = candidates
        .iter()
        .map(|(_, r)| sorted_distances(&r.point, key_bodies))
        .collect();

    let mut matches = Vec::with_capacity(direct.len());
    let mut classes = Vec::with_capacity(direct.len());
    for (m, q) in direct.iter().enumerate() {
        let key = sorted_distances(q, key_bodies);
        let best = cand_key
            .iter()
            .map(|c| squared_diff(&key, c))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("candidates are nonempty");
        let full = sorted_distances(q, bodies);
        let delta_r = (squared_diff(&full, &cand_full[best]) / pairs as f64).sqrt();
        let ((k, l), r) = candidates[best];
        classes.push(class_of(&r.point));
        matches.push(MatchEntry {
            direct: m,
            k,
            l,
            delta_r,
        });
    }

    let delta_r =
        (matches.iter().map(|e| e.delta_r * e.delta_r).sum::<f64>() / matches.len() as f64).sqrt();
    let mut seen = classes.clone();
    seen.sort();
    seen.dedup();
    let one_to_one = classes.iter().all(Option::is_some) && seen.len() == classes.len();
    let (_, dq0) = delta_q0(continued)?;
    Ok(ComparisonReport {
        matches,
        delta_r,
        delta_q0: dq0,
        direct_count: direct.len(),
        distinct_continued: reps.len(),
        counts_agree: direct.len() == reps.len(),
        one_to_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{step3_refine, RefinedSolution};
    use crate::local_solver::{LocalSolverSettings, Termination};
    use crate::mechanics::normalize;

    #[test]
    fn closed_form_pair_verifies() {
        let x = 5f64.sqrt();
        let r = verify(
            &[0.1, 0.1],
            &ScaleMatrix::identity(),
            &[-x, 0.0, x, 0.0],
            SymmetryMode::Central,
        );
        assert!(r.residual_inf.unwrap() < 1e-14);
        assert_eq!(r.com_norm, 0.0);
        assert!(r.inertia_dev < 1e-14);
        assert!(r.passed(1e-13));
    }

    #[test]
    fn perturbed_pair_has_visible_residual() {
        // unit masses, normalized: x = 1 / sqrt(2)
        let x = 0.5f64.sqrt();
        let s = ScaleMatrix::identity();
        let exact = verify(&[1.0, 1.0], &s, &[-x, 0.0, x, 0.0], SymmetryMode::Central);
        assert!(exact.residual_inf.unwrap() < 1e-14);
        let r = verify(
            &[1.0, 1.0],
            &s,
            &[-x + 1e-3, 0.0, x, 0.0],
            SymmetryMode::Central,
        );
        let res = r.residual_inf.unwrap();
        assert!(res > 1e-5 && res < 1e-1, "{res}");
    }

    #[test]
    fn equilateral_triangle_has_rank_five() {
        let s = (10.0f64 / 3.0).sqrt();
        let q: Vec<f64> = (0..3)
            .flat_map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                [s * a.cos(), s * a.sin()]
            })
            .collect();
        let r = verify(
            &[0.1; 3],
            &ScaleMatrix::identity(),
            &q,
            SymmetryMode::Central,
        );
        let h = r.hessian.unwrap();
        assert_eq!(h.rank, 5);
        assert!(h.nondegenerate);
    }

    #[test]
    fn collision_is_a_failed_verification() {
        let r = verify(
            &[0.1, 0.1],
            &ScaleMatrix::identity(),
            &[1.0, 0.0, 1.0, 0.0],
            SymmetryMode::Central,
        );
        assert!(r.failure.is_some());
        assert!(r.residual_inf.is_none());
        assert!(!r.passed(1.0));
    }

    #[test]
    fn normalized_configurations_verify_their_normalization() {
        let q = [0.3, -1.2, 2.0, 0.4, -0.7, 0.9, 1.1, 1.7];
        let m = [0.1, 0.2, 0.3, 0.4];
        let s = ScaleMatrix::new(1.0, 0.3).unwrap();
        let n = normalize(&m, &s, &q).unwrap();
        let r = verify(&m, &s, n.config.as_slice(), SymmetryMode::Balanced);
        assert!(r.com_norm <= 1e-12 && r.inertia_dev <= 1e-12);
        assert!((r.lambda.unwrap() - n.lambda).abs() < 1e-14);
    }

    fn synthetic_tree(offsets: &[Vec<Vec<f64>>]) -> ContinuationTree {
        ContinuationTree {
            masses: vec![0.1],
            scale: ScaleMatrix::identity(),
            n_body_solutions: offsets.iter().map(|_| vec![1.0, 0.0]).collect(),
            restricted_solutions: offsets
                .iter()
                .map(|row| vec![[2.0, 0.0]; row.len()])
                .collect(),
            small_mass: Some(0.0),
            refined_solutions: offsets
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|d| RefinedSolution {
                            point: vec![],
                            objective: 0.0,
                            residual_inf: 0.0,
                            accepted: true,
                            termination: Termination::Residual,
                            delta_q0: d[0],
                        })
                        .collect()
                })
                .collect(),
        }
    }

    #[test]
    fn delta_q0_uses_two_level_mean() {
        // k = 0 has values 1 and 3 (mean square 5), k = 1 has 2 (mean square 4)
        let t = synthetic_tree(&[vec![vec![1.0], vec![3.0]], vec![vec![2.0]]]);
        let (per, agg) = delta_q0(&t).unwrap();
        assert_eq!(per, vec![vec![1.0, 3.0], vec![2.0]]);
        assert!((agg - 4.5f64.sqrt()).abs() < 1e-15);
        let swapped = synthetic_tree(&[vec![vec![2.0]], vec![vec![3.0], vec![1.0]]]);
        assert_eq!(delta_q0(&swapped).unwrap().1, agg);
    }

    fn pair_tree() -> ContinuationTree {
        let x = 5f64.sqrt();
        let h = 15f64.sqrt();
        let t = ContinuationTree {
            masses: vec![0.1, 0.1],
            scale: ScaleMatrix::identity(),
            n_body_solutions: vec![vec![-x, 0.0, x, 0.0]],
            restricted_solutions: vec![vec![[0.0, h], [0.0, -h], [0.0, 0.0]]],
            small_mass: None,
            refined_solutions: vec![],
        };
        step3_refine(&t, 0.0, 0.05, &LocalSolverSettings::default()).unwrap()
    }

    #[test]
    fn identical_sets_compare_exactly() {
        let t = pair_tree();
        let direct = vec![
            t.refined_solutions[0][0].point.clone(),
            t.refined_solutions[0][2].point.clone(),
        ];
        let rep = match_and_delta_r(&direct, &t, MatchDistances::AllBodies).unwrap();
        assert_eq!(rep.delta_r, 0.0);
        assert!(rep.one_to_one && rep.counts_agree);
        assert_eq!((rep.matches[1].k, rep.matches[1].l), (0, 2));
    }

    #[test]
    fn relabeled_direct_solutions_keep_delta_r() {
        let t = pair_tree();
        let mut q = t.refined_solutions[0][2].point.clone();
        q[0] += 1e-4;
        let a = match_and_delta_r(&[q.clone()], &t, MatchDistances::AllBodies).unwrap();
        q.swap(0, 2);
        q.swap(1, 3);
        let b = match_and_delta_r(&[q], &t, MatchDistances::AllBodies).unwrap();
        assert!(a.delta_r > 0.0);
        assert_eq!(a.delta_r, b.delta_r);
        let p = match_and_delta_r(
            &[t.refined_solutions[0][1].point.clone()],
            &t,
            MatchDistances::Primaries,
        )
        .unwrap();
        assert_eq!(p.matches.len(), 1);
    }

    #[test]
    fn wrong_length_is_a_dimension_error() {
        let t = pair_tree();
        let err = match_and_delta_r(&[vec![0.0; 4]], &t, MatchDistances::AllBodies).unwrap_err();
        assert!(matches!(err, CoreError::Dimension { .. }));
    }
}
