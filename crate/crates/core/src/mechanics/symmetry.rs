//! Symmetry operations and solution identification.
//!
//! Two solutions are identified when one maps onto the other under a
//! permutation of equal masses combined with an element of the admissible
//! point group: all of O(2) for central configurations, and
//! `{id, rotation by pi, reflect-x, reflect-y}` for balanced ones.

use super::SymmetryMode;
use serde::{Deserialize, Serialize};

/// Default identification tolerance, used both for signature comparison and
/// for the RMS point distance after alignment.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

/// Sorted mutual distances of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSignature {
    pub sorted_distances: Vec<f64>,
}

impl DistanceSignature {
    /// Largest entrywise difference, or `None` for signatures of different length.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.sorted_distances.len() != other.sorted_distances.len() {
            return None;
        }
        Some(
            self.sorted_distances
                .iter()
                .zip(&other.sorted_distances)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())),
        )
    }

    pub fn len(&self) -> usize {
        self.sorted_distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_distances.is_empty()
    }
}

pub fn distance_signature(q: &[f64]) -> DistanceSignature {
    let n = q.len() / 2;
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push((q[2 * j] - q[2 * i]).hypot(q[2 * j + 1] - q[2 * i + 1]));
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    DistanceSignature {
        sorted_distances: d,
    }
}

/// Rotation about the origin by `angle` radians.
pub fn rotate(q: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    q.chunks_exact(2)
        .flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect()
}

/// Reflection across the x-axis, `(x, y) -> (x, -y)`.
pub fn reflect_x(q: &[f64]) -> Vec<f64> {
    q.chunks_exact(2).flat_map(|p| [p[0], -p[1]]).collect()
}

/// Reflection across the y-axis, `(x, y) -> (-x, y)`.
pub fn reflect_y(q: &[f64]) -> Vec<f64> {
    q.chunks_exact(2).flat_map(|p| [-p[0], p[1]]).collect()
}

fn same_mass(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Greedy nearest assignment of the points of `q2` to those of `q1`,
/// restricted to bodies of equal mass. Returns the permutation `perm` with
/// `q1[i] <-> q2[perm[i]]`.
fn greedy_match(masses: &[f64], q1: &[f64], q2: &[f64]) -> Option<Vec<usize>> {
    let n = masses.len();
    let mut used = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if used[j] || !same_mass(masses[i], masses[j]) {
                continue;
            }
            let d = (q1[2 * i] - q2[2 * j]).powi(2) + (q1[2 * i + 1] - q2[2 * j + 1]).powi(2);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, _) = best?;
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

fn rms(q1: &[f64], q2: &[f64], perm: &[usize]) -> f64 {
    let n = perm.len();
    let sum: f64 = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (q1[2 * i] - q2[2 * j]).powi(2) + (q1[2 * i + 1] - q2[2 * j + 1]).powi(2))
        .sum();
    (sum / n as f64).sqrt()
}

/// Best RMS over permutations found greedily, followed by a closed-form
/// Procrustes rotation for the found correspondence when `refine` is set.
fn aligned_rms(masses: &[f64], q1: &[f64], q2: &[f64], refine: bool) -> f64 {
    let Some(perm) = greedy_match(masses, q1, q2) else {
        return f64::INFINITY;
    };
    let base = rms(q1, q2, &perm);
    if !refine {
        return base;
    }
    // optimal rotation of q2 onto q1 for this correspondence
    let (mut dot, mut cross) = (0.0, 0.0);
    for (i, &j) in perm.iter().enumerate() {
        let (ax, ay) = (q2[2 * j], q2[2 * j + 1]);
        let (bx, by) = (q1[2 * i], q1[2 * i + 1]);
        dot += ax * bx + ay * by;
        cross += ax * by - ay * bx;
    }
    let rotated = rotate(q2, cross.atan2(dot));
    base.min(rms(q1, &rotated, &perm))
}

/// True when `q2` lies in the symmetry orbit of `q1` (both centered).
pub fn symmetry_orbit_match(
    masses: &[f64],
    q1: &[f64],
    q2: &[f64],
    mode: SymmetryMode,
    tolerance: f64,
) -> bool {
    if q1.len() != q2.len() || q1.len() != 2 * masses.len() {
        return false;
    }
    match distance_signature(q1).max_abs_diff(&distance_signature(q2)) {
        Some(d) if d <= tolerance => {}
        _ => return false,
    }
    match mode {
        SymmetryMode::Balanced => {
            let rot_pi: Vec<f64> = q2.iter().map(|v| -v).collect();
            [q2.to_vec(), rot_pi, reflect_x(q2), reflect_y(q2)]
                .iter()
                .any(|g| aligned_rms(masses, q1, g, false) <= tolerance)
        }
        SymmetryMode::Central => {
            let n = masses.len();
            let radius = |q: &[f64], i: usize| q[2 * i].hypot(q[2 * i + 1]);
            let anchor = (0..n)
                .max_by(|&a, &b| radius(q1, a).total_cmp(&radius(q1, b)))
                .unwrap_or(0);
            let ra = radius(q1, anchor);
            let theta_a = q1[2 * anchor + 1].atan2(q1[2 * anchor]);
            let radius_tol = 10.0 * tolerance;
            for reflected in [q2.to_vec(), reflect_x(q2)] {
                for j in 0..n {
                    if !same_mass(masses[anchor], masses[j])
                        || (radius(&reflected, j) - ra).abs() > radius_tol
                    {
                        continue;
                    }
                    let theta_j = reflected[2 * j + 1].atan2(reflected[2 * j]);
                    let aligned = rotate(&reflected, theta_a - theta_j);
                    if aligned_rms(masses, q1, &aligned, true) <= tolerance {
                        return true;
                    }
                }
            }
            false
        }
    }
}

/// Rotates a centered configuration into a reproducible orientation.
///
/// The principal axis of largest spread is placed on the x-axis; when the
/// inertia tensor is isotropic the outermost body is placed on the positive
/// x-axis instead. Configurations with a reflection axis end up symmetric
/// about a coordinate axis.
pub fn canonical_orientation(masses: &[f64], q: &[f64]) -> Vec<f64> {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (i, m) in masses.iter().enumerate() {
        let (x, y) = (q[2 * i], q[2 * i + 1]);
        sxx += m * x * x;
        sxy += m * x * y;
        syy += m * y * y;
    }
    let trace = sxx + syy;
    let gap = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let angle = if gap > 1e-6 * trace {
        // direction of the largest eigenvector of [[sxx, sxy], [sxy, syy]]
        0.5 * (2.0 * sxy).atan2(sxx - syy)
    } else {
        let n = masses.len();
        let far = (0..n)
            .max_by(|&a, &b| {
                let ra = q[2 * a].hypot(q[2 * a + 1]);
                let rb = q[2 * b].hypot(q[2 * b + 1]);
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        q[2 * far + 1].atan2(q[2 * far])
    };
    rotate(q, -angle)
}
