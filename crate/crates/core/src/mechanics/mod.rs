//! Exact evaluation of the planar relative-equilibrium formulas.
//!
//! Configurations are flat coordinate slices laid out as
//! `(x_1, y_1, ..., x_n, y_n)`. Every function here is a pure function of its
//! inputs. Functions that divide by mutual distances fail with
//! [`CoreError::Collision`] when two bodies are closer than
//! [`COLLISION_TOLERANCE`].

mod hessian;
mod potential;
pub(crate) mod residual;
pub(crate) mod restricted;
mod symmetry;

pub use hessian::{hessian, numerical_rank, potential_hessian, HessianReport, RANK_TOLERANCE};
pub use potential::{
    center_of_mass, lambda_of, moment_of_inertia, normalize, potential, potential_gradient,
    NormalizedConfiguration,
};
pub use residual::{
    jacobian, jacobian_n, jacobian_n1, objective, residual, residual_n, residual_n1,
};
pub use restricted::{
    jacobian_restricted, restricted_gradient, restricted_hessian, restricted_potential,
    RestrictedHessian,
};
pub use symmetry::{
    canonical_orientation, distance_signature, reflect_x, reflect_y, rotate, symmetry_orbit_match,
    DistanceSignature, DEDUP_TOLERANCE,
};

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Pairwise distances below this value are treated as collisions.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

/// Masses `m_1..m_n` of the primaries plus an optional small mass `m_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    masses: Vec<f64>,
    small_mass: f64,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(CoreError::InvalidMasses("no bodies".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(CoreError::InvalidMasses(format!(
                "mass {m} is not strictly positive"
            )));
        }
        Ok(Self {
            masses,
            small_mass: 0.0,
        })
    }

    /// `n` bodies of mass `mass`.
    pub fn equal(n: usize, mass: f64) -> Result<Self> {
        Self::new(vec![mass; n])
    }

    /// Attaches the small mass `m_{n+1}`. It must be nonnegative and smaller
    /// than every primary mass.
    pub fn with_small_mass(mut self, small_mass: f64) -> Result<Self> {
        if !(small_mass.is_finite() && small_mass >= 0.0) {
            return Err(CoreError::InvalidMasses(format!(
                "small mass {small_mass} is negative"
            )));
        }
        let min = self.masses.iter().cloned().fold(f64::INFINITY, f64::min);
        if small_mass >= min {
            return Err(CoreError::InvalidMasses(format!(
                "small mass {small_mass} is not below the smallest primary mass {min}"
            )));
        }
        self.small_mass = small_mass;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn small_mass(&self) -> f64 {
        self.small_mass
    }

    /// The `n + 1` masses `(m_1, ..., m_n, m_{n+1})`.
    pub fn extended(&self) -> Vec<f64> {
        let mut all = self.masses.clone();
        all.push(self.small_mass);
        all
    }
}

/// Diagonal positive definite matrix `S = diag(sigma_x, sigma_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMatrix {
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl ScaleMatrix {
    pub fn new(sigma_x: f64, sigma_y: f64) -> Result<Self> {
        if !(sigma_x.is_finite() && sigma_y.is_finite() && sigma_x > 0.0 && sigma_y > 0.0) {
            return Err(CoreError::InvalidScale { sigma_x, sigma_y });
        }
        Ok(Self { sigma_x, sigma_y })
    }

    pub fn identity() -> Self {
        Self {
            sigma_x: 1.0,
            sigma_y: 1.0,
        }
    }

    /// Central-configuration mode (`sigma_x == sigma_y`).
    pub fn is_central(&self) -> bool {
        self.sigma_x == self.sigma_y
    }

    pub fn mode(&self) -> SymmetryMode {
        if self.is_central() {
            SymmetryMode::Central
        } else {
            SymmetryMode::Balanced
        }
    }

    #[inline]
    pub(crate) fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.sigma_x * x, self.sigma_y * y)
    }
}

/// Symmetry group used to identify equivalent solutions.
///
/// `Central` quotients permutations of equal masses and all of O(2).
/// `Balanced` quotients permutations, the rotation by pi and the two axis
/// reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryMode {
    #[serde(rename = "cc")]
    Central,
    #[serde(rename = "bc")]
    Balanced,
}

/// A planar configuration stored as `(x_1, y_1, ..., x_n, y_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlanarConfiguration {
    coords: Vec<f64>,
}

impl PlanarConfiguration {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(2) || coords.is_empty() {
            return Err(CoreError::Dimension {
                expected: 2 * (coords.len() / 2).max(1),
                actual: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        Ok(Self { coords })
    }

    pub fn from_points(points: &[[f64; 2]]) -> Self {
        Self {
            coords: points.iter().flat_map(|p| p.iter().copied()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.coords[2 * i], self.coords[2 * i + 1]]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Fails if two points are closer than [`COLLISION_TOLERANCE`].
    pub fn check_collisions(&self) -> Result<()> {
        check_collisions(&self.coords)
    }
}

impl AsRef<[f64]> for PlanarConfiguration {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

pub(crate) fn check_collisions(q: &[f64]) -> Result<()> {
    let n = q.len() / 2;
    for i in 0..n {
        for j in (i + 1)..n {
            pair(q, i, j)?;
        }
    }
    Ok(())
}

pub(crate) fn check_len(masses: &[f64], q: &[f64]) -> Result<()> {
    if q.len() != 2 * masses.len() {
        return Err(CoreError::Dimension {
            expected: 2 * masses.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// Separation `q_j - q_i` with its length and `1 / r^3`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Separation {
    pub dx: f64,
    pub dy: f64,
    pub r: f64,
    pub inv_r3: f64,
}

impl Separation {
    #[inline]
    pub fn between(from: [f64; 2], to: [f64; 2], i: usize, j: usize) -> Result<Self> {
        let dx = to[0] - from[0];
        let dy = to[1] - from[1];
        let r2 = dx * dx + dy * dy;
        let r = r2.sqrt();
        if !(r >= COLLISION_TOLERANCE) {
            return Err(CoreError::Collision { i, j, distance: r });
        }
        Ok(Self {
            dx,
            dy,
            r,
            inv_r3: 1.0 / (r2 * r),
        })
    }

    /// `d(d / r^3) / dd = (I - 3 d d^T / r^2) / r^3`, returned as `[xx, xy, yy]`.
    #[inline]
    pub fn kernel(&self) -> [f64; 3] {
        let inv_r2 = 1.0 / (self.r * self.r);
        [
            self.inv_r3 * (1.0 - 3.0 * self.dx * self.dx * inv_r2),
            -3.0 * self.inv_r3 * self.dx * self.dy * inv_r2,
            self.inv_r3 * (1.0 - 3.0 * self.dy * self.dy * inv_r2),
        ]
    }
}

#[inline]
pub(crate) fn pt(q: &[f64], i: usize) -> [f64; 2] {
    [q[2 * i], q[2 * i + 1]]
}

#[inline]
pub(crate) fn pair(q: &[f64], i: usize, j: usize) -> Result<Separation> {
    Separation::between(pt(q, i), pt(q, j), i, j)
}
