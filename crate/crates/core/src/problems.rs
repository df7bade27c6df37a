//! Residual systems of the n-body, restricted and (n+1)-body problems, each
//! with the search box used by the multistart engine or the refinement step.

use crate::error::{CoreError, Result};
use crate::local_solver::ResidualSystem;
use crate::mechanics::residual::{jacobian_into, residual_into};
use crate::mechanics::restricted::{restricted_gradient_with, restricted_hessian_with};
use crate::mechanics::{check_len, normalize, potential, MassSystem, ScaleMatrix};
use crate::multistart::{Identification, MultistartProblem};
use crate::sampling::Bounds;
use nalgebra::DMatrix;

/// Half-widths `l_x = 1 / sqrt(m sigma_x)`, `l_y = 1 / sqrt(m sigma_y)` per body,
/// which contain every configuration with `I_S = 1`.
pub fn inertia_half_widths(masses: &[f64], scale: &ScaleMatrix) -> Vec<f64> {
    masses
        .iter()
        .flat_map(|m| {
            [
                1.0 / (m * scale.sigma_x).sqrt(),
                1.0 / (m * scale.sigma_y).sqrt(),
            ]
        })
        .collect()
}

/// Half-widths for a small body: twice the largest primary half-width per axis.
pub fn small_body_half_widths(masses: &[f64], scale: &ScaleMatrix) -> [f64; 2] {
    let l = inertia_half_widths(masses, scale);
    let max_x = l.iter().step_by(2).cloned().fold(0.0, f64::max);
    let max_y = l.iter().skip(1).step_by(2).cloned().fold(0.0, f64::max);
    [2.0 * max_x, 2.0 * max_y]
}

/// The n-body relative-equilibrium system `f^(n)(m, q) = 0` on `2n` unknowns.
#[derive(Debug, Clone)]
pub struct NBodyProblem {
    masses: Vec<f64>,
    scale: ScaleMatrix,
    bounds: Bounds,
}

impl NBodyProblem {
    pub fn new(masses: &MassSystem, scale: ScaleMatrix) -> Result<Self> {
        if masses.n() < 2 {
            return Err(CoreError::Config("at least two bodies are required".into()));
        }
        let bounds = Bounds::symmetric(&inertia_half_widths(masses.masses(), &scale))?;
        Ok(Self {
            masses: masses.masses().to_vec(),
            scale,
            bounds,
        })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn scale(&self) -> &ScaleMatrix {
        &self.scale
    }
}

impl ResidualSystem for NBodyProblem {
    fn dim(&self) -> usize {
        2 * self.masses.len()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        residual_into(&self.masses, &self.scale, x, out)
    }

    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()> {
        jacobian_into(&self.masses, &self.scale, x, jac)
    }
}

impl MultistartProblem for NBodyProblem {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn finalize(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        normalize(&self.masses, &self.scale, &x)
            .ok()
            .map(|n| n.config.into_vec())
    }

    fn identification(&self) -> Identification {
        Identification::orbit(self.masses.clone(), self.scale.mode())
    }
}

/// Critical points `p` of the restricted potential of a frozen base
/// configuration: the system `grad_p V(p) = 0` on two unknowns.
#[derive(Debug, Clone)]
pub struct RestrictedProblem {
    masses: Vec<f64>,
    scale: ScaleMatrix,
    base: Vec<f64>,
    u: f64,
    bounds: Bounds,
}

/// Two restricted critical points closer than this in the max norm are the same point.
pub const RESTRICTED_DUPLICATE_TOLERANCE: f64 = 1e-8;

impl RestrictedProblem {
    pub fn new(masses: &MassSystem, scale: ScaleMatrix, base: &[f64]) -> Result<Self> {
        check_len(masses.masses(), base)?;
        let u = potential(masses.masses(), base)?;
        let bounds = Bounds::symmetric(&small_body_half_widths(masses.masses(), &scale))?;
        Ok(Self {
            masses: masses.masses().to_vec(),
            scale,
            base: base.to_vec(),
            u,
            bounds,
        })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }
}

impl ResidualSystem for RestrictedProblem {
    fn dim(&self) -> usize {
        2
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let g =
            restricted_gradient_with(&self.masses, &self.scale, &self.base, self.u, [x[0], x[1]])?;
        out.copy_from_slice(&g);
        Ok(())
    }

    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()> {
        let h =
            restricted_hessian_with(&self.masses, &self.scale, &self.base, self.u, [x[0], x[1]])?;
        for r in 0..2 {
            for c in 0..2 {
                jac[(r, c)] = h[(r, c)];
            }
        }
        Ok(())
    }
}

impl MultistartProblem for RestrictedProblem {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn identification(&self) -> Identification {
        Identification::Exact {
            tolerance: RESTRICTED_DUPLICATE_TOLERANCE,
        }
    }
}

/// The full (n+1)-body system `f^(n+1) = 0` on `2n + 2` unknowns, with the
/// small body last.
///
/// As a multistart problem it searches the box of the primaries with the
/// small body confined to twice their largest half-width.
#[derive(Debug, Clone)]
pub struct ExtendedProblem {
    masses: Vec<f64>,
    scale: ScaleMatrix,
    bounds: Bounds,
}

impl ExtendedProblem {
    pub fn new(masses: &MassSystem, scale: ScaleMatrix) -> Result<Self> {
        let mut widths = inertia_half_widths(masses.masses(), &scale);
        widths.extend(small_body_half_widths(masses.masses(), &scale));
        Self::with_bounds(masses, scale, Bounds::symmetric(&widths)?)
    }

    /// Same system restricted to an arbitrary box.
    pub fn with_bounds(masses: &MassSystem, scale: ScaleMatrix, bounds: Bounds) -> Result<Self> {
        let masses = masses.extended();
        if bounds.dim() != 2 * masses.len() {
            return Err(CoreError::Dimension {
                expected: 2 * masses.len(),
                actual: bounds.dim(),
            });
        }
        Ok(Self {
            masses,
            scale,
            bounds,
        })
    }

    /// The `n + 1` masses, small mass last.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

impl ResidualSystem for ExtendedProblem {
    fn dim(&self) -> usize {
        2 * self.masses.len()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        residual_into(&self.masses, &self.scale, x, out)
    }

    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()> {
        jacobian_into(&self.masses, &self.scale, x, jac)
    }
}

impl MultistartProblem for ExtendedProblem {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn finalize(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        normalize(&self.masses, &self.scale, &x)
            .ok()
            .map(|n| n.config.into_vec())
    }

    fn identification(&self) -> Identification {
        Identification::orbit(self.masses.clone(), self.scale.mode())
    }
}

/// Coordinates with `|x0| < DEGENERATE_COORDINATE` get an absolute half-width in [`delta_box`].
pub const DEGENERATE_COORDINATE: f64 = 1e-8;

/// The box `|x_i - x0_i| <= delta |x0_i|` around `guess`.
///
/// Coordinates that vanish (below [`DEGENERATE_COORDINATE`]) would get an
/// empty interval; they receive the half-width `delta * max_j |x0_j|` instead.
pub fn delta_box(guess: &[f64], delta: f64) -> Result<Bounds> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::Config(format!("delta {delta} is not in (0, 1)")));
    }
    let scale = guess.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (lower, upper) = guess
        .iter()
        .map(|x| {
            let h = if x.abs() < DEGENERATE_COORDINATE {
                delta * scale
            } else {
                delta * x.abs()
            };
            (x - h, x + h)
        })
        .unzip();
    Bounds::new(lower, upper)
}
