//! The restricted (n+1)-body problem: a massless particle at `p` in the field
//! of a frozen normalized n-body configuration.

use super::{check_len, potential, pt, ScaleMatrix, Separation, RANK_TOLERANCE};
use crate::error::Result;
use nalgebra::{DMatrix, Matrix2};

/// `V(p) = sum_j m_j / |q_j - p| + U(q) p^T S p / 2`.
pub fn restricted_potential(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<f64> {
    check_len(masses, q)?;
    let u = potential(masses, q)?;
    let n = masses.len();
    let mut v = 0.0;
    for j in 0..n {
        let s = Separation::between(p, pt(q, j), n, j)?;
        v += masses[j] / s.r;
    }
    Ok(v + 0.5 * u * (scale.sigma_x * p[0] * p[0] + scale.sigma_y * p[1] * p[1]))
}

/// Gradient of [`restricted_potential`] in `p`.
pub fn restricted_gradient(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<[f64; 2]> {
    check_len(masses, q)?;
    let u = potential(masses, q)?;
    restricted_gradient_with(masses, scale, q, u, p)
}

/// Same as [`restricted_gradient`] with the primaries' potential supplied.
pub(crate) fn restricted_gradient_with(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    u: f64,
    p: [f64; 2],
) -> Result<[f64; 2]> {
    let n = masses.len();
    let (mut fx, mut fy) = (0.0, 0.0);
    for j in 0..n {
        let s = Separation::between(p, pt(q, j), n, j)?;
        let w = masses[j] * s.inv_r3;
        fx += w * s.dx;
        fy += w * s.dy;
    }
    let (sx, sy) = scale.apply(p[0], p[1]);
    Ok([fx + u * sx, fy + u * sy])
}

pub(crate) fn restricted_hessian_with(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    u: f64,
    p: [f64; 2],
) -> Result<Matrix2<f64>> {
    let n = masses.len();
    let mut h = Matrix2::new(u * scale.sigma_x, 0.0, 0.0, u * scale.sigma_y);
    for j in 0..n {
        let k = Separation::between(p, pt(q, j), n, j)?.kernel();
        h[(0, 0)] -= masses[j] * k[0];
        h[(0, 1)] -= masses[j] * k[1];
        h[(1, 0)] -= masses[j] * k[1];
        h[(1, 1)] -= masses[j] * k[2];
    }
    Ok(h)
}

/// Second derivative of `V` in `p` with its nondegeneracy verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedHessian {
    pub matrix: Matrix2<f64>,
    pub nondegenerate: bool,
}

pub fn restricted_hessian(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<RestrictedHessian> {
    check_len(masses, q)?;
    let u = potential(masses, q)?;
    let matrix = restricted_hessian_with(masses, scale, q, u, p)?;
    let sv = matrix.singular_values();
    let max = sv.max();
    let rank = sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count();
    Ok(RestrictedHessian {
        matrix,
        nondegenerate: max > 0.0 && rank == 2,
    })
}

/// Jacobian of [`restricted_gradient`] in `p`, as a dense 2x2 matrix.
pub fn jacobian_restricted(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<DMatrix<f64>> {
    let h = restricted_hessian(masses, scale, q, p)?.matrix;
    Ok(DMatrix::from_iterator(2, 2, h.iter().copied()))
}
