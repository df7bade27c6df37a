use super::{check_len, pair, MassSystem, ScaleMatrix, Separation};
use crate::error::{CoreError, Result};
use nalgebra::DMatrix;

/// Pair separations `q_j - q_i` for `i < j`, stored row by row.
struct Pairs {
    n: usize,
    seps: Vec<Separation>,
}

impl Pairs {
    fn new(q: &[f64]) -> Result<Self> {
        let n = q.len() / 2;
        let mut seps = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                seps.push(pair(q, i, j)?);
            }
        }
        Ok(Self { n, seps })
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Separation pointing from body `i` to body `j`.
    #[inline]
    fn get(&self, i: usize, j: usize) -> Separation {
        if i < j {
            self.seps[self.index(i, j)]
        } else {
            let s = self.seps[self.index(j, i)];
            Separation {
                dx: -s.dx,
                dy: -s.dy,
                ..s
            }
        }
    }

    fn potential(&self, masses: &[f64]) -> f64 {
        let mut u = 0.0;
        let mut k = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                u += masses[i] * masses[j] / self.seps[k].r;
                k += 1;
            }
        }
        u
    }
}

/// Relative-equilibrium residual for an arbitrary set of bodies.
///
/// Block `i` is `sum_{j != i} m_j (q_j - q_i) / |q_j - q_i|^3 + U(q) S q_i`.
/// Zero masses are allowed; a zero-mass body feels the others but exerts no
/// force and contributes nothing to `U`.
pub fn residual(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; q.len()];
    residual_into(masses, scale, q, &mut out)?;
    Ok(out)
}

pub(crate) fn residual_into(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_len(masses, q)?;
    let pairs = Pairs::new(q)?;
    let u = pairs.potential(masses);
    let n = masses.len();
    for i in 0..n {
        let (mut fx, mut fy) = (0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let s = pairs.get(i, j);
            let w = masses[j] * s.inv_r3;
            fx += w * s.dx;
            fy += w * s.dy;
        }
        let (sx, sy) = scale.apply(q[2 * i], q[2 * i + 1]);
        out[2 * i] = fx + u * sx;
        out[2 * i + 1] = fy + u * sy;
    }
    Ok(())
}

/// n-body residual system (`2n` components).
pub fn residual_n(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> Result<Vec<f64>> {
    residual(masses, scale, q)
}

/// (n+1)-body residual with the small mass of `masses` at `p`.
///
/// With a zero small mass the first `n` blocks equal [`residual_n`] and the
/// last block equals [`super::restricted_gradient`] bit for bit.
pub fn residual_n1(
    masses: &MassSystem,
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<Vec<f64>> {
    let all = masses.extended();
    let mut coords = Vec::with_capacity(q.len() + 2);
    coords.extend_from_slice(q);
    coords.extend_from_slice(&p);
    residual(&all, scale, &coords)
}

/// `F = |f|^2 / 2`.
pub fn objective(residual: &[f64]) -> f64 {
    0.5 * residual.iter().map(|r| r * r).sum::<f64>()
}

/// Analytic Jacobian of [`residual`] with respect to all coordinates.
pub fn jacobian(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(q.len(), q.len());
    jacobian_into(masses, scale, q, &mut jac)?;
    Ok(jac)
}

pub(crate) fn jacobian_into(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
    jac: &mut DMatrix<f64>,
) -> Result<()> {
    check_len(masses, q)?;
    let dim = q.len();
    if jac.nrows() != dim || jac.ncols() != dim {
        return Err(CoreError::Dimension {
            expected: dim,
            actual: jac.nrows(),
        });
    }
    let pairs = Pairs::new(q)?;
    let n = masses.len();
    let u = pairs.potential(masses);

    // gradient of U, needed for the coupling term S q_i (dU/dq)^T
    let mut grad = vec![0.0; dim];
    for i in 0..n {
        let (mut gx, mut gy) = (0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let s = pairs.get(i, j);
            let w = masses[j] * s.inv_r3;
            gx += w * s.dx;
            gy += w * s.dy;
        }
        grad[2 * i] = masses[i] * gx;
        grad[2 * i + 1] = masses[i] * gy;
    }

    jac.fill(0.0);
    for i in 0..n {
        let (sx, sy) = scale.apply(q[2 * i], q[2 * i + 1]);
        let mut diag = [0.0; 3];
        for j in 0..n {
            if j == i {
                continue;
            }
            let k = pairs.get(i, j).kernel();
            let mj = masses[j];
            jac[(2 * i, 2 * j)] = mj * k[0];
            jac[(2 * i, 2 * j + 1)] = mj * k[1];
            jac[(2 * i + 1, 2 * j)] = mj * k[1];
            jac[(2 * i + 1, 2 * j + 1)] = mj * k[2];
            diag[0] -= mj * k[0];
            diag[1] -= mj * k[1];
            diag[2] -= mj * k[2];
        }
        jac[(2 * i, 2 * i)] = diag[0] + u * scale.sigma_x;
        jac[(2 * i, 2 * i + 1)] = diag[1];
        jac[(2 * i + 1, 2 * i)] = diag[1];
        jac[(2 * i + 1, 2 * i + 1)] = diag[2] + u * scale.sigma_y;
        for c in 0..dim {
            jac[(2 * i, c)] += sx * grad[c];
            jac[(2 * i + 1, c)] += sy * grad[c];
        }
    }
    Ok(())
}

/// Jacobian of [`residual_n`].
pub fn jacobian_n(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> Result<DMatrix<f64>> {
    jacobian(masses, scale, q)
}

/// Jacobian of [`residual_n1`] with respect to `(q, p)`.
pub fn jacobian_n1(
    masses: &MassSystem,
    scale: &ScaleMatrix,
    q: &[f64],
    p: [f64; 2],
) -> Result<DMatrix<f64>> {
    let all = masses.extended();
    let mut coords = q.to_vec();
    coords.extend_from_slice(&p);
    jacobian(&all, scale, &coords)
}
