use super::{check_len, pair, potential, ScaleMatrix};
use crate::error::Result;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Singular values at or below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Rank and nondegeneracy verdict for the Hessian of a normalized solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub rank: usize,
    /// The (up to) three smallest singular values, ascending.
    pub smallest_singular_values: Vec<f64>,
    /// `rank == 2n - 1` for central configurations, `rank == 2n` otherwise.
    pub nondegenerate: bool,
}

/// Numerical rank of `m` with singular values compared against
/// `RANK_TOLERANCE * max`. Also returns the singular values in ascending order.
pub fn numerical_rank(m: &DMatrix<f64>) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    let max = sv.last().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count();
    (rank, sv)
}

/// Analytic second derivative `D^2 U` of the potential.
pub fn potential_hessian(masses: &[f64], q: &[f64]) -> Result<DMatrix<f64>> {
    check_len(masses, q)?;
    let n = masses.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in (i + 1)..n {
            let k = pair(q, i, j)?.kernel();
            let w = masses[i] * masses[j];
            let block = [w * k[0], w * k[1], w * k[2]];
            for (a, b) in [(i, j), (j, i)] {
                h[(2 * a, 2 * b)] += block[0];
                h[(2 * a, 2 * b + 1)] += block[1];
                h[(2 * a + 1, 2 * b)] += block[1];
                h[(2 * a + 1, 2 * b + 1)] += block[2];
            }
            for a in [i, j] {
                h[(2 * a, 2 * a)] -= block[0];
                h[(2 * a, 2 * a + 1)] -= block[1];
                h[(2 * a + 1, 2 * a)] -= block[1];
                h[(2 * a + 1, 2 * a + 1)] -= block[2];
            }
        }
    }
    Ok(h)
}

/// `H = D^2 U + U(q) S_hat M` at a normalized configuration, and its rank report.
///
/// The reported singular values are those of the mass-normalized matrix.
pub fn hessian(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
) -> Result<(DMatrix<f64>, HessianReport)> {
    let mut h = potential_hessian(masses, q)?;
    let u = potential(masses, q)?;
    for (i, m) in masses.iter().enumerate() {
        h[(2 * i, 2 * i)] += u * scale.sigma_x * m;
        h[(2 * i + 1, 2 * i + 1)] += u * scale.sigma_y * m;
    }
    // the rank is read from M^{-1/2} H M^{-1/2}; otherwise a tiny mass makes its
    // own rows look like round-off
    let (rank, sv) = if masses.iter().all(|m| *m > 0.0) {
        let w: Vec<f64> = masses.iter().flat_map(|m| [m.sqrt().recip(); 2]).collect();
        numerical_rank(&DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| {
            w[i] * h[(i, j)] * w[j]
        }))
    } else {
        numerical_rank(&h)
    };
    let dim = 2 * masses.len();
    let expected = if scale.is_central() { dim - 1 } else { dim };
    let report = HessianReport {
        rank,
        smallest_singular_values: sv.iter().take(3).copied().collect(),
        nondegenerate: rank == expected,
    };
    Ok((h, report))
}
