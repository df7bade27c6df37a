use super::{check_len, pair, pt, PlanarConfiguration, ScaleMatrix};
use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Newtonian force function `U = sum_{i<j} m_i m_j / |q_j - q_i|`.
pub fn potential(masses: &[f64], q: &[f64]) -> Result<f64> {
    check_len(masses, q)?;
    let n = masses.len();
    let mut u = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = pair(q, i, j)?;
            u += masses[i] * masses[j] / s.r;
        }
    }
    Ok(u)
}

/// Gradient of [`potential`]; block `i` is `sum_{j != i} m_i m_j (q_j - q_i) / |q_j - q_i|^3`.
pub fn potential_gradient(masses: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    check_len(masses, q)?;
    let n = masses.len();
    let mut g = vec![0.0; 2 * n];
    for i in 0..n {
        let (mut gx, mut gy) = (0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let s = pair(q, i, j)?;
            let w = masses[j] * s.inv_r3;
            gx += w * s.dx;
            gy += w * s.dy;
        }
        g[2 * i] = masses[i] * gx;
        g[2 * i + 1] = masses[i] * gy;
    }
    Ok(g)
}

/// Mass-weighted mean position.
pub fn center_of_mass(masses: &[f64], q: &[f64]) -> [f64; 2] {
    let total: f64 = masses.iter().sum();
    let mut c = [0.0; 2];
    for (i, m) in masses.iter().enumerate() {
        let p = pt(q, i);
        c[0] += m * p[0];
        c[1] += m * p[1];
    }
    [c[0] / total, c[1] / total]
}

/// S-weighted moment of inertia `sum_j m_j |q_j - c|_S^2` about the center of mass.
pub fn moment_of_inertia(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> f64 {
    let c = center_of_mass(masses, q);
    masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let p = pt(q, i);
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            m * (scale.sigma_x * dx * dx + scale.sigma_y * dy * dy)
        })
        .sum()
}

/// `lambda = U / I_S`.
pub fn lambda_of(masses: &[f64], scale: &ScaleMatrix, q: &[f64]) -> Result<f64> {
    let u = potential(masses, q)?;
    Ok(u / moment_of_inertia(masses, scale, q))
}

/// A configuration with center of mass at the origin and `I_S = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConfiguration {
    pub config: PlanarConfiguration,
    /// Equals the potential of the normalized configuration.
    pub lambda: f64,
}

/// Translates the center of mass to the origin and rescales so that `I_S = 1`.
pub fn normalize(
    masses: &[f64],
    scale: &ScaleMatrix,
    q: &[f64],
) -> Result<NormalizedConfiguration> {
    check_len(masses, q)?;
    let c = center_of_mass(masses, q);
    let inertia = moment_of_inertia(masses, scale, q);
    if !(inertia > 0.0 && inertia.is_finite()) {
        return Err(CoreError::NonFinite);
    }
    let f = (1.0 / inertia).sqrt();
    let coords: Vec<f64> = q
        .chunks_exact(2)
        .flat_map(|p| [f * (p[0] - c[0]), f * (p[1] - c[1])])
        .collect();
    let lambda = potential(masses, &coords)?;
    Ok(NormalizedConfiguration {
        config: PlanarConfiguration::new(coords)?,
        lambda,
    })
}
