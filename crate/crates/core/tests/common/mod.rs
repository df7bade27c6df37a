#![allow(dead_code)]

use balconf::mechanics::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random positions in `[-2, 2]^2` with all mutual distances above `min_dist`,
/// avoiding every point of `avoid` by the same margin.
pub fn random_points(r: &mut impl Rng, n: usize, min_dist: f64, avoid: &[f64]) -> Vec<f64> {
    'retry: loop {
        let q: Vec<f64> = (0..2 * n).map(|_| r.random_range(-2.0..2.0)).collect();
        let pts: Vec<&[f64]> = q.chunks_exact(2).chain(avoid.chunks_exact(2)).collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]) < min_dist {
                    continue 'retry;
                }
            }
        }
        return q;
    }
}

pub fn random_masses(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(0.05..1.0)).collect()
}

pub fn random_scale(r: &mut impl Rng) -> ScaleMatrix {
    ScaleMatrix::new(r.random_range(0.3..1.0), r.random_range(0.3..1.0)).unwrap()
}

pub fn fd_step(x: &[f64]) -> f64 {
    1e-6 * x.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// Central-difference Jacobian of `f` at `x`, one column per coordinate.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> DMatrix<f64> {
    let h = fd_step(x);
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        for r in 0..m {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// `max |a - b| / max |a|`.
pub fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let scale = analytic.amax().max(1e-300);
    (analytic - numeric).amax() / scale
}

/// Largest relative finite-difference error over every analytic derivative,
/// for `samples` random configurations of `n` bodies.
pub fn worst_derivative_error(n: usize, samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let m = random_masses(&mut r, n);
        let s = random_scale(&mut r);
        let q = random_points(&mut r, n, 0.3, &[]);
        let p_vec = random_points(&mut r, 1, 0.3, &q);
        let p = [p_vec[0], p_vec[1]];

        let grad = DMatrix::from_row_slice(1, 2 * n, &potential_gradient(&m, &q).unwrap());
        let fd = fd_jacobian(|x| vec![potential(&m, x).unwrap()], &q);
        worst = worst.max(relative_error(&grad, &fd));

        let hu = potential_hessian(&m, &q).unwrap();
        let fd = fd_jacobian(|x| potential_gradient(&m, x).unwrap(), &q);
        worst = worst.max(relative_error(&hu, &fd));

        let jac = jacobian(&m, &s, &q).unwrap();
        let fd = fd_jacobian(|x| residual(&m, &s, x).unwrap(), &q);
        worst = worst.max(relative_error(&jac, &fd));

        let small = MassSystem::new(m.clone())
            .unwrap()
            .with_small_mass(1e-3)
            .unwrap();
        let mut full = q.clone();
        full.extend_from_slice(&p);
        let jac = jacobian_n1(&small, &s, &q, p).unwrap();
        let fd = fd_jacobian(
            |x| residual_n1(&small, &s, &x[..2 * n], [x[2 * n], x[2 * n + 1]]).unwrap(),
            &full,
        );
        worst = worst.max(relative_error(&jac, &fd));

        let g = restricted_gradient(&m, &s, &q, p).unwrap();
        let fd = fd_jacobian(
            |x| vec![restricted_potential(&m, &s, &q, [x[0], x[1]]).unwrap()],
            &p,
        );
        worst = worst.max(relative_error(&DMatrix::from_row_slice(1, 2, &g), &fd));

        let h = jacobian_restricted(&m, &s, &q, p).unwrap();
        let fd = fd_jacobian(
            |x| {
                restricted_gradient(&m, &s, &q, [x[0], x[1]])
                    .unwrap()
                    .to_vec()
            },
            &p,
        );
        worst = worst.max(relative_error(&h, &fd));
    }
    worst
}

/// The normalized equal-mass pair: `I = 2 m x^2 = 1`.
pub fn pair(mass: f64) -> Vec<f64> {
    let x = (1.0 / (2.0 * mass)).sqrt();
    vec![-x, 0.0, x, 0.0]
}

/// The normalized equal-mass equilateral triangle: `I = 3 m R^2 = 1`.
pub fn triangle(mass: f64) -> Vec<f64> {
    let radius = (1.0 / (3.0 * mass)).sqrt();
    (0..3)
        .flat_map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0 + std::f64::consts::FRAC_PI_2;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Isolated zeros of the restricted gradient found by a sign-change scan on a
/// `cells x cells` grid over `[-half, half]^2`, skipping a disc of radius
/// `exclude` around each primary. Returns cluster centroids.
pub fn grid_zeros(
    masses: &[f64],
    scale: &ScaleMatrix,
    base: &[f64],
    half: f64,
    cells: usize,
    exclude: f64,
) -> Vec<[f64; 2]> {
    // shifted so that no grid line lies on a symmetry axis
    let lo = -half + 1.234_567e-3;
    let h = (half - lo) / cells as f64;
    let nodes = cells + 1;
    let mut gx = vec![0.0; nodes * nodes];
    let mut gy = vec![0.0; nodes * nodes];
    for i in 0..nodes {
        for j in 0..nodes {
            let p = [lo + i as f64 * h, lo + j as f64 * h];
            let g = restricted_gradient(masses, scale, base, p).unwrap_or([f64::NAN, f64::NAN]);
            gx[i * nodes + j] = g[0];
            gy[i * nodes + j] = g[1];
        }
    }
    let changes = |v: &[f64], i: usize, j: usize| {
        let c = [
            v[i * nodes + j],
            v[(i + 1) * nodes + j],
            v[i * nodes + j + 1],
            v[(i + 1) * nodes + j + 1],
        ];
        c.iter().any(|x| *x > 0.0) && c.iter().any(|x| *x < 0.0)
    };
    let near_primary = |x: f64, y: f64| {
        base.chunks_exact(2)
            .any(|b| (b[0] - x).hypot(b[1] - y) < exclude)
    };
    let mut flagged = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            let (x, y) = (lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
            if !near_primary(x, y) && changes(&gx, i, j) && changes(&gy, i, j) {
                flagged.push((i, j));
            }
        }
    }
    // 8-connected clusters
    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    for c in flagged {
        let hit: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, cl)| {
                cl.iter()
                    .any(|d| d.0.abs_diff(c.0) <= 1 && d.1.abs_diff(c.1) <= 1)
            })
            .map(|(k, _)| k)
            .collect();
        match hit.as_slice() {
            [] => clusters.push(vec![c]),
            [first, rest @ ..] => {
                for k in rest.iter().rev() {
                    let moved = clusters.remove(*k);
                    clusters[*first].extend(moved);
                }
                clusters[*first].push(c);
            }
        }
    }
    clusters
        .iter()
        .map(|cl| {
            let k = cl.len() as f64;
            let sx: f64 = cl.iter().map(|c| lo + (c.0 as f64 + 0.5) * h).sum();
            let sy: f64 = cl.iter().map(|c| lo + (c.1 as f64 + 0.5) * h).sum();
            [sx / k, sy / k]
        })
        .collect()
}
