//! Box-constrained Levenberg–Marquardt least squares.
//!
//! The model step is the Gauss–Newton step restricted to a trust region. The
//! Jacobian is factored by SVD once per iteration: the undamped step is the
//! minimum-norm pseudo-inverse step, and when it is too long the damping
//! parameter is chosen so the step has the length of the trust radius. Trial
//! points are clipped to the box. Residual evaluations that fail (for
//! instance on a collision) reject the step.

use crate::error::{CoreError, Result};
use crate::mechanics::objective;
use crate::sampling::Bounds;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A residual map `R^N -> R^M` with its analytic Jacobian.
pub trait ResidualSystem {
    /// Number of unknowns `N`.
    fn dim(&self) -> usize;

    /// Number of residual components `M`.
    fn residual_len(&self) -> usize {
        self.dim()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Writes the `M x N` Jacobian at `x` into `jac`.
    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()>;
}

/// Adapter turning a pair of closures into a [`ResidualSystem`].
pub struct FnSystem<R, J> {
    pub dim: usize,
    pub residual_len: usize,
    pub residual: R,
    pub jacobian: J,
}

impl<R, J> ResidualSystem for FnSystem<R, J>
where
    R: Fn(&[f64], &mut [f64]) -> Result<()>,
    J: Fn(&[f64], &mut DMatrix<f64>) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn residual_len(&self) -> usize {
        self.residual_len
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.residual)(x, out)
    }

    fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()> {
        (self.jacobian)(x, jac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSolverSettings {
    pub max_iterations: usize,
    /// Stop once `|f|_inf` is below this.
    pub residual_tol: f64,
    /// Stop once a step is shorter than this relative to `|x|`.
    pub step_tol: f64,
    pub trust_radius_init: f64,
}

impl Default for LocalSolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            residual_tol: 1e-13,
            step_tol: 1e-15,
            trust_radius_init: 1.0,
        }
    }
}

impl LocalSolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.residual_tol > 0.0
            && self.step_tol > 0.0
            && self.trust_radius_init > 0.0;
        if ok {
            Ok(())
        } else {
            Err(CoreError::Config(format!(
                "invalid local solver settings {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Residual,
    SmallStep,
    MaxIter,
    OutOfBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub point: Vec<f64>,
    /// `F = |f|^2 / 2` at `point`; infinite when the residual cannot be evaluated there.
    pub objective: f64,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// Euclidean residual norm at every accepted iterate, starting point included.
    pub residual_history: Vec<f64>,
}

/// Pseudo-inverse cutoff relative to the largest singular value.
const PINV_CUTOFF: f64 = 1e-12;
/// Minimum ratio of actual to predicted reduction for accepting a step.
const ACCEPT_RATIO: f64 = 1e-4;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trust-region step from the SVD of the Jacobian.
///
/// `coeffs[i] = u_i^T f`. Returns the step in the original coordinates.
fn trust_step(sigma: &[f64], coeffs: &[f64], v_t: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = PINV_CUTOFF * smax;
    let combine = |weights: &[f64]| -> DVector<f64> {
        let mut p = DVector::zeros(v_t.ncols());
        for (k, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                p.axpy(-*w, &v_t.row(k).transpose(), 1.0);
            }
        }
        p
    };
    // in the rotated basis the components are independent, so norms are cheap
    let gn: Vec<f64> = sigma
        .iter()
        .zip(coeffs)
        .map(|(s, c)| if *s > cutoff { c / s } else { 0.0 })
        .collect();
    if norm(&gn) <= radius {
        return combine(&gn);
    }
    let damped = |mu: f64| -> Vec<f64> {
        sigma
            .iter()
            .zip(coeffs)
            .map(|(s, c)| s * c / (s * s + mu))
            .collect()
    };
    // |p(mu)| decreases in mu; |p(mu)| <= |J^T f| / mu bounds the bracket
    let g_norm = norm(
        &sigma
            .iter()
            .zip(coeffs)
            .map(|(s, c)| s * c)
            .collect::<Vec<_>>(),
    );
    let mut hi = (g_norm / radius).max(f64::MIN_POSITIVE);
    let mut lo = hi * 1e-30;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let len = norm(&damped(mid));
        if (len - radius).abs() <= 1e-3 * radius {
            hi = mid;
            break;
        }
        if len > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    combine(&damped(hi))
}

/// Minimizes `F(x) = |f(x)|^2 / 2` over `bounds` starting at `start`.
///
/// A start outside the box returns immediately with
/// [`Termination::OutOfBox`]. The result point is always inside the box.
pub fn minimize<S: ResidualSystem + ?Sized>(
    system: &S,
    bounds: &Bounds,
    start: &[f64],
    settings: &LocalSolverSettings,
) -> LocalResult {
    let n = system.dim();
    let m = system.residual_len();
    let mut x = start.to_vec();
    let mut f = vec![0.0; m];

    let fail = |point: Vec<f64>, termination| LocalResult {
        point,
        objective: f64::INFINITY,
        residual_inf: f64::INFINITY,
        converged: false,
        iterations: 0,
        termination,
        residual_history: Vec::new(),
    };
    if start.len() != n || !bounds.contains(start) {
        if start.len() == n {
            bounds.clamp(&mut x);
        } else {
            x = bounds.from_unit(&vec![0.5; bounds.dim()]);
        }
        return fail(x, Termination::OutOfBox);
    }
    if system.residual(&x, &mut f).is_err() || f.iter().any(|v| !v.is_finite()) {
        return fail(x, Termination::MaxIter);
    }

    let mut obj = objective(&f);
    let mut history = vec![norm(&f)];
    let mut jac = DMatrix::zeros(m, n);
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; m];
    let mut radius = settings.trust_radius_init;
    let mut need_jacobian = true;
    // singular values, U^T f, V^T and J^T f of the current Jacobian
    type Factored = (Vec<f64>, Vec<f64>, DMatrix<f64>, DVector<f64>);
    let mut svd_parts: Option<Factored> = None;
    let mut termination = Termination::MaxIter;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        if inf_norm(&f) < settings.residual_tol {
            termination = Termination::Residual;
            converged = true;
            break;
        }
        iterations += 1;
        if need_jacobian {
            if system.jacobian(&x, &mut jac).is_err() || jac.iter().any(|v| !v.is_finite()) {
                break;
            }
            let svd = jac.clone().svd(true, true);
            let u = svd.u.expect("left singular vectors");
            let v_t = svd.v_t.expect("right singular vectors");
            let fv = DVector::from_column_slice(&f);
            let coeffs: Vec<f64> = (u.transpose() * &fv).iter().copied().collect();
            let grad = jac.transpose() * &fv;
            svd_parts = Some((
                svd.singular_values.iter().copied().collect(),
                coeffs,
                v_t,
                grad,
            ));
            need_jacobian = false;
        }
        let (sigma, coeffs, v_t, grad) = svd_parts.as_ref().expect("factored Jacobian");

        let p = trust_step(sigma, coeffs, v_t, radius);
        for k in 0..n {
            trial[k] = x[k] + p[k];
        }
        bounds.clamp(&mut trial);
        let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step_norm = norm(&step);
        let x_norm = norm(&x);

        if step_norm <= settings.step_tol * (x_norm + settings.step_tol) {
            termination = Termination::SmallStep;
            converged = projected_gradient_small(&x, grad, bounds, obj);
            break;
        }

        let evaluated =
            system.residual(&trial, &mut f_trial).is_ok() && f_trial.iter().all(|v| v.is_finite());
        let mut accepted = false;
        if evaluated {
            let obj_trial = objective(&f_trial);
            // predicted reduction of the linear model on the clipped step
            let js = &jac * DVector::from_column_slice(&step);
            let model: f64 = 0.5
                * f.iter()
                    .zip(js.iter())
                    .map(|(a, b)| (a + b) * (a + b))
                    .sum::<f64>();
            let predicted = obj - model;
            let actual = obj - obj_trial;
            let ratio = if predicted > 0.0 {
                actual / predicted
            } else {
                -1.0
            };
            if actual > 0.0 && (ratio > ACCEPT_RATIO || obj_trial == 0.0) {
                accepted = true;
                x.copy_from_slice(&trial);
                f.copy_from_slice(&f_trial);
                obj = obj_trial;
                history.push(norm(&f));
                need_jacobian = true;
                if ratio > 0.75 {
                    radius = radius.max(2.0 * step_norm);
                } else if ratio < 0.25 {
                    radius = 0.25 * step_norm;
                }
            } else if actual == 0.0 && obj_trial == obj && step_norm <= 1e-8 * (x_norm + 1.0) {
                // no representable progress left
                termination = Termination::SmallStep;
                converged = projected_gradient_small(&x, grad, bounds, obj);
                break;
            }
        }
        if !accepted {
            radius = 0.25 * step_norm.min(radius);
            if radius <= settings.step_tol * (x_norm + settings.step_tol) {
                termination = Termination::SmallStep;
                converged = evaluated && projected_gradient_small(&x, grad, bounds, obj);
                break;
            }
        }
    }
    if !converged && termination == Termination::MaxIter && inf_norm(&f) < settings.residual_tol {
        termination = Termination::Residual;
        converged = true;
    }

    LocalResult {
        objective: obj,
        residual_inf: inf_norm(&f),
        point: x,
        converged,
        iterations,
        termination,
        residual_history: history,
    }
}

/// Stationarity of `F` at `x` relative to the box, via the projected gradient.
fn projected_gradient_small(x: &[f64], grad: &DVector<f64>, bounds: &Bounds, obj: f64) -> bool {
    let mut moved: Vec<f64> = x.iter().zip(grad.iter()).map(|(a, g)| a - g).collect();
    bounds.clamp(&mut moved);
    let pg = moved
        .iter()
        .zip(x)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    pg <= 1e-8 * (1.0 + obj.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::{jacobian_n, residual_n, ScaleMatrix};

    fn boxed(h: f64, n: usize) -> Bounds {
        Bounds::symmetric(&vec![h; n]).unwrap()
    }

    fn linear() -> impl ResidualSystem {
        FnSystem {
            dim: 2,
            residual_len: 2,
            residual: |x: &[f64], out: &mut [f64]| {
                out[0] = x[0] - 1.0;
                out[1] = x[1] - 2.0;
                Ok(())
            },
            jacobian: |_: &[f64], j: &mut DMatrix<f64>| {
                j.fill_with_identity();
                Ok(())
            },
        }
    }

    fn rosenbrock() -> impl ResidualSystem {
        FnSystem {
            dim: 2,
            residual_len: 2,
            residual: |x: &[f64], out: &mut [f64]| {
                out[0] = 1.0 - x[0];
                out[1] = 10.0 * (x[1] - x[0] * x[0]);
                Ok(())
            },
            jacobian: |x: &[f64], j: &mut DMatrix<f64>| {
                j[(0, 0)] = -1.0;
                j[(0, 1)] = 0.0;
                j[(1, 0)] = -20.0 * x[0];
                j[(1, 1)] = 10.0;
                Ok(())
            },
        }
    }

    struct Pair;

    impl ResidualSystem for Pair {
        fn dim(&self) -> usize {
            4
        }
        fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
            out.copy_from_slice(&residual_n(&[0.1, 0.1], &ScaleMatrix::identity(), x)?);
            Ok(())
        }
        fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) -> Result<()> {
            jac.copy_from(&jacobian_n(&[0.1, 0.1], &ScaleMatrix::identity(), x)?);
            Ok(())
        }
    }

    #[test]
    fn linear_residual() {
        let r = minimize(&linear(), &boxed(10.0, 2), &[0.0, 0.0], &Default::default());
        assert!(r.converged);
        assert!(r.objective < 1e-26);
        assert!((r.point[0] - 1.0).abs() < 1e-13 && (r.point[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rosenbrock_residual() {
        let r = minimize(
            &rosenbrock(),
            &boxed(10.0, 2),
            &[-1.2, 1.0],
            &Default::default(),
        );
        assert!(r.converged, "{r:?}");
        assert!((r.point[0] - 1.0).abs() < 1e-8 && (r.point[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_body_pair_converges_superlinearly() {
        let r = minimize(
            &Pair,
            &boxed(5.0, 4),
            &[-2.0, 0.1, 2.1, -0.1],
            &Default::default(),
        );
        assert!(r.converged, "{r:?}");
        assert!(r.residual_inf < 1e-13);
        // the solution is (+-sqrt5, 0) up to rotation about the origin
        let q = &r.point;
        let d = (q[2] - q[0]).hypot(q[3] - q[1]);
        assert!((d - 2.0 * 5f64.sqrt()).abs() < 1e-12);
        assert!((q[0] + q[2]).abs() < 1e-12 && (q[1] + q[3]).abs() < 1e-12);
        let h = &r.residual_history;
        let k = h.len();
        assert!(k >= 3);
        for w in h[k - 3..].windows(2) {
            assert!(w[1] <= w[0].powf(1.5), "{h:?}");
        }
    }

    #[test]
    fn iterates_stay_in_box_and_descend() {
        // the unconstrained minimizer (1, 2) lies outside the box
        let b = Bounds::new(vec![-1.0, -1.0], vec![0.5, 0.5]).unwrap();
        let r = minimize(&linear(), &b, &[0.0, 0.0], &Default::default());
        assert!(b.contains(&r.point));
        assert!((r.point[0] - 0.5).abs() < 1e-12 && (r.point[1] - 0.5).abs() < 1e-12);
        assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.converged);
        assert_eq!(r.termination, Termination::SmallStep);
    }

    #[test]
    fn deterministic() {
        let a = minimize(
            &rosenbrock(),
            &boxed(10.0, 2),
            &[-1.2, 1.0],
            &Default::default(),
        );
        let b = minimize(
            &rosenbrock(),
            &boxed(10.0, 2),
            &[-1.2, 1.0],
            &Default::default(),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn start_outside_box() {
        let r = minimize(&linear(), &boxed(1.0, 2), &[3.0, 0.0], &Default::default());
        assert_eq!(r.termination, Termination::OutOfBox);
        assert!(!r.converged);
        assert!(boxed(1.0, 2).contains(&r.point));
    }

    #[test]
    fn converged_start_is_returned_unchanged() {
        let x = 5f64.sqrt();
        let start = [-x, 0.0, x, 0.0];
        let r = minimize(&Pair, &boxed(5.0, 4), &start, &Default::default());
        assert_eq!(r.point, start.to_vec());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.termination, Termination::Residual);
    }

    #[test]
    fn collision_start_fails_softly() {
        let r = minimize(
            &Pair,
            &boxed(5.0, 4),
            &[1.0, 1.0, 1.0, 1.0],
            &Default::default(),
        );
        assert!(!r.converged);
        assert_eq!(r.termination, Termination::MaxIter);
    }
}
