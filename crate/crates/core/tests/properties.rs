mod common;

use balconf::continuation::{distinct_classes, ContinuationTree};
use balconf::local_solver::{LocalResult, Termination};
use balconf::mechanics::*;
use balconf::multistart::{Identification, SolutionRegistry};
use balconf::problems::delta_box;
use balconf::sampling::{sample, Bounds, SamplerKind, SamplerSpec};
use common::*;
use proptest::prelude::*;

fn spread_points(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 2 * n).prop_filter("bodies too close", |q| {
        let pts: Vec<&[f64]> = q.chunks_exact(2).collect();
        (0..pts.len()).all(|i| {
            ((i + 1)..pts.len()).all(|j| (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]) > 0.2)
        })
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn converged(point: Vec<f64>) -> LocalResult {
    LocalResult {
        point,
        objective: 0.0,
        residual_inf: 0.0,
        converged: true,
        iterations: 0,
        termination: Termination::Residual,
        residual_history: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_rotates_with_configuration(q in spread_points(4), angle in 0.0..6.3f64) {
        let m = [0.1, 0.2, 0.3, 0.4];
        let s = ScaleMatrix::new(0.7, 0.7).unwrap();
        let f = residual(&m, &s, &q).unwrap();
        let g = residual(&m, &s, &rotate(&q, angle)).unwrap();
        prop_assert!(max_diff(&rotate(&f, angle), &g) < 1e-11);
    }

    #[test]
    fn balanced_residual_commutes_with_reflections(q in spread_points(3), sy in 0.2..1.0f64) {
        let m = [0.1, 0.5, 0.9];
        let s = ScaleMatrix::new(1.0, sy).unwrap();
        let f = residual(&m, &s, &q).unwrap();
        prop_assert!(max_diff(&reflect_x(&f), &residual(&m, &s, &reflect_x(&q)).unwrap()) < 1e-12);
        prop_assert!(max_diff(&reflect_y(&f), &residual(&m, &s, &reflect_y(&q)).unwrap()) < 1e-12);
    }

    #[test]
    fn relabeling_permutes_residual(q in spread_points(3)) {
        let m = [0.2, 0.3, 0.5];
        let s = ScaleMatrix::new(1.0, 0.4).unwrap();
        let f = residual(&m, &s, &q).unwrap();
        // bodies (0, 1, 2) -> (2, 0, 1)
        let pq = [q[4], q[5], q[0], q[1], q[2], q[3]];
        let pf = residual(&[m[2], m[0], m[1]], &s, &pq).unwrap();
        prop_assert!(max_diff(&pf, &[f[4], f[5], f[0], f[1], f[2], f[3]]) < 1e-12);
    }

    #[test]
    fn weighted_residual_sum(q in spread_points(4), sx in 0.2..1.0f64, sy in 0.2..1.0f64) {
        let m = [0.4, 0.1, 0.25, 0.7];
        let s = ScaleMatrix::new(sx, sy).unwrap();
        let f = residual(&m, &s, &q).unwrap();
        let u = potential(&m, &q).unwrap();
        let c = center_of_mass(&m, &q);
        let total: f64 = m.iter().sum();
        let sum_x: f64 = (0..4).map(|i| m[i] * f[2 * i]).sum();
        let sum_y: f64 = (0..4).map(|i| m[i] * f[2 * i + 1]).sum();
        prop_assert!((sum_x - u * sx * total * c[0]).abs() < 1e-12);
        prop_assert!((sum_y - u * sy * total * c[1]).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(q in spread_points(5), sy in 0.2..1.0f64) {
        let m = [0.1, 0.1, 0.3, 0.2, 0.6];
        let s = ScaleMatrix::new(1.0, sy).unwrap();
        let once = normalize(&m, &s, &q).unwrap();
        let twice = normalize(&m, &s, once.config.as_slice()).unwrap();
        prop_assert!(max_diff(once.config.as_slice(), twice.config.as_slice()) < 1e-12);
        prop_assert!((moment_of_inertia(&m, &s, once.config.as_slice()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_box(seed in 0u64..1000, lo in -5.0..0.0f64, width in 0.1..4.0f64) {
        let b = Bounds::new(vec![lo; 3], vec![lo + width; 3]).unwrap();
        for kind in SamplerKind::ALL {
            let pts = sample(&b, 64, &SamplerSpec::new(kind, seed)).unwrap();
            prop_assert!(pts.iter().all(|p| b.contains(p)), "{}", kind);
        }
    }

    #[test]
    fn delta_box_contains_its_center(guess in prop::collection::vec(-3.0..3.0f64, 2..10), delta in 0.01..0.5f64) {
        prop_assume!(guess.iter().any(|x| x.abs() > 1e-3));
        let b = delta_box(&guess, delta).unwrap();
        prop_assert!(b.contains(&guess));
    }

    #[test]
    fn registry_keeps_one_member_per_orbit(angle in 0.0..6.3f64) {
        let m = vec![0.1; 3];
        let tri = triangle(0.1);
        let mut reg = SolutionRegistry::new(Identification::orbit(m.clone(), SymmetryMode::Central));
        prop_assert!(reg.register(&converged(tri.clone())));
        prop_assert!(!reg.register(&converged(rotate(&tri, angle))));
        prop_assert!(!reg.register(&converged(reflect_x(&tri))));
        prop_assert_eq!(reg.len(), 1);
    }
}

#[test]
fn sum_identity_on_synthetic_tree() {
    let x = 5f64.sqrt();
    let t = ContinuationTree {
        masses: vec![0.1, 0.1],
        scale: ScaleMatrix::identity(),
        n_body_solutions: vec![vec![-x, 0.0, x, 0.0], vec![x, 0.0, -x, 0.0]],
        restricted_solutions: vec![vec![[0.0, 1.0]; 3], vec![[1.0, 1.0]; 2]],
        small_mass: None,
        refined_solutions: vec![],
    };
    assert_eq!(t.n_sol_per_base(), vec![3, 2]);
    assert_eq!(t.n_sol_n1(), 5);
    assert!(distinct_classes(&t, SymmetryMode::Central).is_empty());
}

#[test]
fn derivatives_match_finite_differences() {
    for n in [2, 3, 4] {
        let e = worst_derivative_error(n, 30, n as u64);
        assert!(e < 1e-5, "n = {n}: {e}");
    }
}
