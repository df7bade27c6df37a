use rand::seq::SliceRandom;
use rand::Rng;

/// `count` points of the unit cube with exactly one point per stratum
/// `[k/count, (k+1)/count)` along every axis.
pub fn latin_hypercube<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; count];
    let mut perm: Vec<usize> = (0..count).collect();
    let width = 1.0 / count as f64;
    for d in 0..dim {
        perm.shuffle(rng);
        for (p, k) in points.iter_mut().zip(&perm) {
            let t = (*k as f64 + rng.random::<f64>()) * width;
            // keep rounding from leaving the stratum
            p[d] = t.min((*k as f64 + 1.0) * width * (1.0 - f64::EPSILON));
        }
    }
    points
}
