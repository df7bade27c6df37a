use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BURN_IN: usize = 100;

/// One logistic map `x -> 4x(1 - x)` per axis, read through the arcsine
/// change of variables so that the invariant density becomes uniform.
///
/// The initial states come from a seeded generator. An orbit that lands on a
/// fixed point or too close to 0 or 1 is reseeded from the same generator.
#[derive(Debug, Clone)]
pub struct ChaoticSequence {
    state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl ChaoticSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = (0..dim).map(|_| Self::fresh(&mut rng)).collect();
        let mut s = Self { state, rng };
        for _ in 0..BURN_IN {
            s.advance();
        }
        s
    }

    fn fresh(rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(0.05..0.95)
    }

    fn advance(&mut self) {
        for x in self.state.iter_mut() {
            let next = 4.0 * *x * (1.0 - *x);
            *x = if !(1e-12..=1.0 - 1e-12).contains(&next) || (next - 0.75).abs() < 1e-12 {
                Self::fresh(&mut self.rng)
            } else {
                next
            };
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.advance();
        self.state
            .iter()
            .map(|x| (2.0 / std::f64::consts::PI) * x.sqrt().asin())
            .collect()
    }
}
