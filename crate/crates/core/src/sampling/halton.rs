/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while index > 0 {
        x += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    x
}

pub(crate) fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut k = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|p| *p * *p <= k)
            .all(|p| !k.is_multiple_of(*p))
        {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

/// Halton sequence using the first `dim` primes as bases. The first point is
/// index `offset + 1` (index 0 is the origin and is never produced).
#[derive(Debug, Clone)]
pub struct HaltonSequence {
    bases: Vec<u64>,
    index: u64,
}

impl HaltonSequence {
    pub fn new(dim: usize, offset: u64) -> Self {
        Self {
            bases: first_primes(dim),
            index: offset,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases
            .iter()
            .map(|b| radical_inverse(self.index, *b))
            .collect()
    }
}
