use super::halton::first_primes;

/// Smallest prime `>= n` (and at least 2).
fn prime_at_least(n: usize) -> u64 {
    let n = n.max(2) as u64;
    let mut k = n;
    loop {
        if first_primes(64)
            .iter()
            .filter(|p| **p < k)
            .all(|p| !k.is_multiple_of(*p))
            && (2..k)
                .take_while(|d| d * d <= k)
                .all(|d| !k.is_multiple_of(d))
        {
            return k;
        }
        k += 1;
    }
}

/// Faure sequence in base `b`, the smallest prime not below the dimension.
///
/// The first `b^4` points are dropped; `offset` skips further points.
#[derive(Debug, Clone)]
pub struct FaureSequence {
    dim: usize,
    base: u64,
    index: u64,
    /// Pascal matrix entries `C(j, r) mod b`, indexed `[j][r]`.
    binom: Vec<Vec<u64>>,
}

const MAX_DIGITS: usize = 64;

impl FaureSequence {
    pub fn new(dim: usize, offset: u64) -> Self {
        let base = prime_at_least(dim);
        let mut binom = vec![vec![0u64; MAX_DIGITS]; MAX_DIGITS];
        for j in 0..MAX_DIGITS {
            binom[j][0] = 1;
            for r in 1..=j {
                binom[j][r] =
                    (binom[j - 1][r - 1] + if r < j { binom[j - 1][r] } else { 0 }) % base;
            }
        }
        Self {
            dim,
            base,
            index: base.pow(4) + offset,
            binom,
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let b = self.base;
        let mut digits = Vec::with_capacity(MAX_DIGITS);
        let mut k = self.index;
        while k > 0 {
            digits.push(k % b);
            k /= b;
        }
        self.index += 1;

        let inv = 1.0 / b as f64;
        let mut point = Vec::with_capacity(self.dim);
        for d in 0..self.dim {
            if d > 0 {
                // y_r <- sum_{j >= r} C(j, r) y_j  (mod b)
                let prev = digits.clone();
                for (r, digit) in digits.iter_mut().enumerate() {
                    let mut acc = 0u64;
                    for (j, y) in prev.iter().enumerate().skip(r) {
                        acc = (acc + self.binom[j][r] * y) % b;
                    }
                    *digit = acc;
                }
            }
            let mut f = inv;
            let mut x = 0.0;
            for y in &digits {
                x += *y as f64 * f;
                f *= inv;
            }
            point.push(x);
        }
        point
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent construction: explicit generator matrix powers applied to
    /// digit vectors with binomial coefficients from the factorial formula.
    fn oracle(index: u64, dim: usize, base: u64) -> Vec<f64> {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1u64, |acc, i| acc * (n + 1 - i) / i)
        }
        let mut digits = vec![];
        let mut k = index;
        while k > 0 {
            digits.push(k % base);
            k /= base;
        }
        let m = digits.len();
        (0..dim)
            .map(|d| {
                // entry (r, j) of P^d is C(j, r) d^(j - r)
                (0..m)
                    .map(|r| {
                        let y: u64 = (r..m)
                            .map(|j| {
                                binom(j as u64, r as u64)
                                    * (d as u64).pow((j - r) as u32)
                                    * digits[j]
                            })
                            .sum::<u64>()
                            % base;
                        y as f64 / (base as f64).powi(r as i32 + 1)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn base_is_smallest_prime_not_below_dimension() {
        assert_eq!(FaureSequence::new(1, 0).base(), 2);
        assert_eq!(FaureSequence::new(2, 0).base(), 2);
        assert_eq!(FaureSequence::new(4, 0).base(), 5);
        assert_eq!(FaureSequence::new(8, 0).base(), 11);
        assert_eq!(FaureSequence::new(10, 0).base(), 11);
        assert_eq!(FaureSequence::new(14, 0).base(), 17);
    }

    #[test]
    fn matches_generator_matrix_oracle() {
        for dim in [2usize, 3, 5, 8] {
            let mut s = FaureSequence::new(dim, 0);
            let b = s.base();
            for k in 0..200 {
                let p = s.next_point();
                let q = oracle(b.pow(4) + k, dim, b);
                for (a, c) in p.iter().zip(&q) {
                    assert!((a - c).abs() < 1e-14, "dim {dim} k {k}: {p:?} vs {q:?}");
                }
            }
        }
    }

    #[test]
    fn first_dimension_is_radical_inverse() {
        let mut s = FaureSequence::new(3, 0);
        let p = s.next_point();
        assert!((p[0] - super::super::radical_inverse(81, 3)).abs() < 1e-15);
    }
}
