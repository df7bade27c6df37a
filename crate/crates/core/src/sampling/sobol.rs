use crate::error::{CoreError, Result};

const DIRECTIONS: &str = include_str!("../../data/sobol_directions.txt");

/// Number of dimensions supported by the bundled direction numbers.
pub const SOBOL_MAX_DIMENSION: usize = 32;

const BITS: usize = 32;

/// Direction integers `v_1 .. v_32` for every dimension.
fn direction_table(dim: usize) -> Vec<[u32; BITS]> {
    let mut table = Vec::with_capacity(dim);
    let mut first = [0u32; BITS];
    for (k, v) in first.iter_mut().enumerate() {
        *v = 1 << (BITS - 1 - k);
    }
    table.push(first);
    let rows = DIRECTIONS
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    for line in rows.take(dim.saturating_sub(1)) {
        let nums: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse().expect("malformed Sobol direction table"))
            .collect();
        let (s, a) = (nums[0] as usize, nums[1]);
        let m = &nums[2..2 + s];
        let mut v = [0u32; BITS];
        for i in 0..s.min(BITS) {
            v[i] = m[i] << (BITS - 1 - i);
        }
        for i in s..BITS {
            let mut x = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (a >> (s - 1 - k)) & 1 == 1 {
                    x ^= v[i - k];
                }
            }
            v[i] = x;
        }
        table.push(v);
    }
    table
}

/// Unscrambled Sobol sequence in Gray-code order. Index 0 is the origin; the
/// first point produced is index `start`.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub fn new(dim: usize, start: u64) -> Result<Self> {
        if dim == 0 || dim > SOBOL_MAX_DIMENSION {
            return Err(CoreError::Config(format!(
                "Sobol sampling supports 1..={SOBOL_MAX_DIMENSION} dimensions, got {dim}"
            )));
        }
        if start >= 1 << BITS {
            return Err(CoreError::Config("Sobol start index exceeds 2^32".into()));
        }
        let directions = direction_table(dim);
        let gray = start ^ (start >> 1);
        let state = directions
            .iter()
            .map(|v| {
                (0..BITS)
                    .filter(|b| (gray >> b) & 1 == 1)
                    .fold(0u32, |acc, b| acc ^ v[b])
            })
            .collect();
        Ok(Self {
            directions,
            state,
            index: start,
        })
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let point = self.state.iter().map(|x| *x as f64 * scale).collect();
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        point
    }
}
