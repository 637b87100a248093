//! Shifted Halton sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b as u64) as f64;
        i /= b as u64;
        f *= inv;
    }
    r
}

/// Halton points in `[0,1)^dim` with a Cranley–Patterson rotation drawn from
/// `seed`. Index 0 of the raw sequence is skipped.
#[derive(Clone, Debug)]
pub struct Halton {
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Halton {
        assert!(dim <= PRIMES.len(), "Halton dimension too large");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
            next: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn point(&self, i: u64) -> Vec<f64> {
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| (radical_inverse(i, PRIMES[d]) + s).fract())
            .collect()
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        let p = self.point(self.next);
        self.next += 1;
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two_inverse() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn uniform_mean() {
        let h = Halton::new(3, 7);
        let n = 4096;
        let mean: Vec<f64> = (0..3)
            .map(|d| h.clone().take(n).map(|p| p[d]).sum::<f64>() / n as f64)
            .collect();
        for m in mean {
            assert!((m - 0.5).abs() < 5e-3);
        }
    }
}
