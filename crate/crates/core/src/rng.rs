//! Seed derivation. Every random stream in a run is a pure function of a
//! master seed and the coordinates of the job that consumes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// One step of the splitmix64 mixer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed` one word at a time.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, p| splitmix64(acc ^ splitmix64(*p)))
}

/// Seed for one sweep cell.
pub fn cell_seed(master: u64, width: usize, trial: usize, rep: usize) -> u64 {
    derive_seed(master, &[width as u64, trial as u64, rep as u64])
}

pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream for `(seed, tag)`, e.g. one per layer.
pub fn sub_rng(seed: u64, tag: u64) -> Rng {
    rng_from(derive_seed(seed, &[tag]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn no_collisions_on_a_million_cells() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for width in 0..100 {
            for trial in 0..100 {
                for rep in 0..100 {
                    assert!(seen.insert(cell_seed(42, width, trial, rep)));
                }
            }
        }
    }

    #[test]
    fn order_matters() {
        assert_ne!(cell_seed(1, 2, 3, 4), cell_seed(1, 3, 2, 4));
    }
}
