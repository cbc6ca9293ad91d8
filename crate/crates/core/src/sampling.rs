//! Counter-based sampling: sample `i` under seed `s` draws from its own
//! ChaCha stream, so results do not depend on evaluation order or threads.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

/// The generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `len` fair bits for sample `index`, little-endian inside 64-bit words.
pub fn sample_bits(seed: u64, index: u64, len: usize) -> Vec<u64> {
    let mut rng = sample_rng(seed, index);
    let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
    if !len.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (len % 64)) - 1;
        }
    }
    words
}

/// Number of sample indices `0..samples` satisfying `hit`.
pub fn count_hits<F>(samples: u64, parallelism: Parallelism, hit: F) -> u64
where
    F: Fn(u64) -> bool + Sync + Send,
{
    match parallelism {
        Parallelism::Serial => (0..samples).filter(|i| hit(*i)).count() as u64,
        Parallelism::Parallel => (0..samples).into_par_iter().filter(|i| hit(*i)).count() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(sample_bits(7, 3, 100), sample_bits(7, 3, 100));
        assert_ne!(sample_bits(7, 3, 100), sample_bits(7, 4, 100));
        assert_ne!(sample_bits(7, 3, 100), sample_bits(8, 3, 100));
        assert_eq!(sample_bits(1, 0, 70)[1] >> 6, 0);
    }

    #[test]
    fn prefix_bits_are_stable_across_lengths() {
        let long = sample_bits(11, 5, 128);
        let short = sample_bits(11, 5, 64);
        assert_eq!(long[0], short[0]);
    }

    #[test]
    fn parallel_matches_serial() {
        let hit = |i: u64| sample_bits(42, i, 16)[0].count_ones() >= 8;
        assert_eq!(count_hits(5000, Parallelism::Serial, hit), count_hits(5000, Parallelism::Parallel, hit));
    }
}
