//! Fixtures shared by the benchmarks.

use morphoqd::morphology::{random_morphology, MAX_MODULES};
use morphoqd::MorphologyTree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` random genomes drawn from a fixed seed.
pub fn genomes(n: usize, seed: u64) -> Vec<MorphologyTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_morphology(&mut rng, MAX_MODULES)).collect()
}
