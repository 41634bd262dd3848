//! Shared inputs for the benchmarks.

use ariadne_core::{EncodingSpec, Genome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` uniformly random genomes for `spec`, reproducible from `seed`.
pub fn random_genomes(spec: &EncodingSpec, n: usize, seed: u64) -> Vec<Genome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Genome::new(
                (0..spec.genome_len())
                    .map(|_| rng.random::<bool>())
                    .collect(),
            )
        })
        .collect()
}
