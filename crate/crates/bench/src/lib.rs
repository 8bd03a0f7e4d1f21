//! Fixtures shared by the benchmarks.

use stablelab::rng::{self, family};
use stablelab::{generate_instance, sample_exp_sequence, CostMatrix, CostSequence, Distribution};

/// Exponential-cost instance of size `n`, fixed by `seed`.
pub fn exponential_instance(n: usize, seed: u64) -> CostMatrix {
    generate_instance(
        n,
        &Distribution::exponential(),
        &mut rng::stream(seed, family::DIRECT, 0),
    )
    .expect("n >= 1")
}

/// Exponential-base cost sequence of length `n`, fixed by `seed`.
pub fn exp_sequence(n: usize, seed: u64) -> CostSequence {
    sample_exp_sequence(n, &mut rng::stream(seed, family::RECURSION, 0)).expect("n >= 1")
}
