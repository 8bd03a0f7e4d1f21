//! Reproducible random streams.
//!
//! Every replication draws from its own ChaCha8 stream. The 256-bit key is
//! derived from the master seed and a stream family (so that, e.g., the two
//! engines of an equivalence run never share draws), the 64-bit stream id is
//! the replication index, and the block counter advances with the draws.
//! A replication's numbers therefore depend only on `(seed, family, rep)`,
//! never on which thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream families used by the experiment runner.
pub mod family {
    pub const RECURSION: u64 = 1;
    pub const DIRECT: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for replication `rep` of stream family `family` under `seed`.
pub fn stream(seed: u64, family: u64, rep: u64) -> StreamRng {
    let mut state = seed ^ family.wrapping_mul(0xd1b5_4a32_d192_ed03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// Human-readable description of the stream layout, echoed in reports.
pub fn lineage(seed: u64) -> String {
    format!("chacha8(key=splitmix64({seed} ^ family), stream=replication index, counter=draw index)")
}
