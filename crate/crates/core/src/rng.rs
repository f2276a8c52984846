//! Deterministic random-number streams.
//!
//! Every stochastic component draws from a counter-based ChaCha stream keyed
//! by a 64-bit master seed and a stream id, so a replicate's randomness
//! depends only on `(seed, id)` and never on scheduling or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha stream `stream` under the given master seed.
pub fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a fresh 64-bit master seed for a nested level (e.g. per Monte-Carlo
/// replicate) from `(seed, tag, id)` via splitmix64 steps.
pub fn derive_seed(seed: u64, tag: u64, id: u64) -> u64 {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(tag.wrapping_add(1));
    state = splitmix64(&mut state);
    state ^= id.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    splitmix64(&mut state)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
