//! Seed derivation. Every random draw in the crate flows through here so a
//! single user seed reproduces a run independent of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes get independent ChaCha streams.
pub mod stream {
    pub const SAMPLING: u64 = 0;
    pub const BOOTSTRAP: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SPATIAL: u64 = 4;
}

/// Generator for the `index`-th unit of work of a given purpose.
pub fn derived(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
    rng.set_stream(stream);
    rng
}
