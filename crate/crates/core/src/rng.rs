//! Seeded random number generation. Every experiment records the generator
//! name and seed so runs can be reproduced bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name recorded in reports alongside the seed.
pub const RNG_NAME: &str = "chacha8";

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for replica `stream` of an experiment seeded with
/// `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
