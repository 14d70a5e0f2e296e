//! Seeded, platform-independent random streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by the run seed.
//! Independent consumers use distinct stream ids on the same key, so adding
//! draws in one role never shifts the sequence seen by another. Stream ids
//! pack `(generation << 8) | role`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Consumers of randomness. The discriminant is the low byte of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Role {
    Init = 0,
    Breed = 1,
    SynthSample = 2,
    SynthNoise = 3,
}

pub fn stream(seed: u64, generation: u64, role: Role) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 8) | role as u64);
    rng
}
