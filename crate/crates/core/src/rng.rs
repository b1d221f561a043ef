//! Deterministic seed splitting.
//!
//! One root seed drives a run. Each consumer of randomness (arrivals, tip
//! selection, attack construction, exit-profile walks) gets its own ChaCha
//! stream, so adding or removing a consumer never shifts another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent purposes that draw random numbers within a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 1,
    TipSelection = 2,
    Attack = 3,
    Estimation = 4,
}

/// SplitMix64 finalizer. Used to decorrelate neighbouring seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th run of a batch rooted at `seed`.
pub fn run_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index))
}

pub fn stream(seed: u64, purpose: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
