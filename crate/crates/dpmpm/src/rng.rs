//! Seed discipline.
//!
//! Every run derives all of its randomness from a single `u64` seed through
//! fixed ChaCha20 streams:
//!
//! * stream `chain * 2^32` drives the Gibbs chain itself,
//! * stream `chain * 2^32 + 1 + k` drives the extra draws needed to release
//!   output dataset `k` (synthesis redraws, for instance).
//!
//! Keeping the release draws off the chain stream means the chain trajectory
//! — and therefore the trace and every downstream file — does not depend on
//! how many datasets were requested, and independent chains never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator used throughout the crate.
pub type RunRng = ChaCha20Rng;

const CHAIN_STRIDE: u64 = 1 << 32;

/// RNG driving Gibbs chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u32) -> RunRng {
    let mut rng = RunRng::seed_from_u64(seed);
    rng.set_stream(u64::from(chain) * CHAIN_STRIDE);
    rng
}

/// RNG for the draws that produce output dataset `index` (0-based) of a chain.
pub fn output_rng(seed: u64, chain: u32, index: u32) -> RunRng {
    let mut rng = RunRng::seed_from_u64(seed);
    rng.set_stream(u64::from(chain) * CHAIN_STRIDE + 1 + u64::from(index));
    rng
}
