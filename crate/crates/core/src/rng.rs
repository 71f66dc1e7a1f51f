//! Seed-derived random substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(seed, domain, index)`, so work can be split across threads in any order
//! and still reproduce the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_SAMPLE: u64 = 1;
pub(crate) const DOMAIN_SCENARIO: u64 = 2;
pub(crate) const DOMAIN_TRIAL_SEED: u64 = 3;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(domain)));
    rng.set_stream(index);
    rng
}

/// Stream for sample `sample` of solver iteration `iteration`.
pub fn sample_stream(seed: u64, iteration: u64, sample: u64) -> ChaCha8Rng {
    substream(seed ^ mix64(iteration.wrapping_add(DOMAIN_SAMPLE << 32)), DOMAIN_SAMPLE, sample)
}

/// Independent seed for trial `trial` of an experiment.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix64(mix64(seed ^ mix64(DOMAIN_TRIAL_SEED)) ^ trial)
}
