//! Deterministic seed derivation.
//!
//! Every random component of the pipeline gets its own seed derived from a
//! single master seed with [`derive_seed`]. The mixing function is the
//! SplitMix64 finalizer applied to `master`, then folded with `stream` and
//! `index`:
//!
//! ```text
//! s = mix(mix(mix(master) ^ stream) ^ index)
//! mix(z) = z += 0x9e3779b97f4a7c15; z = (z ^ z>>30) * 0xbf58476d1ce4e5b9;
//!          z = (z ^ z>>27) * 0x94d049bb133111eb; z ^ z>>31
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, one per consumer, so that seeds never collide across components.
pub mod stream {
    pub const NOISY_PREPARATION: u64 = 0x01;
    pub const HERALD: u64 = 0x02;
    pub const TOMOGRAPHY: u64 = 0x03;
    pub const MONTE_CARLO: u64 = 0x04;
    pub const BISEPARABLE_SAMPLING: u64 = 0x05;
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(master) ^ stream) ^ index)
}

pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
