//! Seed derivation. A master seed fans out to independent per-stage seeds by
//! hashing a fixed label, so each stage can be rerun on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SYNTH: &str = "synth";
pub const SAMPLE: &str = "sample";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for a labelled stage from the master seed.
pub fn derive(master: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(splitmix64(master), |acc, b| splitmix64(acc ^ u64::from(b)))
}

/// An RNG for one independent stream (a draw, a sample layer) under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
