//! Reproducible random sub-streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] addressed by
//! `(seed, domain, index)`. The domain selects the key and the index selects
//! the ChaCha stream, so sub-streams never overlap and do not depend on the
//! order in which workers consume them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named purposes for sub-streams. Values are part of the determinism
/// contract; do not renumber.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Placement = 1,
    Shadowing = 2,
    SmallScale = 3,
    Trials = 4,
    RandomBeamformer = 5,
    SyntheticFeatures = 6,
    RawSamples = 7,
    ChannelBlock = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes any number of words into one 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Returns the generator for sub-stream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, domain as u64]));
    rng.set_stream(index);
    rng
}

/// Like [`substream`], with an extra discriminator folded into the key.
pub fn substream_keyed(seed: u64, domain: Domain, key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, domain as u64, key]));
    rng.set_stream(index);
    rng
}
