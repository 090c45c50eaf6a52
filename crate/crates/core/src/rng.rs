//! Counter-based random substreams.
//!
//! Every stochastic quantity is drawn from a ChaCha stream selected by
//! `(master seed, purpose, index, replicate)`, so results do not depend on
//! evaluation order or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags keep streams for different uses disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Latent = 1,
    LocationSubset = 2,
    DaySubset = 3,
    Marginal = 4,
    Locations = 5,
    Features = 6,
    RankTies = 7,
    Generic = 8,
    Truth = 9,
}

/// Stream for `(purpose, index, replicate)` under `master`.
pub fn substream(master: u64, purpose: Purpose, index: u64, replicate: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master ^ mix(purpose as u64)));
    rng.set_stream(mix(index.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mix(replicate.wrapping_add(1))));
    rng
}

/// Plain stream seeded from `seed`.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
