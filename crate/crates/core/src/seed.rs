//! Derivation of independent RNG streams from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags; each simulation component draws from its own stream so that
/// changing one component never perturbs the randomness of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Delays = 2,
    Capacity = 3,
    Profiles = 4,
    Requests = 5,
    Ingress = 6,
    Plans = 7,
    Tree = 8,
    Bridges = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream tag and an index.
pub fn derive(base: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ (stream as u64).rotate_left(48)) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(base: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    rng(derive(base, stream, index))
}
