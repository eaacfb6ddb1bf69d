//! Keyed random streams.
//!
//! Every draw in the crate comes from a stream identified by a master seed and
//! a small tuple of coordinates (for example vertex and time). Streams are
//! independent of evaluation order, so parallel callers reproduce sequential
//! results exactly.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Stream tag for latent walk increments, keyed by vertex.
pub const TAG_WALK: u64 = 0x5741_4c4b;
/// Stream tag for edge draws, keyed by (time, row).
pub const TAG_EDGES: u64 = 0x4544_4745;
/// Stream tag for derived replicate seeds.
pub const TAG_REPLICATE: u64 = 0x5245_504c;
/// Stream tag for solver start vectors.
pub const TAG_SOLVER: u64 = 0x534f_4c56;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag and two coordinates into a 64-bit stream key.
pub fn derive_seed(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut h = splitmix(seed ^ 0x6c70_706d_6972_726f);
    h = splitmix(h ^ tag);
    h = splitmix(h ^ a);
    splitmix(h ^ b.rotate_left(17))
}

/// The generator used for all simulation draws.
pub type StreamRng = Xoshiro256PlusPlus;

/// Opens the stream identified by `(seed, tag, a, b)`.
pub fn stream(seed: u64, tag: u64, a: u64, b: u64) -> StreamRng {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, tag, a, b))
}

/// Uniform draw on `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn uniform(rng: &mut StreamRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli draw; `p <= 0` never succeeds and `p >= 1` always does.
#[inline]
pub fn bernoulli(rng: &mut StreamRng, p: f64) -> bool {
    uniform(rng) < p
}
