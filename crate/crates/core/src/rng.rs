//! Seeded randomness.
//!
//! All randomness in the crate comes from xoshiro256** seeded through
//! splitmix64, and uniform reals are built from the top 53 bits of each draw,
//! so a seed maps to the same stream on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

pub type Prng = Xoshiro256StarStar;

pub const GENERATOR_NAME: &str = "xoshiro256**/splitmix64";

pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)`.
pub fn unit(rng: &mut Prng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[lo, hi)`.
pub fn uniform(rng: &mut Prng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Derives an independent stream seed, e.g. one per restart or per epoch.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
