//! Seed mixing shared by every sampler.
//!
//! Replicate `i` of an experiment with master seed `s` runs with
//! `replicate_seed(s, i)`, independent of worker scheduling.

/// One round of the SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under master seed `master`.
#[inline]
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Derives a sub-seed for a named purpose, e.g. one of two independent samplers
/// driven by the same replicate seed.
#[inline]
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ splitmix64(tag))
}
