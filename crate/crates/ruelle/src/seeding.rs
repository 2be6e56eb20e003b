//! Deterministic seed derivation.
//!
//! Every random computation in the crate is a pure function of one user seed.
//! Parallel work is seeded per unit of work, not per thread, so results are
//! identical for any worker count: unit `w` derives its stream from
//! `seed ^ splitmix64(w)` and partial results are merged in unit order.

/// SplitMix64 finalizer; the standard 64-bit mixing function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `w`-th unit of work under a user seed.
pub fn unit_seed(seed: u64, w: u64) -> u64 {
    seed ^ splitmix64(w)
}
