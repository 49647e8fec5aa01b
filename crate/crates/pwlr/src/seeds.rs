//! Deterministic seed derivation for nested RNG streams.
//!
//! Every randomized component (forest trees, fold shuffles, perturbation
//! trials) seeds its own ChaCha stream from the user seed plus its structural
//! coordinates, so parallel and serial execution orders produce identical
//! results.

/// Mixes a user seed with structural coordinates into an independent stream
/// seed. SplitMix64 finalizer applied over a running combination; collisions
/// between distinct coordinate tuples are as unlikely as 64-bit hash
/// collisions.
pub(crate) fn mix(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        acc = splitmix64(acc ^ p.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    splitmix64(acc)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
