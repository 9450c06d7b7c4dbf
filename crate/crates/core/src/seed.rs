//! Seed splitting.
//!
//! Every random stream in a run is derived from the master seed by
//! `derive_seed(master, index)`, a SplitMix64 finaliser applied to
//! `master ⊕ (index+1)·φ64`. Realization `i` uses `derive_seed(master, i)`,
//! and screen `j` of that realization uses `derive_seed(realization_seed, j)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}
