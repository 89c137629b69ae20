//! Deterministic trial-seed derivation.

/// Derive an independent 64-bit seed for trial `index` from a master seed.
///
/// The mixer is SplitMix64: the state `master + (index+1)·0x9E3779B97F4A7C15`
/// (wrapping) is pushed through the standard finalizer
///
/// ```text
/// z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
/// z ^= z >> 27;  z *= 0x94D049BB133111EB;
/// z ^= z >> 31;
/// ```
///
/// so `derive_trial_seed(m, i)` equals the `(i+1)`-th output of a SplitMix64
/// generator seeded with `m`. Distinct indices give avalanche-distinct
/// streams; the mapping is frozen (see the golden-vector test).
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(trial_index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
