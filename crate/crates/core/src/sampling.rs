//! Reproducible random key sets for experiments and tests.

use std::collections::HashSet;

use rand::Rng;

use crate::hashing::finalize;
use crate::word::low_mask;

/// Deterministic per-trial seed mixed from a base seed and the trial index.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    finalize(base ^ finalize(index.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// `m` distinct keys drawn uniformly from `[1, 2^w - 1]`, in draw order.
///
/// Panics if `m` exceeds the universe size.
pub fn random_keys<R: Rng + ?Sized>(rng: &mut R, m: usize, w: u32) -> Vec<u64> {
    let max = low_mask(w);
    assert!(
        m as u128 <= max as u128,
        "cannot draw {m} distinct {w}-bit keys"
    );
    let mut seen = HashSet::with_capacity(m);
    let mut keys = Vec::with_capacity(m);
    while keys.len() < m {
        let x = rng.gen_range(1..=max);
        if seen.insert(x) {
            keys.push(x);
        }
    }
    keys
}
