//! Ground truth for tests and experiments.
//!
//! Nothing here is needed to use a sketch. The module provides explicit hash
//! tables, exhaustive anomaly search, a decoder that ignores chosen buckets,
//! and an exact linear-algebra inverse for tiny key widths.

mod anomaly;
pub mod fixtures;
mod injected;
mod preimage;

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use anomaly::{
    anomalous_buckets, enumerate_anomalies, find_native_anomalies, label_nativity,
    native_anomalies, Anomaly, NativityLabel,
};
pub use injected::{parse_u64, InjectedHashTable};
pub use preimage::{exhaustive_preimage, PreimageBounds, MAX_PREIMAGE_BITS};

use crate::decode::{peel, DecodeLimits, DecodeObserver, DecodeOutcome, DecodeTrace};
use crate::error::Result;
use crate::hashing::{HashParams, HashSource};
use crate::sampling::{random_keys, trial_seed};
use crate::sketch::Sketch;
use crate::word::Word;

/// Subset visits allowed per trial in [`count_native_anomalies_mc`].
pub const MC_BUDGET: u64 = 1 << 24;

/// Decodes while treating every bucket in `banned` as never pure.
pub fn reference_peel<W: Word, H: HashSource>(
    sketch: &mut Sketch<W, H>,
    banned: &BTreeSet<usize>,
    limits: DecodeLimits,
) -> DecodeOutcome<W> {
    reference_peel_observed(sketch, banned, limits, &mut ())
}

pub fn reference_peel_traced<W: Word, H: HashSource>(
    sketch: &mut Sketch<W, H>,
    banned: &BTreeSet<usize>,
    limits: DecodeLimits,
) -> (DecodeOutcome<W>, DecodeTrace<W>) {
    let mut trace = DecodeTrace::default();
    let out = reference_peel_observed(sketch, banned, limits, &mut trace);
    (out, trace)
}

pub fn reference_peel_observed<W: Word, H: HashSource, O: DecodeObserver<W>>(
    sketch: &mut Sketch<W, H>,
    banned: &BTreeSet<usize>,
    limits: DecodeLimits,
    observer: &mut O,
) -> DecodeOutcome<W> {
    let mut mask = vec![false; sketch.params().buckets()];
    for &b in banned {
        if b < mask.len() {
            mask[b] = true;
        }
    }
    peel(sketch, limits, Some(&mask), observer)
}

/// Native-anomaly counts over `trials` random stored sets of `m` 64-bit keys
/// in `n` buckets with `k` slots. Trial `t` uses [`trial_seed`]`(seed, t)`.
pub fn count_native_anomalies_mc(
    n: usize,
    m: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    (0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
            let params = HashParams::new(64, k, n, rng.gen(), 0)?;
            let s0 = random_keys(&mut rng, m, 64);
            Ok(find_native_anomalies(&params, &s0, usize::MAX, MC_BUDGET)?.len())
        })
        .collect()
}

/// Stored-set view used by the containment check between decoders: the set
/// at the start of every round, padded with the final state.
pub fn stored_by_round<W: Word>(
    trace: &DecodeTrace<W>,
    s0: &HashSet<W>,
    rounds: usize,
) -> Vec<HashSet<W>> {
    let mut stored = s0.clone();
    let mut out = Vec::with_capacity(rounds + 1);
    out.push(stored.clone());
    for r in 0..rounds {
        if let Some(round) = trace.rounds.get(r) {
            for step in &round.steps {
                if !stored.remove(&step.key) {
                    stored.insert(step.key);
                }
            }
        }
        out.push(stored.clone());
    }
    out
}
