//! Breadth-first peeling decoder.
//!
//! Decoding repeatedly finds buckets that look pure, toggles the key they
//! seem to hold and records it in the decoded set. Buckets are processed in
//! rounds: every bucket queued at the start of a round is handled before any
//! bucket that became pure during the round. A bucket that looks pure without
//! being pure (an anomaly) makes the decoder insert a key instead of removing
//! one; the breadth-first order lets the decoder remove it again later.
//!
//! Decoding can fail in three ways, all returned as data:
//!
//! * the queue drains while some bucket is still nonzero ([`FailureReason::ResidueNonzero`]);
//! * an anomaly keeps the decoder cycling ([`FailureReason::RoundLimit`]);
//! * a zero-XOR key set cancelled out of every bucket but not out of the guard
//!   ([`FailureReason::GuardMismatch`]).

use std::collections::HashSet;
use std::fmt;

use crate::hashing::HashSource;
use crate::sketch::Sketch;
use crate::word::Word;

/// Round budget for [`Sketch::decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeLimits {
    max_rounds: Option<usize>,
}

impl DecodeLimits {
    /// Explicit round cap; values below 1 are raised to 1.
    pub fn rounds(max_rounds: usize) -> Self {
        Self {
            max_rounds: Some(max_rounds.max(1)),
        }
    }

    /// `8 * ceil(log2(n + 2)) + 32`.
    pub fn default_rounds(n: usize) -> usize {
        let v = n as u128 + 2;
        let ceil_log2 = 128 - (v - 1).leading_zeros() as usize;
        8 * ceil_log2 + 32
    }

    pub fn max_rounds(&self, n: usize) -> usize {
        self.max_rounds.unwrap_or_else(|| Self::default_rounds(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    /// No bucket looks pure but some bucket is nonzero.
    ResidueNonzero,
    /// The round budget ran out.
    RoundLimit,
    /// Every bucket is zero but the guard is not.
    GuardMismatch,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::ResidueNonzero => "residue-nonzero",
            FailureReason::RoundLimit => "round-limit",
            FailureReason::GuardMismatch => "guard-mismatch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Success,
    Failure(FailureReason),
}

impl DecodeStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, DecodeStatus::Success)
    }
}

impl fmt::Display for DecodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeStatus::Success => f.write_str("success"),
            DecodeStatus::Failure(reason) => write!(f, "failure({reason})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome<W> {
    pub status: DecodeStatus,
    /// Decoded set in ascending order; partial when decoding failed.
    pub keys: Vec<W>,
    pub rounds_used: usize,
    /// Number of toggles performed.
    pub steps: usize,
    /// Queue pushes, including the initial queue.
    pub queue_insertions: usize,
}

impl<W> DecodeOutcome<W> {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }
}

/// Hooks into a running decode.
pub trait DecodeObserver<W> {
    /// Called before round `round` (1-based) with the queue it will drain.
    fn round_start(&mut self, _round: usize, _queue: &[usize]) {}

    /// Called after key `key`, detected at `bucket`, has been toggled.
    fn step(&mut self, _bucket: usize, _key: W, _buckets: &[W]) {}
}

impl<W> DecodeObserver<W> for () {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<W> {
    pub bucket: usize,
    pub key: W,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace<W> {
    /// The queue as drained, duplicates included.
    pub queue: Vec<usize>,
    /// Steps taken, in order.
    pub steps: Vec<Step<W>>,
}

impl<W> RoundTrace<W> {
    /// Buckets at which a key was detected this round.
    pub fn step_buckets(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.bucket).collect()
    }
}

/// Whether a step removed a stored key or inserted a foreign one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Regular,
    Anomalous,
}

/// Round-by-round record of a decode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeTrace<W> {
    pub rounds: Vec<RoundTrace<W>>,
}

impl<W: Word> DecodeTrace<W> {
    pub fn total_steps(&self) -> usize {
        self.rounds.iter().map(|r| r.steps.len()).sum()
    }

    /// Classifies every step given the set `s0` stored before decoding.
    ///
    /// The represented set is `S = s0 Δ S_dec`; a step is regular when the
    /// detected key is in `S` at that moment.
    pub fn step_kinds(&self, s0: &HashSet<W>) -> Vec<Vec<StepKind>> {
        let mut decoded = HashSet::new();
        self.rounds
            .iter()
            .map(|round| {
                round
                    .steps
                    .iter()
                    .map(|step| {
                        let stored = s0.contains(&step.key) != decoded.contains(&step.key);
                        toggle_member(&mut decoded, step.key);
                        if stored {
                            StepKind::Regular
                        } else {
                            StepKind::Anomalous
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn anomalous_steps(&self, s0: &HashSet<W>) -> usize {
        self.step_kinds(s0)
            .iter()
            .flatten()
            .filter(|&&k| k == StepKind::Anomalous)
            .count()
    }

    /// The represented set at the start of round `round` (1-based), i.e.
    /// `s0 Δ S_dec` after all earlier rounds. Rounds past the end repeat the
    /// final state.
    pub fn stored_before_round(&self, s0: &HashSet<W>, round: usize) -> HashSet<W> {
        let mut stored = s0.clone();
        for r in self.rounds.iter().take(round.saturating_sub(1)) {
            for step in &r.steps {
                toggle_member(&mut stored, step.key);
            }
        }
        stored
    }
}

impl<W: Word> DecodeObserver<W> for DecodeTrace<W> {
    fn round_start(&mut self, _round: usize, queue: &[usize]) {
        self.rounds.push(RoundTrace {
            queue: queue.to_vec(),
            steps: Vec::new(),
        });
    }

    fn step(&mut self, bucket: usize, key: W, _buckets: &[W]) {
        if let Some(round) = self.rounds.last_mut() {
            round.steps.push(Step { bucket, key });
        }
    }
}

/// Counts regular and anomalous steps on the fly, given the stored set.
#[derive(Debug)]
pub struct StepCounter<'a, W> {
    s0: &'a HashSet<W>,
    decoded: HashSet<W>,
    pub regular: usize,
    pub anomalous: usize,
}

impl<'a, W: Word> StepCounter<'a, W> {
    pub fn new(s0: &'a HashSet<W>) -> Self {
        Self {
            s0,
            decoded: HashSet::new(),
            regular: 0,
            anomalous: 0,
        }
    }
}

impl<W: Word> DecodeObserver<W> for StepCounter<'_, W> {
    fn step(&mut self, _bucket: usize, key: W, _buckets: &[W]) {
        if self.s0.contains(&key) != self.decoded.contains(&key) {
            self.regular += 1;
        } else {
            self.anomalous += 1;
        }
        toggle_member(&mut self.decoded, key);
    }
}

fn toggle_member<W: Word>(set: &mut HashSet<W>, x: W) {
    if !set.remove(&x) {
        set.insert(x);
    }
}

impl<W: Word, H: HashSource> Sketch<W, H> {
    /// Peels the sketch toward empty and reports the decoded set.
    ///
    /// On failure the sketch keeps the residual state.
    pub fn decode(&mut self, limits: DecodeLimits) -> DecodeOutcome<W> {
        peel(self, limits, None, &mut ())
    }

    pub fn decode_traced(&mut self, limits: DecodeLimits) -> (DecodeOutcome<W>, DecodeTrace<W>) {
        let mut trace = DecodeTrace::default();
        let outcome = peel(self, limits, None, &mut trace);
        (outcome, trace)
    }

    pub fn decode_observed<O: DecodeObserver<W>>(
        &mut self,
        limits: DecodeLimits,
        observer: &mut O,
    ) -> DecodeOutcome<W> {
        peel(self, limits, None, observer)
    }

    /// Decodes a copy, leaving `self` untouched.
    pub fn decode_copy(&self, limits: DecodeLimits) -> DecodeOutcome<W> {
        self.clone().decode(limits)
    }
}

/// The decoder proper. Buckets flagged in `banned` never look pure.
pub(crate) fn peel<W, H, O>(
    sketch: &mut Sketch<W, H>,
    limits: DecodeLimits,
    banned: Option<&[bool]>,
    observer: &mut O,
) -> DecodeOutcome<W>
where
    W: Word,
    H: HashSource,
    O: DecodeObserver<W>,
{
    let n = sketch.params().buckets();
    let k = sketch.params().slots();
    let max_rounds = limits.max_rounds(n);
    let looks_pure =
        |s: &Sketch<W, H>, i: usize| -> bool { !banned.is_some_and(|b| b[i]) && s.looks_pure(i) };

    let mut queue: Vec<usize> = (0..n).filter(|&i| looks_pure(sketch, i)).collect();
    let mut next = Vec::new();
    // Every detected key in step order; keys detected an even number of
    // times cancel when the log is reduced below.
    let mut detected: Vec<W> = Vec::new();
    let mut queue_insertions = queue.len();
    let mut rounds_used = 0;
    let mut steps = 0;
    let mut out_of_rounds = false;

    while !queue.is_empty() {
        if rounds_used == max_rounds {
            out_of_rounds = true;
            break;
        }
        rounds_used += 1;
        observer.round_start(rounds_used, &queue);
        for (pos, &i) in queue.iter().enumerate() {
            // Two-stage prefetch: the bucket far ahead, then the slots of
            // the key sitting in a nearer one.
            if let Some(&far) = queue.get(pos + 2 * PREFETCH_DISTANCE) {
                prefetch(&sketch.buckets()[far]);
            }
            if let Some(&near) = queue.get(pos + PREFETCH_DISTANCE) {
                let y = sketch.buckets()[near].to_wide();
                if y != 0 && y <= sketch.params().max_key() {
                    for j in 0..k {
                        prefetch(&sketch.buckets()[sketch.hasher().slot_bucket(y, j)]);
                    }
                }
            }
            if !looks_pure(sketch, i) {
                continue;
            }
            let x = sketch.buckets()[i];
            sketch.apply(x);
            detected.push(x);
            steps += 1;
            observer.step(i, x, sketch.buckets());
            let wide = x.to_wide();
            for j in 0..k {
                let b = sketch.hasher().slot_bucket(wide, j);
                if looks_pure(sketch, b) {
                    next.push(b);
                    queue_insertions += 1;
                }
            }
        }
        std::mem::swap(&mut queue, &mut next);
        next.clear();
    }

    let status = if out_of_rounds {
        DecodeStatus::Failure(FailureReason::RoundLimit)
    } else if !sketch.buckets_zero() {
        DecodeStatus::Failure(FailureReason::ResidueNonzero)
    } else if sketch.guard() != 0 {
        DecodeStatus::Failure(FailureReason::GuardMismatch)
    } else {
        DecodeStatus::Success
    };
    DecodeOutcome {
        status,
        keys: odd_occurrences(detected),
        rounds_used,
        steps,
        queue_insertions,
    }
}

/// How far ahead in the queue bucket reads are prefetched.
const PREFETCH_DISTANCE: usize = 8;

#[inline(always)]
fn prefetch<T>(v: &T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: SSE is part of the x86_64 baseline and prefetching never faults.
    unsafe {
        std::arch::x86_64::_mm_prefetch::<{ std::arch::x86_64::_MM_HINT_T0 }>(
            (v as *const T).cast(),
        )
    };
    #[cfg(not(target_arch = "x86_64"))]
    let _ = v;
}

/// Sorted values occurring an odd number of times in `v`.
fn odd_occurrences<W: Word>(mut v: Vec<W>) -> Vec<W> {
    v.sort_unstable();
    v.chunk_by(|a, b| a == b)
        .filter(|run| run.len() % 2 == 1)
        .map(|run| run[0])
        .collect()
}
