//! Linear set sketches with anomaly-tolerant peeling.
//!
//! A [`Sketch`] stores a set of nonzero `w`-bit keys in `n` buckets. Each key
//! is XORed into the `k >= 3` buckets chosen by a seeded hash family, so
//! sketches are XOR-homomorphic: merging the sketches of two sets yields the
//! sketch of their symmetric difference. [`Sketch::decode`] recovers the set
//! by breadth-first peeling, which succeeds with high probability while the
//! load `m / n` stays below the peeling threshold (about 0.81 for `k = 3`).
//!
//! ```
//! use setsketch::{DecodeLimits, HashParams, Sketch64};
//!
//! let params = HashParams::new(64, 3, 128, 0xC0FFEE, 32).unwrap();
//! let mut alice = Sketch64::from_set(params, [10, 20, 30, 40]).unwrap();
//! let bob = Sketch64::from_set(params, [10, 20, 30, 50]).unwrap();
//! alice.merge(&bob).unwrap();
//! let out = alice.decode(DecodeLimits::default());
//! assert!(out.is_success());
//! assert_eq!(out.keys, vec![40, 50]);
//! ```
//!
//! The sketch is generic over the storage word ([`Word`]); the aliases below
//! cover the usual widths.

pub mod decode;
mod error;
pub mod hashing;
pub mod oracle;
pub mod reconcile;
pub mod sampling;
mod sketch;
mod word;

pub use decode::{
    DecodeLimits, DecodeObserver, DecodeOutcome, DecodeStatus, DecodeTrace, FailureReason,
    RoundTrace, Step, StepCounter, StepKind,
};
pub use error::{Error, Result};
pub use hashing::{hash_multiset, BucketMultiset, HashParams, HashSource};
pub use reconcile::{
    deserialize, encode_set, reconcile_local, serialize, suggest_buckets, ReconcileError,
    ReconcileReport, WireError,
};
pub use sketch::{Sketch, UpdateCost};
pub use word::Word;

/// Sketch over keys of at most 8 bits.
pub type Sketch8 = Sketch<u8>;
/// Sketch over keys of at most 16 bits.
pub type Sketch16 = Sketch<u16>;
/// Sketch over keys of at most 32 bits.
pub type Sketch32 = Sketch<u32>;
/// Sketch over keys of at most 64 bits.
pub type Sketch64 = Sketch<u64>;
