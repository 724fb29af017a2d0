//! Seeded hash family.
//!
//! Every key `x` is mapped to `k` bucket slots `h_1(x), ..., h_k(x)` and, when
//! a guard is configured, to an `r`-bit digest. The mapping is a pure function
//! of [`HashParams`], so two parties that agree on the parameters build
//! bit-identical sketches. The formula is part of the wire contract:
//!
//! ```text
//! z = seed ^ ((j + 1) * GOLDEN) ^ x        (mod 2^64)
//! z = splitmix64_finalize(z)
//! bucket = (z * n) >> 64                   (128-bit product)
//! ```
//!
//! The guard digest uses the same mix at slot `j = k` and keeps the low `r` bits.

use std::fmt::Debug;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::word::low_mask;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest slot count representable in the wire header.
pub const MAX_SLOTS: usize = u8::MAX as usize;

/// Parameters shared by every party using a sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashParams {
    w: u32,
    k: usize,
    n: usize,
    seed: u64,
    r: u32,
}

impl HashParams {
    /// Validates and builds a parameter set.
    ///
    /// `w` is the key width in bits (1..=64), `k` the number of slots (3..=255),
    /// `n` the bucket count (1..=2^32-1), `r` the guard width in bits (0..=64,
    /// 0 disables the guard).
    pub fn new(w: u32, k: usize, n: usize, seed: u64, r: u32) -> Result<Self> {
        if !(1..=64).contains(&w) {
            return Err(Error::InvalidParams(format!("key width {w} not in 1..=64")));
        }
        if !(3..=MAX_SLOTS).contains(&k) {
            return Err(Error::InvalidParams(format!(
                "slot count {k} not in 3..=255"
            )));
        }
        if n == 0 || n as u64 > u32::MAX as u64 {
            return Err(Error::InvalidParams(format!(
                "bucket count {n} not in 1..=2^32-1"
            )));
        }
        if r > 64 {
            return Err(Error::InvalidParams(format!("guard width {r} exceeds 64")));
        }
        Ok(Self { w, k, n, seed, r })
    }

    pub fn key_bits(&self) -> u32 {
        self.w
    }

    pub fn slots(&self) -> usize {
        self.k
    }

    pub fn buckets(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn guard_bits(&self) -> u32 {
        self.r
    }

    /// Largest key value, `u = 2^w - 1`.
    pub fn max_key(&self) -> u64 {
        low_mask(self.w)
    }

    pub fn check_key(&self, x: u64) -> Result<()> {
        if x == 0 || x > self.max_key() {
            Err(Error::InvalidKey {
                key: x,
                width: self.w,
            })
        } else {
            Ok(())
        }
    }

    /// Bucket of slot `j` for key `x`, validated.
    pub fn bucket_of(&self, x: u64, j: usize) -> Result<usize> {
        self.check_key(x)?;
        if j >= self.k {
            return Err(Error::InvalidParams(format!(
                "slot {j} out of range for k = {}",
                self.k
            )));
        }
        Ok(self.slot_bucket(x, j))
    }

    /// Guard digest of `x`; always 0 when the guard is disabled.
    pub fn guard_digest(&self, x: u64) -> Result<u64> {
        self.check_key(x)?;
        Ok(self.digest(x))
    }

    #[inline]
    fn mixed(&self, x: u64, j: usize) -> u64 {
        let slot = (j as u64).wrapping_add(1).wrapping_mul(GOLDEN);
        finalize(self.seed ^ slot ^ x)
    }
}

/// The splitmix64 output finalizer.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multiply-high range reduction of a 64-bit hash onto `[0, n)`.
#[inline]
pub fn reduce(hash: u64, n: usize) -> usize {
    ((hash as u128 * n as u128) >> 64) as usize
}

/// A source of slot buckets and guard digests.
///
/// The seeded family ([`HashParams`]) is the production implementation; tests
/// substitute explicit tables. Implementations must be pure: equal inputs give
/// equal outputs. Keys are passed zero-extended and are assumed valid.
pub trait HashSource: Clone + PartialEq + Debug + Send + Sync {
    fn params(&self) -> &HashParams;

    fn slot_bucket(&self, x: u64, j: usize) -> usize;

    /// `r`-bit guard digest (0 when `r = 0`).
    fn digest(&self, x: u64) -> u64;

    fn hash_multiset(&self, x: u64) -> BucketMultiset {
        BucketMultiset(
            (0..self.params().k)
                .map(|j| self.slot_bucket(x, j))
                .collect(),
        )
    }

    /// Whether bucket `i` occurs an odd number of times among the slots of `x`.
    #[inline]
    fn hits_odd(&self, x: u64, i: usize) -> bool {
        let mut odd = false;
        for j in 0..self.params().k {
            if self.slot_bucket(x, j) == i {
                odd = !odd;
            }
        }
        odd
    }
}

impl HashSource for HashParams {
    fn params(&self) -> &HashParams {
        self
    }

    #[inline]
    fn slot_bucket(&self, x: u64, j: usize) -> usize {
        reduce(self.mixed(x, j), self.n)
    }

    #[inline]
    fn digest(&self, x: u64) -> u64 {
        if self.r == 0 {
            0
        } else {
            self.mixed(x, self.k) & low_mask(self.r)
        }
    }
}

/// The ordered slot sequence `(h_1(x), ..., h_k(x))`; duplicates allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BucketMultiset(pub SmallVec<[usize; 4]>);

impl BucketMultiset {
    pub fn slots(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn odd_multiplicity(&self, i: usize) -> bool {
        self.0.iter().filter(|&&b| b == i).count() % 2 == 1
    }

    /// Buckets with odd multiplicity, ascending and deduplicated.
    pub fn odd_buckets(&self) -> Vec<usize> {
        let mut sorted: Vec<usize> = self.0.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::with_capacity(sorted.len());
        let mut idx = 0;
        while idx < sorted.len() {
            let run = sorted[idx..]
                .iter()
                .take_while(|&&b| b == sorted[idx])
                .count();
            if run % 2 == 1 {
                out.push(sorted[idx]);
            }
            idx += run;
        }
        out
    }
}

impl From<Vec<usize>> for BucketMultiset {
    fn from(v: Vec<usize>) -> Self {
        Self(SmallVec::from_vec(v))
    }
}

/// Validated multiset of bucket indices for `x`.
pub fn hash_multiset<H: HashSource>(hasher: &H, x: u64) -> Result<BucketMultiset> {
    hasher.params().check_key(x)?;
    Ok(hasher.hash_multiset(x))
}
