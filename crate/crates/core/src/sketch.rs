use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::hashing::{HashParams, HashSource};
use crate::word::Word;

/// Work done by a single toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateCost {
    pub bucket_xors: usize,
    pub guard_xors: usize,
}

/// A linear set sketch: `n` buckets each holding the XOR of the keys hashed
/// there, plus an optional `r`-bit guard holding the XOR of the keys' digests.
///
/// The state depends only on the hash source and the represented set, so
/// toggles commute and sketches of two sets merge into the sketch of their
/// symmetric difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch<W: Word, H: HashSource = HashParams> {
    hasher: H,
    buckets: Vec<W>,
    guard: u64,
}

impl<W: Word> Sketch<W> {
    /// Empty sketch under the seeded hash family.
    pub fn with_params(params: HashParams) -> Result<Self> {
        Self::new(params)
    }
}

impl<W: Word, H: HashSource> Sketch<W, H> {
    /// Empty sketch (every bucket and the guard zero).
    pub fn new(hasher: H) -> Result<Self> {
        let w = hasher.params().key_bits();
        if w > W::BITS {
            return Err(Error::InvalidParams(format!(
                "{w}-bit keys do not fit a {}-bit word",
                W::BITS
            )));
        }
        let n = hasher.params().buckets();
        Ok(Self {
            hasher,
            buckets: vec![W::zero(); n],
            guard: 0,
        })
    }

    /// Builds the sketch of `keys`; each key must be valid and distinct.
    pub fn from_set<I: IntoIterator<Item = W>>(hasher: H, keys: I) -> Result<Self> {
        let mut sketch = Self::new(hasher)?;
        let mut seen = HashSet::new();
        for x in keys {
            if !seen.insert(x) {
                return Err(Error::DuplicateKey(x.to_wide()));
            }
            sketch.toggle(x)?;
        }
        Ok(sketch)
    }

    /// Reassembles a sketch from raw state. Bucket values must fit in `w` bits.
    pub fn from_parts(hasher: H, buckets: Vec<W>, guard: u64) -> Result<Self> {
        let params = *hasher.params();
        if buckets.len() != params.buckets() {
            return Err(Error::InvalidParams(format!(
                "expected {} buckets, got {}",
                params.buckets(),
                buckets.len()
            )));
        }
        if buckets.iter().any(|b| b.to_wide() > params.max_key()) {
            return Err(Error::InvalidParams(
                "bucket value wider than the key width".into(),
            ));
        }
        if guard & !crate::word::low_mask(params.guard_bits()) != 0 {
            return Err(Error::InvalidParams(
                "guard wider than the guard width".into(),
            ));
        }
        let mut sketch = Self::new(hasher)?;
        sketch.buckets = buckets;
        sketch.guard = guard;
        Ok(sketch)
    }

    /// The same state viewed through another hash source with equal parameters.
    pub fn rehash<H2: HashSource>(self, hasher: H2) -> Result<Sketch<W, H2>> {
        if hasher.params() != self.hasher.params() {
            return Err(Error::ParamsMismatch);
        }
        Ok(Sketch {
            hasher,
            buckets: self.buckets,
            guard: self.guard,
        })
    }

    pub fn hasher(&self) -> &H {
        &self.hasher
    }

    pub fn params(&self) -> &HashParams {
        self.hasher.params()
    }

    pub fn buckets(&self) -> &[W] {
        &self.buckets
    }

    pub fn guard(&self) -> u64 {
        self.guard
    }

    /// Number of stored words: `n` buckets plus one guard word when enabled.
    pub fn storage_words(&self) -> usize {
        self.buckets.len() + usize::from(self.params().guard_bits() > 0)
    }

    /// Flips membership of `x`: S becomes S Δ {x}.
    pub fn toggle(&mut self, x: W) -> Result<()> {
        self.toggle_with_cost(x).map(|_| ())
    }

    /// [`toggle`](Self::toggle), reporting how many XORs were applied.
    pub fn toggle_with_cost(&mut self, x: W) -> Result<UpdateCost> {
        self.params().check_key(x.to_wide())?;
        Ok(self.apply(x))
    }

    /// Toggle without key validation. Every slot is applied, so a bucket hit
    /// twice by `x` receives it twice and ends unchanged.
    #[inline]
    pub(crate) fn apply(&mut self, x: W) -> UpdateCost {
        let wide = x.to_wide();
        let k = self.params().slots();
        for j in 0..k {
            let b = self.hasher.slot_bucket(wide, j);
            self.buckets[b] = self.buckets[b] ^ x;
        }
        let mut cost = UpdateCost {
            bucket_xors: k,
            guard_xors: 0,
        };
        if self.params().guard_bits() > 0 {
            self.guard ^= self.hasher.digest(wide);
            cost.guard_xors = 1;
        }
        cost
    }

    /// Bucket-wise XOR with `other`; the result represents S Δ S'.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.hasher != other.hasher {
            return Err(Error::ParamsMismatch);
        }
        for (a, &b) in self.buckets.iter_mut().zip(&other.buckets) {
            *a = *a ^ b;
        }
        self.guard ^= other.guard;
        Ok(())
    }

    /// True iff bucket `i` is nonzero and its content hashes back to `i` with
    /// odd multiplicity. Holds for every bucket holding a single key, and
    /// occasionally for buckets holding several keys.
    ///
    /// Panics if `i >= n`.
    #[inline]
    pub fn looks_pure(&self, i: usize) -> bool {
        let v = self.buckets[i];
        if v.is_zero() {
            return false;
        }
        let wide = v.to_wide();
        wide <= self.params().max_key() && self.hasher.hits_odd(wide, i)
    }

    /// All buckets and the guard are zero.
    pub fn is_empty(&self) -> bool {
        self.guard == 0 && self.buckets_zero()
    }

    pub(crate) fn buckets_zero(&self) -> bool {
        self.buckets.iter().all(|b| b.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::InjectedHashTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, r: u32) -> HashParams {
        HashParams::new(64, 3, n, 99, r).unwrap()
    }

    #[test]
    fn initialise_is_empty() {
        let s = Sketch::<u8>::with_params(HashParams::new(8, 3, 8, 0, 0).unwrap()).unwrap();
        assert_eq!(s.buckets(), &[0u8; 8]);
        assert!(s.is_empty());
        assert_eq!(s, Sketch::<u8>::with_params(*s.params()).unwrap());
    }

    #[test]
    fn word_must_hold_key_width() {
        let p = HashParams::new(16, 3, 8, 0, 0).unwrap();
        assert!(Sketch::<u8>::with_params(p).is_err());
        assert!(Sketch::<u16>::with_params(p).is_ok());
    }

    #[test]
    fn toggle_is_an_involution() {
        let mut s = Sketch::<u64>::with_params(params(32, 16)).unwrap();
        s.toggle(17).unwrap();
        s.toggle(4242).unwrap();
        let before = s.clone();
        s.toggle(99).unwrap();
        assert_ne!(s, before);
        s.toggle(99).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn toggle_rejects_invalid_keys() {
        let mut s = Sketch::<u8>::with_params(HashParams::new(4, 3, 8, 0, 0).unwrap()).unwrap();
        assert!(s.toggle(0).is_err());
        assert!(s.toggle(16).is_err());
        assert!(s.toggle(15).is_ok());
    }

    #[test]
    fn injected_slots_receive_the_key() {
        let table = InjectedHashTable::new(params(9, 0))
            .with(1, &[1, 3, 6])
            .unwrap();
        let mut s = Sketch::<u64, _>::new(table).unwrap();
        s.toggle(1).unwrap();
        for (i, &b) in s.buckets().iter().enumerate() {
            assert_eq!(b, if [1, 3, 6].contains(&i) { 1 } else { 0 });
        }
    }

    #[test]
    fn duplicate_slots_cancel() {
        let table = InjectedHashTable::new(params(8, 0))
            .with(9, &[2, 2, 5])
            .unwrap();
        let mut s = Sketch::<u64, _>::new(table).unwrap();
        let cost = s.toggle_with_cost(9).unwrap();
        assert_eq!(cost.bucket_xors, 3);
        assert_eq!(s.buckets()[5], 9);
        assert_eq!(s.buckets()[2], 0);
        assert!(s.looks_pure(5));
        assert!(!s.looks_pure(2));
    }

    #[test]
    fn merge_identity_and_self_inverse() {
        let p = params(64, 32);
        let s = Sketch::<u64>::from_set(p, [5, 6, 7, 1 << 40]).unwrap();
        let mut t = s.clone();
        t.merge(&Sketch::with_params(p).unwrap()).unwrap();
        assert_eq!(t, s);
        t.merge(&s).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn merge_checks_params() {
        let mut a = Sketch::<u64>::with_params(params(64, 32)).unwrap();
        let b = Sketch::<u64>::with_params(HashParams::new(64, 3, 64, 100, 32).unwrap()).unwrap();
        assert_eq!(a.merge(&b), Err(Error::ParamsMismatch));
        let c = Sketch::<u64>::with_params(params(64, 16)).unwrap();
        assert_eq!(a.merge(&c), Err(Error::ParamsMismatch));
    }

    #[test]
    fn single_key_looks_pure_everywhere_it_lands() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params(128, 0);
        for _ in 0..500 {
            let x: u64 = rng.gen_range(1..=u64::MAX);
            let s = Sketch::<u64>::from_set(p, [x]).unwrap();
            for i in p.hash_multiset(x).odd_buckets() {
                assert!(s.looks_pure(i));
            }
        }
    }

    #[test]
    fn empty_bucket_is_not_pure() {
        let s = Sketch::<u64>::with_params(params(16, 0)).unwrap();
        assert!((0..16).all(|i| !s.looks_pure(i)));
    }

    #[test]
    fn from_set_rejects_duplicates() {
        assert_eq!(
            Sketch::<u64>::from_set(params(16, 0), [3, 4, 3]).unwrap_err(),
            Error::DuplicateKey(3)
        );
    }

    #[test]
    fn from_set_matches_single_toggle() {
        let p = params(16, 8);
        let mut s = Sketch::<u64>::with_params(p).unwrap();
        s.toggle(77).unwrap();
        assert_eq!(Sketch::from_set(p, [77]).unwrap(), s);
        assert!(Sketch::<u64>::from_set(p, []).unwrap().is_empty());
    }

    #[test]
    fn identical_slots_leave_a_residue() {
        let table = InjectedHashTable::new(params(8, 0))
            .with(1, &[0, 1, 2])
            .unwrap()
            .with(2, &[0, 1, 2])
            .unwrap();
        let s = Sketch::<u64, _>::from_set(table, [1, 2]).unwrap();
        assert!(!s.is_empty());
        assert_eq!(&s.buckets()[..3], &[3, 3, 3]);
    }

    #[test]
    fn guard_counts_toward_emptiness() {
        let p = params(8, 32);
        let s = Sketch::<u64>::from_parts(p, vec![0; 8], 1).unwrap();
        assert!(!s.is_empty());
        assert!(Sketch::<u64>::from_parts(p, vec![0; 7], 0).is_err());
        assert!(Sketch::<u64>::from_parts(params(8, 4), vec![0; 8], 16).is_err());
    }

    #[test]
    fn storage_is_n_words_plus_guard() {
        assert_eq!(
            Sketch::<u64>::with_params(params(100, 32))
                .unwrap()
                .storage_words(),
            101
        );
        assert_eq!(
            Sketch::<u64>::with_params(params(100, 0))
                .unwrap()
                .storage_words(),
            100
        );
    }
}
