use std::collections::BTreeMap;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::hashing::{HashParams, HashSource};

/// Hash source with explicit slot tables for chosen keys.
///
/// Keys without an entry fall back to the seeded family of `fallback`;
/// guard digests always come from the fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectedHashTable {
    fallback: HashParams,
    table: BTreeMap<u64, SmallVec<[usize; 4]>>,
}

impl InjectedHashTable {
    pub fn new(fallback: HashParams) -> Self {
        Self {
            fallback,
            table: BTreeMap::new(),
        }
    }

    /// Adds (or replaces) the slot sequence of `key`.
    pub fn insert(&mut self, key: u64, slots: &[usize]) -> Result<()> {
        self.fallback.check_key(key)?;
        if slots.len() != self.fallback.slots() {
            return Err(Error::InvalidParams(format!(
                "key {key}: {} slots given, k = {}",
                slots.len(),
                self.fallback.slots()
            )));
        }
        if let Some(&b) = slots.iter().find(|&&b| b >= self.fallback.buckets()) {
            return Err(Error::InvalidParams(format!(
                "key {key}: bucket {b} out of range for n = {}",
                self.fallback.buckets()
            )));
        }
        self.table.insert(key, SmallVec::from_slice(slots));
        Ok(())
    }

    pub fn with(mut self, key: u64, slots: &[usize]) -> Result<Self> {
        self.insert(key, slots)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Parses lines of the form `key: b1,b2,...,bk`.
    ///
    /// Keys may be decimal or `0x`-prefixed hex. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str, fallback: HashParams) -> Result<Self> {
        let mut out = Self::new(fallback);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| {
                Error::InvalidParams(format!("inject table line {}: {what}: {raw:?}", lineno + 1))
            };
            let (key, slots) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let key = parse_u64(key.trim()).ok_or_else(|| bad("bad key"))?;
            let slots = slots
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad bucket list"))?;
            out.insert(key, &slots)?;
        }
        Ok(out)
    }
}

/// Decimal or `0x` hex.
pub fn parse_u64(s: &str) -> Option<u64> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

impl HashSource for InjectedHashTable {
    fn params(&self) -> &HashParams {
        &self.fallback
    }

    #[inline]
    fn slot_bucket(&self, x: u64, j: usize) -> usize {
        match self.table.get(&x) {
            Some(slots) => slots[j],
            None => self.fallback.slot_bucket(x, j),
        }
    }

    fn digest(&self, x: u64) -> u64 {
        self.fallback.digest(x)
    }
}
