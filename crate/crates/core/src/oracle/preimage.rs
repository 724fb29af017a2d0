//! Ground-truth inversion of small sketches.
//!
//! A sketch is a GF(2)-linear image of the indicator vector of its set: bit
//! `t` of bucket `b` is the parity of the stored keys that hit `b` an odd
//! number of times and have bit `t` set, and guard bit `t` is the parity of
//! digest bit `t`. Solving that system over the whole key universe yields
//! every set with the given sketch, independently of peeling.

use crate::error::{Error, Result};
use crate::hashing::HashSource;
use crate::sketch::Sketch;
use crate::word::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreimageBounds {
    /// Only report sets with at most this many keys.
    pub max_set_size: Option<usize>,
    /// Refuse when the solution space holds more sets than this.
    pub max_solutions: u64,
}

impl Default for PreimageBounds {
    fn default() -> Self {
        Self {
            max_set_size: None,
            max_solutions: 1 << 16,
        }
    }
}

/// Widest key width the solver accepts.
pub const MAX_PREIMAGE_BITS: u32 = 16;

struct Row {
    bits: Vec<u64>,
    rhs: bool,
}

impl Row {
    fn get(&self, col: usize) -> bool {
        self.bits[col / 64] >> (col % 64) & 1 == 1
    }

    fn xor_with(&mut self, other: &Row) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }
}

/// All key sets whose sketch is bit-identical to `sketch` (guard included),
/// each ascending, listed by size and then lexicographically.
pub fn exhaustive_preimage<W: Word, H: HashSource>(
    sketch: &Sketch<W, H>,
    bounds: PreimageBounds,
) -> Result<Vec<Vec<u64>>> {
    let params = *sketch.params();
    let w = params.key_bits();
    if w > MAX_PREIMAGE_BITS {
        return Err(Error::InvalidParams(format!(
            "exhaustive preimage needs w <= {MAX_PREIMAGE_BITS}, got {w}"
        )));
    }
    let universe = params.max_key() as usize;
    let words = universe.div_ceil(64);
    let n = params.buckets();
    let r = params.guard_bits();
    let w = w as usize;

    let mut rows: Vec<Row> = (0..n * w + r as usize)
        .map(|_| Row {
            bits: vec![0; words],
            rhs: false,
        })
        .collect();
    for (b, &value) in sketch.buckets().iter().enumerate() {
        for t in 0..w {
            rows[b * w + t].rhs = value.to_wide() >> t & 1 == 1;
        }
    }
    for t in 0..r as usize {
        rows[n * w + t].rhs = sketch.guard() >> t & 1 == 1;
    }
    let hasher = sketch.hasher();
    for x in 1..=universe as u64 {
        let col = (x - 1) as usize;
        for b in hasher.hash_multiset(x).odd_buckets() {
            for t in 0..w {
                if x >> t & 1 == 1 {
                    rows[b * w + t].bits[col / 64] |= 1 << (col % 64);
                }
            }
        }
        let digest = hasher.digest(x);
        for t in 0..r as usize {
            if digest >> t & 1 == 1 {
                rows[n * w + t].bits[col / 64] |= 1 << (col % 64);
            }
        }
    }

    // Reduced row echelon form.
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..universe {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(rank, p);
        let (head, tail) = rows.split_at_mut(rank);
        let (pivot, tail) = tail.split_first_mut().expect("pivot row");
        for row in head.iter_mut().chain(tail.iter_mut()) {
            if row.get(col) {
                row.xor_with(pivot);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|row| row.rhs) {
        return Ok(Vec::new());
    }

    let mut is_pivot = vec![false; universe];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..universe).filter(|&c| !is_pivot[c]).collect();
    if free.len() >= 64 || (1u64 << free.len()) > bounds.max_solutions {
        return Err(Error::BudgetExceeded(bounds.max_solutions));
    }

    let mut sets = Vec::new();
    for assignment in 0u64..(1 << free.len()) {
        let mut keys = Vec::new();
        for (i, &c) in free.iter().enumerate() {
            if assignment >> i & 1 == 1 {
                keys.push(c as u64 + 1);
            }
        }
        for (row, &c) in rows.iter().zip(&pivots) {
            let mut v = row.rhs;
            for (i, &f) in free.iter().enumerate() {
                if assignment >> i & 1 == 1 && row.get(f) {
                    v = !v;
                }
            }
            if v {
                keys.push(c as u64 + 1);
            }
        }
        if bounds.max_set_size.is_some_and(|m| keys.len() > m) {
            continue;
        }
        keys.sort_unstable();
        sets.push(keys);
    }
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets)
}
