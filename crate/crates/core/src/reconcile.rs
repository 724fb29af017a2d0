//! Wire format and two-party set reconciliation.
//!
//! Frame layout (all integers little-endian):
//!
//! ```text
//! "SSS1" | version u8 = 1 | w u8 | k u8 | r u8 | n u32 | seed u64
//!        | n buckets, ceil(w/8) bytes each
//!        | guard, ceil(r/8) bytes (absent when r = 0)
//!        | CRC-32 of everything above, u32
//! ```
//!
//! A party holding `S_1` sends the frame of its sketch; the receiver sketches
//! its own `S_2` under the same parameters (the seed travels in the frame),
//! merges, and decodes `S_1 Δ S_2`. The frame size depends only on the
//! parameters, so sizing `n` by the expected difference keeps the exchange
//! proportional to the difference rather than to the sets.

use thiserror::Error;

use crate::decode::{DecodeLimits, DecodeStatus};
use crate::error::Error;
use crate::hashing::HashParams;
use crate::sketch::Sketch;
use crate::word::Word;

pub const MAGIC: [u8; 4] = *b"SSS1";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 1 + 4 + 8;
const CRC_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("frame checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    BadCrc { stored: u32, computed: u32 },
    #[error("frame truncated: need {needed} bytes, got {got}")]
    TruncatedFrame { needed: usize, got: usize },
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconcileError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Sketch(#[from] Error),
}

fn bucket_bytes(params: &HashParams) -> usize {
    params.key_bits().div_ceil(8) as usize
}

fn guard_bytes(params: &HashParams) -> usize {
    params.guard_bits().div_ceil(8) as usize
}

/// Exact frame length for `params`.
pub fn frame_len(params: &HashParams) -> usize {
    HEADER_LEN + params.buckets() * bucket_bytes(params) + guard_bytes(params) + CRC_LEN
}

pub fn serialize<W: Word>(sketch: &Sketch<W>) -> Vec<u8> {
    let p = sketch.params();
    let mut out = Vec::with_capacity(frame_len(p));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(p.key_bits() as u8);
    out.push(p.slots() as u8);
    out.push(p.guard_bits() as u8);
    out.extend_from_slice(&(p.buckets() as u32).to_le_bytes());
    out.extend_from_slice(&p.seed().to_le_bytes());
    let width = bucket_bytes(p);
    for b in sketch.buckets() {
        out.extend_from_slice(&b.to_wide().to_le_bytes()[..width]);
    }
    out.extend_from_slice(&sketch.guard().to_le_bytes()[..guard_bytes(p)]);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn read_le(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(buf)
}

pub fn deserialize<W: Word>(bytes: &[u8]) -> Result<Sketch<W>, WireError> {
    if bytes.len() < HEADER_LEN + CRC_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(WireError::BadMagic);
        }
        return Err(WireError::TruncatedFrame {
            needed: HEADER_LEN + CRC_LEN,
            got: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(WireError::BadVersion(bytes[4]));
    }
    let w = bytes[5] as u32;
    let k = bytes[6] as usize;
    let r = bytes[7] as u32;
    let n = read_le(&bytes[8..12]) as usize;
    let seed = read_le(&bytes[12..20]);
    // Sizes are bounded by the header fields before the parameters are
    // validated, so a corrupted header cannot ask for a huge read.
    let width = w.div_ceil(8) as usize;
    let guard_width = r.div_ceil(8) as usize;
    let needed = HEADER_LEN + n * width + guard_width + CRC_LEN;
    if bytes.len() < needed {
        return Err(WireError::TruncatedFrame {
            needed,
            got: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(WireError::TrailingBytes(bytes.len() - needed));
    }
    let body = &bytes[..needed - CRC_LEN];
    let stored = read_le(&bytes[needed - CRC_LEN..]) as u32;
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(WireError::BadCrc { stored, computed });
    }
    let params = HashParams::new(w, k, n, seed, r)?;
    let buckets = body[HEADER_LEN..HEADER_LEN + n * width]
        .chunks_exact(width)
        .map(read_le)
        .collect::<Vec<u64>>();
    if let Some(&bad) = buckets.iter().find(|&&b| b > params.max_key()) {
        return Err(Error::InvalidParams(format!("bucket value {bad:#x} exceeds {w} bits")).into());
    }
    let guard = read_le(&body[HEADER_LEN + n * width..]);
    let sketch = Sketch::from_parts(
        params,
        buckets.into_iter().map(W::truncate_from).collect(),
        guard,
    )?;
    Ok(sketch)
}

/// Serialized sketch of `keys` under `params`.
pub fn encode_set<W: Word, I: IntoIterator<Item = W>>(
    params: HashParams,
    keys: I,
) -> Result<Vec<u8>, Error> {
    Ok(serialize(&Sketch::from_set(params, keys)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconcileReport<W> {
    pub status: DecodeStatus,
    /// The symmetric difference on success, ascending; partial otherwise.
    pub difference: Vec<W>,
    pub bytes_on_wire: usize,
    pub rounds_used: usize,
}

impl<W> ReconcileReport<W> {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }
}

/// Merges the sketch of `local` into the received frame and decodes the
/// symmetric difference of the two sets.
pub fn reconcile_local<W: Word, I: IntoIterator<Item = W>>(
    local: I,
    remote: &[u8],
    limits: DecodeLimits,
) -> Result<ReconcileReport<W>, ReconcileError> {
    let mut merged = deserialize::<W>(remote)?;
    let mine = Sketch::from_set(*merged.params(), local)?;
    merged.merge(&mine)?;
    let outcome = merged.decode(limits);
    Ok(ReconcileReport {
        status: outcome.status,
        difference: outcome.keys,
        bytes_on_wire: remote.len(),
        rounds_used: outcome.rounds_used,
    })
}

/// Bucket count for an expected difference of `expected_diff` keys:
/// `max(8, ceil(1.23 * expected_diff))`.
pub fn suggest_buckets(expected_diff: usize) -> usize {
    let scaled = (expected_diff as u128 * 123).div_ceil(100);
    (scaled as usize).max(8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_keys;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn suggested_sizes() {
        assert_eq!(suggest_buckets(0), 8);
        assert_eq!(suggest_buckets(1), 8);
        assert_eq!(suggest_buckets(100), 123);
        assert_eq!(suggest_buckets(1000), 1230);
        assert_eq!(suggest_buckets(7), 9);
    }

    #[test]
    fn frame_length_arithmetic() {
        for (w, r, n) in [(64, 32, 10), (8, 0, 3), (13, 7, 100), (1, 64, 1)] {
            let p = HashParams::new(w, 3, n, 1, r).unwrap();
            let bytes = serialize(&Sketch::<u64>::with_params(p).unwrap());
            let guard = if r > 0 { (r as usize).div_ceil(8) } else { 0 };
            assert_eq!(
                bytes.len(),
                4 + 1 + 1 + 1 + 1 + 4 + 8 + n * (w as usize).div_ceil(8) + guard + 4
            );
            assert_eq!(bytes.len(), frame_len(&p));
        }
    }

    #[test]
    fn header_layout() {
        let p = HashParams::new(24, 4, 0x0102, 0x1122_3344_5566_7788, 12).unwrap();
        let bytes = serialize(&Sketch::<u32>::from_set(p, [0xABCDEF]).unwrap());
        assert_eq!(&bytes[..4], b"SSS1");
        assert_eq!(&bytes[4..8], &[1, 24, 4, 12]);
        assert_eq!(&bytes[8..12], &[0x02, 0x01, 0, 0]);
        assert_eq!(
            &bytes[12..20],
            &[0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11]
        );
        let crc = crc32fast::hash(&bytes[..bytes.len() - 4]);
        assert_eq!(&bytes[bytes.len() - 4..], &crc.to_le_bytes());
    }

    #[test]
    fn rejects_damaged_frames() {
        let p = HashParams::new(64, 3, 16, 1, 32).unwrap();
        let good = serialize(&Sketch::<u64>::from_set(p, [1, 2, 3]).unwrap());
        assert!(deserialize::<u64>(&good).is_ok());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(deserialize::<u64>(&bad), Err(WireError::BadMagic));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(deserialize::<u64>(&bad), Err(WireError::BadVersion(2)));
        assert!(matches!(
            deserialize::<u64>(&good[..good.len() - 1]),
            Err(WireError::TruncatedFrame { .. })
        ));
        assert!(matches!(
            deserialize::<u64>(&good[..5]),
            Err(WireError::TruncatedFrame { .. })
        ));
        let mut long = good.clone();
        long.push(0);
        assert_eq!(deserialize::<u64>(&long), Err(WireError::TrailingBytes(1)));
        for i in 20..good.len() - 4 {
            let mut bad = good.clone();
            bad[i] ^= 0x10;
            assert!(
                matches!(deserialize::<u64>(&bad), Err(WireError::BadCrc { .. })),
                "byte {i}"
            );
        }
    }

    #[test]
    fn narrow_word_rejects_wide_frame() {
        let p = HashParams::new(16, 3, 4, 1, 0).unwrap();
        let bytes = serialize(&Sketch::<u16>::with_params(p).unwrap());
        assert!(matches!(
            deserialize::<u8>(&bytes),
            Err(WireError::Invalid(_))
        ));
        assert!(deserialize::<u64>(&bytes).is_ok());
    }

    #[test]
    fn identical_sets_reconcile_to_nothing() {
        let p = HashParams::new(64, 3, 64, 77, 32).unwrap();
        let keys: Vec<u64> = (1..500).collect();
        let frame = encode_set(p, keys.iter().copied()).unwrap();
        let report = reconcile_local(keys, &frame, DecodeLimits::default()).unwrap();
        assert!(report.is_success());
        assert!(report.difference.is_empty());
        assert_eq!(report.bytes_on_wire, frame.len());
    }

    #[test]
    fn single_extra_key_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut ok = 0;
        for _ in 0..500 {
            let keys = random_keys(&mut rng, 201, 64);
            let p = HashParams::new(64, 3, rng.gen_range(8..64), rng.gen(), 32).unwrap();
            let frame = encode_set(p, keys.iter().copied()).unwrap();
            let report =
                reconcile_local(keys[..200].iter().copied(), &frame, DecodeLimits::default())
                    .unwrap();
            if report.is_success() {
                assert_eq!(report.difference, vec![keys[200]]);
                ok += 1;
            }
        }
        // A lone key fails only when all of its slots coincide pairwise.
        assert!(ok >= 490, "{ok}");
    }

    #[test]
    fn reconciliation_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let shared = random_keys(&mut rng, 300, 64);
        let a: Vec<u64> = shared
            .iter()
            .copied()
            .chain(random_keys(&mut rng, 20, 64))
            .collect();
        let b: Vec<u64> = shared
            .iter()
            .copied()
            .chain(random_keys(&mut rng, 15, 64))
            .collect();
        let p = HashParams::new(64, 3, suggest_buckets(35) * 2, 5, 32).unwrap();
        let ab = reconcile_local(
            b.iter().copied(),
            &encode_set(p, a.iter().copied()).unwrap(),
            DecodeLimits::default(),
        )
        .unwrap();
        let ba = reconcile_local(
            a.iter().copied(),
            &encode_set(p, b.iter().copied()).unwrap(),
            DecodeLimits::default(),
        )
        .unwrap();
        assert!(ab.is_success() && ba.is_success());
        assert_eq!(ab.difference, ba.difference);
        let sa: HashSet<u64> = a.into_iter().collect();
        let sb: HashSet<u64> = b.into_iter().collect();
        let mut expect: Vec<u64> = sa.symmetric_difference(&sb).copied().collect();
        expect.sort_unstable();
        assert_eq!(ab.difference, expect);
    }

    proptest! {
        #[test]
        fn round_trip(
            w in 1u32..=64,
            r in 0u32..=64,
            n in 1usize..40,
            seed in any::<u64>(),
            raw in proptest::collection::vec(any::<u64>(), 0..30),
        ) {
            let p = HashParams::new(w, 3, n, seed, r).unwrap();
            let keys: HashSet<u64> = raw.into_iter().map(|x| x & p.max_key()).filter(|&x| x != 0).collect();
            let s = Sketch::<u64>::from_set(p, keys).unwrap();
            let bytes = serialize(&s);
            prop_assert_eq!(deserialize::<u64>(&bytes).unwrap(), s);
        }
    }
}
