use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setsketch::oracle::reference_peel;
use setsketch::sampling::random_keys;
use setsketch::{DecodeLimits, HashParams, Sketch, Word};

fn keys_strategy(w: u32, max_len: usize) -> impl Strategy<Value = BTreeSet<u64>> {
    let max = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
    proptest::collection::btree_set(1..=max, 0..=max_len)
}

fn linear<W: Word>(w: u32, seed: u64, a: &BTreeSet<u64>, b: &BTreeSet<u64>) {
    let params = HashParams::new(w, 3, 48, seed, 16).unwrap();
    let to_w = |s: &BTreeSet<u64>| s.iter().map(|&x| W::truncate_from(x)).collect::<Vec<_>>();
    let mut merged = Sketch::<W>::from_set(params, to_w(a)).unwrap();
    merged
        .merge(&Sketch::from_set(params, to_w(b)).unwrap())
        .unwrap();
    let diff: BTreeSet<u64> = a.symmetric_difference(b).copied().collect();
    assert_eq!(merged, Sketch::from_set(params, to_w(&diff)).unwrap());
}

proptest! {
    #[test]
    fn merge_is_symmetric_difference_u8(seed: u64, a in keys_strategy(8, 40), b in keys_strategy(8, 40)) {
        linear::<u8>(8, seed, &a, &b);
    }

    #[test]
    fn merge_is_symmetric_difference_u16(seed: u64, a in keys_strategy(12, 40), b in keys_strategy(12, 40)) {
        linear::<u16>(12, seed, &a, &b);
    }

    #[test]
    fn merge_is_symmetric_difference_u32(seed: u64, a in keys_strategy(32, 40), b in keys_strategy(32, 40)) {
        linear::<u32>(32, seed, &a, &b);
    }

    #[test]
    fn merge_is_symmetric_difference_u64(seed: u64, a in keys_strategy(64, 40), b in keys_strategy(64, 40)) {
        linear::<u64>(64, seed, &a, &b);
    }

    #[test]
    fn toggle_order_does_not_matter(seed: u64, keys in keys_strategy(64, 30)) {
        let params = HashParams::new(64, 4, 40, seed, 32).unwrap();
        let forward = Sketch::<u64>::from_set(params, keys.iter().copied()).unwrap();
        let backward = Sketch::<u64>::from_set(params, keys.iter().rev().copied()).unwrap();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn success_reproduces_the_sketch(seed: u64, keys in keys_strategy(64, 60)) {
        let params = HashParams::new(64, 3, 64, seed, 0).unwrap();
        let sketch = Sketch::<u64>::from_set(params, keys.iter().copied()).unwrap();
        let out = sketch.decode_copy(DecodeLimits::default());
        if out.is_success() {
            prop_assert_eq!(Sketch::from_set(params, out.keys).unwrap(), sketch);
        }
    }
}

#[test]
fn empty_ban_list_matches_the_decoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.gen_range(8..200);
        let params = HashParams::new(64, 3, n, rng.gen(), 32).unwrap();
        let m = rng.gen_range(0..=n);
        let sketch = Sketch::<u64>::from_set(params, random_keys(&mut rng, m, 64)).unwrap();
        let mut a = sketch.clone();
        let mut b = sketch.clone();
        assert_eq!(
            a.decode(DecodeLimits::default()),
            reference_peel(&mut b, &BTreeSet::new(), DecodeLimits::default())
        );
        assert_eq!(a, b);
    }
}

#[test]
fn light_load_recovers_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut exact = 0;
    for _ in 0..200 {
        let params = HashParams::new(64, 3, 1000, rng.gen(), 32).unwrap();
        let keys = random_keys(&mut rng, 500, 64);
        let out = Sketch::<u64>::from_set(params, keys.iter().copied())
            .unwrap()
            .decode(DecodeLimits::default());
        let want: HashSet<u64> = keys.into_iter().collect();
        exact += usize::from(
            out.is_success() && out.keys.iter().copied().collect::<HashSet<_>>() == want,
        );
    }
    assert!(exact >= 198, "{exact}/200");
}
