//! Hand-built hash tables reproducing the textbook decoding scenarios.

use crate::hashing::HashParams;
use crate::oracle::InjectedHashTable;
use crate::sketch::Sketch;

pub type Fixture = Sketch<u64, InjectedHashTable>;

fn table(w: u32, n: usize, r: u32, entries: &[(u64, [usize; 3])]) -> InjectedHashTable {
    let fallback = HashParams::new(w, 3, n, 0x5EED, r).expect("fixture params");
    let mut t = InjectedHashTable::new(fallback);
    for (key, slots) in entries {
        t.insert(*key, slots).expect("fixture entry");
    }
    t
}

/// Slot table of the three-round walkthrough: x = 1, y = 2, z = 4 with
/// h(x) = {1,3,6}, h(y) = {3,4,7}, h(z) = {1,6,7} and h(x^z) = {3,6,8}.
///
/// Buckets are labelled 1..=8 as in the walkthrough, so n = 9 and bucket 0
/// stays unused. x^y = 3 and y^z = 6 also sit in buckets initially; they are
/// pinned away from those buckets so that only 4 and 6 look pure at first.
pub fn walkthrough_table() -> InjectedHashTable {
    table(
        64,
        9,
        0,
        &[
            (1, [1, 3, 6]),
            (2, [3, 4, 7]),
            (4, [1, 6, 7]),
            (5, [3, 6, 8]),
            (3, [0, 2, 5]),
            (6, [0, 2, 5]),
        ],
    )
}

/// Sketch of {1, 2, 4} under [`walkthrough_table`].
pub fn walkthrough() -> Fixture {
    Sketch::from_set(walkthrough_table(), [1, 2, 4]).expect("fixture")
}

/// Two stored keys sharing all slots: {1, 2} with h(1) = h(2) = (0,1,2).
/// The XOR 3 is pinned to unrelated buckets, so nothing looks pure.
pub fn shared_slots() -> Fixture {
    let t = table(64, 8, 0, &[(1, [0, 1, 2]), (2, [0, 1, 2]), (3, [5, 6, 7])]);
    Sketch::from_set(t, [1, 2]).expect("fixture")
}

/// {1, 2} with h(1) = h(2) = (a,b,c) and h(3) = (c,d,e), using buckets
/// a..e = 0..4. Bucket c holds 3 and looks pure; toggling 3 and toggling it
/// back from d returns to the start state forever.
pub fn toggle_cycle() -> Fixture {
    let t = table(64, 8, 0, &[(1, [0, 1, 2]), (2, [0, 1, 2]), (3, [2, 3, 4])]);
    Sketch::from_set(t, [1, 2]).expect("fixture")
}

/// {1, 2, 3} over 2-bit keys and 3 buckets, all with slots (0,1,2). Since
/// 1^2^3 = 0 every bucket cancels; only an `r`-bit guard can tell.
pub fn cancelling_triple(r: u32) -> Fixture {
    let t = table(2, 3, r, &[(1, [0, 1, 2]), (2, [0, 1, 2]), (3, [0, 1, 2])]);
    Sketch::from_set(t, [1, 2, 3]).expect("fixture")
}

/// [`walkthrough_table`] in the `key: b1,b2,b3` text format.
pub fn walkthrough_table_text() -> String {
    "1: 1,3,6\n2: 3,4,7\n4: 1,6,7\n5: 3,6,8\n3: 0,2,5\n6: 0,2,5\n".to_string()
}
