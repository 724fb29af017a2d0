//! Exhaustive anomaly search.
//!
//! An anomaly is a set of at least three keys whose XOR is zero and which all
//! hit a common centre bucket with odd multiplicity. Any `l - 1` members
//! stored in the centre make it hold the missing member, so the centre looks
//! pure without being pure. Only keys incident to a shared bucket can form an
//! anomaly, which keeps the search local to each bucket.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::hashing::HashSource;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Anomaly {
    pub centre: usize,
    /// Members in ascending order.
    pub keys: Vec<u64>,
}

impl Anomaly {
    pub fn size(&self) -> usize {
        self.keys.len()
    }

    /// Members outside `s0`.
    pub fn foreign_count(&self, s0: &HashSet<u64>) -> usize {
        self.keys.iter().filter(|k| !s0.contains(k)).count()
    }
}

/// An anomaly together with its foreign-key count relative to a stored set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NativityLabel {
    pub anomaly: Anomaly,
    pub foreign: usize,
}

impl NativityLabel {
    pub fn is_native(&self) -> bool {
        self.foreign <= 1
    }
}

pub fn label_nativity(anomalies: &[Anomaly], s0: &HashSet<u64>) -> Vec<NativityLabel> {
    anomalies
        .iter()
        .map(|a| NativityLabel {
            anomaly: a.clone(),
            foreign: a.foreign_count(s0),
        })
        .collect()
}

/// Anomalies with at most one key outside `s0`.
pub fn native_anomalies(anomalies: &[Anomaly], s0: &HashSet<u64>) -> Vec<Anomaly> {
    label_nativity(anomalies, s0)
        .into_iter()
        .filter(NativityLabel::is_native)
        .map(|l| l.anomaly)
        .collect()
}

/// Candidates hitting each bucket with odd multiplicity, ascending.
fn incidence<H: HashSource>(hasher: &H, keys: &[u64]) -> Vec<Vec<u64>> {
    let mut lists = vec![Vec::new(); hasher.params().buckets()];
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &x in &sorted {
        for b in hasher.hash_multiset(x).odd_buckets() {
            lists[b].push(x);
        }
    }
    lists
}

struct Budget {
    left: u64,
    total: u64,
}

impl Budget {
    fn new(total: u64) -> Self {
        Self { left: total, total }
    }

    fn spend(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::BudgetExceeded(self.total));
        }
        self.left -= 1;
        Ok(())
    }
}

/// Every anomaly of size `3..=max_size` whose members all lie in
/// `candidates`. An anomaly with several centres is listed once per centre.
///
/// `budget` caps the number of subsets visited.
pub fn enumerate_anomalies<H: HashSource>(
    hasher: &H,
    candidates: &[u64],
    max_size: usize,
    budget: u64,
) -> Result<Vec<Anomaly>> {
    let mut budget = Budget::new(budget);
    let mut found = Vec::new();
    for (centre, list) in incidence(hasher, candidates).iter().enumerate() {
        let mut chosen = Vec::new();
        zero_xor_subsets(
            list,
            0,
            0,
            max_size,
            &mut chosen,
            &mut budget,
            &mut |keys| {
                found.push(Anomaly {
                    centre,
                    keys: keys.to_vec(),
                })
            },
        )?;
    }
    found.sort();
    Ok(found)
}

fn zero_xor_subsets(
    list: &[u64],
    start: usize,
    acc: u64,
    max_size: usize,
    chosen: &mut Vec<u64>,
    budget: &mut Budget,
    emit: &mut dyn FnMut(&[u64]),
) -> Result<()> {
    if chosen.len() >= 3 && acc == 0 {
        emit(chosen);
    }
    if chosen.len() == max_size {
        return Ok(());
    }
    for idx in start..list.len() {
        budget.spend()?;
        chosen.push(list[idx]);
        zero_xor_subsets(
            list,
            idx + 1,
            acc ^ list[idx],
            max_size,
            chosen,
            budget,
            emit,
        )?;
        chosen.pop();
    }
    Ok(())
}

/// Every native anomaly of `s0` with at most `max_size` members: subsets of
/// the stored keys at a bucket whose XOR is zero, or whose XOR is a further
/// valid key that also hits that bucket.
pub fn find_native_anomalies<H: HashSource>(
    hasher: &H,
    s0: &[u64],
    max_size: usize,
    budget: u64,
) -> Result<Vec<Anomaly>> {
    let params = *hasher.params();
    let mut budget = Budget::new(budget);
    let mut found = BTreeSet::new();
    for (centre, list) in incidence(hasher, s0).iter().enumerate() {
        let mut chosen = Vec::new();
        native_search(
            list,
            0,
            0,
            &mut chosen,
            &mut budget,
            &mut |stored: &[u64], acc: u64| {
                let size = stored.len();
                if acc == 0 {
                    if size >= 3 && size <= max_size {
                        found.insert(Anomaly {
                            centre,
                            keys: stored.to_vec(),
                        });
                    }
                } else if size >= 2
                    && size < max_size
                    && acc <= params.max_key()
                    && !stored.contains(&acc)
                    && hasher.hits_odd(acc, centre)
                {
                    let mut keys = stored.to_vec();
                    keys.push(acc);
                    keys.sort_unstable();
                    found.insert(Anomaly { centre, keys });
                }
            },
            max_size,
        )?;
    }
    Ok(found.into_iter().collect())
}

fn native_search(
    list: &[u64],
    start: usize,
    acc: u64,
    chosen: &mut Vec<u64>,
    budget: &mut Budget,
    emit: &mut dyn FnMut(&[u64], u64),
    max_size: usize,
) -> Result<()> {
    emit(chosen, acc);
    if chosen.len() == max_size {
        return Ok(());
    }
    for idx in start..list.len() {
        budget.spend()?;
        chosen.push(list[idx]);
        native_search(
            list,
            idx + 1,
            acc ^ list[idx],
            chosen,
            budget,
            emit,
            max_size,
        )?;
        chosen.pop();
    }
    Ok(())
}

/// Anomalous buckets `h(S_A)`: every slot of every key in the anomalies.
pub fn anomalous_buckets<H: HashSource>(hasher: &H, anomalies: &[Anomaly]) -> BTreeSet<usize> {
    anomalies
        .iter()
        .flat_map(|a| a.keys.iter())
        .flat_map(|&x| hasher.hash_multiset(x).slots().to_vec())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::HashParams;
    use crate::oracle::InjectedHashTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triple_table() -> InjectedHashTable {
        InjectedHashTable::new(HashParams::new(2, 3, 3, 0, 0).unwrap())
            .with(1, &[0, 1, 2])
            .unwrap()
            .with(2, &[0, 1, 2])
            .unwrap()
            .with(3, &[0, 1, 2])
            .unwrap()
    }

    #[test]
    fn triple_is_found_once_per_centre() {
        let found = enumerate_anomalies(&triple_table(), &[1, 2, 3], 5, 1000).unwrap();
        assert_eq!(found.len(), 3);
        for (i, a) in found.iter().enumerate() {
            assert_eq!(a.centre, i);
            assert_eq!(a.keys, vec![1, 2, 3]);
        }
    }

    #[test]
    fn nonzero_xor_gives_nothing() {
        let t = InjectedHashTable::new(HashParams::new(8, 3, 4, 0, 0).unwrap())
            .with(1, &[0, 1, 2])
            .unwrap()
            .with(2, &[0, 1, 2])
            .unwrap()
            .with(4, &[0, 1, 2])
            .unwrap();
        assert!(enumerate_anomalies(&t, &[1, 2, 4], 5, 1000)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn distinct_hashes_give_nothing() {
        let t = InjectedHashTable::new(HashParams::new(8, 3, 12, 0, 0).unwrap())
            .with(1, &[0, 1, 2])
            .unwrap()
            .with(2, &[3, 4, 5])
            .unwrap()
            .with(3, &[6, 7, 8])
            .unwrap();
        assert!(enumerate_anomalies(&t, &[1, 2, 3], 5, 1000)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            enumerate_anomalies(&triple_table(), &[1, 2, 3], 5, 2),
            Err(Error::BudgetExceeded(2))
        );
    }

    #[test]
    fn nativity_filter() {
        let a = Anomaly {
            centre: 0,
            keys: vec![1, 2, 3],
        };
        let inside: HashSet<u64> = [1, 2, 3].into();
        let one_out: HashSet<u64> = [1, 2].into();
        let two_out: HashSet<u64> = [1].into();
        assert_eq!(native_anomalies(std::slice::from_ref(&a), &inside).len(), 1);
        assert_eq!(
            native_anomalies(std::slice::from_ref(&a), &one_out).len(),
            1
        );
        assert!(native_anomalies(&[a], &two_out).is_empty());
    }

    // Naive search over all subsets and all buckets.
    fn brute_force<H: HashSource>(h: &H, keys: &[u64], max_size: usize) -> Vec<Anomaly> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << keys.len()) {
            let set: Vec<u64> = (0..keys.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| keys[i])
                .collect();
            if set.len() < 3 || set.len() > max_size || set.iter().fold(0, |a, b| a ^ b) != 0 {
                continue;
            }
            for centre in 0..h.params().buckets() {
                if set.iter().all(|&x| h.hits_odd(x, centre)) {
                    let mut sorted = set.clone();
                    sorted.sort_unstable();
                    out.push(Anomaly {
                        centre,
                        keys: sorted,
                    });
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = HashParams::new(5, 3, rng.gen_range(2..6), rng.gen(), 0).unwrap();
            let keys = crate::sampling::random_keys(&mut rng, 12, 5);
            let fast = enumerate_anomalies(&p, &keys, 5, u64::MAX).unwrap();
            assert_eq!(fast, brute_force(&p, &keys, 5));
        }
    }

    #[test]
    fn native_search_matches_filtered_full_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let p = HashParams::new(5, 3, rng.gen_range(2..8), rng.gen(), 0).unwrap();
            let s0 = crate::sampling::random_keys(&mut rng, 8, 5);
            let s0_set: HashSet<u64> = s0.iter().copied().collect();
            let universe: Vec<u64> = (1..32).collect();
            let all = enumerate_anomalies(&p, &universe, 5, u64::MAX).unwrap();
            let expect = native_anomalies(&all, &s0_set);
            assert_eq!(find_native_anomalies(&p, &s0, 5, u64::MAX).unwrap(), expect);
        }
    }
}
