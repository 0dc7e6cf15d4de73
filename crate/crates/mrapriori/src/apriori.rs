//! Sequential Apriori over any candidate store, plus an exhaustive
//! brute-force miner used as ground truth in tests.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::itemset::{
    CountedItemset, FrequentLevel, ItemId, Itemset, SupportThreshold, TransactionDatabase,
};
use crate::store::{generate_candidates, HashTreeParams, StoreKind};

/// Output of one mining run: the non-empty frequent levels in ascending k.
/// `iterations` counts every pass over the data, including the final pass
/// that came up empty and stopped the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct MiningResult {
    pub levels: Vec<FrequentLevel>,
    pub threshold: SupportThreshold,
    pub iterations: usize,
}

impl MiningResult {
    /// Total number of frequent itemsets across all levels.
    pub fn total_frequent(&self) -> usize {
        self.levels.iter().map(FrequentLevel::len).sum()
    }

    /// All frequent itemsets with counts, level by level.
    pub fn all_entries(&self) -> impl Iterator<Item = &CountedItemset> {
        self.levels.iter().flat_map(|level| level.entries().iter())
    }
}

/// First pass: frequent 1-itemsets by a full scan. Transactions are
/// deduped, so each contributes at most once per item.
pub fn frequent_one(db: &TransactionDatabase, min_count: u64) -> FrequentLevel {
    debug_assert!(min_count >= 1);
    let Some(max_item) = db.max_item_id() else {
        return FrequentLevel::empty(1);
    };
    let mut counts = vec![0u64; max_item as usize + 1];
    for transaction in db.transactions() {
        for &item in transaction.items().items() {
            counts[item as usize] += 1;
        }
    }
    let entries = counts
        .iter()
        .enumerate()
        .filter(|&(_, &count)| count >= min_count)
        .map(|(item, &count)| CountedItemset::new(Itemset::from_sorted(vec![item as ItemId]), count))
        .collect();
    FrequentLevel::new(1, entries)
}

/// Full Apriori: L_1 by scan, then repeatedly join/prune the previous
/// level into a candidate store of the requested kind, count candidates
/// against every transaction, and keep those meeting the threshold. Stops
/// once a level comes up empty.
pub fn run_sequential(
    db: &TransactionDatabase,
    threshold: SupportThreshold,
    kind: StoreKind,
    params: HashTreeParams,
) -> Result<MiningResult> {
    let min_count = threshold.resolve(db)?;
    let mut levels = Vec::new();
    let mut current = frequent_one(db, min_count);
    let mut iterations = 1;
    while !current.is_empty() {
        levels.push(current);
        let previous = levels.last().expect("just pushed");
        let mut store = generate_candidates(previous, kind, params)?;
        if store.candidate_count() > 0 {
            for transaction in db.transactions() {
                store.increment_subsets(transaction.items());
            }
        }
        let entries: Vec<CountedItemset> = store
            .counted_itemsets()
            .into_iter()
            .filter(|entry| entry.support >= min_count)
            .collect();
        current = FrequentLevel::new(previous.k() + 1, entries);
        iterations += 1;
    }
    Ok(MiningResult { levels, threshold, iterations })
}

/// Exhaustive miner: enumerates every itemset over the items that occur in
/// the database as a bitmask and counts containment with mask arithmetic,
/// sharing no traversal code with the candidate stores. Guarded against
/// exponential blowup, so it only accepts small instances.
pub fn brute_force_mine(db: &TransactionDatabase, threshold: SupportThreshold) -> Result<MiningResult> {
    if let Some(max_item) = db.max_item_id() {
        if max_item > 20 {
            return Err(Error::InstanceTooLarge(format!(
                "max item id {max_item} exceeds 20"
            )));
        }
    }
    if db.num_transactions() > 200 {
        return Err(Error::InstanceTooLarge(format!(
            "{} transactions exceed 200",
            db.num_transactions()
        )));
    }
    let min_count = threshold.resolve(db)?;

    let occurring: BTreeSet<ItemId> = db
        .transactions()
        .iter()
        .flat_map(|t| t.items().iter().copied())
        .collect();
    let items: Vec<ItemId> = occurring.into_iter().collect();
    let bit_of = |item: ItemId| items.binary_search(&item).expect("occurring item") as u32;

    let masks: Vec<u32> = db
        .transactions()
        .iter()
        .map(|t| t.items().iter().fold(0u32, |mask, &item| mask | 1 << bit_of(item)))
        .collect();

    let mut by_size: Vec<Vec<CountedItemset>> = vec![Vec::new(); items.len() + 1];
    for candidate in 1u32..1u32 << items.len() {
        let support = masks.iter().filter(|&&mask| mask & candidate == candidate).count() as u64;
        if support < min_count {
            continue;
        }
        let members: Vec<ItemId> = (0..items.len() as u32)
            .filter(|bit| candidate & (1 << bit) != 0)
            .map(|bit| items[bit as usize])
            .collect();
        by_size[members.len()].push(CountedItemset::new(Itemset::from_sorted(members), support));
    }

    let mut levels = Vec::new();
    for (k, entries) in by_size.into_iter().enumerate().skip(1) {
        if entries.is_empty() {
            break;
        }
        levels.push(FrequentLevel::new(k, entries));
    }
    let iterations = levels.len() + 1;
    Ok(MiningResult { levels, threshold, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn db(rows: &[&[ItemId]]) -> TransactionDatabase {
        TransactionDatabase::from_itemsets(
            rows.iter().map(|row| Itemset::from_unsorted(row.to_vec())).collect(),
        )
    }

    fn level(k: usize, entries: &[(&[ItemId], u64)]) -> FrequentLevel {
        FrequentLevel::new(
            k,
            entries
                .iter()
                .map(|(items, support)| CountedItemset::new(Itemset::from_unsorted(items.to_vec()), *support))
                .collect(),
        )
    }

    #[test]
    fn frequent_one_counts_items() {
        let result = frequent_one(&db(&[&[1, 2], &[1, 3], &[1]]), 2);
        assert_eq!(result, level(1, &[(&[1], 3)]));
    }

    #[test]
    fn frequent_one_keeps_everything_at_min_one() {
        let result = frequent_one(&db(&[&[1], &[2]]), 1);
        assert_eq!(result, level(1, &[(&[1], 1), (&[2], 1)]));
    }

    #[test]
    fn frequent_one_can_be_empty() {
        assert!(frequent_one(&db(&[&[1], &[2]]), 3).is_empty());
    }

    #[test]
    fn sequential_full_support() {
        for kind in StoreKind::ALL {
            let result = run_sequential(
                &db(&[&[1, 2, 3], &[1, 2, 3], &[1, 2, 3]]),
                SupportThreshold::Relative(1.0),
                kind,
                HashTreeParams::default(),
            )
            .unwrap();
            assert_eq!(
                result.levels,
                vec![
                    level(1, &[(&[1], 3), (&[2], 3), (&[3], 3)]),
                    level(2, &[(&[1, 2], 3), (&[1, 3], 3), (&[2, 3], 3)]),
                    level(3, &[(&[1, 2, 3], 3)]),
                ],
                "{kind}"
            );
            assert_eq!(result.iterations, 4, "{kind}");
        }
    }

    #[test]
    fn sequential_nothing_frequent() {
        let result = run_sequential(
            &db(&[&[1], &[2], &[3]]),
            SupportThreshold::Relative(0.5),
            StoreKind::Trie,
            HashTreeParams::default(),
        )
        .unwrap();
        assert!(result.levels.is_empty());
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn sequential_single_transaction() {
        let result = run_sequential(
            &db(&[&[1, 2]]),
            SupportThreshold::Absolute(1),
            StoreKind::HashTree,
            HashTreeParams::default(),
        )
        .unwrap();
        assert_eq!(
            result.levels,
            vec![level(1, &[(&[1], 1), (&[2], 1)]), level(2, &[(&[1, 2], 1)])]
        );
        assert_eq!(result.iterations, 3);
    }

    #[test]
    fn brute_force_by_hand() {
        let result = brute_force_mine(&db(&[&[1, 2], &[2, 3]]), SupportThreshold::Absolute(2)).unwrap();
        assert_eq!(result.levels, vec![level(1, &[(&[2], 2)])]);
        assert_eq!(result.iterations, 2);
    }

    #[test]
    fn brute_force_empty_database() {
        let result = brute_force_mine(&db(&[]), SupportThreshold::Absolute(1)).unwrap();
        assert!(result.levels.is_empty());
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let wide = db(&[&[21]]);
        assert!(matches!(
            brute_force_mine(&wide, SupportThreshold::Absolute(1)),
            Err(Error::InstanceTooLarge(_))
        ));
        let long = TransactionDatabase::from_itemsets(vec![Itemset::from_sorted(vec![1]); 201]);
        assert!(matches!(
            brute_force_mine(&long, SupportThreshold::Absolute(1)),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn oracle_matches_examples() {
        let samples: [(&[&[ItemId]], SupportThreshold); 3] = [
            (
                &[&[1, 2, 3], &[1, 2, 3], &[1, 2, 3]],
                SupportThreshold::Relative(1.0),
            ),
            (&[&[1], &[2], &[3]], SupportThreshold::Relative(0.5)),
            (&[&[1, 2]], SupportThreshold::Absolute(1)),
        ];
        for (rows, threshold) in samples {
            let database = db(rows);
            let expected = brute_force_mine(&database, threshold).unwrap();
            for kind in StoreKind::ALL {
                let got = run_sequential(&database, threshold, kind, HashTreeParams::default()).unwrap();
                assert_eq!(got, expected, "{kind}");
            }
        }
    }

    fn arbitrary_db() -> impl Strategy<Value = TransactionDatabase> {
        prop::collection::vec(prop::collection::vec(0u32..12, 0..=8), 1..=25)
            .prop_map(|rows| {
                TransactionDatabase::from_itemsets(rows.into_iter().map(Itemset::from_unsorted).collect())
            })
    }

    proptest! {
        #[test]
        fn all_stores_match_the_oracle(database in arbitrary_db(), threshold_index in 0usize..4) {
            let threshold = SupportThreshold::Relative([0.1, 0.2, 0.3, 0.5][threshold_index]);
            let expected = brute_force_mine(&database, threshold).unwrap();
            for kind in StoreKind::ALL {
                let got = run_sequential(&database, threshold, kind, HashTreeParams::default()).unwrap();
                prop_assert_eq!(&got, &expected, "{}", kind);
            }
        }

        #[test]
        fn supports_never_increase_along_subset_chains(database in arbitrary_db()) {
            let result = brute_force_mine(&database, SupportThreshold::Relative(0.1)).unwrap();
            for window in result.levels.windows(2) {
                let (below, above) = (&window[0], &window[1]);
                for entry in above.entries() {
                    for smaller in below.entries() {
                        if smaller.itemset.is_subset_of(&entry.itemset) {
                            prop_assert!(smaller.support >= entry.support);
                        }
                    }
                }
            }
        }

        #[test]
        fn downward_closure_holds(database in arbitrary_db()) {
            let result = run_sequential(
                &database,
                SupportThreshold::Relative(0.2),
                StoreKind::Trie,
                HashTreeParams::default(),
            ).unwrap();
            for window in result.levels.windows(2) {
                let (below, above) = (&window[0], &window[1]);
                for entry in above.entries() {
                    let items = entry.itemset.items();
                    for dropped in 0..items.len() {
                        let mut sub = items.to_vec();
                        sub.remove(dropped);
                        prop_assert!(below.contains_items(&sub));
                    }
                }
            }
        }

        #[test]
        fn iterations_bounded_by_longest_transaction(database in arbitrary_db()) {
            let longest = database.transactions().iter().map(|t| t.items().len()).max().unwrap_or(0);
            let result = run_sequential(
                &database,
                SupportThreshold::Relative(0.1),
                StoreKind::HashTableTrie,
                HashTreeParams::default(),
            ).unwrap();
            prop_assert!(result.iterations <= longest + 1);
            prop_assert_eq!(result.iterations, result.levels.len() + 1);
        }
    }
}
