//! Domain types shared by every stage of the miner: itemsets, transactions,
//! databases, support thresholds, and frequent levels.
//!
//! An [`Itemset`] is always held in canonical form: item ids strictly
//! increasing, no duplicates. Numeric order on ids doubles as the
//! lexicographic order used by candidate generation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dense item identifier. Non-integer tokens are mapped to ids by `dataio`.
pub type ItemId = u32;

/// A duplicate-free set of items, stored sorted ascending.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    /// Canonicalizes an arbitrary item sequence: sorts and removes duplicates.
    /// Idempotent; an empty input yields the empty itemset.
    pub fn from_unsorted(mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Itemset(items)
    }

    /// Wraps a sequence that is already strictly increasing.
    pub fn from_sorted(items: Vec<ItemId>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]), "items not strictly increasing");
        Itemset(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ItemId> {
        self.0.iter()
    }

    /// True iff every item of `self` occurs in `other`. Single merge scan
    /// over the two sorted sequences; the empty itemset is a subset of all.
    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        let mut rest = other.0.iter();
        'candidate: for &wanted in &self.0 {
            for &present in rest.by_ref() {
                if present == wanted {
                    continue 'candidate;
                }
                if present > wanted {
                    return false;
                }
            }
            return false;
        }
        true
    }
}

impl fmt::Display for Itemset {
    /// Space-separated item ids, e.g. `1 2 3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for item in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{item}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self)
    }
}

impl From<Vec<ItemId>> for Itemset {
    fn from(items: Vec<ItemId>) -> Self {
        Itemset::from_unsorted(items)
    }
}

/// One database row: a canonical itemset plus its position in the database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    items: Itemset,
    ordinal: usize,
}

impl Transaction {
    pub fn new(items: Itemset, ordinal: usize) -> Self {
        Transaction { items, ordinal }
    }

    pub fn items(&self) -> &Itemset {
        &self.items
    }

    pub fn ordinal(&self) -> usize {
        self.ordinal
    }
}

/// An ordered list of transactions with item-universe statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDatabase {
    transactions: Vec<Transaction>,
    max_item_id: Option<ItemId>,
}

impl TransactionDatabase {
    /// Builds a database from itemsets, assigning ordinals by position.
    pub fn from_itemsets(itemsets: Vec<Itemset>) -> Self {
        let max_item_id = itemsets
            .iter()
            .filter_map(|t| t.items().last().copied())
            .max();
        let transactions = itemsets
            .into_iter()
            .enumerate()
            .map(|(ordinal, items)| Transaction::new(items, ordinal))
            .collect();
        TransactionDatabase { transactions, max_item_id }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn num_transactions(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Largest item id present, if any transaction is non-empty.
    pub fn max_item_id(&self) -> Option<ItemId> {
        self.max_item_id
    }
}

/// Minimum support, given either as a fraction of the database or as an
/// absolute transaction count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportThreshold {
    /// Fraction in `[0, 1]`.
    Relative(f64),
    /// Absolute count, at least 1.
    Absolute(u64),
}

impl SupportThreshold {
    /// Binds the threshold to a database, yielding the minimum absolute
    /// support count. Relative thresholds resolve to
    /// `ceil(fraction * num_transactions)`, computed in exact decimal
    /// arithmetic so that e.g. `0.07 * 100` resolves to 7, never 8. The
    /// result is clamped to at least 1.
    pub fn resolve(&self, db: &TransactionDatabase) -> Result<u64> {
        match *self {
            SupportThreshold::Absolute(count) => {
                if count < 1 {
                    return Err(Error::InvalidThreshold("absolute count must be >= 1".into()));
                }
                Ok(count)
            }
            SupportThreshold::Relative(fraction) => {
                if !fraction.is_finite() || !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::InvalidThreshold(format!(
                        "relative support {fraction} outside [0, 1]"
                    )));
                }
                let n = db.num_transactions() as u128;
                let count = match decimal_ratio(fraction) {
                    Some((num, den)) => {
                        // ceil(num * n / den)
                        num.saturating_mul(n).div_ceil(den)
                    }
                    None => (fraction * db.num_transactions() as f64).ceil() as u128,
                };
                Ok((count.min(u64::MAX as u128) as u64).max(1))
            }
        }
    }
}

/// Recovers the decimal rational a finite float was written as. Rust's
/// shortest round-trip formatting gives back the original decimal digits,
/// so `0.003` becomes `(3, 1000)`. Returns `None` when the denominator
/// exceeds `u128` range.
fn decimal_ratio(value: f64) -> Option<(u128, u128)> {
    let repr = format!("{value}");
    let (mantissa, exp) = match repr.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (repr.as_str(), 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits: String = [int_part, frac_part].concat();
    let num: u128 = digits.parse().ok()?;
    let scale = frac_part.len() as i32 - exp;
    if scale >= 0 {
        Some((num, 10u128.checked_pow(u32::try_from(scale).ok()?)?))
    } else {
        Some((num.checked_mul(10u128.checked_pow(u32::try_from(-scale).ok()?)?)?, 1))
    }
}

impl FromStr for SupportThreshold {
    type Err = Error;

    /// Accepts a fraction like `0.003` or an absolute count like `count:233`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(count) = s.strip_prefix("count:") {
            let count: u64 = count
                .parse()
                .map_err(|_| Error::InvalidThreshold(format!("bad absolute count {count:?}")))?;
            if count < 1 {
                return Err(Error::InvalidThreshold("absolute count must be >= 1".into()));
            }
            return Ok(SupportThreshold::Absolute(count));
        }
        let fraction: f64 = s
            .parse()
            .map_err(|_| Error::InvalidThreshold(format!("bad fraction {s:?}")))?;
        if !fraction.is_finite() || !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidThreshold(format!("fraction {s} outside [0, 1]")));
        }
        Ok(SupportThreshold::Relative(fraction))
    }
}

impl fmt::Display for SupportThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportThreshold::Relative(fraction) => write!(f, "{fraction}"),
            SupportThreshold::Absolute(count) => write!(f, "count:{count}"),
        }
    }
}

/// An itemset together with its absolute support count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CountedItemset {
    pub itemset: Itemset,
    pub support: u64,
}

impl CountedItemset {
    pub fn new(itemset: Itemset, support: u64) -> Self {
        CountedItemset { itemset, support }
    }
}

/// The frequent k-itemsets of one iteration, sorted lexicographically.
/// This is the value handed from iteration k to iteration k+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequentLevel {
    k: usize,
    entries: Vec<CountedItemset>,
}

impl FrequentLevel {
    /// Builds a level from entries of length `k`, sorting them into
    /// canonical order.
    pub fn new(k: usize, mut entries: Vec<CountedItemset>) -> Self {
        debug_assert!(k >= 1);
        debug_assert!(entries.iter().all(|e| e.itemset.len() == k));
        entries.sort_unstable();
        FrequentLevel { k, entries }
    }

    pub fn empty(k: usize) -> Self {
        FrequentLevel { k, entries: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[CountedItemset] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn itemsets(&self) -> impl Iterator<Item = &Itemset> {
        self.entries.iter().map(|e| &e.itemset)
    }

    /// Membership test by binary search over the sorted entries.
    pub fn contains_items(&self, items: &[ItemId]) -> bool {
        self.entries
            .binary_search_by(|e| e.itemset.items().cmp(items))
            .is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[ItemId]) -> Itemset {
        Itemset::from_unsorted(items.to_vec())
    }

    fn db_of(rows: &[&[ItemId]]) -> TransactionDatabase {
        TransactionDatabase::from_itemsets(rows.iter().map(|r| set(r)).collect())
    }

    #[test]
    fn normalize_sorts_and_dedups() {
        assert_eq!(set(&[3, 1, 2, 2]).items(), &[1, 2, 3]);
        assert_eq!(set(&[]).items(), &[] as &[ItemId]);
        assert_eq!(set(&[7]).items(), &[7]);
    }

    #[test]
    fn subset_merge_scan() {
        assert!(set(&[1, 3]).is_subset_of(&set(&[1, 2, 3, 4])));
        assert!(!set(&[1, 5]).is_subset_of(&set(&[1, 2, 3, 4])));
        assert!(set(&[]).is_subset_of(&set(&[1, 2])));
    }

    #[test]
    fn resolve_relative_uses_exact_decimal_ceiling() {
        // ceil(0.003 * 77512) = ceil(232.536) = 233
        let db = TransactionDatabase::from_itemsets(vec![set(&[0]); 77512]);
        assert_eq!(SupportThreshold::Relative(0.003).resolve(&db).unwrap(), 233);

        let db100 = TransactionDatabase::from_itemsets(vec![set(&[0]); 100]);
        assert_eq!(SupportThreshold::Relative(1.0).resolve(&db100).unwrap(), 100);
        assert_eq!(SupportThreshold::Absolute(5).resolve(&db100).unwrap(), 5);
        // 0.07 * 100 is exactly 7 in decimal; float rounding must not push it to 8.
        assert_eq!(SupportThreshold::Relative(0.07).resolve(&db100).unwrap(), 7);
        // Clamped to 1 so a resolved threshold is always meaningful.
        assert_eq!(SupportThreshold::Relative(0.0).resolve(&db100).unwrap(), 1);
    }

    #[test]
    fn resolve_rejects_invalid_thresholds() {
        let db = db_of(&[&[1]]);
        assert!(SupportThreshold::Relative(-0.1).resolve(&db).is_err());
        assert!(SupportThreshold::Relative(1.5).resolve(&db).is_err());
        assert!(SupportThreshold::Absolute(0).resolve(&db).is_err());
    }

    #[test]
    fn threshold_round_trips_through_strings() {
        let t: SupportThreshold = "0.003".parse().unwrap();
        assert_eq!(t, SupportThreshold::Relative(0.003));
        assert_eq!(t.to_string(), "0.003");
        let t: SupportThreshold = "count:233".parse().unwrap();
        assert_eq!(t, SupportThreshold::Absolute(233));
        assert_eq!(t.to_string(), "count:233");
        assert!("count:0".parse::<SupportThreshold>().is_err());
        assert!("1.5".parse::<SupportThreshold>().is_err());
        assert!("abc".parse::<SupportThreshold>().is_err());
    }

    #[test]
    fn database_tracks_stats() {
        let db = db_of(&[&[1, 2, 3], &[2, 9]]);
        assert_eq!(db.num_transactions(), 2);
        assert_eq!(db.max_item_id(), Some(9));
        assert_eq!(db.transactions()[1].ordinal(), 1);
        assert_eq!(TransactionDatabase::default().max_item_id(), None);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(items in proptest::collection::vec(0u32..30, 0..12)) {
            let once = Itemset::from_unsorted(items);
            let twice = Itemset::from_unsorted(once.items().to_vec());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn subset_matches_naive_containment(
            a in proptest::collection::vec(0u32..12, 0..8),
            b in proptest::collection::vec(0u32..12, 0..8),
        ) {
            use std::collections::HashSet;
            let a = Itemset::from_unsorted(a);
            let b = Itemset::from_unsorted(b);
            let b_set: HashSet<ItemId> = b.iter().copied().collect();
            let naive = a.iter().all(|item| b_set.contains(item));
            prop_assert_eq!(a.is_subset_of(&b), naive);
        }

        #[test]
        fn resolve_never_undercounts(
            numer in 0u32..=1000,
            n in 1usize..500,
        ) {
            let fraction = f64::from(numer) / 1000.0;
            let db = TransactionDatabase::from_itemsets(vec![Itemset::from_sorted(vec![0]); n]);
            let resolved = SupportThreshold::Relative(fraction).resolve(&db).unwrap();
            prop_assert!(resolved as f64 >= fraction * n as f64 - 1e-9);
        }
    }
}
