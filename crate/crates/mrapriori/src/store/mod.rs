//! Interchangeable candidate containers for Apriori: a hash tree, a prefix
//! trie with linear child search, and a trie whose per-node child lookup is
//! a collision-free direct-addressed table.
//!
//! All three hold the candidate k-itemsets of one iteration with a support
//! counter each, answer "which stored candidates are subsets of this
//! transaction", and can be generated from the previous frequent level by
//! the join + prune step.

mod hash_tree;
mod trie;

pub use hash_tree::{hash_slot, HashTree};
pub use trie::{ChildIndex, DirectTable, SortedChildren, TrieStore};

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::itemset::{CountedItemset, FrequentLevel, ItemId, Itemset};

/// Trie with linear child search.
pub type ListTrie = TrieStore<SortedChildren>;
/// Trie with a perfect (direct-addressed) hash table at each node.
pub type TableTrie = TrieStore<DirectTable>;

/// Which candidate container to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StoreKind {
    HashTree,
    Trie,
    HashTableTrie,
}

impl StoreKind {
    pub const ALL: [StoreKind; 3] = [StoreKind::HashTree, StoreKind::Trie, StoreKind::HashTableTrie];
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoreKind::HashTree => "hashtree",
            StoreKind::Trie => "trie",
            StoreKind::HashTableTrie => "hashtabletrie",
        })
    }
}

impl FromStr for StoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hashtree" => Ok(StoreKind::HashTree),
            "trie" => Ok(StoreKind::Trie),
            "hashtabletrie" => Ok(StoreKind::HashTableTrie),
            other => Err(Error::InvalidInput(format!(
                "unknown structure {other:?} (expected hashtree, trie or hashtabletrie)"
            ))),
        }
    }
}

/// Hash-tree tuning parameters. Ignored by the trie kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashTreeParams {
    /// Width of the hash table at inner nodes; at least 2.
    pub child_max_size: u32,
    /// Leaf size that triggers a split, or `None` for unlimited (no splits).
    pub leaf_max_size: Option<u32>,
}

impl Default for HashTreeParams {
    fn default() -> Self {
        HashTreeParams { child_max_size: 20, leaf_max_size: None }
    }
}

impl HashTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.child_max_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "child_max_size must be >= 2, got {}",
                self.child_max_size
            )));
        }
        Ok(())
    }
}

/// Instrumentation counters for one traversal. `label_comparisons` counts
/// child-label equality tests in list-search tries and item comparisons in
/// hash-tree leaf scans; `hash_probes` counts hash-slot accesses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub label_comparisons: u64,
    pub hash_probes: u64,
    pub nodes_visited: u64,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.label_comparisons += rhs.label_comparisons;
        self.hash_probes += rhs.hash_probes;
        self.nodes_visited += rhs.nodes_visited;
    }
}

/// A candidate container of one of the three kinds. Candidates are indexed
/// by insertion order; counters start at zero.
#[derive(Clone, Debug)]
pub enum CandidateStore {
    HashTree(HashTree),
    Trie(ListTrie),
    HashTableTrie(TableTrie),
}

impl CandidateStore {
    /// Creates an empty store accepting only itemsets of length `k`.
    pub fn new(kind: StoreKind, k: usize, params: HashTreeParams) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidConfig("store requires k >= 1".into()));
        }
        Ok(match kind {
            StoreKind::HashTree => {
                params.validate()?;
                CandidateStore::HashTree(HashTree::new(k, params))
            }
            StoreKind::Trie => CandidateStore::Trie(TrieStore::new(k)),
            StoreKind::HashTableTrie => CandidateStore::HashTableTrie(TrieStore::new(k)),
        })
    }

    pub fn kind(&self) -> StoreKind {
        match self {
            CandidateStore::HashTree(_) => StoreKind::HashTree,
            CandidateStore::Trie(_) => StoreKind::Trie,
            CandidateStore::HashTableTrie(_) => StoreKind::HashTableTrie,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            CandidateStore::HashTree(s) => s.k(),
            CandidateStore::Trie(s) => s.k(),
            CandidateStore::HashTableTrie(s) => s.k(),
        }
    }

    /// Inserts a new candidate with counter 0.
    pub fn insert(&mut self, candidate: Itemset) -> Result<()> {
        match self {
            CandidateStore::HashTree(s) => s.insert(candidate),
            CandidateStore::Trie(s) => s.insert(candidate),
            CandidateStore::HashTableTrie(s) => s.insert(candidate),
        }
    }

    /// Number of candidates inserted.
    pub fn candidate_count(&self) -> usize {
        match self {
            CandidateStore::HashTree(s) => s.candidate_count(),
            CandidateStore::Trie(s) => s.candidate_count(),
            CandidateStore::HashTableTrie(s) => s.candidate_count(),
        }
    }

    /// Total nodes in the underlying tree, including the root.
    pub fn node_count(&self) -> usize {
        match self {
            CandidateStore::HashTree(s) => s.node_count(),
            CandidateStore::Trie(s) => s.node_count(),
            CandidateStore::HashTableTrie(s) => s.node_count(),
        }
    }

    /// Largest number of children under any single node; a proxy for how
    /// much linear child search costs.
    pub fn max_child_count(&self) -> usize {
        match self {
            CandidateStore::HashTree(s) => s.max_child_count(),
            CandidateStore::Trie(s) => s.max_child_count(),
            CandidateStore::HashTableTrie(s) => s.max_child_count(),
        }
    }

    /// Increments the counter of every stored candidate that is a subset of
    /// the transaction, exactly once each, and reports traversal costs.
    pub fn increment_subsets(&mut self, transaction: &Itemset) -> OpCounters {
        match self {
            CandidateStore::HashTree(s) => s.increment_subsets(transaction),
            CandidateStore::Trie(s) => s.increment_subsets(transaction),
            CandidateStore::HashTableTrie(s) => s.increment_subsets(transaction),
        }
    }

    /// Read-only variant of [`Self::increment_subsets`]: invokes `sink` with
    /// the insertion-order index of each contained candidate instead of
    /// touching the internal counters.
    pub fn for_each_contained(&self, transaction: &Itemset, mut sink: impl FnMut(usize)) -> OpCounters {
        match self {
            CandidateStore::HashTree(s) => s.for_each_contained(transaction, &mut sink),
            CandidateStore::Trie(s) => s.for_each_contained(transaction, &mut sink),
            CandidateStore::HashTableTrie(s) => s.for_each_contained(transaction, &mut sink),
        }
    }

    /// The candidate at an insertion-order index.
    pub fn candidate(&self, idx: usize) -> &Itemset {
        match self {
            CandidateStore::HashTree(s) => s.candidate(idx),
            CandidateStore::Trie(s) => s.candidate(idx),
            CandidateStore::HashTableTrie(s) => s.candidate(idx),
        }
    }

    /// Every candidate with its current counter, sorted lexicographically.
    pub fn counted_itemsets(&self) -> Vec<CountedItemset> {
        let mut out = match self {
            CandidateStore::HashTree(s) => s.counted_itemsets(),
            CandidateStore::Trie(s) => s.counted_itemsets(),
            CandidateStore::HashTableTrie(s) => s.counted_itemsets(),
        };
        out.sort_unstable();
        out
    }
}

/// Builds the candidate (k+1)-store from the frequent k-level: join every
/// ordered pair of itemsets sharing their first k-1 items, then drop any
/// result with an infrequent k-subset. The trie kinds join by enumerating
/// ordered sibling pairs under a common parent; the hash tree joins over
/// the sorted entry list. All kinds produce the same candidate set.
pub fn generate_candidates(
    frequent: &FrequentLevel,
    kind: StoreKind,
    params: HashTreeParams,
) -> Result<CandidateStore> {
    let mut store = CandidateStore::new(kind, frequent.k() + 1, params)?;
    if frequent.is_empty() {
        return Ok(store);
    }
    match kind {
        StoreKind::HashTree => {
            let sets: Vec<&Itemset> = frequent.itemsets().collect();
            for i in 0..sets.len() {
                let first = sets[i].items();
                for second in &sets[i + 1..] {
                    let second = second.items();
                    // entries are sorted, so equal (k-1)-prefixes are contiguous
                    if first[..first.len() - 1] != second[..second.len() - 1] {
                        break;
                    }
                    let mut joined = first.to_vec();
                    joined.push(second[second.len() - 1]);
                    if survives_prune(&joined, frequent) {
                        store.insert(Itemset::from_sorted(joined))?;
                    }
                }
            }
        }
        StoreKind::Trie => trie_join::<SortedChildren>(frequent, &mut store)?,
        StoreKind::HashTableTrie => trie_join::<DirectTable>(frequent, &mut store)?,
    }
    Ok(store)
}

/// Join via sibling pairs of a prefix trie built over the frequent level.
fn trie_join<I: ChildIndex>(frequent: &FrequentLevel, out: &mut CandidateStore) -> Result<()> {
    let mut source: TrieStore<I> = TrieStore::new(frequent.k());
    for itemset in frequent.itemsets() {
        source.insert(itemset.clone())?;
    }
    let mut failed = None;
    source.for_each_leaf_parent(|prefix, siblings| {
        for (i, &first) in siblings.iter().enumerate() {
            for &second in &siblings[i + 1..] {
                let mut joined = Vec::with_capacity(prefix.len() + 2);
                joined.extend_from_slice(prefix);
                joined.push(first);
                joined.push(second);
                if survives_prune(&joined, frequent) {
                    if let Err(e) = out.insert(Itemset::from_sorted(joined)) {
                        failed.get_or_insert(e);
                    }
                }
            }
        }
    });
    match failed {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Apriori property check: every k-subset of the joined itemset must be
/// frequent. The two subsets obtained by dropping one of the last two items
/// are the join parents and are skipped.
fn survives_prune(joined: &[ItemId], frequent: &FrequentLevel) -> bool {
    let mut sub = Vec::with_capacity(joined.len() - 1);
    for dropped in 0..joined.len().saturating_sub(2) {
        sub.clear();
        sub.extend_from_slice(&joined[..dropped]);
        sub.extend_from_slice(&joined[dropped + 1..]);
        if !frequent.contains_items(&sub) {
            return false;
        }
    }
    true
}
