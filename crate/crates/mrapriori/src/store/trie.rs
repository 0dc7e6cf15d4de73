//! Prefix-trie candidate stores. Each root-to-depth-k path spells one
//! candidate in ascending item order; the child lookup policy is pluggable
//! so the plain trie (sorted list, linear search) and the hash table trie
//! (direct-addressed table per node) share one implementation.

use crate::error::{Error, Result};
use crate::itemset::{CountedItemset, ItemId, Itemset};

use super::OpCounters;

/// Per-node child lookup policy.
pub trait ChildIndex: Clone + std::fmt::Debug + Default {
    /// Node index of the child labeled `label`, recording lookup cost.
    fn find(&self, label: ItemId, counters: &mut OpCounters) -> Option<u32>;

    /// Registers a child; `label` must not already be present.
    fn link(&mut self, label: ItemId, node: u32);

    /// Children in ascending label order.
    fn children(&self) -> impl Iterator<Item = (ItemId, u32)> + '_;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Children in a sorted vector, searched linearly. One label comparison is
/// charged per entry examined; the scan stops early once labels exceed the
/// target.
#[derive(Clone, Debug, Default)]
pub struct SortedChildren {
    entries: Vec<(ItemId, u32)>,
}

impl ChildIndex for SortedChildren {
    fn find(&self, label: ItemId, counters: &mut OpCounters) -> Option<u32> {
        for &(child_label, node) in &self.entries {
            counters.label_comparisons += 1;
            if child_label == label {
                return Some(node);
            }
            if child_label > label {
                return None;
            }
        }
        None
    }

    fn link(&mut self, label: ItemId, node: u32) {
        match self.entries.binary_search_by_key(&label, |e| e.0) {
            Ok(_) => unreachable!("child {label} linked twice"),
            Err(pos) => self.entries.insert(pos, (label, node)),
        }
    }

    fn children(&self) -> impl Iterator<Item = (ItemId, u32)> + '_ {
        self.entries.iter().copied()
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Children in a direct-addressed table indexed by item id minus the
/// smallest linked label. Lookup is one probe and no label comparisons;
/// every item id maps to its own slot, so probes never collide.
#[derive(Clone, Debug, Default)]
pub struct DirectTable {
    base: ItemId,
    slots: Vec<Option<u32>>,
}

impl ChildIndex for DirectTable {
    fn find(&self, label: ItemId, counters: &mut OpCounters) -> Option<u32> {
        counters.hash_probes += 1;
        if label < self.base {
            return None;
        }
        self.slots.get((label - self.base) as usize).copied().flatten()
    }

    fn link(&mut self, label: ItemId, node: u32) {
        if self.slots.is_empty() {
            self.base = label;
            self.slots.push(Some(node));
            return;
        }
        if label < self.base {
            let pad = (self.base - label) as usize;
            let mut grown = vec![None; pad + self.slots.len()];
            grown[pad..].copy_from_slice(&self.slots);
            self.slots = grown;
            self.base = label;
        } else {
            let idx = (label - self.base) as usize;
            if idx >= self.slots.len() {
                self.slots.resize(idx + 1, None);
            }
        }
        let idx = (label - self.base) as usize;
        debug_assert!(self.slots[idx].is_none(), "child {label} linked twice");
        self.slots[idx] = Some(node);
    }

    fn children(&self) -> impl Iterator<Item = (ItemId, u32)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(offset, slot)| slot.map(|node| (self.base + offset as ItemId, node)))
    }

    fn len(&self) -> usize {
        self.slots.iter().filter(|slot| slot.is_some()).count()
    }
}

#[derive(Clone, Debug)]
struct TrieNode<I> {
    children: I,
    /// Insertion-order candidate index, set on depth-k nodes only.
    candidate: Option<u32>,
}

impl<I: Default> Default for TrieNode<I> {
    fn default() -> Self {
        TrieNode { children: I::default(), candidate: None }
    }
}

/// Prefix trie over candidate k-itemsets with one support counter per
/// candidate. Nodes live in an arena; index 0 is the root.
#[derive(Clone, Debug)]
pub struct TrieStore<I: ChildIndex> {
    nodes: Vec<TrieNode<I>>,
    candidates: Vec<Itemset>,
    counts: Vec<u64>,
    k: usize,
}

impl<I: ChildIndex> TrieStore<I> {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "trie requires k >= 1");
        TrieStore { nodes: vec![TrieNode::default()], candidates: Vec::new(), counts: Vec::new(), k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn candidate(&self, idx: usize) -> &Itemset {
        &self.candidates[idx]
    }

    pub fn max_child_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    pub fn insert(&mut self, candidate: Itemset) -> Result<()> {
        if candidate.len() != self.k {
            let actual = candidate.len();
            return Err(Error::LengthMismatch { candidate, expected: self.k, actual });
        }
        let mut node = 0usize;
        for &item in candidate.items() {
            let mut scratch = OpCounters::default();
            node = match self.nodes[node].children.find(item, &mut scratch) {
                Some(child) => child as usize,
                None => {
                    let child = self.nodes.len() as u32;
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.link(item, child);
                    child as usize
                }
            };
        }
        if self.nodes[node].candidate.is_some() {
            return Err(Error::DuplicateCandidate(candidate));
        }
        self.nodes[node].candidate = Some(self.candidates.len() as u32);
        self.candidates.push(candidate);
        self.counts.push(0);
        Ok(())
    }

    pub fn increment_subsets(&mut self, transaction: &Itemset) -> OpCounters {
        let mut counters = OpCounters::default();
        let counts = &mut self.counts;
        walk(&self.nodes, 0, transaction.items(), 0, &mut |idx| counts[idx] += 1, &mut counters);
        counters
    }

    pub fn for_each_contained(&self, transaction: &Itemset, sink: &mut impl FnMut(usize)) -> OpCounters {
        let mut counters = OpCounters::default();
        walk(&self.nodes, 0, transaction.items(), 0, sink, &mut counters);
        counters
    }

    pub fn counted_itemsets(&self) -> Vec<CountedItemset> {
        self.candidates
            .iter()
            .zip(&self.counts)
            .map(|(itemset, &support)| CountedItemset { itemset: itemset.clone(), support })
            .collect()
    }

    /// Visits every depth k-1 node: the path leading to it and its child
    /// labels in ascending order. Ordered pairs of those labels are exactly
    /// the joinable pairs of stored itemsets.
    pub fn for_each_leaf_parent(&self, mut f: impl FnMut(&[ItemId], &[ItemId])) {
        let mut path = Vec::with_capacity(self.k.saturating_sub(1));
        self.leaf_parent_walk(0, 0, &mut path, &mut f);
    }

    fn leaf_parent_walk(
        &self,
        node: usize,
        depth: usize,
        path: &mut Vec<ItemId>,
        f: &mut impl FnMut(&[ItemId], &[ItemId]),
    ) {
        if depth + 1 == self.k {
            let labels: Vec<ItemId> = self.nodes[node].children.children().map(|(label, _)| label).collect();
            if !labels.is_empty() {
                f(path, &labels);
            }
            return;
        }
        for (label, child) in self.nodes[node].children.children() {
            path.push(label);
            self.leaf_parent_walk(child as usize, depth + 1, path, f);
            path.pop();
        }
    }
}

/// Depth-first containment walk. At a candidate node the stored itemset is
/// a subset of the transaction by construction of the path; otherwise every
/// remaining transaction item is tried as the next branch.
fn walk<I: ChildIndex>(
    nodes: &[TrieNode<I>],
    node: usize,
    transaction: &[ItemId],
    from: usize,
    sink: &mut impl FnMut(usize),
    counters: &mut OpCounters,
) {
    counters.nodes_visited += 1;
    if let Some(idx) = nodes[node].candidate {
        sink(idx as usize);
        return;
    }
    for i in from..transaction.len() {
        if let Some(child) = nodes[node].children.find(transaction[i], counters) {
            walk(nodes, child as usize, transaction, i + 1, sink, counters);
        }
    }
}
