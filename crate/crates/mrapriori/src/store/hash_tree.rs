//! Hash-tree candidate store: inner nodes are fixed-width hash tables over
//! item ids, leaves hold lists of candidates. A leaf above the configured
//! size limit splits into an inner node as long as it sits shallower than
//! depth k; leaves at depth k may grow without bound.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::itemset::{CountedItemset, ItemId, Itemset};

use super::{HashTreeParams, OpCounters};

/// Slot of `item` in a hash table of width `child_max_size`.
pub fn hash_slot(item: ItemId, child_max_size: u32) -> u32 {
    item % child_max_size
}

#[derive(Clone, Debug)]
enum Node {
    Inner { slots: Vec<Option<u32>> },
    Leaf { entries: Vec<u32> },
}

/// Hash tree over candidate k-itemsets with one support counter per
/// candidate. Nodes live in an arena; index 0 is the root, which is always
/// a hash table, so a candidate reaches its leaf after 1 to k hash steps.
#[derive(Clone, Debug)]
pub struct HashTree {
    nodes: Vec<Node>,
    candidates: Vec<Itemset>,
    counts: Vec<u64>,
    k: usize,
    child_max_size: u32,
    leaf_max_size: Option<u32>,
}

impl HashTree {
    pub fn new(k: usize, params: HashTreeParams) -> Self {
        assert!(k >= 1, "hash tree requires k >= 1");
        assert!(params.child_max_size >= 2, "child_max_size must be >= 2");
        HashTree {
            nodes: vec![Node::Inner { slots: vec![None; params.child_max_size as usize] }],
            candidates: Vec::new(),
            counts: Vec::new(),
            k,
            child_max_size: params.child_max_size,
            leaf_max_size: params.leaf_max_size,
        }
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

    /// Largest number of occupied slots under any inner node.
    pub fn max_child_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|node| match node {
                Node::Inner { slots } => slots.iter().filter(|s| s.is_some()).count(),
                Node::Leaf { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Depth and entry count of every leaf, root at depth 0.
    pub fn leaf_profile(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            match &self.nodes[node] {
                Node::Inner { slots } => {
                    for child in slots.iter().flatten() {
                        stack.push((*child as usize, depth + 1));
                    }
                }
                Node::Leaf { entries } => out.push((depth, entries.len())),
            }
        }
        out
    }

    pub fn insert(&mut self, candidate: Itemset) -> Result<()> {
        if candidate.len() != self.k {
            let actual = candidate.len();
            return Err(Error::LengthMismatch { candidate, expected: self.k, actual });
        }
        let width = self.child_max_size;
        let mut node = 0usize;
        let mut depth = 0usize;
        loop {
            let next_index = self.nodes.len() as u32;
            let mut fresh_leaf = false;
            match &mut self.nodes[node] {
                Node::Inner { slots } => {
                    let slot = hash_slot(candidate.items()[depth], width) as usize;
                    match slots[slot] {
                        Some(child) => node = child as usize,
                        None => {
                            slots[slot] = Some(next_index);
                            node = next_index as usize;
                            fresh_leaf = true;
                        }
                    }
                    depth += 1;
                }
                Node::Leaf { entries } => {
                    if entries.iter().any(|&e| self.candidates[e as usize] == candidate) {
                        return Err(Error::DuplicateCandidate(candidate));
                    }
                    entries.push(self.candidates.len() as u32);
                    break;
                }
            }
            if fresh_leaf {
                self.nodes.push(Node::Leaf { entries: Vec::new() });
            }
        }
        self.candidates.push(candidate);
        self.counts.push(0);
        self.split_overflowing(node, depth);
        Ok(())
    }

    /// Splits the leaf at `node` (depth `depth`) while it exceeds the leaf
    /// limit and still has an unhashed item position left, redistributing
    /// entries by their next item. Freshly created leaves are re-checked.
    fn split_overflowing(&mut self, node: usize, depth: usize) {
        let Some(max) = self.leaf_max_size else { return };
        let width = self.child_max_size as usize;
        let mut work = vec![(node, depth)];
        while let Some((node, depth)) = work.pop() {
            if depth >= self.k {
                continue;
            }
            let entries = match &mut self.nodes[node] {
                Node::Leaf { entries } if entries.len() > max as usize => std::mem::take(entries),
                _ => continue,
            };
            let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); width];
            for entry in entries {
                let item = self.candidates[entry as usize].items()[depth];
                buckets[hash_slot(item, self.child_max_size) as usize].push(entry);
            }
            let mut slots = vec![None; width];
            for (slot, bucket) in buckets.into_iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                let child = self.nodes.len() as u32;
                self.nodes.push(Node::Leaf { entries: bucket });
                slots[slot] = Some(child);
                work.push((child as usize, depth + 1));
            }
            self.nodes[node] = Node::Inner { slots };
        }
    }

    pub fn increment_subsets(&mut self, transaction: &Itemset) -> OpCounters {
        let mut counters = OpCounters::default();
        let mut visited = HashSet::new();
        let counts = &mut self.counts;
        walk(
            &self.nodes,
            &self.candidates,
            self.child_max_size,
            0,
            transaction.items(),
            0,
            &mut visited,
            &mut |idx| counts[idx] += 1,
            &mut counters,
        );
        counters
    }

    pub fn for_each_contained(&self, transaction: &Itemset, sink: &mut impl FnMut(usize)) -> OpCounters {
        let mut counters = OpCounters::default();
        let mut visited = HashSet::new();
        walk(
            &self.nodes,
            &self.candidates,
            self.child_max_size,
            0,
            transaction.items(),
            0,
            &mut visited,
            sink,
            &mut counters,
        );
        counters
    }

    pub fn counted_itemsets(&self) -> Vec<CountedItemset> {
        self.candidates
            .iter()
            .zip(&self.counts)
            .map(|(itemset, &support)| CountedItemset { itemset: itemset.clone(), support })
            .collect()
    }
}

/// Containment walk. Inner nodes hash every remaining transaction item to
/// pick branches; since different items can land on the same child, one
/// leaf can be reached along several paths, so leaves are processed only on
/// first arrival and each entry is verified with an explicit subset test.
#[allow(clippy::too_many_arguments)]
fn walk(
    nodes: &[Node],
    candidates: &[Itemset],
    child_max_size: u32,
    node: usize,
    transaction: &[ItemId],
    from: usize,
    visited: &mut HashSet<usize>,
    sink: &mut impl FnMut(usize),
    counters: &mut OpCounters,
) {
    counters.nodes_visited += 1;
    match &nodes[node] {
        Node::Inner { slots } => {
            for i in from..transaction.len() {
                counters.hash_probes += 1;
                if let Some(child) = slots[hash_slot(transaction[i], child_max_size) as usize] {
                    walk(
                        nodes,
                        candidates,
                        child_max_size,
                        child as usize,
                        transaction,
                        i + 1,
                        visited,
                        sink,
                        counters,
                    );
                }
            }
        }
        Node::Leaf { entries } => {
            if !visited.insert(node) {
                return;
            }
            for &entry in entries {
                if is_subset_counting(candidates[entry as usize].items(), transaction, counters) {
                    sink(entry as usize);
                }
            }
        }
    }
}

/// Merge-scan subset test over two sorted slices, charging one label
/// comparison per transaction item examined.
fn is_subset_counting(candidate: &[ItemId], transaction: &[ItemId], counters: &mut OpCounters) -> bool {
    let mut pos = 0;
    'candidate: for &wanted in candidate {
        while pos < transaction.len() {
            counters.label_comparisons += 1;
            let present = transaction[pos];
            pos += 1;
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
