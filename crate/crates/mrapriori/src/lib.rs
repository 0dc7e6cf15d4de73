//! Frequent-itemset mining with Apriori over three interchangeable
//! candidate stores (hash tree, trie, hash table trie), runnable either
//! sequentially or on a local MapReduce-style executor that mirrors the
//! one-job-per-iteration decomposition of the distributed algorithm.

pub mod apriori;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod itemset;
pub mod mapreduce;
pub mod store;

pub use apriori::{brute_force_mine, frequent_one, run_sequential, MiningResult};
pub use error::{Error, Result};
pub use itemset::{
    CountedItemset, FrequentLevel, ItemId, Itemset, SupportThreshold, Transaction,
    TransactionDatabase,
};
pub use store::{
    generate_candidates, hash_slot, CandidateStore, HashTreeParams, OpCounters, StoreKind,
};
