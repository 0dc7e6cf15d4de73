//! Local MapReduce-style execution of Apriori: the database is cut into
//! line splits, mappers count candidates per split in parallel, a combiner
//! compacts each mapper's output, pairs are hash-partitioned to reducers,
//! and reducers apply the support threshold. One job per iteration, driven
//! until a level comes up empty. Output is identical for any worker limit,
//! split size, or reducer count.

use std::collections::BTreeMap;
use std::io::{BufReader, Seek, SeekFrom};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::apriori::MiningResult;
use crate::dataio::{read_frequent_levels, write_frequent_level};
use crate::error::{Error, Result};
use crate::itemset::{
    CountedItemset, FrequentLevel, Itemset, SupportThreshold, Transaction, TransactionDatabase,
};
use crate::store::{generate_candidates, CandidateStore, HashTreeParams, StoreKind};

/// One mapper's share of the database: a contiguous run of transactions.
#[derive(Clone, Copy, Debug)]
pub struct InputSplit<'a> {
    split_id: usize,
    transactions: &'a [Transaction],
}

impl<'a> InputSplit<'a> {
    pub fn split_id(&self) -> usize {
        self.split_id
    }

    pub fn transactions(&self) -> &'a [Transaction] {
        self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }
}

/// An intermediate (itemset, count) pair flowing from mappers to reducers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyValuePair {
    pub key: Itemset,
    pub value: u64,
}

impl KeyValuePair {
    pub fn new(key: Itemset, value: u64) -> Self {
        KeyValuePair { key, value }
    }
}

/// How mappers emit counts for k ≥ 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmitMode {
    /// One pair per candidate with its mapper-local count (equivalent to
    /// per-occurrence emission followed by the combiner).
    #[default]
    PreAggregated,
    /// One (candidate, 1) pair per containment, as the distributed
    /// formulation writes them.
    PerOccurrence,
}

/// Where each mapper's candidate store comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateMode {
    /// Every mapper regenerates C_k from the broadcast level itself.
    #[default]
    PerMapper,
    /// C_k is generated once and shared read-only across mappers.
    Shared,
}

/// How the previous frequent level reaches the mappers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LevelBroadcast {
    /// Passed as an immutable in-memory value.
    #[default]
    InMemory,
    /// Serialized to the frequent-level file format and read back before
    /// mapping, exercising the cache-file path.
    FileRoundTrip,
}

/// Knobs for one job (and, unchanged, for a whole driver run).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JobConfig {
    pub lines_per_split: usize,
    pub num_reducers: usize,
    pub store_kind: StoreKind,
    pub store_params: HashTreeParams,
    /// Maximum number of concurrently running mappers (and reducers).
    pub worker_limit: usize,
    pub emit_mode: EmitMode,
    pub candidate_mode: CandidateMode,
    pub level_broadcast: LevelBroadcast,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            lines_per_split: 5000,
            num_reducers: 4,
            store_kind: StoreKind::HashTree,
            store_params: HashTreeParams::default(),
            worker_limit: std::thread::available_parallelism().map_or(1, |n| n.get()),
            emit_mode: EmitMode::default(),
            candidate_mode: CandidateMode::default(),
            level_broadcast: LevelBroadcast::default(),
        }
    }
}

impl JobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lines_per_split < 1 {
            return Err(Error::InvalidConfig("lines_per_split must be at least 1".into()));
        }
        if self.num_reducers < 1 {
            return Err(Error::InvalidConfig("num_reducers must be at least 1".into()));
        }
        if self.worker_limit < 1 {
            return Err(Error::InvalidConfig("worker_limit must be at least 1".into()));
        }
        self.store_params.validate()
    }
}

/// What one job did: sizes of each pipeline stage plus the wall time.
#[derive(Clone, Debug)]
pub struct JobReport {
    pub iteration: usize,
    pub num_mappers: usize,
    pub mapper_output_pairs: u64,
    pub combiner_output_pairs: u64,
    pub candidates_generated: usize,
    pub frequent_found: usize,
    pub wall_time: Duration,
}

/// Cuts the database into splits of `lines_per_split` transactions; only
/// the last split may be shorter.
pub fn split_input(db: &TransactionDatabase, lines_per_split: usize) -> Vec<InputSplit<'_>> {
    assert!(lines_per_split >= 1, "lines_per_split must be at least 1");
    db.transactions()
        .chunks(lines_per_split)
        .enumerate()
        .map(|(split_id, transactions)| InputSplit { split_id, transactions })
        .collect()
}

/// First-iteration mapper: one ([item], 1) pair per item occurrence, in
/// scan order.
pub fn one_itemset_mapper(split: &InputSplit<'_>) -> Vec<KeyValuePair> {
    let mut pairs = Vec::new();
    for transaction in split.transactions {
        for &item in transaction.items().items() {
            pairs.push(KeyValuePair::new(Itemset::from_sorted(vec![item]), 1));
        }
    }
    pairs
}

/// Later-iteration mapper: regenerates C_k from the broadcast level, counts
/// containments over its split, and emits pairs per the emit mode.
pub fn k_itemset_mapper(
    split: &InputSplit<'_>,
    prior: &FrequentLevel,
    kind: StoreKind,
    params: HashTreeParams,
    emit: EmitMode,
) -> Result<Vec<KeyValuePair>> {
    let store = generate_candidates(prior, kind, params)?;
    Ok(count_split(split, &store, emit))
}

/// Counts one split against a finished candidate store.
fn count_split(split: &InputSplit<'_>, store: &CandidateStore, emit: EmitMode) -> Vec<KeyValuePair> {
    match emit {
        EmitMode::PreAggregated => {
            let mut counts = vec![0u64; store.candidate_count()];
            for transaction in split.transactions {
                store.for_each_contained(transaction.items(), |idx| counts[idx] += 1);
            }
            let mut pairs: Vec<KeyValuePair> = counts
                .into_iter()
                .enumerate()
                .filter(|&(_, count)| count > 0)
                .map(|(idx, count)| KeyValuePair::new(store.candidate(idx).clone(), count))
                .collect();
            pairs.sort_unstable_by(|a, b| a.key.cmp(&b.key));
            pairs
        }
        EmitMode::PerOccurrence => {
            let mut pairs = Vec::new();
            for transaction in split.transactions {
                store.for_each_contained(transaction.items(), |idx| {
                    pairs.push(KeyValuePair::new(store.candidate(idx).clone(), 1));
                });
            }
            pairs
        }
    }
}

/// Sums values per distinct key; output sorted by key.
pub fn combine(pairs: &[KeyValuePair]) -> Vec<KeyValuePair> {
    let mut sums: BTreeMap<&Itemset, u64> = BTreeMap::new();
    for pair in pairs {
        *sums.entry(&pair.key).or_insert(0) += pair.value;
    }
    sums.into_iter().map(|(key, value)| KeyValuePair::new(key.clone(), value)).collect()
}

/// Stable hash partitioner over the itemset's canonical little-endian byte
/// encoding (FNV-1a), so a key lands on the same reducer in every run.
pub fn partition(key: &Itemset, num_reducers: usize) -> usize {
    assert!(num_reducers >= 1, "num_reducers must be at least 1");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &item in key.items() {
        for byte in item.to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    (hash % num_reducers as u64) as usize
}

/// Threshold filter: the summed count when it reaches `min_count`.
pub fn reduce(key: &Itemset, values: &[u64], min_count: u64) -> Option<CountedItemset> {
    debug_assert!(!values.is_empty());
    let sum: u64 = values.iter().sum();
    (sum >= min_count).then(|| CountedItemset::new(key.clone(), sum))
}

/// Runs `tasks` closures with at most `worker_limit` in flight; results
/// come back indexed by task, so scheduling order never shows in the
/// output.
fn run_parallel<T, F>(tasks: usize, worker_limit: usize, run: F) -> Vec<T>
where
    T: Send + Sync,
    F: Fn(usize) -> T + Sync,
{
    if tasks == 0 {
        return Vec::new();
    }
    let slots: Vec<OnceLock<T>> = std::iter::repeat_with(OnceLock::new).take(tasks).collect();
    let next = AtomicUsize::new(0);
    let workers = worker_limit.max(1).min(tasks);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let task = next.fetch_add(1, Ordering::Relaxed);
                if task >= tasks {
                    break;
                }
                let value = run(task);
                slots[task].set(value).map_err(|_| "slot filled twice").unwrap();
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("every slot filled"))
        .collect()
}

/// Serializes a level through the frequent-level file format and reads it
/// back, standing in for the distributed cache distribution.
fn broadcast_via_file(level: &FrequentLevel, db_size: u64) -> Result<FrequentLevel> {
    let mut file = tempfile::tempfile()?;
    write_frequent_level(level, db_size, &mut file)?;
    file.seek(SeekFrom::Start(0))?;
    let mut levels = read_frequent_levels(BufReader::new(file))?;
    match levels.pop() {
        Some(read_back) if levels.is_empty() && read_back.k() == level.k() => Ok(read_back),
        _ => Err(Error::InvalidInput("broadcast file did not round-trip to one level".into())),
    }
}

/// One full map → combine → shuffle → reduce pass. `prior` is `None` for
/// the first iteration (single-item counting) and L_{k−1} afterwards. All
/// mappers finish before any reducer input is assembled.
pub fn run_job(
    db: &TransactionDatabase,
    prior: Option<&FrequentLevel>,
    config: &JobConfig,
    min_count: u64,
) -> Result<(FrequentLevel, JobReport)> {
    config.validate()?;
    let started = Instant::now();
    let k = prior.map_or(1, |level| level.k() + 1);
    let splits = split_input(db, config.lines_per_split);

    let broadcast: Option<FrequentLevel> = match (prior, config.level_broadcast) {
        (Some(level), LevelBroadcast::FileRoundTrip) if !level.is_empty() => {
            Some(broadcast_via_file(level, db.num_transactions() as u64)?)
        }
        (Some(level), _) => Some(level.clone()),
        (None, _) => None,
    };

    let shared_store: Option<CandidateStore> = match (&broadcast, config.candidate_mode) {
        (Some(level), CandidateMode::Shared) => {
            Some(generate_candidates(level, config.store_kind, config.store_params)?)
        }
        _ => None,
    };

    let map_outputs: Vec<Result<Vec<KeyValuePair>>> =
        run_parallel(splits.len(), config.worker_limit, |task| {
            let split = &splits[task];
            match &broadcast {
                None => Ok(one_itemset_mapper(split)),
                Some(level) => match &shared_store {
                    Some(store) => Ok(count_split(split, store, config.emit_mode)),
                    None => k_itemset_mapper(
                        split,
                        level,
                        config.store_kind,
                        config.store_params,
                        config.emit_mode,
                    ),
                },
            }
        });

    let mut mapper_output_pairs = 0u64;
    let mut combined_per_mapper = Vec::with_capacity(map_outputs.len());
    for (split_id, outcome) in map_outputs.into_iter().enumerate() {
        match outcome {
            Ok(pairs) => {
                mapper_output_pairs += pairs.len() as u64;
                combined_per_mapper.push(combine(&pairs));
            }
            Err(source) => {
                return Err(Error::SplitFailed { split_id, source: Box::new(source) });
            }
        }
    }
    let combiner_output_pairs: u64 = combined_per_mapper.iter().map(|p| p.len() as u64).sum();

    let mut reducer_inputs: Vec<BTreeMap<Itemset, Vec<u64>>> =
        (0..config.num_reducers).map(|_| BTreeMap::new()).collect();
    for pairs in combined_per_mapper {
        for pair in pairs {
            let target = partition(&pair.key, config.num_reducers);
            reducer_inputs[target].entry(pair.key).or_default().push(pair.value);
        }
    }
    let distinct_keys: usize = reducer_inputs.iter().map(BTreeMap::len).sum();

    let reduced: Vec<Vec<CountedItemset>> =
        run_parallel(reducer_inputs.len(), config.worker_limit, |task| {
            reducer_inputs[task]
                .iter()
                .filter_map(|(key, values)| reduce(key, values, min_count))
                .collect()
        });

    let level = FrequentLevel::new(k, reduced.into_iter().flatten().collect());

    let candidates_generated = match (&broadcast, &shared_store) {
        (None, _) => distinct_keys,
        (Some(_), Some(store)) => store.candidate_count(),
        (Some(prior_level), None) => {
            generate_candidates(prior_level, config.store_kind, config.store_params)?
                .candidate_count()
        }
    };

    let report = JobReport {
        iteration: k,
        num_mappers: splits.len(),
        mapper_output_pairs,
        combiner_output_pairs,
        candidates_generated,
        frequent_found: level.len(),
        wall_time: started.elapsed(),
    };
    Ok((level, report))
}

/// Drives the full mining run: the single-item job once, then one job per
/// further iteration until a level comes up empty. Returns the result plus
/// one report per iteration.
pub fn run_driver(
    db: &TransactionDatabase,
    threshold: SupportThreshold,
    config: &JobConfig,
) -> Result<(MiningResult, Vec<JobReport>)> {
    let min_count = threshold.resolve(db)?;
    let mut reports = Vec::new();
    let (mut current, first) = run_job(db, None, config, min_count)?;
    reports.push(first);
    let mut levels = Vec::new();
    while !current.is_empty() {
        levels.push(current);
        let prior = levels.last().expect("just pushed");
        let (next, report) = run_job(db, Some(prior), config, min_count)?;
        reports.push(report);
        current = next;
    }
    let iterations = reports.len();
    Ok((MiningResult { levels, threshold, iterations }, reports))
}
