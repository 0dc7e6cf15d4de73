//! Command-line interface: mining runs, benchmark sweeps over structures,
//! supports and chunk sizes, speedup tables from benchmark output, and
//! synthetic dataset generation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::apriori::{run_sequential, MiningResult};
use crate::dataio::{
    format_relative, generate_synthetic, read_transactions, write_frequent, write_transactions,
    GeneratorConfig, ItemEncoding,
};
use crate::error::{Error, Result};
use crate::itemset::{SupportThreshold, TransactionDatabase};
use crate::mapreduce::{run_driver, JobConfig, JobReport};
use crate::store::{HashTreeParams, StoreKind};

const BENCH_HEADER: [&str; 9] = [
    "structure",
    "min_support",
    "lines_per_split",
    "num_mappers",
    "num_reducers",
    "iteration",
    "wall_time_ms",
    "candidates",
    "frequent",
];

/// Parses arguments from the process environment and runs the selected
/// command. Exit codes: 0 on success, 1 on runtime failure, 2 on usage
/// errors (via the argument parser).
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mrapriori",
    version,
    about = "Frequent-itemset mining with Apriori over hash tree, trie and hash table trie candidate stores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent itemsets from a transaction file.
    Mine(MineArgs),
    /// Time mining across structures, supports and chunk sizes, as CSV.
    Bench(BenchArgs),
    /// Derive mapper speedups from a benchmark CSV.
    Speedup(SpeedupArgs),
    /// Write a seeded synthetic transaction file.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Single-threaded reference implementation.
    Seq,
    /// Local map/combine/shuffle/reduce pipeline.
    Mr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Tab-separated frequent-itemset lines.
    Fimi,
    /// CSV with items, support and relative support columns.
    Csv,
}

/// Leaf split threshold: a positive number or "unlimited".
#[derive(Clone, Copy, Debug)]
struct LeafLimit(Option<u32>);

impl FromStr for LeafLimit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("unlimited") {
            return Ok(LeafLimit(None));
        }
        match s.parse::<u32>() {
            Ok(0) => Err("leaf size limit must be positive (or \"unlimited\")".into()),
            Ok(n) => Ok(LeafLimit(Some(n))),
            Err(e) => Err(format!("expected a positive number or \"unlimited\": {e}")),
        }
    }
}

#[derive(Clone, Debug, clap::Args)]
struct MineArgs {
    /// Transaction file, integer items, one transaction per line.
    #[arg(long)]
    input: PathBuf,
    /// Where the frequent-itemset file is written.
    #[arg(long)]
    output: PathBuf,
    /// Fraction like 0.003, or an absolute count like count:233.
    #[arg(long)]
    min_support: SupportThreshold,
    /// Candidate structure: hashtree, trie or hashtabletrie.
    #[arg(long)]
    structure: StoreKind,
    #[arg(long, value_enum, default_value_t = Mode::Seq)]
    mode: Mode,
    /// Transactions per mapper split (mr mode).
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    lines_per_split: u64,
    /// Number of reducers (mr mode).
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    reducers: u64,
    /// Maximum concurrent workers (mr mode); defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Hash-table width at hash-tree inner nodes.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(2..))]
    child_max_size: u32,
    /// Hash-tree leaf split threshold, or "unlimited".
    #[arg(long, default_value = "unlimited")]
    leaf_max_size: LeafLimit,
    #[arg(long, value_enum, default_value_t = OutputFormat::Fimi)]
    emit: OutputFormat,
    /// Emit one (candidate, 1) pair per containment instead of
    /// mapper-aggregated counts (mr mode).
    #[arg(long)]
    per_occurrence_emit: bool,
    /// Generate each iteration's candidates once and share them read-only
    /// across mappers instead of regenerating per mapper (mr mode).
    #[arg(long)]
    shared_candidates: bool,
    /// Pass frequent levels between iterations through the file format
    /// instead of in memory (mr mode).
    #[arg(long)]
    cache_file_levels: bool,
}

#[derive(Clone, Debug, clap::Args)]
struct BenchArgs {
    /// Transaction file, integer items, one transaction per line.
    #[arg(long)]
    input: PathBuf,
    /// Benchmark CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated thresholds, e.g. 0.01,0.005.
    #[arg(long, value_delimiter = ',', required = true)]
    min_support: Vec<SupportThreshold>,
    /// Comma-separated structures to sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [StoreKind::HashTree, StoreKind::Trie, StoreKind::HashTableTrie],
    )]
    structure: Vec<StoreKind>,
    /// Comma-separated split sizes to sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [5000u64],
        value_parser = clap::value_parser!(u64).range(1..),
    )]
    lines_per_split: Vec<u64>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    reducers: u64,
    /// Maximum concurrent workers; defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(2..))]
    child_max_size: u32,
    #[arg(long, default_value = "unlimited")]
    leaf_max_size: LeafLimit,
    /// Timed repetitions per configuration; medians are reported.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
}

#[derive(Clone, Debug, clap::Args)]
struct SpeedupArgs {
    /// Benchmark CSV produced by the bench command.
    #[arg(long)]
    input: PathBuf,
    /// Speedup CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug, clap::Args)]
struct GenerateArgs {
    /// Transaction file destination.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    transactions: usize,
    /// Item universe size; ids run from 0 below this.
    #[arg(long, default_value_t = 100)]
    items: usize,
    #[arg(long, default_value_t = 10.0)]
    avg_transaction_len: f64,
    #[arg(long, default_value_t = 10)]
    patterns: usize,
    #[arg(long, default_value_t = 4.0)]
    avg_pattern_len: f64,
    #[arg(long, default_value_t = 0.5)]
    pattern_prob: f64,
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Mine(args) => cmd_mine(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Speedup(args) => cmd_speedup(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn load_database(path: &Path) -> Result<TransactionDatabase> {
    let file = File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let (db, _) = read_transactions(BufReader::new(file), ItemEncoding::Integer)?;
    Ok(db)
}

fn csv_sink(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let raw: Box<dyn Write> = match path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(raw))
}

fn cmd_mine(args: MineArgs) -> Result<()> {
    let db = load_database(&args.input)?;
    let params = HashTreeParams {
        child_max_size: args.child_max_size,
        leaf_max_size: args.leaf_max_size.0,
    };
    let result = match args.mode {
        Mode::Seq => run_sequential(&db, args.min_support, args.structure, params)?,
        Mode::Mr => {
            let mut config = JobConfig {
                lines_per_split: args.lines_per_split as usize,
                num_reducers: args.reducers as usize,
                store_kind: args.structure,
                store_params: params,
                ..JobConfig::default()
            };
            if let Some(workers) = args.workers {
                config.worker_limit = workers as usize;
            }
            if args.per_occurrence_emit {
                config.emit_mode = crate::mapreduce::EmitMode::PerOccurrence;
            }
            if args.shared_candidates {
                config.candidate_mode = crate::mapreduce::CandidateMode::Shared;
            }
            if args.cache_file_levels {
                config.level_broadcast = crate::mapreduce::LevelBroadcast::FileRoundTrip;
            }
            run_driver(&db, args.min_support, &config)?.0
        }
    };
    let db_size = db.num_transactions() as u64;
    let mut sink = BufWriter::new(File::create(&args.output)?);
    match args.emit {
        OutputFormat::Fimi => write_frequent(&result, db_size, &mut sink)?,
        OutputFormat::Csv => write_frequent_csv(&result, db_size, &mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn write_frequent_csv(result: &MiningResult, db_size: u64, sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["items", "support", "relative_support"])?;
    for entry in result.all_entries() {
        writer.write_record([
            entry.itemset.to_string(),
            entry.support.to_string(),
            format_relative(entry.support, db_size),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn median(samples: &mut [f64]) -> f64 {
    debug_assert!(!samples.is_empty());
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

fn wall_ms(report: &JobReport) -> f64 {
    report.wall_time.as_secs_f64() * 1e3
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let db = load_database(&args.input)?;
    let params = HashTreeParams {
        child_max_size: args.child_max_size,
        leaf_max_size: args.leaf_max_size.0,
    };
    let mut writer = csv_sink(args.output.as_deref())?;
    writer.write_record(BENCH_HEADER)?;

    for &kind in &args.structure {
        for &threshold in &args.min_support {
            for &lines_per_split in &args.lines_per_split {
                let mut config = JobConfig {
                    lines_per_split: lines_per_split as usize,
                    num_reducers: args.reducers as usize,
                    store_kind: kind,
                    store_params: params,
                    ..JobConfig::default()
                };
                if let Some(workers) = args.workers {
                    config.worker_limit = workers as usize;
                }

                let mut runs: Vec<Vec<JobReport>> = Vec::with_capacity(args.repetitions as usize);
                let mut reference: Option<MiningResult> = None;
                for _ in 0..args.repetitions {
                    let (result, reports) = run_driver(&db, threshold, &config)?;
                    match &reference {
                        Some(previous) => debug_assert!(previous == &result),
                        None => reference = Some(result),
                    }
                    runs.push(reports);
                }
                let iterations = runs[0].len();

                let shared = [
                    kind.to_string(),
                    threshold.to_string(),
                    lines_per_split.to_string(),
                    runs[0][0].num_mappers.to_string(),
                    args.reducers.to_string(),
                ];
                let mut total_candidates = 0usize;
                let mut total_frequent = 0usize;
                for iteration in 0..iterations {
                    let report = &runs[0][iteration];
                    total_candidates += report.candidates_generated;
                    total_frequent += report.frequent_found;
                    let mut times: Vec<f64> =
                        runs.iter().map(|reports| wall_ms(&reports[iteration])).collect();
                    let mut record = shared.to_vec();
                    record.extend([
                        report.iteration.to_string(),
                        format!("{:.3}", median(&mut times)),
                        report.candidates_generated.to_string(),
                        report.frequent_found.to_string(),
                    ]);
                    writer.write_record(&record)?;
                }
                let mut totals: Vec<f64> = runs
                    .iter()
                    .map(|reports| reports.iter().map(wall_ms).sum::<f64>())
                    .collect();
                let mut record = shared.to_vec();
                record.extend([
                    "total".to_string(),
                    format!("{:.3}", median(&mut totals)),
                    total_candidates.to_string(),
                    total_frequent.to_string(),
                ]);
                writer.write_record(&record)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

fn cmd_speedup(args: SpeedupArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&args.input)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", args.input.display())))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("benchmark CSV lacks a {name:?} column")))
    };
    let structure_at = column("structure")?;
    let support_at = column("min_support")?;
    let mappers_at = column("num_mappers")?;
    let iteration_at = column("iteration")?;
    let wall_at = column("wall_time_ms")?;

    struct TotalRow {
        structure: String,
        min_support: String,
        num_mappers: u64,
        wall_time_ms: f64,
    }
    let mut totals: Vec<TotalRow> = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let field = |at: usize| -> Result<&str> {
            record.get(at).ok_or_else(|| {
                Error::InvalidInput(format!("benchmark CSV row {} is too short", index + 2))
            })
        };
        if field(iteration_at)? != "total" {
            continue;
        }
        let bad_number = |name: &str, value: &str| {
            Error::InvalidInput(format!(
                "benchmark CSV row {}: invalid {name} {value:?}",
                index + 2
            ))
        };
        let num_mappers = field(mappers_at)?
            .parse::<u64>()
            .map_err(|_| bad_number("num_mappers", field(mappers_at).unwrap_or_default()))?;
        let wall_time_ms = field(wall_at)?
            .parse::<f64>()
            .map_err(|_| bad_number("wall_time_ms", field(wall_at).unwrap_or_default()))?;
        if !wall_time_ms.is_finite() || wall_time_ms <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "benchmark CSV row {}: wall_time_ms must be positive to form a speedup",
                index + 2
            )));
        }
        totals.push(TotalRow {
            structure: field(structure_at)?.to_string(),
            min_support: field(support_at)?.to_string(),
            num_mappers,
            wall_time_ms,
        });
    }

    let mut baselines: HashMap<(String, String), f64> = HashMap::new();
    for row in &totals {
        if row.num_mappers == 1 {
            baselines
                .entry((row.structure.clone(), row.min_support.clone()))
                .or_insert(row.wall_time_ms);
        }
    }

    let mut writer = csv_sink(args.output.as_deref())?;
    writer.write_record(["structure", "min_support", "num_mappers", "speedup"])?;
    for row in &totals {
        let baseline = baselines
            .get(&(row.structure.clone(), row.min_support.clone()))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no 1-mapper baseline for structure {} at min_support {}",
                    row.structure, row.min_support
                ))
            })?;
        writer.write_record([
            row.structure.clone(),
            row.min_support.clone(),
            row.num_mappers.to_string(),
            format!("{:.4}", baseline / row.wall_time_ms),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let config = GeneratorConfig {
        seed: args.seed,
        num_transactions: args.transactions,
        num_items: args.items,
        avg_transaction_len: args.avg_transaction_len,
        num_patterns: args.patterns,
        avg_pattern_len: args.avg_pattern_len,
        pattern_prob: args.pattern_prob,
    };
    let db = generate_synthetic(&config)?;
    let mut sink = BufWriter::new(File::create(&args.output)?);
    write_transactions(&db, &mut sink)?;
    sink.flush()?;
    Ok(())
}
