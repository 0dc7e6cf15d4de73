//! Transaction and result file I/O plus a seeded synthetic dataset
//! generator. Transaction files are FIMI-style: whitespace-separated
//! integer item ids, one transaction per non-empty line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::apriori::MiningResult;
use crate::error::{Error, Result};
use crate::itemset::{CountedItemset, FrequentLevel, ItemId, Itemset, TransactionDatabase};

/// Bijective token-to-id mapping, ids dense from 0 in first-appearance
/// order.
#[derive(Clone, Debug, Default)]
pub struct TokenDictionary {
    ids: HashMap<String, ItemId>,
    tokens: Vec<String>,
}

impl TokenDictionary {
    pub fn new() -> Self {
        TokenDictionary::default()
    }

    /// Id for `token`, assigning the next free id on first sight.
    pub fn intern(&mut self, token: &str) -> ItemId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as ItemId;
        self.ids.insert(token.to_owned(), id);
        self.tokens.push(token.to_owned());
        id
    }

    pub fn id(&self, token: &str) -> Option<ItemId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: ItemId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// How item fields in a transaction file are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemEncoding {
    /// Fields are non-negative integers used as item ids directly.
    Integer,
    /// Fields are arbitrary tokens, mapped to dense ids in
    /// first-appearance order.
    Token,
}

/// Reads a transaction database, one transaction per non-empty line.
/// Items are deduped and sorted per line; CRLF endings are accepted. The
/// dictionary is returned for token mode only.
pub fn read_transactions(
    source: impl BufRead,
    encoding: ItemEncoding,
) -> Result<(TransactionDatabase, Option<TokenDictionary>)> {
    let mut dictionary = match encoding {
        ItemEncoding::Integer => None,
        ItemEncoding::Token => Some(TokenDictionary::new()),
    };
    let mut itemsets = Vec::new();
    for (index, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut items = Vec::new();
        for field in line.split_whitespace() {
            let id = match &mut dictionary {
                Some(dictionary) => dictionary.intern(field),
                None => field.parse::<ItemId>().map_err(|e| Error::Parse {
                    line: index + 1,
                    message: format!("invalid item {field:?}: {e}"),
                })?,
            };
            items.push(id);
        }
        itemsets.push(Itemset::from_unsorted(items));
    }
    Ok((TransactionDatabase::from_itemsets(itemsets), dictionary))
}

/// Writes a database in the integer transaction format, LF line endings.
/// Empty transactions are not representable in this format.
pub fn write_transactions(db: &TransactionDatabase, mut sink: impl Write) -> Result<()> {
    for transaction in db.transactions() {
        writeln!(sink, "{}", transaction.items())?;
    }
    Ok(())
}

/// Relative support with 6 decimal places, rounded half to even, computed
/// exactly in integers.
pub fn format_relative(support: u64, db_size: u64) -> String {
    debug_assert!(db_size > 0);
    let scaled = support as u128 * 1_000_000;
    let db = db_size as u128;
    let mut quotient = scaled / db;
    let remainder = scaled % db;
    let twice = remainder * 2;
    if twice > db || (twice == db && quotient % 2 == 1) {
        quotient += 1;
    }
    format!("{}.{:06}", quotient / 1_000_000, quotient % 1_000_000)
}

/// Writes one frequent level: per itemset a line of space-separated ids, a
/// tab, the absolute support, a tab, the relative support to 6 decimals.
pub fn write_frequent_level(level: &FrequentLevel, db_size: u64, mut sink: impl Write) -> Result<()> {
    for entry in level.entries() {
        writeln!(
            sink,
            "{}\t{}\t{}",
            entry.itemset,
            entry.support,
            format_relative(entry.support, db_size)
        )?;
    }
    Ok(())
}

/// Writes every level of a mining result in the frequent-level format,
/// levels ascending, itemsets in canonical order within each level.
pub fn write_frequent(result: &MiningResult, db_size: u64, mut sink: impl Write) -> Result<()> {
    for level in &result.levels {
        write_frequent_level(level, db_size, &mut sink)?;
    }
    Ok(())
}

/// Reads frequent-level lines back, grouping itemsets by length into
/// ascending levels. The relative-support column is checked for shape but
/// its value is ignored (it is derived data).
pub fn read_frequent_levels(source: impl BufRead) -> Result<Vec<FrequentLevel>> {
    let mut grouped: BTreeMap<usize, Vec<CountedItemset>> = BTreeMap::new();
    for (index, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_error = |message: String| Error::Parse { line: index + 1, message };
        let mut fields = line.split('\t');
        let items_field = fields.next().unwrap_or_default();
        let support_field = fields
            .next()
            .ok_or_else(|| parse_error("missing support column".into()))?;
        let relative_field = fields
            .next()
            .ok_or_else(|| parse_error("missing relative support column".into()))?;
        if fields.next().is_some() {
            return Err(parse_error("too many columns".into()));
        }
        if relative_field.parse::<f64>().is_err() {
            return Err(parse_error(format!("invalid relative support {relative_field:?}")));
        }
        let mut items = Vec::new();
        for field in items_field.split_whitespace() {
            items.push(field.parse::<ItemId>().map_err(|e| {
                parse_error(format!("invalid item {field:?}: {e}"))
            })?);
        }
        if items.is_empty() {
            return Err(parse_error("empty itemset".into()));
        }
        let support = support_field
            .parse::<u64>()
            .map_err(|e| parse_error(format!("invalid support {support_field:?}: {e}")))?;
        grouped
            .entry(items.len())
            .or_default()
            .push(CountedItemset::new(Itemset::from_unsorted(items), support));
    }
    Ok(grouped.into_iter().map(|(k, entries)| FrequentLevel::new(k, entries)).collect())
}

/// Settings for the synthetic market-basket generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub num_transactions: usize,
    /// Item universe is 0..num_items.
    pub num_items: usize,
    pub avg_transaction_len: f64,
    pub num_patterns: usize,
    pub avg_pattern_len: f64,
    /// Probability that a transaction embeds one of the patterns.
    pub pattern_prob: f64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(Error::InvalidGenerator(message));
        if self.num_transactions < 1 {
            return fail("num_transactions must be at least 1".into());
        }
        if self.num_items < 1 {
            return fail("num_items must be at least 1".into());
        }
        if self.num_patterns < 1 {
            return fail("num_patterns must be at least 1".into());
        }
        if !self.avg_transaction_len.is_finite() || self.avg_transaction_len <= 0.0 {
            return fail(format!("avg_transaction_len must be positive, got {}", self.avg_transaction_len));
        }
        if !self.avg_pattern_len.is_finite() || self.avg_pattern_len <= 0.0 {
            return fail(format!("avg_pattern_len must be positive, got {}", self.avg_pattern_len));
        }
        if self.avg_transaction_len > self.num_items as f64 {
            return fail(format!(
                "avg_transaction_len {} exceeds num_items {}",
                self.avg_transaction_len, self.num_items
            ));
        }
        if !(0.0..=1.0).contains(&self.pattern_prob) {
            return fail(format!("pattern_prob must be in [0, 1], got {}", self.pattern_prob));
        }
        Ok(())
    }
}

/// Generates a database of market-basket transactions: a pool of random
/// patterns is drawn first, then each transaction embeds one random
/// pattern with probability `pattern_prob` (truncated to the transaction's
/// length draw) and is filled up with uniform noise items. Deterministic
/// for a fixed seed.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<TransactionDatabase> {
    generate_synthetic_with_patterns(config).map(|(db, _)| db)
}

/// Same as [`generate_synthetic`], also returning the pattern pool.
pub fn generate_synthetic_with_patterns(
    config: &GeneratorConfig,
) -> Result<(TransactionDatabase, Vec<Itemset>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let universe = config.num_items as ItemId;

    let pattern_len = Poisson::new(config.avg_pattern_len).expect("validated positive mean");
    let patterns: Vec<Itemset> = (0..config.num_patterns)
        .map(|_| {
            let len = (pattern_len.sample(&mut rng) as usize).clamp(1, config.num_items);
            let mut items = BTreeSet::new();
            while items.len() < len {
                items.insert(rng.random_range(0..universe));
            }
            Itemset::from_sorted(items.into_iter().collect())
        })
        .collect();

    let transaction_len = Poisson::new(config.avg_transaction_len).expect("validated positive mean");
    let itemsets: Vec<Itemset> = (0..config.num_transactions)
        .map(|_| {
            let target = (transaction_len.sample(&mut rng) as usize).clamp(1, config.num_items);
            let mut items = BTreeSet::new();
            if rng.random_bool(config.pattern_prob) {
                let pattern = &patterns[rng.random_range(0..patterns.len())];
                for &item in pattern.iter().take(target) {
                    items.insert(item);
                }
            }
            while items.len() < target {
                items.insert(rng.random_range(0..universe));
            }
            Itemset::from_sorted(items.into_iter().collect())
        })
        .collect();

    Ok((TransactionDatabase::from_itemsets(itemsets), patterns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apriori::run_sequential;
    use crate::itemset::SupportThreshold;
    use crate::store::{HashTreeParams, StoreKind};
    use proptest::prelude::*;
    use std::io::Cursor;

    fn read_integer(text: &str) -> TransactionDatabase {
        read_transactions(Cursor::new(text), ItemEncoding::Integer).unwrap().0
    }

    #[test]
    fn reads_one_transaction_per_line() {
        let db = read_integer("1 2 3\n2 3\n");
        assert_eq!(db.num_transactions(), 2);
        assert_eq!(db.transactions()[0].items().items(), &[1, 2, 3]);
        assert_eq!(db.transactions()[1].items().items(), &[2, 3]);
    }

    #[test]
    fn reading_dedupes_and_sorts() {
        let db = read_integer("3 1 1 2\n");
        assert_eq!(db.transactions()[0].items().items(), &[1, 2, 3]);
    }

    #[test]
    fn reading_accepts_crlf_and_blank_lines() {
        let db = read_integer("1 2\r\n\r\n\n3\r\n");
        assert_eq!(db.num_transactions(), 2);
        assert_eq!(db.transactions()[1].items().items(), &[3]);
    }

    #[test]
    fn reading_reports_line_numbers() {
        let err = read_transactions(Cursor::new("1 2\nx 3\n"), ItemEncoding::Integer).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("\"x\""), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        let negative = read_transactions(Cursor::new("-1\n"), ItemEncoding::Integer).unwrap_err();
        assert!(matches!(negative, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn token_ids_follow_first_appearance() {
        let (db, dictionary) =
            read_transactions(Cursor::new("b a\na\n"), ItemEncoding::Token).unwrap();
        let dictionary = dictionary.unwrap();
        assert_eq!(dictionary.id("b"), Some(0));
        assert_eq!(dictionary.id("a"), Some(1));
        assert_eq!(dictionary.token(0), Some("b"));
        assert_eq!(db.transactions()[0].items().items(), &[0, 1]);
        assert_eq!(db.transactions()[1].items().items(), &[1]);
    }

    #[test]
    fn empty_file_is_an_empty_database() {
        let db = read_integer("");
        assert!(db.is_empty());
    }

    #[test]
    fn relative_support_formatting() {
        assert_eq!(format_relative(3, 3), "1.000000");
        assert_eq!(format_relative(2, 3), "0.666667");
        assert_eq!(format_relative(1, 3), "0.333333");
        assert_eq!(format_relative(1, 128), "0.007812");
        assert_eq!(format_relative(1, 2), "0.500000");
        assert_eq!(format_relative(233, 77512), "0.003006");
        assert_eq!(format_relative(3, 1_000_000), "0.000003");
    }

    #[test]
    fn frequent_file_format() {
        let db = read_integer("1 2\n1 2\n1\n");
        let result = run_sequential(
            &db,
            SupportThreshold::Absolute(2),
            StoreKind::Trie,
            HashTreeParams::default(),
        )
        .unwrap();
        let mut out = Vec::new();
        write_frequent(&result, 3, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "1\t3\t1.000000\n2\t2\t0.666667\n1 2\t2\t0.666667\n"
        );
    }

    #[test]
    fn frequent_file_round_trips() {
        let db = read_integer("1 2\n1 2\n1\n");
        let result = run_sequential(
            &db,
            SupportThreshold::Absolute(2),
            StoreKind::Trie,
            HashTreeParams::default(),
        )
        .unwrap();
        let mut out = Vec::new();
        write_frequent(&result, 3, &mut out).unwrap();
        let levels = read_frequent_levels(Cursor::new(out)).unwrap();
        assert_eq!(levels, result.levels);
    }

    #[test]
    fn frequent_reader_rejects_malformed_lines() {
        for (text, line) in [
            ("1 2\t3\n", 1),
            ("1 2\t3\t0.5\textra\n", 1),
            ("1 2\tthree\t0.5\n", 1),
            ("1\t1\t1.000000\n\t2\t0.5\n", 2),
            ("1 2\t3\tnan?\n", 1),
        ] {
            let err = read_frequent_levels(Cursor::new(text)).unwrap_err();
            match err {
                Error::Parse { line: got, .. } => assert_eq!(got, line, "{text:?}"),
                other => panic!("unexpected error {other:?} for {text:?}"),
            }
        }
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let config = GeneratorConfig {
            seed: 7,
            num_transactions: 100,
            num_items: 30,
            avg_transaction_len: 6.0,
            num_patterns: 4,
            avg_pattern_len: 3.0,
            pattern_prob: 0.5,
        };
        let first = generate_synthetic(&config).unwrap();
        let second = generate_synthetic(&config).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.num_transactions(), 100);

        let other_seed = GeneratorConfig { seed: 8, ..config };
        assert_ne!(generate_synthetic(&other_seed).unwrap(), first);
    }

    #[test]
    fn generator_rejects_bad_configs() {
        let good = GeneratorConfig {
            seed: 1,
            num_transactions: 10,
            num_items: 10,
            avg_transaction_len: 3.0,
            num_patterns: 1,
            avg_pattern_len: 2.0,
            pattern_prob: 0.5,
        };
        let bad = [
            GeneratorConfig { num_transactions: 0, ..good },
            GeneratorConfig { num_items: 0, ..good },
            GeneratorConfig { num_patterns: 0, ..good },
            GeneratorConfig { avg_transaction_len: 0.0, ..good },
            GeneratorConfig { avg_pattern_len: -1.0, ..good },
            GeneratorConfig { avg_transaction_len: 11.0, ..good },
            GeneratorConfig { pattern_prob: 1.5, ..good },
        ];
        for config in bad {
            assert!(matches!(generate_synthetic(&config), Err(Error::InvalidGenerator(_))), "{config:?}");
        }
    }

    #[test]
    fn forced_pattern_lands_in_nearly_every_transaction() {
        let config = GeneratorConfig {
            seed: 42,
            num_transactions: 1000,
            num_items: 50,
            avg_transaction_len: 12.0,
            num_patterns: 1,
            avg_pattern_len: 3.0,
            pattern_prob: 1.0,
        };
        let (db, patterns) = generate_synthetic_with_patterns(&config).unwrap();
        let pattern = &patterns[0];
        let containing = db
            .transactions()
            .iter()
            .filter(|t| pattern.is_subset_of(t.items()))
            .count();
        assert!(containing >= 990, "pattern in only {containing}/1000 transactions");
    }

    fn non_empty_db() -> impl Strategy<Value = TransactionDatabase> {
        prop::collection::vec(prop::collection::vec(0u32..50, 1..=8), 0..=30).prop_map(|rows| {
            TransactionDatabase::from_itemsets(rows.into_iter().map(Itemset::from_unsorted).collect())
        })
    }

    proptest! {
        #[test]
        fn transaction_files_round_trip(db in non_empty_db()) {
            let mut out = Vec::new();
            write_transactions(&db, &mut out).unwrap();
            let (back, _) = read_transactions(Cursor::new(out), ItemEncoding::Integer).unwrap();
            prop_assert_eq!(back, db);
        }

        #[test]
        fn token_round_trip_is_lossless(rows in prop::collection::vec(
            prop::collection::vec("[a-e]{1,2}", 1..=5),
            1..=10,
        )) {
            let text: String = rows.iter().map(|row| row.join(" ") + "\n").collect();
            let (db, dictionary) = read_transactions(Cursor::new(&text), ItemEncoding::Token).unwrap();
            let dictionary = dictionary.unwrap();
            for (row, transaction) in rows.iter().zip(db.transactions()) {
                let expected: std::collections::BTreeSet<&str> =
                    row.iter().map(String::as_str).collect();
                let recovered: std::collections::BTreeSet<&str> = transaction
                    .items()
                    .iter()
                    .map(|&id| dictionary.token(id).unwrap())
                    .collect();
                prop_assert_eq!(recovered, expected);
            }
        }

        #[test]
        fn relative_support_is_close_to_the_float_ratio(support in 0u64..10_000, db_size in 1u64..10_000) {
            let support = support.min(db_size);
            let formatted = format_relative(support, db_size);
            let parsed: f64 = formatted.parse().unwrap();
            let exact = support as f64 / db_size as f64;
            prop_assert!((parsed - exact).abs() <= 5e-7, "{} vs {}", formatted, exact);
        }
    }
}
