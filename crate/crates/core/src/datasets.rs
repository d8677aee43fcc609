//! File formats for corpora, category trees and labeled datasets.
//!
//! * corpus: `sentence<TAB>tag, tag, ...` per line
//! * category tree: `class: tag, tag, ...` per line
//! * labeled TSV: `sentence<TAB>class` per line
//! * UCI News Aggregator: tab- or comma-separated, title in column 2 and the
//!   one-letter category code in column 5, optional `ID,TITLE,...` header
//!
//! All inputs are UTF-8; `\r\n` line endings are accepted.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inference::CategoryTree;
use crate::training::{Corpus, Record};

/// The category tree used for the UCI News Aggregator dataset.
pub const NEWS_AGGREGATOR_TREE: &str = include_str!("../fixtures/news_aggregator.tree");
/// The category tree used for the tweet classification dataset.
pub const TWEET_TREE: &str = include_str!("../fixtures/tweets.tree");

pub fn news_aggregator_tree() -> CategoryTree {
    parse_category_tree(NEWS_AGGREGATOR_TREE.as_bytes()).expect("bundled tree parses")
}

pub fn tweet_tree() -> CategoryTree {
    parse_category_tree(TWEET_TREE.as_bytes()).expect("bundled tree parses")
}

fn lines<R: BufRead>(source: R) -> impl Iterator<Item = Result<(usize, String)>> {
    source.lines().enumerate().map(|(i, line)| {
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        Ok((i + 1, line))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusStats {
    /// Lines whose tag list was empty after trimming.
    pub dropped_no_tags: usize,
    /// Lines whose sentence had no tokens.
    pub dropped_empty_sentence: usize,
}

pub fn parse_corpus<R: BufRead>(source: R) -> Result<(Corpus, CorpusStats)> {
    let mut records = Vec::new();
    let mut stats = CorpusStats::default();
    for line in lines(source) {
        let (lineno, line) = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (sentence, tags) = line
            .split_once('\t')
            .ok_or_else(|| Error::MalformedRecord {
                line: lineno,
                reason: "missing tab between sentence and tags".into(),
            })?;
        let tags: Vec<&str> = tags.split(',').collect();
        let record = Record::new(sentence.trim(), &tags);
        if record.tags.is_empty() {
            stats.dropped_no_tags += 1;
        } else if record.tokens.is_empty() {
            stats.dropped_empty_sentence += 1;
        } else {
            records.push(record);
        }
    }
    Ok((Corpus::new(records)?, stats))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut sink: W) -> Result<()> {
    for r in corpus.records() {
        writeln!(sink, "{}\t{}", r.text, r.tags.join(", "))?;
    }
    Ok(())
}

pub fn parse_category_tree<R: BufRead>(source: R) -> Result<CategoryTree> {
    let mut classes: Vec<(String, Vec<String>)> = Vec::new();
    for line in lines(source) {
        let (lineno, line) = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (class, tags) = line
            .split_once(':')
            .ok_or(Error::MalformedTreeLine { line: lineno })?;
        let class = class.trim().to_lowercase();
        if class.is_empty() {
            return Err(Error::MalformedTreeLine { line: lineno });
        }
        if classes.iter().any(|(c, _)| *c == class) {
            return Err(Error::DuplicateClass(class));
        }
        let tags: Vec<String> = tags
            .split(',')
            .map(|t| t.trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        if tags.is_empty() {
            return Err(Error::EmptyTagList {
                line: lineno,
                class,
            });
        }
        classes.push((class, tags));
    }
    CategoryTree::new(classes)
}

pub fn write_category_tree<W: Write>(tree: &CategoryTree, mut sink: W) -> Result<()> {
    for (class, tags) in tree.classes() {
        writeln!(sink, "{class}: {}", tags.join(", "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    CsvUci,
    TsvGeneric,
}

/// Sentences with a gold class each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    items: Vec<(String, String)>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(String, String)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        if items.iter().any(|(_, c)| c.is_empty()) {
            return Err(Error::InvalidArgument(
                "class names must be nonempty".into(),
            ));
        }
        Ok(LabeledDataset { items })
    }

    pub fn items(&self) -> &[(String, String)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Maps the UCI one-letter category codes to class names.
pub fn uci_category(code: &str) -> Option<&'static str> {
    match code.trim() {
        "b" => Some("business"),
        "t" => Some("technology"),
        "e" => Some("entertainment"),
        "m" => Some("medicine"),
        _ => None,
    }
}

pub fn parse_labeled_dataset<R: BufRead>(
    source: R,
    format: DatasetFormat,
) -> Result<LabeledDataset> {
    match format {
        DatasetFormat::TsvGeneric => parse_tsv(source),
        DatasetFormat::CsvUci => parse_uci(source),
    }
}

fn parse_tsv<R: BufRead>(source: R) -> Result<LabeledDataset> {
    let mut items = Vec::new();
    for line in lines(source) {
        let (lineno, line) = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: &str| Error::MalformedRecord {
            line: lineno,
            reason: reason.into(),
        };
        let (text, class) = line
            .rsplit_once('\t')
            .ok_or_else(|| malformed("missing tab before class"))?;
        let class = class.trim().to_lowercase();
        if class.is_empty() {
            return Err(malformed("empty class"));
        }
        items.push((text.trim().to_string(), class));
    }
    LabeledDataset::new(items)
}

fn parse_uci<R: BufRead>(mut source: R) -> Result<LabeledDataset> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let first_line = text.lines().next().unwrap_or("");
    let delimiter = if first_line.contains('\t') {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .quoting(delimiter == b',')
        .from_reader(text.as_bytes());

    let mut items = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| Error::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if i == 0
            && row
                .get(0)
                .is_some_and(|f| f.trim().eq_ignore_ascii_case("id"))
        {
            continue;
        }
        if row.len() < 5 {
            return Err(Error::MalformedRecord {
                line,
                reason: format!("expected at least 5 columns, found {}", row.len()),
            });
        }
        let code = row[4].trim();
        let class = uci_category(code).ok_or_else(|| Error::UnknownCategoryCode {
            line,
            code: code.to_string(),
        })?;
        items.push((row[1].trim().to_string(), class.to_string()));
    }
    LabeledDataset::new(items)
}

/// A train/test partition of a corpus.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub test: Corpus,
    /// Tags that occur in the test side only.
    pub test_only_tags: BTreeSet<String>,
}

/// Position of `text` in `[0, 1)` under the seeded hash.
fn split_point(text: &str, seed: u64) -> f64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(text.as_bytes())
        .finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(head) >> 11) as f64 / (1u64 << 53) as f64
}

/// Sends each record to the test side when its sentence hashes below
/// `test_fraction`. Identical sentences always land on the same side.
pub fn split_corpus(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<CorpusSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let (test, train): (Vec<Record>, Vec<Record>) = corpus
        .records()
        .iter()
        .cloned()
        .partition(|r| split_point(&r.text, seed) < test_fraction);
    if train.is_empty() {
        return Err(Error::DegenerateSplit("train"));
    }
    if test.is_empty() {
        return Err(Error::DegenerateSplit("test"));
    }
    let train = Corpus::new(train)?;
    let test = Corpus::new(test)?;
    let test_only_tags = test
        .tag_vocabulary()
        .iter()
        .filter(|t| train.tag_vocabulary().binary_search(t).is_err())
        .cloned()
        .collect();
    Ok(CorpusSplit {
        train,
        test,
        test_only_tags,
    })
}
