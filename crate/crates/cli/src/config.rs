//! Run configuration: command-line flags layered over an optional
//! `key = value` file, layered over defaults.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use zeroshot::{Architecture, DatasetFormat, EmbeddingFormat, EvalMode, OovPolicy};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Single,
    Multilabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oov {
    Zero,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingsFormat {
    Text,
    Word2vec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Tsv,
    Uci,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// key = value file; flags given on the command line win
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Architecture id: 1 mean+concat, 2 sentence LSTM, 3 tag-conditioned LSTM
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub arch: Option<u32>,
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub embeddings_format: Option<EmbeddingsFormat>,
    /// Expected embedding dimension; checked against the embeddings file
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub tree: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dataset_format: Option<DataFormat>,
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// LSTM hidden size (architectures 2 and 3)
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub target_length: Option<usize>,
    /// Multi-label decision threshold in [0, 1]
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Fraction of the corpus held out for testing during training
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub oov: Option<Oov>,
    /// Also tune the sentence-side word vectors
    #[arg(long)]
    pub fine_tune_embeddings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub arch: Architecture,
    pub embed_dim: Option<usize>,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub target_length: usize,
    pub threshold: f64,
    pub mode: Mode,
    pub test_fraction: f64,
    pub oov: Oov,
    pub fine_tune_embeddings: bool,
    pub embeddings_format: EmbeddingsFormat,
    pub dataset_format: DataFormat,
    pub embeddings: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub tree: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            arch: Architecture::MeanConcat,
            embed_dim: None,
            hidden: zeroshot::model::DEFAULT_HIDDEN_DIM,
            epochs: 10,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
            target_length: zeroshot::DEFAULT_TARGET_LENGTH,
            threshold: zeroshot::inference::DEFAULT_THRESHOLD,
            mode: Mode::Single,
            test_fraction: 0.1,
            oov: Oov::Zero,
            fine_tune_embeddings: false,
            embeddings_format: EmbeddingsFormat::Text,
            dataset_format: DataFormat::Tsv,
            embeddings: None,
            corpus: None,
            tree: None,
            dataset: None,
            checkpoint: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {value:?}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, true)
        .map_err(|_| CliError::Usage(format!("config key {key}: unknown value {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "config key {key}: expected true or false, got {value:?}"
        ))),
    }
}

fn enum_name<T: ValueEnum>(value: &T) -> String {
    value
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", i + 1))
        })?;
        entries.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(entries)
}

impl RunConfig {
    /// Applies config-file entries over the defaults.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        for (key, value) in entries {
            let v = value.as_str();
            match key.as_str() {
                "arch" => {
                    c.arch = Architecture::from_id(parse(key, v)?)
                        .map_err(|e| CliError::Usage(e.to_string()))?
                }
                "embed_dim" => c.embed_dim = Some(parse(key, v)?),
                "hidden" => c.hidden = parse(key, v)?,
                "epochs" => c.epochs = parse(key, v)?,
                "batch_size" => c.batch_size = parse(key, v)?,
                "lr" => c.lr = parse(key, v)?,
                "seed" => c.seed = parse(key, v)?,
                "target_length" => c.target_length = parse(key, v)?,
                "threshold" => c.threshold = parse(key, v)?,
                "mode" => c.mode = parse_enum(key, v)?,
                "test_fraction" => c.test_fraction = parse(key, v)?,
                "oov" => c.oov = parse_enum(key, v)?,
                "fine_tune_embeddings" => c.fine_tune_embeddings = parse_bool(key, v)?,
                "embeddings_format" => c.embeddings_format = parse_enum(key, v)?,
                "dataset_format" => c.dataset_format = parse_enum(key, v)?,
                "embeddings" => c.embeddings = Some(v.into()),
                "corpus" => c.corpus = Some(v.into()),
                "tree" => c.tree = Some(v.into()),
                "dataset" => c.dataset = Some(v.into()),
                "checkpoint" => c.checkpoint = Some(v.into()),
                _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
            }
        }
        Ok(c)
    }

    /// Defaults, then the `--config` file, then explicit flags.
    pub fn resolve(options: &Options) -> Result<Self, CliError> {
        let mut c = match &options.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read --config {}: {e}", path.display()))
                })?;
                RunConfig::from_entries(&parse_config_file(&text)?)?
            }
            None => RunConfig::default(),
        };
        let o = options.clone();
        if let Some(id) = o.arch {
            c.arch = Architecture::from_id(id).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        c.embed_dim = o.embed_dim.or(c.embed_dim);
        c.hidden = o.hidden.unwrap_or(c.hidden);
        c.epochs = o.epochs.unwrap_or(c.epochs);
        c.batch_size = o.batch_size.unwrap_or(c.batch_size);
        c.lr = o.lr.unwrap_or(c.lr);
        c.seed = o.seed.unwrap_or(c.seed);
        c.target_length = o.target_length.unwrap_or(c.target_length);
        c.threshold = o.threshold.unwrap_or(c.threshold);
        c.mode = o.mode.unwrap_or(c.mode);
        c.test_fraction = o.test_fraction.unwrap_or(c.test_fraction);
        c.oov = o.oov.unwrap_or(c.oov);
        c.fine_tune_embeddings |= o.fine_tune_embeddings;
        c.embeddings_format = o.embeddings_format.unwrap_or(c.embeddings_format);
        c.dataset_format = o.dataset_format.unwrap_or(c.dataset_format);
        c.embeddings = o.embeddings.or(c.embeddings);
        c.corpus = o.corpus.or(c.corpus);
        c.tree = o.tree.or(c.tree);
        c.dataset = o.dataset.or(c.dataset);
        c.checkpoint = o.checkpoint.or(c.checkpoint);
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Usage(format!(
                "--threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(CliError::Usage(format!(
                "--test-fraction must lie in [0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(CliError::Usage("--batch-size must be at least 1".into()));
        }
        if self.target_length == 0 {
            return Err(CliError::Usage("--target-length must be at least 1".into()));
        }
        if self.arch.uses_lstm() && self.hidden == 0 {
            return Err(CliError::Usage(
                "--hidden must be at least 1 for LSTM architectures".into(),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(CliError::Usage(format!(
                "--lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    /// The path behind `flag`, or a usage error naming it.
    pub fn require<'a>(
        &self,
        path: &'a Option<PathBuf>,
        flag: &str,
    ) -> Result<&'a PathBuf, CliError> {
        path.as_ref()
            .ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
    }

    pub fn embedding_format(&self) -> EmbeddingFormat {
        match self.embeddings_format {
            EmbeddingsFormat::Text => EmbeddingFormat::Text,
            EmbeddingsFormat::Word2vec => EmbeddingFormat::Word2VecBinary,
        }
    }

    pub fn labeled_format(&self) -> DatasetFormat {
        match self.dataset_format {
            DataFormat::Tsv => DatasetFormat::TsvGeneric,
            DataFormat::Uci => DatasetFormat::CsvUci,
        }
    }

    pub fn oov_policy(&self) -> OovPolicy {
        match self.oov {
            Oov::Zero => OovPolicy::Zero,
            Oov::Skip => OovPolicy::Skip,
        }
    }

    pub fn eval_mode(&self) -> EvalMode {
        match self.mode {
            Mode::Single => EvalMode::Single,
            Mode::Multilabel => EvalMode::Multilabel {
                threshold: self.threshold,
            },
        }
    }

    /// Hidden size actually used by the architecture.
    pub fn hidden_dim(&self) -> usize {
        if self.arch.uses_lstm() {
            self.hidden
        } else {
            0
        }
    }
}

/// Serializes to the `key = value` format [`RunConfig::from_entries`] reads.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "arch = {}", self.arch.id());
        if let Some(d) = self.embed_dim {
            let _ = writeln!(out, "embed_dim = {d}");
        }
        let _ = writeln!(out, "hidden = {}", self.hidden);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "lr = {}", self.lr);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "target_length = {}", self.target_length);
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "mode = {}", enum_name(&self.mode));
        let _ = writeln!(out, "test_fraction = {}", self.test_fraction);
        let _ = writeln!(out, "oov = {}", enum_name(&self.oov));
        let _ = writeln!(out, "fine_tune_embeddings = {}", self.fine_tune_embeddings);
        let _ = writeln!(
            out,
            "embeddings_format = {}",
            enum_name(&self.embeddings_format)
        );
        let _ = writeln!(out, "dataset_format = {}", enum_name(&self.dataset_format));
        for (key, path) in [
            ("embeddings", &self.embeddings),
            ("corpus", &self.corpus),
            ("tree", &self.tree),
            ("dataset", &self.dataset),
            ("checkpoint", &self.checkpoint),
        ] {
            if let Some(p) = path {
                let _ = writeln!(out, "{key} = {}", p.display());
            }
        }
        f.write_str(&out)
    }
}
