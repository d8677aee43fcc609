use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroshot::datasets::{parse_corpus, split_corpus};
use zeroshot::numeric::finite_diff::{central_difference, max_relative_error, DEFAULT_STEP};
use zeroshot::training::unseen_tag_pairs;
use zeroshot::{
    class_scores, classify_multilabel, classify_single, evaluate_binary, evaluate_dataset,
    load_checkpoint, parse_category_tree, parse_labeled_dataset, sample_pairs,
    sample_pairs_against, save_checkpoint, train, AdamConfig, Architecture, CategoryTree,
    EmbeddingStore, Error, RelatednessModel, SentenceMatrix, TagEmbedding, TrainConfig,
};

use crate::config::{Mode, RunConfig};
use crate::CliError;

/// Largest relative error `gradcheck` accepts.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `<checkpoint><suffix>`, e.g. `model.ckpt.metrics.tsv`.
pub fn sidecar(checkpoint: &Path, suffix: &str) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

const METRICS_SUFFIX: &str = ".metrics.tsv";
const CONFIG_SUFFIX: &str = ".config";
const TUNED_SUFFIX: &str = ".sentence-embeddings.txt";

fn load_store(config: &RunConfig) -> Result<EmbeddingStore, CliError> {
    let path = config.require(&config.embeddings, "embeddings")?;
    let store = EmbeddingStore::load(open(path)?, config.embedding_format())?
        .with_oov_policy(config.oov_policy());
    if let Some(dim) = config.embed_dim {
        if dim != store.dim() {
            return Err(CliError::Usage(format!(
                "--embed-dim {dim} does not match the {}-dimensional embeddings file",
                store.dim()
            )));
        }
    }
    Ok(store)
}

fn write_tuned(path: &Path, tuned: &HashMap<String, Vec<f64>>) -> Result<(), CliError> {
    let mut words: Vec<&String> = tuned.keys().collect();
    words.sort();
    let mut out = create(path)?;
    for word in words {
        write!(out, "{word}")?;
        for v in &tuned[word] {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn read_tuned(path: &Path) -> Result<HashMap<String, Vec<f64>>, CliError> {
    let mut tuned = HashMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let vector = fields
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        tuned.insert(word.to_string(), vector);
    }
    Ok(tuned)
}

/// Model plus the store it was trained against, including tuned sentence
/// vectors saved next to the checkpoint.
fn load_model(config: &RunConfig) -> Result<(RelatednessModel, EmbeddingStore), CliError> {
    let path = config.require(&config.checkpoint, "checkpoint")?;
    let model = load_checkpoint(open(path)?)?;
    let mut store = load_store(config)?;
    if model.embed_dim() != store.dim() {
        return Err(CliError::Data(format!(
            "checkpoint expects {}-dimensional embeddings, file has {}",
            model.embed_dim(),
            store.dim()
        )));
    }
    let tuned = sidecar(path, TUNED_SUFFIX);
    if tuned.exists() {
        store = store.with_sentence_overrides(read_tuned(&tuned)?)?;
    }
    Ok((model, store))
}

fn load_tree(config: &RunConfig) -> Result<CategoryTree, CliError> {
    Ok(parse_category_tree(open(
        config.require(&config.tree, "tree")?,
    )?)?)
}

pub fn train_cmd(config: &RunConfig) -> Result<(), CliError> {
    let checkpoint = config.require(&config.checkpoint, "checkpoint")?;
    let corpus_path = config.require(&config.corpus, "corpus")?;
    let store = load_store(config)?;
    let (corpus, stats) = parse_corpus(open(corpus_path)?)?;
    if stats.dropped_no_tags + stats.dropped_empty_sentence > 0 {
        eprintln!(
            "dropped {} records without tags and {} without tokens",
            stats.dropped_no_tags, stats.dropped_empty_sentence
        );
    }
    let vocabulary = corpus.tag_vocabulary().to_vec();
    let (train_corpus, test_corpus) = if config.test_fraction > 0.0 {
        let split = split_corpus(&corpus, config.test_fraction, config.seed)?;
        (split.train, Some(split.test))
    } else {
        (corpus, None)
    };

    let model = RelatednessModel::new(config.arch, store.dim(), config.hidden_dim(), config.seed)?;
    let train_config = TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        adam: AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        seed: config.seed,
        fine_tune_embeddings: config.fine_tune_embeddings,
        target_length: config.target_length,
        stop_at_accuracy: None,
    };
    let outcome = train(model, &store, &train_corpus, &train_config)?;

    save_checkpoint(&outcome.model, create(checkpoint)?)?;
    let mut metrics = create(&sidecar(checkpoint, METRICS_SUFFIX))?;
    writeln!(metrics, "epoch\tmean_loss\taccuracy\tpairs\tskipped")?;
    for m in &outcome.metrics {
        writeln!(
            metrics,
            "{}\t{}\t{}\t{}\t{}",
            m.epoch, m.mean_loss, m.accuracy, m.pairs, m.skipped
        )?;
        println!(
            "epoch {:>4}  loss {:.6}  accuracy {:.4}",
            m.epoch, m.mean_loss, m.accuracy
        );
    }
    metrics.flush()?;
    fs::write(sidecar(checkpoint, CONFIG_SUFFIX), config.to_string())?;

    let store = match &outcome.sentence_embeddings {
        Some(tuned) => {
            write_tuned(&sidecar(checkpoint, TUNED_SUFFIX), tuned)?;
            store.with_sentence_overrides(tuned.clone())?
        }
        None => {
            // a stale file from an earlier fine-tuned run would be picked up by eval
            let stale = sidecar(checkpoint, TUNED_SUFFIX);
            if stale.exists() {
                fs::remove_file(stale)?;
            }
            store
        }
    };

    let pairs = sample_pairs(
        &train_corpus,
        config.seed.wrapping_add(1),
        config.target_length,
    )?;
    let accuracy = evaluate_binary(&outcome.model, &store, &pairs)?.accuracy;
    println!("train_accuracy={accuracy}");
    if let Some(test) = test_corpus {
        // negatives for test records come from the whole corpus vocabulary
        let pairs = sample_pairs_against(
            &test,
            &vocabulary,
            config.seed.wrapping_add(2),
            config.target_length,
        )?;
        println!(
            "test_accuracy={}",
            evaluate_binary(&outcome.model, &store, &pairs)?.accuracy
        );
        let unseen = unseen_tag_pairs(&pairs, &train_corpus);
        match evaluate_binary(&outcome.model, &store, &unseen) {
            Ok(m) => println!("unseen_tag_accuracy={}", m.accuracy),
            Err(Error::EmptyEvaluationSet) => println!("unseen_tag_accuracy=n/a"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn fmt_ratio(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn eval_cmd(config: &RunConfig) -> Result<(), CliError> {
    let (model, store) = load_model(config)?;
    let tree = load_tree(config)?;
    let dataset = parse_labeled_dataset(
        open(config.require(&config.dataset, "dataset")?)?,
        config.labeled_format(),
    )?;
    let report = evaluate_dataset(
        &model,
        &store,
        &dataset,
        &tree,
        config.eval_mode(),
        config.target_length,
    )?;
    match config.mode {
        Mode::Single => println!("mode=single"),
        Mode::Multilabel => println!("mode=multilabel threshold={}", config.threshold),
    }
    println!("class\tprecision\trecall");
    for (class, counts) in report.classes.iter().zip(&report.per_class) {
        println!(
            "{class}\t{}\t{}",
            fmt_ratio(counts.precision()),
            fmt_ratio(counts.recall())
        );
    }
    println!("correct={} total={}", report.correct, report.total);
    println!("accuracy={}", report.accuracy);
    Ok(())
}

pub fn predict_cmd(config: &RunConfig, sentence: &str) -> Result<(), CliError> {
    let (model, store) = load_model(config)?;
    let tree = load_tree(config)?;
    let scores = class_scores(&model, &store, sentence, &tree, config.target_length).map_err(
        |e| match e {
            Error::EmptySentence => CliError::Usage("sentence has no tokens".into()),
            e => e.into(),
        },
    )?;
    for s in scores.iter() {
        println!("{}\t{}", s.class, s.score);
    }
    let predicted = match config.mode {
        Mode::Single => classify_single(&scores).unwrap_or_default().to_string(),
        Mode::Multilabel => classify_multilabel(&scores, config.threshold)
            .into_iter()
            .collect::<Vec<_>>()
            .join(","),
    };
    println!("predicted={predicted}");
    Ok(())
}

/// Largest relative error per parameter block over random instances.
pub fn gradient_report(
    arch: Architecture,
    seed: u64,
    instances: usize,
    corrupt: bool,
) -> zeroshot::Result<Vec<(&'static str, f64)>> {
    let (dim, hidden, len) = (4, 5, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    for instance in 0..instances {
        let model = RelatednessModel::new(
            arch,
            dim,
            if arch.uses_lstm() { hidden } else { 0 },
            seed.wrapping_add(instance as u64),
        )?;
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let sentence = SentenceMatrix::from_rows(&rows)?;
        let tag = TagEmbedding((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
        let label = if rng.random::<bool>() { 1.0 } else { 0.0 };

        let (_, cache) = model.forward(&sentence, &tag)?;
        let mut analytic = model.backward(&cache, label)?.params;
        if corrupt {
            // negative control: skew the first block's gradient
            let first = model.blocks()[0].range();
            analytic[first]
                .iter_mut()
                .for_each(|g| *g = *g * 1.5 + 1e-3);
        }
        let numeric = central_difference(
            |p| {
                RelatednessModel::from_parts(
                    arch,
                    dim,
                    model.hidden_dim(),
                    model.seed(),
                    p.to_vec(),
                )
                .and_then(|m| m.loss(&sentence, &tag, label))
                .unwrap_or(f64::NAN)
            },
            model.params(),
            DEFAULT_STEP,
        );
        for (i, block) in model.blocks().iter().enumerate() {
            let err = max_relative_error(&analytic[block.range()], &numeric[block.range()]);
            let err = if err.is_nan() { f64::INFINITY } else { err };
            match worst.get_mut(i) {
                Some(entry) => entry.1 = entry.1.max(err),
                None => worst.push((block.name, err)),
            }
        }
    }
    Ok(worst)
}

pub fn gradcheck_cmd(config: &RunConfig, corrupt: bool) -> Result<(), CliError> {
    let mut failures = Vec::new();
    for arch in Architecture::ALL {
        for (block, err) in gradient_report(arch, config.seed, 5, corrupt)? {
            let ok = err < GRADCHECK_TOLERANCE;
            println!(
                "{arch}\t{block}\t{err:.3e}\t{}",
                if ok { "ok" } else { "FAIL" }
            );
            if !ok {
                failures.push(format!("{arch} {block}"));
            }
        }
    }
    if failures.is_empty() {
        println!("gradcheck passed");
        Ok(())
    } else {
        Err(CliError::GradCheck(failures.join(", ")))
    }
}
