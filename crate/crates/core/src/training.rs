//! Balanced pair sampling and the cross-entropy/Adam training loop.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingStore;
use crate::error::{ensure_len, Error, Result};
use crate::model::RelatednessModel;
use crate::numeric::{adam_update, bce_loss, AdamConfig, AdamState};
use crate::text::{normalize_length, tokenize, TokenSequence, DEFAULT_TARGET_LENGTH};

/// A sentence with its related tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub text: String,
    pub tokens: Vec<String>,
    /// Trimmed, lowercased, unique, in first-seen order.
    pub tags: Vec<String>,
}

impl Record {
    pub fn new<S: AsRef<str>>(text: impl Into<String>, tags: &[S]) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        let mut seen = BTreeSet::new();
        let tags = tags
            .iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty() && seen.insert(t.clone()))
            .collect();
        Record { text, tokens, tags }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<Record>,
    vocabulary: Vec<String>,
    record_tag_ids: Vec<Vec<usize>>,
}

impl Corpus {
    /// Every record needs at least one tag and one token.
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut vocab = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.tags.is_empty() {
                return Err(Error::InvalidArgument(format!("record {i} has no tags")));
            }
            if r.tokens.is_empty() {
                return Err(Error::InvalidArgument(format!("record {i} has no tokens")));
            }
            vocab.extend(r.tags.iter().cloned());
        }
        let vocabulary: Vec<String> = vocab.into_iter().collect();
        let record_tag_ids = records
            .iter()
            .map(|r| {
                r.tags
                    .iter()
                    .map(|t| vocabulary.binary_search(t).expect("tag in vocabulary"))
                    .collect()
            })
            .collect();
        Ok(Corpus {
            records,
            vocabulary,
            record_tag_ids,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Sorted union of all record tags.
    pub fn tag_vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.records.iter().map(|r| r.tags.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub sentence: TokenSequence,
    pub tag: String,
    pub related: bool,
}

impl TrainingPair {
    pub fn label(&self) -> f64 {
        if self.related {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct IndexedPair {
    pub record: usize,
    pub tag: usize,
    pub related: bool,
}

/// For every (record, own tag) emits that positive and one negative drawn
/// uniformly from the tags the record does not carry.
pub(crate) fn sample_indexed(corpus: &Corpus, rng: &mut impl Rng) -> Result<Vec<IndexedPair>> {
    sample_ids(&corpus.record_tag_ids, corpus.vocabulary.len(), rng)
}

fn sample_ids(
    record_tag_ids: &[Vec<usize>],
    vocab: usize,
    rng: &mut impl Rng,
) -> Result<Vec<IndexedPair>> {
    if record_tag_ids.is_empty() {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    if let Some(record) = record_tag_ids.iter().position(|ids| ids.len() >= vocab) {
        return Err(Error::DegenerateVocabulary { record });
    }
    let positives = record_tag_ids.iter().map(Vec::len).sum::<usize>();
    let mut pairs = Vec::with_capacity(2 * positives);
    for (record, own) in record_tag_ids.iter().enumerate() {
        for &tag in own {
            pairs.push(IndexedPair {
                record,
                tag,
                related: true,
            });
            let negative = loop {
                let candidate = rng.random_range(0..vocab);
                if !own.contains(&candidate) {
                    break candidate;
                }
            };
            pairs.push(IndexedPair {
                record,
                tag: negative,
                related: false,
            });
        }
    }
    Ok(pairs)
}

/// Balanced related/unrelated pairs, deterministic in `seed`.
pub fn sample_pairs(corpus: &Corpus, seed: u64, target_length: usize) -> Result<Vec<TrainingPair>> {
    sample_pairs_against::<&str>(corpus, &[], seed, target_length)
}

/// Like [`sample_pairs`], but negatives come from the union of the
/// corpus vocabulary and `extra_tags`. Useful for a test split, whose own
/// vocabulary can be too small to draw negatives from.
pub fn sample_pairs_against<S: AsRef<str>>(
    corpus: &Corpus,
    extra_tags: &[S],
    seed: u64,
    target_length: usize,
) -> Result<Vec<TrainingPair>> {
    let vocabulary: Vec<String> = corpus
        .vocabulary
        .iter()
        .cloned()
        .chain(extra_tags.iter().map(|t| t.as_ref().trim().to_lowercase()))
        .filter(|t| !t.is_empty())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ids: Vec<Vec<usize>> = corpus
        .records
        .iter()
        .map(|r| {
            r.tags
                .iter()
                .map(|t| vocabulary.binary_search(t).expect("tag in vocabulary"))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indexed = sample_ids(&ids, vocabulary.len(), &mut rng)?;
    let sentences = corpus
        .records
        .iter()
        .map(|r| normalize_length(&r.tokens, target_length))
        .collect::<Result<Vec<_>>>()?;
    Ok(indexed
        .into_iter()
        .map(|p| TrainingPair {
            sentence: sentences[p.record].clone(),
            tag: vocabulary[p.tag].clone(),
            related: p.related,
        })
        .collect())
}

/// Keeps the pairs whose tag never occurs in `training`.
pub fn unseen_tag_pairs(pairs: &[TrainingPair], training: &Corpus) -> Vec<TrainingPair> {
    pairs
        .iter()
        .filter(|p| training.vocabulary.binary_search(&p.tag).is_err())
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Also update the sentence-side word vectors. Tag vectors never move.
    pub fine_tune_embeddings: bool,
    pub target_length: usize,
    /// Stop after the first epoch whose running accuracy reaches this value.
    pub stop_at_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
            fine_tune_embeddings: false,
            target_length: DEFAULT_TARGET_LENGTH,
            stop_at_accuracy: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    /// Fraction of pairs where `p >= 0.5` agrees with the label, measured
    /// before each batch's update.
    pub accuracy: f64,
    pub pairs: usize,
    /// Pairs dropped because no word of the tag has an embedding.
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RelatednessModel,
    pub metrics: Vec<EpochMetrics>,
    /// Fine-tuned sentence vectors, when fine-tuning was enabled.
    pub sentence_embeddings: Option<HashMap<String, Vec<f64>>>,
}

/// Trains `model` on freshly sampled balanced pairs every epoch.
pub fn train(
    mut model: RelatednessModel,
    store: &EmbeddingStore,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    ensure_len("model/embedding dimension", store.dim(), model.embed_dim())?;
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    let mut metrics = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            metrics,
            sentence_embeddings: None,
        });
    }

    let sentences = corpus
        .records
        .iter()
        .map(|r| normalize_length(&r.tokens, config.target_length))
        .collect::<Result<Vec<_>>>()?;
    let tags: Vec<Option<_>> = corpus
        .vocabulary
        .iter()
        .map(|t| store.embed_tag(t).ok())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(model.params().len(), config.adam);
    let mut tuned: HashMap<String, Vec<f64>> = store.sentence_overrides().clone();
    let mut word_adam: HashMap<String, AdamState> = HashMap::new();
    let mut grad = vec![0.0; model.params().len()];

    for epoch in 1..=config.epochs {
        let mut pairs = sample_indexed(corpus, &mut rng)?;
        pairs.shuffle(&mut rng);

        let (mut loss_sum, mut correct, mut seen, mut skipped) = (0.0, 0usize, 0usize, 0usize);
        for (batch_idx, batch) in pairs.chunks(config.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut word_grads: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            let mut count = 0usize;
            for pair in batch {
                let Some(tag) = &tags[pair.tag] else {
                    skipped += 1;
                    continue;
                };
                let seq = &sentences[pair.record];
                let sentence = store.embed_sequence_with(seq, &tuned);
                let label = if pair.related { 1.0 } else { 0.0 };
                let (p, cache) = model.forward(&sentence, tag)?;
                let loss = bce_loss(p, label);
                if !loss.is_finite() || !p.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx + 1,
                    });
                }
                loss_sum += loss;
                correct += usize::from((p >= 0.5) == pair.related);
                seen += 1;
                count += 1;

                let g = model.backward(&cache, label)?;
                grad.iter_mut().zip(&g.params).for_each(|(a, b)| *a += b);
                if config.fine_tune_embeddings {
                    for (token, row) in seq.iter().zip(g.sentence.chunks_exact(store.dim())) {
                        if !store.contains(token) && !tuned.contains_key(token.as_str()) {
                            continue;
                        }
                        let acc = word_grads
                            .entry(token.as_str())
                            .or_insert_with(|| vec![0.0; row.len()]);
                        acc.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                }
            }
            if count == 0 {
                continue;
            }
            let scale = 1.0 / count as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_update(&mut adam, model.params_mut(), &grad)?;

            for (word, mut g) in word_grads {
                g.iter_mut().for_each(|v| *v *= scale);
                let vector = tuned.entry(word.to_string()).or_insert_with(|| {
                    store
                        .get(word)
                        .map(|v| v.iter().map(|&x| x as f64).collect())
                        .expect("only vocabulary words are tuned")
                });
                let state = word_adam
                    .entry(word.to_string())
                    .or_insert_with(|| AdamState::new(g.len(), config.adam));
                adam_update(state, vector, &g)?;
            }
        }
        if seen == 0 {
            return Err(Error::EmptyEvaluationSet);
        }
        let accuracy = correct as f64 / seen as f64;
        metrics.push(EpochMetrics {
            epoch,
            mean_loss: loss_sum / seen as f64,
            accuracy,
            pairs: seen,
            skipped,
        });
        if config
            .stop_at_accuracy
            .is_some_and(|target| accuracy >= target)
        {
            break;
        }
    }

    Ok(TrainOutcome {
        model,
        metrics,
        sentence_embeddings: config.fine_tune_embeddings.then_some(tuned),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub loss: f64,
    pub count: usize,
    pub skipped: usize,
}

/// Accuracy and mean loss over `pairs`, predicting "related" when `p >= 0.5`.
pub fn evaluate_binary(
    model: &RelatednessModel,
    store: &EmbeddingStore,
    pairs: &[TrainingPair],
) -> Result<BinaryMetrics> {
    let predictions = pairs
        .iter()
        .filter_map(|pair| match store.embed_tag(&pair.tag) {
            Ok(tag) => Some(
                model
                    .probability(&store.embed_sequence(&pair.sentence), &tag)
                    .map(|p| (p, pair.related)),
            ),
            Err(Error::AllWordsOutOfVocabulary(_)) => None,
            Err(e) => Some(Err(e)),
        });
    let scored = predictions.collect::<Result<Vec<_>>>()?;
    binary_metrics(&scored, pairs.len() - scored.len())
}

pub(crate) fn binary_metrics(scored: &[(f64, bool)], skipped: usize) -> Result<BinaryMetrics> {
    if scored.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let n = scored.len() as f64;
    let correct = scored.iter().filter(|(p, y)| (*p >= 0.5) == *y).count();
    let loss = scored
        .iter()
        .map(|&(p, y)| bce_loss(p, f64::from(u8::from(y))))
        .sum::<f64>();
    Ok(BinaryMetrics {
        accuracy: correct as f64 / n,
        loss: loss / n,
        count: scored.len(),
        skipped,
    })
}
