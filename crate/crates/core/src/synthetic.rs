//! Generated corpora with known ground truth.
//!
//! Every cluster owns a centroid in embedding space, a pool of sentence
//! words scattered around it, and one or more tag words. Two relations are
//! available:
//!
//! * [`Relation::Graded`]: centroids are spread along one axis and a
//!   sentence of cluster `k >= 1` is related to every tag of clusters
//!   `j >= k`. Cluster 0 sentences are related to cluster 0 tags only; they
//!   keep the tag vocabulary larger than any record's tag set. Apart from
//!   those anchor sentences the relation is a threshold on
//!   `position(tag) - position(sentence)`, which a single linear layer over
//!   `[mean sentence ; tag]` can represent.
//! * [`Relation::Match`]: random centroids; a sentence is related to the
//!   tags of its own cluster only. Telling matches apart needs an
//!   interaction between sentence and tag.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::embedding::EmbeddingStore;
use crate::inference::CategoryTree;
use crate::training::{Corpus, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Graded,
    Match,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub relation: Relation,
    pub clusters: usize,
    pub dim: usize,
    pub sentences: usize,
    /// Graded relation only: how many of `sentences` belong to cluster 0.
    pub anchor_sentences: usize,
    pub words_per_cluster: usize,
    pub tags_per_cluster: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Distance between neighbouring centroids along the graded axis, or
    /// the centroid norm for the match relation.
    pub spread: f64,
    /// Norm of each graded centroid's random off-axis component.
    pub off_axis: f64,
    /// Per-coordinate standard deviation of sentence words around their centroid.
    pub word_noise: f64,
    /// Per-coordinate standard deviation of extra tags around their centroid.
    pub tag_noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// 8 clusters in 16 dimensions, 200 sentences, one tag per cluster.
    pub fn graded(seed: u64) -> Self {
        SyntheticConfig {
            relation: Relation::Graded,
            clusters: 8,
            dim: 16,
            sentences: 200,
            anchor_sentences: 2,
            words_per_cluster: 12,
            tags_per_cluster: 1,
            min_words: 6,
            max_words: 12,
            spread: 1.0,
            off_axis: 0.3,
            word_noise: 0.15,
            tag_noise: 0.05,
            seed,
        }
    }

    pub fn matching(seed: u64) -> Self {
        SyntheticConfig {
            relation: Relation::Match,
            spread: 2.0,
            anchor_sentences: 0,
            ..SyntheticConfig::graded(seed)
        }
    }
}

#[derive(Debug)]
pub struct SyntheticTask {
    pub config: SyntheticConfig,
    pub store: EmbeddingStore,
    pub corpus: Corpus,
    /// Cluster of every corpus record.
    pub sentence_clusters: Vec<usize>,
    centroids: Vec<Vec<f64>>,
}

pub fn word_name(cluster: usize, index: usize) -> String {
    format!("w{cluster}x{index}")
}

pub fn tag_name(cluster: usize, index: usize) -> String {
    if index == 0 {
        format!("topic{cluster}")
    } else {
        format!("topic{cluster}v{index}")
    }
}

fn gaussian(rng: &mut impl Rng, dim: usize, std: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect::<Vec<f64>>()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SyntheticTask {
    pub fn generate(config: SyntheticConfig) -> Self {
        assert!(config.clusters >= 2 && config.dim >= 2 && config.tags_per_cluster >= 1);
        assert!(config.min_words >= 1 && config.min_words <= config.max_words);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let centroids = match config.relation {
            Relation::Graded => graded_centroids(&config, &mut rng),
            Relation::Match => (0..config.clusters)
                .map(|_| {
                    let v = gaussian(&mut rng, config.dim, 1.0);
                    let n = norm(&v);
                    v.into_iter().map(|x| x * config.spread / n).collect()
                })
                .collect(),
        };

        let mut entries: Vec<(String, Vec<f32>)> = Vec::new();
        let noise = Normal::new(0.0, config.word_noise).expect("valid noise");
        let tag_noise = Normal::new(0.0, config.tag_noise).expect("valid noise");
        for (k, c) in centroids.iter().enumerate() {
            for i in 0..config.words_per_cluster {
                let v = c
                    .iter()
                    .map(|x| (x + noise.sample(&mut rng)) as f32)
                    .collect();
                entries.push((word_name(k, i), v));
            }
            for m in 0..config.tags_per_cluster {
                let v = if m == 0 {
                    c.iter().map(|&x| x as f32).collect()
                } else {
                    c.iter()
                        .map(|x| (x + tag_noise.sample(&mut rng)) as f32)
                        .collect()
                };
                entries.push((tag_name(k, m), v));
            }
        }
        let store =
            EmbeddingStore::from_entries(config.dim, entries).expect("consistent dimensions");

        let mut task = SyntheticTask {
            store,
            corpus: Corpus::new(Vec::new()).expect("empty corpus"),
            sentence_clusters: Vec::new(),
            centroids,
            config,
        };
        let clusters = task.record_clusters();
        let records = clusters
            .iter()
            .map(|&k| {
                let text = task.sentence(k, &mut rng);
                let tags: Vec<String> = task.related_tags(k);
                Record::new(text, &tags)
            })
            .collect();
        task.corpus = Corpus::new(records).expect("generated records are valid");
        task.sentence_clusters = clusters;
        task
    }

    fn record_clusters(&self) -> Vec<usize> {
        let cfg = &self.config;
        match cfg.relation {
            Relation::Match => (0..cfg.sentences).map(|i| i % cfg.clusters).collect(),
            Relation::Graded => {
                let anchors = cfg.anchor_sentences.clamp(1, cfg.sentences - 1);
                let mut clusters = vec![0; anchors];
                clusters.extend((0..cfg.sentences - anchors).map(|i| 1 + i % (cfg.clusters - 1)));
                clusters
            }
        }
    }

    pub fn clusters(&self) -> usize {
        self.config.clusters
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        &self.centroids[cluster]
    }

    /// Ground truth.
    pub fn related(&self, sentence_cluster: usize, tag_cluster: usize) -> bool {
        match self.config.relation {
            Relation::Match => sentence_cluster == tag_cluster,
            Relation::Graded if sentence_cluster == 0 => tag_cluster == 0,
            Relation::Graded => tag_cluster >= sentence_cluster,
        }
    }

    pub fn tags_of(&self, cluster: usize) -> Vec<String> {
        (0..self.config.tags_per_cluster)
            .map(|m| tag_name(cluster, m))
            .collect()
    }

    /// Cluster a tag word belongs to.
    pub fn tag_cluster(&self, tag: &str) -> Option<usize> {
        (0..self.clusters()).find(|&k| self.tags_of(k).iter().any(|t| t == tag))
    }

    fn related_tags(&self, sentence_cluster: usize) -> Vec<String> {
        (0..self.clusters())
            .filter(|&j| self.related(sentence_cluster, j))
            .flat_map(|j| self.tags_of(j))
            .collect()
    }

    /// A fresh sentence of words from `cluster`.
    pub fn sentence(&self, cluster: usize, rng: &mut impl Rng) -> String {
        let len = rng.random_range(self.config.min_words..=self.config.max_words);
        let pool: Vec<usize> = (0..self.config.words_per_cluster).collect();
        (0..len)
            .map(|_| word_name(cluster, *pool.choose(rng).expect("nonempty pool")))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The corpus without the `held_out` clusters: their sentences are
    /// removed and their tags are stripped from the remaining records.
    pub fn corpus_without(&self, held_out: &[usize]) -> Corpus {
        let held_tags: Vec<String> = held_out.iter().flat_map(|&k| self.tags_of(k)).collect();
        let records = self
            .corpus
            .records()
            .iter()
            .zip(&self.sentence_clusters)
            .filter(|(_, k)| !held_out.contains(k))
            .filter_map(|(r, _)| {
                let tags: Vec<&String> = r.tags.iter().filter(|t| !held_tags.contains(t)).collect();
                (!tags.is_empty()).then(|| {
                    Record::new(
                        r.text.clone(),
                        &tags.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
                    )
                })
            })
            .collect();
        Corpus::new(records).expect("restricted records are valid")
    }

    /// One class per cluster, named `cluster<k>`, listing that cluster's tags.
    pub fn tree(&self) -> CategoryTree {
        CategoryTree::new(
            (0..self.clusters())
                .map(|k| (format!("cluster{k}"), self.tags_of(k)))
                .collect(),
        )
        .expect("valid generated tree")
    }
}

fn graded_centroids(config: &SyntheticConfig, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let axis = {
        let v = gaussian(rng, config.dim, 1.0);
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let middle = (config.clusters as f64 - 1.0) / 2.0;
    (0..config.clusters)
        .map(|k| {
            // random direction orthogonal to the axis
            let mut r = gaussian(rng, config.dim, 1.0);
            let along: f64 = r.iter().zip(&axis).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(&axis).for_each(|(x, a)| *x -= along * a);
            let n = norm(&r);
            let position = (k as f64 - middle) * config.spread;
            axis.iter()
                .zip(&r)
                .map(|(a, x)| position * a + config.off_axis * x / n)
                .collect()
        })
        .collect()
}
