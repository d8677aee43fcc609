//! Random inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroshot::{Architecture, EmbeddingStore, RelatednessModel, SentenceMatrix, TagEmbedding};

pub struct Instance {
    pub model: RelatednessModel,
    pub sentence: SentenceMatrix,
    pub tag: TagEmbedding,
}

pub fn instance(arch: Architecture, dim: usize, hidden: usize, len: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = if arch.uses_lstm() { hidden } else { 0 };
    let rows: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    Instance {
        model: RelatednessModel::new(arch, dim, hidden, seed).expect("valid shape"),
        sentence: SentenceMatrix::from_rows(&rows).expect("rectangular rows"),
        tag: TagEmbedding((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()),
    }
}

/// `words` random vectors named `w0`, `w1`, ... plus the given extra words.
pub fn store(words: usize, extra: &[&str], dim: usize, seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = (0..words)
        .map(|i| format!("w{i}"))
        .chain(extra.iter().map(|w| w.to_string()));
    let entries: Vec<(String, Vec<f32>)> = names
        .map(|w| {
            (
                w,
                (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
            )
        })
        .collect();
    EmbeddingStore::from_entries(dim, entries).expect("consistent dimensions")
}
