//! Regenerates the synthetic fixture files shipped in `fixtures/synthetic`.
//!
//! ```text
//! cargo run -p zeroshot-core --example gen_fixtures -- crates/core/fixtures/synthetic
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroshot::datasets::{tweet_tree, write_category_tree, write_corpus};
use zeroshot::synthetic::{SyntheticConfig, SyntheticTask};
use zeroshot::EmbeddingStore;

fn create(dir: &Path, name: &str) -> BufWriter<File> {
    BufWriter::new(File::create(dir.join(name)).expect("create fixture file"))
}

fn main() -> zeroshot::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/fixtures/synthetic".into());
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir)?;

    let graded = SyntheticTask::generate(SyntheticConfig::graded(2024));
    graded.store.write_text(create(dir, "graded.vec"))?;
    write_corpus(&graded.corpus, create(dir, "graded.corpus.tsv"))?;

    let matching = SyntheticTask::generate(SyntheticConfig::matching(2024));
    matching.store.write_text(create(dir, "match.vec"))?;
    write_corpus(&matching.corpus, create(dir, "match.corpus.tsv"))?;
    write_category_tree(&matching.tree(), create(dir, "match.tree"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = create(dir, "match.dataset.tsv");
    for i in 0..100 {
        let k = i % matching.clusters();
        writeln!(out, "{}\tcluster{k}", matching.sentence(k, &mut rng))?;
    }
    out.flush()?;

    write_tweet_fixtures(dir)
}

/// Words of a six-cluster space whose tags are the tweet tree's tag words.
fn write_tweet_fixtures(dir: &Path) -> zeroshot::Result<()> {
    let tree = tweet_tree();
    let dim = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut entries: Vec<(String, Vec<f32>)> = Vec::new();
    let mut gauss =
        |scale: f32| -> Vec<f32> { (0..dim).map(|_| rng.random_range(-scale..scale)).collect() };
    let mut vocab = Vec::new();
    for (k, (_, tags)) in tree.classes().enumerate() {
        let centroid = gauss(1.0);
        let words: Vec<String> = (0..10).map(|i| format!("t{k}w{i}")).collect();
        for w in words.iter() {
            entries.push((
                w.clone(),
                centroid
                    .iter()
                    .zip(gauss(0.2))
                    .map(|(c, n)| c + n)
                    .collect(),
            ));
        }
        for tag in tags {
            entries.push((
                tag.clone(),
                centroid
                    .iter()
                    .zip(gauss(0.05))
                    .map(|(c, n)| c + n)
                    .collect(),
            ));
        }
        vocab.push(words);
    }
    EmbeddingStore::from_entries(dim, entries)?.write_text(create(dir, "tweets.vec"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(67);
    let classes: Vec<(&str, &[String])> = tree.classes().collect();
    let sentence = |k: usize, rng: &mut ChaCha8Rng| -> String {
        let n = rng.random_range(5..10);
        (0..n)
            .map(|_| vocab[k].choose(rng).unwrap().as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut corpus = create(dir, "tweets.corpus.tsv");
    for i in 0..120 {
        let k = i % classes.len();
        let tags = classes[k].1;
        let chosen: Vec<&str> = tags
            .choose_multiple(&mut rng, 2)
            .map(String::as_str)
            .collect();
        writeln!(corpus, "{}\t{}", sentence(k, &mut rng), chosen.join(", "))?;
    }
    corpus.flush()?;
    let mut dataset = create(dir, "tweets.dataset.tsv");
    for i in 0..60 {
        let k = i % classes.len();
        writeln!(dataset, "{}\t{}", sentence(k, &mut rng), classes[k].0)?;
    }
    dataset.flush()?;
    Ok(())
}
