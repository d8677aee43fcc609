//! The shipped synthetic fixtures parse and match their generator.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;

use zeroshot::datasets::{parse_corpus, tweet_tree, write_corpus};
use zeroshot::synthetic::{SyntheticConfig, SyntheticTask};
use zeroshot::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/synthetic")
        .join(name)
}

fn store(name: &str) -> EmbeddingStore {
    EmbeddingStore::load(
        BufReader::new(File::open(fixture(name)).unwrap()),
        EmbeddingFormat::Text,
    )
    .unwrap()
}

#[test]
fn graded_fixture_is_the_generated_corpus() {
    let task = SyntheticTask::generate(SyntheticConfig::graded(2024));
    let mut expected = Vec::new();
    write_corpus(&task.corpus, &mut expected).unwrap();
    assert_eq!(fs::read(fixture("graded.corpus.tsv")).unwrap(), expected);
    let loaded = store("graded.vec");
    assert_eq!(loaded.len(), task.store.len());
    for word in task.store.words() {
        assert_eq!(loaded.get(word), task.store.get(word));
    }
}

#[test]
fn match_fixtures_are_consistent() {
    let (corpus, stats) = parse_corpus(BufReader::new(
        File::open(fixture("match.corpus.tsv")).unwrap(),
    ))
    .unwrap();
    assert_eq!(corpus.len(), 200);
    assert_eq!(stats.dropped_no_tags + stats.dropped_empty_sentence, 0);
    let tree =
        parse_category_tree(BufReader::new(File::open(fixture("match.tree")).unwrap())).unwrap();
    let dataset = parse_labeled_dataset(
        BufReader::new(File::open(fixture("match.dataset.tsv")).unwrap()),
        DatasetFormat::TsvGeneric,
    )
    .unwrap();
    assert_eq!(dataset.len(), 100);
    assert!(dataset
        .items()
        .iter()
        .all(|(_, class)| tree.position(class).is_some()));
    let store = store("match.vec");
    assert!(corpus.tag_vocabulary().iter().all(|t| store.contains(t)));
}

#[test]
fn tweet_fixtures_cover_the_tweet_tree() {
    let store = store("tweets.vec");
    let tree = tweet_tree();
    for (_, tags) in tree.classes() {
        assert!(tags.iter().all(|t| store.contains(t)));
    }
    let dataset = parse_labeled_dataset(
        BufReader::new(File::open(fixture("tweets.dataset.tsv")).unwrap()),
        DatasetFormat::TsvGeneric,
    )
    .unwrap();
    let labels: std::collections::BTreeSet<&str> =
        dataset.items().iter().map(|(_, c)| c.as_str()).collect();
    assert_eq!(labels, tree.class_names().collect());
}
