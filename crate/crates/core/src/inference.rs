//! Category-tree classification.
//!
//! A class is scored by the mean relatedness of the sentence to each of the
//! class's tags. Multi-label decisions keep every class strictly above a
//! threshold; single-label decisions take the best class.

use std::collections::{BTreeSet, HashSet};

use crate::embedding::{EmbeddingStore, SentenceMatrix, TagEmbedding};
use crate::error::{Error, Result};
use crate::model::RelatednessModel;
use crate::text::prepare;

/// Relatedness threshold used for multi-label decisions by default.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Classes and their representative tags, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTree {
    classes: Vec<(String, Vec<String>)>,
}

impl CategoryTree {
    /// Repeated tags within a class are kept once.
    pub fn new(mut classes: Vec<(String, Vec<String>)>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidArgument(
                "category tree has no classes".into(),
            ));
        }
        let mut names = HashSet::new();
        for (line, (name, tags)) in classes.iter_mut().enumerate() {
            let mut seen = HashSet::new();
            tags.retain(|t| seen.insert(t.clone()));
            if !names.insert(name.as_str()) {
                return Err(Error::DuplicateClass(name.clone()));
            }
            if tags.is_empty() {
                return Err(Error::EmptyTagList {
                    line: line + 1,
                    class: name.clone(),
                });
            }
        }
        Ok(CategoryTree { classes })
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.classes.iter().map(|(c, t)| (c.as_str(), t.as_slice()))
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|(c, _)| c.as_str())
    }

    pub fn tags(&self, class: &str) -> Option<&[String]> {
        self.classes
            .iter()
            .find(|(c, _)| c == class)
            .map(|(_, t)| t.as_slice())
    }

    pub fn position(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|(c, _)| c == class)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub class: String,
    pub score: f64,
    /// No tag of the class could be embedded; `score` is 0.
    pub unscored: bool,
}

/// One score per tree class, in tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores(pub Vec<ClassScore>);

impl ClassScores {
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        ClassScores(
            pairs
                .into_iter()
                .map(|(class, score)| ClassScore {
                    class: class.into(),
                    score,
                    unscored: false,
                })
                .collect(),
        )
    }

    pub fn get(&self, class: &str) -> Option<f64> {
        self.0.iter().find(|s| s.class == class).map(|s| s.score)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassScore> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Embeds a sentence the way the models expect it.
pub fn sentence_matrix(
    store: &EmbeddingStore,
    text: &str,
    target_length: usize,
) -> Result<SentenceMatrix> {
    Ok(store.embed_sequence(&prepare(text, target_length)?))
}

/// Relatedness probability of `sentence` to `tag`.
pub fn relatedness(
    model: &RelatednessModel,
    store: &EmbeddingStore,
    sentence: &str,
    tag: &str,
    target_length: usize,
) -> Result<f64> {
    let matrix = sentence_matrix(store, sentence, target_length)?;
    let tag = store.embed_tag(tag)?;
    model.probability(&matrix, &tag)
}

/// Mean relatedness per class. Tags with no in-vocabulary word are left out
/// of their class's mean.
pub fn class_scores(
    model: &RelatednessModel,
    store: &EmbeddingStore,
    sentence: &str,
    tree: &CategoryTree,
    target_length: usize,
) -> Result<ClassScores> {
    let matrix = sentence_matrix(store, sentence, target_length)?;
    class_scores_for_matrix(model, store, &matrix, tree)
}

pub fn class_scores_for_matrix(
    model: &RelatednessModel,
    store: &EmbeddingStore,
    matrix: &SentenceMatrix,
    tree: &CategoryTree,
) -> Result<ClassScores> {
    let mut scores = Vec::with_capacity(tree.len());
    for (class, tags) in tree.classes() {
        let mut sum = 0.0;
        let mut used = 0usize;
        for tag in tags {
            let embedded: TagEmbedding = match store.embed_tag(tag) {
                Ok(t) => t,
                Err(Error::AllWordsOutOfVocabulary(_)) => continue,
                Err(e) => return Err(e),
            };
            sum += model.probability(matrix, &embedded)?;
            used += 1;
        }
        scores.push(ClassScore {
            class: class.to_string(),
            score: if used == 0 { 0.0 } else { sum / used as f64 },
            unscored: used == 0,
        });
    }
    Ok(ClassScores(scores))
}

/// Every class scoring strictly above `threshold`.
pub fn classify_multilabel(scores: &ClassScores, threshold: f64) -> BTreeSet<String> {
    scores
        .iter()
        .filter(|s| s.score > threshold)
        .map(|s| s.class.clone())
        .collect()
}

/// The best-scoring class; ties go to the class listed first.
pub fn classify_single(scores: &ClassScores) -> Option<&str> {
    let mut best: Option<&ClassScore> = None;
    for s in scores.iter() {
        if best.is_none_or(|b| s.score > b.score) {
            best = Some(s);
        }
    }
    best.map(|s| s.class.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    Single,
    Multilabel { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl ClassCounts {
    /// `None` when the class was never predicted.
    pub fn precision(&self) -> Option<f64> {
        let predicted = self.true_positive + self.false_positive;
        (predicted > 0).then(|| self.true_positive as f64 / predicted as f64)
    }

    /// `None` when the class never occurs in the gold labels.
    pub fn recall(&self) -> Option<f64> {
        let actual = self.true_positive + self.false_negative;
        (actual > 0).then(|| self.true_positive as f64 / actual as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub accuracy: f64,
    pub total: usize,
    pub correct: usize,
    /// Tree order.
    pub classes: Vec<String>,
    pub per_class: Vec<ClassCounts>,
    /// `confusion[gold][predicted]`; single-label mode only.
    pub confusion: Option<Vec<Vec<usize>>>,
}

/// Scores a labeled dataset against precomputed class scores.
///
/// `scored` pairs each item's class scores with its gold class.
pub fn evaluate_scores<'a, I>(tree: &CategoryTree, mode: EvalMode, scored: I) -> Result<EvalReport>
where
    I: IntoIterator<Item = (ClassScores, &'a str)>,
{
    let k = tree.len();
    let mut per_class = vec![ClassCounts::default(); k];
    let mut confusion = vec![vec![0usize; k]; k];
    let (mut total, mut correct) = (0usize, 0usize);
    for (scores, gold) in scored {
        let gold_idx = tree
            .position(gold)
            .ok_or_else(|| Error::UnknownLabel(gold.to_string()))?;
        total += 1;
        match mode {
            EvalMode::Single => {
                let predicted = classify_single(&scores).ok_or(Error::EmptyEvaluationSet)?;
                let pred_idx = tree
                    .position(predicted)
                    .ok_or_else(|| Error::UnknownLabel(predicted.to_string()))?;
                confusion[gold_idx][pred_idx] += 1;
                if pred_idx == gold_idx {
                    correct += 1;
                    per_class[gold_idx].true_positive += 1;
                } else {
                    per_class[pred_idx].false_positive += 1;
                    per_class[gold_idx].false_negative += 1;
                }
            }
            EvalMode::Multilabel { threshold } => {
                let predicted = classify_multilabel(&scores, threshold);
                if predicted.len() == 1 && predicted.contains(gold) {
                    correct += 1;
                }
                for (idx, class) in tree.class_names().enumerate() {
                    match (predicted.contains(class), idx == gold_idx) {
                        (true, true) => per_class[idx].true_positive += 1,
                        (true, false) => per_class[idx].false_positive += 1,
                        (false, true) => per_class[idx].false_negative += 1,
                        (false, false) => {}
                    }
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyEvaluationSet);
    }
    Ok(EvalReport {
        mode,
        accuracy: correct as f64 / total as f64,
        total,
        correct,
        classes: tree.class_names().map(str::to_string).collect(),
        per_class,
        confusion: matches!(mode, EvalMode::Single).then_some(confusion),
    })
}

/// Classifies every dataset sentence with `tree` and compares against the
/// gold class. Multi-label mode counts exact matches of the predicted set
/// against the singleton gold set.
pub fn evaluate_dataset(
    model: &RelatednessModel,
    store: &EmbeddingStore,
    dataset: &crate::datasets::LabeledDataset,
    tree: &CategoryTree,
    mode: EvalMode,
    target_length: usize,
) -> Result<EvalReport> {
    if let Some((_, label)) = dataset
        .items()
        .iter()
        .find(|(_, l)| tree.position(l).is_none())
    {
        return Err(Error::UnknownLabel(label.clone()));
    }
    let scored = dataset
        .items()
        .iter()
        .map(|(text, gold)| {
            class_scores(model, store, text, tree, target_length).map(|s| (s, gold.as_str()))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_scores(tree, mode, scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> ClassScores {
        ClassScores::from_pairs(pairs.iter().map(|&(c, s)| (c, s)))
    }

    #[test]
    fn multilabel_threshold() {
        let s = scores(&[("business", 0.7), ("technology", 0.4)]);
        assert_eq!(
            classify_multilabel(&s, 0.5),
            BTreeSet::from(["business".to_string()])
        );
        assert_eq!(classify_multilabel(&s, 0.0).len(), 2);
        assert!(classify_multilabel(&s, 1.0).is_empty());
        assert_eq!(classify_multilabel(&s, 0.7).len(), 0);
    }

    #[test]
    fn single_label_ties() {
        assert_eq!(
            classify_single(&scores(&[("a", 0.9), ("b", 0.1)])),
            Some("a")
        );
        assert_eq!(
            classify_single(&scores(&[("a", 0.5), ("b", 0.5)])),
            Some("a")
        );
        assert_eq!(
            classify_single(&scores(&[("a", 0.2), ("b", 0.5), ("c", 0.5)])),
            Some("b")
        );
        assert_eq!(classify_single(&ClassScores(vec![])), None);
    }

    #[test]
    fn tree_validation() {
        let ok = CategoryTree::new(vec![("a".into(), vec!["x".into()])]);
        assert!(ok.is_ok());
        assert!(matches!(
            CategoryTree::new(vec![
                ("a".into(), vec!["x".into()]),
                ("a".into(), vec!["y".into()])
            ]),
            Err(Error::DuplicateClass(_))
        ));
        assert!(matches!(
            CategoryTree::new(vec![("a".into(), vec![])]),
            Err(Error::EmptyTagList { .. })
        ));
        assert!(CategoryTree::new(vec![]).is_err());
    }

    fn tree(names: &[&str]) -> CategoryTree {
        CategoryTree::new(
            names
                .iter()
                .map(|n| (n.to_string(), vec![n.to_string()]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn four_item_tally() {
        let t = tree(&["a", "b"]);
        let items = vec![
            (scores(&[("a", 0.9), ("b", 0.1)]), "a"),
            (scores(&[("a", 0.2), ("b", 0.8)]), "b"),
            (scores(&[("a", 0.6), ("b", 0.3)]), "b"),
            (scores(&[("a", 0.7), ("b", 0.7)]), "a"),
        ];
        let r = evaluate_scores(&t, EvalMode::Single, items.clone()).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.confusion.as_ref().unwrap(), &vec![vec![2, 0], vec![1, 1]]);
        assert_eq!(
            r.per_class[0],
            ClassCounts {
                true_positive: 2,
                false_positive: 1,
                false_negative: 0
            }
        );
        assert_eq!(
            r.per_class[1],
            ClassCounts {
                true_positive: 1,
                false_positive: 0,
                false_negative: 1
            }
        );
        assert_eq!(r.per_class[0].precision(), Some(2.0 / 3.0));
        assert_eq!(r.per_class[1].recall(), Some(0.5));

        // multi-label at 0.5: {a}, {b}, {a}, {a, b}
        let r =
            evaluate_scores(&t, EvalMode::Multilabel { threshold: 0.5 }, items.clone()).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!(r.confusion.is_none());
        let r = evaluate_scores(&t, EvalMode::Multilabel { threshold: 1.0 }, items).unwrap();
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn unknown_gold_label() {
        let t = tree(&["a", "b"]);
        let items = vec![(scores(&[("a", 0.9), ("b", 0.1)]), "sports")];
        assert!(matches!(
            evaluate_scores(&t, EvalMode::Single, items),
            Err(Error::UnknownLabel(_))
        ));
    }
}
