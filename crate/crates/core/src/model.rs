//! The three sentence–tag relatedness architectures.
//!
//! All parameters of a model live in one flat vector; [`ParamBlock`]s name
//! the slices. The block order is fixed per architecture and is also the
//! order used on disk by [`crate::checkpoint`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{SentenceMatrix, TagEmbedding};
use crate::error::{ensure_len, Error, Result};
use crate::numeric::{
    bce_loss, dense_backward, dense_forward, lstm_backward, lstm_forward, sigmoid, DenseCache,
    LstmCache, LstmWeights, MatRef,
};

/// Hidden size used by the LSTM architectures unless configured otherwise.
pub const DEFAULT_HIDDEN_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Mean of the sentence rows concatenated with the tag, then one dense layer.
    MeanConcat,
    /// LSTM over the sentence; last hidden state concatenated with the tag.
    SentenceLstm,
    /// LSTM over `[tag ; word]` at every step; last hidden state classified.
    TagConditionedLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::MeanConcat,
        Architecture::SentenceLstm,
        Architecture::TagConditionedLstm,
    ];

    pub fn id(self) -> u32 {
        match self {
            Architecture::MeanConcat => 1,
            Architecture::SentenceLstm => 2,
            Architecture::TagConditionedLstm => 3,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Architecture::MeanConcat),
            2 => Ok(Architecture::SentenceLstm),
            3 => Ok(Architecture::TagConditionedLstm),
            other => Err(Error::InvalidArgument(format!(
                "unknown architecture id {other}"
            ))),
        }
    }

    pub fn uses_lstm(self) -> bool {
        self != Architecture::MeanConcat
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arch{}", self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    fn is_bias(&self) -> bool {
        self.name.ends_with(".bias")
    }
}

fn layout(arch: Architecture, embed_dim: usize, hidden_dim: usize) -> Vec<ParamBlock> {
    let (d, h) = (embed_dim, hidden_dim);
    let shapes: Vec<(&'static str, usize, usize)> = match arch {
        Architecture::MeanConcat => {
            vec![("classifier.weight", 1, 2 * d), ("classifier.bias", 1, 1)]
        }
        Architecture::SentenceLstm => vec![
            ("lstm.input_weight", 4 * h, d),
            ("lstm.recurrent_weight", 4 * h, h),
            ("lstm.bias", 4 * h, 1),
            ("classifier.weight", 1, h + d),
            ("classifier.bias", 1, 1),
        ],
        Architecture::TagConditionedLstm => vec![
            ("lstm.input_weight", 4 * h, 2 * d),
            ("lstm.recurrent_weight", 4 * h, h),
            ("lstm.bias", 4 * h, 1),
            ("classifier.weight", 1, h),
            ("classifier.bias", 1, 1),
        ],
    };
    let mut offset = 0;
    shapes
        .into_iter()
        .map(|(name, rows, cols)| {
            let block = ParamBlock {
                name,
                rows,
                cols,
                offset,
            };
            offset += rows * cols;
            block
        })
        .collect()
}

/// Parameters of one relatedness architecture.
#[derive(Debug, Clone)]
pub struct RelatednessModel {
    arch: Architecture,
    embed_dim: usize,
    hidden_dim: usize,
    seed: u64,
    blocks: Vec<ParamBlock>,
    params: Vec<f64>,
    version: u64,
}

impl PartialEq for RelatednessModel {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch
            && self.embed_dim == other.embed_dim
            && self.hidden_dim == other.hidden_dim
            && self.seed == other.seed
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Intermediate values kept by [`RelatednessModel::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    probability: f64,
    rows: usize,
    classifier: DenseCache,
    lstm: Vec<LstmCache>,
}

impl ForwardCache {
    pub fn probability(&self) -> f64 {
        self.probability
    }
}

/// Gradient of the loss for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Same layout as [`RelatednessModel::params`].
    pub params: Vec<f64>,
    /// One row per sentence token, row-major.
    pub sentence: Vec<f64>,
}

impl RelatednessModel {
    /// Glorot-uniform weights, zero biases and forget-gate bias 1.
    pub fn new(arch: Architecture, embed_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(arch, embed_dim, hidden_dim)?;
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for block in &model.blocks {
            let values = &mut model.params[block.range()];
            if block.is_bias() {
                if block.name == "lstm.bias" {
                    let h = model.hidden_dim;
                    values[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
                }
                continue;
            }
            let limit = (6.0 / (block.rows + block.cols) as f64).sqrt();
            values
                .iter_mut()
                .for_each(|v| *v = rng.random_range(-limit..=limit));
        }
        Ok(model)
    }

    /// Every parameter zero: predicts 0.5 for any input.
    pub fn zeros(arch: Architecture, embed_dim: usize, hidden_dim: usize) -> Result<Self> {
        if embed_dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be at least 1".into(),
            ));
        }
        let hidden_dim = if arch.uses_lstm() {
            if hidden_dim == 0 {
                return Err(Error::InvalidArgument(
                    "hidden dimension must be at least 1".into(),
                ));
            }
            hidden_dim
        } else {
            0
        };
        let blocks = layout(arch, embed_dim, hidden_dim);
        let len = blocks.last().map_or(0, |b| b.offset + b.len());
        Ok(RelatednessModel {
            arch,
            embed_dim,
            hidden_dim,
            seed: 0,
            blocks,
            params: vec![0.0; len],
            version: 0,
        })
    }

    /// Rebuilds a model from stored parts.
    pub fn from_parts(
        arch: Architecture,
        embed_dim: usize,
        hidden_dim: usize,
        seed: u64,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self::zeros(arch, embed_dim, hidden_dim)?;
        ensure_len("model parameters", model.params.len(), params.len())?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        model.params = params;
        model.seed = seed;
        Ok(model)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    /// Zero for [`Architecture::MeanConcat`].
    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.params[b.range()])
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn slice(&self, name: &str) -> &[f64] {
        self.block(name)
            .expect("block exists for this architecture")
    }

    fn classifier(&self) -> (MatRef<'_>, &[f64]) {
        let w = self.slice("classifier.weight");
        (
            MatRef::from_parts(1, w.len(), w),
            self.slice("classifier.bias"),
        )
    }

    fn lstm(&self) -> LstmWeights<'_> {
        let h = self.hidden_dim;
        let input = self.slice("lstm.input_weight");
        LstmWeights {
            input: MatRef::from_parts(4 * h, input.len() / (4 * h), input),
            recurrent: MatRef::from_parts(4 * h, h, self.slice("lstm.recurrent_weight")),
            bias: self.slice("lstm.bias"),
        }
    }

    fn check_inputs(&self, sentence: &SentenceMatrix, tag: &TagEmbedding) -> Result<()> {
        ensure_len("sentence embedding dim", self.embed_dim, sentence.dim())?;
        ensure_len("tag embedding dim", self.embed_dim, tag.dim())?;
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        Ok(())
    }

    /// Probability that `sentence` is related to `tag`, with the cache
    /// needed by [`backward`](Self::backward).
    pub fn forward(
        &self,
        sentence: &SentenceMatrix,
        tag: &TagEmbedding,
    ) -> Result<(f64, ForwardCache)> {
        self.check_inputs(sentence, tag)?;
        let d = self.embed_dim;
        let n = sentence.len();
        let mut lstm_caches = Vec::new();
        let features: Vec<f64> = match self.arch {
            Architecture::MeanConcat => {
                let mut mean = vec![0.0; d];
                for row in sentence.rows() {
                    mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                mean.extend_from_slice(tag.as_slice());
                mean
            }
            Architecture::SentenceLstm => {
                let (state, caches) = lstm_forward(&self.lstm(), sentence.rows())?;
                lstm_caches = caches;
                let mut x = state.h;
                x.extend_from_slice(tag.as_slice());
                x
            }
            Architecture::TagConditionedLstm => {
                let steps: Vec<Vec<f64>> = sentence
                    .rows()
                    .map(|row| [tag.as_slice(), row].concat())
                    .collect();
                let (state, caches) = lstm_forward(&self.lstm(), steps.iter().map(Vec::as_slice))?;
                lstm_caches = caches;
                state.h
            }
        };
        let (w, b) = self.classifier();
        let (logit, classifier) = dense_forward(w, b, &features)?;
        let probability = sigmoid(logit[0]);
        let cache = ForwardCache {
            version: self.version,
            probability,
            rows: n,
            classifier,
            lstm: lstm_caches,
        };
        Ok((probability, cache))
    }

    pub fn probability(&self, sentence: &SentenceMatrix, tag: &TagEmbedding) -> Result<f64> {
        self.forward(sentence, tag).map(|(p, _)| p)
    }

    /// Loss of one example.
    pub fn loss(&self, sentence: &SentenceMatrix, tag: &TagEmbedding, label: f64) -> Result<f64> {
        self.probability(sentence, tag).map(|p| bce_loss(p, label))
    }

    /// Gradients of the binary cross-entropy of the cached prediction
    /// against `label`.
    pub fn backward(&self, cache: &ForwardCache, label: f64) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(Error::StaleCache {
                cache: cache.version,
                model: self.version,
            });
        }
        let d = self.embed_dim;
        let h = self.hidden_dim;
        let n = cache.rows;
        let mut params = vec![0.0; self.params.len()];
        let mut sentence = vec![0.0; n * d];

        // dL/dlogit for sigmoid followed by cross-entropy
        let grad_logit = cache.probability - label;
        let (w, _) = self.classifier();
        let dense = dense_backward(w, &cache.classifier, &[grad_logit])?;
        self.write_block(&mut params, "classifier.weight", &dense.weight);
        self.write_block(&mut params, "classifier.bias", &dense.bias);

        let grad_h = match self.arch {
            Architecture::MeanConcat => {
                let per_row: Vec<f64> = dense.input[..d].iter().map(|g| g / n as f64).collect();
                for row in sentence.chunks_exact_mut(d) {
                    row.copy_from_slice(&per_row);
                }
                return Ok(Gradients { params, sentence });
            }
            Architecture::SentenceLstm => &dense.input[..h],
            Architecture::TagConditionedLstm => &dense.input[..],
        };
        let (lstm, inputs) = lstm_backward(&self.lstm(), &cache.lstm, grad_h)?;
        self.write_block(&mut params, "lstm.input_weight", &lstm.input);
        self.write_block(&mut params, "lstm.recurrent_weight", &lstm.recurrent);
        self.write_block(&mut params, "lstm.bias", &lstm.bias);
        let offset = if self.arch == Architecture::TagConditionedLstm {
            d
        } else {
            0
        };
        for (row, gx) in sentence.chunks_exact_mut(d).zip(&inputs) {
            row.copy_from_slice(&gx[offset..offset + d]);
        }
        Ok(Gradients { params, sentence })
    }

    fn write_block(&self, target: &mut [f64], name: &str, values: &[f64]) {
        let block = self
            .blocks
            .iter()
            .find(|b| b.name == name)
            .expect("known block");
        target[block.range()].copy_from_slice(values);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::finite_diff::{central_difference, max_relative_error, DEFAULT_STEP};

    fn random_inputs(d: usize, n: usize, seed: u64) -> (SentenceMatrix, TagEmbedding) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let tag = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        (SentenceMatrix::from_rows(&rows).unwrap(), TagEmbedding(tag))
    }

    #[test]
    fn zero_models_predict_half() {
        let (s, t) = random_inputs(4, 6, 1);
        for arch in Architecture::ALL {
            let m = RelatednessModel::zeros(arch, 4, 5).unwrap();
            assert_eq!(m.probability(&s, &t).unwrap(), 0.5);
        }
    }

    #[test]
    fn mean_concat_by_hand() {
        let mut m = RelatednessModel::zeros(Architecture::MeanConcat, 1, 0).unwrap();
        m.params_mut()[..2].copy_from_slice(&[1.0, 1.0]);
        let s = SentenceMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let p = m.probability(&s, &TagEmbedding(vec![2.0])).unwrap();
        // mean 2, logit 2 + 2
        assert!((p - 0.982_013_790_037_908_4).abs() < 1e-12);
    }

    #[test]
    fn layouts_match_dimensions() {
        let m = RelatednessModel::new(Architecture::SentenceLstm, 3, 2, 0).unwrap();
        let shapes: Vec<_> = m
            .blocks()
            .iter()
            .map(|b| (b.name, b.rows, b.cols))
            .collect();
        assert_eq!(
            shapes,
            [
                ("lstm.input_weight", 8, 3),
                ("lstm.recurrent_weight", 8, 2),
                ("lstm.bias", 8, 1),
                ("classifier.weight", 1, 5),
                ("classifier.bias", 1, 1),
            ]
        );
        assert_eq!(m.params().len(), 24 + 16 + 8 + 5 + 1);
        assert_eq!(&m.block("lstm.bias").unwrap()[2..4], &[1.0, 1.0]);
        assert_eq!(m.block("classifier.bias").unwrap(), &[0.0]);

        let m3 = RelatednessModel::new(Architecture::TagConditionedLstm, 3, 2, 0).unwrap();
        assert_eq!(m3.blocks()[0].cols, 6);
        assert_eq!(m3.blocks()[3].cols, 2);
        let m1 = RelatednessModel::new(Architecture::MeanConcat, 3, 99, 0).unwrap();
        assert_eq!(m1.hidden_dim(), 0);
        assert_eq!(m1.params().len(), 7);
    }

    #[test]
    fn architectures_differ() {
        let (s, t) = random_inputs(4, 6, 7);
        for seed in 0..10 {
            let p2 = RelatednessModel::new(Architecture::SentenceLstm, 4, 5, seed)
                .unwrap()
                .probability(&s, &t)
                .unwrap();
            let p3 = RelatednessModel::new(Architecture::TagConditionedLstm, 4, 5, seed + 100)
                .unwrap()
                .probability(&s, &t)
                .unwrap();
            assert_ne!(p2, p3);
        }
    }

    #[test]
    fn bias_gradient_is_residual() {
        let mut m = RelatednessModel::zeros(Architecture::MeanConcat, 1, 0).unwrap();
        m.params_mut().copy_from_slice(&[0.3, -0.2, 0.1]);
        let s = SentenceMatrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let (p, cache) = m.forward(&s, &TagEmbedding(vec![0.5])).unwrap();
        let g = m.backward(&cache, 1.0).unwrap();
        assert!((g.params[2] - (p - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_has_no_gradient() {
        let mut m = RelatednessModel::zeros(Architecture::MeanConcat, 2, 0).unwrap();
        m.params_mut()[4] = 40.0;
        let (s, t) = random_inputs(2, 3, 3);
        let (_, cache) = m.forward(&s, &t).unwrap();
        let g = m.backward(&cache, 1.0).unwrap();
        assert!(g.params.iter().chain(&g.sentence).all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut m = RelatednessModel::new(Architecture::MeanConcat, 2, 0, 1).unwrap();
        let (s, t) = random_inputs(2, 3, 3);
        let (_, cache) = m.forward(&s, &t).unwrap();
        m.params_mut()[0] += 1.0;
        assert!(matches!(
            m.backward(&cache, 1.0),
            Err(Error::StaleCache { .. })
        ));
    }

    #[test]
    fn shape_mismatch() {
        let m = RelatednessModel::new(Architecture::TagConditionedLstm, 3, 2, 1).unwrap();
        let (s, t) = random_inputs(4, 3, 3);
        assert!(matches!(
            m.forward(&s, &t),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for arch in Architecture::ALL {
            let model = RelatednessModel::new(arch, 3, 4, 11).unwrap();
            let (s, t) = random_inputs(3, 4, 12);
            let (_, cache) = model.forward(&s, &t).unwrap();
            let g = model.backward(&cache, 1.0).unwrap();

            let numeric = central_difference(
                |p| {
                    let m = RelatednessModel::from_parts(arch, 3, 4, 0, p.to_vec()).unwrap();
                    m.loss(&s, &t, 1.0).unwrap()
                },
                model.params(),
                DEFAULT_STEP,
            );
            assert!(max_relative_error(&g.params, &numeric) < 1e-4, "{arch}");

            let numeric = central_difference(
                |rows| {
                    let mut s2 = s.clone();
                    s2.as_mut_slice().copy_from_slice(rows);
                    model.loss(&s2, &t, 1.0).unwrap()
                },
                s.as_slice(),
                DEFAULT_STEP,
            );
            assert!(
                max_relative_error(&g.sentence, &numeric) < 1e-4,
                "{arch} sentence"
            );
        }
    }
}
