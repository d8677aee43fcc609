//! Pretrained word embeddings: loading, sentence matrices and tag vectors.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::text::{tokenize, TokenSequence};

/// Dimensionality of the usual pretrained vectors.
pub const DEFAULT_EMBED_DIM: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingFormat {
    #[default]
    Text,
    Word2VecBinary,
}

/// What happens to sentence words missing from the vocabulary.
///
/// Sentence matrices always keep one row per token, so `Skip` behaves like
/// `Zero` there and is counted in [`EmbeddingStore::coerced_skips`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    #[default]
    Zero,
    Skip,
}

/// Word-to-vector table. Immutable once loaded.
#[derive(Debug)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    vectors: Vec<f32>,
    oov_policy: OovPolicy,
    // fine-tuned sentence-side vectors; tags always read `vectors`
    sentence_overrides: HashMap<String, Vec<f64>>,
    coerced_skips: AtomicUsize,
}

/// One embedding row per sentence token, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    dim: usize,
    data: Vec<f64>,
    oov: usize,
}

impl SentenceMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "sentence matrix needs at least one nonempty row".into(),
            ));
        }
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            crate::error::ensure_len("sentence row", dim, row.as_ref().len())?;
            data.extend_from_slice(row.as_ref());
        }
        Ok(SentenceMatrix { dim, data, oov: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Number of rows that came from out-of-vocabulary tokens.
    pub fn oov_count(&self) -> usize {
        self.oov
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        for k in 0..self.dim {
            self.data.swap(a * self.dim + k, b * self.dim + k);
        }
    }
}

/// Embedding of a (possibly multi-word) tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TagEmbedding(pub Vec<f64>);

impl TagEmbedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl EmbeddingStore {
    /// Builds a store from `(word, vector)` entries. Later duplicates are ignored.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut store = EmbeddingStore::empty(dim)?;
        for (line, (word, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::MalformedEmbeddingFile {
                    line: line + 1,
                    reason: format!("expected {dim} components, found {}", vector.len()),
                });
            }
            store.insert(word.into(), &vector);
        }
        Ok(store)
    }

    fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedEmbeddingFile {
                line: 1,
                reason: "embedding dimension must be at least 1".into(),
            });
        }
        Ok(EmbeddingStore {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            vectors: Vec::new(),
            oov_policy: OovPolicy::Zero,
            sentence_overrides: HashMap::new(),
            coerced_skips: AtomicUsize::new(0),
        })
    }

    fn insert(&mut self, word: String, vector: &[f32]) {
        if self.index.contains_key(&word) {
            return;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.vectors.extend_from_slice(vector);
    }

    pub fn with_oov_policy(mut self, policy: OovPolicy) -> Self {
        self.oov_policy = policy;
        self
    }

    /// Replaces the sentence-side vectors of the given words. Tag embeddings
    /// are unaffected.
    pub fn with_sentence_overrides(mut self, overrides: HashMap<String, Vec<f64>>) -> Result<Self> {
        for v in overrides.values() {
            crate::error::ensure_len("sentence override", self.dim, v.len())?;
        }
        self.sentence_overrides = overrides;
        Ok(self)
    }

    pub fn sentence_overrides(&self) -> &HashMap<String, Vec<f64>> {
        &self.sentence_overrides
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov_policy
    }

    /// How many out-of-vocabulary sentence tokens were zero-filled although
    /// the policy asked to skip them.
    pub fn coerced_skips(&self) -> usize {
        self.coerced_skips.load(Ordering::Relaxed)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Words in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Reads embeddings from `source` in the given format.
    pub fn load<R: BufRead>(source: R, format: EmbeddingFormat) -> Result<Self> {
        match format {
            EmbeddingFormat::Text => read_text(source),
            EmbeddingFormat::Word2VecBinary => read_word2vec_binary(source),
        }
    }

    /// Writes one `word v1 ... vd` line per entry.
    pub fn write_text<W: Write>(&self, mut sink: W) -> Result<()> {
        for (i, word) in self.words.iter().enumerate() {
            write!(sink, "{word}")?;
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(sink, " {v}")?;
            }
            writeln!(sink)?;
        }
        Ok(())
    }

    pub fn write_word2vec_binary<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(sink, "{word} ")?;
            for &v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                sink.write_f32::<LittleEndian>(v)?;
            }
            sink.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Stacks the embedding of every token; unknown tokens become zero rows.
    pub fn embed_sequence(&self, seq: &TokenSequence) -> SentenceMatrix {
        self.embed_sequence_with(seq, &self.sentence_overrides)
    }

    pub(crate) fn embed_sequence_with(
        &self,
        seq: &TokenSequence,
        overrides: &HashMap<String, Vec<f64>>,
    ) -> SentenceMatrix {
        let mut data = vec![0.0; seq.len() * self.dim];
        let mut oov = 0;
        for (row, token) in data.chunks_exact_mut(self.dim).zip(seq.iter()) {
            if let Some(v) = overrides.get(token.as_str()) {
                row.copy_from_slice(v);
            } else if let Some(v) = self.get(token) {
                row.iter_mut().zip(v).for_each(|(r, &x)| *r = x as f64);
            } else {
                oov += 1;
            }
        }
        if self.oov_policy == OovPolicy::Skip && oov > 0 {
            self.coerced_skips.fetch_add(oov, Ordering::Relaxed);
        }
        SentenceMatrix {
            dim: self.dim,
            data,
            oov,
        }
    }

    /// Mean of the vectors of the tag's in-vocabulary words.
    pub fn embed_tag(&self, tag: &str) -> Result<TagEmbedding> {
        let mut sum = vec![0.0f64; self.dim];
        let mut found = 0usize;
        for word in tokenize(tag) {
            if let Some(v) = self.get(&word) {
                for (s, &x) in sum.iter_mut().zip(v) {
                    *s += x as f64;
                }
                found += 1;
            }
        }
        if found == 0 {
            return Err(Error::AllWordsOutOfVocabulary(tag.to_string()));
        }
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        Ok(TagEmbedding(sum))
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedEmbeddingFile {
        line,
        reason: reason.into(),
    }
}

fn read_text<R: BufRead>(source: R) -> Result<EmbeddingStore> {
    let mut store: Option<EmbeddingStore> = None;
    let mut row = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();

        // optional word2vec-style "count dim" header
        if lineno == 1
            && rest.len() == 1
            && word.parse::<usize>().is_ok()
            && rest[0].parse::<usize>().is_ok()
        {
            continue;
        }

        row.clear();
        for field in &rest {
            let v: f32 = field
                .parse()
                .map_err(|_| malformed(lineno, format!("unparsable float {field:?}")))?;
            row.push(v);
        }
        let store = match &mut store {
            Some(s) => s,
            None => store.insert(
                EmbeddingStore::empty(row.len())
                    .map_err(|_| malformed(lineno, "vector has no components"))?,
            ),
        };
        if row.len() != store.dim {
            return Err(malformed(
                lineno,
                format!("expected {} components, found {}", store.dim, row.len()),
            ));
        }
        store.insert(word.to_string(), &row);
    }
    store.ok_or_else(|| malformed(0, "no embeddings found"))
}

fn read_token<R: BufRead>(source: &mut R, delim: u8) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    source.read_until(delim, &mut buf)?;
    if buf.last() == Some(&delim) {
        buf.pop();
    }
    Ok(buf)
}

fn read_word2vec_binary<R: BufRead>(mut source: R) -> Result<EmbeddingStore> {
    let header = read_token(&mut source, b'\n')?;
    let header = String::from_utf8(header).map_err(|_| malformed(1, "header is not UTF-8"))?;
    let mut parts = header.split_whitespace();
    let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>()
                .map_err(|_| malformed(1, "bad word count"))?,
            d.parse::<usize>()
                .map_err(|_| malformed(1, "bad dimension"))?,
        ),
        _ => return Err(malformed(1, "expected \"count dim\" header")),
    };
    let mut store = EmbeddingStore::empty(dim)?;
    let mut vector = vec![0f32; dim];
    for record in 1..=count {
        // skip the separator left after the previous vector
        loop {
            let buf = source.fill_buf()?;
            match buf.first() {
                Some(b'\n' | b' ') => source.consume(1),
                Some(_) => break,
                None => return Err(malformed(record + 1, "truncated: missing record")),
            }
        }
        let word = read_token(&mut source, b' ')?;
        let word =
            String::from_utf8(word).map_err(|_| malformed(record + 1, "word is not UTF-8"))?;
        if word.is_empty() {
            return Err(malformed(record + 1, "empty word"));
        }
        source
            .read_f32_into::<LittleEndian>(&mut vector)
            .map_err(|_| malformed(record + 1, format!("truncated vector for {word:?}")))?;
        store.insert(word, &vector);
    }
    // tolerate a trailing newline, nothing else
    let mut rest = Vec::new();
    source.read_to_end(&mut rest)?;
    if rest.iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(malformed(count + 2, "trailing data after last record"));
    }
    Ok(store)
}
