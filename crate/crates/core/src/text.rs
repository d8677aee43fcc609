//! Tokenization and fixed-length sentence normalization.
//!
//! Every sentence fed to a relatedness model is cut or padded to exactly
//! [`DEFAULT_TARGET_LENGTH`] tokens. Short sentences are padded by cycling
//! through the sentence again from its first word.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Fixed sentence length used by the models unless configured otherwise.
pub const DEFAULT_TARGET_LENGTH: usize = 28;

/// Lowercases `text`, splits on whitespace and trims non-alphanumeric
/// characters from both ends of every token. Tokens that end up empty are
/// dropped, so inner punctuation such as the apostrophe in "gop's" survives.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A sentence of exactly `len()` tokens, none of them empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

/// Truncates `tokens` to `target_length`, or repeats the whole sequence
/// cyclically from its start until it is `target_length` long.
pub fn normalize_length<S: AsRef<str>>(
    tokens: &[S],
    target_length: usize,
) -> Result<TokenSequence> {
    if target_length == 0 {
        return Err(Error::InvalidArgument(
            "target length must be at least 1".into(),
        ));
    }
    let tokens: Vec<&str> = tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    let tokens = tokens
        .iter()
        .cycle()
        .take(target_length)
        .map(|t| t.to_string())
        .collect();
    Ok(TokenSequence { tokens })
}

/// `tokenize` followed by `normalize_length`.
pub fn prepare(text: &str, target_length: usize) -> Result<TokenSequence> {
    normalize_length(&tokenize(text), target_length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str], n: usize) -> Vec<String> {
        normalize_length(tokens, n).unwrap().into_tokens()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Obama said that GOP's efforts"),
            ["obama", "said", "that", "gop's", "efforts"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Bitcoin, futures!"), ["bitcoin", "futures"]);
        assert_eq!(tokenize("  -- \t \"quoted\" ... "), ["quoted"]);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(seq(&["a", "b", "c"], 6), ["a", "b", "c", "a", "b", "c"]);
        assert_eq!(seq(&["a", "b"], 2), ["a", "b"]);
        assert_eq!(seq(&["a", "b", "c"], 4), ["a", "b", "c", "a"]);

        let long: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let out = normalize_length(&long, DEFAULT_TARGET_LENGTH).unwrap();
        assert_eq!(out.len(), 28);
        assert_eq!(out.tokens(), &long[..28]);
    }

    #[test]
    fn normalize_rejects_empty() {
        let empty: [&str; 0] = [];
        assert!(matches!(
            normalize_length(&empty, 28),
            Err(Error::EmptySentence)
        ));
        assert!(matches!(prepare("?!", 28), Err(Error::EmptySentence)));
        assert!(normalize_length(&["a"], 0).is_err());
    }

    proptest! {
        #[test]
        fn normalized_length_is_exact(
            tokens in prop::collection::vec("[a-z]{1,6}", 1..60),
            target in 1usize..80,
        ) {
            let out = normalize_length(&tokens, target).unwrap();
            prop_assert_eq!(out.len(), target);
            prop_assert!(out.iter().all(|t| !t.is_empty() && tokens.contains(t)));

            let again = normalize_length(out.tokens(), target).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
