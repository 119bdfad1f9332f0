//! Spans and the word tokenizer shared by the reader and the retrieval index.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

/// Half-open byte range into a UTF-8 string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub const fn len(&self) -> usize {
        self.end - self.start
    }

    pub const fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub const fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub const fn shift(self, offset: usize) -> Span {
        Span::new(self.start + offset, self.end + offset)
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    /// Slices `text`, returning `None` when the span is out of bounds or splits a character.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        text.get(self.range())
    }
}

/// A token with its byte span in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub span: Span,
}

/// Splits `text` into maximal runs of alphanumeric characters.
///
/// Everything else (whitespace, punctuation, quotes) separates tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            tokens.push(Token {
                span: Span::new(s, i),
            });
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            span: Span::new(s, text.len()),
        });
    }
    tokens
}

/// Lowercased token strings of `text`.
pub fn terms(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .map(|t| text[t.span.range()].to_lowercase())
        .collect()
}

/// Number of tokens in `text`.
pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}
