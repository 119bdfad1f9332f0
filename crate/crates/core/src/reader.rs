//! Windowed extractive reading.
//!
//! A [`TextualContext`] is cut into overlapping token windows, each window is
//! handed to a [`Reader`], and the per-window candidates are remapped to
//! context offsets, validated, merged and ranked.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::normalize_cell;
use crate::text::{self, Span};
use crate::verbalize::{Origin, Segment, TextualContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReaderError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid reader parameters: {0}")]
    InvalidParams(&'static str),
    #[error("reader unavailable while reading window {window}: {message}")]
    Unavailable { window: usize, message: String },
    #[error("reader rejected window {window}: {message}")]
    Rejected { window: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReaderParams {
    pub max_seq_len: usize,
    pub doc_stride: usize,
    pub top_k: usize,
    pub max_answer_len: usize,
    pub max_question_len: usize,
}

impl Default for ReaderParams {
    fn default() -> Self {
        ReaderParams {
            max_seq_len: 512,
            doc_stride: 128,
            top_k: 10,
            max_answer_len: 15,
            max_question_len: 64,
        }
    }
}

impl ReaderParams {
    pub fn validate(&self) -> Result<(), ReaderError> {
        if self.doc_stride == 0 || self.doc_stride >= self.max_seq_len {
            return Err(ReaderError::InvalidParams(
                "doc_stride must be positive and smaller than max_seq_len",
            ));
        }
        if self.top_k == 0 {
            return Err(ReaderError::InvalidParams("top_k must be at least 1"));
        }
        if self.max_answer_len == 0 {
            return Err(ReaderError::InvalidParams(
                "max_answer_len must be at least 1",
            ));
        }
        if self.max_question_len == 0 {
            return Err(ReaderError::InvalidParams(
                "max_question_len must be at least 1",
            ));
        }
        Ok(())
    }
}

/// A contiguous run of context tokens handed to a reader.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub index: usize,
    /// Token index range `[start, end)`.
    pub tokens: (usize, usize),
    /// Byte span in the context text.
    pub span: Span,
    pub context: &'a TextualContext,
}

impl<'a> Window<'a> {
    pub fn text(&self) -> &'a str {
        &self.context.text[self.span.range()]
    }

    /// Context segments lying entirely inside this window.
    pub fn segments(&self) -> impl Iterator<Item = &'a Segment> + 'a {
        let span = self.span;
        self.context
            .segments
            .iter()
            .filter(move |s| span.contains(&s.span))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub text: String,
    pub score: f64,
    /// Byte span: window-local when produced by a [`Reader`], context-global
    /// once returned from [`read`].
    pub span: Span,
    pub window: usize,
    pub provenance: Option<Origin>,
}

impl AnswerCandidate {
    pub fn new(text: impl Into<String>, score: f64, span: Span) -> Self {
        AnswerCandidate {
            text: text.into(),
            score,
            span,
            window: 0,
            provenance: None,
        }
    }
}

/// Maps a question and one context window to scored candidates.
///
/// Candidate spans are relative to `window.text()`.
pub trait Reader {
    fn read_window(
        &self,
        question: &str,
        window: &Window<'_>,
        params: &ReaderParams,
    ) -> Result<Vec<AnswerCandidate>, ReaderError>;

    /// Whether several `read_window` calls may be in flight at once.
    fn supports_concurrency(&self) -> bool {
        false
    }
}

/// Token ranges of the windows covering `n_tokens` tokens.
///
/// Consecutive windows overlap by exactly `doc_stride` tokens; the last
/// window may be shorter. Requires `doc_stride < max_seq_len`.
pub fn window_ranges(
    n_tokens: usize,
    max_seq_len: usize,
    doc_stride: usize,
) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    if n_tokens == 0 {
        return ranges;
    }
    let step = max_seq_len - doc_stride;
    let mut start = 0;
    loop {
        let end = (start + max_seq_len).min(n_tokens);
        ranges.push((start, end));
        if end == n_tokens {
            return ranges;
        }
        start += step;
    }
}

/// Splits the context into token windows.
///
/// Each window's byte span runs from its first token up to the start of the
/// first token after it, so the first window begins at offset 0 and the last
/// one ends at the end of the text.
pub fn chunk_context<'a>(context: &'a TextualContext, params: &ReaderParams) -> Vec<Window<'a>> {
    let tokens = text::tokenize(&context.text);
    let ranges = window_ranges(tokens.len(), params.max_seq_len, params.doc_stride);
    ranges
        .iter()
        .enumerate()
        .map(|(index, &(start, end))| {
            let from = if start == 0 {
                0
            } else {
                tokens[start].span.start
            };
            let to = tokens.get(end).map_or(context.text.len(), |t| t.span.start);
            Window {
                index,
                tokens: (start, end),
                span: Span::new(from, to),
                context,
            }
        })
        .collect()
}

fn truncate_question(question: &str, max_tokens: usize) -> &str {
    match text::tokenize(question).get(max_tokens.saturating_sub(1)) {
        Some(last) => &question[..last.span.end],
        None => question,
    }
}

fn rank_order(a: &AnswerCandidate, b: &AnswerCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.span.cmp(&b.span))
        .then_with(|| a.text.cmp(&b.text))
        .then(a.window.cmp(&b.window))
}

/// Merges per-window candidate lists.
///
/// Candidates are deduplicated by normalized text, keeping the best scoring
/// one. The result is sorted by descending score, then earlier span, then
/// text, and truncated to `top_k`. Non-finite scores and candidates that
/// normalize to nothing are dropped. The output does not depend on the order
/// of the input lists.
pub fn merge_candidates(
    per_window: Vec<Vec<AnswerCandidate>>,
    top_k: usize,
) -> Vec<AnswerCandidate> {
    let mut best: BTreeMap<String, AnswerCandidate> = BTreeMap::new();
    for candidate in per_window.into_iter().flatten() {
        if !candidate.score.is_finite() {
            continue;
        }
        let key = normalize_cell(&candidate.text);
        if key.is_empty() {
            continue;
        }
        match best.get_mut(&key) {
            Some(kept) => {
                if rank_order(&candidate, kept) == Ordering::Less {
                    *kept = candidate;
                }
            }
            None => {
                best.insert(key, candidate);
            }
        }
    }
    let mut merged: Vec<AnswerCandidate> = best.into_values().collect();
    merged.sort_by(rank_order);
    merged.truncate(top_k);
    merged
}

/// Answers `question` from `context` with `reader`.
///
/// The question is truncated to `max_question_len` tokens. Reader candidates
/// whose span text differs from their `text`, that fall outside their window,
/// or that exceed `max_answer_len` tokens are discarded.
pub fn read<R: Reader + ?Sized>(
    question: &str,
    context: &TextualContext,
    params: &ReaderParams,
    reader: &R,
) -> Result<Vec<AnswerCandidate>, ReaderError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(ReaderError::EmptyQuestion);
    }
    params.validate()?;
    let question = truncate_question(question, params.max_question_len);

    let mut per_window = Vec::new();
    for window in chunk_context(context, params) {
        let local = reader.read_window(question, &window, params)?;
        let mut accepted = Vec::with_capacity(local.len());
        for mut candidate in local {
            if candidate.span.end > window.span.len() || candidate.span.start > candidate.span.end {
                continue;
            }
            let global = candidate.span.shift(window.span.start);
            if global.slice(&context.text) != Some(candidate.text.as_str()) {
                continue;
            }
            let len = text::token_count(&candidate.text);
            if len == 0 || len > params.max_answer_len {
                continue;
            }
            candidate.span = global;
            candidate.window = window.index;
            candidate.provenance = context.segment_containing(global).map(|s| s.origin);
            accepted.push(candidate);
        }
        accepted.sort_by(rank_order);
        per_window.push(accepted);
    }
    Ok(merge_candidates(per_window, params.top_k))
}

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "are", "as", "at", "be", "been", "by", "can", "could", "did",
    "do", "does", "for", "from", "had", "has", "have", "how", "i", "in", "into", "is", "it", "its",
    "many", "me", "much", "of", "on", "or", "s", "should", "tell", "than", "that", "the", "their",
    "them", "then", "there", "these", "this", "those", "to", "was", "we", "were", "what", "when",
    "where", "which", "who", "whom", "whose", "why", "will", "with", "would", "you",
];

fn canonical(term: &str) -> &str {
    match term {
        "highest" | "largest" | "biggest" | "greatest" | "best" | "max" | "maximal" | "top" => {
            "maximum"
        }
        "lowest" | "smallest" | "least" | "worst" | "fewest" | "min" | "minimal" => "minimum",
        "mean" | "avg" => "average",
        "frequent" | "popular" | "usual" | "typical" => "common",
        other => other,
    }
}

fn content_terms(text: &str) -> Vec<String> {
    text::terms(text)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .map(|t| canonical(&t).to_string())
        .collect()
}

type TermVector = BTreeMap<String, f64>;

struct Idf {
    docs: f64,
    df: BTreeMap<String, usize>,
}

impl Idf {
    fn new<'t>(documents: impl Iterator<Item = &'t Vec<String>>) -> Self {
        let mut df = BTreeMap::new();
        let mut docs = 0usize;
        for doc in documents {
            docs += 1;
            let unique: BTreeSet<&String> = doc.iter().collect();
            for term in unique {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
        Idf {
            docs: docs as f64,
            df,
        }
    }

    fn weight(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        libm::log((1.0 + self.docs) / (1.0 + df)) + 1.0
    }

    fn vector(&self, terms: &[String]) -> TermVector {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for t in terms {
            *tf.entry(t.as_str()).or_insert(0) += 1;
        }
        tf.into_iter()
            .map(|(t, n)| (t.to_string(), (1.0 + libm::log(n as f64)) * self.weight(t)))
            .collect()
    }
}

fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, w)| b.get(t).map(|v| w * v)).sum();
    if dot == 0.0 {
        return 0.0;
    }
    let na = libm::sqrt(a.values().map(|w| w * w).sum::<f64>());
    let nb = libm::sqrt(b.values().map(|w| w * w).sum::<f64>());
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Built-in deterministic reader scoring clauses by TF-IDF cosine overlap.
///
/// Each clause of the window is scored as the mean of its own similarity to
/// the question and its sentence's similarity, so clauses of a sentence that
/// mentions a question term get lifted together. A clause proposes its
/// object (or aggregate value), never one already spelled out in the
/// question. `which`/`who` questions instead get the row subject of a clause
/// whose value they mention, and the winner of a max/min aggregate.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalReader;

impl Reader for LexicalReader {
    fn read_window(
        &self,
        question: &str,
        window: &Window<'_>,
        _params: &ReaderParams,
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        Ok(lexical_read(question, window))
    }

    fn supports_concurrency(&self) -> bool {
        true
    }
}

/// Scores the clauses of `window` against `question`; see [`LexicalReader`].
///
/// Candidate spans are window-local. Clauses with zero similarity produce
/// nothing.
pub fn lexical_read(question: &str, window: &Window<'_>) -> Vec<AnswerCandidate> {
    let ctx = window.context;
    let segments: Vec<&Segment> = window.segments().collect();
    if segments.is_empty() {
        return Vec::new();
    }

    let clauses: Vec<Vec<String>> = segments
        .iter()
        .map(|seg| {
            let mut terms = content_terms(&ctx.text[seg.span.range()]);
            if let Some(subject) = seg.subject.filter(|s| !seg.span.contains(s)) {
                if matches!(seg.origin, Origin::Triple(_)) {
                    terms.extend(content_terms(&ctx.text[subject.range()]));
                }
            }
            terms
        })
        .collect();
    let mut sentences: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (seg, terms) in segments.iter().zip(&clauses) {
        sentences
            .entry(seg.sentence)
            .or_default()
            .extend(terms.iter().cloned());
    }

    let idf = Idf::new(clauses.iter());
    let q_terms = content_terms(question);
    let q_vec = idf.vector(&q_terms);
    let all_q_terms: BTreeSet<String> = text::terms(question)
        .into_iter()
        .map(|t| canonical(&t).to_string())
        .collect();
    let asks_for_entity = all_q_terms.contains("which") || all_q_terms.contains("who");
    let mentioned = |span: Span| {
        let terms = text::terms(&ctx.text[span.range()]);
        !terms.is_empty() && terms.iter().all(|t| all_q_terms.contains(canonical(t)))
    };

    let sentence_scores: BTreeMap<usize, f64> = sentences
        .iter()
        .map(|(id, terms)| (*id, cosine(&q_vec, &idf.vector(terms))))
        .collect();

    let mut out = Vec::new();
    for (seg, terms) in segments.iter().zip(&clauses) {
        let clause_score = cosine(&q_vec, &idf.vector(terms));
        let score = (clause_score + sentence_scores[&seg.sentence]) / 2.0;
        if score <= 0.0 {
            continue;
        }
        let answer = match seg.origin {
            Origin::Aggregate(_) if asks_for_entity && seg.subject.is_some() => seg.subject,
            _ if mentioned(seg.value) => seg.subject.filter(|s| {
                asks_for_entity && matches!(seg.origin, Origin::Triple(_)) && !mentioned(*s)
            }),
            _ => Some(seg.value),
        };
        let Some(span) = answer else {
            continue;
        };
        if span.start < window.span.start || span.end > window.span.end {
            continue;
        }
        out.push(AnswerCandidate::new(
            &ctx.text[span.range()],
            score,
            Span::new(span.start - window.span.start, span.end - window.span.start),
        ));
    }
    out.sort_by(rank_order);
    out
}
