//! Core algorithms for answering questions over tabular scholarly knowledge.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. It covers the full
//! path from a parsed [`Table`] to ranked answers:
//!
//! * [`table`]: typed table model, column-kind inference and cell normalization.
//! * [`verbalize`]: triples, aggregation facts and the aligned textual context.
//! * [`reader`]: windowing, the pluggable [`Reader`] abstraction, the built-in
//!   lexical reader and candidate merging.
//! * [`baselines`]: the random-choice and TF-IDF sentence retrieval answerers.
//! * [`metrics`]: answer matching and the rank metrics used for benchmarking.
//!
//! Text spans throughout are byte offsets into UTF-8 strings and always fall on
//! character boundaries.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod metrics;
pub mod reader;
pub mod table;
pub mod text;
pub mod verbalize;

pub use baselines::{random_answer, CandidatePool, IndexedSentence, SentenceIndex};
pub use metrics::{answer_matches, Judgement, MatchMode};
pub use reader::{
    chunk_context, merge_candidates, read, AnswerCandidate, LexicalReader, Reader, ReaderError,
    ReaderParams, Window,
};
pub use table::{
    infer_column_kind, normalize_cell, Cell, Column, ColumnKind, Numeric, Table, TableError,
};
pub use text::Span;
pub use verbalize::{
    aggregate, build_context, table_to_triples, triples_to_text, AggregateKind, AggregationFact,
    Origin, Segment, TextualContext, Triple, VerbalizeError,
};
