//! Table-to-text conversion.
//!
//! A table is broken into subject–predicate–object triples (one per non-empty,
//! non-subject cell), enriched with column aggregates, and rendered as plain
//! sentences. The resulting [`TextualContext`] keeps a segment for every clause
//! so that any span of the text can be traced back to the triple or aggregate
//! that produced it.
//!
//! Row sentences use a fixed template:
//!
//! ```text
//! Paper 1's semantic representation is "ORKG", its data type is "Free text", and its scope is "Summary".
//! ```
//!
//! Aggregation sentences follow all row sentences, column by column.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{ColumnKind, Table};
use crate::text::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerbalizeError {
    #[error("row {row} has values but no subject")]
    MissingSubject { row: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    /// Column name the predicate was derived from.
    pub label: String,
    pub row: usize,
    pub column: usize,
}

impl Triple {
    /// N-Triples style line, e.g. `<Paper1> <hasScope> "Summary" .`
    pub fn to_ntriples(&self) -> String {
        let mut object = String::with_capacity(self.object.len());
        for c in self.object.chars() {
            match c {
                '"' => object.push_str("\\\""),
                '\\' => object.push_str("\\\\"),
                '\n' => object.push_str("\\n"),
                c => object.push(c),
            }
        }
        format!(
            "<{}> <{}> \"{}\" .",
            iri_term(&self.subject),
            self.predicate,
            object
        )
    }
}

fn iri_term(s: &str) -> String {
    s.chars()
        .filter(|c| {
            !c.is_whitespace() && !matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateKind {
    Max,
    Min,
    Average,
    MostCommon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationFact {
    pub column: String,
    pub column_index: usize,
    pub kind: AggregateKind,
    pub value: String,
    /// Subject of the row achieving a max or min.
    pub winner: Option<String>,
    pub winner_row: Option<usize>,
    /// Occurrence count of a most-common value.
    pub support: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "snake_case")]
pub enum Origin {
    Triple(usize),
    Aggregate(usize),
}

/// One clause of the context and the fact it verbalizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub span: Span,
    pub origin: Origin,
    pub sentence: usize,
    /// Where the object (or aggregate value) is written.
    pub value: Span,
    /// Where the row subject is written: the sentence subject for triples,
    /// the winner for max/min aggregates.
    pub subject: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextualContext {
    pub table_id: String,
    pub text: String,
    pub segments: Vec<Segment>,
    pub triples: Vec<Triple>,
    pub facts: Vec<AggregationFact>,
}

impl TextualContext {
    pub fn empty(table_id: &str) -> Self {
        TextualContext {
            table_id: table_id.to_string(),
            text: String::new(),
            segments: Vec::new(),
            triples: Vec::new(),
            facts: Vec::new(),
        }
    }

    pub fn num_sentences(&self) -> usize {
        self.segments.last().map_or(0, |s| s.sentence + 1)
    }

    /// Byte span of every sentence, in order.
    pub fn sentence_spans(&self) -> Vec<Span> {
        let mut spans: Vec<Span> = Vec::new();
        for seg in &self.segments {
            match spans.get_mut(seg.sentence) {
                Some(span) => span.end = seg.span.end,
                None => spans.push(seg.span),
            }
        }
        spans
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> + '_ {
        self.sentence_spans()
            .into_iter()
            .map(move |s| &self.text[s.range()])
    }

    /// Origin of each sentence's first segment.
    pub fn sentence_origins(&self) -> Vec<Origin> {
        let mut origins = Vec::new();
        for seg in &self.segments {
            if origins.len() == seg.sentence {
                origins.push(seg.origin);
            }
        }
        origins
    }

    /// The segment that fully contains `span`, if any.
    pub fn segment_containing(&self, span: Span) -> Option<&Segment> {
        let idx = self.segments.partition_point(|s| s.span.end < span.end);
        self.segments.get(idx).filter(|s| s.span.contains(&span))
    }

    /// Number of sentences that verbalize table rows.
    pub fn row_sentence_count(&self) -> usize {
        self.sentence_origins()
            .iter()
            .filter(|o| matches!(o, Origin::Triple(_)))
            .count()
    }

    /// Triples as N-Triples style lines.
    pub fn ntriples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_ntriples());
            out.push('\n');
        }
        out
    }
}

/// `has` followed by the column name in CamelCase.
pub fn predicate_for(column_name: &str) -> String {
    let mut out = String::from("has");
    for word in column_name.split(|c: char| !c.is_alphanumeric()) {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            out.extend(first.to_uppercase());
            out.push_str(chars.as_str());
        }
    }
    out
}

fn clause_label(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// One triple per non-empty, non-subject cell, in row-major order.
pub fn table_to_triples(table: &Table) -> Result<Vec<Triple>, VerbalizeError> {
    let mut triples = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let subject = row[table.subject_column].raw.trim();
        for (c, cell) in row.iter().enumerate() {
            if c == table.subject_column || cell.is_empty() {
                continue;
            }
            if subject.is_empty() {
                return Err(VerbalizeError::MissingSubject { row: r });
            }
            let name = &table.columns[c].name;
            triples.push(Triple {
                subject: subject.to_string(),
                predicate: predicate_for(name),
                object: cell.raw.trim().to_string(),
                label: name.clone(),
                row: r,
                column: c,
            });
        }
    }
    Ok(triples)
}

struct ContextWriter {
    ctx: TextualContext,
    sentence: usize,
}

impl ContextWriter {
    fn new(table_id: &str) -> Self {
        ContextWriter {
            ctx: TextualContext::empty(table_id),
            sentence: 0,
        }
    }

    fn start_sentence(&mut self) -> usize {
        if !self.ctx.text.is_empty() {
            self.ctx.text.push(' ');
        }
        self.ctx.text.len()
    }

    fn finish_sentence(&mut self) {
        self.ctx.text.push('.');
        if let Some(last) = self.ctx.segments.last_mut() {
            last.span.end = self.ctx.text.len();
        }
        self.sentence += 1;
    }

    fn push(&mut self, s: &str) -> Span {
        let start = self.ctx.text.len();
        self.ctx.text.push_str(s);
        Span::new(start, self.ctx.text.len())
    }

    fn segment(&mut self, start: usize, origin: Origin, value: Span, subject: Option<Span>) {
        self.ctx.segments.push(Segment {
            span: Span::new(start, self.ctx.text.len()),
            origin,
            sentence: self.sentence,
            value,
            subject,
        });
    }

    fn row_sentence(&mut self, group: &[(usize, &Triple)]) {
        let start = self.start_sentence();
        let n = group.len();
        let mut subject_span = Span::new(start, start);
        for (i, (index, t)) in group.iter().enumerate() {
            let clause_start = self.ctx.text.len();
            if i == 0 {
                subject_span = self.push(&t.subject);
                self.push("'s ");
            } else {
                let sep = match (n, i == n - 1) {
                    (2, _) => " and its ",
                    (_, true) => ", and its ",
                    _ => ", its ",
                };
                self.push(sep);
            }
            self.push(&clause_label(&t.label));
            self.push(" is \"");
            let value = self.push(&t.object);
            self.push("\"");
            self.segment(
                clause_start,
                Origin::Triple(*index),
                value,
                Some(subject_span),
            );
        }
        self.finish_sentence();
    }

    fn fact_sentence(&mut self, index: usize, fact: &AggregationFact) {
        let start = self.start_sentence();
        let label = clause_label(&fact.column);
        let lead = match fact.kind {
            AggregateKind::Max => format!("The maximum {label} is \""),
            AggregateKind::Min => format!("The minimum {label} is \""),
            AggregateKind::Average => format!("The average {label} is \""),
            AggregateKind::MostCommon => format!("The most common {label} among the papers is \""),
        };
        self.push(&lead);
        let value = self.push(&fact.value);
        self.push("\"");
        let winner = fact.winner.as_ref().map(|w| {
            self.push(", achieved by ");
            self.push(w)
        });
        self.segment(start, Origin::Aggregate(index), value, winner);
        self.finish_sentence();
    }
}

fn render_triples(writer: &mut ContextWriter, triples: &[Triple], group_by_subject: bool) {
    let indexed: Vec<(usize, &Triple)> = triples.iter().enumerate().collect();
    if group_by_subject {
        for group in indexed.chunk_by(|a, b| a.1.row == b.1.row && a.1.subject == b.1.subject) {
            writer.row_sentence(group);
        }
    } else {
        for single in indexed.chunks(1) {
            writer.row_sentence(single);
        }
    }
    writer.ctx.triples = triples.to_vec();
}

/// Renders triples as sentences.
///
/// With grouping, consecutive triples of the same row share one sentence;
/// otherwise each triple gets its own. The returned context has an empty
/// `table_id`.
pub fn triples_to_text(triples: &[Triple], group_by_subject: bool) -> TextualContext {
    let mut writer = ContextWriter::new("");
    render_triples(&mut writer, triples, group_by_subject);
    writer.ctx
}

fn render_number(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s.as_str()
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Column aggregates: max, min and average for numeric columns, the most
/// common value for categorical and boolean-like columns.
///
/// The subject column is not aggregated. Ties go to the earliest row.
pub fn aggregate(table: &Table) -> Vec<AggregationFact> {
    let mut facts = Vec::new();
    for (c, column) in table.columns.iter().enumerate() {
        if c == table.subject_column {
            continue;
        }
        match column.kind {
            ColumnKind::Numeric => numeric_facts(table, c, &mut facts),
            ColumnKind::Categorical | ColumnKind::BooleanLike => {
                if let Some(fact) = most_common_fact(table, c) {
                    facts.push(fact);
                }
            }
            ColumnKind::FreeText => {}
        }
    }
    facts
}

fn numeric_facts(table: &Table, c: usize, facts: &mut Vec<AggregationFact>) {
    let values: Vec<(usize, f64, &str, Option<&str>)> = table
        .rows
        .iter()
        .enumerate()
        .filter_map(|(r, row)| {
            let cell = &row[c];
            cell.numeric
                .as_ref()
                .map(|n| (r, n.value, cell.raw.trim(), n.unit.as_deref()))
        })
        .collect();
    let Some(first) = values.first() else {
        return;
    };
    let column = &table.columns[c].name;

    let mut max = first;
    let mut min = first;
    let mut sum = 0.0;
    for v in &values {
        if v.1 > max.1 {
            max = v;
        }
        if v.1 < min.1 {
            min = v;
        }
        sum += v.1;
    }
    for (kind, best) in [(AggregateKind::Max, max), (AggregateKind::Min, min)] {
        facts.push(AggregationFact {
            column: column.clone(),
            column_index: c,
            kind,
            value: best.2.to_string(),
            winner: Some(table.subject(best.0).unwrap_or_default().to_string()),
            winner_row: Some(best.0),
            support: None,
        });
    }

    let mean = sum / values.len() as f64;
    let shared_unit = first.3.filter(|u| values.iter().all(|v| v.3 == Some(*u)));
    let value = match shared_unit {
        Some("%") => format!("{}%", render_number(mean)),
        Some(u) => format!("{} {u}", render_number(mean)),
        None => render_number(mean),
    };
    facts.push(AggregationFact {
        column: column.clone(),
        column_index: c,
        kind: AggregateKind::Average,
        value,
        winner: None,
        winner_row: None,
        support: None,
    });
}

fn most_common_fact(table: &Table, c: usize) -> Option<AggregationFact> {
    // normalized value -> (first row, count)
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (r, row) in table.rows.iter().enumerate() {
        let cell = &row[c];
        if cell.is_empty() {
            continue;
        }
        counts.entry(cell.normalized.as_str()).or_insert((r, 0)).1 += 1;
    }
    let (first_row, support) = counts
        .values()
        .copied()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
    Some(AggregationFact {
        column: table.columns[c].name.clone(),
        column_index: c,
        kind: AggregateKind::MostCommon,
        value: table.rows[first_row][c].raw.trim().to_string(),
        winner: None,
        winner_row: None,
        support: Some(support),
    })
}

/// Full context for a table with row sentences grouped by subject.
pub fn build_context(table: &Table) -> Result<TextualContext, VerbalizeError> {
    build_context_with(table, true)
}

/// Row sentences (grouped per subject or one per triple) followed by one
/// sentence per aggregation fact.
pub fn build_context_with(
    table: &Table,
    group_by_subject: bool,
) -> Result<TextualContext, VerbalizeError> {
    let triples = table_to_triples(table)?;
    let facts = aggregate(table);
    let mut writer = ContextWriter::new(&table.id);
    render_triples(&mut writer, &triples, group_by_subject);
    for (i, fact) in facts.iter().enumerate() {
        writer.fact_sentence(i, fact);
    }
    writer.ctx.facts = facts;
    Ok(writer.ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn table_one() -> Table {
        Table::from_records(
            "t1",
            [
                "Title",
                "Semantic representation",
                "Data type",
                "Scope",
                "High level claims",
            ],
            vec![
                vec!["Paper 1", "ORKG", "Free text", "Summary", "Yes"],
                vec![
                    "Paper 2",
                    "Nanopublications",
                    "Free text",
                    "Statement level",
                    "Yes",
                ],
                vec!["Paper 3", "RASH", "Quoted text", "Full paper", "Partially"],
            ],
        )
        .unwrap()
    }

    fn scores() -> Table {
        Table::from_records(
            "s",
            ["System", "Accuracy"],
            vec![vec!["A", "0.91"], vec!["B", "0.85"], vec!["C", "0.77"]],
        )
        .unwrap()
    }

    #[test]
    fn predicates_are_camel_case() {
        assert_eq!(
            predicate_for("Semantic representation"),
            "hasSemanticRepresentation"
        );
        assert_eq!(predicate_for("High level claims"), "hasHighLevelClaims");
        assert_eq!(predicate_for("F1-score"), "hasF1Score");
    }

    #[test]
    fn first_row_triples() {
        let triples = table_to_triples(&table_one()).unwrap();
        assert_eq!(triples.len(), 12);
        let row: Vec<(&str, &str, &str)> = triples[..4]
            .iter()
            .map(|t| (t.subject.as_str(), t.predicate.as_str(), t.object.as_str()))
            .collect();
        assert_eq!(
            row,
            [
                ("Paper 1", "hasSemanticRepresentation", "ORKG"),
                ("Paper 1", "hasDataType", "Free text"),
                ("Paper 1", "hasScope", "Summary"),
                ("Paper 1", "hasHighLevelClaims", "Yes"),
            ]
        );
        assert!(triples.iter().all(|t| t.column != 0));
        assert_eq!(
            triples[1].to_ntriples(),
            "<Paper1> <hasDataType> \"Free text\" ."
        );
    }

    #[test]
    fn empty_table_has_no_triples() {
        let t = Table::from_records("e", ["a", "b"], Vec::<Vec<String>>::new()).unwrap();
        assert!(table_to_triples(&t).unwrap().is_empty());
        let ctx = build_context(&t).unwrap();
        assert_eq!(ctx.num_sentences(), 0);
        assert!(ctx.text.is_empty());
    }

    #[test]
    fn missing_subject_is_an_error() {
        let t = Table::from_records("m", ["a", "b"], vec![vec!["x", "1"], vec!["", "2"]]).unwrap();
        assert_eq!(
            table_to_triples(&t).unwrap_err(),
            VerbalizeError::MissingSubject { row: 1 }
        );
    }

    #[test]
    fn empty_cells_generate_no_triples() {
        let t = Table::from_records(
            "m",
            ["a", "b", "c"],
            vec![vec!["x", "", "1"], vec!["", "", ""]],
        )
        .unwrap();
        let triples = table_to_triples(&t).unwrap();
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].column, 2);
    }

    #[test]
    fn grouped_sentence_template() {
        let triples = table_to_triples(&table_one()).unwrap();
        let ctx = triples_to_text(&triples[..3], true);
        assert_eq!(
            ctx.text,
            "Paper 1's semantic representation is \"ORKG\", its data type is \"Free text\", and its scope is \"Summary\"."
        );
        let clauses: Vec<&str> = ctx
            .segments
            .iter()
            .map(|s| &ctx.text[s.span.range()])
            .collect();
        assert_eq!(
            clauses,
            [
                "Paper 1's semantic representation is \"ORKG\"",
                ", its data type is \"Free text\"",
                ", and its scope is \"Summary\".",
            ]
        );
        let two = triples_to_text(&triples[..2], true);
        assert_eq!(
            two.text,
            "Paper 1's semantic representation is \"ORKG\" and its data type is \"Free text\"."
        );
    }

    #[test]
    fn single_triple_sentence() {
        let triples = table_to_triples(&table_one()).unwrap();
        let ctx = triples_to_text(&triples[8..9], false);
        assert_eq!(ctx.text, "Paper 3's semantic representation is \"RASH\".");
        assert_eq!(&ctx.text[ctx.segments[0].value.range()], "RASH");
        assert_eq!(
            &ctx.text[ctx.segments[0].subject.unwrap().range()],
            "Paper 3"
        );
    }

    #[test]
    fn ungrouped_has_one_sentence_per_triple() {
        let triples = table_to_triples(&table_one()).unwrap();
        let ctx = triples_to_text(&triples, false);
        assert_eq!(ctx.num_sentences(), 12);
        assert_eq!(
            ctx.sentences().nth(5).unwrap(),
            "Paper 2's data type is \"Free text\"."
        );
    }

    #[test]
    fn most_common_uses_first_occurrence() {
        let facts = aggregate(&table_one());
        let rep = facts
            .iter()
            .find(|f| f.column == "Semantic representation")
            .unwrap();
        assert_eq!(rep.kind, AggregateKind::MostCommon);
        assert_eq!(rep.value, "ORKG");
        assert_eq!(rep.support, Some(1));
        let dt = facts.iter().find(|f| f.column == "Data type").unwrap();
        assert_eq!((dt.value.as_str(), dt.support), ("Free text", Some(2)));
        let claims = facts
            .iter()
            .find(|f| f.column == "High level claims")
            .unwrap();
        assert_eq!((claims.value.as_str(), claims.support), ("Yes", Some(2)));
        assert!(facts.iter().all(|f| f.column != "Title"));
    }

    #[test]
    fn numeric_aggregates() {
        let facts = aggregate(&scores());
        assert_eq!(facts.len(), 3);
        assert_eq!(facts[0].kind, AggregateKind::Max);
        assert_eq!(
            (facts[0].value.as_str(), facts[0].winner.as_deref()),
            ("0.91", Some("A"))
        );
        assert_eq!(facts[1].kind, AggregateKind::Min);
        assert_eq!(
            (facts[1].value.as_str(), facts[1].winner.as_deref()),
            ("0.77", Some("C"))
        );
        assert_eq!(facts[2].kind, AggregateKind::Average);
        assert_eq!(facts[2].value, "0.8433");
        assert!(facts[2].winner.is_none());
    }

    #[test]
    fn average_keeps_shared_unit() {
        let t = Table::from_records(
            "u",
            ["System", "Latency", "Share"],
            vec![vec!["A", "10 ms", "50%"], vec!["B", "15 ms", "25%"]],
        )
        .unwrap();
        let facts = aggregate(&t);
        let avg: Vec<&str> = facts
            .iter()
            .filter(|f| f.kind == AggregateKind::Average)
            .map(|f| f.value.as_str())
            .collect();
        assert_eq!(avg, ["12.5 ms", "37.5%"]);
    }

    #[test]
    fn aggregation_sentences() {
        let ctx = build_context(&scores()).unwrap();
        let sentences: Vec<&str> = ctx.sentences().collect();
        assert_eq!(
            sentences,
            [
                "A's accuracy is \"0.91\".",
                "B's accuracy is \"0.85\".",
                "C's accuracy is \"0.77\".",
                "The maximum accuracy is \"0.91\", achieved by A.",
                "The minimum accuracy is \"0.77\", achieved by C.",
                "The average accuracy is \"0.8433\".",
            ]
        );
        let max = &ctx.segments[3];
        assert_eq!(&ctx.text[max.subject.unwrap().range()], "A");
        assert_eq!(ctx.row_sentence_count(), 3);
    }

    #[test]
    fn table_one_context_has_most_common_sentences() {
        let ctx = build_context(&table_one()).unwrap();
        assert!(ctx.text.starts_with("Paper 1's semantic representation is \"ORKG\", its data type is \"Free text\", its scope is \"Summary\", and its high level claims is \"Yes\"."));
        for column in [
            "semantic representation",
            "data type",
            "scope",
            "high level claims",
        ] {
            let needle = format!("The most common {column} among the papers is \"");
            assert!(ctx.text.contains(&needle), "{needle}");
        }
        assert_eq!(ctx.num_sentences(), 7);
        assert_eq!(ctx.table_id, "t1");
    }

    #[test]
    fn segment_lookup() {
        let ctx = build_context(&table_one()).unwrap();
        let at = ctx.text.find("RASH").unwrap();
        let seg = ctx.segment_containing(Span::new(at, at + 4)).unwrap();
        assert_eq!(seg.origin, Origin::Triple(8));
        assert!(ctx
            .segment_containing(Span::new(0, ctx.text.len()))
            .is_none());
    }

    #[test]
    fn numbers_render_compactly() {
        assert_eq!(render_number(12.0), "12");
        assert_eq!(render_number(0.84333333), "0.8433");
        assert_eq!(render_number(-0.00001), "0");
        assert_eq!(render_number(2.5), "2.5");
    }
}
