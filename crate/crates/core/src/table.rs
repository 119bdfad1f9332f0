//! Typed in-memory table model.
//!
//! A [`Table`] is built from a header and string records (CSV decoding lives in
//! the companion IO crate). Every cell keeps its raw text, a normalized form
//! used for answer matching, and a parsed numeric value when the cell follows
//! the numeric grammar. Column kinds are inferred once at construction.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values accepted as boolean-like, compared case-insensitively.
pub const BOOLEAN_VOCABULARY: [&str; 5] = ["yes", "no", "true", "false", "partially"];

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// A column whose values average more words than this is prose rather than labels.
const LABEL_MAX_WORDS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("table has no header row")]
    MissingHeader,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        /// 1-based data row number (the header is row 0).
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("column {column} has an empty name")]
    EmptyColumnName { column: usize },
    #[error("duplicate column name {name:?}")]
    DuplicateColumn { name: String },
    #[error("subject column {index} out of range for {columns} columns")]
    SubjectOutOfRange { index: usize, columns: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    BooleanLike,
    FreeText,
}

impl ColumnKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::BooleanLike => "boolean_like",
            ColumnKind::FreeText => "free_text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// A parsed number with the unit token that followed it, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numeric {
    pub value: f64,
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub raw: String,
    pub normalized: String,
    pub numeric: Option<Numeric>,
}

impl Cell {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        Cell {
            normalized: normalize_cell(&raw),
            numeric: parse_numeric(&raw),
            raw,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.raw.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub title: String,
    pub subject_column: usize,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Builds a table from a header and data records, inferring column kinds.
    ///
    /// The title defaults to the id and the subject column to 0.
    pub fn from_records<H, R, C>(id: &str, header: H, records: R) -> Result<Table, TableError>
    where
        H: IntoIterator,
        H::Item: AsRef<str>,
        R: IntoIterator<Item = C>,
        C: IntoIterator,
        C::Item: Into<String>,
    {
        let names: Vec<String> = header
            .into_iter()
            .map(|h| h.as_ref().trim().to_string())
            .collect();
        if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
            return Err(TableError::MissingHeader);
        }
        let mut seen = BTreeSet::new();
        for (column, name) in names.iter().enumerate() {
            let key = normalize_cell(name);
            if key.is_empty() {
                return Err(TableError::EmptyColumnName { column });
            }
            if !seen.insert(key) {
                return Err(TableError::DuplicateColumn { name: name.clone() });
            }
        }

        let mut rows = Vec::new();
        for (i, record) in records.into_iter().enumerate() {
            let row: Vec<Cell> = record.into_iter().map(Cell::new).collect();
            if row.len() != names.len() {
                return Err(TableError::RaggedRow {
                    row: i + 1,
                    expected: names.len(),
                    found: row.len(),
                });
            }
            rows.push(row);
        }

        let columns = names
            .into_iter()
            .enumerate()
            .map(|(c, name)| {
                let values: Vec<&str> = rows.iter().map(|r| r[c].raw.as_str()).collect();
                Column {
                    name,
                    kind: infer_column_kind(&values),
                }
            })
            .collect();

        Ok(Table {
            id: id.to_string(),
            title: id.to_string(),
            subject_column: 0,
            columns,
            rows,
        })
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_subject_column(mut self, index: usize) -> Result<Self, TableError> {
        if index >= self.columns.len() {
            return Err(TableError::SubjectOutOfRange {
                index,
                columns: self.columns.len(),
            });
        }
        self.subject_column = index;
        Ok(self)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, row: usize, column: usize) -> Option<&Cell> {
        self.rows.get(row).and_then(|r| r.get(column))
    }

    pub fn subject(&self, row: usize) -> Option<&str> {
        self.cell(row, self.subject_column).map(|c| c.raw.trim())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let key = normalize_cell(name);
        self.columns
            .iter()
            .position(|c| normalize_cell(&c.name) == key)
    }

    /// Header followed by raw cell values, suitable for re-serialization.
    pub fn records(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        core::iter::once(self.columns.iter().map(|c| c.name.as_str()).collect()).chain(
            self.rows
                .iter()
                .map(|r| r.iter().map(|c| c.raw.as_str()).collect()),
        )
    }
}

/// Classifies the values of one column.
///
/// Numeric when every non-empty value parses as a number, boolean-like when
/// every non-empty value is in [`BOOLEAN_VOCABULARY`], categorical when at most
/// half of the non-empty values are distinct or the values are short labels,
/// free text otherwise. A column with no non-empty value is free text.
pub fn infer_column_kind<S: AsRef<str>>(values: &[S]) -> ColumnKind {
    let present: Vec<&str> = values
        .iter()
        .map(|v| v.as_ref().trim())
        .filter(|v| !v.is_empty())
        .collect();
    if present.is_empty() {
        return ColumnKind::FreeText;
    }
    if present.iter().all(|v| parse_numeric(v).is_some()) {
        return ColumnKind::Numeric;
    }
    if present
        .iter()
        .all(|v| BOOLEAN_VOCABULARY.iter().any(|b| v.eq_ignore_ascii_case(b)))
    {
        return ColumnKind::BooleanLike;
    }
    let distinct: BTreeSet<String> = present.iter().map(|v| normalize_cell(v)).collect();
    if distinct.len() * 2 <= present.len() {
        return ColumnKind::Categorical;
    }
    let words: usize = present.iter().map(|v| v.split_whitespace().count()).sum();
    if words as f64 / present.len() as f64 <= LABEL_MAX_WORDS {
        ColumnKind::Categorical
    } else {
        ColumnKind::FreeText
    }
}

fn is_trim_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2026}'
        )
}

fn normalize_step(input: &str) -> String {
    let lowered = input.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");

    // A sign or decimal point directly before a digit belongs to the number.
    let mut start = 0;
    for (i, c) in collapsed.char_indices() {
        let next_is_digit = collapsed[i + c.len_utf8()..]
            .chars()
            .next()
            .is_some_and(|n| n.is_ascii_digit());
        if is_trim_char(c) && !(matches!(c, '-' | '+' | '.') && next_is_digit) {
            start = i + c.len_utf8();
        } else {
            break;
        }
    }
    let trimmed = collapsed[start..].trim_end_matches(is_trim_char).trim();

    match trimmed.split_once(' ') {
        Some((first, rest)) if ARTICLES.contains(&first) => rest.to_string(),
        _ => trimmed.to_string(),
    }
}

/// Canonical form used to compare answers.
///
/// Lowercases, collapses internal whitespace, strips surrounding punctuation
/// and quotes, and drops a leading article. Idempotent.
pub fn normalize_cell(raw: &str) -> String {
    let mut current = normalize_step(raw);
    loop {
        let next = normalize_step(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Parses `raw` under the numeric grammar.
///
/// Accepts an optional sign, digits with optional comma thousands separators,
/// an optional fractional part, and an optional trailing unit token made of
/// letters, `%`, `°`, or `/` (separated from the number by at most one space).
pub fn parse_numeric(raw: &str) -> Option<Numeric> {
    let s = raw.trim();
    let bytes = s.as_bytes();
    let mut i = 0;
    let negative = match bytes.first() {
        Some(b'-') => {
            i += 1;
            true
        }
        Some(b'+') => {
            i += 1;
            false
        }
        _ => false,
    };

    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = String::from(&s[int_start..i]);
    let first_group = i - int_start;
    if first_group > 0 && first_group <= 3 && i < bytes.len() && bytes[i] == b',' {
        // Thousands groups must be exactly three digits each.
        while bytes.get(i) == Some(&b',') {
            let group = s.get(i + 1..i + 4)?;
            if !group.bytes().all(|b| b.is_ascii_digit())
                || bytes.get(i + 4).is_some_and(|b| b.is_ascii_digit())
            {
                return None;
            }
            digits.push_str(group);
            i += 4;
        }
    }

    let mut has_fraction = false;
    if i < bytes.len() && bytes[i] == b'.' {
        let frac_start = i + 1;
        let mut j = frac_start;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > frac_start {
            digits.push('.');
            digits.push_str(&s[frac_start..j]);
            has_fraction = true;
            i = j;
        }
    }
    if digits.is_empty() || (!has_fraction && first_group == 0) {
        return None;
    }

    let rest = &s[i..];
    let unit_text = rest.strip_prefix(' ').unwrap_or(rest);
    let unit = if unit_text.is_empty() {
        None
    } else if unit_text
        .chars()
        .all(|c| c.is_alphabetic() || matches!(c, '%' | '°' | '/'))
    {
        Some(unit_text.to_string())
    } else {
        return None;
    };

    let magnitude: f64 = digits.parse().ok()?;
    Some(Numeric {
        value: if negative { -magnitude } else { magnitude },
        unit,
    })
}
