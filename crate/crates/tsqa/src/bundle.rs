//! Benchmark bundles: `manifest.json`, `tables/<id>.csv`, `questions.jsonl`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tsqa_core::Table;

use crate::csv_io::parse_table;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QType {
    Normal,
    Aggregation,
    Related,
    Similar,
    Listing,
    Ask,
    Empty,
    Other,
}

impl QType {
    pub const ALL: [QType; 8] = [
        QType::Normal,
        QType::Aggregation,
        QType::Related,
        QType::Similar,
        QType::Listing,
        QType::Ask,
        QType::Empty,
        QType::Other,
    ];

    /// Types that get their own rows in reports.
    pub const REPORTED: [QType; 4] = [
        QType::Normal,
        QType::Aggregation,
        QType::Related,
        QType::Similar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QType::Normal => "normal",
            QType::Aggregation => "aggregation",
            QType::Related => "related",
            QType::Similar => "similar",
            QType::Listing => "listing",
            QType::Ask => "ask",
            QType::Empty => "empty",
            QType::Other => "other",
        }
    }
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        QType::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or(Error::UnknownQType(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuestion {
    pub id: String,
    pub table_id: String,
    #[serde(rename = "question")]
    pub text: String,
    #[serde(rename = "answers")]
    pub gold_answers: Vec<String>,
    #[serde(rename = "type")]
    pub qtype: QType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub id: String,
    /// Relative to `tables/`; defaults to `<id>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_column: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub tables: Vec<TableEntry>,
    #[serde(default)]
    pub qtype_distribution: BTreeMap<QType, usize>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn entry(&self, id: &str) -> Option<&TableEntry> {
        self.tables.iter().find(|t| t.id == id)
    }
}

/// Tables and questions of one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub tables: Vec<Table>,
    pub questions: Vec<BenchmarkQuestion>,
    /// Items the loader dropped (only non-zero for adapted datasets).
    pub skipped: usize,
}

impl Benchmark {
    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    pub fn table_index(&self, id: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.id == id)
    }

    pub fn distribution(&self) -> BTreeMap<QType, usize> {
        distribution(&self.questions)
    }
}

pub fn distribution(questions: &[BenchmarkQuestion]) -> BTreeMap<QType, usize> {
    let mut out = BTreeMap::new();
    for q in questions {
        *out.entry(q.qtype).or_insert(0) += 1;
    }
    out
}

/// Parses one table file, applying manifest overrides.
pub fn load_table(path: &Path, id: &str, entry: Option<&TableEntry>) -> Result<Table> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut table = parse_table(&bytes, id)?;
    if let Some(entry) = entry {
        if let Some(title) = &entry.title {
            table = table.with_title(title.clone());
        }
        if let Some(col) = entry.subject_column {
            table = table
                .with_subject_column(col)
                .map_err(|source| Error::Table {
                    table: id.to_string(),
                    source,
                })?;
        }
    }
    Ok(table)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads the tables listed in the manifest, or every `tables/*.csv` when
/// the manifest lists none.
pub fn load_tables(tables_dir: &Path, manifest: &Manifest) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    if manifest.tables.is_empty() {
        for path in csv_files(tables_dir)? {
            let id = file_stem(&path);
            tables.push(load_table(&path, &id, None)?);
        }
    } else {
        for entry in &manifest.tables {
            let file = entry
                .file
                .clone()
                .unwrap_or_else(|| format!("{}.csv", entry.id));
            tables.push(load_table(&tables_dir.join(file), &entry.id, Some(entry))?);
        }
    }
    if tables.is_empty() {
        return Err(Error::NoTables);
    }
    Ok(tables)
}

/// Parses `questions.jsonl`, checking each question against `tables`.
pub fn parse_questions(
    path: &Path,
    text: &str,
    tables: &[Table],
) -> Result<Vec<BenchmarkQuestion>> {
    let known: BTreeSet<&str> = tables.iter().map(|t| t.id.as_str()).collect();
    let mut ids = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: BenchmarkQuestion =
            serde_json::from_str(line).map_err(|source| Error::JsonLine {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        if !known.contains(q.table_id.as_str()) {
            return Err(Error::DanglingTable {
                question: q.id,
                table: q.table_id,
            });
        }
        let invalid = |reason: &str| Error::InvalidQuestion {
            question: q.id.clone(),
            reason: reason.to_string(),
        };
        if q.text.trim().is_empty() {
            return Err(invalid("question text is empty"));
        }
        if q.gold_answers.iter().all(|a| a.trim().is_empty()) {
            return Err(invalid("no gold answers"));
        }
        if !ids.insert(q.id.clone()) {
            return Err(invalid("duplicate question id"));
        }
        out.push(q);
    }
    Ok(out)
}

/// Loads an ORKG-QA style bundle directory.
pub fn load_orkgqa(dir: &Path) -> Result<Benchmark> {
    let manifest_path = dir.join("manifest.json");
    let manifest = if manifest_path.exists() {
        Manifest::read(&manifest_path)?
    } else {
        Manifest::default()
    };
    let tables = load_tables(&dir.join("tables"), &manifest)?;
    let qpath = dir.join("questions.jsonl");
    let text = fs::read_to_string(&qpath).map_err(|e| Error::io(&qpath, e))?;
    let questions = parse_questions(&qpath, &text, &tables)?;
    let name = if manifest.name.is_empty() {
        file_stem(dir)
    } else {
        manifest.name.clone()
    };
    let bench = Benchmark {
        name,
        tables,
        questions,
        skipped: 0,
    };
    if !manifest.qtype_distribution.is_empty()
        && manifest.qtype_distribution != bench.distribution()
    {
        log::warn!(
            "question types {:?} differ from the manifest's declared {:?}",
            bench.distribution(),
            manifest.qtype_distribution
        );
    }
    log::info!(
        "loaded {}: {} tables, {} questions {:?}",
        bench.name,
        bench.tables.len(),
        bench.questions.len(),
        bench.distribution()
    );
    Ok(bench)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> Vec<Table> {
        vec![Table::from_records("t1", ["a", "b"], vec![vec!["x", "y"]]).unwrap()]
    }

    #[test]
    fn qtype_parsing() {
        assert_eq!("Aggregation".parse::<QType>().unwrap(), QType::Aggregation);
        assert!(matches!(
            "bogus".parse::<QType>(),
            Err(Error::UnknownQType(_))
        ));
    }

    #[test]
    fn questions_round_trip() {
        let line = r#"{"id":"q1","table_id":"t1","question":"What is b of x?","answers":["y"],"type":"normal"}"#;
        let qs = parse_questions(Path::new("q.jsonl"), line, &tables()).unwrap();
        assert_eq!(qs[0].gold_answers, ["y"]);
        assert_eq!(serde_json::to_string(&qs[0]).unwrap(), line);
    }

    #[test]
    fn dangling_table_names_question() {
        let line =
            r#"{"id":"q9","table_id":"missing","question":"?","answers":["y"],"type":"normal"}"#;
        let err = parse_questions(Path::new("q.jsonl"), line, &tables()).unwrap_err();
        assert!(
            matches!(&err, Error::DanglingTable { question, table } if question == "q9" && table == "missing")
        );
        assert!(err.to_string().contains("q9"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"q1\",\"table_id\":\"t1\",\"question\":\"a\",\"answers\":[\"y\"],\"type\":\"normal\"}\n\n{oops";
        let err = parse_questions(Path::new("q.jsonl"), text, &tables()).unwrap_err();
        assert!(matches!(err, Error::JsonLine { line: 3, .. }));
    }

    #[test]
    fn rejects_empty_gold_and_duplicates() {
        let empty = r#"{"id":"q1","table_id":"t1","question":"a","answers":[" "],"type":"normal"}"#;
        assert!(matches!(
            parse_questions(Path::new("q"), empty, &tables()),
            Err(Error::InvalidQuestion { .. })
        ));
        let one = r#"{"id":"q1","table_id":"t1","question":"a","answers":["y"],"type":"normal"}"#;
        let dup = format!("{one}\n{one}");
        assert!(matches!(
            parse_questions(Path::new("q"), &dup, &tables()),
            Err(Error::InvalidQuestion { .. })
        ));
    }
}
