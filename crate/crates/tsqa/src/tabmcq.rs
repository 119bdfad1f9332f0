//! TabMCQ adapted to single-answer questions.
//!
//! Layout: table files `*.tsv` under `tables/regents/` (or `Tables/regents/`,
//! `tables/`, `Tables/`) and a question file `MCQs.tsv` with the columns
//! `QUESTION`, `CHOICE 1`..`CHOICE 4`, `CORRECT CHOICE`, `RELEVANT TABLE`.
//! Only the correct choice is kept as gold.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bundle::{file_stem, Benchmark, BenchmarkQuestion, QType};
use crate::csv_io::parse_tsv;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TabMcqLoad {
    pub benchmark: Benchmark,
    /// Questions without a usable correct choice.
    pub unmarked: usize,
    /// Questions pointing at tables outside the loaded set.
    pub unknown_table: usize,
}

const TABLE_DIRS: [&str; 4] = ["tables/regents", "Tables/regents", "tables", "Tables"];
const MCQ_FILES: [&str; 2] = ["MCQs.tsv", "mcqs.tsv"];

fn find_tables_dir(dir: &Path) -> Option<PathBuf> {
    TABLE_DIRS.iter().map(|d| dir.join(d)).find(|p| p.is_dir())
}

/// Resolves the `CORRECT CHOICE` field to a choice index: `1`-`4`, `A`-`D`,
/// or the literal text of one of the choices.
fn correct_index(marker: &str, choices: &[&str]) -> Option<usize> {
    let m = marker.trim();
    if m.is_empty() {
        return None;
    }
    if let Ok(n) = m.parse::<usize>() {
        return (1..=choices.len()).contains(&n).then(|| n - 1);
    }
    if m.len() == 1 {
        let c = m.as_bytes()[0].to_ascii_uppercase();
        if (b'A'..=b'D').contains(&c) {
            let i = (c - b'A') as usize;
            return (i < choices.len()).then_some(i);
        }
    }
    choices
        .iter()
        .position(|c| c.trim().eq_ignore_ascii_case(m))
}

pub fn load_tabmcq(dir: &Path) -> Result<Benchmark> {
    load_tabmcq_detailed(dir).map(|l| l.benchmark)
}

pub fn load_tabmcq_detailed(dir: &Path) -> Result<TabMcqLoad> {
    let tables_dir = find_tables_dir(dir).ok_or(Error::NoTables)?;
    let mut paths = Vec::new();
    for entry in fs::read_dir(&tables_dir).map_err(|e| Error::io(&tables_dir, e))? {
        let path = entry.map_err(|e| Error::io(&tables_dir, e))?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
        {
            paths.push(path);
        }
    }
    paths.sort();
    let mut tables = Vec::new();
    for path in &paths {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        tables.push(parse_tsv(&bytes, &file_stem(path))?);
    }
    if tables.is_empty() {
        return Err(Error::NoTables);
    }

    let mcq_path = MCQ_FILES
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.is_file())
        .unwrap_or_else(|| dir.join(MCQ_FILES[0]));
    let bytes = fs::read(&mcq_path).map_err(|e| Error::io(&mcq_path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_uppercase())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let missing = |name: &str| Error::InvalidQuestion {
        question: mcq_path.display().to_string(),
        reason: format!("missing column {name}"),
    };
    let q_col = col("QUESTION").ok_or_else(|| missing("QUESTION"))?;
    let correct_col = col("CORRECT CHOICE").ok_or_else(|| missing("CORRECT CHOICE"))?;
    let table_col = col("RELEVANT TABLE").ok_or_else(|| missing("RELEVANT TABLE"))?;
    let choice_cols: Vec<usize> = (1..=4)
        .filter_map(|i| col(&format!("CHOICE {i}")))
        .collect();

    let mut questions = Vec::new();
    let (mut unmarked, mut unknown_table) = (0, 0);
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let text = field(q_col);
        if text.is_empty() {
            continue;
        }
        let choices: Vec<&str> = choice_cols.iter().map(|&c| field(c)).collect();
        let gold = match correct_index(field(correct_col), &choices) {
            Some(idx) if !choices[idx].is_empty() => choices[idx].to_string(),
            _ => {
                unmarked += 1;
                continue;
            }
        };
        let table_id = field(table_col).trim_end_matches(".tsv").to_string();
        if !tables.iter().any(|t| t.id == table_id) {
            unknown_table += 1;
            continue;
        }
        questions.push(BenchmarkQuestion {
            id: format!("mcq-{}", i + 1),
            table_id,
            text: text.to_string(),
            gold_answers: vec![gold],
            qtype: QType::Normal,
        });
    }
    if unmarked > 0 {
        log::warn!("skipped {unmarked} question(s) without a marked correct choice");
    }
    if unknown_table > 0 {
        log::warn!(
            "skipped {unknown_table} question(s) referencing tables outside {}",
            tables_dir.display()
        );
    }
    Ok(TabMcqLoad {
        benchmark: Benchmark {
            name: "tabmcq".to_string(),
            tables,
            questions,
            skipped: unmarked,
        },
        unmarked,
        unknown_table,
    })
}
