//! On-disk cache of parsed tables, their contexts and the sentence index.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsqa_core::verbalize::build_context_with;
use tsqa_core::{build_context, SentenceIndex, Table, TextualContext};

use crate::bundle::{file_stem, load_orkgqa, load_table, Manifest};
use crate::{Error, Result};

pub const STORE_FILE: &str = "store.json";
pub const INDEX_FILE: &str = "index.json";
const STORE_FORMAT: &str = "tsqa-store";
const INDEX_FORMAT: &str = "tsqa-sentence-index";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Store {
    pub format: String,
    pub version: u32,
    pub tables: Vec<Table>,
    /// Grouped contexts, aligned with `tables`.
    pub contexts: Vec<TextualContext>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub format: String,
    pub version: u32,
    pub index: SentenceIndex,
}

/// Counts printed after ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestSummary {
    pub tables: usize,
    pub triples: usize,
    pub row_sentences: usize,
    pub aggregation_sentences: usize,
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let plural = |n: usize, word: &str| {
            if n == 1 {
                format!("{n} {word}")
            } else {
                format!("{n} {word}s")
            }
        };
        write!(
            f,
            "{}, {}, {}, {}",
            plural(self.tables, "table"),
            plural(self.triples, "triple"),
            plural(self.row_sentences, "row sentence"),
            plural(self.aggregation_sentences, "aggregation sentence"),
        )
    }
}

fn verbalize(table: &Table) -> Result<TextualContext> {
    build_context(table).map_err(|source| Error::Verbalize {
        table: table.id.clone(),
        source,
    })
}

/// Verbalizes tables into contexts with the reader's grouped layout.
pub fn contexts_for(tables: &[Table]) -> Result<Vec<TextualContext>> {
    tables.iter().map(verbalize).collect()
}

/// One context per table with one sentence per triple, as indexed by the
/// retrieval baseline.
pub fn sentence_contexts(tables: &[Table]) -> Result<Vec<TextualContext>> {
    tables
        .iter()
        .map(|t| {
            build_context_with(t, false).map_err(|source| Error::Verbalize {
                table: t.id.clone(),
                source,
            })
        })
        .collect()
}

impl Store {
    pub fn build(tables: Vec<Table>) -> Result<Store> {
        let contexts = contexts_for(&tables)?;
        Ok(Store {
            format: STORE_FORMAT.to_string(),
            version: VERSION,
            tables,
            contexts,
        })
    }

    pub fn summary(&self) -> IngestSummary {
        let mut s = IngestSummary {
            tables: self.tables.len(),
            ..IngestSummary::default()
        };
        for ctx in &self.contexts {
            s.triples += ctx.triples.len();
            s.row_sentences += ctx.row_sentence_count();
            s.aggregation_sentences += ctx.num_sentences() - ctx.row_sentence_count();
        }
        s
    }

    pub fn table_index(&self, id: &str) -> Result<usize> {
        self.tables
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTable(id.to_string()))
    }

    pub fn sentence_index(&self) -> Result<SentenceIndex> {
        Ok(SentenceIndex::build(&sentence_contexts(&self.tables)?))
    }

    /// Writes `store.json` and `index.json` into `dir`. Output bytes depend
    /// only on the tables.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let index = IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: VERSION,
            index: self.sentence_index()?,
        };
        write_json(&dir.join(STORE_FILE), self)?;
        write_json(&dir.join(INDEX_FILE), &index)
    }

    pub fn load(dir: &Path) -> Result<Store> {
        let path = dir.join(STORE_FILE);
        let store: Store = read_json(&path)?;
        if store.format != STORE_FORMAT || store.version != VERSION {
            return Err(Error::StoreVersion {
                path,
                found: store.version,
            });
        }
        Ok(store)
    }

    /// Opens a saved store, an ORKG-QA bundle directory, or a single CSV file.
    pub fn open(path: &Path) -> Result<Store> {
        if path.join(STORE_FILE).is_file() {
            return Store::load(path);
        }
        if path.is_file() {
            return Store::build(vec![load_table(path, &file_stem(path), None)?]);
        }
        if path.join("tables").is_dir() && path.join("questions.jsonl").is_file() {
            return Store::build(load_orkgqa(path)?.tables);
        }
        if path.join("tables").is_dir() {
            return Store::build(collect_tables(&[path.join("tables")], None)?);
        }
        Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no store, bundle or CSV file here",
            ),
        ))
    }
}

pub fn load_index(dir: &Path) -> Result<SentenceIndex> {
    let path = dir.join(INDEX_FILE);
    let file: IndexFile = read_json(&path)?;
    if file.format != INDEX_FORMAT || file.version != VERSION {
        return Err(Error::StoreVersion {
            path,
            found: file.version,
        });
    }
    Ok(file.index)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Expands files and directories into CSV paths, sorted within each directory.
pub fn csv_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(p).map_err(|e| Error::io(p, e))? {
                let path = entry.map_err(|e| Error::io(p, e))?.path();
                if path.is_file()
                    && path
                        .extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
                {
                    found.push(path);
                }
            }
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            ));
        }
    }
    Ok(out)
}

/// Parses every CSV under `paths`, using file stems as table ids.
pub fn collect_tables(paths: &[PathBuf], manifest: Option<&Manifest>) -> Result<Vec<Table>> {
    let files = csv_paths(paths)?;
    if files.is_empty() {
        return Err(Error::NoTables);
    }
    files
        .iter()
        .map(|f| {
            let id = file_stem(f);
            load_table(f, &id, manifest.and_then(|m| m.entry(&id)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_wording() {
        let s = IngestSummary {
            tables: 1,
            triples: 12,
            row_sentences: 3,
            aggregation_sentences: 4,
        };
        assert_eq!(
            s.to_string(),
            "1 table, 12 triples, 3 row sentences, 4 aggregation sentences"
        );
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::from_records("t", ["Name", "Score"], vec![vec!["a", "1"], vec!["b", "2"]])
            .unwrap();
        let store = Store::build(vec![t]).unwrap();
        store.save(dir.path()).unwrap();
        assert_eq!(Store::load(dir.path()).unwrap(), store);
        assert_eq!(
            load_index(dir.path()).unwrap(),
            store.sentence_index().unwrap()
        );
    }

    #[test]
    fn rejects_future_versions() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::build(Vec::new()).unwrap();
        store.save(dir.path()).unwrap();
        let path = dir.path().join(STORE_FILE);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 9");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            Store::load(dir.path()),
            Err(Error::StoreVersion { found: 9, .. })
        ));
    }
}
