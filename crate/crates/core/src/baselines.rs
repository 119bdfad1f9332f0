//! Comparison answerers: uniform random choice and TF-IDF sentence retrieval.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::table::{normalize_cell, Table};
use crate::text;
use crate::verbalize::{aggregate, Origin, TextualContext};

/// Every answer a table could plausibly yield: cell values, aggregate values
/// and subject names, normalized and deduplicated in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub table_id: String,
    pub choices: Vec<String>,
}

impl CandidatePool {
    pub fn from_table(table: &Table) -> Self {
        let mut seen = BTreeSet::new();
        let mut choices = Vec::new();
        let mut add = |value: &str| {
            let v = normalize_cell(value);
            if !v.is_empty() && seen.insert(v.clone()) {
                choices.push(v);
            }
        };
        for row in &table.rows {
            for cell in row {
                add(&cell.raw);
            }
        }
        for fact in aggregate(table) {
            add(&fact.value);
            if let Some(w) = &fact.winner {
                add(w);
            }
        }
        CandidatePool {
            table_id: table.id.clone(),
            choices,
        }
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

/// Draws up to `k` distinct choices without replacement.
///
/// The draw is a pure function of `(pool, k, seed)`.
pub fn random_answer(pool: &CandidatePool, k: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices = pool.choices.clone();
    let k = k.min(choices.len());
    let (picked, _) = choices.partial_shuffle(&mut rng, k);
    picked.to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedSentence {
    pub text: String,
    pub table_id: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub sentence: usize,
    /// Length-normalized TF-IDF weight of the term in the sentence.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub idf: f64,
    pub postings: Vec<Posting>,
}

/// Inverted index over individual sentences.
///
/// Terms are lowercased alphanumeric runs with no stemming or stopword
/// removal. Weights are `(1 + ln tf) * idf` with `idf = ln((1 + N) / (1 + df)) + 1`,
/// and sentences are ranked by cosine similarity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SentenceIndex {
    pub sentences: Vec<IndexedSentence>,
    pub terms: BTreeMap<String, TermEntry>,
}

fn term_frequencies(text: &str) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for t in text::terms(text) {
        *tf.entry(t).or_insert(0) += 1;
    }
    tf
}

fn log_tf(n: usize) -> f64 {
    1.0 + libm::log(n as f64)
}

impl SentenceIndex {
    /// Indexes every sentence of every context, one document per sentence.
    pub fn build(contexts: &[TextualContext]) -> Self {
        let mut sentences = Vec::new();
        for ctx in contexts {
            for (span, origin) in ctx.sentence_spans().into_iter().zip(ctx.sentence_origins()) {
                sentences.push(IndexedSentence {
                    text: ctx.text[span.range()].to_string(),
                    table_id: ctx.table_id.clone(),
                    origin,
                });
            }
        }
        Self::from_sentences(sentences)
    }

    pub fn from_sentences(sentences: Vec<IndexedSentence>) -> Self {
        let tfs: Vec<BTreeMap<String, usize>> = sentences
            .iter()
            .map(|s| term_frequencies(&s.text))
            .collect();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for tf in &tfs {
            for term in tf.keys() {
                *df.entry(term.as_str()).or_insert(0) += 1;
            }
        }
        let n = sentences.len() as f64;
        let idf: BTreeMap<&str, f64> = df
            .iter()
            .map(|(t, d)| (*t, libm::log((1.0 + n) / (1.0 + *d as f64)) + 1.0))
            .collect();

        let mut terms: BTreeMap<String, TermEntry> = idf
            .iter()
            .map(|(t, w)| {
                (
                    t.to_string(),
                    TermEntry {
                        idf: *w,
                        postings: Vec::new(),
                    },
                )
            })
            .collect();
        for (id, tf) in tfs.iter().enumerate() {
            let weights: Vec<(&String, f64)> = tf
                .iter()
                .map(|(t, n)| (t, log_tf(*n) * idf[t.as_str()]))
                .collect();
            let norm = libm::sqrt(weights.iter().map(|(_, w)| w * w).sum::<f64>());
            for (t, w) in weights {
                if let Some(entry) = terms.get_mut(t) {
                    entry.postings.push(Posting {
                        sentence: id,
                        weight: w / norm,
                    });
                }
            }
        }
        SentenceIndex { sentences, terms }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms
            .get(&term.to_lowercase())
            .map_or(&[], |e| e.postings.as_slice())
    }

    /// Sentence ids and cosine scores, best first; ties go to the lower id.
    ///
    /// Query terms absent from the index are ignored. Zero-score sentences
    /// are never returned.
    pub fn search(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        let weights: Vec<(&TermEntry, f64)> = term_frequencies(query)
            .iter()
            .filter_map(|(t, n)| self.terms.get(t).map(|e| (e, log_tf(*n) * e.idf)))
            .collect();
        let norm = libm::sqrt(weights.iter().map(|(_, w)| w * w).sum::<f64>());
        if norm == 0.0 {
            return Vec::new();
        }
        let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
        for (entry, w) in weights {
            for p in &entry.postings {
                *scores.entry(p.sentence).or_insert(0.0) += (w / norm) * p.weight;
            }
        }
        let mut hits: Vec<(usize, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        hits
    }

    /// Texts of the `k` best matching sentences.
    pub fn retrieve_answers(&self, question: &str, k: usize) -> Vec<String> {
        self.search(question, k)
            .into_iter()
            .map(|(id, _)| self.sentences[id].text.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verbalize::build_context_with;
    use alloc::vec;

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

    fn index() -> SentenceIndex {
        SentenceIndex::build(&[build_context_with(&table_one(), false).unwrap()])
    }

    #[test]
    fn pool_of_table_one() {
        let pool = CandidatePool::from_table(&table_one());
        assert_eq!(pool.len(), 13);
        assert_eq!(pool.choices[0], "paper 1");
        let unique: BTreeSet<&String> = pool.choices.iter().collect();
        assert_eq!(unique.len(), pool.len());
    }

    #[test]
    fn random_is_seeded() {
        let pool = CandidatePool::from_table(&table_one());
        assert_eq!(random_answer(&pool, 5, 42), random_answer(&pool, 5, 42));
        assert_ne!(random_answer(&pool, 13, 1), random_answer(&pool, 13, 2));
        let all = random_answer(&pool, 100, 3);
        assert_eq!(all.len(), 13);
        let distinct: BTreeSet<&String> = all.iter().collect();
        assert_eq!(distinct.len(), 13);
    }

    #[test]
    fn random_single_and_empty_pool() {
        let one = CandidatePool {
            table_id: "x".into(),
            choices: vec!["only".into()],
        };
        assert_eq!(random_answer(&one, 1, 9), vec!["only".to_string()]);
        let none = CandidatePool {
            table_id: "x".into(),
            choices: vec![],
        };
        assert!(random_answer(&none, 3, 9).is_empty());
    }

    #[test]
    fn index_finds_term() {
        let idx = index();
        assert_eq!(idx.len(), 12 + 4);
        let rash = idx.postings("RASH");
        assert_eq!(rash.len(), 1);
        assert_eq!(
            idx.sentences[rash[0].sentence].text,
            "Paper 3's semantic representation is \"RASH\"."
        );
    }

    #[test]
    fn empty_index_answers_nothing() {
        let idx = SentenceIndex::build(&[]);
        assert!(idx.is_empty());
        assert!(idx.retrieve_answers("anything at all", 10).is_empty());
    }

    #[test]
    fn unknown_terms_retrieve_nothing() {
        assert!(index().retrieve_answers("zebra unicorn", 10).is_empty());
    }

    #[test]
    fn verbatim_query_ranks_itself_first() {
        let idx = index();
        for s in &idx.sentences {
            assert_eq!(idx.retrieve_answers(&s.text, 1), vec![s.text.clone()]);
        }
    }

    #[test]
    fn scores_are_cosines() {
        let idx = index();
        let hits = idx.search(&idx.sentences[3].text, 16);
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
        assert!(hits.iter().all(|(_, s)| *s > 0.0 && *s <= 1.0 + 1e-12));
        assert!(hits.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}
