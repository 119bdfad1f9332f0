//! Runs systems over benchmark questions and records ranked answers,
//! latency and peak memory.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tsqa_core::metrics::K_MAX;
use tsqa_core::{
    random_answer, read, CandidatePool, LexicalReader, MatchMode, Reader, ReaderParams,
    SentenceIndex, Table, TextualContext,
};

use crate::adapter::ExternalReader;
use crate::bundle::{Benchmark, BenchmarkQuestion, QType};
use crate::memory::MemorySampler;
use crate::store::{contexts_for, sentence_contexts};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Reader pipeline with the built-in lexical reader.
    Lexical,
    /// Reader pipeline with an adapter process.
    External,
    Random,
    /// Sentence retrieval over the TF-IDF index.
    Lucene,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::Lexical,
        SystemKind::External,
        SystemKind::Random,
        SystemKind::Lucene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Lexical => "lexical",
            SystemKind::External => "external",
            SystemKind::Random => "random",
            SystemKind::Lucene => "lucene",
        }
    }

    /// Sentence answers are judged by containment, everything else exactly.
    pub fn default_match(self) -> MatchMode {
        match self {
            SystemKind::Lucene => MatchMode::Containment,
            _ => MatchMode::Exact,
        }
    }

    pub fn valid_names() -> String {
        let mut names: Vec<&str> = Self::ALL.iter().map(|s| s.name()).collect();
        names.push("retrieval");
        names.join(", ")
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lexical" => Ok(SystemKind::Lexical),
            "external" => Ok(SystemKind::External),
            "random" => Ok(SystemKind::Random),
            "lucene" | "retrieval" => Ok(SystemKind::Lucene),
            other => Err(Error::UnknownSystem {
                name: other.to_string(),
                valid: Self::valid_names(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub params: ReaderParams,
    /// Overrides each system's default match mode.
    pub match_mode: Option<MatchMode>,
    pub seed: u64,
    pub workers: usize,
    /// Count table verbalization inside each question's latency.
    pub time_context: bool,
    /// Required by [`SystemKind::External`].
    pub adapter_cmd: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ReaderParams::default(),
            match_mode: None,
            seed: 0,
            workers: 1,
            time_context: false,
            adapter_cmd: None,
        }
    }
}

impl RunConfig {
    pub fn timing_mode(&self) -> &'static str {
        if self.time_context {
            "including-context"
        } else {
            "prebuilt-context"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub table_id: String,
    pub qtype: QType,
    pub gold: Vec<String>,
    /// At most [`K_MAX`] answers, best first.
    pub answers: Vec<String>,
    pub latency_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub system: String,
    pub match_mode: MatchMode,
    pub timing_mode: String,
    pub workers: usize,
    pub peak_memory_bytes: u64,
    pub results: Vec<QuestionResult>,
}

impl RunRecord {
    pub fn avg_latency_secs(&self) -> f64 {
        if self.results.is_empty() {
            0.0
        } else {
            self.results.iter().map(|r| r.latency_secs).sum::<f64>() / self.results.len() as f64
        }
    }
}

/// Questions whose type is in `filter`; an empty filter keeps everything.
/// Indices refer to the full question list.
pub fn select(questions: &[BenchmarkQuestion], filter: &[QType]) -> Vec<usize> {
    (0..questions.len())
        .filter(|&i| filter.is_empty() || filter.contains(&questions[i].qtype))
        .collect()
}

enum Engine {
    Reader(Box<dyn Reader + Sync>),
    Random(Vec<CandidatePool>),
    Lucene(SentenceIndex),
}

struct Prepared<'b> {
    bench: &'b Benchmark,
    contexts: Vec<TextualContext>,
    engine: Engine,
}

impl Prepared<'_> {
    fn answer(
        &self,
        table: usize,
        index: usize,
        q: &BenchmarkQuestion,
        config: &RunConfig,
    ) -> Result<Vec<String>> {
        let table_ref: &Table = &self.bench.tables[table];
        let params = ReaderParams {
            top_k: K_MAX,
            ..config.params
        };
        let answers = match &self.engine {
            Engine::Reader(reader) => {
                let fresh;
                let context = if config.time_context {
                    fresh = contexts_for(std::slice::from_ref(table_ref))?.remove(0);
                    &fresh
                } else {
                    &self.contexts[table]
                };
                read(&q.text, context, &params, reader.as_ref())?
                    .into_iter()
                    .map(|c| c.text)
                    .collect()
            }
            Engine::Random(pools) => {
                let pool = if config.time_context {
                    CandidatePool::from_table(table_ref)
                } else {
                    pools[table].clone()
                };
                random_answer(&pool, K_MAX, config.seed.wrapping_add(index as u64))
            }
            Engine::Lucene(index) => {
                if config.time_context {
                    sentence_contexts(std::slice::from_ref(table_ref))?;
                }
                index.retrieve_answers(&q.text, K_MAX)
            }
        };
        Ok(answers)
    }
}

/// Runs `system` over the questions selected by `filter`.
///
/// Per-question failures are logged and recorded as empty answer lists.
pub fn run_experiment(
    system: SystemKind,
    bench: &Benchmark,
    filter: &[QType],
    config: &RunConfig,
) -> Result<RunRecord> {
    config.params.validate()?;
    let sampler = MemorySampler::start();
    let contexts = if matches!(system, SystemKind::Lexical | SystemKind::External) {
        contexts_for(&bench.tables)?
    } else {
        Vec::new()
    };
    let mut workers = config.workers.max(1);
    let engine = match system {
        SystemKind::Lexical => Engine::Reader(Box::new(LexicalReader)),
        SystemKind::External => {
            let cmd = config
                .adapter_cmd
                .as_deref()
                .ok_or_else(|| Error::AdapterCommand(String::new()))?;
            let reader = std::sync::Arc::new(ExternalReader::spawn(cmd, workers)?);
            let tracked = reader.clone();
            sampler.track(move || tracked.pids());
            Engine::Reader(Box::new(SharedReader(reader)))
        }
        SystemKind::Random => {
            Engine::Random(bench.tables.iter().map(CandidatePool::from_table).collect())
        }
        SystemKind::Lucene => {
            Engine::Lucene(SentenceIndex::build(&sentence_contexts(&bench.tables)?))
        }
    };
    if let Engine::Reader(r) = &engine {
        if !r.supports_concurrency() {
            workers = 1;
        }
    }
    let prepared = Prepared {
        bench,
        contexts,
        engine,
    };

    let selected = select(&bench.questions, filter);
    let slots: Vec<Mutex<Option<QuestionResult>>> =
        selected.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&qi) = selected.get(i) else { break };
        let q = &bench.questions[qi];
        let table = bench
            .table_index(&q.table_id)
            .expect("loader checked table ids");
        let start = Instant::now();
        let outcome = prepared.answer(table, qi, q, config);
        let latency_secs = start.elapsed().as_secs_f64();
        let (mut answers, error) = match outcome {
            Ok(a) => (a, None),
            Err(e) => {
                log::warn!("{system} failed on question {}: {e}", q.id);
                (Vec::new(), Some(e.to_string()))
            }
        };
        answers.truncate(K_MAX);
        *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(QuestionResult {
            id: q.id.clone(),
            table_id: q.table_id.clone(),
            qtype: q.qtype,
            gold: q.gold_answers.clone(),
            answers,
            latency_secs,
            error,
        });
    };
    std::thread::scope(|s| {
        for _ in 1..workers.min(selected.len()) {
            s.spawn(work);
        }
        work();
    });

    let results = slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|p| p.into_inner())
                .expect("every question ran")
        })
        .collect();
    drop(prepared);
    Ok(RunRecord {
        system: system.name().to_string(),
        match_mode: config.match_mode.unwrap_or(system.default_match()),
        timing_mode: config.timing_mode().to_string(),
        workers,
        peak_memory_bytes: sampler.finish(),
        results,
    })
}

struct SharedReader(std::sync::Arc<ExternalReader>);

impl Reader for SharedReader {
    fn read_window(
        &self,
        question: &str,
        window: &tsqa_core::Window<'_>,
        params: &ReaderParams,
    ) -> std::result::Result<Vec<tsqa_core::AnswerCandidate>, tsqa_core::ReaderError> {
        self.0.read_window(question, window, params)
    }

    fn supports_concurrency(&self) -> bool {
        self.0.supports_concurrency()
    }
}
