//! Answer matching and rank metrics.
//!
//! Every metric is computed from per-question [`Judgement`]s: whether the
//! system returned anything, and the rank of its first correct answer.
//!
//! * `R@k` = questions with a hit at rank ≤ k / all questions.
//! * `P@k` = questions with a hit at rank ≤ k / questions with ≥ 1 answer.
//! * Global precision = hits at rank 1 / all questions; global recall = `R@10`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::normalize_cell;

/// Ranked lists are cut at this depth before judging.
pub const K_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Normalized strings are equal.
    Exact,
    /// The normalized gold answer is a substring of the normalized candidate.
    Containment,
}

/// Whether `candidate` answers `gold` under `mode`. An empty gold never matches.
pub fn answer_matches(candidate: &str, gold: &str, mode: MatchMode) -> bool {
    let gold = normalize_cell(gold);
    if gold.is_empty() {
        return false;
    }
    let candidate = normalize_cell(candidate);
    match mode {
        MatchMode::Exact => candidate == gold,
        MatchMode::Containment => candidate.contains(gold.as_str()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Judgement {
    pub answered: bool,
    /// 1-based rank of the first matching answer.
    pub first_hit: Option<usize>,
}

impl Judgement {
    pub fn hit_at(&self, k: usize) -> bool {
        self.first_hit.is_some_and(|r| r <= k)
    }
}

/// Judges one ranked answer list, looking at the first [`K_MAX`] entries.
pub fn judge<A: AsRef<str>, G: AsRef<str>>(
    answers: &[A],
    gold: &[G],
    mode: MatchMode,
) -> Judgement {
    let ranked = &answers[..answers.len().min(K_MAX)];
    let first_hit = ranked
        .iter()
        .position(|a| {
            gold.iter()
                .any(|g| answer_matches(a.as_ref(), g.as_ref(), mode))
        })
        .map(|i| i + 1);
    Judgement {
        answered: !ranked.is_empty(),
        first_hit,
    }
}

/// Judges every question; `results[i]` is scored against `golds[i]`.
pub fn judge_all<A: AsRef<str>, G: AsRef<str>>(
    results: &[Vec<A>],
    golds: &[Vec<G>],
    mode: MatchMode,
) -> Vec<Judgement> {
    results
        .iter()
        .zip(golds)
        .map(|(answers, gold)| judge(answers, gold, mode))
        .collect()
}

pub fn hits_at_k(judgements: &[Judgement], k: usize) -> usize {
    judgements.iter().filter(|j| j.hit_at(k)).count()
}

pub fn answered(judgements: &[Judgement]) -> usize {
    judgements.iter().filter(|j| j.answered).count()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn recall_at_k(judgements: &[Judgement], k: usize) -> f64 {
    ratio(hits_at_k(judgements, k), judgements.len())
}

/// Zero when no question was answered.
pub fn precision_at_k(judgements: &[Judgement], k: usize) -> f64 {
    ratio(hits_at_k(judgements, k), answered(judgements))
}

/// Harmonic mean, zero when both inputs are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn global_metrics(judgements: &[Judgement]) -> GlobalMetrics {
    let precision = ratio(hits_at_k(judgements, 1), judgements.len());
    let recall = recall_at_k(judgements, K_MAX);
    GlobalMetrics {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no systems to compare")]
    Empty,
    #[error("resource values must be finite and non-negative")]
    InvalidValue,
    #[error("all resource values are zero")]
    AllZero,
}

fn inverse_share(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(MetricError::InvalidValue);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MetricError::AllZero);
    }
    Ok(values.iter().map(|v| 1.0 - v / max).collect())
}

/// `1 - avg_time / max(avg_time)` per system.
pub fn inv_time(avg_seconds: &[f64]) -> Result<Vec<f64>, MetricError> {
    inverse_share(avg_seconds)
}

/// `1 - memory / max(memory)` per system.
pub fn inv_memory(bytes: &[u64]) -> Result<Vec<f64>, MetricError> {
    let values: Vec<f64> = bytes.iter().map(|b| *b as f64).collect();
    inverse_share(&values)
}
