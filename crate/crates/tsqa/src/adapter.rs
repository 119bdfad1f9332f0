//! Client for out-of-process readers speaking newline-delimited JSON.
//!
//! Each request carries one window's text; offsets in responses count
//! Unicode scalar values into that text and are converted to bytes here.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tsqa_core::{AnswerCandidate, Reader, ReaderError, ReaderParams, Span, Window};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub id: String,
    pub question: String,
    pub context: String,
    pub top_k: usize,
    pub max_answer_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAnswer {
    pub text: String,
    pub score: f64,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadResponse {
    pub id: String,
    #[serde(default)]
    pub answers: Vec<WireAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Splits an adapter command line with shell quoting rules.
pub fn parse_command(command: &str) -> Result<Vec<String>> {
    match shlex::split(command) {
        Some(argv) if !argv.is_empty() => Ok(argv),
        _ => Err(Error::AdapterCommand(command.to_string())),
    }
}

/// Byte offset of every char boundary in `text`, including the end.
fn char_boundaries(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain([text.len()])
        .collect()
}

/// Turns wire answers into window-local candidates, dropping any that are
/// out of range or whose text does not match the span.
pub fn answers_to_candidates(context: &str, answers: &[WireAnswer]) -> Vec<AnswerCandidate> {
    let bounds = char_boundaries(context);
    let mut out = Vec::with_capacity(answers.len());
    for a in answers {
        let (Some(&start), Some(&end)) = (bounds.get(a.start), bounds.get(a.end)) else {
            log::debug!("dropping answer {:?}: offsets out of range", a.text);
            continue;
        };
        if start >= end || context[start..end] != a.text || !a.score.is_finite() {
            log::debug!("dropping answer {:?}: span does not match text", a.text);
            continue;
        }
        out.push(AnswerCandidate::new(
            a.text.clone(),
            a.score,
            Span::new(start, end),
        ));
    }
    out
}

struct Session {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl Session {
    fn spawn(argv: &[String]) -> std::io::Result<Session> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Session {
            child,
            stdin,
            stdout,
        })
    }

    fn exchange(&mut self, request: &ReadRequest) -> std::result::Result<ReadResponse, String> {
        let line = serde_json::to_string(request).map_err(|e| e.to_string())?;
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("write failed: {e}"))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| format!("read failed: {e}"))?;
        if n == 0 {
            return Err("adapter closed its output".to_string());
        }
        let response: ReadResponse = serde_json::from_str(reply.trim_end())
            .map_err(|e| format!("malformed response: {e}"))?;
        if response.id != request.id {
            return Err(format!(
                "response id {:?} does not match request {:?}",
                response.id, request.id
            ));
        }
        Ok(response)
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A [`Reader`] backed by one adapter process per worker.
///
/// A session that dies or garbles a reply is restarted once before the
/// window is reported as unavailable.
pub struct ExternalReader {
    command: String,
    argv: Vec<String>,
    sessions: Vec<Mutex<Option<Session>>>,
    next_id: AtomicU64,
    rotate: AtomicU64,
}

impl ExternalReader {
    /// Starts the first adapter process; the others start on demand.
    pub fn spawn(command: &str, workers: usize) -> Result<ExternalReader> {
        let argv = parse_command(command)?;
        let first = Session::spawn(&argv).map_err(|source| Error::AdapterLaunch {
            command: command.to_string(),
            source,
        })?;
        let mut sessions = vec![Mutex::new(Some(first))];
        sessions.extend((1..workers.max(1)).map(|_| Mutex::new(None)));
        Ok(ExternalReader {
            command: command.to_string(),
            argv,
            sessions,
            next_id: AtomicU64::new(0),
            rotate: AtomicU64::new(0),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Process ids of live adapter sessions.
    pub fn pids(&self) -> Vec<u32> {
        self.sessions
            .iter()
            .filter_map(|s| s.lock().ok()?.as_ref().map(|s| s.child.id()))
            .collect()
    }

    fn lock_free_session(&self) -> std::sync::MutexGuard<'_, Option<Session>> {
        for s in &self.sessions {
            if let Ok(guard) = s.try_lock() {
                return guard;
            }
        }
        let i = self.rotate.fetch_add(1, Ordering::Relaxed) as usize % self.sessions.len();
        self.sessions[i]
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Sends one request, restarting the session once on failure.
    pub fn request(&self, request: &ReadRequest) -> std::result::Result<ReadResponse, String> {
        let mut guard = self.lock_free_session();
        let mut last_error = String::new();
        for attempt in 0..2 {
            if guard.is_none() {
                match Session::spawn(&self.argv) {
                    Ok(s) => *guard = Some(s),
                    Err(e) => {
                        last_error = format!("could not launch adapter {:?}: {e}", self.command);
                        continue;
                    }
                }
            }
            let session = guard.as_mut().expect("session present");
            match session.exchange(request) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    if attempt == 0 {
                        log::warn!("adapter session failed ({e}); restarting");
                    }
                    session.kill();
                    *guard = None;
                    last_error = e;
                }
            }
        }
        Err(last_error)
    }
}

impl Reader for ExternalReader {
    fn read_window(
        &self,
        question: &str,
        window: &Window<'_>,
        params: &ReaderParams,
    ) -> std::result::Result<Vec<AnswerCandidate>, ReaderError> {
        let context = window.text();
        if context.trim().is_empty() {
            return Ok(Vec::new());
        }
        let request = ReadRequest {
            id: format!("r{}", self.next_id.fetch_add(1, Ordering::Relaxed)),
            question: question.to_string(),
            context: context.to_string(),
            top_k: params.top_k,
            max_answer_len: params.max_answer_len,
        };
        let response = self
            .request(&request)
            .map_err(|message| ReaderError::Unavailable {
                window: window.index,
                message,
            })?;
        if let Some(message) = response.error {
            return Err(ReaderError::Rejected {
                window: window.index,
                message,
            });
        }
        Ok(answers_to_candidates(context, &response.answers))
    }

    fn supports_concurrency(&self) -> bool {
        self.sessions.len() > 1
    }
}

impl Drop for ExternalReader {
    fn drop(&mut self) {
        for s in &mut self.sessions {
            let slot = s.get_mut().unwrap_or_else(|p| p.into_inner());
            if let Some(session) = slot.as_mut() {
                session.kill();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_splitting() {
        assert_eq!(
            parse_command("python3 'my adapter.py' --model x").unwrap(),
            ["python3", "my adapter.py", "--model", "x"]
        );
        assert!(parse_command("  ").is_err());
        assert!(parse_command("unterminated 'quote").is_err());
    }

    #[test]
    fn offsets_are_code_points() {
        let ctx = "Größe is \"groß\".";
        let a = WireAnswer {
            text: "groß".into(),
            score: 0.5,
            start: 10,
            end: 14,
        };
        let c = answers_to_candidates(ctx, &[a]);
        assert_eq!(c.len(), 1);
        assert_eq!(&ctx[c[0].span.range()], "groß");
    }

    #[test]
    fn mismatched_answers_are_dropped() {
        let ctx = "abc def";
        let bad = [
            WireAnswer {
                text: "abc".into(),
                score: 1.0,
                start: 1,
                end: 4,
            },
            WireAnswer {
                text: "x".into(),
                score: 1.0,
                start: 5,
                end: 99,
            },
            WireAnswer {
                text: "".into(),
                score: 1.0,
                start: 2,
                end: 2,
            },
        ];
        assert!(answers_to_candidates(ctx, &bad).is_empty());
    }

    #[test]
    fn response_error_is_optional() {
        let r: ReadResponse = serde_json::from_str(r#"{"id":"a","answers":[]}"#).unwrap();
        assert_eq!(r.error, None);
        let r: ReadResponse = serde_json::from_str(r#"{"id":"unknown","error":"bad"}"#).unwrap();
        assert!(r.answers.is_empty());
    }

    #[test]
    fn missing_program_is_a_launch_error() {
        let err = ExternalReader::spawn("/nonexistent/adapter-binary", 1)
            .err()
            .unwrap();
        assert!(matches!(err, Error::AdapterLaunch { .. }));
        assert!(err.to_string().contains("unavailable"));
    }
}
