//! Peak resident memory, sampled from `/proc` on a background thread.

use std::fs;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

pub const SAMPLE_INTERVAL: Duration = Duration::from_millis(100);

/// Resident set size of `pid` in bytes, if the platform exposes it.
pub fn rss_bytes(pid: u32) -> Option<u64> {
    let status = fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

type PidSource = Arc<dyn Fn() -> Vec<u32> + Send + Sync>;

/// Tracks the peak combined RSS of this process and any extra pids.
pub struct MemorySampler {
    peak: Arc<AtomicU64>,
    stop: Option<Sender<()>>,
    extra: Arc<Mutex<Option<PidSource>>>,
    handle: Option<JoinHandle<()>>,
}

fn sample(extra: &Mutex<Option<PidSource>>) -> u64 {
    let mut total = rss_bytes(std::process::id()).unwrap_or(0);
    let source = extra.lock().ok().and_then(|g| g.clone());
    if let Some(source) = source {
        total += source().into_iter().filter_map(rss_bytes).sum::<u64>();
    }
    total
}

impl MemorySampler {
    pub fn start() -> MemorySampler {
        let peak = Arc::new(AtomicU64::new(0));
        let (stop, stopped) = mpsc::channel::<()>();
        let extra: Arc<Mutex<Option<PidSource>>> = Arc::new(Mutex::new(None));
        peak.fetch_max(sample(&extra), Ordering::Relaxed);
        let handle = {
            let (peak, extra) = (peak.clone(), extra.clone());
            std::thread::spawn(move || {
                while let Err(RecvTimeoutError::Timeout) = stopped.recv_timeout(SAMPLE_INTERVAL) {
                    peak.fetch_max(sample(&extra), Ordering::Relaxed);
                }
            })
        };
        MemorySampler {
            peak,
            stop: Some(stop),
            extra,
            handle: Some(handle),
        }
    }

    /// Also counts the processes returned by `pids` (e.g. reader adapters).
    pub fn track(&self, pids: impl Fn() -> Vec<u32> + Send + Sync + 'static) {
        if let Ok(mut g) = self.extra.lock() {
            *g = Some(Arc::new(pids));
        }
    }

    /// Stops sampling and returns the peak in bytes.
    pub fn finish(mut self) -> u64 {
        self.peak.fetch_max(sample(&self.extra), Ordering::Relaxed);
        self.shutdown();
        self.peak.load(Ordering::Relaxed)
    }

    fn shutdown(&mut self) {
        drop(self.stop.take());
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MemorySampler {
    fn drop(&mut self) {
        self.shutdown();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_rss_is_visible_on_linux() {
        if cfg!(target_os = "linux") {
            assert!(rss_bytes(std::process::id()).unwrap() > 0);
        }
        assert_eq!(rss_bytes(u32::MAX), None);
    }

    #[test]
    fn sampler_reports_a_peak() {
        let s = MemorySampler::start();
        s.track(Vec::new);
        let peak = s.finish();
        if cfg!(target_os = "linux") {
            assert!(peak > 0);
        }
    }
}
