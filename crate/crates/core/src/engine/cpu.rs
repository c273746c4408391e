//! Processor utilization sampling.
//!
//! Utilization is reported two ways: as a share of all processors, and
//! expressed against a single processor (`one_proc = total × n_processors`),
//! so 10% of a two-way machine is 20% of one processor.

use std::sync::mpsc;
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpuSample {
    pub cpu_total_pct: f64,
    pub cpu_one_proc_pct: f64,
    pub n_processors: u32,
}

impl CpuSample {
    pub fn from_total(cpu_total_pct: f64, n_processors: u32) -> Self {
        Self {
            cpu_total_pct,
            cpu_one_proc_pct: cpu_total_pct * f64::from(n_processors),
            n_processors,
        }
    }

    pub fn from_one_proc(cpu_one_proc_pct: f64, n_processors: u32) -> Self {
        Self {
            cpu_total_pct: cpu_one_proc_pct / f64::from(n_processors.max(1)),
            cpu_one_proc_pct,
            n_processors,
        }
    }

    pub fn idle(n_processors: u32) -> Self {
        Self::from_total(0.0, n_processors)
    }
}

#[derive(Debug, Error)]
pub enum CpuError {
    #[error("CPU sampling is not supported on this platform")]
    Unsupported,
}

#[derive(Clone, Copy, Debug)]
struct Ticks {
    busy: u64,
    total: u64,
}

#[cfg(target_os = "linux")]
fn read_ticks() -> Option<(Ticks, u32)> {
    let stat = std::fs::read_to_string("/proc/stat").ok()?;
    parse_proc_stat(&stat)
}

#[cfg(not(target_os = "linux"))]
fn read_ticks() -> Option<(Ticks, u32)> {
    None
}

fn parse_proc_stat(stat: &str) -> Option<(Ticks, u32)> {
    let mut lines = stat.lines();
    let first = lines.next()?;
    let mut fields = first.split_whitespace();
    if fields.next()? != "cpu" {
        return None;
    }
    let vals: Vec<u64> = fields.filter_map(|f| f.parse().ok()).collect();
    if vals.len() < 4 {
        return None;
    }
    // guest time is already folded into user/nice
    let total: u64 = vals.iter().take(8).sum();
    let idle = vals[3] + vals.get(4).copied().unwrap_or(0);
    let n = stat
        .lines()
        .filter(|l| l.starts_with("cpu") && l.as_bytes().get(3).is_some_and(u8::is_ascii_digit))
        .count() as u32;
    Some((Ticks { busy: total - idle, total }, n.max(1)))
}

fn delta(a: Ticks, b: Ticks, n: u32) -> CpuSample {
    let total = b.total.saturating_sub(a.total);
    if total == 0 {
        return CpuSample::idle(n);
    }
    let busy = b.busy.saturating_sub(a.busy);
    CpuSample::from_total(busy as f64 * 100.0 / total as f64, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpuTrace {
    pub samples: Vec<CpuSample>,
    /// Utilization over the whole sampling window.
    pub overall: CpuSample,
}

/// Background sampler started by [`sample_cpu`].
pub struct CpuSampler {
    start: Ticks,
    n: u32,
    stop_tx: mpsc::Sender<()>,
    worker: JoinHandle<Vec<CpuSample>>,
}

/// Starts sampling system-wide utilization every `interval_ms`.
pub fn sample_cpu(interval_ms: u64) -> Result<CpuSampler, CpuError> {
    let (start, n) = read_ticks().ok_or(CpuError::Unsupported)?;
    let (stop_tx, stop_rx) = mpsc::channel::<()>();
    let interval = Duration::from_millis(interval_ms.max(1));
    let worker = std::thread::spawn(move || {
        let mut samples = Vec::new();
        let mut prev = start;
        while let Err(mpsc::RecvTimeoutError::Timeout) = stop_rx.recv_timeout(interval) {
            if let Some((now, n)) = read_ticks() {
                samples.push(delta(prev, now, n));
                prev = now;
            }
        }
        samples
    });
    Ok(CpuSampler { start, n, stop_tx, worker })
}

impl CpuSampler {
    pub fn stop(self) -> CpuTrace {
        let _ = self.stop_tx.send(());
        let samples = self.worker.join().unwrap_or_default();
        let overall = match read_ticks() {
            Some((end, n)) => delta(self.start, end, n),
            None => CpuSample::idle(self.n),
        };
        CpuTrace { samples, overall }
    }
}
