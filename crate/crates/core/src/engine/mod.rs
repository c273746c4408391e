//! Overlapped sequential I/O engine.
//!
//! [`run_stream`] keeps up to `depth` fixed-size requests outstanding against a
//! target for a fixed wall-clock duration, issuing offsets strictly
//! sequentially and wrapping back to the start offset at the end of the target.
//! Real devices are driven by a pool of `depth` blocking workers fed from a
//! single issuer; simulated disks run on a virtual clock.

mod cpu;
mod pipeline;

use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::{Arc, Barrier};

use thiserror::Error;

use crate::targets::{Backend, BackendKind, SimTarget, TargetError, TargetHandle};
use crate::topomodel::TopoError;

pub use cpu::{sample_cpu, CpuError, CpuSample, CpuSampler, CpuTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Read,
    Write,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Read => "read",
            Mode::Write => "write",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" | "r" => Ok(Mode::Read),
            "write" | "w" => Ok(Mode::Write),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Buffering {
    /// Go through the OS page cache.
    Os,
    /// Bypass software caching (`O_DIRECT` where the filesystem allows it).
    Unbuffered,
}

/// Parameters of one benchmark stream.
///
/// On reaching the end of the target the stream restarts at `start_offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub block_bytes: u64,
    pub depth: u32,
    pub duration_s: f64,
    pub buffering: Buffering,
    pub start_offset: u64,
}

pub const MIN_BLOCK_BYTES: u64 = 512;

impl RunSpec {
    pub fn new(mode: Mode, block_bytes: u64, depth: u32, duration_s: f64) -> Self {
        Self {
            mode,
            block_bytes,
            depth,
            duration_s,
            buffering: Buffering::Unbuffered,
            start_offset: 0,
        }
    }

    pub fn with_buffering(mut self, buffering: Buffering) -> Self {
        self.buffering = buffering;
        self
    }

    pub fn with_start_offset(mut self, start_offset: u64) -> Self {
        self.start_offset = start_offset;
        self
    }

    /// Target-independent invariants.
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.depth == 0 {
            return Err(EngineError::InvalidSpec("depth must be at least 1".into()));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(EngineError::InvalidSpec(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.block_bytes < MIN_BLOCK_BYTES {
            return Err(EngineError::InvalidSpec(format!(
                "block size {} is below the {MIN_BLOCK_BYTES}-byte minimum",
                self.block_bytes
            )));
        }
        Ok(())
    }

    /// Invariants that depend on the target's size and alignment granule.
    pub fn validate_for(&self, handle: &TargetHandle) -> Result<(), EngineError> {
        self.validate()?;
        if self.buffering == Buffering::Unbuffered {
            let granule = handle.granule().ok_or_else(|| {
                EngineError::Target(TargetError::AlignmentUnsupported(handle.locator().into()))
            })?;
            if !self.block_bytes.is_multiple_of(granule) || !self.start_offset.is_multiple_of(granule) {
                return Err(EngineError::InvalidSpec(format!(
                    "unbuffered I/O needs block size and start offset aligned to {granule} bytes"
                )));
            }
        }
        let size = handle.size();
        if self.start_offset.saturating_add(self.block_bytes) > size {
            return Err(EngineError::InvalidSpec(format!(
                "target of {size} bytes cannot hold one {}-byte block at offset {}",
                self.block_bytes, self.start_offset
            )));
        }
        if self.mode == Mode::Write && !handle.writable() {
            return Err(EngineError::InvalidSpec(format!(
                "{} is not open for writing",
                handle.locator()
            )));
        }
        Ok(())
    }

    /// Bytes cycled through before the offset wraps back to `start_offset`.
    pub fn usable_len(&self, target_len: u64) -> u64 {
        let span = target_len.saturating_sub(self.start_offset);
        span / self.block_bytes * self.block_bytes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamResult {
    pub locator: String,
    pub backend: BackendKind,
    pub mode: Mode,
    pub block_bytes: u64,
    pub depth: u32,
    pub bytes_transferred: u64,
    pub io_count: u64,
    pub elapsed_s: f64,
    pub rate_mbps: f64,
    pub max_in_flight: u32,
    /// `None` when CPU sampling is unsupported on this platform.
    pub cpu: Option<CpuSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub streams: Vec<StreamResult>,
    pub bytes_transferred: u64,
    pub window_s: f64,
    pub rate_mbps: f64,
    pub cpu: Option<CpuSample>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid run spec: {0}")]
    InvalidSpec(String),
    #[error("elapsed time must be positive")]
    ZeroElapsed,
    #[error("parallel streams must share one duration")]
    MixedDuration,
    #[error("no streams to run")]
    NoStreams,
    #[error("I/O failure after {} completed requests: {source}", partial.io_count)]
    Io {
        #[source]
        source: io::Error,
        partial: Box<StreamResult>,
    },
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Topology(#[from] TopoError),
}

/// Decimal megabytes per second.
pub fn compute_rate(bytes: u64, elapsed_s: f64) -> Result<f64, EngineError> {
    if !(elapsed_s > 0.0) {
        return Err(EngineError::ZeroElapsed);
    }
    Ok(bytes as f64 / 1e6 / elapsed_s)
}

/// Receives issue/complete events from the issuer thread, in order.
///
/// `in_flight` is the outstanding count after the event was applied.
pub trait IoObserver: Sync {
    fn issued(&self, offset: u64, in_flight: u32);
    fn completed(&self, offset: u64, in_flight: u32);
}

#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub observer: Option<&'a dyn IoObserver>,
    /// CPU sampling interval for real backends; `None` uses 250 ms.
    pub cpu_interval_ms: Option<u64>,
}

pub fn run_stream(handle: &TargetHandle, spec: &RunSpec) -> Result<StreamResult, EngineError> {
    run_stream_with(handle, spec, RunOptions::default())
}

pub fn run_stream_with(
    handle: &TargetHandle,
    spec: &RunSpec,
    opts: RunOptions<'_>,
) -> Result<StreamResult, EngineError> {
    spec.validate_for(handle)?;
    match handle.backend() {
        Backend::Sim(sim) => Ok(sim_stream(handle, sim, spec)?),
        Backend::Device(dev) => {
            let sampler = sample_cpu(opts.cpu_interval_ms.unwrap_or(250)).ok();
            let result = pipeline::run_device(handle, dev.as_ref(), spec, opts.observer, None);
            let cpu = sampler.map(|s| s.stop().overall);
            attach_cpu(result, cpu)
        }
    }
}

fn attach_cpu(
    result: Result<StreamResult, EngineError>,
    cpu: Option<CpuSample>,
) -> Result<StreamResult, EngineError> {
    match result {
        Ok(mut r) => {
            r.cpu = cpu;
            Ok(r)
        }
        Err(EngineError::Io { source, mut partial }) => {
            partial.cpu = cpu;
            Err(EngineError::Io { source, partial })
        }
        Err(e) => Err(e),
    }
}

fn sim_stream(
    handle: &TargetHandle,
    sim: &SimTarget,
    spec: &RunSpec,
) -> Result<StreamResult, TopoError> {
    let mut results = crate::targets::sim_run_joint(&[(handle, sim, spec)])?;
    Ok(results.remove(0))
}

/// Runs all streams concurrently behind a common start barrier and sums them.
///
/// Simulated streams that share a topology are solved jointly, so they contend
/// for common caps exactly as concurrent hardware streams would.
pub fn run_parallel(specs: &[(TargetHandle, RunSpec)]) -> Result<AggregateResult, EngineError> {
    let first = specs.first().ok_or(EngineError::NoStreams)?;
    let duration = first.1.duration_s;
    if specs.iter().any(|(_, s)| s.duration_s != duration) {
        return Err(EngineError::MixedDuration);
    }
    for (h, s) in specs {
        s.validate_for(h)?;
    }

    let mut results: Vec<Option<StreamResult>> = vec![None; specs.len()];

    let sims: Vec<(usize, (&TargetHandle, &SimTarget, &RunSpec))> = specs
        .iter()
        .enumerate()
        .filter_map(|(i, (h, s))| match h.backend() {
            Backend::Sim(sim) => Some((i, (h, sim, s))),
            Backend::Device(_) => None,
        })
        .collect();
    if !sims.is_empty() {
        let jobs: Vec<_> = sims.iter().map(|(_, j)| *j).collect();
        let solved = crate::targets::sim_run_joint(&jobs)?;
        for ((i, _), r) in sims.iter().zip(solved) {
            results[*i] = Some(r);
        }
    }

    let devices: Vec<(usize, &TargetHandle, &RunSpec)> = specs
        .iter()
        .enumerate()
        .filter(|(_, (h, _))| matches!(h.backend(), Backend::Device(_)))
        .map(|(i, (h, s))| (i, h, s))
        .collect();
    let mut cpu = None;
    if !devices.is_empty() {
        let barrier = Arc::new(Barrier::new(devices.len()));
        let sampler = sample_cpu(250).ok();
        let outcomes: Vec<(usize, Result<StreamResult, EngineError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = devices
                    .iter()
                    .map(|&(i, h, s)| {
                        let barrier = Arc::clone(&barrier);
                        scope.spawn(move || {
                            let Backend::Device(dev) = h.backend() else {
                                unreachable!("filtered to device backends")
                            };
                            (i, pipeline::run_device(h, dev.as_ref(), s, None, Some(&barrier)))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|j| j.join().expect("stream thread panicked"))
                    .collect()
            });
        cpu = sampler.map(|s| s.stop().overall);
        for (i, outcome) in outcomes {
            let mut r = outcome?;
            r.cpu = cpu;
            results[i] = Some(r);
        }
    }

    let streams: Vec<StreamResult> = results.into_iter().map(|r| r.expect("every stream ran")).collect();
    let bytes: u64 = streams.iter().map(|r| r.bytes_transferred).sum();
    let window = streams.iter().map(|r| r.elapsed_s).fold(0.0_f64, f64::max);
    let rate_mbps = compute_rate(bytes, window)?;
    if devices.is_empty() {
        cpu = sim_aggregate_cpu(&streams);
    }
    Ok(AggregateResult { streams, bytes_transferred: bytes, window_s: window, rate_mbps, cpu })
}

/// Simulated streams report model CPU for their own share; the aggregate is
/// their sum expressed on the same processor count.
fn sim_aggregate_cpu(streams: &[StreamResult]) -> Option<CpuSample> {
    let mut n = None;
    let mut one_proc = 0.0;
    for s in streams {
        let c = s.cpu?;
        if *n.get_or_insert(c.n_processors) != c.n_processors {
            return None;
        }
        one_proc += c.cpu_one_proc_pct;
    }
    n.map(|n| CpuSample::from_one_proc(one_proc, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_is_decimal_megabytes() {
        assert_eq!(compute_rate(3_000_000_000, 30.0).unwrap(), 100.0);
        assert_eq!(compute_rate(0, 30.0).unwrap(), 0.0);
        assert_eq!(compute_rate(1_048_576, 1.0).unwrap(), 1.048576);
        assert!(matches!(compute_rate(1, 0.0), Err(EngineError::ZeroElapsed)));
    }

    #[test]
    fn spec_invariants() {
        assert!(RunSpec::new(Mode::Read, 1 << 20, 4, 30.0).validate().is_ok());
        assert!(RunSpec::new(Mode::Read, 1 << 20, 0, 30.0).validate().is_err());
        assert!(RunSpec::new(Mode::Read, 1 << 20, 4, 0.0).validate().is_err());
        assert!(RunSpec::new(Mode::Read, 1 << 20, 4, f64::NAN).validate().is_err());
        assert!(RunSpec::new(Mode::Read, 256, 4, 1.0).validate().is_err());
    }

    #[test]
    fn usable_len_rounds_down_to_blocks() {
        let s = RunSpec::new(Mode::Read, 4096, 1, 1.0).with_start_offset(4096);
        assert_eq!(s.usable_len(4096 * 10 + 100), 4096 * 9);
        assert_eq!(s.usable_len(1000), 0);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("read".parse::<Mode>(), Ok(Mode::Read));
        assert_eq!("w".parse::<Mode>(), Ok(Mode::Write));
        assert!("trim".parse::<Mode>().is_err());
    }
}
