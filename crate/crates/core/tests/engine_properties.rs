use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use proptest::prelude::*;

use seqbench::engine::{compute_rate, run_parallel, run_stream_with, EngineError, IoObserver, RunOptions};
use seqbench::targets::BlockDevice;
use seqbench::{Mode, RunSpec, TargetHandle};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Issued(u64, u32),
    Completed(u64, u32),
}

#[derive(Default)]
struct Log(Mutex<Vec<Event>>);

impl IoObserver for Log {
    fn issued(&self, offset: u64, in_flight: u32) {
        self.0.lock().unwrap().push(Event::Issued(offset, in_flight));
    }
    fn completed(&self, offset: u64, in_flight: u32) {
        self.0.lock().unwrap().push(Event::Completed(offset, in_flight));
    }
}

/// In-memory device; optionally fails the request at byte offset `fail_at`.
struct Mem {
    len: u64,
    fail_at: Option<u64>,
    requests: AtomicU64,
}

impl Mem {
    fn new(len: u64) -> Self {
        Self { len, fail_at: None, requests: AtomicU64::new(0) }
    }

    fn access(&self, offset: u64, n: usize) -> io::Result<()> {
        assert!(offset + n as u64 <= self.len, "request past the end");
        self.requests.fetch_add(1, Ordering::SeqCst);
        if self.fail_at == Some(offset) {
            return Err(io::Error::other("injected failure"));
        }
        std::thread::yield_now();
        Ok(())
    }
}

impl BlockDevice for Mem {
    fn len(&self) -> u64 {
        self.len
    }
    fn granule(&self) -> Option<u64> {
        Some(512)
    }
    fn read_at(&self, buf: &mut [u8], offset: u64) -> io::Result<()> {
        self.access(offset, buf.len())
    }
    fn write_at(&self, buf: &[u8], offset: u64) -> io::Result<()> {
        self.access(offset, buf.len())
    }
}

fn run_logged(dev: Mem, spec: &RunSpec) -> (Result<seqbench::StreamResult, EngineError>, Vec<Event>) {
    let handle = TargetHandle::from_device("mem", Arc::new(dev));
    let log = Log::default();
    let r = run_stream_with(&handle, spec, RunOptions { observer: Some(&log), ..RunOptions::default() });
    (r, log.0.into_inner().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_state_keeps_depth_outstanding(
        depth in 1u32..=8,
        block_sectors in 1u64..=16,
        start_sectors in 0u64..8,
        extra_blocks in 1u64..12,
        tail in 0u64..512,
        write in any::<bool>(),
    ) {
        let block = block_sectors * 512;
        let start = start_sectors * 512;
        let len = start + extra_blocks * block + tail;
        let mode = if write { Mode::Write } else { Mode::Read };
        let spec = RunSpec::new(mode, block, depth, 0.02).with_start_offset(start);
        let (r, events) = run_logged(Mem::new(len), &spec);
        let r = r.unwrap();

        let issued: Vec<(u64, u32)> =
            events.iter().filter_map(|e| if let Event::Issued(o, f) = e { Some((*o, *f)) } else { None }).collect();
        let usable = extra_blocks * block;
        for (k, (off, _)) in issued.iter().enumerate() {
            prop_assert_eq!(*off, start + (k as u64 * block) % usable);
        }

        // ramp-up, then every completion is immediately replaced until drain
        let ramp = depth.min(issued.len() as u32) as usize;
        for (k, (_, f)) in issued.iter().enumerate() {
            let want = if k < ramp { k as u32 + 1 } else { depth };
            prop_assert_eq!(*f, want);
        }
        let last_issue = events.iter().rposition(|e| matches!(e, Event::Issued(..))).unwrap();
        for e in &events[..last_issue] {
            if let Event::Completed(_, f) = e {
                prop_assert_eq!(*f, depth - 1);
            }
        }
        let drained = events[last_issue + 1..].iter().all(|e| matches!(e, Event::Completed(..)));
        prop_assert!(drained);

        prop_assert_eq!(r.bytes_transferred, r.io_count * block);
        prop_assert_eq!(r.io_count, issued.len() as u64);
        prop_assert!(r.max_in_flight <= depth);
        let independent = r.bytes_transferred as f64 / r.elapsed_s / 1_000_000.0;
        prop_assert!((r.rate_mbps - independent).abs() <= 1e-9 * independent.max(1e-300));
    }

    #[test]
    fn parallel_bytes_are_the_sum_of_streams(n in 1usize..4, depth in 1u32..4) {
        let streams: Vec<_> = (0..n)
            .map(|i| {
                let h = TargetHandle::from_device(format!("mem{i}"), Arc::new(Mem::new(64 * 4096)));
                (h, RunSpec::new(Mode::Read, 4096, depth, 0.02))
            })
            .collect();
        let agg = run_parallel(&streams).unwrap();
        prop_assert_eq!(agg.streams.len(), n);
        prop_assert_eq!(agg.bytes_transferred, agg.streams.iter().map(|s| s.bytes_transferred).sum::<u64>());
        let window = agg.streams.iter().map(|s| s.elapsed_s).fold(0.0, f64::max);
        prop_assert_eq!(agg.window_s, window);
        prop_assert_eq!(agg.rate_mbps, compute_rate(agg.bytes_transferred, window).unwrap());
    }
}

#[test]
fn first_error_returns_partial_result() {
    let dev = Mem { len: 64 * 4096, fail_at: Some(10 * 4096), requests: AtomicU64::new(0) };
    let (r, events) = run_logged(dev, &RunSpec::new(Mode::Read, 4096, 4, 5.0));
    match r {
        Err(EngineError::Io { source, partial }) => {
            assert!(source.to_string().contains("injected"));
            assert_eq!(partial.bytes_transferred, partial.io_count * 4096);
            assert!(partial.io_count >= 10 && partial.io_count < 20, "{}", partial.io_count);
            // issuing stopped right after the failure and everything drained
            let issued = events.iter().filter(|e| matches!(e, Event::Issued(..))).count();
            let completed = events.iter().filter(|e| matches!(e, Event::Completed(..))).count();
            assert_eq!(issued, completed);
            assert!(issued < 20);
        }
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn spec_errors_precede_io() {
    let h = TargetHandle::from_device("mem", Arc::new(Mem::new(8192)));
    let too_big = RunSpec::new(Mode::Read, 16384, 1, 0.1);
    assert!(matches!(run_stream_with(&h, &too_big, RunOptions::default()), Err(EngineError::InvalidSpec(_))));
    let misaligned = RunSpec::new(Mode::Read, 1000, 1, 0.1);
    assert!(run_stream_with(&h, &misaligned, RunOptions::default()).is_err());
    let mixed = [
        (h.clone(), RunSpec::new(Mode::Read, 4096, 1, 0.1)),
        (h, RunSpec::new(Mode::Read, 4096, 1, 0.2)),
    ];
    assert!(matches!(run_parallel(&mixed), Err(EngineError::MixedDuration)));
    assert!(matches!(run_parallel(&[]), Err(EngineError::NoStreams)));
}
