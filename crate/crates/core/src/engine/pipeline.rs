use std::sync::Barrier;
use std::time::{Duration, Instant};

use crossbeam_channel as channel;

use super::{compute_rate, EngineError, IoObserver, Mode, RunSpec, StreamResult};
use crate::targets::{AlignedBuf, BlockDevice, TargetHandle};

struct Request {
    offset: u64,
    buf: AlignedBuf,
}

struct Completion {
    offset: u64,
    buf: AlignedBuf,
    result: std::io::Result<()>,
}

/// Sequential offset generator with wrap-around at the end of the usable span.
struct Cursor {
    start: u64,
    usable: u64,
    next: u64,
    block: u64,
}

impl Cursor {
    fn new(spec: &RunSpec, target_len: u64) -> Self {
        Self {
            start: spec.start_offset,
            usable: spec.usable_len(target_len),
            next: 0,
            block: spec.block_bytes,
        }
    }

    fn advance(&mut self) -> u64 {
        let offset = self.start + self.next;
        self.next += self.block;
        if self.next >= self.usable {
            self.next = 0;
        }
        offset
    }
}

/// Keeps `spec.depth` requests outstanding on `dev` until the deadline, then
/// drains. Only requests that complete successfully are counted.
pub(super) fn run_device(
    handle: &TargetHandle,
    dev: &dyn BlockDevice,
    spec: &RunSpec,
    observer: Option<&dyn IoObserver>,
    start_barrier: Option<&Barrier>,
) -> Result<StreamResult, EngineError> {
    let depth = spec.depth as usize;
    let block = spec.block_bytes as usize;
    let align = handle.granule().unwrap_or(512).max(512) as usize;

    let mut free: Vec<AlignedBuf> = (0..depth).map(|_| AlignedBuf::zeroed(block, align)).collect();
    if spec.mode == Mode::Write {
        for buf in &mut free {
            fill_pattern(buf);
        }
    }

    let (req_tx, req_rx) = channel::bounded::<Request>(depth);
    let (cpl_tx, cpl_rx) = channel::unbounded::<Completion>();
    let mut cursor = Cursor::new(spec, dev.len());
    let duration = Duration::from_secs_f64(spec.duration_s);

    let mut io_count = 0u64;
    let mut max_in_flight = 0u32;
    let mut first_error = None;
    let mut first_issue: Option<Instant> = None;
    let mut last_completion: Option<Instant> = None;

    std::thread::scope(|scope| {
        for _ in 0..depth {
            let rx = req_rx.clone();
            let tx = cpl_tx.clone();
            let mode = spec.mode;
            scope.spawn(move || {
                for mut req in rx {
                    let result = match mode {
                        Mode::Read => dev.read_at(&mut req.buf, req.offset),
                        Mode::Write => dev.write_at(&req.buf, req.offset),
                    };
                    let done = Completion { offset: req.offset, buf: req.buf, result };
                    if tx.send(done).is_err() {
                        break;
                    }
                }
            });
        }
        drop(req_rx);
        drop(cpl_tx);

        if let Some(b) = start_barrier {
            b.wait();
        }
        let deadline = Instant::now() + duration;
        let mut in_flight = 0u32;

        let mut issue = |buf: AlignedBuf, in_flight: &mut u32| {
            let offset = cursor.advance();
            first_issue.get_or_insert_with(Instant::now);
            *in_flight += 1;
            max_in_flight = max_in_flight.max(*in_flight);
            if let Some(o) = observer {
                o.issued(offset, *in_flight);
            }
            req_tx.send(Request { offset, buf }).expect("workers outlive the issuer");
        };

        while let Some(buf) = free.pop() {
            if Instant::now() >= deadline {
                free.push(buf);
                break;
            }
            issue(buf, &mut in_flight);
        }

        while in_flight > 0 {
            let done = cpl_rx.recv().expect("workers outlive outstanding requests");
            in_flight -= 1;
            let now = Instant::now();
            if let Some(o) = observer {
                o.completed(done.offset, in_flight);
            }
            match done.result {
                Ok(()) => {
                    io_count += 1;
                    last_completion = Some(now);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
            if first_error.is_none() && now < deadline {
                issue(done.buf, &mut in_flight);
            } else {
                free.push(done.buf);
            }
        }
        drop(req_tx);
    });

    let elapsed_s = match (first_issue, last_completion) {
        (Some(a), Some(b)) => b.duration_since(a).as_secs_f64(),
        _ => 0.0,
    };
    let bytes = io_count * spec.block_bytes;
    let rate_mbps = if io_count == 0 { 0.0 } else { compute_rate(bytes, elapsed_s)? };
    let result = StreamResult {
        locator: handle.locator().to_string(),
        backend: handle.kind(),
        mode: spec.mode,
        block_bytes: spec.block_bytes,
        depth: spec.depth,
        bytes_transferred: bytes,
        io_count,
        elapsed_s,
        rate_mbps,
        max_in_flight,
        cpu: None,
    };
    match first_error {
        Some(source) => Err(EngineError::Io { source, partial: Box::new(result) }),
        None => Ok(result),
    }
}

fn fill_pattern(buf: &mut [u8]) {
    for (i, b) in buf.iter_mut().enumerate() {
        *b = (i % 251) as u8;
    }
}
