//! Single-disk performance model.
//!
//! A disk transfers at a zone-dependent media rate and pays a fixed service
//! overhead per request. With `q` requests outstanding the disk delivers
//! `q` blocks per (overhead + transfer time), capped at the media rate.

use thiserror::Error;

use crate::engine::{compute_rate, EngineError, Mode, RunSpec, StreamResult};
use crate::targets::BackendKind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimDiskModel {
    pub cap_outer_read: f64,
    pub cap_outer_write: f64,
    pub cap_inner_read: f64,
    pub cap_inner_write: f64,
    pub overhead_s: f64,
    /// 0 is the outermost track, 1 the innermost.
    pub zone: f64,
    pub size_bytes: u64,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid disk model: {0}")]
pub struct ModelError(pub String);

impl Default for SimDiskModel {
    /// 7200 rpm SATA disk of the 250 GB class: 60 MB/s outer, 36 MB/s inner,
    /// 5 ms per-request overhead.
    fn default() -> Self {
        Self {
            cap_outer_read: 60.0,
            cap_outer_write: 60.0,
            cap_inner_read: 36.0,
            cap_inner_write: 36.0,
            overhead_s: 0.005,
            zone: 0.0,
            size_bytes: 250_000_000_000,
        }
    }
}

impl SimDiskModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let caps = [
            self.cap_outer_read,
            self.cap_outer_write,
            self.cap_inner_read,
            self.cap_inner_write,
        ];
        if caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(ModelError("caps must be positive and finite".into()));
        }
        if self.cap_inner_read > self.cap_outer_read || self.cap_inner_write > self.cap_outer_write {
            return Err(ModelError("inner-zone caps cannot exceed outer-zone caps".into()));
        }
        if !(self.overhead_s >= 0.0 && self.overhead_s.is_finite()) {
            return Err(ModelError("overhead must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.zone) {
            return Err(ModelError(format!("zone {} outside [0, 1]", self.zone)));
        }
        if self.size_bytes == 0 {
            return Err(ModelError("size must be positive".into()));
        }
        Ok(())
    }

    pub fn with_zone(mut self, zone: f64) -> Self {
        self.zone = zone;
        self
    }

    /// Media rate in MB/s at the model's zone.
    pub fn disk_rate(&self, mode: Mode) -> f64 {
        let (outer, inner) = match mode {
            Mode::Read => (self.cap_outer_read, self.cap_inner_read),
            Mode::Write => (self.cap_outer_write, self.cap_inner_write),
        };
        if self.zone == 0.0 {
            outer
        } else if self.zone == 1.0 {
            inner
        } else {
            outer + self.zone * (inner - outer)
        }
    }

    /// Demand in MB/s of a stream keeping `depth` requests of `block_bytes`
    /// outstanding, before any contention with other disks.
    pub fn stream_rate(&self, block_bytes: u64, depth: u32, mode: Mode) -> f64 {
        self.fragment_rate(block_bytes as f64, f64::from(depth), mode)
    }

    /// [`stream_rate`](Self::stream_rate) over a mean fragment size and mean
    /// outstanding count, as seen by one member of a stripe set.
    pub fn fragment_rate(&self, fragment_bytes: f64, outstanding: f64, mode: Mode) -> f64 {
        let rate = self.disk_rate(mode);
        if fragment_bytes <= 0.0 || outstanding <= 0.0 {
            return 0.0;
        }
        let service_s = self.overhead_s + fragment_bytes / (rate * 1e6);
        let pipelined = outstanding * fragment_bytes / service_s / 1e6;
        pipelined.min(rate)
    }
}

/// Outcome of running `spec` for its full duration at a steady `rate_mbps`,
/// counting whole requests only.
pub(crate) fn steady_result(
    locator: &str,
    backend: BackendKind,
    spec: &RunSpec,
    rate_mbps: f64,
) -> StreamResult {
    let ios = (rate_mbps * spec.duration_s * 1e6 / spec.block_bytes as f64).floor();
    let io_count = if ios.is_finite() && ios > 0.0 { ios as u64 } else { 0 };
    let bytes = io_count * spec.block_bytes;
    StreamResult {
        locator: locator.to_string(),
        backend,
        mode: spec.mode,
        block_bytes: spec.block_bytes,
        depth: spec.depth,
        bytes_transferred: bytes,
        io_count,
        elapsed_s: spec.duration_s,
        rate_mbps: compute_rate(bytes, spec.duration_s).unwrap_or(0.0),
        max_in_flight: u64::from(spec.depth).min(io_count) as u32,
        cpu: None,
    }
}

/// Runs `spec` on a standalone simulated disk (no shared caps).
pub fn sim_run(model: &SimDiskModel, spec: &RunSpec) -> Result<StreamResult, EngineError> {
    spec.validate()?;
    let rate = model.stream_rate(spec.block_bytes, spec.depth, spec.mode);
    Ok(steady_result("sim:standalone", BackendKind::Sim, spec, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MIB: u64 = 1 << 20;

    fn disk(overhead_s: f64) -> SimDiskModel {
        SimDiskModel { overhead_s, ..SimDiskModel::default() }
    }

    #[test]
    fn zoned_rate_interpolates() {
        let m = SimDiskModel::default();
        assert_eq!(m.with_zone(0.0).disk_rate(Mode::Read), 60.0);
        assert_eq!(m.with_zone(1.0).disk_rate(Mode::Read), 36.0);
        assert_eq!(m.with_zone(0.5).disk_rate(Mode::Read), 48.0);
    }

    #[test]
    fn write_caps_are_independent() {
        let m = SimDiskModel { cap_outer_write: 55.0, cap_inner_write: 30.0, ..Default::default() };
        assert_eq!(m.disk_rate(Mode::Write), 55.0);
        assert_eq!(m.with_zone(1.0).disk_rate(Mode::Write), 30.0);
    }

    #[test]
    fn stream_rate_hand_values() {
        // 1 MiB at 60 MB/s takes 17.48 ms plus 5 ms overhead: 46.65 MB/s per slot
        let per_slot = MIB as f64 / (0.005 + MIB as f64 / 60e6) / 1e6;
        assert!((per_slot - 46.65).abs() < 0.01);
        assert_eq!(disk(0.005).stream_rate(MIB, 4, Mode::Read), 60.0);
        assert!((disk(0.005).stream_rate(MIB, 1, Mode::Read) - per_slot).abs() < 1e-12);

        let small = disk(0.005).stream_rate(64 * 1024, 1, Mode::Read);
        assert!((small - 10.757).abs() < 0.001, "{small}");

        for b in [4096, 65536, MIB, 30 * MIB] {
            assert_eq!(disk(0.0).stream_rate(b, 1, Mode::Read), 60.0);
        }
    }

    #[test]
    fn sim_run_floors_to_whole_blocks() {
        let spec = RunSpec::new(Mode::Read, MIB, 4, 30.0);
        let r = sim_run(&disk(0.005), &spec).unwrap();
        // 60 MB/s × 30 s = 1.8e9 bytes = 1716.6 blocks
        assert_eq!(r.io_count, 1716);
        assert_eq!(r.bytes_transferred, 1716 * MIB);
        assert!(r.rate_mbps < 60.0 && r.rate_mbps > 59.9);
        assert_eq!(r.max_in_flight, 4);

        let w = sim_run(&disk(0.005), &RunSpec::new(Mode::Write, MIB, 4, 30.0)).unwrap();
        assert_eq!(w.io_count, 1716);
    }

    #[test]
    fn sim_run_rejects_invalid_spec() {
        assert!(sim_run(&disk(0.005), &RunSpec::new(Mode::Read, MIB, 4, 0.0)).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(SimDiskModel::default().validate().is_ok());
        assert!(SimDiskModel { cap_inner_read: 70.0, ..Default::default() }.validate().is_err());
        assert!(SimDiskModel { overhead_s: -1.0, ..Default::default() }.validate().is_err());
        assert!(SimDiskModel { zone: 1.5, ..Default::default() }.validate().is_err());
        assert!(SimDiskModel { cap_outer_read: 0.0, ..Default::default() }.validate().is_err());
    }

    fn arb_model() -> impl Strategy<Value = SimDiskModel> {
        (1.0f64..500.0, 0.1f64..1.0, 1.0f64..500.0, 0.1f64..1.0, 0.0f64..0.02, 0.0f64..=1.0).prop_map(
            |(or, ir, ow, iw, overhead_s, zone)| SimDiskModel {
                cap_outer_read: or,
                cap_inner_read: or * ir,
                cap_outer_write: ow,
                cap_inner_write: ow * iw,
                overhead_s,
                zone,
                size_bytes: 1 << 30,
            },
        )
    }

    proptest! {
        #[test]
        fn stream_rate_is_monotone_and_capped(
            m in arb_model(),
            b in 512u64..(64 << 20),
            db in 0u64..(8 << 20),
            q in 1u32..128,
            dq in 0u32..64,
            write in any::<bool>(),
        ) {
            let mode = if write { Mode::Write } else { Mode::Read };
            let base = m.stream_rate(b, q, mode);
            prop_assert!(base <= m.disk_rate(mode));
            prop_assert!(base > 0.0);
            prop_assert!(m.stream_rate(b + db, q, mode) >= base);
            prop_assert!(m.stream_rate(b, q + dq, mode) >= base);
        }

        #[test]
        fn zone_endpoints_are_exact(m in arb_model()) {
            prop_assert_eq!(m.with_zone(0.0).disk_rate(Mode::Read), m.cap_outer_read);
            prop_assert_eq!(m.with_zone(1.0).disk_rate(Mode::Read), m.cap_inner_read);
            prop_assert_eq!(m.with_zone(0.0).disk_rate(Mode::Write), m.cap_outer_write);
            prop_assert_eq!(m.with_zone(1.0).disk_rate(Mode::Write), m.cap_inner_write);
        }

        #[test]
        fn sim_run_is_deterministic(m in arb_model(), q in 1u32..64, blocks in 1u64..64) {
            let spec = RunSpec::new(Mode::Read, blocks * 65536, q, 30.0);
            let a = sim_run(&m, &spec).unwrap();
            let b = sim_run(&m, &spec).unwrap();
            prop_assert_eq!(a.bytes_transferred, a.io_count * spec.block_bytes);
            prop_assert_eq!(a, b);
        }
    }
}
