//! Depth × block × mode measurement matrices.
//!
//! A sweep runs one cell at a time against either a simulated topology or a
//! set of real targets and records one [`ResultRow`] per cell. Rows serialize
//! to the condensed CSV format in [`condensed`], and [`surface`] turns them
//! back into per-mode grids, SVG heatmaps and plateau summaries.

pub mod condensed;
pub mod surface;

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{run_parallel, AggregateResult, Buffering, CpuSample, Mode, RunSpec, StreamResult};
use crate::stripe::DEFAULT_CLUSTER_BYTES;
use crate::targets::{open_target_with, BackendKind, TargetHandle, TargetOptions};
use crate::topomodel::{predict, DiskPlan, Layout, Topology};
use crate::units::{KIB, MIB};

pub use condensed::{emit_condensed, parse_condensed, ParseError, CONDENSED_HEADER};
pub use surface::{compare_layouts, emit_surface, find_plateau, LayoutGap, Plateau, Surface, SurfaceError};

/// Default plateau threshold: fraction of the grid maximum.
pub const PLATEAU_THRESHOLD: f64 = 0.95;

/// Duration of the long-run validation reruns, seconds.
pub const LONG_RUN_SECONDS: f64 = 600.0;

/// One sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub config: String,
    pub n_disks: usize,
    pub mode: Mode,
    pub block_bytes: u64,
    pub depth: u32,
    /// Measured elapsed time (requested duration for simulated rows).
    pub duration_s: f64,
    pub bytes: u64,
    pub io_count: u64,
    /// Decimal MB/s rounded to 0.1.
    pub rate_mbps: f64,
    /// Rounded to 0.01.
    pub cpu_total_pct: Option<f64>,
    pub cpu_one_proc_pct: Option<f64>,
    pub backend: BackendKind,
    /// Set when the cell failed; counters then hold whatever completed.
    pub error: Option<String>,
}

pub(crate) fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

/// Makes free text safe for an unquoted CSV field.
pub fn sanitize_field(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

impl ResultRow {
    pub fn from_stream(config: &str, n_disks: usize, r: &StreamResult) -> Self {
        Self::build(
            config,
            n_disks,
            r.mode,
            r.block_bytes,
            r.depth,
            r.elapsed_s,
            r.bytes_transferred,
            r.io_count,
            r.rate_mbps,
            r.cpu,
            r.backend,
        )
    }

    pub fn from_aggregate(config: &str, n_disks: usize, spec: &RunSpec, agg: &AggregateResult) -> Self {
        let backend = agg.streams.first().map(|s| s.backend).unwrap_or(BackendKind::Custom);
        Self::build(
            config,
            n_disks,
            spec.mode,
            spec.block_bytes,
            spec.depth,
            agg.window_s,
            agg.bytes_transferred,
            agg.streams.iter().map(|s| s.io_count).sum(),
            agg.rate_mbps,
            agg.cpu,
            backend,
        )
    }

    /// A failed cell with zeroed counters.
    pub fn failed(config: &str, n_disks: usize, spec: &RunSpec, backend: BackendKind, error: &str) -> Self {
        let mut row = Self::build(config, n_disks, spec.mode, spec.block_bytes, spec.depth, spec.duration_s, 0, 0, 0.0, None, backend);
        row.error = Some(sanitize_field(error));
        row
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        config: &str,
        n_disks: usize,
        mode: Mode,
        block_bytes: u64,
        depth: u32,
        duration_s: f64,
        bytes: u64,
        io_count: u64,
        rate_mbps: f64,
        cpu: Option<CpuSample>,
        backend: BackendKind,
    ) -> Self {
        Self {
            config: sanitize_field(config),
            n_disks,
            mode,
            block_bytes,
            depth,
            duration_s,
            bytes,
            io_count,
            rate_mbps: round_to(rate_mbps, 1),
            cpu_total_pct: cpu.map(|c| round_to(c.cpu_total_pct, 2)),
            cpu_one_proc_pct: cpu.map(|c| round_to(c.cpu_one_proc_pct, 2)),
            backend,
            error: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep matrix: {0}")]
    InvalidMatrix(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepMatrix {
    pub depths: Vec<u32>,
    pub blocks: Vec<u64>,
    pub modes: Vec<Mode>,
    pub plan: DiskPlan,
    pub duration_s: f64,
}

pub const DEFAULT_DEPTHS: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];

pub const DEFAULT_BLOCKS: [u64; 10] = [
    64 * KIB,
    128 * KIB,
    256 * KIB,
    512 * KIB,
    MIB,
    2 * MIB,
    4 * MIB,
    8 * MIB,
    16 * MIB,
    30 * MIB,
];

pub const DEFAULT_DURATION_S: f64 = 30.0;

/// The standard 7 × 10 × 2 matrix over an empty plan; fill in `plan` before
/// running.
pub fn build_default_matrix() -> SweepMatrix {
    SweepMatrix {
        depths: DEFAULT_DEPTHS.to_vec(),
        blocks: DEFAULT_BLOCKS.to_vec(),
        modes: vec![Mode::Read, Mode::Write],
        plan: DiskPlan::jbod(Vec::new()),
        duration_s: DEFAULT_DURATION_S,
    }
}

impl SweepMatrix {
    pub fn with_plan(mut self, plan: DiskPlan) -> Self {
        self.plan = plan;
        self
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::InvalidMatrix(m.to_string()));
        if self.depths.is_empty() || self.blocks.is_empty() || self.modes.is_empty() {
            return bad("every axis needs at least one value");
        }
        if self.depths.windows(2).any(|w| w[0] >= w[1]) {
            return bad("depths must be strictly ascending");
        }
        if self.blocks.windows(2).any(|w| w[0] >= w[1]) {
            return bad("blocks must be strictly ascending");
        }
        if self.depths[0] == 0 {
            return bad("depth must be at least 1");
        }
        if self.plan.disks.is_empty() {
            return bad("plan has no disks");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.depths.len() * self.blocks.len() * self.modes.len()
    }

    /// Cell specs in run order: mode, then block, then depth.
    pub fn cells(&self) -> Vec<RunSpec> {
        let mut out = Vec::with_capacity(self.n_cells());
        for &mode in &self.modes {
            for &block in &self.blocks {
                for &depth in &self.depths {
                    out.push(RunSpec::new(mode, block, depth, self.duration_s));
                }
            }
        }
        out
    }
}

/// Where sweep cells execute.
#[derive(Clone, Debug)]
pub enum SweepBackend {
    /// Disk ids in the plan name disks of this topology.
    Simulated(Arc<Topology>),
    /// Disk ids in the plan are target locators.
    Real {
        buffering: Buffering,
        cluster_bytes: u64,
        /// Permits writes to raw devices.
        force: bool,
    },
}

impl SweepBackend {
    pub fn real(buffering: Buffering) -> Self {
        SweepBackend::Real { buffering, cluster_bytes: DEFAULT_CLUSTER_BYTES, force: false }
    }

    fn kind(&self, plan: &DiskPlan) -> BackendKind {
        match (self, &plan.layout) {
            (SweepBackend::Simulated(_), _) => BackendKind::Sim,
            (SweepBackend::Real { .. }, Layout::Striped(_)) => BackendKind::Striped,
            (SweepBackend::Real { .. }, Layout::Jbod) => BackendKind::File,
        }
    }
}

/// Config id recorded in rows, e.g. `tyan-s2882/jbod8` or `real/stripe2`.
pub fn config_id(backend: &SweepBackend, plan: &DiskPlan) -> String {
    let machine = match backend {
        SweepBackend::Simulated(t) => t.name().to_string(),
        SweepBackend::Real { .. } => "real".to_string(),
    };
    let layout = match plan.layout {
        Layout::Jbod => "jbod",
        Layout::Striped(_) => "stripe",
    };
    format!("{machine}/{layout}{}", plan.n_disks())
}

/// Runs every cell sequentially. A failing cell yields a row with its error
/// set; the sweep continues.
pub fn run_sweep(matrix: &SweepMatrix, backend: &SweepBackend) -> Result<Vec<ResultRow>, SweepError> {
    matrix.validate()?;
    let config = config_id(backend, &matrix.plan);
    Ok(matrix.cells().iter().map(|spec| run_cell(&config, &matrix.plan, backend, spec)).collect())
}

/// Runs a single cell of `plan`.
pub fn run_cell(config: &str, plan: &DiskPlan, backend: &SweepBackend, spec: &RunSpec) -> ResultRow {
    let n = plan.n_disks();
    match backend {
        SweepBackend::Simulated(topo) => match predict(topo, plan, spec) {
            Ok(p) => ResultRow { config: sanitize_field(config), ..p.row },
            Err(e) => ResultRow::failed(config, n, spec, BackendKind::Sim, &e.to_string()),
        },
        SweepBackend::Real { buffering, cluster_bytes, force } => {
            let kind = backend.kind(plan);
            let spec = spec.clone().with_buffering(*buffering);
            let streams = match open_streams(plan, &spec, *buffering, *cluster_bytes, *force) {
                Ok(s) => s,
                Err(e) => return ResultRow::failed(config, n, &spec, kind, &e),
            };
            match run_parallel(&streams) {
                Ok(agg) => ResultRow::from_aggregate(config, n, &spec, &agg),
                Err(crate::engine::EngineError::Io { source, partial }) => {
                    let mut row = ResultRow::from_stream(config, n, &partial);
                    row.error = Some(sanitize_field(&source.to_string()));
                    row
                }
                Err(e) => ResultRow::failed(config, n, &spec, kind, &e.to_string()),
            }
        }
    }
}

fn open_streams(
    plan: &DiskPlan,
    spec: &RunSpec,
    buffering: Buffering,
    cluster_bytes: u64,
    force: bool,
) -> Result<Vec<(TargetHandle, RunSpec)>, String> {
    let mut opts = TargetOptions::new(buffering);
    if spec.mode == Mode::Write {
        opts = opts.writable();
    }
    opts.force = force;
    let handles = plan
        .disks
        .iter()
        .map(|loc| open_target_with(loc, &opts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    match &plan.layout {
        Layout::Jbod => Ok(handles.into_iter().map(|h| (h, spec.clone())).collect()),
        Layout::Striped(vp) => vp
            .volumes
            .iter()
            .map(|vol| {
                let members: Vec<TargetHandle> = vol.targets().iter().map(|&i| handles[i].clone()).collect();
                TargetHandle::striped(&members, cluster_bytes)
                    .map(|h| (h, spec.clone()))
                    .map_err(|e| e.to_string())
            })
            .collect(),
    }
}

/// Deviation of a long rerun from its short-run cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRunCheck {
    pub short: ResultRow,
    pub long: ResultRow,
    /// `(long - short) / short`; `None` if the short rate is zero.
    pub rel_deviation: Option<f64>,
}

/// Reruns every `every`-th successful row of `rows` for `duration_s` seconds.
pub fn long_run_check(
    rows: &[ResultRow],
    plan: &DiskPlan,
    backend: &SweepBackend,
    every: usize,
    duration_s: f64,
) -> Vec<LongRunCheck> {
    rows.iter()
        .filter(|r| r.error.is_none())
        .step_by(every.max(1))
        .map(|short| {
            let spec = RunSpec::new(short.mode, short.block_bytes, short.depth, duration_s);
            let long = run_cell(&short.config, plan, backend, &spec);
            let rel_deviation =
                (short.rate_mbps > 0.0).then(|| (long.rate_mbps - short.rate_mbps) / short.rate_mbps);
            LongRunCheck { short: short.clone(), long, rel_deviation }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topomodel::preset;

    fn sim(name: &str, n: usize, striped: bool) -> (SweepMatrix, SweepBackend) {
        let t = preset(name).unwrap();
        let plan = DiskPlan::first_n(&t, n, striped).unwrap();
        (build_default_matrix().with_plan(plan), SweepBackend::Simulated(Arc::new(t)))
    }

    #[test]
    fn default_matrix_axes() {
        let m = build_default_matrix();
        assert_eq!(m.depths.len(), 7);
        assert_eq!(*m.depths.last().unwrap(), 64);
        assert_eq!(m.blocks[0], 65536);
        assert_eq!(*m.blocks.last().unwrap(), 30 * MIB);
        assert_eq!(m.duration_s, 30.0);
        assert_eq!(m.n_cells(), 140);
    }

    #[test]
    fn matrix_validation() {
        let (m, _) = sim("tyan", 1, false);
        assert!(m.validate().is_ok());
        assert!(build_default_matrix().validate().is_err());
        let mut bad = m.clone();
        bad.depths = vec![4, 2];
        assert!(bad.validate().is_err());
        let mut bad = m.clone();
        bad.blocks.clear();
        assert!(bad.validate().is_err());
        let mut bad = m;
        bad.duration_s = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sim_sweep_has_one_row_per_cell() {
        let (m, b) = sim("tyan", 8, false);
        let rows = run_sweep(&m, &b).unwrap();
        assert_eq!(rows.len(), 140);
        assert!(rows.iter().all(|r| r.error.is_none() && r.backend == BackendKind::Sim));
        assert_eq!(rows[0].config, "tyan-s2882/jbod8");
    }

    #[test]
    fn tyan_eight_disks_near_450() {
        let (m, b) = sim("tyan", 8, false);
        let row = run_cell("x", &m.plan, &b, &RunSpec::new(Mode::Read, MIB, 4, 30.0));
        assert!((row.rate_mbps - 450.0).abs() <= 22.5, "{}", row.rate_mbps);
    }

    #[test]
    fn newisys_twenty_four_best_cell() {
        let (m, b) = sim("newisys", 24, true);
        let rows = run_sweep(&m, &b).unwrap();
        let best = rows.iter().filter(|r| r.mode == Mode::Read).map(|r| r.rate_mbps).fold(0.0, f64::max);
        assert!((best - 1300.0).abs() <= 130.0, "{best}");
    }

    #[test]
    fn failing_cells_are_recorded() {
        let (mut m, b) = sim("tyan", 4, true);
        m.blocks = vec![96 * KIB, MIB];
        let rows = run_sweep(&m, &b).unwrap();
        assert_eq!(rows.len(), 28);
        let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
        assert_eq!(failed.len(), 14);
        assert!(failed.iter().all(|r| r.block_bytes == 96 * KIB && r.bytes == 0));
        assert!(failed.iter().all(|r| !r.error.as_ref().unwrap().contains(',')));
    }

    #[test]
    fn real_backend_errors_per_cell() {
        let mut m = build_default_matrix().with_plan(DiskPlan::jbod(vec!["/nonexistent/x.dat".into()]));
        m.depths = vec![1];
        m.blocks = vec![MIB];
        m.duration_s = 0.1;
        let rows = run_sweep(&m, &SweepBackend::real(Buffering::Os)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn long_run_matches_short_run_on_sim() {
        let (mut m, b) = sim("tyan", 2, false);
        m.depths = vec![1, 8];
        m.blocks = vec![MIB];
        let rows = run_sweep(&m, &b).unwrap();
        let checks = long_run_check(&rows, &m.plan, &b, 2, LONG_RUN_SECONDS);
        assert_eq!(checks.len(), 2);
        for c in checks {
            assert_eq!(c.long.duration_s, 600.0);
            assert!(c.rel_deviation.unwrap().abs() < 0.01);
        }
    }

    #[test]
    fn sanitize_strips_separators() {
        assert_eq!(sanitize_field("a,b\nc"), "a;b c");
    }
}
