//! Benchmark targets: real files, simulated disks, and stripe sets of either.
//!
//! Targets are named by locator:
//!
//! * `file:<path>` (a bare path is accepted as well)
//! * `sim:<topology>/<disk-id>`, where `<topology>` is a preset name, a preset
//!   alias (`tyan`, `xeon`, `newisys`, `nec`), or a name passed to
//!   [`register_topology`].

mod aligned;
mod file;
mod model;
mod striped;

use std::collections::HashMap;
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::engine::{Buffering, CpuSample, RunSpec, StreamResult};
use crate::stripe::{StripeError, StripeMap};
use crate::topomodel::{self, TopoError, Topology};

pub use aligned::AlignedBuf;
pub use file::{FileDevice, DEFAULT_GRANULE};
pub use model::{sim_run, ModelError, SimDiskModel};
pub(crate) use model::steady_result;
pub use striped::StripedDevice;

/// Sector granule reported by simulated disks.
pub const SIM_GRANULE: u64 = 512;

/// Positioned, thread-safe block access used by the engine's workers.
pub trait BlockDevice: Send + Sync {
    fn len(&self) -> u64;
    /// Alignment required for unbuffered access; `None` if the backend cannot
    /// do unbuffered I/O.
    fn granule(&self) -> Option<u64>;
    fn read_at(&self, buf: &mut [u8], offset: u64) -> io::Result<()>;
    fn write_at(&self, buf: &[u8], offset: u64) -> io::Result<()>;
    fn writable(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    File,
    Sim,
    Striped,
    Custom,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::File => "file",
            BackendKind::Sim => "sim",
            BackendKind::Striped => "striped",
            BackendKind::Custom => "custom",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "file" => Ok(BackendKind::File),
            "sim" => Ok(BackendKind::Sim),
            "striped" => Ok(BackendKind::Striped),
            "custom" => Ok(BackendKind::Custom),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("target not found: {0}")]
    NotFound(String),
    #[error("permission denied: {0}")]
    PermissionDenied(String),
    #[error("unbuffered I/O is not supported by {0}")]
    AlignmentUnsupported(String),
    #[error("refusing to write to raw device {0} without force")]
    RawDeviceWrite(String),
    #[error("malformed target locator `{0}`")]
    BadLocator(String),
    #[error("cannot stripe targets: {0}")]
    Mixed(String),
    #[error(transparent)]
    Stripe(#[from] StripeError),
    #[error(transparent)]
    Topology(#[from] TopoError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug)]
pub struct TargetOptions {
    pub buffering: Buffering,
    /// Overrides the 4096-byte default granule of file targets.
    pub granule: Option<u64>,
    pub write: bool,
    /// Allows writes to block or character devices.
    pub force: bool,
}

impl TargetOptions {
    pub fn new(buffering: Buffering) -> Self {
        Self { buffering, granule: None, write: false, force: false }
    }

    pub fn writable(mut self) -> Self {
        self.write = true;
        self
    }
}

/// One or more simulated disks inside a topology, driven as a single stream.
#[derive(Clone, Debug)]
pub struct SimTarget {
    pub topology: Arc<Topology>,
    pub disks: Vec<usize>,
    pub stripe: Option<StripeMap>,
}

#[derive(Clone)]
pub(crate) enum Backend {
    Device(Arc<dyn BlockDevice>),
    Sim(SimTarget),
}

#[derive(Clone)]
pub struct TargetHandle {
    locator: String,
    kind: BackendKind,
    backend: Backend,
    size: u64,
    granule: Option<u64>,
    writable: bool,
}

impl fmt::Debug for TargetHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetHandle")
            .field("locator", &self.locator)
            .field("kind", &self.kind)
            .field("size", &self.size)
            .field("granule", &self.granule)
            .finish()
    }
}

impl TargetHandle {
    /// Wraps a caller-supplied device, e.g. an instrumented mock.
    pub fn from_device(locator: impl Into<String>, dev: Arc<dyn BlockDevice>) -> Self {
        Self::device(locator.into(), BackendKind::Custom, dev)
    }

    fn device(locator: String, kind: BackendKind, dev: Arc<dyn BlockDevice>) -> Self {
        Self {
            locator,
            kind,
            size: dev.len(),
            granule: dev.granule(),
            writable: dev.writable(),
            backend: Backend::Device(dev),
        }
    }

    pub fn sim(topology: Arc<Topology>, disk: &str) -> Result<Self, TargetError> {
        let idx = topology
            .disk_index(disk)
            .ok_or_else(|| TargetError::NotFound(format!("sim:{}/{disk}", topology.name())))?;
        let size = topology.model_for(idx).size_bytes;
        Ok(Self {
            locator: format!("sim:{}/{disk}", topology.name()),
            kind: BackendKind::Sim,
            size,
            granule: Some(SIM_GRANULE),
            writable: true,
            backend: Backend::Sim(SimTarget { topology, disks: vec![idx], stripe: None }),
        })
    }

    /// Combines members into one RAID-0 volume with `cluster_bytes` interleave.
    ///
    /// Members must all be real devices or all be simulated disks of one
    /// topology.
    pub fn striped(members: &[TargetHandle], cluster_bytes: u64) -> Result<Self, TargetError> {
        let map = StripeMap::new(cluster_bytes, (0..members.len()).collect())?;
        let locator = format!(
            "stripe({})",
            members.iter().map(|m| m.locator.as_str()).collect::<Vec<_>>().join(",")
        );
        let shortest = members.iter().map(|m| m.size).min().unwrap_or(0);
        let size = map.logical_len(shortest);

        let sims: Vec<&SimTarget> = members
            .iter()
            .filter_map(|m| match &m.backend {
                Backend::Sim(s) => Some(s),
                Backend::Device(_) => None,
            })
            .collect();
        if sims.len() == members.len() {
            let topology = Arc::clone(&sims[0].topology);
            let mut disks = Vec::with_capacity(sims.len());
            for s in &sims {
                if !Arc::ptr_eq(&s.topology, &topology) {
                    return Err(TargetError::Mixed("simulated members span topologies".into()));
                }
                if s.disks.len() != 1 {
                    return Err(TargetError::Mixed("nested stripe sets are not supported".into()));
                }
                disks.push(s.disks[0]);
            }
            return Ok(Self {
                locator,
                kind: BackendKind::Striped,
                size,
                granule: Some(SIM_GRANULE),
                writable: true,
                backend: Backend::Sim(SimTarget { topology, disks, stripe: Some(map) }),
            });
        }
        if !sims.is_empty() {
            return Err(TargetError::Mixed("cannot mix simulated and real members".into()));
        }
        let devs: Vec<Arc<dyn BlockDevice>> = members
            .iter()
            .map(|m| match &m.backend {
                Backend::Device(d) => Arc::clone(d),
                Backend::Sim(_) => unreachable!("no simulated members remain"),
            })
            .collect();
        let dev = StripedDevice::new(map, devs)?;
        Ok(Self::device(locator, BackendKind::Striped, Arc::new(dev)))
    }

    pub fn locator(&self) -> &str {
        &self.locator
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn granule(&self) -> Option<u64> {
        self.granule
    }

    pub fn writable(&self) -> bool {
        self.writable
    }

    pub(crate) fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn sim_target(&self) -> Option<&SimTarget> {
        match &self.backend {
            Backend::Sim(s) => Some(s),
            Backend::Device(_) => None,
        }
    }
}

fn registry() -> &'static RwLock<HashMap<String, Arc<Topology>>> {
    static REGISTRY: OnceLock<RwLock<HashMap<String, Arc<Topology>>>> = OnceLock::new();
    REGISTRY.get_or_init(Default::default)
}

/// Makes `topology` addressable as `sim:<name>/<disk-id>`.
pub fn register_topology(name: &str, topology: Topology) -> Arc<Topology> {
    let topo = Arc::new(topology);
    registry().write().expect("registry lock").insert(name.to_string(), Arc::clone(&topo));
    topo
}

/// Registered topology or preset by name. Presets are loaded once and shared,
/// so handles onto the same preset contend with each other in
/// [`run_parallel`](crate::engine::run_parallel).
pub fn resolve_topology(name: &str) -> Result<Arc<Topology>, TargetError> {
    if let Some(t) = registry().read().expect("registry lock").get(name) {
        return Ok(Arc::clone(t));
    }
    let canonical = topomodel::canonical_preset_name(name)
        .ok_or_else(|| TargetError::NotFound(format!("sim:{name}")))?;
    let mut reg = registry().write().expect("registry lock");
    if let Some(t) = reg.get(canonical) {
        let t = Arc::clone(t);
        reg.insert(name.to_string(), Arc::clone(&t));
        return Ok(t);
    }
    let topo = Arc::new(topomodel::preset(canonical)?);
    reg.insert(canonical.to_string(), Arc::clone(&topo));
    reg.insert(name.to_string(), Arc::clone(&topo));
    Ok(topo)
}

pub fn open_target(uri: &str, buffering: Buffering) -> Result<TargetHandle, TargetError> {
    open_target_with(uri, &TargetOptions::new(buffering))
}

pub fn open_target_with(uri: &str, opts: &TargetOptions) -> Result<TargetHandle, TargetError> {
    if let Some(rest) = uri.strip_prefix("sim:") {
        let (topo, disk) = rest
            .split_once('/')
            .filter(|(t, d)| !t.is_empty() && !d.is_empty())
            .ok_or_else(|| TargetError::BadLocator(uri.to_string()))?;
        return TargetHandle::sim(resolve_topology(topo)?, disk);
    }
    let path = uri.strip_prefix("file:").unwrap_or(uri);
    if path.is_empty() {
        return Err(TargetError::BadLocator(uri.to_string()));
    }
    let dev = FileDevice::open(Path::new(path), opts)?;
    Ok(TargetHandle::device(format!("file:{path}"), BackendKind::File, Arc::new(dev)))
}

/// Runs simulated streams concurrently on a virtual clock.
///
/// Streams on the same topology and mode share one max-min fair allocation;
/// each stream's rate is the sum of its disks' allocations. Streams of
/// different modes are solved independently.
pub(crate) fn sim_run_joint(
    jobs: &[(&TargetHandle, &SimTarget, &RunSpec)],
) -> Result<Vec<StreamResult>, TopoError> {
    let mut rates = vec![0.0; jobs.len()];
    let mut done = vec![false; jobs.len()];
    for i in 0..jobs.len() {
        if done[i] {
            continue;
        }
        let topo = &jobs[i].1.topology;
        let mode = jobs[i].2.mode;
        let group: Vec<usize> = (i..jobs.len())
            .filter(|&j| !done[j] && Arc::ptr_eq(&jobs[j].1.topology, topo) && jobs[j].2.mode == mode)
            .collect();
        let mut flows = Vec::new();
        let mut owner = Vec::new();
        for &j in &group {
            let (_, sim, spec) = jobs[j];
            for f in topomodel::stream_flows(topo, &sim.disks, sim.stripe.as_ref(), spec)? {
                flows.push(f);
                owner.push(j);
            }
            done[j] = true;
        }
        let alloc = topomodel::solve_indexed(topo, &flows, mode)?;
        for (a, j) in alloc.iter().zip(owner) {
            rates[j] += a;
        }
    }
    Ok(jobs
        .iter()
        .zip(rates)
        .map(|((handle, sim, spec), rate)| {
            let mut r = steady_result(handle.locator(), handle.kind(), spec, rate);
            let cpu: CpuSample = sim.topology.cpu_cost(r.rate_mbps);
            r.cpu = Some(cpu);
            r
        })
        .collect())
}

/// Pre-contention demand of a simulated stream in MB/s, summed over the
/// disks it touches. `None` for real devices.
pub fn sim_disk_demand(handle: &TargetHandle, spec: &RunSpec) -> Option<f64> {
    let sim = handle.sim_target()?;
    let flows = topomodel::stream_flows(&sim.topology, &sim.disks, sim.stripe.as_ref(), spec).ok()?;
    Some(flows.iter().map(|(_, d)| d).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_parallel, run_stream, Mode};

    #[test]
    fn opens_file_with_default_granule() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("test.dat");
        std::fs::write(&p, vec![0u8; 8192]).unwrap();
        let h = open_target(&format!("file:{}", p.display()), Buffering::Unbuffered).unwrap();
        assert_eq!(h.granule(), Some(4096));
        assert_eq!(h.size(), 8192);
        assert_eq!(h.kind(), BackendKind::File);
    }

    #[test]
    fn missing_file_is_not_found() {
        let e = open_target("file:/nonexistent", Buffering::Unbuffered).unwrap_err();
        assert!(matches!(e, TargetError::NotFound(_)), "{e}");
    }

    #[test]
    fn sim_locator_resolves_preset_alias() {
        let h = open_target("sim:tyan/disk0", Buffering::Unbuffered).unwrap();
        assert_eq!(h.kind(), BackendKind::Sim);
        assert_eq!(h.granule(), Some(SIM_GRANULE));
        let sim = h.sim_target().unwrap();
        assert_eq!(sim.topology.name(), "tyan-s2882");
        assert_eq!(sim.disks.len(), 1);
    }

    #[test]
    fn bad_sim_locators() {
        assert!(matches!(open_target("sim:tyan", Buffering::Unbuffered), Err(TargetError::BadLocator(_))));
        assert!(matches!(open_target("sim:bogus/disk0", Buffering::Unbuffered), Err(TargetError::NotFound(_))));
        assert!(matches!(open_target("sim:tyan/disk999", Buffering::Unbuffered), Err(TargetError::NotFound(_))));
        assert!(matches!(open_target("sim:tyan/sys", Buffering::Unbuffered), Err(TargetError::NotFound(_))));
    }

    struct NoAlign;

    impl BlockDevice for NoAlign {
        fn len(&self) -> u64 {
            1 << 20
        }
        fn granule(&self) -> Option<u64> {
            None
        }
        fn read_at(&self, _: &mut [u8], _: u64) -> io::Result<()> {
            Ok(())
        }
        fn write_at(&self, _: &[u8], _: u64) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn unbuffered_without_granule_is_rejected() {
        let h = TargetHandle::from_device("mock", Arc::new(NoAlign));
        let spec = RunSpec::new(Mode::Read, 4096, 1, 0.01);
        let e = run_stream(&h, &spec).unwrap_err();
        assert!(matches!(e, crate::engine::EngineError::Target(TargetError::AlignmentUnsupported(_))), "{e}");
        let buffered = spec.with_buffering(Buffering::Os);
        assert!(run_stream(&h, &buffered).is_ok());
    }

    #[test]
    fn sim_disk_reads_a_little_under_sixty() {
        let h = open_target("sim:tyan/disk0", Buffering::Unbuffered).unwrap();
        let r = run_stream(&h, &RunSpec::new(Mode::Read, 1 << 20, 4, 30.0)).unwrap();
        assert!(r.rate_mbps < 60.0 && r.rate_mbps > 57.0, "{}", r.rate_mbps);
        assert_eq!(r.bytes_transferred, r.io_count * (1 << 20));
    }

    #[test]
    fn shared_controller_splits_fairly() {
        let text = "\
sys system - inf inf
ctl controller sys 450 450
d0 disk ctl inf inf
d1 disk ctl inf inf
model * 300 300 300 300 0 0
cpu 2 10
";
        let topo = register_topology("unit-shared", Topology::parse("unit-shared", text).unwrap());
        let a = TargetHandle::sim(Arc::clone(&topo), "d0").unwrap();
        let b = TargetHandle::sim(topo, "d1").unwrap();
        let spec = RunSpec::new(Mode::Read, 1 << 20, 4, 30.0);
        assert!((sim_disk_demand(&a, &spec).unwrap() - 300.0).abs() < 1e-9);
        let agg = run_parallel(&[(a, spec.clone()), (b, spec)]).unwrap();
        assert!((agg.rate_mbps - 450.0).abs() < 0.1, "{}", agg.rate_mbps);
        for s in &agg.streams {
            assert!((s.rate_mbps - 225.0).abs() < 0.1, "{}", s.rate_mbps);
        }
        assert_eq!(agg.bytes_transferred, agg.streams.iter().map(|s| s.bytes_transferred).sum::<u64>());
    }

    #[test]
    fn raw_device_writes_need_force() {
        #[cfg(unix)]
        {
            let opts = TargetOptions::new(Buffering::Os).writable();
            let e = open_target_with("file:/dev/null", &opts).unwrap_err();
            assert!(matches!(e, TargetError::RawDeviceWrite(_)), "{e}");
            let forced = TargetOptions { force: true, ..opts };
            assert!(open_target_with("file:/dev/null", &forced).is_ok());
        }
    }
}
