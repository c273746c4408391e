use super::{solve_indexed, Topology, TopoError};
use crate::engine::{CpuSample, RunSpec};
use crate::stripe::{plan_volumes, stripe_stream, StripeMap, VolumePlan, MAX_STRIPE_WIDTH};
use crate::sweep::ResultRow;
use crate::targets::{steady_result, BackendKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// One independent stream per disk.
    Jbod,
    /// One striped stream per volume; stripe map targets index into
    /// [`DiskPlan::disks`].
    Striped(VolumePlan),
}

/// Which disks a workload touches and how they are grouped into streams.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskPlan {
    pub disks: Vec<String>,
    pub layout: Layout,
}

impl DiskPlan {
    pub fn jbod(disks: Vec<String>) -> Self {
        Self { disks, layout: Layout::Jbod }
    }

    /// Stripe sets of at most 32 members, balanced, over `disks` in order.
    pub fn striped(disks: Vec<String>) -> Result<Self, TopoError> {
        let plan = plan_volumes(disks.len(), MAX_STRIPE_WIDTH).map_err(|e| TopoError::Plan(e.to_string()))?;
        Ok(Self { disks, layout: Layout::Striped(plan) })
    }

    /// The first `n` disks of `topo` in declaration order.
    pub fn first_n(topo: &Topology, n: usize, striped: bool) -> Result<Self, TopoError> {
        if n > topo.n_disks() {
            return Err(TopoError::Plan(format!(
                "{} has {} disks, {n} requested",
                topo.name(),
                topo.n_disks()
            )));
        }
        let disks: Vec<String> = topo.disk_ids().take(n).map(str::to_string).collect();
        if striped {
            Self::striped(disks)
        } else {
            Ok(Self::jbod(disks))
        }
    }

    pub fn n_disks(&self) -> usize {
        self.disks.len()
    }

    /// Number of concurrent streams the plan drives.
    pub fn n_streams(&self) -> usize {
        match &self.layout {
            Layout::Jbod => self.disks.len(),
            Layout::Striped(p) => p.volumes.len(),
        }
    }
}

/// Pre-contention per-disk demands of one stream.
///
/// Without a stripe map every disk in `disks` carries the full spec; with one,
/// the map's targets index into `disks` and the stream fans out across them.
pub(crate) fn stream_flows(
    topo: &Topology,
    disks: &[usize],
    stripe: Option<&StripeMap>,
    spec: &RunSpec,
) -> Result<Vec<(usize, f64)>, TopoError> {
    match stripe {
        None => Ok(disks
            .iter()
            .map(|&d| (d, topo.model_for(d).stream_rate(spec.block_bytes, spec.depth, spec.mode)))
            .collect()),
        Some(map) => {
            let subs = stripe_stream(map, spec).map_err(|e| TopoError::Plan(e.to_string()))?;
            Ok(subs
                .iter()
                .map(|s| {
                    let d = disks[map.targets()[s.target_index]];
                    let rate = topo.model_for(d).fragment_rate(s.fragment_bytes, s.mean_outstanding, spec.mode);
                    (d, rate)
                })
                .collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Sum of allocations, MB/s.
    pub total_mbps: f64,
    /// Allocation per disk in plan order, summed over streams.
    pub per_disk: Vec<(String, f64)>,
    pub cpu: CpuSample,
    /// The same outcome as a sweep row over `spec.duration_s`.
    pub row: ResultRow,
}

/// Steady-state throughput of `plan` running `spec` on `topo`.
pub fn predict(topo: &Topology, plan: &DiskPlan, spec: &RunSpec) -> Result<Prediction, TopoError> {
    spec.validate().map_err(|e| TopoError::Plan(e.to_string()))?;
    let indices = plan
        .disks
        .iter()
        .map(|id| topo.disk_index(id).ok_or_else(|| TopoError::UnknownDisk(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut flows = Vec::new();
    match &plan.layout {
        Layout::Jbod => flows.extend(stream_flows(topo, &indices, None, spec)?),
        Layout::Striped(vp) => {
            if vp.volumes.iter().flat_map(|v| v.targets()).any(|&t| t >= indices.len()) {
                return Err(TopoError::Plan("volume plan refers past the disk list".into()));
            }
            for vol in &vp.volumes {
                flows.extend(stream_flows(topo, &indices, Some(vol), spec)?);
            }
        }
    }
    let alloc = solve_indexed(topo, &flows, spec.mode)?;
    let total: f64 = alloc.iter().sum();

    let mut per_disk: Vec<(String, f64)> = plan.disks.iter().map(|d| (d.clone(), 0.0)).collect();
    for ((disk, _), a) in flows.iter().zip(&alloc) {
        if let Some(pos) = indices.iter().position(|i| i == disk) {
            per_disk[pos].1 += a;
        }
    }

    let cpu = topo.cpu_cost(total);
    let mut stream = steady_result(topo.name(), BackendKind::Sim, spec, total);
    stream.cpu = Some(cpu);
    let row = ResultRow::from_stream(topo.name(), plan.n_disks(), &stream);
    Ok(Prediction { total_mbps: total, per_disk, cpu, row })
}
