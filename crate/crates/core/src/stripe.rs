//! RAID-0 cluster striping and multi-volume planning.
//!
//! Logical cluster `k` of a stripe set lives on member `k mod n` at physical
//! cluster `k div n`, starting at member 0. A single set holds at most
//! [`MAX_STRIPE_WIDTH`] members; larger disk counts are split into several
//! sets that are driven in parallel.

use thiserror::Error;

use crate::engine::RunSpec;

pub const MAX_STRIPE_WIDTH: usize = 32;
pub const DEFAULT_CLUSTER_BYTES: u64 = 64 * 1024;
const MIN_CLUSTER_BYTES: u64 = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StripeError {
    #[error("cluster size {0} must be a power of two of at least 4096 bytes")]
    BadCluster(u64),
    #[error("a stripe set needs 1..=32 targets, got {0}")]
    BadWidth(usize),
    #[error("target {0} appears twice")]
    DuplicateTarget(usize),
    #[error("max_per_volume must be within 1..=32, got {0}")]
    BadVolumeLimit(usize),
    #[error("cannot plan volumes for zero targets")]
    NoTargets,
    #[error("block size {block} is incompatible with {cluster}-byte clusters")]
    IncompatibleBlock { block: u64, cluster: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripeMap {
    cluster_bytes: u64,
    targets: Vec<usize>,
}

impl StripeMap {
    pub fn new(cluster_bytes: u64, targets: Vec<usize>) -> Result<Self, StripeError> {
        if cluster_bytes < MIN_CLUSTER_BYTES || !cluster_bytes.is_power_of_two() {
            return Err(StripeError::BadCluster(cluster_bytes));
        }
        if targets.is_empty() || targets.len() > MAX_STRIPE_WIDTH {
            return Err(StripeError::BadWidth(targets.len()));
        }
        let mut seen = targets.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(StripeError::DuplicateTarget(w[0]));
        }
        Ok(Self { cluster_bytes, targets })
    }

    pub fn cluster_bytes(&self) -> u64 {
        self.cluster_bytes
    }

    /// Target ids in stripe order.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn width(&self) -> usize {
        self.targets.len()
    }

    /// Logical offset → (position in [`targets`](Self::targets), physical offset).
    pub fn map_offset(&self, logical: u64) -> (usize, u64) {
        let c = self.cluster_bytes;
        let n = self.targets.len() as u64;
        let k = logical / c;
        ((k % n) as usize, (k / n) * c + logical % c)
    }

    pub fn inverse_map(&self, target_index: usize, physical: u64) -> u64 {
        let c = self.cluster_bytes;
        let n = self.targets.len() as u64;
        ((physical / c) * n + target_index as u64) * c + physical % c
    }

    /// Volume length when the shortest member holds `shortest_member` bytes.
    pub fn logical_len(&self, shortest_member: u64) -> u64 {
        let per = shortest_member / self.cluster_bytes * self.cluster_bytes;
        per * self.targets.len() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VolumePlan {
    pub volumes: Vec<StripeMap>,
}

impl VolumePlan {
    pub fn n_targets(&self) -> usize {
        self.volumes.iter().map(StripeMap::width).sum()
    }
}

/// Splits targets `0..n_targets` into the fewest stripe sets of at most
/// `max_per_volume` members, with sizes differing by at most one.
pub fn plan_volumes(n_targets: usize, max_per_volume: usize) -> Result<VolumePlan, StripeError> {
    plan_volumes_with(n_targets, max_per_volume, DEFAULT_CLUSTER_BYTES)
}

pub fn plan_volumes_with(
    n_targets: usize,
    max_per_volume: usize,
    cluster_bytes: u64,
) -> Result<VolumePlan, StripeError> {
    if max_per_volume == 0 || max_per_volume > MAX_STRIPE_WIDTH {
        return Err(StripeError::BadVolumeLimit(max_per_volume));
    }
    if n_targets == 0 {
        return Err(StripeError::NoTargets);
    }
    let count = n_targets.div_ceil(max_per_volume);
    let base = n_targets / count;
    let extra = n_targets % count;
    let mut next = 0;
    let volumes = (0..count)
        .map(|v| {
            let size = base + usize::from(v < extra);
            let ids = (next..next + size).collect();
            next += size;
            StripeMap::new(cluster_bytes, ids)
        })
        .collect::<Result<_, _>>()?;
    Ok(VolumePlan { volumes })
}

/// Per-member view of a logical sequential stream.
#[derive(Clone, Debug, PartialEq)]
pub struct SubStream {
    pub target_index: usize,
    /// Integer approximation usable by the engine: whole-cluster fragments and
    /// the outstanding count rounded up.
    pub spec: RunSpec,
    /// Mean contiguous bytes this member receives per touching request.
    pub fragment_bytes: f64,
    /// Mean number of fragments outstanding on this member.
    pub mean_outstanding: f64,
}

/// Decomposes one logical stream into per-member sequential sub-streams.
///
/// Requests must be whole clusters, or evenly divide a cluster.
pub fn stripe_stream(map: &StripeMap, spec: &RunSpec) -> Result<Vec<SubStream>, StripeError> {
    let c = map.cluster_bytes;
    let b = spec.block_bytes;
    let n = map.width() as u64;
    let compatible = b > 0 && if b >= c { b.is_multiple_of(c) } else { c.is_multiple_of(b) };
    if !compatible {
        return Err(StripeError::IncompatibleBlock { block: b, cluster: c });
    }
    let q = f64::from(spec.depth);
    let k = b / c;
    // fragment size, fragments per request per member
    let (fragment_bytes, per_request, whole) = if k >= n {
        (b as f64 / n as f64, 1.0, (k / n) * c)
    } else if k >= 1 {
        (c as f64, k as f64 / n as f64, c)
    } else {
        (b as f64, 1.0 / n as f64, b)
    };
    let mean_outstanding = q * per_request;
    let first_cluster = spec.start_offset / c;
    Ok((0..map.width())
        .map(|t| {
            let t64 = t as u64;
            // first logical cluster at or after the start that lands on t
            let idx = first_cluster + (t64 + n - first_cluster % n) % n;
            let start = if idx == first_cluster {
                map.map_offset(spec.start_offset).1
            } else {
                (idx / n) * c
            };
            let mut sub = spec.clone();
            sub.block_bytes = whole;
            sub.depth = (mean_outstanding.ceil() as u32).max(1);
            sub.start_offset = start;
            SubStream { target_index: t, spec: sub, fragment_bytes, mean_outstanding }
        })
        .collect())
}
