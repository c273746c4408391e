//! Max-min fair allocation by progressive filling.
//!
//! Every unfrozen flow rises at the same rate. A flow freezes when it reaches
//! its demand or when any node on its path to the root runs out of capacity;
//! all flows under a saturated node freeze together. The loop jumps directly
//! from one freezing event to the next, so it terminates after at most
//! `flows + nodes` rounds.

use super::{Topology, TopoError};
use crate::engine::Mode;

/// Relative slack used to decide that a demand or a cap has been reached.
const TIGHT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    /// Allocation per input demand, in input order.
    pub allocations: Vec<f64>,
    pub total: f64,
}

/// Allocates bandwidth to per-disk demands (MB/s). The same disk may appear
/// more than once; each entry is an independent flow through that disk.
pub fn solve_flows(topo: &Topology, demands: &[(&str, f64)], mode: Mode) -> Result<FlowSolution, TopoError> {
    let flows = demands
        .iter()
        .map(|(id, d)| {
            topo.disk_index(id)
                .map(|i| (i, *d))
                .ok_or_else(|| TopoError::UnknownDisk(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let allocations = solve_indexed(topo, &flows, mode)?;
    let total = allocations.iter().sum();
    Ok(FlowSolution { allocations, total })
}

/// [`solve_flows`] over disk node indices.
pub(crate) fn solve_indexed(topo: &Topology, flows: &[(usize, f64)], mode: Mode) -> Result<Vec<f64>, TopoError> {
    let nodes = topo.nodes();
    for &(disk, demand) in flows {
        if disk >= nodes.len() || nodes[disk].kind != super::NodeKind::Disk {
            return Err(TopoError::UnknownDisk(format!("#{disk}")));
        }
        if !(demand >= 0.0) {
            return Err(TopoError::Plan(format!("demand must be non-negative, got {demand}")));
        }
    }

    let paths: Vec<Vec<usize>> = flows.iter().map(|&(d, _)| topo.path_to_root(d).collect()).collect();
    let cap: Vec<f64> = nodes.iter().map(|n| n.cap(mode)).collect();
    let mut used = vec![0.0f64; nodes.len()];
    let mut active_under = vec![0usize; nodes.len()];
    let mut alloc = vec![0.0f64; flows.len()];
    let mut active = vec![false; flows.len()];

    for (f, &(_, demand)) in flows.iter().enumerate() {
        active[f] = demand > 0.0;
        if active[f] {
            for &n in &paths[f] {
                active_under[n] += 1;
            }
        }
    }

    let mut level = 0.0f64;
    loop {
        let n_active = active.iter().filter(|a| **a).count();
        if n_active == 0 {
            break;
        }
        let mut step = f64::INFINITY;
        for (f, &(_, demand)) in flows.iter().enumerate() {
            if active[f] {
                step = step.min(demand - level);
            }
        }
        for n in 0..nodes.len() {
            if active_under[n] > 0 && cap[n].is_finite() {
                step = step.min((cap[n] - used[n]) / active_under[n] as f64);
            }
        }
        if step.is_infinite() {
            // nothing bounds these flows: unlimited demand through unlimited caps
            for f in 0..flows.len() {
                if active[f] {
                    alloc[f] = f64::INFINITY;
                    active[f] = false;
                }
            }
            break;
        }
        let step = step.max(0.0);
        level += step;
        for n in 0..nodes.len() {
            used[n] += step * active_under[n] as f64;
        }

        let saturated: Vec<bool> = (0..nodes.len())
            .map(|n| active_under[n] > 0 && cap[n].is_finite() && cap[n] - used[n] <= TIGHT * cap[n].max(1.0))
            .collect();
        let mut froze = false;
        for (f, &(_, demand)) in flows.iter().enumerate() {
            if !active[f] {
                continue;
            }
            alloc[f] = level;
            let met = demand.is_finite() && demand - level <= TIGHT * demand.max(1.0);
            if met || paths[f].iter().any(|&n| saturated[n]) {
                if met {
                    alloc[f] = demand;
                }
                active[f] = false;
                froze = true;
                for &n in &paths[f] {
                    active_under[n] -= 1;
                }
            }
        }
        debug_assert!(froze, "progressive filling must freeze at least one flow per round");
        if !froze {
            break;
        }
    }
    Ok(alloc)
}
