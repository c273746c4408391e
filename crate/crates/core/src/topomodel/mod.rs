//! Hardware bandwidth hierarchy model.
//!
//! A [`Topology`] is a forest of capacity-capped nodes rooted at `system`
//! nodes, with disks as leaves. Concurrent streams are allocated bandwidth
//! by max-min fair progressive filling ([`solve_flows`]), so a shared cap
//! anywhere above a set of disks is split evenly among the disks it binds.
//!
//! # Config format
//!
//! Line oriented, `#` starts a comment:
//!
//! ```text
//! <id> <kind> <parent|-> <cap_read|inf> <cap_write|inf>
//! model <disk-id|*> <outer_read> <outer_write> <inner_read> <inner_write> <overhead_ms> <zone> [size_bytes]
//! cpu <n_processors> <cpu_pct_per_gbps>
//! ```
//!
//! `kind` is one of `disk`, `controller`, `slot`, `bridge`, `system`. Caps are
//! MB/s. `model *` sets the default disk model; `model <id>` overrides one
//! disk. Without a `model *` line disks use [`SimDiskModel::default`].

mod flow;
mod predict;
mod presets;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{CpuSample, Mode};
use crate::targets::SimDiskModel;

pub use flow::{solve_flows, FlowSolution};
pub(crate) use flow::solve_indexed;
pub use predict::{predict, DiskPlan, Layout, Prediction};
pub(crate) use predict::stream_flows;
pub use presets::{canonical_preset_name, preset, preset_text, PRESET_DIR_ENV, PRESET_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Disk,
    Controller,
    Slot,
    Bridge,
    System,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Disk => "disk",
            NodeKind::Controller => "controller",
            NodeKind::Slot => "slot",
            NodeKind::Bridge => "bridge",
            NodeKind::System => "system",
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disk" => Ok(NodeKind::Disk),
            "controller" => Ok(NodeKind::Controller),
            "slot" => Ok(NodeKind::Slot),
            "bridge" => Ok(NodeKind::Bridge),
            "system" => Ok(NodeKind::System),
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub parent: Option<usize>,
    /// MB/s; `f64::INFINITY` when unlimited.
    pub cap_read: f64,
    pub cap_write: f64,
}

impl Node {
    pub fn cap(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Read => self.cap_read,
            Mode::Write => self.cap_write,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpuProfile {
    pub n_processors: u32,
    /// Percent of one processor consumed per GB/s of I/O.
    pub cpu_pct_per_gbps: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cycle through node `{0}`")]
    Cycle(String),
    #[error("node `{node}` names unknown parent `{parent}`")]
    Orphan { node: String, parent: String },
    #[error("node `{node}`: {msg}")]
    Invalid { node: String, msg: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown disk `{0}`")]
    UnknownDisk(String),
    #[error("cannot read preset `{name}`: {msg}")]
    PresetIo { name: String, msg: String },
    #[error("plan: {0}")]
    Plan(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    name: String,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    /// Node indices of disks, in declaration order.
    disks: Vec<usize>,
    cpu: CpuProfile,
    default_model: SimDiskModel,
    models: HashMap<usize, SimDiskModel>,
}

fn parse_cap(tok: &str, line: usize) -> Result<f64, TopoError> {
    if tok == "inf" {
        return Ok(f64::INFINITY);
    }
    match tok.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(TopoError::Parse { line, msg: format!("cap must be positive or `inf`, got `{tok}`") }),
    }
}

fn parse_num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T, TopoError> {
    tok.parse()
        .map_err(|_| TopoError::Parse { line, msg: format!("bad {what} `{tok}`") })
}

impl Topology {
    /// Parses and validates a config document.
    pub fn parse(name: &str, text: &str) -> Result<Self, TopoError> {
        struct Raw<'a> {
            line: usize,
            id: &'a str,
            kind: NodeKind,
            parent: Option<&'a str>,
            cap_read: f64,
            cap_write: f64,
        }

        let mut raws = Vec::new();
        let mut cpu = None;
        let mut model_lines = Vec::new();

        for (i, full) in text.lines().enumerate() {
            let line = i + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            match toks[0] {
                "cpu" => {
                    if toks.len() != 3 {
                        return Err(TopoError::Parse { line, msg: "expected `cpu <n> <pct_per_gbps>`".into() });
                    }
                    let n: u32 = parse_num(toks[1], line, "processor count")?;
                    let pct: f64 = parse_num(toks[2], line, "cpu percentage")?;
                    if n == 0 || !(pct >= 0.0 && pct.is_finite()) {
                        return Err(TopoError::Parse { line, msg: "cpu values out of range".into() });
                    }
                    cpu = Some(CpuProfile { n_processors: n, cpu_pct_per_gbps: pct });
                }
                "model" => {
                    if toks.len() != 8 && toks.len() != 9 {
                        return Err(TopoError::Parse {
                            line,
                            msg: "expected `model <id|*> <or> <ow> <ir> <iw> <overhead_ms> <zone> [size]`".into(),
                        });
                    }
                    let f = |i: usize, what: &str| parse_num::<f64>(toks[i], line, what);
                    let model = SimDiskModel {
                        cap_outer_read: f(2, "cap")?,
                        cap_outer_write: f(3, "cap")?,
                        cap_inner_read: f(4, "cap")?,
                        cap_inner_write: f(5, "cap")?,
                        overhead_s: f(6, "overhead")? / 1000.0,
                        zone: f(7, "zone")?,
                        size_bytes: match toks.get(8) {
                            Some(t) => parse_num(t, line, "size")?,
                            None => SimDiskModel::default().size_bytes,
                        },
                    };
                    model.validate().map_err(|e| TopoError::Parse { line, msg: e.to_string() })?;
                    model_lines.push((line, toks[1], model));
                }
                _ => {
                    if toks.len() != 5 {
                        return Err(TopoError::Parse {
                            line,
                            msg: format!("expected 5 fields `<id> <kind> <parent|-> <cap_read> <cap_write>`, got {}", toks.len()),
                        });
                    }
                    let kind = toks[1].parse::<NodeKind>().map_err(|msg| TopoError::Parse { line, msg })?;
                    raws.push(Raw {
                        line,
                        id: toks[0],
                        kind,
                        parent: (toks[2] != "-").then_some(toks[2]),
                        cap_read: parse_cap(toks[3], line)?,
                        cap_write: parse_cap(toks[4], line)?,
                    });
                }
            }
        }
        if raws.is_empty() {
            return Err(TopoError::Parse { line: text.lines().count().max(1), msg: "document declares no nodes".into() });
        }

        let mut index = HashMap::new();
        for (i, r) in raws.iter().enumerate() {
            if index.insert(r.id.to_string(), i).is_some() {
                return Err(TopoError::Parse { line: r.line, msg: format!("duplicate node id `{}`", r.id) });
            }
        }
        let mut nodes = Vec::with_capacity(raws.len());
        for r in &raws {
            let parent = match r.parent {
                None => None,
                Some(p) => Some(*index.get(p).ok_or_else(|| TopoError::Orphan {
                    node: r.id.to_string(),
                    parent: p.to_string(),
                })?),
            };
            nodes.push(Node {
                id: r.id.to_string(),
                kind: r.kind,
                parent,
                cap_read: r.cap_read,
                cap_write: r.cap_write,
            });
        }

        let disks: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].kind == NodeKind::Disk).collect();
        let mut topo = Topology {
            name: name.to_string(),
            nodes,
            index,
            disks,
            cpu: cpu.unwrap_or(CpuProfile { n_processors: 1, cpu_pct_per_gbps: 0.0 }),
            default_model: SimDiskModel::default(),
            models: HashMap::new(),
        };
        topo.validate()?;

        for (line, target, model) in model_lines {
            if target == "*" {
                topo.default_model = model;
            } else {
                match topo.index.get(target) {
                    Some(&i) if topo.nodes[i].kind == NodeKind::Disk => {
                        topo.models.insert(i, model);
                    }
                    _ => {
                        return Err(TopoError::Parse { line, msg: format!("`{target}` is not a disk") });
                    }
                }
            }
        }
        Ok(topo)
    }

    fn validate(&self) -> Result<(), TopoError> {
        let invalid = |n: &Node, msg: &str| TopoError::Invalid { node: n.id.clone(), msg: msg.into() };
        for (i, n) in self.nodes.iter().enumerate() {
            match n.parent {
                None if n.kind != NodeKind::System => return Err(invalid(n, "only system nodes may be roots")),
                Some(_) if n.kind == NodeKind::System => return Err(invalid(n, "system nodes must be roots")),
                Some(p) if self.nodes[p].kind == NodeKind::Disk => {
                    return Err(invalid(n, "a disk cannot be a parent"));
                }
                _ => {}
            }
            // walk up; a path longer than the node count means a cycle
            let mut cur = n.parent;
            let mut steps = 0;
            while let Some(p) = cur {
                steps += 1;
                if p == i || steps > self.nodes.len() {
                    return Err(TopoError::Cycle(n.id.clone()));
                }
                cur = self.nodes[p].parent;
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn disk_index(&self, id: &str) -> Option<usize> {
        self.node_index(id).filter(|&i| self.nodes[i].kind == NodeKind::Disk)
    }

    /// Disk ids in declaration order.
    pub fn disk_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.disks.iter().map(|&i| self.nodes[i].id.as_str())
    }

    pub fn n_disks(&self) -> usize {
        self.disks.len()
    }

    pub fn cpu(&self) -> CpuProfile {
        self.cpu
    }

    pub fn model_for(&self, disk: usize) -> SimDiskModel {
        self.models.get(&disk).copied().unwrap_or(self.default_model)
    }

    /// `node` followed by its ancestors up to the root.
    pub fn path_to_root(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(node), move |&i| self.nodes[i].parent)
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].parent == Some(node))
    }

    /// Model CPU cost of moving `total_rate` MB/s.
    pub fn cpu_cost(&self, total_rate: f64) -> CpuSample {
        let one_proc = self.cpu.cpu_pct_per_gbps * total_rate.max(0.0) / 1000.0;
        CpuSample::from_one_proc(one_proc, self.cpu.n_processors)
    }

    /// Serializes back to the config format.
    pub fn to_text(&self) -> String {
        let cap = |c: f64| if c.is_finite() { format!("{c}") } else { "inf".to_string() };
        let mut out = String::new();
        for n in &self.nodes {
            let parent = n.parent.map_or("-", |p| self.nodes[p].id.as_str());
            out += &format!("{} {} {} {} {}\n", n.id, n.kind.as_str(), parent, cap(n.cap_read), cap(n.cap_write));
        }
        let model_line = |id: &str, m: &SimDiskModel| {
            format!(
                "model {id} {} {} {} {} {} {} {}\n",
                m.cap_outer_read,
                m.cap_outer_write,
                m.cap_inner_read,
                m.cap_inner_write,
                m.overhead_s * 1000.0,
                m.zone,
                m.size_bytes
            )
        };
        out += &model_line("*", &self.default_model);
        let mut overrides: Vec<_> = self.models.iter().collect();
        overrides.sort_by_key(|(i, _)| **i);
        for (i, m) in overrides {
            out += &model_line(&self.nodes[*i].id, m);
        }
        out += &format!("cpu {} {}\n", self.cpu.n_processors, self.cpu.cpu_pct_per_gbps);
        out
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
