//! Rate surfaces over (block, depth), heatmap rendering and plateau search.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::ResultRow;
use crate::engine::Mode;
use crate::units::format_size;

#[derive(Debug, Error, PartialEq)]
pub enum SurfaceError {
    #[error("no {0} rows")]
    Empty(Mode),
    #[error("grid is missing block {block} depth {depth}")]
    IncompleteGrid { block: u64, depth: u32 },
    #[error("cell block {block} depth {depth} appears more than once")]
    DuplicateCell { block: u64, depth: u32 },
}

/// Dense rate grid for one mode; `rates[i][j]` is block `blocks[i]` at
/// depth `depths[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub mode: Mode,
    pub config: String,
    pub blocks: Vec<u64>,
    pub depths: Vec<u32>,
    pub rates: Vec<Vec<f64>>,
}

/// Builds the grid for `mode` from successful rows. Rows must form a full
/// rectangle; failed cells count as missing.
pub fn emit_surface(rows: &[ResultRow], mode: Mode) -> Result<Surface, SurfaceError> {
    let mut cells: BTreeMap<(u64, u32), f64> = BTreeMap::new();
    let mut config = None;
    for r in rows.iter().filter(|r| r.mode == mode && r.error.is_none()) {
        config.get_or_insert_with(|| r.config.clone());
        if cells.insert((r.block_bytes, r.depth), r.rate_mbps).is_some() {
            return Err(SurfaceError::DuplicateCell { block: r.block_bytes, depth: r.depth });
        }
    }
    let all_cells = rows.iter().filter(|r| r.mode == mode);
    let mut blocks: Vec<u64> = all_cells.clone().map(|r| r.block_bytes).collect();
    let mut depths: Vec<u32> = all_cells.map(|r| r.depth).collect();
    blocks.sort_unstable();
    blocks.dedup();
    depths.sort_unstable();
    depths.dedup();
    if blocks.is_empty() {
        return Err(SurfaceError::Empty(mode));
    }

    let mut rates = Vec::with_capacity(blocks.len());
    for &block in &blocks {
        let mut line = Vec::with_capacity(depths.len());
        for &depth in &depths {
            let rate = cells.get(&(block, depth)).ok_or(SurfaceError::IncompleteGrid { block, depth })?;
            line.push(*rate);
        }
        rates.push(line);
    }
    Ok(Surface { mode, config: config.unwrap_or_default(), blocks, depths, rates })
}

impl Surface {
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rate(&self, block: u64, depth: u32) -> Option<f64> {
        let i = self.blocks.iter().position(|&b| b == block)?;
        let j = self.depths.iter().position(|&d| d == depth)?;
        Some(self.rates[i][j])
    }

    /// Heatmap with block along the x axis and depth along the y axis
    /// (depth 1 at the bottom).
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 64;
        const CELL_H: usize = 36;
        const LEFT: usize = 70;
        const TOP: usize = 40;
        let w = LEFT + CELL_W * self.blocks.len() + 20;
        let h = TOP + CELL_H * self.depths.len() + 60;
        let max = self.max_rate().max(f64::MIN_POSITIVE);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="20" font-size="14">{} {} rate (MB/s), max {:.1}</text>"#,
            xml_escape(&self.config),
            self.mode,
            self.max_rate()
        );
        let n_depths = self.depths.len();
        for (i, &block) in self.blocks.iter().enumerate() {
            for (j, &depth) in self.depths.iter().enumerate() {
                let rate = self.rates[i][j];
                let x = LEFT + i * CELL_W;
                let y = TOP + (n_depths - 1 - j) * CELL_H;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}"><title>{} q={depth}: {rate:.1}</title></rect>"#,
                    heat(rate / max),
                    format_size(block)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{rate:.0}</text>"#,
                    x + CELL_W / 2,
                    y + CELL_H / 2 + 4
                );
            }
        }
        for (j, depth) in self.depths.iter().enumerate() {
            let y = TOP + (n_depths - 1 - j) * CELL_H + CELL_H / 2 + 4;
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">q={depth}</text>"#, LEFT - 6);
        }
        let axis_y = TOP + n_depths * CELL_H + 16;
        for (i, &block) in self.blocks.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{axis_y}" text-anchor="middle">{}</text>"#,
                LEFT + i * CELL_W + CELL_W / 2,
                format_size(block)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">block size</text>"#,
            LEFT + CELL_W * self.blocks.len() / 2,
            axis_y + 22
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue (0) through red (1).
fn heat(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs()) * 0.8).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub block: u64,
    pub depth: u32,
    pub rate: f64,
}

/// The lexicographically smallest (depth, block) cell whose rate reaches
/// `threshold` × the grid maximum; `None` when no cell does.
pub fn find_plateau(surface: &Surface, threshold: f64) -> Option<Plateau> {
    let target = threshold * surface.max_rate();
    for (j, &depth) in surface.depths.iter().enumerate() {
        for (i, &block) in surface.blocks.iter().enumerate() {
            let rate = surface.rates[i][j];
            if rate >= target {
                return Some(Plateau { block, depth, rate });
            }
        }
    }
    None
}

/// JBOD rate relative to striped rate for one matched cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutGap {
    pub mode: Mode,
    pub block_bytes: u64,
    pub depth: u32,
    pub jbod_mbps: f64,
    pub stripe_mbps: f64,
    /// `(jbod - stripe) / stripe × 100`.
    pub gap_pct: f64,
}

/// Pairs cells measured under both layouts and reports how much faster the
/// independent disks were than the striped volume.
pub fn compare_layouts(jbod: &[ResultRow], stripe: &[ResultRow]) -> Vec<LayoutGap> {
    let striped: BTreeMap<(u8, u64, u32), f64> = stripe
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| ((r.mode as u8, r.block_bytes, r.depth), r.rate_mbps))
        .collect();
    jbod.iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| {
            let s = *striped.get(&(r.mode as u8, r.block_bytes, r.depth))?;
            (s > 0.0).then(|| LayoutGap {
                mode: r.mode,
                block_bytes: r.block_bytes,
                depth: r.depth,
                jbod_mbps: r.rate_mbps,
                stripe_mbps: s,
                gap_pct: (r.rate_mbps - s) / s * 100.0,
            })
        })
        .collect()
}
