//! Calibrated topologies for the four reference machines.
//!
//! Preset caps are fitted to the same aggregate throughputs the acceptance
//! suite checks, so reproducing them validates the composition logic (stream
//! demand → fair allocation → bottleneck totals), not independent prediction.

use std::path::PathBuf;

use super::{TopoError, Topology};

/// Directory whose `<name>.topo` files take precedence over the built-in presets.
pub const PRESET_DIR_ENV: &str = "SEQBENCH_PRESET_DIR";

pub const PRESET_NAMES: [&str; 4] = ["xeon-2003", "tyan-s2882", "newisys-4300", "nec-1320xd"];

const BUILTIN: [(&str, &str); 4] = [
    ("xeon-2003", include_str!("../../data/presets/xeon-2003.topo")),
    ("tyan-s2882", include_str!("../../data/presets/tyan-s2882.topo")),
    ("newisys-4300", include_str!("../../data/presets/newisys-4300.topo")),
    ("nec-1320xd", include_str!("../../data/presets/nec-1320xd.topo")),
];

/// Full preset name for a name or short alias (`xeon`, `tyan`, `newisys`, `nec`).
pub fn canonical_preset_name(name: &str) -> Option<&'static str> {
    PRESET_NAMES.iter().copied().find(|full| {
        *full == name || full.split('-').next() == Some(name)
    })
}

/// Config text of a preset, honoring the override directory.
pub fn preset_text(name: &str) -> Result<String, TopoError> {
    let canonical = canonical_preset_name(name).ok_or_else(|| TopoError::UnknownPreset(name.to_string()))?;
    if let Some(dir) = std::env::var_os(PRESET_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{canonical}.topo"));
        if path.exists() {
            return std::fs::read_to_string(&path).map_err(|e| TopoError::PresetIo {
                name: canonical.to_string(),
                msg: format!("{}: {e}", path.display()),
            });
        }
    }
    Ok(BUILTIN
        .iter()
        .find(|(n, _)| *n == canonical)
        .map(|(_, t)| t.to_string())
        .expect("every preset name has a built-in file"))
}

pub fn preset(name: &str) -> Result<Topology, TopoError> {
    let canonical = canonical_preset_name(name).ok_or_else(|| TopoError::UnknownPreset(name.to_string()))?;
    Topology::parse(canonical, &preset_text(canonical)?)
}
