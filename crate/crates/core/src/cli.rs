//! Command-line frontend.
//!
//! `run` takes diskspd-style flags (`-x -h -d30 -o4 -b1M <target>`), `sqlio`
//! translates the sqlio subset, and `sweep`, `gen`, `simulate` and `report`
//! cover the matrix driver, test-file generation, the topology simulator and
//! CSV post-processing. Exit codes: 0 success, 1 runtime failure, 2 usage.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::engine::{run_parallel, run_stream, Buffering, EngineError, Mode, RunSpec, StreamResult};
use crate::filegen;
use crate::stripe::DEFAULT_CLUSTER_BYTES;
use crate::sweep::{
    build_default_matrix, compare_layouts, emit_condensed, emit_surface, find_plateau, long_run_check,
    parse_condensed, run_sweep, ResultRow, SweepBackend, LONG_RUN_SECONDS, PLATEAU_THRESHOLD,
};
use crate::targets::{open_target_with, TargetHandle, TargetOptions};
use crate::topomodel::{predict, preset, DiskPlan};
use crate::units::{format_size, parse_size};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "seqbench", version, about = "Sequential storage bandwidth benchmark and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one diskspd-style measurement.
    #[command(disable_help_flag = true)]
    Run(RunArgs),
    /// Run one measurement using sqlio flag spellings.
    #[command(disable_help_flag = true)]
    Sqlio(SqlioArgs),
    /// Run a depth x block x mode matrix and write condensed CSV.
    Sweep(SweepArgs),
    /// Generate or verify a deterministic 100-byte-record test file.
    Gen(GenArgs),
    /// Predict throughput of a preset machine for a list of disk counts.
    Simulate(SimulateArgs),
    /// Render surfaces and plateau summaries from a condensed CSV.
    Report(ReportArgs),
}

fn size_arg(s: &str) -> Result<u64, String> {
    parse_size(s).map_err(|e| e.to_string())
}

fn positive_secs(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Print the result as a condensed CSV header and row.
    #[arg(short = 'x')]
    condensed: bool,
    /// Unbuffered I/O (bypass the OS cache).
    #[arg(short = 'h')]
    unbuffered: bool,
    /// Duration in seconds.
    #[arg(short = 'd', default_value = "30", value_parser = positive_secs)]
    duration: f64,
    /// Outstanding requests.
    #[arg(short = 'o', default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    /// Block size: bytes, or K/M/G binary suffix.
    #[arg(short = 'b', default_value = "64K", value_parser = size_arg)]
    block: u64,
    /// Write instead of read.
    #[arg(short = 'w')]
    write: bool,
    /// Allow writes to raw block devices.
    #[arg(long)]
    force: bool,
    /// Run each target as an independent stream instead of striping them.
    #[arg(long)]
    jbod: bool,
    /// Stripe interleave for multiple targets.
    #[arg(long, default_value = "64K", value_parser = size_arg)]
    cluster: u64,
    /// Print help.
    #[arg(long, action = ArgAction::Help)]
    help: Option<bool>,
    /// Target locators: a path, `file:<path>` or `sim:<topology>/<disk>`.
    #[arg(required = true)]
    targets: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SqlioKind {
    #[value(name = "R")]
    Read,
    #[value(name = "W")]
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SqlioPattern {
    #[value(name = "sequential")]
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SqlioBuffering {
    /// No buffering.
    #[value(name = "N")]
    None,
    /// Hardware buffering only.
    #[value(name = "H")]
    Hardware,
    /// OS buffering.
    #[value(name = "S")]
    Os,
    /// OS and hardware buffering.
    #[value(name = "Y")]
    All,
}

/// sqlio spellings: `-s`→`-d`, `-kW`→`-w`, `-BN`→`-h`, `-o` unchanged,
/// `-b` in KiB.
#[derive(Args, Debug)]
struct SqlioArgs {
    #[arg(short = 's', default_value = "30", value_parser = positive_secs)]
    seconds: f64,
    #[arg(short = 'k', value_enum, default_value = "R")]
    kind: SqlioKind,
    #[arg(short = 'f', value_enum, default_value = "sequential")]
    pattern: SqlioPattern,
    #[arg(short = 'o', default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    /// Block size in KiB.
    #[arg(short = 'b', default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    block_kib: u64,
    #[arg(short = 'B', value_enum, default_value = "N")]
    buffering: SqlioBuffering,
    /// Condensed CSV output.
    #[arg(short = 'x')]
    condensed: bool,
    #[arg(long, action = ArgAction::Help)]
    help: Option<bool>,
    #[arg(required = true)]
    targets: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LayoutArg {
    Jbod,
    Stripe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Read,
    Write,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Read => vec![Mode::Read],
            ModeArg::Write => vec![Mode::Write],
            ModeArg::Both => vec![Mode::Read, Mode::Write],
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Simulate this preset instead of measuring real targets.
    #[arg(long, conflicts_with = "targets")]
    preset: Option<String>,
    /// Number of preset disks to drive.
    #[arg(long, requires = "preset")]
    disks: Option<usize>,
    /// Real target locators.
    #[arg(long = "target")]
    targets: Vec<String>,
    #[arg(long, value_enum, default_value = "jbod")]
    layout: LayoutArg,
    /// Comma-separated depths.
    #[arg(long, value_delimiter = ',')]
    depths: Vec<u32>,
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', value_parser = size_arg)]
    blocks: Vec<u64>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Seconds per cell.
    #[arg(short = 'd', long = "duration", default_value = "30", value_parser = positive_secs)]
    duration: f64,
    /// Use the OS cache for real targets.
    #[arg(long)]
    buffered: bool,
    #[arg(long, default_value = "64K", value_parser = size_arg)]
    cluster: u64,
    #[arg(long)]
    force: bool,
    /// Rerun every Nth cell for the long-run duration and report the deviation.
    #[arg(long, value_name = "N")]
    long_run: Option<usize>,
    #[arg(long, default_value_t = LONG_RUN_SECONDS, value_parser = positive_secs)]
    long_run_secs: f64,
    /// Output CSV path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// File size in bytes (K/M/G suffixes are binary).
    #[arg(long, value_parser = size_arg, conflicts_with = "disks")]
    size: Option<u64>,
    /// Size the file as disks x 30 GB.
    #[arg(long)]
    disks: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check an existing file instead of writing one.
    #[arg(long, conflicts_with_all = ["size", "disks"])]
    verify: bool,
    path: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    preset: String,
    /// Comma-separated disk counts.
    #[arg(long, value_delimiter = ',')]
    disks: Vec<usize>,
    #[arg(short = 'b', default_value = "1M", value_parser = size_arg)]
    block: u64,
    #[arg(short = 'o', default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    #[arg(short = 'd', default_value = "30", value_parser = positive_secs)]
    duration: f64,
    #[arg(long, value_enum, default_value = "stripe")]
    layout: LayoutArg,
    #[arg(short = 'w')]
    write: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Condensed CSV to read.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = PLATEAU_THRESHOLD)]
    threshold: f64,
    /// Striped-volume CSV to compare `--in` (JBOD) against.
    #[arg(long)]
    compare: Option<PathBuf>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Sqlio(a) => cmd_sqlio(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Gen(a) => cmd_gen(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

struct RunRequest {
    targets: Vec<String>,
    spec: RunSpec,
    buffering: Buffering,
    force: bool,
    jbod: bool,
    cluster: u64,
    condensed: bool,
}

fn cmd_run(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mode = if a.write { Mode::Write } else { Mode::Read };
    let buffering = if a.unbuffered { Buffering::Unbuffered } else { Buffering::Os };
    execute_run(
        RunRequest {
            targets: a.targets,
            spec: RunSpec::new(mode, a.block, a.depth, a.duration).with_buffering(buffering),
            buffering,
            force: a.force,
            jbod: a.jbod,
            cluster: a.cluster,
            condensed: a.condensed,
        },
        out,
        err,
    )
}

fn cmd_sqlio(a: SqlioArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mode = match a.kind {
        SqlioKind::Read => Mode::Read,
        SqlioKind::Write => Mode::Write,
    };
    let buffering = match a.buffering {
        SqlioBuffering::None | SqlioBuffering::Hardware => Buffering::Unbuffered,
        SqlioBuffering::Os | SqlioBuffering::All => Buffering::Os,
    };
    let block = a.block_kib.checked_mul(1024).ok_or_else(|| Failure("block size overflows".into()))?;
    execute_run(
        RunRequest {
            targets: a.targets,
            spec: RunSpec::new(mode, block, a.depth, a.seconds).with_buffering(buffering),
            buffering,
            force: false,
            jbod: false,
            cluster: DEFAULT_CLUSTER_BYTES,
            condensed: a.condensed,
        },
        out,
        err,
    )
}

fn execute_run(req: RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut opts = TargetOptions::new(req.buffering);
    if req.spec.mode == Mode::Write {
        opts = opts.writable();
    }
    opts.force = req.force;
    let handles = req
        .targets
        .iter()
        .map(|t| open_target_with(t, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let n = handles.len();

    let outcome = if req.jbod && n > 1 {
        let locator = handles.iter().map(TargetHandle::locator).collect::<Vec<_>>().join("+");
        let streams: Vec<_> = handles.into_iter().map(|h| (h, req.spec.clone())).collect();
        run_parallel(&streams).map(|agg| ResultRow::from_aggregate(&locator, n, &req.spec, &agg))
    } else {
        let handle = if n == 1 {
            handles.into_iter().next().expect("one handle")
        } else {
            TargetHandle::striped(&handles, req.cluster)?
        };
        run_stream(&handle, &req.spec).map(|r| ResultRow::from_stream(handle.locator(), n, &r))
    };

    let (row, code) = match outcome {
        Ok(row) => (row, EXIT_OK),
        Err(EngineError::Io { source, partial }) => {
            let _ = writeln!(err, "error: {source}");
            let mut row = ResultRow::from_stream(&partial.locator, n, &partial);
            row.error = Some(crate::sweep::sanitize_field(&source.to_string()));
            (row, EXIT_RUNTIME)
        }
        Err(e) => return Err(e.into()),
    };
    if req.condensed {
        write!(out, "{}", emit_condensed(std::slice::from_ref(&row)))?;
    } else {
        write_human(out, &row)?;
    }
    Ok(code)
}

fn write_human(out: &mut dyn Write, r: &ResultRow) -> std::io::Result<()> {
    writeln!(out, "target:    {}", r.config)?;
    writeln!(out, "backend:   {}", r.backend)?;
    writeln!(out, "mode:      {}", r.mode)?;
    writeln!(out, "block:     {} ({} bytes)", format_size(r.block_bytes), r.block_bytes)?;
    writeln!(out, "depth:     {}", r.depth)?;
    writeln!(out, "elapsed:   {:.3} s", r.duration_s)?;
    writeln!(out, "bytes:     {}", r.bytes)?;
    writeln!(out, "ios:       {}", r.io_count)?;
    writeln!(out, "rate:      {:.1} MB/s", r.rate_mbps)?;
    match (r.cpu_total_pct, r.cpu_one_proc_pct) {
        (Some(t), Some(o)) => writeln!(out, "cpu:       {t:.2}% per processor, {o:.2}% of one processor")?,
        _ => writeln!(out, "cpu:       unavailable")?,
    }
    if let Some(e) = &r.error {
        writeln!(out, "error:     {e}")?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let striped = a.layout == LayoutArg::Stripe;
    let (backend, plan) = match (&a.preset, a.targets.is_empty()) {
        (Some(name), _) => {
            let topo = preset(name)?;
            let n = a.disks.unwrap_or(topo.n_disks());
            let plan = DiskPlan::first_n(&topo, n, striped)?;
            (SweepBackend::Simulated(Arc::new(topo)), plan)
        }
        (None, false) => {
            let plan = if striped { DiskPlan::striped(a.targets.clone())? } else { DiskPlan::jbod(a.targets.clone()) };
            let buffering = if a.buffered { Buffering::Os } else { Buffering::Unbuffered };
            (SweepBackend::Real { buffering, cluster_bytes: a.cluster, force: a.force }, plan)
        }
        (None, true) => {
            let _ = writeln!(err, "error: sweep needs --preset or at least one --target");
            return Ok(EXIT_USAGE);
        }
    };

    let mut matrix = build_default_matrix().with_plan(plan).with_duration(a.duration);
    if !a.depths.is_empty() {
        matrix.depths = a.depths;
    }
    if !a.blocks.is_empty() {
        matrix.blocks = a.blocks;
    }
    matrix.modes = a.mode.modes();
    if let Err(e) = matrix.validate() {
        let _ = writeln!(err, "error: {e}");
        return Ok(EXIT_USAGE);
    }

    let rows = run_sweep(&matrix, &backend)?;
    let csv = emit_condensed(&rows);
    match &a.out {
        Some(path) => fs::write(path, &csv).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => write!(out, "{csv}")?,
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        let _ = writeln!(err, "{failed} of {} cells failed", rows.len());
    }

    if let Some(every) = a.long_run {
        let report: &mut dyn Write = if a.out.is_some() { out } else { err };
        for c in long_run_check(&rows, &matrix.plan, &backend, every, a.long_run_secs) {
            let dev = c.rel_deviation.map(|d| format!("{:+.2}%", d * 100.0)).unwrap_or_else(|| "n/a".into());
            writeln!(
                report,
                "long-run {} {} q={}: {:.1} MB/s over {}s vs {:.1} MB/s over {}s, deviation {dev}",
                c.short.mode,
                format_size(c.short.block_bytes),
                c.short.depth,
                c.long.rate_mbps,
                c.long.duration_s,
                c.short.rate_mbps,
                c.short.duration_s,
            )?;
        }
    }
    Ok(if failed > 0 { EXIT_RUNTIME } else { EXIT_OK })
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    if a.verify {
        return Ok(if filegen::verify(&a.path, a.seed)? {
            writeln!(out, "{}: ok", a.path.display())?;
            EXIT_OK
        } else {
            writeln!(out, "{}: MISMATCH", a.path.display())?;
            EXIT_RUNTIME
        });
    }
    let size = match (a.size, a.disks) {
        (Some(s), _) => s,
        (None, Some(d)) => filegen::test_file_size(d),
        (None, None) => return Err(Failure("gen needs --size or --disks".into())),
    };
    filegen::generate(&a.path, size, a.seed)?;
    writeln!(out, "{}: {} bytes, {} records, seed {}", a.path.display(), size, size / filegen::RECORD_BYTES, a.seed)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let topo = preset(&a.preset)?;
    let mode = if a.write { Mode::Write } else { Mode::Read };
    let spec = RunSpec::new(mode, a.block, a.depth, a.duration);
    let disks = if a.disks.is_empty() { vec![topo.n_disks()] } else { a.disks };
    let mut rows = Vec::with_capacity(disks.len());
    for n in disks {
        let plan = DiskPlan::first_n(&topo, n, a.layout == LayoutArg::Stripe)?;
        let layout = if a.layout == LayoutArg::Stripe { "stripe" } else { "jbod" };
        let mut row = predict(&topo, &plan, &spec)?.row;
        row.config = format!("{}/{layout}{n}", topo.name());
        rows.push(row);
    }
    write!(out, "{}", emit_condensed(&rows))?;
    Ok(EXIT_OK)
}

fn surface_file_name(config: &str, mode: Mode) -> String {
    let safe: String = config
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}-{mode}.svg")
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> CmdResult {
    let read = |p: &Path| -> Result<Vec<ResultRow>, Failure> {
        let text = fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        parse_condensed(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))
    };
    let rows = read(&a.input)?;
    fs::create_dir_all(&a.out_dir)?;

    let mut configs: Vec<&str> = rows.iter().map(|r| r.config.as_str()).collect();
    configs.dedup();
    configs.sort_unstable();
    configs.dedup();
    let mut wrote = 0;
    for config in configs {
        let subset: Vec<ResultRow> = rows.iter().filter(|r| r.config == config).cloned().collect();
        for mode in a.mode.modes() {
            if !subset.iter().any(|r| r.mode == mode) {
                continue;
            }
            let surface = emit_surface(&subset, mode)?;
            let path = a.out_dir.join(surface_file_name(config, mode));
            fs::write(&path, surface.to_svg())?;
            wrote += 1;
            match find_plateau(&surface, a.threshold) {
                Some(p) => writeln!(
                    out,
                    "{config} {mode}: plateau at block {} depth {} ({:.1} MB/s, max {:.1}); surface {}",
                    format_size(p.block),
                    p.depth,
                    p.rate,
                    surface.max_rate(),
                    path.display()
                )?,
                None => writeln!(
                    out,
                    "{config} {mode}: no plateau at threshold {}; surface {}",
                    a.threshold,
                    path.display()
                )?,
            }
        }
    }
    if wrote == 0 {
        return Err(Failure(format!("{} has no rows for the requested mode", a.input.display())));
    }

    if let Some(stripe_path) = &a.compare {
        let stripe = read(stripe_path)?;
        let gaps = compare_layouts(&rows, &stripe);
        if gaps.is_empty() {
            writeln!(out, "compare: no matching cells")?;
        }
        for g in &gaps {
            writeln!(
                out,
                "compare {} {} q={}: jbod {:.1} vs stripe {:.1} MB/s ({:+.1}%)",
                g.mode,
                format_size(g.block_bytes),
                g.depth,
                g.jbod_mbps,
                g.stripe_mbps,
                g.gap_pct
            )?;
        }
        if !gaps.is_empty() {
            let mean = gaps.iter().map(|g| g.gap_pct).sum::<f64>() / gaps.len() as f64;
            writeln!(out, "compare: mean jbod advantage {mean:+.1}% over {} cells", gaps.len())?;
        }
    }
    Ok(EXIT_OK)
}

/// Row for a finished stream, for callers that drive the engine directly.
pub fn stream_row(result: &StreamResult, n_disks: usize) -> ResultRow {
    ResultRow::from_stream(&result.locator, n_disks, result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("seqbench").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn diskspd_invocation_on_sim() {
        let (code, out, err) = run(&["run", "-x", "-h", "-d30", "-o4", "-b1M", "sim:tyan/disk0"]);
        assert_eq!(code, 0, "{err}");
        let rows = parse_condensed(&out).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].rate_mbps > 57.0 && rows[0].rate_mbps <= 60.0);
    }

    #[test]
    fn human_output_by_default() {
        let (code, out, _) = run(&["run", "-d1", "-o1", "-b64K", "sim:tyan/disk0"]);
        assert_eq!(code, 0);
        assert!(out.contains("rate:") && out.contains("MB/s"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&["run", "-x"]).0, EXIT_USAGE);
        assert_eq!(run(&["run", "-bfoo", "sim:tyan/disk0"]).0, EXIT_USAGE);
        assert_eq!(run(&["run", "-o0", "sim:tyan/disk0"]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["sqlio", "-frandom", "sim:tyan/disk0"]).0, EXIT_USAGE);
        assert_eq!(run(&["sweep"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["run", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("-h"));
    }

    #[test]
    fn runtime_errors_exit_one() {
        assert_eq!(run(&["run", "-d1", "/nonexistent/file.dat"]).0, EXIT_RUNTIME);
        assert_eq!(run(&["run", "-d1", "sim:tyan/disk99"]).0, EXIT_RUNTIME);
    }

    #[test]
    fn sqlio_translation() {
        let (code, out, err) = run(&["sqlio", "-x", "-s30", "-kW", "-fsequential", "-o4", "-b1024", "-BN", "sim:tyan/disk0"]);
        assert_eq!(code, 0, "{err}");
        let row = &parse_condensed(&out).unwrap()[0];
        assert_eq!((row.mode, row.block_bytes, row.depth, row.duration_s), (Mode::Write, 1 << 20, 4, 30.0));
    }

    #[test]
    fn striped_run_over_sim_disks() {
        let (code, out, err) =
            run(&["run", "-x", "-h", "-d30", "-o8", "-b1M", "sim:tyan/disk0", "sim:tyan/disk1", "sim:tyan/disk2"]);
        assert_eq!(code, 0, "{err}");
        let row = &parse_condensed(&out).unwrap()[0];
        assert_eq!(row.n_disks, 3);
        assert!(row.rate_mbps > 170.0, "{}", row.rate_mbps);
        assert!(!row.config.contains(','));
    }
}
