//! Sequential-bandwidth storage benchmarking.
//!
//! The crate has two halves that share the same result types:
//!
//! * a measurement engine that keeps a fixed number of unbuffered, sequential
//!   requests in flight against a file (or a striped set of files) for a fixed
//!   duration, diskspd style;
//! * a simulator that models a machine as a tree of bandwidth caps
//!   (disk → controller → slot → bridge → system), allocates bandwidth to
//!   concurrent streams by max-min fair water-filling, and ships calibrated
//!   presets for four reference machines.
//!
//! Rates are decimal megabytes per second (10^6 bytes/s) throughout. Block
//! sizes use binary suffixes (`64K` = 65536).

pub mod cli;
pub mod engine;
pub mod filegen;
pub mod stripe;
pub mod sweep;
pub mod targets;
pub mod topomodel;
pub mod units;

pub use engine::{
    compute_rate, run_parallel, run_stream, AggregateResult, Buffering, CpuSample, Mode, RunSpec,
    StreamResult,
};
pub use stripe::{plan_volumes, StripeMap, VolumePlan};
pub use sweep::ResultRow;
pub use targets::{open_target, SimDiskModel, TargetHandle};
pub use topomodel::{preset, DiskPlan, Topology};
