//! File formats, the NDJSON protocol transport, reports and experiment
//! orchestration for the role-probing workbench. Models, metrics and
//! paradigms come from `rolebench-core`, re-exported here as [`core`].

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod formats;
pub mod report;
pub mod transport;

pub use rolebench_core as core;
