//! Hosted companion to `cns-decay-core`: fast transforms, run configuration,
//! artifact formats and the experiment drivers behind the `cns-decay` binary.

pub mod artifacts;
pub mod backend;
pub mod checkpoint;
pub mod config;
pub mod run;
