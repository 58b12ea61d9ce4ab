//! Driver crate: config files, corpus/checkpoint/metrics formats, threaded
//! clip preparation, and the command implementations behind the `ascnet`
//! binary. All numerics live in `ascnet-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod metrics;
pub mod prep;
