//! Library half of the `qm` binary: configuration parsing and
//! validation, the pipelines each subcommand runs, and the artifact
//! envelopes they write. The binary in `main.rs` only maps flags onto a
//! [`config::RunConfig`] and exit codes onto the outcome, so every
//! behavior is exercisable from integration tests without spawning a
//! process.

pub mod artifacts;
pub mod config;
pub mod pipelines;
