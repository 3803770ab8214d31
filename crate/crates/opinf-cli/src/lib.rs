//! Experiment harness and CLI plumbing for reduced quadratic-model
//! inference: configuration, artifact IO, and pipeline orchestration.

pub mod config;
pub mod harness;
pub mod io;
