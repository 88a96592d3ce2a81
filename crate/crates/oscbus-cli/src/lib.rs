//! Library surface of the experiment runner, exposed for integration tests:
//! configuration parsing/merging and the execution pipelines.

pub mod config;
pub mod runner;
