//! Configuration, experiment execution and output emission for the `isac` CLI.

pub mod config;
pub mod experiment;
pub mod output;
