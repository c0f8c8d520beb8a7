//! File formats, experiment orchestration, and the `pod` command line on
//! top of [`pod_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod goals;
pub mod hashing;
pub mod pipeline;
pub mod report;
pub mod traces;
pub mod vectors;

pub use error::{PodError, Result};
