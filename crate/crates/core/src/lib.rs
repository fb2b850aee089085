//! Compressed push-pull gradient tracking over directed graphs.
//!
//! The crate simulates `n` agents that jointly minimize
//! `f(x) = (1/n) Σ f_i(x)` while exchanging compressed messages over a pull
//! graph (row-stochastic `R`) and a push graph (column-stochastic `C`):
//!
//! - [`topology`]: graphs and their mixing matrices
//! - [`compression`]: unbiased compressors and bit accounting
//! - [`objectives`]: local objectives and a centralized reference solver
//! - [`algorithms`]: the uncompressed baseline and its compressed variants
//! - [`metrics`]: per-iteration measurements
//! - [`ingestion`]: datasets and sharding
//! - [`harness`]: configs and runs, plus the `cppsim` CLI

pub mod algorithms;
pub mod compression;
pub mod error;
pub mod harness;
pub mod ingestion;
pub mod metrics;
pub mod objectives;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
