//! Decentralized service placement in fog networks.
//!
//! Each fog node plans placements for the requests it receives, and the
//! nodes then agree on one plan each through a tree-based iterative
//! selection that balances utilization across the network.

pub mod baselines;
pub mod config;
pub mod costmodel;
pub mod engine;
pub mod epos;
pub mod error;
pub mod output;
pub mod plangen;
pub mod seed;
pub mod topology;
pub mod workload;

pub use config::{RunConfig, Strategy};
pub use engine::{compare_strategies, run_experiment, MetricsReport};
pub use error::{Error, Result};
