//! Command-line harness: configuration, seeded replica ensembles, and the
//! tables and manifests each experiment leaves behind.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod seed;
