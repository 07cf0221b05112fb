//! Scenario configuration, canned demos, file output, and run orchestration
//! for the `acons` command-line tool. The numerics live in `acons-core`;
//! this crate owns everything that touches the filesystem or a config file.

pub mod config;
pub mod demos;
pub mod output;
pub mod randgen;
pub mod run;
