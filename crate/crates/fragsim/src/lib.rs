//! Verification harness for the fragmentation simulator: statistics,
//! configuration files, suite reports and the suites themselves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod stats;
pub mod suites;

pub use config::{parse_measure, ConfigError, ConfigFile};
pub use report::{Check, Rule, SuiteReport};
pub use suites::{run_suite, HarnessError, SuiteOptions, SUITES};
