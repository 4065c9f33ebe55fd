//! Seeded verification suites with JSON reports and CSV curves.

pub mod config;
pub mod corpus;
pub mod report;
pub mod suites;

pub use config::{CorpusFamily, SuiteConfig, SuiteKind};
pub use report::{CheckRecord, Curve, Report, Status, SuiteOutput};
pub use suites::{run_fixed_start_demo, run_suite, run_torus_gap_scaling};
