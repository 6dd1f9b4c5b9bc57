//! Verification suites, experiment configuration and reports.

pub mod config;
pub mod descriptor;
pub mod report;
pub mod suites;

pub use config::{ExperimentConfig, Suite};
pub use descriptor::parse_field;
pub use report::{CheckRecord, Constants, CsvTable, ReportMeta, VerificationReport};
pub use suites::{run_choose_r, run_estimate_b, run_suite, verify_oracles, verify_thm11, verify_thm12, verify_thm13};
