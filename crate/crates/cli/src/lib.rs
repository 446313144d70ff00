//! Dataset ingestion, experiment sweeps and report emission for the
//! `propfair` command-line tool.

pub mod data;
pub mod experiment;
pub mod report;

pub use data::{ingest_csv, load_instance, parse_matrix, write_matrix, ScaleMode};
pub use experiment::{run_experiment, Algorithm, ExperimentConfig, ExperimentRecord, RunParams};
pub use report::{emit_report, ReportFormat};
