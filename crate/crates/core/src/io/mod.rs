//! Configuration, dataset ingestion, artifact serialization and the
//! command implementations behind the CLI.
//!
//! A run is one JSON [`RunConfig`]. [`execute`] validates it and loads the
//! data before any computation, computes everything in memory, then writes
//! the artifacts atomically followed by a [`Manifest`] from which the run can
//! be replayed bit for bit.

mod artifacts;
mod commands;
mod config;
mod table;

pub use artifacts::{
    read_json, sha256_hex, to_json, write_atomic, ArtifactSet, BudgetReport, Manifest, ParticleRecord, SampleDoc, SmcTrace,
    MANIFEST_FILE, MANIFEST_VERSION,
};
pub use commands::{
    artifact_bytes, cmd_changepoint, cmd_compare, cmd_predict, cmd_sample, compare_methods, execute, fit_method, prepare,
    training_subset, DispersionEntry, DispersionReport, Fit, MethodRuns, PredictMetrics, Prepared, RunOutcome, SegmentReport,
    SegmentSummary,
};
pub use config::{
    Approximation, ChangepointConfig, Column, CompareConfig, DatasetConfig, ImportanceConfig, Method, ModelConfig, PointConfig,
    PredictConfig, QueryConfig, RunConfig, Task,
};
pub use table::{ingest_csv, read_table, Table};
