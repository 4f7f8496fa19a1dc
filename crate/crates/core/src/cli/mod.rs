//! Experiment runner: configuration, presets, artifact pipeline and run
//! comparison.

mod compare;
mod config;
mod run;

pub use compare::{compare, DeviationReport, DeviationSeries};
pub use config::{
    Diagnostics, EngineKind, EvolutionSection, ExperimentConfig, LatticeSection, MeasurementSection, PathSpec, Preset,
    Resolved, RunSection,
};
pub use run::{derive_seed, dry_run, estimates_csv, run, DryRun, EstimateRow, Manifest, RunOutput, TIME_STEP_NOTE};

use serde_json::json;

use crate::error::QlmError;

/// Machine-readable error body for the command-line tool.
pub fn error_json(e: &QlmError) -> String {
    json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}
