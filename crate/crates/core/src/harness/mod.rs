//! Experiment configuration, study runner, CSV and SVG output.

pub mod config;
pub mod study;
pub mod svg;

pub use config::{Estimator, EstimatorChoice, ExperimentConfig};
pub use study::{read_csv, run_study, write_csv, StudyOptions, StudyReport, StudyRow, StudySummary};
pub use svg::emit_svg;
