//! File formats, image ingestion and the staged command-line pipeline built
//! on `sparsefer-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod error;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod reports;
pub mod smx;
pub mod synth;

pub use sparsefer_core as core;

pub use config::{PipelineConfig, RawConfig};
pub use error::{Error, Result};
pub use manifest::{load_manifest, load_manifests};
pub use pipeline::{emit_plots_data, run_pipeline, run_stage};
pub use smx::{load_matrix, save_matrix};
