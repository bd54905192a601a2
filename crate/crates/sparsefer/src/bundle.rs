//! Output-directory layout and the JSON metadata shared between stages.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sparsefer_core::{DenseMatrix, LabeledDataset, LinearSvmModel};

use crate::config::Seeds;
use crate::error::{Error, Result};
use crate::smx;

pub const SCHEMA: u32 = 1;

pub const TRAIN_FEATURES: &str = "train_features.smx";
pub const TEST_FEATURES: &str = "test_features.smx";
pub const SPLIT: &str = "split.json";
pub const PROJECTION: &str = "projection.smx";
pub const TRAIN_PROJECTED: &str = "train_projected.smx";
pub const TEST_PROJECTED: &str = "test_projected.smx";
pub const DICTIONARY: &str = "dictionary.smx";
pub const TRAIN_CODES: &str = "train_codes.smx";
pub const TEST_CODES: &str = "test_codes.smx";
pub const SVM_WEIGHTS: &str = "svm_weights.smx";
pub const SVM_BIAS: &str = "svm_bias.smx";
pub const META: &str = "meta.json";
pub const RESULTS: &str = "results.json";
pub const TIMINGS: &str = "timings.json";
pub const INCOMPLETE: &str = "INCOMPLETE";

pub const REPORT: &str = "report.csv";
pub const PCA_BASELINE: &str = "pca_baseline.csv";
pub const TRAINING_LOG: &str = "training_log.csv";
pub const CODES_STATS: &str = "codes_stats.csv";
pub const GRID_REPORT: &str = "grid_report.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const RECONSTRUCTION_ERROR: &str = "reconstruction_error.csv";
pub const RFFD_CURVES: &str = "rffd_curves.csv";

/// Model metadata, filled in stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub schema: u32,
    pub class_names: Vec<String>,
    pub feature_dim: usize,
    pub seeds: Seeds,
    pub m: Option<usize>,
    pub rffd_candidate: Option<usize>,
    pub rffd_cv_accuracy: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
}

/// Labels and identities of the two partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitLabels {
    pub class_names: Vec<String>,
    pub train_labels: Vec<usize>,
    pub test_labels: Vec<usize>,
    pub train_identities: Option<Vec<String>>,
    pub test_identities: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub schema: u32,
    pub class_names: Vec<String>,
    /// `null` for classes without test samples.
    pub per_class_rate: Vec<Option<f64>>,
    pub average_rate: f64,
    /// `[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub m: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seeds: Seeds,
    /// Wall-clock stage times; only filled when `record_timings` is set.
    pub stage_timings_ms: Option<BTreeMap<String, u64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_existing(path, |p| fs::read_to_string(p))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

fn read_existing<T>(path: &Path, read: impl Fn(&Path) -> std::io::Result<T>) -> Result<T> {
    read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
        _ => Error::io(path, e),
    })
}

pub fn save(dir: &Path, name: &str, m: &DenseMatrix) -> Result<()> {
    Ok(smx::save_matrix(m, dir.join(name))?)
}

pub fn load(dir: &Path, name: &str) -> Result<DenseMatrix> {
    let path = dir.join(name);
    let bytes = read_existing(&path, |p| fs::read(p))?;
    smx::decode(&bytes).map_err(|e| Error::format(&path, e))
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    read_json(&dir.join(META))
}

pub fn write_meta(dir: &Path, meta: &Meta) -> Result<()> {
    write_json(&dir.join(META), meta)
}

/// Fails with [`Error::Missing`] naming the stage output that is absent.
pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Missing(format!("{what} in {META}")))
}

/// Rebuilds one partition from its features and the split labels.
pub fn load_partition(dir: &Path, features: &str, train: bool) -> Result<LabeledDataset> {
    let split: SplitLabels = read_json(&dir.join(SPLIT))?;
    let x = load(dir, features)?;
    let (labels, ids) = if train {
        (split.train_labels, split.train_identities)
    } else {
        (split.test_labels, split.test_identities)
    };
    Ok(LabeledDataset::new(x, labels, ids, split.class_names)?)
}

pub fn load_model(dir: &Path) -> Result<LinearSvmModel> {
    let meta = read_meta(dir)?;
    let weights = load(dir, SVM_WEIGHTS)?;
    let bias = load(dir, SVM_BIAS)?;
    if bias.cols() != 1 || bias.rows() != weights.rows() || weights.rows() != meta.class_names.len() {
        return Err(Error::format(
            &dir.join(SVM_BIAS),
            format!("{} classes but weights {:?} and bias {:?}", meta.class_names.len(), weights.shape(), bias.shape()),
        ));
    }
    Ok(LinearSvmModel {
        weights,
        bias: bias.into_vec(),
        class_names: meta.class_names,
        c: require(meta.c, "C")?,
    })
}
