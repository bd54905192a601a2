//! CSV reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sparsefer_core::ksvd::KsvdIteration;
use sparsefer_core::omp::SparseCode;
use sparsefer_core::rffd::SearchReport;
use sparsefer_core::svm::GridReport;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub m: usize,
    pub candidate_index: usize,
    pub seed: u64,
    pub quality_ok: bool,
    pub cv_accuracy: Option<f64>,
    pub winner_for_m: bool,
    pub global_winner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: usize,
    pub candidate_index: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub sample_index: usize,
    pub absolute_error: f64,
}

#[derive(Debug, Serialize)]
struct LogRow {
    iteration: usize,
    objective: f64,
    atoms_replaced: usize,
}

#[derive(Debug, Serialize)]
struct CodeRow<'a> {
    set: &'a str,
    sample_index: usize,
    support_size: usize,
    residual_norm: f64,
    rank_deficient: bool,
}

#[derive(Debug, Serialize)]
struct GridRow {
    #[serde(rename = "C")]
    c: f64,
    mean_accuracy: f64,
    std_accuracy: f64,
}

#[derive(Debug, Serialize)]
pub struct PcaRow {
    pub m: usize,
    pub cv_accuracy: f64,
}

#[derive(Debug, Serialize)]
pub struct PredictionRow<'a> {
    pub sample_index: usize,
    pub true_label: &'a str,
    pub predicted_label: &'a str,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let err = |e: csv::Error| Error::format(path, e);
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
        _ => Error::format(path, e),
    })?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| Error::format(path, e))
}

pub fn search_rows(report: &SearchReport) -> Vec<ReportRow> {
    report
        .scores
        .iter()
        .enumerate()
        .map(|(pos, s)| ReportRow {
            m: s.m,
            candidate_index: s.index,
            seed: s.seed,
            quality_ok: s.quality_ok,
            cv_accuracy: s.cv_accuracy,
            winner_for_m: report.is_winner_for_m(pos),
            global_winner: pos == report.global_winner,
        })
        .collect()
}

pub fn write_search_report(path: &Path, report: &SearchReport) -> Result<()> {
    write_rows(path, search_rows(report))
}

/// Accuracy per scored candidate; quality failures are omitted.
pub fn curve_rows(rows: &[ReportRow]) -> Vec<CurveRow> {
    rows.iter()
        .filter_map(|r| {
            Some(CurveRow {
                m: r.m,
                candidate_index: r.candidate_index,
                accuracy: r.cv_accuracy.filter(|_| r.quality_ok)?,
            })
        })
        .collect()
}

pub fn write_training_log(path: &Path, log: &[KsvdIteration]) -> Result<()> {
    write_rows(
        path,
        log.iter().map(|it| LogRow {
            iteration: it.iteration,
            objective: it.objective,
            atoms_replaced: it.atoms_replaced,
        }),
    )
}

pub fn write_codes_stats(path: &Path, sets: &[(&str, &[SparseCode])]) -> Result<()> {
    write_rows(
        path,
        sets.iter().flat_map(|(set, codes)| {
            codes.iter().enumerate().map(move |(i, c)| CodeRow {
                set,
                sample_index: i,
                support_size: c.nnz(),
                residual_norm: c.residual_norm,
                rank_deficient: c.rank_deficient,
            })
        }),
    )
}

pub fn write_grid_report(path: &Path, grid: &GridReport) -> Result<()> {
    write_rows(
        path,
        grid.entries.iter().map(|e| GridRow {
            c: e.c,
            mean_accuracy: e.mean_accuracy,
            std_accuracy: e.std_accuracy,
        }),
    )
}
