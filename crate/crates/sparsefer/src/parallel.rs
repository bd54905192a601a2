//! Rayon drivers for the embarrassingly parallel stages. Results are collected
//! in input order, so output never depends on the thread count.

use rayon::prelude::*;
use sparsefer_core::omp::{densify, SparseCode};
use sparsefer_core::rffd::{evaluate_candidate, finish_search, select_winners, validate_search, GaussianProjection, SearchOutcome};
use sparsefer_core::{omp_encode, DenseMatrix, Error, LabeledDataset, Result, RffdConfig};

/// Projection search with candidates scored in parallel.
pub fn search(ds: &LabeledDataset, cfg: &RffdConfig) -> Result<SearchOutcome> {
    validate_search(ds, cfg)?;
    let jobs: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&m| (0..cfg.candidates_per_dim).map(move |i| (m, i)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(m, i)| evaluate_candidate(ds, cfg, &GaussianProjection, m, i))
        .collect::<Result<Vec<_>>>()?;
    finish_search(ds, &GaussianProjection, select_winners(scores, &cfg.dims)?)
}

/// Column-parallel OMP; errors carry the failing column.
pub fn encode_codes(d: &DenseMatrix, y: &DenseMatrix, l: usize, tol: f64) -> Result<Vec<SparseCode>> {
    if y.rows() != d.rows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", d.rows()),
            actual: format!("{}", y.rows()),
        });
    }
    (0..y.cols())
        .into_par_iter()
        .map(|c| {
            omp_encode(d, y.col(c), l, tol).map_err(|e| Error::AtColumn {
                column: c,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn encode(d: &DenseMatrix, y: &DenseMatrix, l: usize, tol: f64) -> Result<DenseMatrix> {
    Ok(densify(&encode_codes(d, y, l, tol)?, d.cols()))
}
