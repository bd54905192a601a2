//! Random projections and the random face feature descriptor search.
//!
//! A candidate is an `m × d` Gaussian matrix whose rows (the projection
//! directions) are scaled to unit length. The search generates several
//! candidates per target dimension, drops those whose projected features are
//! numerically dead, scores the rest by cross-validated linear-SVM accuracy on
//! the projected training data and keeps the best candidate overall.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_seed, rng_from_seed, tag};
use crate::svm::{cross_validate, CvMode};

/// A random projection matrix with its screening and scoring outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCandidate {
    /// `m × d`, unit-norm rows.
    pub r: DenseMatrix,
    pub m: usize,
    pub index: usize,
    pub seed: u64,
    pub quality_ok: bool,
    /// Present only for candidates that passed the quality check.
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RffdConfig {
    /// Candidate target dimensions.
    pub dims: Vec<usize>,
    pub candidates_per_dim: usize,
    /// `None` selects [`default_quality_threshold`].
    pub quality_threshold: Option<f64>,
    pub cv: CvMode,
    pub svm_c: f64,
    pub master_seed: u64,
}

impl RffdConfig {
    pub fn new(dims: Vec<usize>, candidates_per_dim: usize, master_seed: u64) -> Self {
        RffdConfig {
            dims,
            candidates_per_dim,
            quality_threshold: None,
            cv: CvMode::LeaveOneOut,
            svm_c: 1.0,
            master_seed,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::arg("no candidate dimensions"));
        }
        if let Some(&m) = self.dims.iter().find(|&&m| m == 0 || m > d) {
            return Err(Error::dim(format!("target dimension {m} outside 1..={d}")));
        }
        if self.candidates_per_dim == 0 {
            return Err(Error::arg("candidates_per_dim must be at least 1"));
        }
        if matches!(self.quality_threshold, Some(t) if !(t >= 0.0)) {
            return Err(Error::arg("quality threshold must be >= 0"));
        }
        Ok(())
    }
}

/// Source of projection matrices; the search is generic over it so tests can
/// substitute fixed matrices.
pub trait ProjectionSource {
    fn generate(&self, d: usize, m: usize, seed: u64) -> Result<DenseMatrix>;
}

/// i.i.d. N(0,1) entries with every row rescaled to unit l2 norm.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianProjection;

impl ProjectionSource for GaussianProjection {
    fn generate(&self, d: usize, m: usize, seed: u64) -> Result<DenseMatrix> {
        if m == 0 || m > d {
            return Err(Error::dim(format!("target dimension {m} outside 1..={d}")));
        }
        let mut rng = rng_from_seed(seed);
        // Row-major draw so a row's entries are consecutive in the stream.
        let mut rows: Vec<f64> = (0..m * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for row in rows.chunks_exact_mut(d) {
            let n = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            row.iter_mut().for_each(|v| *v /= n);
        }
        Ok(DenseMatrix::from_fn(m, d, |r, c| rows[r * d + c]))
    }
}

/// Seeded Gaussian candidate; unscored.
pub fn generate_candidate(d: usize, m: usize, seed: u64) -> Result<ProjectionCandidate> {
    Ok(ProjectionCandidate {
        r: GaussianProjection.generate(d, m, seed)?,
        m,
        index: 0,
        seed,
        quality_ok: false,
        cv_accuracy: None,
    })
}

/// `A = R · X`.
pub fn project(r: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    r.matmul(x)
}

/// True iff every projected feature (row of `a`) has l2 norm above `threshold`.
pub fn quality_check(a: &DenseMatrix, threshold: f64) -> bool {
    a.row_norms().into_iter().all(|n| n > threshold)
}

/// `1e-8 · ‖X‖_F / √(m·N)`: flags only features that are numerically dead
/// relative to the data scale.
pub fn default_quality_threshold(x: &DenseMatrix, m: usize) -> f64 {
    1e-8 * x.frobenius_norm() / libm::sqrt((m * x.cols()) as f64)
}

/// Seed of candidate `index` at dimension `m`.
pub fn candidate_seed(master_seed: u64, m: usize, index: usize) -> u64 {
    derive_seed(master_seed, &[tag::RFFD, m as u64, index as u64])
}

/// One row of the search report.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub m: usize,
    pub index: usize,
    pub seed: u64,
    pub quality_ok: bool,
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    /// In `(dims order, index)` order.
    pub scores: Vec<CandidateScore>,
    /// Per dimension, the position in `scores` of its winner, `None` when
    /// every candidate failed the quality check.
    pub winners: Vec<(usize, Option<usize>)>,
    /// Position in `scores` of the global winner.
    pub global_winner: usize,
}

impl SearchReport {
    pub fn winner(&self) -> &CandidateScore {
        &self.scores[self.global_winner]
    }

    pub fn is_winner_for_m(&self, pos: usize) -> bool {
        self.winners.iter().any(|&(_, w)| w == Some(pos))
    }
}

/// Generates, screens and scores one candidate.
pub fn evaluate_candidate<S: ProjectionSource + ?Sized>(
    ds: &LabeledDataset,
    cfg: &RffdConfig,
    source: &S,
    m: usize,
    index: usize,
) -> Result<CandidateScore> {
    let seed = candidate_seed(cfg.master_seed, m, index);
    let r = source.generate(ds.dim(), m, seed)?;
    let a = project(&r, ds.features())?;
    let threshold = cfg
        .quality_threshold
        .unwrap_or_else(|| default_quality_threshold(ds.features(), m));
    let quality_ok = quality_check(&a, threshold);
    let cv_accuracy = if quality_ok {
        Some(cross_validate(&a, ds.labels(), ds.class_names(), cfg.svm_c, cfg.cv)?.mean_accuracy)
    } else {
        None
    };
    Ok(CandidateScore {
        m,
        index,
        seed,
        quality_ok,
        cv_accuracy,
    })
}

/// Picks per-dimension and global winners from scores laid out in
/// `(dims order, index)` order. Ties go to the lower index within a
/// dimension and then to the smaller dimension.
pub fn select_winners(scores: Vec<CandidateScore>, dims: &[usize]) -> Result<SearchReport> {
    let mut winners = Vec::with_capacity(dims.len());
    for &m in dims {
        let mut best: Option<usize> = None;
        for (pos, s) in scores.iter().enumerate().filter(|(_, s)| s.m == m) {
            let Some(acc) = s.cv_accuracy else { continue };
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &scores[b];
                    let cur_acc = cur.cv_accuracy.unwrap_or(f64::NEG_INFINITY);
                    acc > cur_acc || (acc == cur_acc && s.index < cur.index)
                }
            };
            if better {
                best = Some(pos);
            }
        }
        winners.push((m, best));
    }
    let mut global: Option<usize> = None;
    for &(_, w) in &winners {
        let Some(pos) = w else { continue };
        let s = &scores[pos];
        let better = match global {
            None => true,
            Some(g) => {
                let cur = &scores[g];
                let (a, b) = (s.cv_accuracy.unwrap_or(0.0), cur.cv_accuracy.unwrap_or(0.0));
                a > b || (a == b && (s.m < cur.m || (s.m == cur.m && s.index < cur.index)))
            }
        };
        if better {
            global = Some(pos);
        }
    }
    Ok(SearchReport {
        scores,
        winners,
        global_winner: global.ok_or(Error::NoQualifiedCandidate)?,
    })
}

/// Result of [`search`].
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: ProjectionCandidate,
    pub projected: LabeledDataset,
    pub report: SearchReport,
}

fn check_search_input(ds: &LabeledDataset, cfg: &RffdConfig) -> Result<()> {
    cfg.validate(ds.dim())?;
    if ds.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::arg("projection search needs at least two classes"));
    }
    Ok(())
}

/// Rebuilds the winning candidate and its projection of `ds`.
pub fn finish_search<S: ProjectionSource + ?Sized>(
    ds: &LabeledDataset,
    source: &S,
    report: SearchReport,
) -> Result<SearchOutcome> {
    let w = report.winner().clone();
    let r = source.generate(ds.dim(), w.m, w.seed)?;
    let projected = ds.with_features(project(&r, ds.features())?)?;
    Ok(SearchOutcome {
        best: ProjectionCandidate {
            r,
            m: w.m,
            index: w.index,
            seed: w.seed,
            quality_ok: w.quality_ok,
            cv_accuracy: w.cv_accuracy,
        },
        projected,
        report,
    })
}

/// Sequential search with an explicit projection source.
pub fn search_with<S: ProjectionSource + ?Sized>(
    ds: &LabeledDataset,
    cfg: &RffdConfig,
    source: &S,
) -> Result<SearchOutcome> {
    check_search_input(ds, cfg)?;
    let mut scores = Vec::with_capacity(cfg.dims.len() * cfg.candidates_per_dim);
    for &m in &cfg.dims {
        for index in 0..cfg.candidates_per_dim {
            scores.push(evaluate_candidate(ds, cfg, source, m, index)?);
        }
    }
    finish_search(ds, source, select_winners(scores, &cfg.dims)?)
}

/// Search over seeded Gaussian candidates.
pub fn search(ds: &LabeledDataset, cfg: &RffdConfig) -> Result<SearchOutcome> {
    search_with(ds, cfg, &GaussianProjection)
}

/// Validation shared with parallel drivers outside this crate.
pub fn validate_search(ds: &LabeledDataset, cfg: &RffdConfig) -> Result<()> {
    check_search_input(ds, cfg)
}
