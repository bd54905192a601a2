//! Sparse-representation classification pipeline, allocation-only core.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! stage of the pipeline:
//!
//! * [`rffd`]: seeded Gaussian random projections, feature-quality screening
//!   and the cross-validated search for the best projection matrix and target
//!   dimension, plus a PCA baseline in [`pca`].
//! * [`omp`]: Orthogonal Matching Pursuit against a fixed unit-norm dictionary.
//! * [`ksvd`]: K-SVD dictionary refinement.
//! * [`svm`]: one-vs-rest linear SVM, prediction and cross-validated grid search.
//! * [`dataset`]: labeled datasets, seeded splits and confusion matrices.
//!
//! File formats, image ingestion and the command-line driver live in the
//! `sparsefer` companion crate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
mod eigen;
pub mod error;
pub mod ksvd;
pub mod matrix;
pub mod omp;
pub mod pca;
pub mod rffd;
pub mod rng;
pub mod svm;
pub mod synth;

pub use dataset::{confusion_and_rates, split, ConfusionMatrix, LabeledDataset, RateSummary, SplitSpec};
pub use error::{Error, Result};
pub use ksvd::{init_dictionary, ksvd_refine, objective, Dictionary, KsvdConfig, UnusedAtomPolicy};
pub use matrix::DenseMatrix;
pub use omp::{batch_encode, omp_encode, reconstruction_errors, SparseCode};
pub use rffd::{generate_candidate, project, quality_check, search, ProjectionCandidate, RffdConfig};
pub use svm::{grid_search, predict, train, CvMode, LinearSvmModel};
