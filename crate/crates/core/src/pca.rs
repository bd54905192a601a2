//! Principal component projection, the baseline against random projections.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::LabeledDataset;
use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm, DenseMatrix};

/// Fitted principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `m × d`, one unit-norm principal direction per row, by descending variance.
    pub components: DenseMatrix,
    /// Sample-covariance eigenvalues for each component.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Fits the top `m` directions of the columns of `x` (`d × N`).
    ///
    /// Uses the `d × d` covariance when `d ≤ N` and the `N × N` Gram matrix of
    /// the centered data otherwise. Directions with numerically zero variance
    /// are completed to an orthonormal set.
    pub fn fit(x: &DenseMatrix, m: usize) -> Result<PcaModel> {
        let (d, n) = x.shape();
        if m == 0 || m > d.min(n) {
            return Err(Error::dim(format!("PCA dimension {m} outside 1..={}", d.min(n))));
        }
        let mut mean = vec![0.0; d];
        for c in x.columns() {
            axpy(1.0 / n as f64, c, &mut mean);
        }
        let centered = DenseMatrix::from_fn(d, n, |r, c| x.get(r, c) - mean[r]);
        let denom = (n.max(2) - 1) as f64;

        let (variances, mut dirs): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
            let cov = centered.transpose().gram();
            let (vals, vecs) = symmetric_eigen(&cov);
            (
                vals.iter().take(m).map(|v| v.max(0.0) / denom).collect(),
                (0..m).map(|i| vecs.col(i).to_vec()).collect(),
            )
        } else {
            let g = centered.gram();
            let (vals, vecs) = symmetric_eigen(&g);
            let floor = 1e-12 * vals.first().copied().unwrap_or(0.0).max(0.0);
            let mut dirs = Vec::with_capacity(m);
            for (i, &val) in vals.iter().enumerate().take(m) {
                if val > floor && val > 0.0 {
                    let mut u = centered.matvec(vecs.col(i))?;
                    let s = 1.0 / libm::sqrt(val);
                    u.iter_mut().for_each(|v| *v *= s);
                    dirs.push(u);
                } else {
                    dirs.push(Vec::new());
                }
            }
            (vals.iter().take(m).map(|v| v.max(0.0) / denom).collect(), dirs)
        };
        complete_orthonormal(&mut dirs, d);

        let components = DenseMatrix::from_fn(m, d, |r, c| dirs[r][c]);
        Ok(PcaModel {
            mean,
            components,
            explained_variance: variances,
        })
    }

    /// Projects mean-centered columns of `x` onto the components.
    pub fn transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.mean.len() {
            return Err(Error::shape(format!("{} rows", self.mean.len()), format!("{}", x.rows())));
        }
        let centered = DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| x.get(r, c) - self.mean[r]);
        self.components.matmul(&centered)
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: &DenseMatrix) -> Result<DenseMatrix> {
        let mut back = self.components.transpose().matmul(projected)?;
        for c in 0..back.cols() {
            axpy(1.0, &self.mean, back.col_mut(c));
        }
        Ok(back)
    }
}

// Fills empty slots with unit vectors orthogonal to every other direction.
fn complete_orthonormal(dirs: &mut [Vec<f64>], d: usize) {
    let mut basis = 0;
    for i in 0..dirs.len() {
        if !dirs[i].is_empty() {
            continue;
        }
        while basis < d {
            let mut u = vec![0.0; d];
            u[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for other in dirs.iter().filter(|o| !o.is_empty()) {
                    let p = dot(other, &u);
                    axpy(-p, other, &mut u);
                }
            }
            let nu = norm(&u);
            if nu > 1e-6 {
                u.iter_mut().for_each(|v| *v /= nu);
                dirs[i] = u;
                break;
            }
        }
    }
}

/// Projects the dataset onto its top `m` principal directions.
pub fn pca_project(ds: &LabeledDataset, m: usize) -> Result<LabeledDataset> {
    let model = PcaModel::fit(ds.features(), m)?;
    ds.with_features(model.transform(ds.features())?)
}
