//! Orthogonal Matching Pursuit over a fixed unit-norm dictionary.
//!
//! Each step adds the atom most correlated with the residual and re-solves the
//! least-squares fit on the support through a QR factorization that grows by
//! one column per step (two passes of Gram-Schmidt against the current basis).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm, DenseMatrix};

/// Allowed deviation of an atom norm from 1.
pub const ATOM_NORM_TOLERANCE: f64 = 1e-6;

// Orthogonal remainder below which a new atom counts as linearly dependent.
const DEPENDENT_ATOM: f64 = 1e-10;
// Correlations below this fraction of ‖y‖ leave nothing to explain.
const NEGLIGIBLE_CORRELATION: f64 = 1e-12;

/// At most `L` atom indices (strictly increasing) with their coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub dict_size: usize,
    /// ‖y − D·x‖₂ at termination.
    pub residual_norm: f64,
    /// Set when the loop stopped because the next atom lay in the span of the
    /// support; the code is the least-squares fit on the independent support.
    pub rank_deficient: bool,
}

impl SparseCode {
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dict_size];
        for (&j, &c) in self.support.iter().zip(&self.coeffs) {
            x[j] = c;
        }
        x
    }
}

/// Rejects dictionaries with atoms off the unit sphere.
pub fn check_dictionary(d: &DenseMatrix) -> Result<()> {
    for (j, atom) in d.columns().enumerate() {
        let n = norm(atom);
        if (n - 1.0).abs() > ATOM_NORM_TOLERANCE {
            return Err(Error::NotNormalized { atom: j, norm: n });
        }
    }
    Ok(())
}

fn check_sparsity(d: &DenseMatrix, l: usize) -> Result<()> {
    let max = d.rows().min(d.cols());
    if l == 0 || l > max {
        return Err(Error::arg(format!("sparsity {l} outside 1..={max}")));
    }
    Ok(())
}

fn check_tol(residual_tol: f64) -> Result<()> {
    if !(residual_tol >= 0.0) {
        return Err(Error::arg("residual tolerance must be >= 0"));
    }
    Ok(())
}

/// Sparse-codes `y` with at most `l` atoms of `d`, stopping early once
/// ‖r‖₂ ≤ `residual_tol`. Ties in |correlation| go to the lowest atom index.
pub fn omp_encode(d: &DenseMatrix, y: &[f64], l: usize, residual_tol: f64) -> Result<SparseCode> {
    check_dictionary(d)?;
    check_sparsity(d, l)?;
    check_tol(residual_tol)?;
    if y.len() != d.rows() {
        return Err(Error::shape(format!("signal of length {}", d.rows()), format!("{}", y.len())));
    }
    Ok(encode_checked(d, y, l, residual_tol, None))
}

/// [`omp_encode`] that also returns the residual after every step.
pub fn omp_encode_traced(
    d: &DenseMatrix,
    y: &[f64],
    l: usize,
    residual_tol: f64,
) -> Result<(SparseCode, Vec<Vec<f64>>)> {
    check_dictionary(d)?;
    check_sparsity(d, l)?;
    check_tol(residual_tol)?;
    if y.len() != d.rows() {
        return Err(Error::shape(format!("signal of length {}", d.rows()), format!("{}", y.len())));
    }
    let mut trace = Vec::new();
    let code = encode_checked(d, y, l, residual_tol, Some(&mut trace));
    Ok((code, trace))
}

fn encode_checked(
    d: &DenseMatrix,
    y: &[f64],
    l: usize,
    residual_tol: f64,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> SparseCode {
    let k = d.cols();
    let y_norm = norm(y);
    let mut residual = y.to_vec();
    let mut selected: Vec<usize> = Vec::with_capacity(l);
    let mut in_support = vec![false; k];
    // Orthonormal basis of the support span, R factor by column, and Qᵀy.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(l);
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(l);
    let mut qty: Vec<f64> = Vec::with_capacity(l);
    let mut rank_deficient = false;

    while selected.len() < l && norm(&residual) > residual_tol {
        let mut best = None;
        let mut best_corr = NEGLIGIBLE_CORRELATION * y_norm;
        for (j, atom) in d.columns().enumerate() {
            if in_support[j] {
                continue;
            }
            let c = dot(atom, &residual).abs();
            if c > best_corr {
                best_corr = c;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };

        let atom = d.col(j);
        let mut v = atom.to_vec();
        let mut coeffs = vec![0.0; q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let p = dot(qi, &v);
                coeffs[i] += p;
                axpy(-p, qi, &mut v);
            }
        }
        let rkk = norm(&v);
        if rkk <= DEPENDENT_ATOM {
            rank_deficient = true;
            break;
        }
        v.iter_mut().for_each(|x| *x /= rkk);
        coeffs[q.len()] = rkk;
        let z = dot(&v, y);
        axpy(-z, &v, &mut residual);
        q.push(v);
        r.push(coeffs);
        qty.push(z);
        selected.push(j);
        in_support[j] = true;
        if let Some(t) = trace.as_deref_mut() {
            t.push(residual.clone());
        }
    }

    // Back-substitution R·x = Qᵀy.
    let s = selected.len();
    let mut x = vec![0.0; s];
    for i in (0..s).rev() {
        let mut acc = qty[i];
        for jj in i + 1..s {
            acc -= r[jj][i] * x[jj];
        }
        x[i] = acc / r[i][i];
    }
    let mut pairs: Vec<(usize, f64)> = selected.into_iter().zip(x).collect();
    pairs.sort_by_key(|p| p.0);
    SparseCode {
        support: pairs.iter().map(|p| p.0).collect(),
        coeffs: pairs.iter().map(|p| p.1).collect(),
        dict_size: k,
        residual_norm: norm(&residual),
        rank_deficient,
    }
}

/// Codes every column of `y`; errors name the failing column.
pub fn batch_encode_codes(d: &DenseMatrix, y: &DenseMatrix, l: usize, residual_tol: f64) -> Result<Vec<SparseCode>> {
    check_dictionary(d)?;
    check_sparsity(d, l)?;
    check_tol(residual_tol)?;
    if y.rows() != d.rows() {
        return Err(Error::shape(format!("{} rows", d.rows()), format!("{}", y.rows())));
    }
    y.columns()
        .enumerate()
        .map(|(i, col)| {
            let code = encode_checked(d, col, l, residual_tol, None);
            if code.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::AtColumn {
                    column: i,
                    source: alloc::boxed::Box::new(Error::Numerical("non-finite coefficient".into())),
                });
            }
            Ok(code)
        })
        .collect()
}

/// `K × N` dense matrix whose columns are the given codes.
pub fn densify(codes: &[SparseCode], dict_size: usize) -> DenseMatrix {
    let mut x = DenseMatrix::zeros(dict_size, codes.len());
    for (i, code) in codes.iter().enumerate() {
        let col = x.col_mut(i);
        for (&j, &c) in code.support.iter().zip(&code.coeffs) {
            col[j] = c;
        }
    }
    x
}

/// Column-wise OMP, densified to `K × N`.
pub fn batch_encode(d: &DenseMatrix, y: &DenseMatrix, l: usize, residual_tol: f64) -> Result<DenseMatrix> {
    Ok(densify(&batch_encode_codes(d, y, l, residual_tol)?, d.cols()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionErrors {
    /// ‖yᵢ − D·xᵢ‖₂ per sample.
    pub per_sample: Vec<f64>,
    /// ‖Y − D·X‖_F.
    pub total: f64,
}

pub fn reconstruction_errors(d: &DenseMatrix, y: &DenseMatrix, x: &DenseMatrix) -> Result<ReconstructionErrors> {
    if d.cols() != x.rows() || y.rows() != d.rows() || y.cols() != x.cols() {
        return Err(Error::shape(
            format!("D {}x{}, Y {}x{}, X {}x{}", d.rows(), d.cols(), d.rows(), x.cols(), d.cols(), x.cols()),
            format!("D {}x{}, Y {}x{}, X {}x{}", d.rows(), d.cols(), y.rows(), y.cols(), x.rows(), x.cols()),
        ));
    }
    let residual = y.sub(&d.matmul(x)?)?;
    let per_sample: Vec<f64> = residual.col_norms();
    Ok(ReconstructionErrors {
        total: residual.frobenius_norm(),
        per_sample,
    })
}
