//! K-SVD dictionary refinement.
//!
//! Every iteration sparse-codes the training signals with OMP and then sweeps
//! the atoms in ascending order. For atom `j` the sweep takes the residual
//! restricted to the signals that use `j` with `j`'s own contribution added
//! back, and replaces the atom and its coefficient row by the leading singular
//! pair of that matrix. Power iteration from the current atom gives the pair;
//! its Rayleigh quotient never decreases, so a sweep never raises the
//! objective `‖Y − DX‖²_F`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm, DenseMatrix};
use crate::omp::batch_encode;
use crate::rng::{rng_from_seed, SeededRng};

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnusedAtomPolicy {
    /// Replace by the worst-reconstructed training signal, normalized.
    ReplaceWithWorstSignal,
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsvdConfig {
    pub max_iters: usize,
    /// Stop when the relative decrease of the post-sweep objective falls below this.
    pub rel_tol: f64,
    pub unused_atom_policy: UnusedAtomPolicy,
    /// Only consulted when an unused atom has no signal left to take over.
    pub seed: u64,
}

impl Default for KsvdConfig {
    fn default() -> Self {
        KsvdConfig {
            max_iters: 50,
            rel_tol: 1e-4,
            unused_atom_policy: UnusedAtomPolicy::ReplaceWithWorstSignal,
            seed: 0,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsvdIteration {
    pub iteration: usize,
    /// Objective right after sparse coding.
    pub objective_before_sweep: f64,
    /// Objective after the atom sweep.
    pub objective: f64,
    pub atoms_replaced: usize,
}

/// Unit-norm atoms with the sparsity level they were trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    /// `n × K`.
    pub atoms: DenseMatrix,
    /// `None` until refined.
    pub sparsity: Option<usize>,
    pub class_names: Option<Vec<String>>,
    pub training_log: Vec<KsvdIteration>,
}

impl Dictionary {
    /// Wraps existing atoms after checking they are unit norm.
    pub fn from_atoms(atoms: DenseMatrix, sparsity: Option<usize>) -> Result<Dictionary> {
        if atoms.rows() == 0 || atoms.cols() == 0 {
            return Err(Error::dim("dictionary needs n >= 1 and K >= 1"));
        }
        crate::omp::check_dictionary(&atoms)?;
        Ok(Dictionary {
            atoms,
            sparsity,
            class_names: None,
            training_log: Vec::new(),
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.cols()
    }

    pub fn signal_dim(&self) -> usize {
        self.atoms.rows()
    }
}

/// Dictionary whose atoms are the normalized training columns (`K = N`).
pub fn init_dictionary(train_projected: &DenseMatrix) -> Result<Dictionary> {
    if train_projected.rows() == 0 || train_projected.cols() == 0 {
        return Err(Error::dim("empty training matrix"));
    }
    let mut atoms = train_projected.clone();
    for j in 0..atoms.cols() {
        let n = norm(atoms.col(j));
        if n == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        atoms.col_mut(j).iter_mut().for_each(|v| *v /= n);
    }
    Ok(Dictionary {
        atoms,
        sparsity: None,
        class_names: None,
        training_log: Vec::new(),
    })
}

/// `‖Y − D·X‖²_F`.
pub fn objective(d: &DenseMatrix, y: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    if d.cols() != x.rows() || d.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::shape(
            format!("D n×K, Y n×N, X K×N with n={}, K={}", d.rows(), d.cols()),
            format!("Y {}x{}, X {}x{}", y.rows(), y.cols(), x.rows(), x.cols()),
        ));
    }
    Ok(y.sub(&d.matmul(x)?)?.frobenius_norm_sq())
}

/// One pass over all atoms at fixed supports, updating `d` and the nonzero
/// entries of `x` in place. Returns the number of replaced unused atoms.
pub fn update_atoms(
    d: &mut DenseMatrix,
    y: &DenseMatrix,
    x: &mut DenseMatrix,
    policy: UnusedAtomPolicy,
    rng: &mut SeededRng,
) -> Result<usize> {
    objective(d, y, x)?;
    let (n, k) = d.shape();
    let mut residual = y.sub(&d.matmul(x)?)?;
    let mut taken = vec![false; y.cols()];
    let mut replaced = 0;

    for j in 0..k {
        let users: Vec<usize> = (0..x.cols()).filter(|&i| x.get(j, i) != 0.0).collect();
        if users.is_empty() {
            if policy == UnusedAtomPolicy::ReplaceWithWorstSignal {
                replace_unused(d, j, &residual, y, &mut taken, rng);
                replaced += 1;
            }
            continue;
        }

        // E_j restricted to the users of atom j.
        let mut e = DenseMatrix::zeros(n, users.len());
        for (c, &i) in users.iter().enumerate() {
            let col = e.col_mut(c);
            col.copy_from_slice(residual.col(i));
            axpy(x.get(j, i), d.col(j), col);
        }
        let old = d.col(j).to_vec();
        let (atom, coeffs) = leading_pair(&e, &old);

        d.col_mut(j).copy_from_slice(&atom);
        for (c, &i) in users.iter().enumerate() {
            x.set(j, i, coeffs[c]);
            let r = residual.col_mut(i);
            r.copy_from_slice(e.col(c));
            axpy(-coeffs[c], &atom, r);
        }
    }
    d.check_finite()?;
    x.check_finite()?;
    Ok(replaced)
}

/// Leading left singular vector of `e` by power iteration on `e·eᵀ` from
/// `start`, with coefficients `eᵀu`; the sign keeps `⟨u, start⟩ ≥ 0`.
fn leading_pair(e: &DenseMatrix, start: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut u = start.to_vec();
    for _ in 0..POWER_MAX_ITERS {
        let v = e.tr_matvec(&u).expect("conformable");
        let w = e.matvec(&v).expect("conformable");
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
        let delta = libm::sqrt(next.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        u = next;
        if delta < POWER_TOLERANCE {
            break;
        }
    }
    if dot(&u, start) < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let coeffs = e.tr_matvec(&u).expect("conformable");
    (u, coeffs)
}

fn replace_unused(
    d: &mut DenseMatrix,
    j: usize,
    residual: &DenseMatrix,
    y: &DenseMatrix,
    taken: &mut [bool],
    rng: &mut SeededRng,
) {
    let mut worst: Option<(usize, f64)> = None;
    for (i, r) in residual.columns().enumerate() {
        let e = norm(r);
        if !taken[i] && e > 0.0 && norm(y.col(i)) > 0.0 && worst.map_or(true, |(_, w)| e > w) {
            worst = Some((i, e));
        }
    }
    let mut atom: Vec<f64> = match worst {
        Some((i, _)) => {
            taken[i] = true;
            y.col(i).to_vec()
        }
        None => (0..d.rows()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
    };
    let n = norm(&atom);
    atom.iter_mut().for_each(|v| *v /= n);
    d.col_mut(j).copy_from_slice(&atom);
}

/// Alternates OMP coding at sparsity `l` with atom sweeps. Returns the refined
/// dictionary (with its training log) and the codes after the final sweep.
pub fn ksvd_refine(
    dict: &Dictionary,
    y: &DenseMatrix,
    l: usize,
    cfg: &KsvdConfig,
) -> Result<(Dictionary, DenseMatrix)> {
    if cfg.max_iters == 0 {
        return Err(Error::arg("max_iters must be at least 1"));
    }
    if !(cfg.rel_tol >= 0.0) {
        return Err(Error::arg("rel_tol must be >= 0"));
    }
    if y.rows() != dict.atoms.rows() {
        return Err(Error::shape(format!("{} rows", dict.atoms.rows()), format!("{}", y.rows())));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut d = dict.atoms.clone();
    let mut log = Vec::with_capacity(cfg.max_iters);
    let mut x = DenseMatrix::zeros(d.cols(), y.cols());

    for iteration in 1..=cfg.max_iters {
        x = batch_encode(&d, y, l, 0.0)?;
        let before = objective(&d, y, &x)?;
        let atoms_replaced = update_atoms(&mut d, y, &mut x, cfg.unused_atom_policy, &mut rng)?;
        let after = objective(&d, y, &x)?;
        let prev = log.last().map(|it: &KsvdIteration| it.objective);
        log.push(KsvdIteration {
            iteration,
            objective_before_sweep: before,
            objective: after,
            atoms_replaced,
        });
        if after == 0.0 {
            break;
        }
        if let Some(prev) = prev {
            if prev > 0.0 && (prev - after) / prev < cfg.rel_tol {
                break;
            }
        }
    }
    Ok((
        Dictionary {
            atoms: d,
            sparsity: Some(l),
            class_names: dict.class_names.clone(),
            training_log: log,
        },
        x,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_normalizes_columns() {
        let t = DenseMatrix::from_rows(&[&[3.0], &[4.0]]).unwrap();
        let d = init_dictionary(&t).unwrap();
        assert_eq!(d.atoms.as_slice(), &[0.6, 0.8]);
        assert_eq!(d.n_atoms(), 1);
    }

    #[test]
    fn init_rejects_zero_column() {
        let t = DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(init_dictionary(&t), Err(Error::ZeroColumn { column: 1 }));
    }

    #[test]
    fn objective_cases() {
        let d = DenseMatrix::identity(2);
        let y = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(objective(&d, &y, &y).unwrap(), 0.0);
        assert_eq!(objective(&d, &y, &DenseMatrix::zeros(2, 2)).unwrap(), 30.0);
        assert!(objective(&d, &y, &DenseMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn leading_pair_of_rank_one() {
        let e = DenseMatrix::from_rows(&[&[0.6, 1.2], &[0.8, 1.6]]).unwrap();
        let (u, c) = leading_pair(&e, &[1.0, 0.0]);
        assert!((u[0] - 0.6).abs() < 1e-12 && (u[1] - 0.8).abs() < 1e-12);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
        let (u, _) = leading_pair(&e, &[-1.0, 0.0]);
        assert!(u[0] < 0.0, "sign follows the start vector");
    }

    #[test]
    fn rejects_zero_iterations() {
        let d = init_dictionary(&DenseMatrix::identity(2)).unwrap();
        let cfg = KsvdConfig {
            max_iters: 0,
            ..KsvdConfig::default()
        };
        assert!(ksvd_refine(&d, &DenseMatrix::identity(2), 1, &cfg).is_err());
    }
}
