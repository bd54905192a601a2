//! One-vs-rest linear SVM with an unregularized bias.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`. The
//! dual carries the equality constraint `Σ yᵢαᵢ = 0` from the free bias, so
//! the solver moves two coordinates at a time (SMO with second-order working
//! set selection) over a precomputed Gram matrix. After the dual converges the
//! bias is set to the exact primal minimizer for the final `w`, and the
//! relative duality gap decides termination.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, DenseMatrix};
use crate::rng::rng_from_seed;

/// Relative duality gap at which a binary solve stops.
pub const GAP_TOLERANCE: f64 = 1e-4;
/// Minimum update budget per binary problem; grows as `100·N` beyond that.
pub const MIN_ITERATIONS: usize = 10_000;
/// Default regularization grid.
pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    /// `classes × feature_dim`.
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub class_names: Vec<String>,
    pub c: f64,
}

impl LinearSvmModel {
    pub fn feature_dim(&self) -> usize {
        self.weights.cols()
    }

    /// `classes × N` decision values `w_c·x + b_c`.
    pub fn decision_values(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        if features.rows() != self.feature_dim() {
            return Err(Error::shape(
                format!("{} features", self.feature_dim()),
                format!("{}", features.rows()),
            ));
        }
        let mut scores = self.weights.matmul(features)?;
        for j in 0..scores.cols() {
            axpy(1.0, &self.bias, scores.col_mut(j));
        }
        Ok(scores)
    }
}

/// Dual coefficients, bias and final objectives of one binary solve.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
}

/// SMO over the samples `idx` of a Gram matrix. `y[t]` is ±1 for sample `idx[t]`.
pub fn solve_binary(gram: &DenseMatrix, idx: &[usize], y: &[f64], c: f64) -> BinarySolution {
    let n = idx.len();
    let k = |a: usize, b: usize| gram.get(idx[a], idx[b]);
    let qd: Vec<f64> = (0..n).map(|t| k(t, t)).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; n];
    let max_iter = MIN_ITERATIONS.max(100 * n);
    let check_every = n.max(1);

    let mut iterations = 0;
    let mut since_check = 0;
    while iterations < max_iter {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            if in_up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        // j: second-order choice in I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = (qd[i] + qd[t] - 2.0 * k(i, t)).max(TAU);
                let obj = -(diff * diff) / quad;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        let violation = gmax + gmax2;
        if j == usize::MAX || violation < 1e-12 {
            break;
        }

        let (ai, aj) = (alpha[i], alpha[j]);
        let quad = (qd[i] + qd[j] - 2.0 * k(i, j)).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
        iterations += 1;
        since_check += 1;

        if violation < 1e-3 || since_check >= check_every {
            since_check = 0;
            let (primal, dual, _) = gap_check(&alpha, &grad, y, c);
            if primal - dual <= GAP_TOLERANCE * primal.abs().max(1.0) {
                break;
            }
        }
    }
    let (primal, dual, bias) = gap_check(&alpha, &grad, y, c);
    BinarySolution {
        alpha,
        bias,
        primal,
        dual,
        iterations,
    }
}

// (primal at the optimal bias, dual, optimal bias)
fn gap_check(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (f64, f64, f64) {
    // (Qα)ᵢ = yᵢ (w·xᵢ) = gradᵢ + 1
    let scores: Vec<f64> = grad.iter().zip(y).map(|(g, yi)| yi * (g + 1.0)).collect();
    let wsq: f64 = alpha.iter().zip(grad).map(|(a, g)| a * (g + 1.0)).sum();
    let bias = optimal_bias(&scores, y);
    let hinge: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, yi)| (1.0 - yi * (s + bias)).max(0.0))
        .sum();
    let primal = 0.5 * wsq + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * wsq;
    (primal, dual, bias)
}

/// Exact minimizer of `Σ max(0, 1 − yᵢ(sᵢ + b))` over `b`; the midpoint of the
/// minimizing interval, or its finite end when the interval is a half-line.
pub(crate) fn optimal_bias(scores: &[f64], y: &[f64]) -> f64 {
    // Every hinge has slope ±1 away from its kink, and the total slope climbs
    // by one at each sorted kink starting from −#positives.
    let mut kinks: Vec<f64> = scores.iter().zip(y).map(|(s, yi)| yi - s).collect();
    if kinks.is_empty() {
        return 0.0;
    }
    kinks.sort_by(f64::total_cmp);
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    match positives {
        0 => kinks[0],
        p if p == kinks.len() => kinks[p - 1],
        p => 0.5 * (kinks[p - 1] + kinks[p]),
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::arg(format!("C must be positive and finite, got {c}")));
    }
    Ok(())
}

/// OVR training on the samples `idx` of `features`, using the full Gram matrix.
pub(crate) fn train_subset(
    features: &DenseMatrix,
    gram: &DenseMatrix,
    idx: &[usize],
    labels: &[usize],
    class_names: &[String],
    c: f64,
) -> Result<LinearSvmModel> {
    let classes = class_names.len();
    let dim = features.rows();
    let mut weights = DenseMatrix::zeros(classes, dim);
    let mut bias = vec![0.0; classes];
    for (class, b) in bias.iter_mut().enumerate() {
        let y: Vec<f64> = idx
            .iter()
            .map(|&i| if labels[i] == class { 1.0 } else { -1.0 })
            .collect();
        let sol = solve_binary(gram, idx, &y, c);
        let mut w = vec![0.0; dim];
        for (t, &i) in idx.iter().enumerate() {
            if sol.alpha[t] != 0.0 {
                axpy(sol.alpha[t] * y[t], features.col(i), &mut w);
            }
        }
        for (f, v) in w.into_iter().enumerate() {
            weights.set(class, f, v);
        }
        *b = sol.bias;
    }
    weights.check_finite()?;
    if bias.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("non-finite SVM bias".into()));
    }
    Ok(LinearSvmModel {
        weights,
        bias,
        class_names: class_names.to_vec(),
        c,
    })
}

/// Trains one binary hinge-loss classifier per class.
pub fn train(features: &DenseMatrix, labels: &[usize], class_names: &[String], c: f64) -> Result<LinearSvmModel> {
    check_c(c)?;
    check_labels(features, labels, class_names)?;
    let mut present = vec![false; class_names.len()];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::arg("SVM training needs at least two classes present"));
    }
    let idx: Vec<usize> = (0..labels.len()).collect();
    train_subset(features, &features.gram(), &idx, labels, class_names, c)
}

fn check_labels(features: &DenseMatrix, labels: &[usize], class_names: &[String]) -> Result<()> {
    if labels.len() != features.cols() {
        return Err(Error::shape(
            format!("{} labels", features.cols()),
            format!("{}", labels.len()),
        ));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
        return Err(Error::LabelOutOfRange {
            label: l,
            classes: class_names.len(),
        });
    }
    Ok(())
}

/// Argmax of the decision values per column; ties go to the lower class index.
pub fn predict(model: &LinearSvmModel, features: &DenseMatrix) -> Result<Vec<usize>> {
    let scores = model.decision_values(features)?;
    Ok(scores.columns().map(argmax_first).collect())
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Cross-validation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    LeaveOneOut,
    /// Stratified k-fold with seeded shuffling.
    KFold { k: usize, seed: u64 },
}

/// Held-out index sets, one per fold. K-fold shuffles each class with the seed
/// and deals its members round-robin across folds.
pub fn folds(labels: &[usize], cv: CvMode) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    match cv {
        CvMode::LeaveOneOut => {
            if n < 2 {
                return Err(Error::arg("leave-one-out needs at least two samples"));
            }
            Ok((0..n).map(|i| vec![i]).collect())
        }
        CvMode::KFold { k, seed } => {
            if k < 2 || k > n {
                return Err(Error::arg(format!("{k} folds for {n} samples")));
            }
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut rng = rng_from_seed(seed);
            let mut out = vec![Vec::new(); k];
            let mut slot = 0;
            for class in 0..classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                members.shuffle(&mut rng);
                for i in members {
                    out[slot % k].push(i);
                    slot += 1;
                }
            }
            for f in &mut out {
                f.sort_unstable();
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracy: Vec<f64>,
}

fn cross_validate_with_gram(
    features: &DenseMatrix,
    gram: &DenseMatrix,
    labels: &[usize],
    class_names: &[String],
    c: f64,
    held_out: &[Vec<usize>],
) -> Result<CvScore> {
    let n = labels.len();
    let mut in_test = vec![false; n];
    let mut fold_accuracy = Vec::with_capacity(held_out.len());
    for test in held_out {
        test.iter().for_each(|&i| in_test[i] = true);
        let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        test.iter().for_each(|&i| in_test[i] = false);
        let model = train_subset(features, gram, &train_idx, labels, class_names, c)?;
        let pred = predict(&model, &features.select_columns(test))?;
        let correct = pred.iter().zip(test).filter(|(p, &i)| **p == labels[i]).count();
        fold_accuracy.push(correct as f64 / test.len() as f64);
    }
    let k = fold_accuracy.len() as f64;
    let mean = fold_accuracy.iter().sum::<f64>() / k;
    let var = fold_accuracy.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / k;
    Ok(CvScore {
        mean_accuracy: mean,
        std_accuracy: libm::sqrt(var),
        fold_accuracy,
    })
}

/// Mean held-out accuracy of OVR training at a single `C`.
pub fn cross_validate(
    features: &DenseMatrix,
    labels: &[usize],
    class_names: &[String],
    c: f64,
    cv: CvMode,
) -> Result<CvScore> {
    check_c(c)?;
    check_labels(features, labels, class_names)?;
    let held_out = folds(labels, cv)?;
    cross_validate_with_gram(features, &features.gram(), labels, class_names, c, &held_out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub c: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub best_c: f64,
    /// In grid order.
    pub entries: Vec<GridEntry>,
}

/// Cross-validated accuracy for every `C`; the best mean wins, ties to the smaller `C`.
pub fn grid_search(
    features: &DenseMatrix,
    labels: &[usize],
    class_names: &[String],
    c_grid: &[f64],
    cv: CvMode,
) -> Result<GridReport> {
    if c_grid.is_empty() {
        return Err(Error::arg("empty C grid"));
    }
    c_grid.iter().try_for_each(|&c| check_c(c))?;
    check_labels(features, labels, class_names)?;
    let held_out = folds(labels, cv)?;
    let gram = features.gram();
    let mut entries = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let s = cross_validate_with_gram(features, &gram, labels, class_names, c, &held_out)?;
        entries.push(GridEntry {
            c,
            mean_accuracy: s.mean_accuracy,
            std_accuracy: s.std_accuracy,
        });
    }
    let best = entries
        .iter()
        .reduce(|a, b| {
            if b.mean_accuracy > a.mean_accuracy || (b.mean_accuracy == a.mean_accuracy && b.c < a.c) {
                b
            } else {
                a
            }
        })
        .expect("non-empty grid");
    Ok(GridReport {
        best_c: best.c,
        entries,
    })
}

/// Primal objective of one binary problem at `(w, b)`; used by tests and diagnostics.
pub fn binary_primal(features: &DenseMatrix, y: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let hinge: f64 = features
        .columns()
        .zip(y)
        .map(|(x, yi)| (1.0 - yi * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| i.to_string()).collect()
    }

    #[test]
    fn one_dimensional_max_margin() {
        let x = DenseMatrix::from_rows(&[&[-1.0, 1.0]]).unwrap();
        let model = train(&x, &[0, 1], &names(2), 1e3).unwrap();
        // Class 1 row: w·x + b = 0 at the boundary.
        let (w, b) = (model.weights.get(1, 0), model.bias[1]);
        assert!((-b / w).abs() < 1e-6, "boundary at {}", -b / w);
        assert_eq!(predict(&model, &x).unwrap(), vec![0, 1]);
    }

    #[test]
    fn coordinate_model_and_ties() {
        let model = LinearSvmModel {
            weights: DenseMatrix::identity(2),
            bias: vec![0.0, 0.0],
            class_names: names(2),
            c: 1.0,
        };
        let x = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(predict(&model, &x).unwrap(), vec![0, 0]);
        let wrong = DenseMatrix::zeros(3, 1);
        assert!(predict(&model, &wrong).is_err());
    }

    #[test]
    fn optimal_bias_cases() {
        assert_eq!(optimal_bias(&[-1.0, 1.0], &[-1.0, 1.0]), 0.0);
        // All negative: any b <= -1 - max(s) is optimal; finite end chosen.
        assert_eq!(optimal_bias(&[0.0, 0.5], &[-1.0, -1.0]), -1.5);
        assert_eq!(optimal_bias(&[0.0], &[1.0]), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DenseMatrix::from_rows(&[&[0.0, 1.0]]).unwrap();
        assert!(train(&x, &[0, 0], &names(2), 1.0).is_err());
        assert!(train(&x, &[0, 1], &names(2), 0.0).is_err());
        assert!(train(&x, &[0, 1], &names(2), -1.0).is_err());
        assert!(folds(&[0, 1, 0], CvMode::KFold { k: 4, seed: 0 }).is_err());
        assert!(grid_search(&x, &[0, 1], &names(2), &[], CvMode::LeaveOneOut).is_err());
    }

    #[test]
    fn stratified_folds_cover_everything_once() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let f = folds(&labels, CvMode::KFold { k: 5, seed: 9 }).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        for fold in &f {
            assert!(fold.len() == 4 || fold.len() == 5);
        }
        assert_eq!(f, folds(&labels, CvMode::KFold { k: 5, seed: 9 }).unwrap());
    }

    #[test]
    fn duality_gap_closes() {
        let x = DenseMatrix::from_fn(2, 12, |r, c| ((r * 5 + c * 7) % 11) as f64 / 11.0 - 0.5 + c as f64 * 0.01);
        let y: Vec<f64> = (0..12).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let idx: Vec<usize> = (0..12).collect();
        let sol = solve_binary(&x.gram(), &idx, &y, 1.0);
        assert!(sol.primal >= sol.dual - 1e-12);
        assert!(sol.primal - sol.dual <= GAP_TOLERANCE * sol.primal.max(1.0));
        let mut w = vec![0.0; 2];
        for (i, yi) in y.iter().enumerate() {
            axpy(sol.alpha[i] * yi, x.col(i), &mut w);
        }
        let p = binary_primal(&x, &y, &w, sol.bias, 1.0);
        assert!((p - sol.primal).abs() < 1e-9 * p.max(1.0));
        assert!(sol.iterations > 0);
    }
}
