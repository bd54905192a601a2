//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use sparsefer_core::rng::{rng_from_seed, SeededRng};
use sparsefer_core::DenseMatrix;

pub fn rng(seed: u64) -> SeededRng {
    rng_from_seed(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut SeededRng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normalize_columns(m: &mut DenseMatrix) {
    for j in 0..m.cols() {
        let n = m.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        m.col_mut(j).iter_mut().for_each(|v| *v /= n);
    }
}

pub fn unit_gaussian_dictionary(n: usize, k: usize, rng: &mut SeededRng) -> DenseMatrix {
    let mut d = gaussian(n, k, rng);
    normalize_columns(&mut d);
    d
}

/// Largest |⟨d_i, d_j⟩| over distinct atoms.
pub fn coherence(d: &DenseMatrix) -> f64 {
    let mut mu: f64 = 0.0;
    for i in 0..d.cols() {
        for j in 0..i {
            let ip: f64 = d.col(i).iter().zip(d.col(j)).map(|(a, b)| a * b).sum();
            mu = mu.max(ip.abs());
        }
    }
    mu
}

/// Sylvester Hadamard matrix scaled to orthonormal columns; `n` a power of two.
pub fn hadamard(n: usize) -> DenseMatrix {
    assert!(n.is_power_of_two());
    let s = 1.0 / (n as f64).sqrt();
    DenseMatrix::from_fn(n, n, |r, c| if (r & c).count_ones() % 2 == 0 { s } else { -s })
}

/// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> DenseMatrix {
    let g = gaussian(n, n, rng);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        let mut v = g.col(j).to_vec();
        for _ in 0..2 {
            for q in &cols {
                let p: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        cols.push(v);
    }
    DenseMatrix::from_columns(n, &cols).unwrap()
}

/// Least-squares residual norm of `y` on the columns `support` of `d`, by
/// normal equations solved with Gaussian elimination (independent of OMP's QR).
pub fn ls_residual(d: &DenseMatrix, y: &[f64], support: &[usize]) -> f64 {
    let s = support.len();
    let mut a = vec![vec![0.0; s + 1]; s];
    for (i, &p) in support.iter().enumerate() {
        for (j, &q) in support.iter().enumerate() {
            a[i][j] = d.col(p).iter().zip(d.col(q)).map(|(x, y)| x * y).sum();
        }
        a[i][s] = d.col(p).iter().zip(y).map(|(x, y)| x * y).sum();
    }
    for col in 0..s {
        let piv = (col..s).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < 1e-14 {
            return f64::INFINITY;
        }
        for r in 0..s {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot = a[col].clone();
                a[r][col..=s].iter_mut().zip(&pivot[col..=s]).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    let x: Vec<f64> = (0..s).map(|i| a[i][s] / a[i][i]).collect();
    let mut r = y.to_vec();
    for (i, &p) in support.iter().enumerate() {
        r.iter_mut().zip(d.col(p)).for_each(|(ri, di)| *ri -= x[i] * di);
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Every size-`l` subset of `0..k` in lexicographic order.
pub fn subsets(k: usize, l: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, l: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, l, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, l, &mut Vec::new(), &mut out);
    out
}

/// Supports of size `l` whose least-squares residual is (numerically) zero.
pub fn zero_residual_supports(d: &DenseMatrix, y: &[f64], l: usize) -> Vec<Vec<usize>> {
    let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    subsets(d.cols(), l)
        .into_iter()
        .filter(|s| ls_residual(d, y, s) < 1e-9 * scale)
        .collect()
}

/// Greedy one-to-one matching of learned atoms to true atoms by descending
/// |inner product|; returns the matched similarities.
pub fn greedy_match(learned: &DenseMatrix, truth: &DenseMatrix) -> Vec<f64> {
    let mut pairs = Vec::new();
    for i in 0..learned.cols() {
        for j in 0..truth.cols() {
            let ip: f64 = learned.col(i).iter().zip(truth.col(j)).map(|(a, b)| a * b).sum();
            pairs.push((ip.abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut used_l = vec![false; learned.cols()];
    let mut used_t = vec![false; truth.cols()];
    let mut out = Vec::new();
    for (s, i, j) in pairs {
        if !used_l[i] && !used_t[j] {
            used_l[i] = true;
            used_t[j] = true;
            out.push(s);
        }
    }
    out
}

/// Entry-wise ‖Y − D·X‖²_F by direct summation.
pub fn direct_objective(d: &DenseMatrix, y: &DenseMatrix, x: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    for c in 0..y.cols() {
        for r in 0..y.rows() {
            let mut v = y.get(r, c);
            for k in 0..d.cols() {
                v -= d.get(r, k) * x.get(k, c);
            }
            total += v * v;
        }
    }
    total
}

/// Unit-norm `n × k` frame with low mutual coherence: alternately clip the
/// Gram matrix's off-diagonal entries at `target` and project back to rank
/// `n` (nalgebra eigendecomposition), starting from a Gaussian dictionary.
pub fn incoherent_dictionary(n: usize, k: usize, target: f64, iters: usize, rng: &mut SeededRng) -> DenseMatrix {
    use nalgebra::{DMatrix, SymmetricEigen};
    let mut d = unit_gaussian_dictionary(n, k, rng);
    let mut best = d.clone();
    let mut best_mu = coherence(&d);
    for _ in 0..iters {
        let mut g = DMatrix::from_fn(k, k, |i, j| d.col(i).iter().zip(d.col(j)).map(|(a, b)| a * b).sum::<f64>());
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    g[(i, j)] = 1.0;
                } else if g[(i, j)].abs() > target {
                    g[(i, j)] = target * g[(i, j)].signum();
                }
            }
        }
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        d = DenseMatrix::from_fn(n, k, |r, c| {
            let idx = order[r];
            eig.eigenvalues[idx].max(0.0).sqrt() * eig.eigenvectors[(c, idx)]
        });
        normalize_columns(&mut d);
        let mu = coherence(&d);
        if mu < best_mu {
            best_mu = mu;
            best = d.clone();
        }
    }
    best
}

/// `0.5‖w‖² + C·Σ max(0, 1 − y_i(w·x_i + b))` by direct summation.
pub fn hinge_primal(x: &DenseMatrix, y: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let mut hinge = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let score: f64 = w.iter().enumerate().map(|(k, wk)| wk * x.get(k, i)).sum::<f64>() + b;
        hinge += (1.0 - yi * score).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge
}

/// Primal minimized over the bias by brute force: for fixed `w` the objective
/// is convex piecewise linear in `b`, so some kink `b = y_i − w·x_i` is optimal.
pub fn hinge_primal_best_bias(x: &DenseMatrix, y: &[f64], w: &[f64], c: f64) -> f64 {
    (0..x.cols())
        .map(|i| {
            let b = y[i] - w.iter().enumerate().map(|(k, wk)| wk * x.get(k, i)).sum::<f64>();
            hinge_primal(x, y, w, b, c)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of a convex function of `w ∈ R²` over `[−half_width, half_width]²`
/// by repeated grid refinement: each round evaluates an 81² grid and shrinks
/// the box to ±4 steps around the best point, until the step is below
/// `resolution`.
pub fn grid_minimum_2d(f: impl Fn([f64; 2]) -> f64, half_width: f64, resolution: f64) -> f64 {
    const STEPS: usize = 80;
    let mut center = [0.0, 0.0];
    let mut half = half_width;
    let mut best = f64::INFINITY;
    loop {
        let h = 2.0 * half / STEPS as f64;
        let mut arg = center;
        for i in 0..=STEPS {
            for j in 0..=STEPS {
                let p = [center[0] - half + i as f64 * h, center[1] - half + j as f64 * h];
                let v = f(p);
                if v < best {
                    best = v;
                    arg = p;
                }
            }
        }
        if h < resolution {
            return best;
        }
        center = arg;
        half = 4.0 * h;
    }
}

/// Optimum of a 2-D binary hinge problem via [`grid_minimum_2d`]. At the
/// optimum 0.5‖w‖² ≤ C·n (the value at w = 0, b = 0), which bounds the box.
pub fn hinge_oracle_2d(x: &DenseMatrix, y: &[f64], c: f64) -> f64 {
    let wmax = (2.0 * c * y.len() as f64).sqrt();
    grid_minimum_2d(|p| hinge_primal_best_bias(x, y, &p, c), wmax, 1e-6)
}
