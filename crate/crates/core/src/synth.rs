//! Seeded synthetic data with known ground truth.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::{norm, DenseMatrix};
use crate::rng::{rng_from_seed, SeededRng};

/// How planted coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficients {
    /// Magnitude uniform in `[lo, hi]`, sign uniform.
    SignedUniform { lo: f64, hi: f64 },
    Ones,
}

/// Planted sparse model: `Y = D·X + noise` with exactly-`l`-sparse columns of `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub signals: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub coefficients: Coefficients,
}

impl SynthSpec {
    pub fn new(n: usize, k: usize, l: usize, signals: usize, noise_sigma: f64, seed: u64) -> Self {
        SynthSpec {
            n,
            k,
            l,
            signals,
            noise_sigma,
            seed,
            coefficients: Coefficients::SignedUniform { lo: 0.5, hi: 1.5 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.signals == 0 {
            return Err(Error::dim("n, K and N must be positive"));
        }
        if self.l == 0 || self.l > self.k {
            return Err(Error::arg(format!("planted sparsity {} outside 1..={}", self.l, self.k)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::arg("noise sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// `n × K`, unit-norm atoms.
    pub dictionary: DenseMatrix,
    /// `K × N`, exactly `l` nonzeros per column.
    pub codes: DenseMatrix,
    /// `n × N`.
    pub signals: DenseMatrix,
}

/// Random unit-norm Gaussian atoms.
pub fn random_dictionary(n: usize, k: usize, rng: &mut SeededRng) -> DenseMatrix {
    let mut d = DenseMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal));
    normalize_columns(&mut d);
    d
}

fn normalize_columns(d: &mut DenseMatrix) {
    for j in 0..d.cols() {
        let nj = norm(d.col(j));
        if nj > 0.0 {
            d.col_mut(j).iter_mut().for_each(|v| *v /= nj);
        }
    }
}

pub fn synth_generate(spec: &SynthSpec) -> Result<PlantedModel> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let dictionary = random_dictionary(spec.n, spec.k, &mut rng);
    let mut codes = DenseMatrix::zeros(spec.k, spec.signals);
    for i in 0..spec.signals {
        let support = sample(&mut rng, spec.k, spec.l);
        for j in support.iter() {
            let v = match spec.coefficients {
                Coefficients::Ones => 1.0,
                Coefficients::SignedUniform { lo, hi } => {
                    let mag = rng.random_range(lo..=hi);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            codes.set(j, i, v);
        }
    }
    let mut signals = dictionary.matmul(&codes)?;
    if spec.noise_sigma > 0.0 {
        for i in 0..signals.cols() {
            for v in signals.col_mut(i) {
                *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok(PlantedModel {
        dictionary,
        codes,
        signals,
    })
}

/// Adds `N(0, sigma²)` noise to every atom and renormalizes.
pub fn perturb_dictionary(d: &DenseMatrix, sigma: f64, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let mut out = DenseMatrix::from_fn(d.rows(), d.cols(), |r, c| d.get(r, c) + sigma * rng.sample::<f64, _>(StandardNormal));
    normalize_columns(&mut out);
    out
}

/// Isotropic Gaussian clusters in `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub sigma: f64,
    /// Minimum distance between any two class means, in units of `sigma`.
    pub min_separation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub dataset: LabeledDataset,
    /// `dim × classes`.
    pub means: DenseMatrix,
}

/// Class means drawn uniformly in `[0.2, 0.8]^dim` (redrawn until pairwise
/// separation holds); samples clamped to `[0, 1]`. Samples are laid out class
/// by class.
pub fn gaussian_blobs(spec: &BlobSpec) -> Result<Blobs> {
    if spec.classes < 2 || spec.dim == 0 || spec.per_class == 0 {
        return Err(Error::arg("blobs need >= 2 classes, dim >= 1 and per_class >= 1"));
    }
    if !(spec.sigma > 0.0) {
        return Err(Error::arg("blob sigma must be positive"));
    }
    let mut rng = rng_from_seed(spec.seed);
    let min_dist = spec.min_separation * spec.sigma;
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    let mut attempts = 0;
    while means.len() < spec.classes {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::arg("cannot place blob means with the requested separation"));
        }
        let m: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(0.2..0.8)).collect();
        let far = means.iter().all(|o| {
            libm::sqrt(o.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()) >= min_dist
        });
        if far {
            means.push(m);
        }
    }
    let n = spec.classes * spec.per_class;
    let mut values = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..spec.per_class {
            values.extend(
                mean.iter()
                    .map(|&mu| (mu + spec.sigma * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0)),
            );
            labels.push(c);
        }
    }
    let features = DenseMatrix::from_col_major(spec.dim, n, values)?;
    let class_names: Vec<String> = (0..spec.classes).map(|c| format!("class{c}")).collect();
    Ok(Blobs {
        dataset: LabeledDataset::new(features, labels, None, class_names)?,
        means: DenseMatrix::from_columns(spec.dim, &means)?,
    })
}
