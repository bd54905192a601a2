//! Labeled datasets, seeded train/test splits and confusion matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::rng_from_seed;

/// Feature matrix (one sample per column) with class labels and optional
/// subject identities.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DenseMatrix,
    labels: Vec<usize>,
    identities: Option<Vec<String>>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: DenseMatrix,
        labels: Vec<usize>,
        identities: Option<Vec<String>>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::dim(format!(
                "dataset needs d >= 1 and N >= 1, got {}x{}",
                features.rows(),
                features.cols()
            )));
        }
        Self::new_unchecked_size(features, labels, identities, class_names)
    }

    // Empty partitions are legal split outputs.
    fn new_unchecked_size(
        features: DenseMatrix,
        labels: Vec<usize>,
        identities: Option<Vec<String>>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.cols() {
            return Err(Error::shape(
                format!("{} labels", features.cols()),
                format!("{} labels", labels.len()),
            ));
        }
        if let Some(ids) = &identities {
            if ids.len() != labels.len() {
                return Err(Error::shape(
                    format!("{} identities", labels.len()),
                    format!("{} identities", ids.len()),
                ));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: class_names.len(),
            });
        }
        Ok(LabeledDataset {
            features,
            labels,
            identities,
            class_names,
        })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn identities(&self) -> Option<&[String]> {
        self.identities.as_deref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Number of samples (columns).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension (rows).
    pub fn dim(&self) -> usize {
        self.features.rows()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Columns `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            identities: self
                .identities
                .as_ref()
                .map(|ids| idx.iter().map(|&i| ids[i].clone()).collect()),
            class_names: self.class_names.clone(),
        }
    }

    /// Same samples and labels with replaced features (e.g. after projection).
    pub fn with_features(&self, features: DenseMatrix) -> Result<LabeledDataset> {
        Self::new_unchecked_size(
            features,
            self.labels.clone(),
            self.identities.clone(),
            self.class_names.clone(),
        )
    }

    /// Concatenates samples of two datasets sharing a feature dimension.
    /// Class names are merged by name, in first-appearance order.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.dim() != other.dim() {
            return Err(Error::shape(
                format!("feature dimension {}", self.dim()),
                format!("{}", other.dim()),
            ));
        }
        let mut names = self.class_names.clone();
        let remap: Vec<usize> = other
            .class_names
            .iter()
            .map(|n| match names.iter().position(|m| m == n) {
                Some(i) => i,
                None => {
                    names.push(n.clone());
                    names.len() - 1
                }
            })
            .collect();
        let mut values = self.features.as_slice().to_vec();
        values.extend_from_slice(other.features.as_slice());
        let features = DenseMatrix::from_col_major(self.dim(), self.len() + other.len(), values)?;
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().map(|&l| remap[l]));
        let identities = match (&self.identities, &other.identities) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        LabeledDataset::new(features, labels, identities, names)
    }
}

/// Per-class train/test counts for [`split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub identity_disjoint: bool,
    pub shuffle_seed: u64,
}

/// Splits `ds` into train and test partitions with exactly the requested
/// number of samples per class.
///
/// Classes are sampled independently with a generator seeded from
/// `shuffle_seed`; both partitions come back in shuffled column order. With
/// `identity_disjoint`, identities are first assigned wholly to one side (test
/// side filled greedily in seeded order until every class has enough test
/// samples) and samples are then drawn within each side.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let need = spec.per_class_train + spec.per_class_test;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < need {
            return Err(Error::ClassTooSmall {
                class: ds.class_names[c].clone(),
                available: members.len(),
                required: need,
            });
        }
    }

    let mut rng = rng_from_seed(spec.shuffle_seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());

    if spec.identity_disjoint {
        let ids = ds
            .identities
            .as_ref()
            .ok_or_else(|| Error::arg("identity_disjoint split requires identity tags"))?;
        // BTreeMap keeps identity order independent of sample order.
        let mut per_identity: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            per_identity.entry(id.as_str()).or_default().push(i);
        }
        let mut order: Vec<&str> = per_identity.keys().copied().collect();
        order.shuffle(&mut rng);

        let mut test_pool = vec![Vec::new(); ds.n_classes()];
        let mut train_pool = vec![Vec::new(); ds.n_classes()];
        for id in order {
            let samples = &per_identity[id];
            let helps = samples
                .iter()
                .any(|&i| test_pool[ds.labels[i]].len() < spec.per_class_test);
            let pool = if helps { &mut test_pool } else { &mut train_pool };
            for &i in samples {
                pool[ds.labels[i]].push(i);
            }
        }
        for c in 0..ds.n_classes() {
            if test_pool[c].len() < spec.per_class_test || train_pool[c].len() < spec.per_class_train {
                return Err(Error::IdentityInfeasible(format!(
                    "class {} gets {} train / {} test samples after identity assignment, need {} / {}",
                    ds.class_names[c],
                    train_pool[c].len(),
                    test_pool[c].len(),
                    spec.per_class_train,
                    spec.per_class_test
                )));
            }
            train_pool[c].shuffle(&mut rng);
            test_pool[c].shuffle(&mut rng);
            train.extend_from_slice(&train_pool[c][..spec.per_class_train]);
            test.extend_from_slice(&test_pool[c][..spec.per_class_test]);
        }
    } else {
        for members in &mut by_class {
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..spec.per_class_train]);
            test.extend_from_slice(&members[spec.per_class_train..need]);
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal over row sum; `None` for classes absent from the test labels.
    pub fn rates(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub confusion: ConfusionMatrix,
    pub per_class_rate: Vec<Option<f64>>,
    /// Unweighted mean over classes present in the test labels.
    pub average_rate: f64,
}

pub fn confusion_and_rates(
    truth: &[usize],
    predicted: &[usize],
    class_names: &[String],
) -> Result<RateSummary> {
    if truth.len() != predicted.len() {
        return Err(Error::shape(
            format!("{} predictions", truth.len()),
            format!("{}", predicted.len()),
        ));
    }
    let k = class_names.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= k || p >= k {
            return Err(Error::LabelOutOfRange {
                label: t.max(p),
                classes: k,
            });
        }
        counts[t][p] += 1;
    }
    let confusion = ConfusionMatrix {
        counts,
        class_names: class_names.to_vec(),
    };
    let per_class_rate = confusion.rates();
    let present: Vec<f64> = per_class_rate.iter().flatten().copied().collect();
    let average_rate = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    Ok(RateSummary {
        confusion,
        per_class_rate,
        average_rate,
    })
}
