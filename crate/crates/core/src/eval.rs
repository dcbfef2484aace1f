//! Classification of embedded samples, accuracy metrics and baselines.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;
use crate::solver::{fit, ProjectionMatrix, S3fseConfig};

/// Majority vote among the `k` nearest training rows (Euclidean). Neighbours
/// are ordered by `(distance, class id)` and vote ties go to the smallest
/// class id, so the result does not depend on training order.
pub fn knn_classify(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    test: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n_tr = train.nrows();
    if n_tr == 0 {
        return Err(Error::invalid("empty training set"));
    }
    if train_labels.len() != n_tr {
        return Err(Error::invalid("one label per training row required"));
    }
    if k == 0 || k > n_tr {
        return Err(Error::invalid(format!(
            "k_cls = {k} must lie in 1..={n_tr}"
        )));
    }
    if test.ncols() != train.ncols() {
        return Err(Error::invalid("train and test embeddings differ in width"));
    }
    let n_classes = train_labels.iter().copied().max().unwrap_or(0);
    let rows: Vec<usize> = (0..test.nrows()).collect();
    Ok(rows
        .par_iter()
        .map(|&i| {
            let q = test.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n_tr)
                .map(|j| ((train.row(j) - q).norm_squared(), train_labels[j]))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; n_classes + 1];
            for &(_, c) in &cand[..k] {
                votes[c] += 1;
            }
            // first maximum = smallest class id among ties
            let mut best = 0;
            for c in 1..=n_classes {
                if votes[c] > votes[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

/// Counts indexed `[true - 1][predicted - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|r| r.len() != c) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self { counts })
    }

    pub fn from_labels(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::invalid("truth and prediction lengths differ"));
        }
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t == 0 || t > n_classes || p == 0 || p > n_classes {
                return Err(Error::invalid(format!(
                    "label pair ({t}, {p}) outside 1..={n_classes}"
                )));
            }
            counts[t - 1][p - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Observed agreement `p_o` and chance agreement `p_e`.
    pub fn agreement(&self) -> Result<(f64, f64)> {
        let total = self.total();
        if total == 0 {
            return Err(Error::invalid("confusion matrix is empty"));
        }
        let t = total as f64;
        let p_o = self.trace() as f64 / t;
        let p_e = self
            .row_sums()
            .iter()
            .zip(self.col_sums())
            .map(|(&r, c)| r as f64 * c as f64)
            .sum::<f64>()
            / (t * t);
        Ok((p_o, p_e))
    }
}

pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.agreement()?.0)
}

/// Cohen's kappa, `(p_o - p_e) / (1 - p_e)`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let (p_o, p_e) = cm.agreement()?;
    if p_e >= 1.0 {
        return Err(Error::UndefinedMetric(
            "kappa is undefined when chance agreement is 1".into(),
        ));
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Producer's accuracy per class; `None` when the class has no test samples.
pub fn class_accuracies(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    cm.counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[i] as f64 / total as f64)
        })
        .collect()
}

/// Local-geometry-only baseline: the first term of the objective alone.
pub fn colgp_fit(ds: &MultiViewDataset, cfg: &S3fseConfig) -> Result<ProjectionMatrix> {
    let cfg = S3fseConfig {
        alpha: 0.0,
        beta: 0.0,
        max_iter: 1,
        ..cfg.clone()
    };
    Ok(fit(ds, &cfg)?.0)
}

/// Principal loadings of a mean-centred matrix.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// m × d', columns ordered by decreasing variance.
    pub loadings: DMatrix<f64>,
    pub variances: DVector<f64>,
}

impl PcaModel {
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centered * &self.loadings
    }
}

/// Top-`d` principal loadings. When fewer than `d` components carry variance,
/// only those are returned and a warning is logged.
pub fn pca_fit(stacked: &ViewMatrix, d: usize) -> Result<PcaModel> {
    let x = stacked.values();
    let (n, m) = x.shape();
    if d == 0 || d > m {
        return Err(Error::invalid(format!(
            "PCA dimensionality {d} must lie in 1..={m}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid("PCA needs at least 2 samples"));
    }
    let mean = DVector::from_iterator(m, x.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    let (values, vectors) = symmetric_eigen_sorted(&cov, true);
    let floor = values[0].abs().max(f64::MIN_POSITIVE) * 1e-12;
    let rank = values.iter().take_while(|&&v| v > floor).count();
    let keep = if rank < d {
        log::warn!("PCA: requested {d} components but data rank is {rank}; returning {rank}");
        rank.max(1)
    } else {
        d
    };
    Ok(PcaModel {
        mean,
        loadings: vectors.columns(0, keep).into_owned(),
        variances: values.rows(0, keep).into_owned(),
    })
}
