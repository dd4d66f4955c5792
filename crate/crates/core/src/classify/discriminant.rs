//! Quadratic and linear discriminant analysis: Bayes classification with
//! per-class (QDA) or pooled (LDA) Gaussian densities.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationStats};
use crate::error::{Error, Result};

/// Ridge factor applied on the trace scale when a class covariance is
/// numerically degenerate.
const RIDGE_LAMBDA: f64 = 1e-8;
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QdaModel {
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    /// Class means in normalized feature space.
    pub means: Vec<Vec<f64>>,
    /// Class covariances, row-major.
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub normalization: NormalizationStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Single pooled covariance, row-major.
    pub pooled_covariance: Vec<Vec<f64>>,
    pub normalization: NormalizationStats,
}

struct ClassStats {
    labels: Vec<String>,
    counts: Vec<usize>,
    priors: Vec<f64>,
    means: Vec<DVector<f64>>,
    /// Scatter matrices: sum of (x - mean)(x - mean)^T per class.
    scatters: Vec<DMatrix<f64>>,
}

fn class_stats(train: &Dataset) -> ClassStats {
    let (labels, idx) = train.class_indices();
    let k = labels.len();
    let l = train.n_features();
    let n = train.n_rows();
    let mut counts = vec![0usize; k];
    let mut sums = vec![DVector::zeros(l); k];
    for (r, &c) in idx.iter().enumerate() {
        counts[c] += 1;
        for f in 0..l {
            sums[c][f] += train.features[(r, f)];
        }
    }
    let means: Vec<DVector<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut scatters = vec![DMatrix::zeros(l, l); k];
    for (r, &c) in idx.iter().enumerate() {
        let mut d = DVector::zeros(l);
        for f in 0..l {
            d[f] = train.features[(r, f)] - means[c][f];
        }
        scatters[c] += &d * d.transpose();
    }
    let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
    ClassStats {
        labels,
        counts,
        priors,
        means,
        scatters,
    }
}

/// Adds a trace-scaled ridge when the covariance is not SPD or its
/// condition number exceeds the limit. Triggered only on degeneracy.
fn regularize(cov: &mut DMatrix<f64>, label: &str) {
    let l = cov.nrows();
    let eig = cov.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min <= 0.0 || max / min.max(f64::MIN_POSITIVE) > CONDITION_LIMIT {
        let ridge = RIDGE_LAMBDA * cov.trace() / l as f64;
        log::warn!("regularizing covariance of class {label} (min eig {min:.3e})");
        for i in 0..l {
            cov[(i, i)] += ridge;
        }
    }
}

/// Fits per-class priors, means, and unbiased covariances on a normalized
/// training set.
pub fn fit_qda(train: &Dataset, normalization: NormalizationStats) -> Result<QdaModel> {
    let stats = class_stats(train);
    let l = train.n_features();
    let mut covariances = Vec::with_capacity(stats.labels.len());
    for (c, label) in stats.labels.iter().enumerate() {
        if stats.counts[c] < l + 1 {
            return Err(Error::InsufficientSamples(label.clone()));
        }
        let mut cov = &stats.scatters[c] / (stats.counts[c] - 1) as f64;
        regularize(&mut cov, label);
        covariances.push(to_rows(&cov));
    }
    Ok(QdaModel {
        labels: stats.labels,
        priors: stats.priors,
        means: stats.means.iter().map(|m| m.as_slice().to_vec()).collect(),
        covariances,
        normalization,
    })
}

/// LDA: same as QDA but with one covariance pooled over classes with
/// weights (n_k - 1).
pub fn fit_lda(train: &Dataset, normalization: NormalizationStats) -> Result<LdaModel> {
    let stats = class_stats(train);
    let l = train.n_features();
    let n = train.n_rows();
    let k = stats.labels.len();
    for (c, label) in stats.labels.iter().enumerate() {
        if stats.counts[c] < l + 1 {
            return Err(Error::InsufficientSamples(label.clone()));
        }
    }
    let mut pooled = DMatrix::zeros(l, l);
    for s in &stats.scatters {
        pooled += s;
    }
    pooled /= (n - k) as f64;
    regularize(&mut pooled, "pooled");
    Ok(LdaModel {
        labels: stats.labels,
        priors: stats.priors,
        means: stats.means.iter().map(|m| m.as_slice().to_vec()).collect(),
        pooled_covariance: to_rows(&pooled),
        normalization,
    })
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// log N(z; mean, chol(cov)) up to full constants.
fn log_gaussian(z: &[f64], mean: &[f64], chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = z.len();
    let d = DVector::from_fn(l, |i, _| z[i] - mean[i]);
    let solved = chol.solve(&d);
    let maha = d.dot(&solved);
    let logdet: f64 = (0..l).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    -0.5 * (l as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + maha)
}

/// Posterior over classes from per-class log-densities and priors,
/// normalized with the log-sum-exp trick.
fn posteriors_from_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl QdaModel {
    /// Posterior vector for a normalized feature vector.
    pub fn posteriors(&self, z: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.labels.len())
            .map(|c| {
                let cov = from_rows(&self.covariances[c]);
                let chol = cov.cholesky().expect("covariance SPD after fit");
                self.priors[c].ln() + log_gaussian(z, &self.means[c], &chol)
            })
            .collect();
        posteriors_from_logs(&logs)
    }
}

impl LdaModel {
    pub fn posteriors(&self, z: &[f64]) -> Vec<f64> {
        let cov = from_rows(&self.pooled_covariance);
        let chol = cov.cholesky().expect("pooled covariance SPD after fit");
        let logs: Vec<f64> = (0..self.labels.len())
            .map(|c| self.priors[c].ln() + log_gaussian(z, &self.means[c], &chol))
            .collect();
        posteriors_from_logs(&logs)
    }
}
