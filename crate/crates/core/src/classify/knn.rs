//! 1-nearest-neighbor with Euclidean distance in normalized feature space.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub labels: Vec<String>,
    /// Stored normalized training rows.
    pub features: Vec<Vec<f64>>,
    /// Class index per stored row.
    pub targets: Vec<usize>,
    pub normalization: NormalizationStats,
}

/// Stores the normalized training set verbatim.
pub fn fit_knn(train: &Dataset, normalization: NormalizationStats) -> Result<KnnModel> {
    if train.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (labels, targets) = train.class_indices();
    let features = (0..train.n_rows()).map(|r| train.row(r)).collect();
    Ok(KnnModel {
        labels,
        features,
        targets,
        normalization,
    })
}

impl KnnModel {
    /// Indicator vector of the nearest stored point's class. Ties on
    /// distance break toward the earliest stored row.
    pub fn posteriors(&self, z: &[f64]) -> Vec<f64> {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, row) in self.features.iter().enumerate() {
            let d2: f64 = row.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        let mut p = vec![0.0; self.labels.len()];
        p[self.targets[best]] = 1.0;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn toy() -> Dataset {
        let features = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.1, 0.0, 2.0, 2.0, 2.1, 2.0]);
        Dataset {
            features,
            labels: vec!["a".into(), "a".into(), "b".into(), "b".into()],
            feature_names: vec!["f0".into(), "f1".into()],
            config: None,
        }
    }

    fn identity_stats() -> NormalizationStats {
        NormalizationStats {
            means: vec![0.0, 0.0],
            stds: vec![1.0, 1.0],
        }
    }

    #[test]
    fn stored_point_returns_its_own_label() {
        let model = fit_knn(&toy(), identity_stats()).unwrap();
        let p = model.posteriors(&[2.0, 2.0]);
        assert_eq!(p, vec![0.0, 1.0]);
        let p = model.posteriors(&[0.1, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn nearest_wins() {
        let model = fit_knn(&toy(), identity_stats()).unwrap();
        assert_eq!(model.posteriors(&[0.5, 0.5]), vec![1.0, 0.0]);
        assert_eq!(model.posteriors(&[1.8, 1.8]), vec![0.0, 1.0]);
    }
}
