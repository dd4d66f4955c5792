//! From-scratch classifiers over sensor-amplitude features: quadratic and
//! linear discriminants, 1-nearest-neighbor, and a Gini decision tree,
//! plus cross-validation and confusion-matrix evaluation.

mod discriminant;
mod eval;
mod knn;
mod tree;

pub use discriminant::{fit_lda, fit_qda, LdaModel, QdaModel};
pub use eval::{confusion, cross_validate, ConfusionMatrix, EvalReport};
pub use knn::{fit_knn, KnnModel};
pub use tree::{fit_tree, TreeModel};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{apply_normalization, fit_normalization, Dataset, NormalizationStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Qda,
    Lda,
    Knn,
    Tree,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qda" => Ok(Self::Qda),
            "lda" => Ok(Self::Lda),
            "knn" => Ok(Self::Knn),
            "tree" => Ok(Self::Tree),
            other => Err(Error::InvalidArgument(format!(
                "unknown classifier '{other}' (expected qda, lda, knn, or tree)"
            ))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Qda => "qda",
            Self::Lda => "lda",
            Self::Knn => "knn",
            Self::Tree => "tree",
        };
        f.write_str(s)
    }
}

/// Outcome of classifying one feature vector.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    /// Posterior (or empirical proportion, for knn/tree) per class,
    /// normalized to sum 1, in model label order.
    pub posteriors: Vec<f64>,
}

/// A trained classifier of any kind, with its normalization attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Qda(QdaModel),
    Lda(LdaModel),
    Knn(KnnModel),
    Tree(TreeModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Qda(_) => ClassifierKind::Qda,
            Self::Lda(_) => ClassifierKind::Lda,
            Self::Knn(_) => ClassifierKind::Knn,
            Self::Tree(_) => ClassifierKind::Tree,
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Self::Qda(m) => &m.labels,
            Self::Lda(m) => &m.labels,
            Self::Knn(m) => &m.labels,
            Self::Tree(m) => &m.labels,
        }
    }

    pub fn normalization(&self) -> &NormalizationStats {
        match self {
            Self::Qda(m) => &m.normalization,
            Self::Lda(m) => &m.normalization,
            Self::Knn(m) => &m.normalization,
            Self::Tree(m) => &m.normalization,
        }
    }

    pub fn n_features(&self) -> usize {
        self.normalization().means.len()
    }

    /// Classifies a raw (unnormalized) feature vector; the model applies
    /// its own normalization.
    pub fn predict(&self, x_raw: &[f64]) -> Result<Prediction> {
        if x_raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "feature vector contains non-finite values".into(),
            ));
        }
        let z = self.normalization().transform_row(x_raw)?;
        let posteriors = match self {
            Self::Qda(m) => m.posteriors(&z),
            Self::Lda(m) => m.posteriors(&z),
            Self::Knn(m) => m.posteriors(&z),
            Self::Tree(m) => m.posteriors(&z),
        };
        let class_index = argmax(&posteriors);
        Ok(Prediction {
            class_index,
            label: self.labels()[class_index].clone(),
            posteriors,
        })
    }
}

/// Ties break toward the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fits normalization on the raw training data, then the classifier.
pub fn train_classifier(kind: ClassifierKind, raw_train: &Dataset) -> Result<Model> {
    let stats = fit_normalization(raw_train)?;
    let normalized = apply_normalization(&stats, raw_train)?;
    Ok(match kind {
        ClassifierKind::Qda => Model::Qda(fit_qda(&normalized, stats)?),
        ClassifierKind::Lda => Model::Lda(fit_lda(&normalized, stats)?),
        ClassifierKind::Knn => Model::Knn(fit_knn(&normalized, stats)?),
        ClassifierKind::Tree => Model::Tree(fit_tree(&normalized, stats)?),
    })
}

/// Model artifact as persisted to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    #[serde(flatten)]
    pub model: Model,
    /// Digest of the generating config of the training data, if known.
    pub training_config_digest: Option<String>,
}

pub fn save_model(model: &Model, digest: Option<String>, path: &Path) -> Result<()> {
    let saved = SavedModel {
        model: model.clone(),
        training_config_digest: digest,
    };
    let json = serde_json::to_string_pretty(&saved)?;
    crate::dataset::atomic_write(path, json.as_bytes())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Per-class mean of one feature, used by separation diagnostics.
pub(crate) fn class_rows(data: &Dataset) -> (Vec<String>, Vec<Vec<usize>>) {
    let (classes, idx) = data.class_indices();
    let mut rows = vec![Vec::new(); classes.len()];
    for (r, &c) in idx.iter().enumerate() {
        rows[c].push(r);
    }
    (classes, rows)
}
