//! Stratified k-fold cross-validation and confusion-matrix evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{train_classifier, ClassifierKind, Model};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

/// True-class x predicted-class counts; rows are true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// CSV with a header row and a leading label column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for c in &self.counts[i] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Confusion matrix plus the derived rates the damage analysis reads off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Per-class recall (diagonal over row sum), model label order.
    pub recalls: Vec<f64>,
    /// 1 - healthy recall, when a "healthy" class exists.
    pub false_positive_rate: Option<f64>,
    /// Per class: fraction of its rows predicted "healthy" (0 for the
    /// healthy class itself; absent without a healthy class).
    pub false_negative_to_healthy: Option<Vec<f64>>,
}

/// Evaluates `model` on raw validation features.
pub fn confusion(model: &Model, validation: &Dataset) -> Result<EvalReport> {
    if validation.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty validation set".into()));
    }
    let labels = model.labels().to_vec();
    let k = labels.len();
    let mut counts = vec![vec![0usize; k]; k];
    for r in 0..validation.n_rows() {
        let truth = labels
            .iter()
            .position(|l| *l == validation.labels[r])
            .ok_or_else(|| Error::UnknownLabel(validation.labels[r].clone()))?;
        let pred = model.predict(&validation.row(r))?.class_index;
        counts[truth][pred] += 1;
    }
    let confusion = ConfusionMatrix { labels, counts };
    let accuracy = confusion.accuracy();
    let recalls: Vec<f64> = (0..k)
        .map(|i| {
            let row: usize = confusion.counts[i].iter().sum();
            if row == 0 {
                f64::NAN
            } else {
                confusion.counts[i][i] as f64 / row as f64
            }
        })
        .collect();
    let healthy = confusion.labels.iter().position(|l| l == "healthy");
    let false_positive_rate = healthy.map(|h| 1.0 - recalls[h]);
    let false_negative_to_healthy = healthy.map(|h| {
        (0..k)
            .map(|i| {
                if i == h {
                    0.0
                } else {
                    let row: usize = confusion.counts[i].iter().sum();
                    if row == 0 {
                        f64::NAN
                    } else {
                        confusion.counts[i][h] as f64 / row as f64
                    }
                }
            })
            .collect()
    });
    Ok(EvalReport {
        confusion,
        accuracy,
        recalls,
        false_positive_rate,
        false_negative_to_healthy,
    })
}

/// Stratified k-fold cross-validation on raw data. Normalization is refit
/// inside each fold on its training portion. Returns the mean fold
/// accuracy; deterministic given (data, seed).
pub fn cross_validate(
    data: &Dataset,
    folds: usize,
    kind: ClassifierKind,
    seed: u64,
) -> Result<f64> {
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    let (classes, rows_per_class) = crate::classify::class_rows(data);
    for (c, rows) in rows_per_class.iter().enumerate() {
        if rows.len() < folds {
            return Err(Error::InsufficientSamples(classes[c].clone()));
        }
    }

    // fold id per row, stratified within each class
    let mut fold_of = vec![0usize; data.n_rows()];
    for (c, rows) in rows_per_class.iter().enumerate() {
        let mut shuffled = rows.clone();
        let mut rng = substream(seed, Domain::CrossValidation, c as u64);
        crate::dataset::shuffle(&mut shuffled, &mut rng);
        for (pos, &r) in shuffled.iter().enumerate() {
            fold_of[r] = pos % folds;
        }
    }

    let accuracies: Result<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let test_rows: Vec<usize> =
                (0..data.n_rows()).filter(|&r| fold_of[r] == f).collect();
            let train_rows: Vec<usize> =
                (0..data.n_rows()).filter(|&r| fold_of[r] != f).collect();
            let model = train_classifier(kind, &data.subset(&train_rows))?;
            let mut correct = 0usize;
            for &r in &test_rows {
                let pred = model.predict(&data.row(r))?;
                if pred.label == data.labels[r] {
                    correct += 1;
                }
            }
            Ok(correct as f64 / test_rows.len() as f64)
        })
        .collect();
    let accuracies = accuracies?;
    Ok(accuracies.iter().sum::<f64>() / folds as f64)
}
