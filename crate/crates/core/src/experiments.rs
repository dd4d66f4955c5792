//! Scripted accuracy studies: the reference case, single-parameter
//! variations, grid sweeps, the train/test frequency generalization study,
//! and the sample-size study. Reports are machine readable (JSON + CSV).

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{confusion, cross_validate, train_classifier, ClassifierKind, EvalReport};
use crate::dataset::{generate, split, Dataset, GenerationConfig};
use crate::error::Result;
use crate::lumped::DamageScenario;
use crate::rng::subseed;

pub const REFERENCE_DAMAGE: f64 = 0.20;
pub const REFERENCE_FREQUENCY_HZ: f64 = 3800.0;
pub const TRAIN_SAMPLES_PER_CLASS: usize = 200;
pub const VALIDATION_SAMPLES_PER_CLASS: usize = 100;
pub const CV_FOLDS: usize = 5;

/// One pipeline run within an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    /// What was varied, e.g. "damage" or "classifier".
    pub parameter: String,
    /// The varied value, e.g. "0.10" or "qda".
    pub value: String,
    pub seed: u64,
    /// Digest of the generating dataset config; regenerates the run.
    pub config_digest: String,
    pub accuracy: f64,
    pub is_reference: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<EvalReport>,
}

/// Accuracy statistics over the runs sharing one (parameter, value) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub parameter: String,
    pub value: String,
    pub runs: usize,
    pub mean_accuracy: f64,
    /// Standard deviation over mean; absent for a single run.
    pub accuracy_cov: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub master_seed: u64,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<Summary>,
}

impl ExperimentReport {
    fn assemble(experiment: &str, master_seed: u64, mut records: Vec<RunRecord>) -> Self {
        records.sort_by(|a, b| {
            (&a.parameter, &a.value, &a.config_digest)
                .cmp(&(&b.parameter, &b.value, &b.config_digest))
        });
        let mut summaries: Vec<Summary> = Vec::new();
        for r in &records {
            if let Some(s) = summaries
                .iter_mut()
                .find(|s| s.parameter == r.parameter && s.value == r.value)
            {
                s.runs += 1;
                s.mean_accuracy += r.accuracy;
            } else {
                summaries.push(Summary {
                    parameter: r.parameter.clone(),
                    value: r.value.clone(),
                    runs: 1,
                    mean_accuracy: r.accuracy,
                    accuracy_cov: None,
                });
            }
        }
        for s in &mut summaries {
            s.mean_accuracy /= s.runs as f64;
            if s.runs >= 2 {
                let var = records
                    .iter()
                    .filter(|r| r.parameter == s.parameter && r.value == s.value)
                    .map(|r| (r.accuracy - s.mean_accuracy).powi(2))
                    .sum::<f64>()
                    / (s.runs - 1) as f64;
                s.accuracy_cov = Some(var.sqrt() / s.mean_accuracy);
            }
        }
        Self {
            experiment: experiment.to_string(),
            master_seed,
            records,
            summaries,
        }
    }

    pub fn accuracy_of(&self, parameter: &str, value: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.parameter == parameter && s.value == value)
            .map(|s| s.mean_accuracy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat summary: experiment, parameter, value, accuracy_mean, accuracy_cov.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,parameter,value,accuracy_mean,accuracy_cov\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{:.6},{}\n",
                self.experiment,
                s.parameter,
                s.value,
                s.mean_accuracy,
                s.accuracy_cov
                    .map(|c| format!("{c:.6}"))
                    .unwrap_or_default()
            ));
        }
        out
    }

    /// Writes `<dir>/<experiment>_seed<seed>.json` and `.csv` atomically.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let stem = format!("{}_seed{}", self.experiment, self.master_seed);
        crate::dataset::atomic_write(
            &dir.join(format!("{stem}.json")),
            self.to_json()?.as_bytes(),
        )?;
        crate::dataset::atomic_write(&dir.join(format!("{stem}.csv")), self.to_csv().as_bytes())
    }
}

/// The reference dataset recipe: all six scenarios at the given damage,
/// excitation at the given frequency, defaults elsewhere.
pub fn pipeline_config(
    damage: f64,
    frequency_hz: f64,
    samples_per_class: usize,
    master_seed: u64,
) -> GenerationConfig {
    let mut scenarios = vec![DamageScenario::healthy()];
    for i in 1..=5 {
        scenarios.push(DamageScenario::damaged(i, damage).expect("valid damage"));
    }
    GenerationConfig {
        scenarios,
        samples_per_scenario: samples_per_class,
        excitation_frequency_hz: frequency_hz,
        master_seed,
        ..Default::default()
    }
}

fn reference_train_config(seed: u64) -> GenerationConfig {
    pipeline_config(
        REFERENCE_DAMAGE,
        REFERENCE_FREQUENCY_HZ,
        TRAIN_SAMPLES_PER_CLASS,
        subseed(seed, "train"),
    )
}

/// generate -> 5-fold CV for one config.
fn cv_run(cfg: &GenerationConfig, kind: ClassifierKind, seed: u64) -> Result<(f64, String)> {
    let data = generate(cfg)?;
    let acc = cross_validate(&data, CV_FOLDS, kind, subseed(seed, "cv"))?;
    Ok((acc, cfg.digest()))
}

/// Reference case: Table-1 style cross-validation for the four classifiers
/// plus a held-out QDA confusion matrix on a fresh validation set.
pub fn run_reference(seed: u64) -> Result<ExperimentReport> {
    let train_cfg = reference_train_config(seed);
    let train = generate(&train_cfg)?;
    let digest = train_cfg.digest();

    let kinds = [
        ClassifierKind::Qda,
        ClassifierKind::Lda,
        ClassifierKind::Knn,
        ClassifierKind::Tree,
    ];
    let mut records: Vec<RunRecord> = kinds
        .par_iter()
        .map(|&kind| {
            let acc = cross_validate(&train, CV_FOLDS, kind, subseed(seed, "cv"))?;
            Ok(RunRecord {
                parameter: "classifier".into(),
                value: kind.to_string(),
                seed,
                config_digest: digest.clone(),
                accuracy: acc,
                is_reference: kind == ClassifierKind::Qda,
                confusion: None,
            })
        })
        .collect::<Result<_>>()?;

    let model = train_classifier(ClassifierKind::Qda, &train)?;
    let val_cfg = pipeline_config(
        REFERENCE_DAMAGE,
        REFERENCE_FREQUENCY_HZ,
        VALIDATION_SAMPLES_PER_CLASS,
        subseed(seed, "validation"),
    );
    let val = generate(&val_cfg)?;
    let report = confusion(&model, &val)?;
    records.push(RunRecord {
        parameter: "confusion".into(),
        value: "qda".into(),
        seed,
        config_digest: val_cfg.digest(),
        accuracy: report.accuracy,
        is_reference: true,
        confusion: Some(report),
    });

    Ok(ExperimentReport::assemble("reference", seed, records))
}

/// The named single-parameter variations, each a full
/// generate -> cross-validate pipeline, with the reference case included.
pub fn sweep_variations(seed: u64) -> Result<ExperimentReport> {
    let base = |tag: &str| {
        pipeline_config(
            REFERENCE_DAMAGE,
            REFERENCE_FREQUENCY_HZ,
            TRAIN_SAMPLES_PER_CLASS,
            subseed(seed, tag),
        )
    };
    let mut cases: Vec<(String, GenerationConfig, bool)> = Vec::new();
    cases.push(("reference".into(), reference_train_config(seed), true));
    cases.push((
        "damage_10pct".into(),
        pipeline_config(0.10, REFERENCE_FREQUENCY_HZ, TRAIN_SAMPLES_PER_CLASS, subseed(seed, "damage_10pct")),
        false,
    ));
    let mut cfg = base("sensors_2_6");
    cfg.sensor_dofs = vec![2, 3, 4, 5, 6];
    cases.push(("sensors_2_6".into(), cfg, false));
    let mut cfg = base("noise_2sigma");
    cfg.noise_sigma_m *= 2.0;
    cases.push(("noise_2sigma".into(), cfg, false));
    // "more uncertainty" widens every uniform variable: the parameters
    // as well as the damage and frequency fluctuations
    let mut cfg = base("bounds_10pct");
    cfg.uncertainty.bound_fraction = 0.10;
    cfg.fluctuation_fraction = 0.10;
    cases.push(("bounds_10pct".into(), cfg, false));
    cases.push((
        "frequency_7000".into(),
        pipeline_config(REFERENCE_DAMAGE, 7000.0, TRAIN_SAMPLES_PER_CLASS, subseed(seed, "frequency_7000")),
        false,
    ));
    let mut cfg = base("force_dof_1");
    cfg.excitation.dof_index = 1;
    cases.push(("force_dof_1".into(), cfg, false));

    let records: Vec<RunRecord> = cases
        .par_iter()
        .map(|(name, cfg, is_reference)| {
            let (accuracy, config_digest) = cv_run(cfg, ClassifierKind::Qda, seed)?;
            Ok(RunRecord {
                parameter: "variation".into(),
                value: name.clone(),
                seed,
                config_digest,
                accuracy,
                is_reference: *is_reference,
                confusion: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::assemble("variations", seed, records))
}

pub fn default_damage_levels() -> Vec<f64> {
    vec![0.05, 0.10, 0.15, 0.20, 0.25]
}

pub fn default_uncertainty_bounds() -> Vec<f64> {
    vec![0.025, 0.05, 0.10]
}

pub fn default_frequencies() -> Vec<f64> {
    let mut v: Vec<f64> = (0..=12).map(|i| 2000.0 + 500.0 * i as f64).collect();
    v.push(3800.0);
    v.sort_by(f64::total_cmp);
    v
}

pub fn default_sensor_subsets() -> Vec<Vec<usize>> {
    vec![
        vec![1, 2, 3, 4, 5, 6],
        vec![2, 3, 4, 5, 6],
        vec![1, 2, 4, 6],
        vec![1, 4, 6],
    ]
}

fn grid_sweep<T, F>(
    experiment: &str,
    parameter: &str,
    grid: &[T],
    seed: u64,
    make: F,
) -> Result<ExperimentReport>
where
    T: Sync,
    F: Fn(&T, u64) -> (String, GenerationConfig, bool) + Sync,
{
    if grid.is_empty() {
        return Err(crate::Error::InvalidArgument(format!(
            "empty grid for {parameter} sweep"
        )));
    }
    let records: Vec<RunRecord> = grid
        .par_iter()
        .map(|point| {
            let (value, cfg, is_reference) = make(point, seed);
            let (accuracy, config_digest) = cv_run(&cfg, ClassifierKind::Qda, seed)?;
            Ok(RunRecord {
                parameter: parameter.into(),
                value,
                seed,
                config_digest,
                accuracy,
                is_reference,
                confusion: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::assemble(experiment, seed, records))
}

/// Accuracy versus damage severity.
pub fn sweep_damage(levels: &[f64], seed: u64) -> Result<ExperimentReport> {
    grid_sweep("damage", "damage", levels, seed, |&d, seed| {
        let tag = format!("damage-{d}");
        let is_ref = d == REFERENCE_DAMAGE;
        let master = if is_ref { subseed(seed, "train") } else { subseed(seed, &tag) };
        (
            format!("{d:.3}"),
            pipeline_config(d, REFERENCE_FREQUENCY_HZ, TRAIN_SAMPLES_PER_CLASS, master),
            is_ref,
        )
    })
}

/// Accuracy versus parametric uncertainty bounds.
pub fn sweep_uncertainty(bounds: &[f64], seed: u64) -> Result<ExperimentReport> {
    grid_sweep("uncertainty", "bound_fraction", bounds, seed, |&b, seed| {
        let is_ref = b == 0.05;
        let master = if is_ref {
            subseed(seed, "train")
        } else {
            subseed(seed, &format!("bounds-{b}"))
        };
        let mut cfg = pipeline_config(
            REFERENCE_DAMAGE,
            REFERENCE_FREQUENCY_HZ,
            TRAIN_SAMPLES_PER_CLASS,
            master,
        );
        cfg.uncertainty.bound_fraction = b;
        (format!("{b:.3}"), cfg, is_ref)
    })
}

/// Accuracy versus excitation frequency.
pub fn sweep_frequency(freqs: &[f64], seed: u64) -> Result<ExperimentReport> {
    grid_sweep("frequency", "frequency_hz", freqs, seed, |&f, seed| {
        let is_ref = f == REFERENCE_FREQUENCY_HZ;
        let master = if is_ref {
            subseed(seed, "train")
        } else {
            subseed(seed, &format!("freq-{f}"))
        };
        (
            format!("{f:.0}"),
            pipeline_config(REFERENCE_DAMAGE, f, TRAIN_SAMPLES_PER_CLASS, master),
            is_ref,
        )
    })
}

/// Accuracy versus sensor subset.
pub fn sweep_sensors(subsets: &[Vec<usize>], seed: u64) -> Result<ExperimentReport> {
    grid_sweep("sensors", "sensor_dofs", subsets, seed, |subset, seed| {
        let value = subset
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("+");
        let is_ref = *subset == vec![1, 2, 3, 4, 5, 6];
        let master = if is_ref {
            subseed(seed, "train")
        } else {
            subseed(seed, &format!("sensors-{value}"))
        };
        let mut cfg = pipeline_config(
            REFERENCE_DAMAGE,
            REFERENCE_FREQUENCY_HZ,
            TRAIN_SAMPLES_PER_CLASS,
            master,
        );
        cfg.sensor_dofs = subset.clone();
        (value, cfg, is_ref)
    })
}

pub fn default_generalization_frequencies() -> Vec<f64> {
    vec![3600.0, 3800.0, 4000.0]
}

/// Trains at each train frequency and evaluates on fresh validation sets
/// at each test frequency, in three variants per pair:
/// `train*_test*` (fluctuating train and test), `fixed_train*_test*`
/// (frequency fluctuation off on both sides), and `mixed_train*_fixedtest*`
/// (fluctuating training, fixed-frequency test).
pub fn generalization_study(
    train_freqs: &[f64],
    test_freqs: &[f64],
    seed: u64,
) -> Result<ExperimentReport> {
    if train_freqs.is_empty() || test_freqs.is_empty() {
        return Err(crate::Error::InvalidArgument(
            "empty generalization frequency grid".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = train_freqs
        .iter()
        .flat_map(|&ftr| test_freqs.iter().map(move |&fte| (ftr, fte)))
        .collect();

    let records: Vec<Vec<RunRecord>> = pairs
        .par_iter()
        .map(|&(ftr, fte)| {
            let mut out = Vec::new();
            for (variant, fluct_train, fluct_test) in [
                ("train{}_test{}", true, true),
                ("fixed_train{}_test{}", false, false),
                ("mixed_train{}_fixedtest{}", true, false),
            ] {
                let mut train_cfg = pipeline_config(
                    REFERENCE_DAMAGE,
                    ftr,
                    TRAIN_SAMPLES_PER_CLASS,
                    subseed(seed, &format!("gen-train-{ftr}-{fluct_train}")),
                );
                train_cfg.frequency_fluctuation = fluct_train;
                let mut test_cfg = pipeline_config(
                    REFERENCE_DAMAGE,
                    fte,
                    VALIDATION_SAMPLES_PER_CLASS,
                    subseed(seed, &format!("gen-test-{fte}-{fluct_test}")),
                );
                test_cfg.frequency_fluctuation = fluct_test;

                let model = train_classifier(ClassifierKind::Qda, &generate(&train_cfg)?)?;
                let report = confusion(&model, &generate(&test_cfg)?)?;
                let value = variant
                    .replacen("{}", &format!("{ftr:.0}"), 1)
                    .replacen("{}", &format!("{fte:.0}"), 1);
                out.push(RunRecord {
                    parameter: "generalization".into(),
                    value,
                    seed,
                    config_digest: format!("{}:{}", train_cfg.digest(), test_cfg.digest()),
                    accuracy: report.accuracy,
                    is_reference: ftr == REFERENCE_FREQUENCY_HZ
                        && fte == REFERENCE_FREQUENCY_HZ
                        && fluct_train
                        && fluct_test,
                    confusion: None,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::assemble(
        "generalization",
        seed,
        records.into_iter().flatten().collect(),
    ))
}

pub fn default_sample_size_grid() -> Vec<usize> {
    vec![90, 450, 900, 1800]
}

pub const DEFAULT_SAMPLE_SIZE_REPETITIONS: usize = 100;

/// Mean accuracy and coefficient of variation per total dataset size, over
/// repeated generate -> 2/3-1/3 split -> train -> validate runs.
pub fn sample_size_study(
    total_points_grid: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if total_points_grid.is_empty() || repetitions == 0 {
        return Err(crate::Error::InvalidArgument(
            "sample size study needs a nonempty grid and at least 1 repetition".into(),
        ));
    }
    let jobs: Vec<(usize, usize)> = total_points_grid
        .iter()
        .flat_map(|&total| (0..repetitions).map(move |rep| (total, rep)))
        .collect();
    for &total in total_points_grid {
        if total % 6 != 0 {
            log::warn!(
                "total {total} not divisible into 6 balanced classes; using {} per class",
                total / 6
            );
        }
    }
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(total, rep)| {
            let per_class = total / 6;
            if per_class < 9 {
                return Err(crate::Error::InvalidArgument(format!(
                    "total {total} leaves fewer than 9 samples per class"
                )));
            }
            let tag = format!("samplesize-{total}-{rep}");
            let cfg = pipeline_config(
                REFERENCE_DAMAGE,
                REFERENCE_FREQUENCY_HZ,
                per_class,
                subseed(seed, &tag),
            );
            let data = generate(&cfg)?;
            let (train, val) = split(&data, 2.0 / 3.0, subseed(seed, &format!("{tag}-split")))?;
            let model = train_classifier(ClassifierKind::Qda, &train)?;
            let report = confusion(&model, &val)?;
            Ok(RunRecord {
                parameter: "total_points".into(),
                value: total.to_string(),
                seed,
                config_digest: cfg.digest(),
                accuracy: report.accuracy,
                is_reference: total == 1800,
                confusion: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::assemble("samplesize", seed, records))
}

/// Self-consistency diagnostic used in tests: pooled standard deviation
/// separation between two class means of one feature.
pub fn class_mean_separation(data: &Dataset, feature: usize, class_a: &str, class_b: &str) -> f64 {
    let pick = |class: &str| -> Vec<f64> {
        (0..data.n_rows())
            .filter(|&r| data.labels[r] == class)
            .map(|r| data.features[(r, feature)])
            .collect()
    };
    let a = pick(class_a);
    let b = pick(class_b);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    let pooled = (((a.len() - 1) as f64 * var(&a, ma) + (b.len() - 1) as f64 * var(&b, mb))
        / (a.len() + b.len() - 2) as f64)
        .sqrt();
    (ma - mb).abs() / pooled
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_are_reproducible() {
        let a = sweep_damage(&[0.10, 0.20], 3).unwrap();
        let b = sweep_damage(&[0.20, 0.10], 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.accuracy, rb.accuracy);
            assert_eq!(ra.config_digest, rb.config_digest);
        }
    }

    #[test]
    fn reference_row_flagged_in_sweeps() {
        let report = sweep_damage(&[0.10, 0.20], 4).unwrap();
        let reference: Vec<_> = report.records.iter().filter(|r| r.is_reference).collect();
        assert_eq!(reference.len(), 1);
        assert_eq!(reference[0].value, "0.200");
    }

    #[test]
    fn single_repetition_has_no_cov() {
        let report = sample_size_study(&[90], 1, 5).unwrap();
        assert_eq!(report.summaries.len(), 1);
        assert!(report.summaries[0].accuracy_cov.is_none());
        let report = sample_size_study(&[90], 3, 5).unwrap();
        assert!(report.summaries[0].accuracy_cov.is_some());
    }

    #[test]
    fn csv_summary_layout() {
        let report = sweep_damage(&[0.20], 6).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,parameter,value,accuracy_mean,accuracy_cov"
        );
        assert!(lines.next().unwrap().starts_with("damage,damage,0.200,"));
    }
}
