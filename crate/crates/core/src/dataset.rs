//! Labeled dataset construction: Monte Carlo over the stochastic lumped
//! model, damage and excitation-frequency fluctuation, sensor noise,
//! normalization, stratified splitting, and CSV persistence.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{frf_solve, HarmonicLoad};
use crate::error::{Error, Result};
use crate::lumped::{
    apply_damage, build_lumped, realize_stochastic, DamageScenario, LumpedParameters,
    UncertaintyConfig, DOF_COUNT,
};
use crate::rng::{substream_retry, Domain};

/// Full recipe for one stochastic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<DamageScenario>,
    #[serde(default = "default_samples")]
    pub samples_per_scenario: usize,
    #[serde(default = "default_excitation")]
    pub excitation: HarmonicLoad,
    #[serde(default = "default_frequency")]
    pub excitation_frequency_hz: f64,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
    #[serde(default = "default_true")]
    pub damage_fluctuation: bool,
    #[serde(default = "default_true")]
    pub frequency_fluctuation: bool,
    /// Half-width of the damage and frequency fluctuation intervals,
    /// e.g. 0.05 for Uniform[0.95x, 1.05x].
    #[serde(default = "default_fluctuation")]
    pub fluctuation_fraction: f64,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma_m: f64,
    #[serde(default = "default_sensors")]
    pub sensor_dofs: Vec<usize>,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_scenarios() -> Vec<DamageScenario> {
    let mut v = vec![DamageScenario::healthy()];
    for i in 1..=5 {
        v.push(DamageScenario::damaged(i, 0.20).unwrap());
    }
    v
}

fn default_samples() -> usize {
    300
}

fn default_excitation() -> HarmonicLoad {
    HarmonicLoad {
        dof_index: 6,
        magnitude: 1e4,
    }
}

fn default_frequency() -> f64 {
    3800.0
}

fn default_fluctuation() -> f64 {
    0.05
}

fn default_noise_sigma() -> f64 {
    1e-6
}

fn default_sensors() -> Vec<usize> {
    (1..=6).collect()
}

fn default_true() -> bool {
    true
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            scenarios: default_scenarios(),
            samples_per_scenario: default_samples(),
            excitation: default_excitation(),
            excitation_frequency_hz: default_frequency(),
            uncertainty: UncertaintyConfig::default(),
            damage_fluctuation: true,
            frequency_fluctuation: true,
            fluctuation_fraction: default_fluctuation(),
            noise_sigma_m: default_noise_sigma(),
            sensor_dofs: default_sensors(),
            master_seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidArgument("no scenarios configured".into()));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        let mut labels: Vec<String> = self.scenarios.iter().map(|s| s.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.scenarios.len() {
            return Err(Error::InvalidArgument("scenario labels not unique".into()));
        }
        if self.samples_per_scenario < 1 {
            return Err(Error::InvalidArgument(
                "samples_per_scenario must be >= 1".into(),
            ));
        }
        if self.sensor_dofs.is_empty() {
            return Err(Error::InvalidArgument("sensor set is empty".into()));
        }
        let mut sorted = self.sensor_dofs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sensor_dofs.len() {
            return Err(Error::InvalidArgument("duplicate sensor DOFs".into()));
        }
        if sorted.iter().any(|&d| d < 1 || d > DOF_COUNT) {
            return Err(Error::InvalidArgument(format!(
                "sensor DOFs must be within 1..={DOF_COUNT}"
            )));
        }
        if self.excitation.dof_index < 1 || self.excitation.dof_index > DOF_COUNT {
            return Err(Error::InvalidArgument(format!(
                "excitation DOF must be within 1..={DOF_COUNT}"
            )));
        }
        if !(self.excitation.magnitude > 0.0) {
            return Err(Error::InvalidArgument("excitation magnitude must be > 0".into()));
        }
        if !(self.excitation_frequency_hz > 0.0) {
            return Err(Error::InvalidArgument(
                "excitation frequency must be > 0".into(),
            ));
        }
        if !(self.noise_sigma_m >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        if !(self.fluctuation_fraction >= 0.0 && self.fluctuation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fluctuation fraction must be in [0, 1), got {}",
                self.fluctuation_fraction
            )));
        }
        self.uncertainty.validate()?;
        Ok(())
    }

    /// Sensor DOFs in ascending order; defines the feature column order.
    pub fn sorted_sensors(&self) -> Vec<usize> {
        let mut s = self.sensor_dofs.clone();
        s.sort_unstable();
        s
    }

    /// Hex digest of the canonical JSON form, used to identify runs.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Labeled feature matrix: one row per sample, one column per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
    pub config: Option<GenerationConfig>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Distinct labels in order of first appearance.
    pub fn class_labels(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for l in &self.labels {
            if !seen.contains(l) {
                seen.push(l.clone());
            }
        }
        seen
    }

    /// Label of each row as an index into [`Self::class_labels`].
    pub fn class_indices(&self) -> (Vec<String>, Vec<usize>) {
        let classes = self.class_labels();
        let idx = self
            .labels
            .iter()
            .map(|l| classes.iter().position(|c| c == l).unwrap())
            .collect();
        (classes, idx)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = DMatrix::zeros(rows.len(), self.n_features());
        let mut labels = Vec::with_capacity(rows.len());
        for (out, &r) in rows.iter().enumerate() {
            features.set_row(out, &self.features.row(r));
            labels.push(self.labels[r].clone());
        }
        Dataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
            config: self.config.clone(),
        }
    }
}

/// One Monte Carlo draw: realizes the stochastic model, fluctuates damage
/// and excitation frequency, solves the FRF, and reads noisy sensors.
fn generate_sample(
    config: &GenerationConfig,
    sensors: &[usize],
    scenario: &DamageScenario,
    sample_index: u64,
) -> Result<Vec<f64>> {
    let nominal = LumpedParameters::nominal();
    let noise = if config.noise_sigma_m > 0.0 {
        Some(
            Normal::new(0.0, config.noise_sigma_m)
                .map_err(|e| Error::InvalidArgument(format!("bad noise sigma: {e}")))?,
        )
    } else {
        None
    };

    let mut retry = 0u64;
    loop {
        let mut rng =
            substream_retry(config.master_seed, Domain::DatasetSample, sample_index, retry);
        let params = realize_stochastic(&nominal, &config.uncertainty, &mut rng);

        let eps = config.fluctuation_fraction;
        let severity = if config.damage_fluctuation && scenario.severity > 0.0 && eps > 0.0 {
            rng.gen_range((1.0 - eps) * scenario.severity..=(1.0 + eps) * scenario.severity)
                .min(1.0 - 1e-12)
        } else {
            scenario.severity
        };
        let fluctuated = DamageScenario {
            spring_index: scenario.spring_index,
            severity,
        };

        let freq = if config.frequency_fluctuation && eps > 0.0 {
            rng.gen_range(
                (1.0 - eps) * config.excitation_frequency_hz
                    ..=(1.0 + eps) * config.excitation_frequency_hz,
            )
        } else {
            config.excitation_frequency_hz
        };

        let springs = apply_damage(&fluctuated, params.stiffness)?;
        let sys = build_lumped(&params, &springs)?;
        match frf_solve(&sys, &params.damping, &config.excitation, &[freq]) {
            Ok(frf) => {
                let u = &frf.response[0];
                let features = sensors
                    .iter()
                    .map(|&dof| {
                        let mut mag = u[dof - 1].norm();
                        if let Some(dist) = &noise {
                            mag = (mag + dist.sample(&mut rng)).max(0.0);
                        }
                        mag
                    })
                    .collect();
                return Ok(features);
            }
            Err(Error::SingularAtFrequency(f)) => {
                log::warn!(
                    "singular solve at {f} Hz for sample {sample_index}; resampling (retry {})",
                    retry + 1
                );
                retry += 1;
                if retry > 100 {
                    return Err(Error::SingularAtFrequency(f));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn generate_impl(config: &GenerationConfig, parallel: bool) -> Result<Dataset> {
    config.validate()?;
    let sensors = config.sorted_sensors();
    let n = config.samples_per_scenario;

    let jobs: Vec<(usize, u64)> = config
        .scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, _)| (0..n).map(move |i| (s, (s * n + i) as u64)))
        .collect();

    let rows: Result<Vec<Vec<f64>>> = if parallel {
        jobs.par_iter()
            .map(|&(s, idx)| generate_sample(config, &sensors, &config.scenarios[s], idx))
            .collect()
    } else {
        jobs.iter()
            .map(|&(s, idx)| generate_sample(config, &sensors, &config.scenarios[s], idx))
            .collect()
    };
    let rows = rows?;

    let mut features = DMatrix::zeros(rows.len(), sensors.len());
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            features[(r, c)] = v;
        }
    }
    let labels = config
        .scenarios
        .iter()
        .flat_map(|sc| std::iter::repeat(sc.label()).take(n))
        .collect();
    Ok(Dataset {
        features,
        labels,
        feature_names: sensors.iter().map(|d| format!("sensor_{d}")).collect(),
        config: Some(config.clone()),
    })
}

/// Generates the labeled dataset for `config`. Deterministic in the master
/// seed; samples are drawn in parallel with per-sample substreams, so the
/// result is independent of scheduling.
pub fn generate(config: &GenerationConfig) -> Result<Dataset> {
    generate_impl(config, true)
}

/// Serial reference path for [`generate`]; produces identical output.
pub fn generate_serial(config: &GenerationConfig) -> Result<Dataset> {
    generate_impl(config, false)
}

/// Per-feature standardization constants fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Per-feature mean and standard deviation (n-1 denominator) over the
/// training rows.
pub fn fit_normalization(train: &Dataset) -> Result<NormalizationStats> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "normalization needs at least 2 rows".into(),
        ));
    }
    let mut means = Vec::with_capacity(train.n_features());
    let mut stds = Vec::with_capacity(train.n_features());
    for c in 0..train.n_features() {
        let col = train.features.column(c);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::DegenerateFeature(train.feature_names[c].clone()));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(NormalizationStats { means, stds })
}

impl NormalizationStats {
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// z' = (x - mean) / std per feature.
pub fn apply_normalization(stats: &NormalizationStats, data: &Dataset) -> Result<Dataset> {
    if data.n_features() != stats.means.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.means.len(),
            got: data.n_features(),
        });
    }
    let mut features = data.features.clone();
    for c in 0..features.ncols() {
        for r in 0..features.nrows() {
            features[(r, c)] = (features[(r, c)] - stats.means[c]) / stats.stds[c];
        }
    }
    Ok(Dataset {
        features,
        ..data.clone()
    })
}

/// Inverse of [`apply_normalization`].
pub fn invert_normalization(stats: &NormalizationStats, data: &Dataset) -> Result<Dataset> {
    if data.n_features() != stats.means.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.means.len(),
            got: data.n_features(),
        });
    }
    let mut features = data.features.clone();
    for c in 0..features.ncols() {
        for r in 0..features.nrows() {
            features[(r, c)] = features[(r, c)] * stats.stds[c] + stats.means[c];
        }
    }
    Ok(Dataset {
        features,
        ..data.clone()
    })
}

/// Stratified split: per label, shuffles rows with a seed-derived stream
/// and assigns `round(train_fraction * count)` of them to the training set.
/// The two parts are disjoint and their union is the input.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let classes = data.class_labels();
    let mut train_rows = Vec::new();
    let mut val_rows = Vec::new();
    for (ci, class) in classes.iter().enumerate() {
        let mut rows: Vec<usize> = (0..data.n_rows())
            .filter(|&r| &data.labels[r] == class)
            .collect();
        if rows.len() < 2 {
            return Err(Error::InsufficientSamples(class.clone()));
        }
        let mut rng = crate::rng::substream(seed, Domain::Split, ci as u64);
        shuffle(&mut rows, &mut rng);
        let take = ((train_fraction * rows.len() as f64).round() as usize)
            .clamp(1, rows.len() - 1);
        train_rows.extend_from_slice(&rows[..take]);
        val_rows.extend_from_slice(&rows[take..]);
    }
    train_rows.sort_unstable();
    val_rows.sort_unstable();
    Ok((data.subset(&train_rows), data.subset(&val_rows)))
}

/// Fisher-Yates with an explicit stream, used instead of `SliceRandom` so
/// the draw sequence is pinned by this crate.
pub(crate) fn shuffle<R: Rng>(v: &mut [usize], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// Writes `<path>` as CSV (`sensor_<dof>,...,label`, 17 significant digits)
/// plus a `<path>.meta.json` sidecar with the generating config. The write
/// is atomic (temp file then rename).
pub fn save(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&data.feature_names.join(","));
    out.push_str(",label\n");
    for r in 0..data.n_rows() {
        for c in 0..data.n_features() {
            out.push_str(&format!("{:.16e},", data.features[(r, c)]));
        }
        out.push_str(&data.labels[r]);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())?;
    if let Some(config) = &data.config {
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(config)?;
        atomic_write(&sidecar, json.as_bytes())?;
    }
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

/// Writes `bytes` to `path` via a temp file and rename, creating parent
/// directories as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile_in(dir, path)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    let tmp_path = tmp_path_for(path);
    fs::rename(&tmp_path, path)?;
    Ok(())
}

fn tmp_path_for(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tmp");
    std::path::PathBuf::from(s)
}

fn tempfile_in(dir: &Path, path: &Path) -> Result<fs::File> {
    let _ = dir;
    Ok(fs::File::create(tmp_path_for(path))?)
}

/// Reads a dataset written by [`save`]. A missing sidecar is tolerated:
/// the config comes back as unknown (`None`) with a warning.
pub fn load(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "label" {
        return Err(parse_err("header must end with 'label' column".into()));
    }
    let feature_names: Vec<String> = cols[..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let l = feature_names.len();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != l + 1 {
            return Err(parse_err(format!(
                "row {}: expected {} columns, got {}",
                lineno + 2,
                l + 1,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(l);
        for (c, field) in fields[..l].iter().enumerate() {
            let v: f64 = field.parse().map_err(|e| {
                parse_err(format!("row {}, column {}: {e}", lineno + 2, c + 1))
            })?;
            row.push(v);
        }
        rows.push(row);
        labels.push(fields[l].to_string());
    }

    let mut features = DMatrix::zeros(rows.len(), l);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            features[(r, c)] = v;
        }
    }

    let sidecar = sidecar_path(path);
    let config = if sidecar.exists() {
        let config: GenerationConfig = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
        let expected: Vec<String> = config
            .sorted_sensors()
            .iter()
            .map(|d| format!("sensor_{d}"))
            .collect();
        if expected != feature_names {
            return Err(parse_err(format!(
                "header {feature_names:?} does not match sidecar sensors {expected:?}"
            )));
        }
        Some(config)
    } else {
        log::warn!("no sidecar {sidecar:?}; dataset config unknown");
        None
    };

    Ok(Dataset {
        features,
        labels,
        feature_names,
        config,
    })
}
