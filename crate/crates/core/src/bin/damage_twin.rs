//! Command-line front end: modal tables, FRF traces, dataset generation,
//! classifier training and evaluation, experiment sweeps, and a damage
//! diagnosis mode for measured sensor amplitudes.
//!
//! Exit codes: 0 success, 2 configuration or parse errors, 3 numerical
//! failures, 4 damage detected by `diagnose`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use damage_twin::bar::{assemble_bar, measure_frf, BarProperties, MeasurementNoise};
use damage_twin::classify::{
    confusion, cross_validate, load_model, save_model, train_classifier, ClassifierKind,
};
use damage_twin::dataset::{atomic_write, generate, load, save, GenerationConfig};
use damage_twin::dynamics::{
    frequency_grid, frf_solve, modal_analysis, HarmonicLoad, SystemMatrices,
};
use damage_twin::experiments;
use damage_twin::lumped::{build_lumped, LumpedParameters, SpringStiffnesses};
use damage_twin::{Error, Result};

#[derive(Parser)]
#[command(name = "damage-twin", version, about = "Damage-detection digital twin for an axially vibrating structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// 40-element finite element bar (the emulated physical asset).
    Fem,
    /// 6-DOF lumped computational model.
    Lumped,
}

#[derive(Subcommand)]
enum Command {
    /// Print natural frequencies and modal damping ratios.
    Modal {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// How many modes to print (all by default).
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Compute an FRF trace over a frequency grid and write it as CSV.
    Frf(FrfArgs),
    /// Generate a labeled dataset from a stochastic model configuration.
    Generate {
        /// JSON configuration; defaults apply to omitted fields. Without
        /// this flag the built-in reference configuration is used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the master seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path; a `.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a dataset CSV and save the model as JSON.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        classifier: ClassifierArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified k-fold cross-validation accuracy on a dataset CSV.
    Crossval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a saved model on a labeled dataset; prints the confusion
    /// matrix and per-class recalls.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Optional path for the confusion matrix CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scripted experiment and write its JSON + CSV report.
    Sweep {
        #[arg(long, value_enum)]
        name: SweepName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the report files.
        #[arg(long)]
        out: PathBuf,
        /// Repetitions for the sample-size study.
        #[arg(long, default_value_t = experiments::DEFAULT_SAMPLE_SIZE_REPETITIONS)]
        repetitions: usize,
    },
    /// Classify measured sensor amplitudes with a saved model. Exits with
    /// code 4 when any row is diagnosed as damaged.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        /// CSV of raw sensor amplitudes, one row per measurement. A header
        /// row and a trailing `label` column are accepted and ignored.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct FrfArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// 1-based DOF of the harmonic point force.
    #[arg(long)]
    force_dof: usize,
    /// Force magnitude in newtons.
    #[arg(long, default_value_t = 1e4)]
    force_n: f64,
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,
    #[arg(long, default_value_t = 8000.0)]
    fmax: f64,
    #[arg(long, default_value_t = 801)]
    steps: usize,
    /// Additive magnitude noise (fem only); adds noisy columns to the CSV.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepName {
    Reference,
    Variations,
    Damage,
    Uncertainty,
    Frequency,
    Sensors,
    Generalization,
    Samplesize,
}

/// Thin wrapper so clap can parse classifier names through `FromStr`.
#[derive(Clone, Copy)]
struct ClassifierArg(ClassifierKind);

impl std::str::FromStr for ClassifierArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse::<ClassifierKind>()
            .map(ClassifierArg)
            .map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 for configuration and input problems, 3 for numerical failures.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidMassMatrix(_)
        | Error::ModalAnalysisFailed(_)
        | Error::SingularAtFrequency(_)
        | Error::InsufficientSamples(_)
        | Error::DegenerateFeature(_) => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Modal { model, modes } => cmd_modal(model, modes),
        Command::Frf(args) => cmd_frf(args),
        Command::Generate { config, seed, out } => cmd_generate(config.as_deref(), seed, &out),
        Command::Train {
            data,
            classifier,
            out,
        } => cmd_train(&data, classifier.0, &out),
        Command::Crossval {
            data,
            classifier,
            folds,
            seed,
        } => cmd_crossval(&data, classifier.0, folds, seed),
        Command::Evaluate { model, data, out } => cmd_evaluate(&model, &data, out.as_deref()),
        Command::Sweep {
            name,
            seed,
            out,
            repetitions,
        } => cmd_sweep(name, seed, &out, repetitions),
        Command::Diagnose { model, input } => cmd_diagnose(&model, &input),
    }
}

fn build_model(kind: ModelKind) -> Result<(SystemMatrices, damage_twin::dynamics::RayleighDamping)> {
    match kind {
        ModelKind::Fem => {
            let props = BarProperties::nominal();
            Ok((assemble_bar(&props)?, props.damping))
        }
        ModelKind::Lumped => {
            let p = LumpedParameters::nominal();
            Ok((
                build_lumped(&p, &SpringStiffnesses::uniform(p.stiffness))?,
                p.damping,
            ))
        }
    }
}

fn cmd_modal(model: ModelKind, modes: Option<usize>) -> Result<ExitCode> {
    let (sys, damping) = build_model(model)?;
    let modal = modal_analysis(&sys, &damping)?;
    let count = modes
        .unwrap_or(sys.dof_count())
        .min(modal.natural_frequencies_hz.len());
    println!("mode,frequency_hz,damping_ratio");
    for i in 0..count {
        println!(
            "{},{:.4},{:.6}",
            i + 1,
            modal.natural_frequencies_hz[i],
            modal.damping_ratios[i]
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_frf(args: FrfArgs) -> Result<ExitCode> {
    if args.noise_sigma.is_some() && args.model != ModelKind::Fem {
        return Err(Error::InvalidArgument(
            "--noise-sigma applies to the fem model only".into(),
        ));
    }
    let grid = frequency_grid(args.fmin, args.fmax, args.steps)?;
    let load = HarmonicLoad::new(args.force_dof, args.force_n)?;

    let (clean, noisy) = match (args.model, args.noise_sigma) {
        (ModelKind::Fem, Some(sigma)) => {
            let props = BarProperties::nominal();
            let noise = MeasurementNoise {
                sigma_m: sigma,
                seed: args.seed,
            };
            let out = measure_frf(&props, &load, &grid, &noise)?;
            (out.clean, Some(out.noisy_magnitudes))
        }
        _ => {
            let (sys, damping) = build_model(args.model)?;
            (frf_solve(&sys, &damping, &load, &grid)?, None)
        }
    };

    let n = clean.response[0].len();
    let mut csv = String::from("frequency_hz");
    for d in 1..=n {
        csv.push_str(&format!(",u{d}_re,u{d}_im,u{d}_mag"));
        if noisy.is_some() {
            csv.push_str(&format!(",u{d}_noisy"));
        }
    }
    csv.push('\n');
    for (i, &f) in clean.frequencies_hz.iter().enumerate() {
        csv.push_str(&format!("{f:.6}"));
        for d in 0..n {
            let u = clean.response[i][d];
            csv.push_str(&format!(",{:.10e},{:.10e},{:.10e}", u.re, u.im, u.norm()));
            if let Some(noisy) = &noisy {
                csv.push_str(&format!(",{:.10e}", noisy[i][d]));
            }
        }
        csv.push('\n');
    }
    match &args.out {
        Some(path) => atomic_write(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<ExitCode> {
    let mut cfg: GenerationConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        }
        None => GenerationConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let data = generate(&cfg)?;
    save(&data, out)?;
    println!(
        "wrote {} samples x {} sensors to {} (config digest {})",
        data.n_rows(),
        data.n_features(),
        out.display(),
        cfg.digest()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(data: &Path, kind: ClassifierKind, out: &Path) -> Result<ExitCode> {
    let dataset = load(data)?;
    let model = train_classifier(kind, &dataset)?;
    let digest = dataset.config.as_ref().map(|c| c.digest());
    save_model(&model, digest, out)?;
    println!(
        "trained {kind} on {} samples ({} classes) -> {}",
        dataset.n_rows(),
        model.labels().len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_crossval(data: &Path, kind: ClassifierKind, folds: usize, seed: u64) -> Result<ExitCode> {
    let dataset = load(data)?;
    let accuracy = cross_validate(&dataset, folds, kind, seed)?;
    println!("{kind} {folds}-fold accuracy: {:.2}%", 100.0 * accuracy);
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(model_path: &Path, data: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let saved = load_model(model_path)?;
    let dataset = load(data)?;
    if let (Some(expected), Some(cfg)) = (&saved.training_config_digest, &dataset.config) {
        if *expected != cfg.digest() {
            log::warn!("model was trained on a dataset with a different config digest");
        }
    }
    let report = confusion(&saved.model, &dataset)?;
    print!("{}", report.confusion.to_csv());
    println!("accuracy: {:.2}%", 100.0 * report.accuracy);
    for (label, recall) in saved.model.labels().iter().zip(&report.recalls) {
        println!("recall {label}: {:.2}%", 100.0 * recall);
    }
    if let Some(fpr) = report.false_positive_rate {
        println!("false positive rate (healthy misdiagnosed): {:.2}%", 100.0 * fpr);
    }
    if let Some(path) = out {
        atomic_write(path, report.confusion.to_csv().as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(name: SweepName, seed: u64, out: &Path, repetitions: usize) -> Result<ExitCode> {
    let report = match name {
        SweepName::Reference => experiments::run_reference(seed)?,
        SweepName::Variations => experiments::sweep_variations(seed)?,
        SweepName::Damage => experiments::sweep_damage(&experiments::default_damage_levels(), seed)?,
        SweepName::Uncertainty => {
            experiments::sweep_uncertainty(&experiments::default_uncertainty_bounds(), seed)?
        }
        SweepName::Frequency => {
            experiments::sweep_frequency(&experiments::default_frequencies(), seed)?
        }
        SweepName::Sensors => {
            experiments::sweep_sensors(&experiments::default_sensor_subsets(), seed)?
        }
        SweepName::Generalization => {
            let freqs = experiments::default_generalization_frequencies();
            experiments::generalization_study(&freqs, &freqs, seed)?
        }
        SweepName::Samplesize => experiments::sample_size_study(
            &experiments::default_sample_size_grid(),
            repetitions,
            seed,
        )?,
    };
    report.write_files(out)?;
    print!("{}", report.to_csv());
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(model_path: &Path, input: &Path) -> Result<ExitCode> {
    let saved = load_model(model_path)?;
    let model = &saved.model;
    let rows = read_measurements(input, model.n_features())?;

    let mut any_damage = false;
    println!(
        "row,label,confidence,{}",
        model
            .labels()
            .iter()
            .map(|l| format!("p_{l}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    for (i, row) in rows.iter().enumerate() {
        let pred = model.predict(row)?;
        println!(
            "{},{},{:.4},{}",
            i + 1,
            pred.label,
            pred.posteriors[pred.class_index],
            pred.posteriors
                .iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        if pred.label != "healthy" {
            any_damage = true;
            eprintln!(
                "warning: row {} diagnosed as {} (confidence {:.1}%)",
                i + 1,
                pred.label,
                100.0 * pred.posteriors[pred.class_index]
            );
        }
    }
    Ok(if any_damage {
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    })
}

/// Raw sensor amplitude rows. The first line may be a header; a trailing
/// `label` column is ignored.
fn read_measurements(path: &Path, n_features: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').collect();
        if fields.len() == n_features + 1 {
            fields.pop();
        }
        if fields.len() != n_features {
            return Err(parse_err(format!(
                "row {}: expected {} sensor values, got {}",
                lineno + 1,
                n_features,
                fields.len()
            )));
        }
        if lineno == 0 && fields[0].parse::<f64>().is_err() {
            continue; // header
        }
        let row: Vec<f64> = fields
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().map_err(|e| {
                    parse_err(format!("row {}, column {}: {e}", lineno + 1, c + 1))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err("no measurement rows".into()));
    }
    Ok(rows)
}
