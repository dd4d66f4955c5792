//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line with the measured numbers (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::sync::OnceLock;
use std::time::Instant;

use damage_twin::bar::{assemble_bar, BarProperties};
use damage_twin::dataset::{
    apply_normalization, fit_normalization, generate, generate_serial, load, save,
    GenerationConfig,
};
use damage_twin::dynamics::{
    frequency_grid, frf_modal_superposition, frf_solve, modal_analysis, HarmonicLoad,
};
use damage_twin::experiments::{
    self, generalization_study, run_reference, sample_size_study, sweep_sensors,
    sweep_variations, ExperimentReport,
};
use damage_twin::lumped::{
    apply_damage, build_lumped, DamageScenario, LumpedParameters, SpringStiffnesses,
};

const SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

fn reference_reports() -> &'static Vec<ExperimentReport> {
    static REPORTS: OnceLock<Vec<ExperimentReport>> = OnceLock::new();
    REPORTS.get_or_init(|| SEEDS.iter().map(|&s| run_reference(s).unwrap()).collect())
}

fn accuracy(report: &ExperimentReport, parameter: &str, value: &str) -> f64 {
    report
        .accuracy_of(parameter, value)
        .unwrap_or_else(|| panic!("missing ({parameter}, {value})"))
}

#[test]
fn criterion_1_modal_summaries() {
    let t0 = Instant::now();

    let p = LumpedParameters::nominal();
    let lumped = build_lumped(&p, &SpringStiffnesses::uniform(p.stiffness)).unwrap();
    let lumped_modal = modal_analysis(&lumped, &p.damping).unwrap();

    let props = BarProperties::nominal();
    let fem = assemble_bar(&props).unwrap();
    let fem_modal = modal_analysis(&fem, &props.damping).unwrap();

    let cases = [
        ("lumped", &lumped_modal, [1358.0, 3999.0, 6398.0], [0.060, 0.024, 0.019]),
        ("fem", &fem_modal, [1293.0, 3881.0, 6476.0], [0.063, 0.024, 0.018]),
    ];
    for (name, modal, freqs, zetas) in cases {
        for i in 0..3 {
            let f = modal.natural_frequencies_hz[i];
            let z = modal.damping_ratios[i];
            assert!(
                (f - freqs[i]).abs() / freqs[i] < 0.005,
                "{name} mode {}: {f:.1} Hz vs {} Hz",
                i + 1,
                freqs[i]
            );
            assert!(
                (z - zetas[i]).abs() < 0.001,
                "{name} mode {}: zeta {z:.4} vs {}",
                i + 1,
                zetas[i]
            );
        }
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "took {dt:?}");
    println!(
        "criterion 1 (modal summaries): PASS — lumped {:.0}/{:.0}/{:.0} Hz, fem {:.0}/{:.0}/{:.0} Hz, {dt:?}",
        lumped_modal.natural_frequencies_hz[0],
        lumped_modal.natural_frequencies_hz[1],
        lumped_modal.natural_frequencies_hz[2],
        fem_modal.natural_frequencies_hz[0],
        fem_modal.natural_frequencies_hz[1],
        fem_modal.natural_frequencies_hz[2],
    );
}

#[test]
fn criterion_2_solver_oracle() {
    let t0 = Instant::now();
    let p = LumpedParameters::nominal();
    let load = HarmonicLoad::new(6, 1e4).unwrap();
    let grid = frequency_grid(0.0, 8000.0, 801).unwrap();

    let mut scenarios = vec![DamageScenario::healthy()];
    for i in 1..=5 {
        scenarios.push(DamageScenario::damaged(i, 0.20).unwrap());
    }
    let mut worst: f64 = 0.0;
    for scenario in &scenarios {
        let springs = apply_damage(scenario, p.stiffness).unwrap();
        let sys = build_lumped(&p, &springs).unwrap();
        let direct = frf_solve(&sys, &p.damping, &load, &grid).unwrap();
        let modal = frf_modal_superposition(&sys, &p.damping, &load, &grid).unwrap();
        for i in 0..grid.len() {
            for d in 0..6 {
                let a = direct.response[i][d];
                let b = modal.response[i][d];
                let rel = (a - b).norm() / a.norm().max(1e-300);
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst < 1e-6, "max relative error {worst:.2e}");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "took {dt:?}");
    println!("criterion 2 (solver oracle): PASS — max rel error {worst:.2e}, {dt:?}");
}

#[test]
fn criterion_3_reference_accuracy() {
    let t0 = Instant::now();
    let reports = reference_reports();

    let single = accuracy(&reports[0], "classifier", "qda");
    assert!(
        (single - 0.933).abs() < 0.04,
        "seed-0 QDA CV accuracy {:.1}%",
        100.0 * single
    );

    let qda: Vec<f64> = reports.iter().map(|r| accuracy(r, "classifier", "qda")).collect();
    let mean = qda.iter().sum::<f64>() / qda.len() as f64;
    assert!(
        (mean - 0.933).abs() < 0.025,
        "10-seed mean QDA accuracy {:.1}%",
        100.0 * mean
    );

    let mut ordering_a = 0;
    let mut ordering_b = 0;
    for r in reports {
        let (q, l, k, t) = (
            accuracy(r, "classifier", "qda"),
            accuracy(r, "classifier", "lda"),
            accuracy(r, "classifier", "knn"),
            accuracy(r, "classifier", "tree"),
        );
        if q > l && l > t {
            ordering_a += 1;
        }
        if q > k && k > t {
            ordering_b += 1;
        }
    }
    assert!(ordering_a >= 8, "QDA > LDA > tree held on {ordering_a}/10 seeds");
    assert!(ordering_b >= 8, "QDA > kNN > tree held on {ordering_b}/10 seeds");

    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 120.0, "took {dt:?}");
    println!(
        "criterion 3 (reference accuracy): PASS — QDA seed0 {:.1}%, mean {:.1}%, orderings {ordering_a}/10 and {ordering_b}/10, {dt:?}",
        100.0 * single,
        100.0 * mean
    );
}

#[test]
fn criterion_4_confusion_structure() {
    let reports = reference_reports();
    let mut recalls_sum = vec![0.0; 6];
    let mut counts_sum = vec![vec![0usize; 6]; 6];
    let mut labels: Vec<String> = Vec::new();
    for r in reports {
        let rec = r
            .records
            .iter()
            .find(|rec| rec.parameter == "confusion")
            .unwrap();
        let eval = rec.confusion.as_ref().unwrap();
        labels = eval.confusion.labels.clone();
        for (i, x) in eval.recalls.iter().enumerate() {
            recalls_sum[i] += x;
        }
        for i in 0..6 {
            for j in 0..6 {
                counts_sum[i][j] += eval.confusion.counts[i][j];
            }
        }
    }
    let mean_recall: Vec<f64> = recalls_sum.iter().map(|x| x / reports.len() as f64).collect();
    let idx = |l: &str| labels.iter().position(|x| x == l).unwrap();
    assert!(mean_recall[idx("d1")] >= 0.97, "d1 recall {:.3}", mean_recall[idx("d1")]);
    assert!(mean_recall[idx("d5")] >= 0.97, "d5 recall {:.3}", mean_recall[idx("d5")]);
    assert!(mean_recall[idx("d4")] >= 0.95, "d4 recall {:.3}", mean_recall[idx("d4")]);
    let d3 = mean_recall[idx("d3")];
    for l in ["d1", "d2", "d4", "d5"] {
        assert!(d3 <= mean_recall[idx(l)], "d3 recall {d3:.3} not the minimum");
    }

    // largest aggregated off-diagonal count must involve healthy and d3
    let (mut bi, mut bj, mut best) = (0, 0, 0);
    for i in 0..6 {
        for j in 0..6 {
            if i != j && counts_sum[i][j] > best {
                best = counts_sum[i][j];
                bi = i;
                bj = j;
            }
        }
    }
    let pair = [labels[bi].as_str(), labels[bj].as_str()];
    assert!(
        pair.contains(&"healthy") && pair.contains(&"d3"),
        "dominant confusion {} -> {} ({best})",
        labels[bi],
        labels[bj]
    );
    println!(
        "criterion 4 (confusion structure): PASS — mean recalls d1 {:.1}% d3 {:.1}% d4 {:.1}% d5 {:.1}%, dominant confusion {}->{}",
        100.0 * mean_recall[idx("d1")],
        100.0 * d3,
        100.0 * mean_recall[idx("d4")],
        100.0 * mean_recall[idx("d5")],
        labels[bi],
        labels[bj]
    );
}

#[test]
fn criterion_5_variation_accuracies() {
    let variation_reports: Vec<ExperimentReport> =
        SEEDS.iter().map(|&s| sweep_variations(s).unwrap()).collect();
    let drops = vec![vec![1, 2, 4, 6], vec![1, 4, 6]];
    let sensor_reports: Vec<ExperimentReport> = SEEDS
        .iter()
        .map(|&s| sweep_sensors(&drops, s).unwrap())
        .collect();

    let mean = |reports: &[ExperimentReport], parameter: &str, value: &str| {
        reports.iter().map(|r| accuracy(r, parameter, value)).sum::<f64>()
            / reports.len() as f64
    };
    let targets = [
        ("damage_10pct", 0.803),
        ("sensors_2_6", 0.748),
        ("noise_2sigma", 0.853),
        ("bounds_10pct", 0.815),
        ("frequency_7000", 0.748),
        ("force_dof_1", 0.810),
    ];
    let mut measured = Vec::new();
    for (value, target) in targets {
        let m = mean(&variation_reports, "variation", value);
        assert!(
            (m - target).abs() < 0.05,
            "{value}: mean {:.1}% vs target {:.1}%",
            100.0 * m,
            100.0 * target
        );
        measured.push(format!("{value} {:.1}%", 100.0 * m));
    }
    for (value, target) in [("1+2+4+6", 0.895), ("1+4+6", 0.800)] {
        let m = mean(&sensor_reports, "sensor_dofs", value);
        assert!(
            (m - target).abs() < 0.05,
            "sensors {value}: mean {:.1}% vs target {:.1}%",
            100.0 * m,
            100.0 * target
        );
        measured.push(format!("sensors {value} {:.1}%", 100.0 * m));
    }
    println!("criterion 5 (variation accuracies): PASS — {}", measured.join(", "));
}

#[test]
fn criterion_6_frequency_generalization() {
    let reports: Vec<ExperimentReport> = SEEDS
        .iter()
        .map(|&s| generalization_study(&[3600.0, 3800.0], &[3600.0], s).unwrap())
        .collect();

    let mut mismatch_lower = 0;
    let mut fluct_beats_fixed = 0;
    for r in &reports {
        if accuracy(r, "generalization", "train3800_test3600")
            < accuracy(r, "generalization", "train3600_test3600")
        {
            mismatch_lower += 1;
        }
        if accuracy(r, "generalization", "mixed_train3800_fixedtest3600")
            > accuracy(r, "generalization", "fixed_train3800_test3600")
        {
            fluct_beats_fixed += 1;
        }
    }
    assert!(mismatch_lower >= 9, "mismatch lower on {mismatch_lower}/10 seeds");
    assert!(
        fluct_beats_fixed >= 7,
        "fluctuating training won on {fluct_beats_fixed}/10 seeds"
    );

    let mean = |value: &str| {
        reports
            .iter()
            .map(|r| accuracy(r, "generalization", value))
            .sum::<f64>()
            / reports.len() as f64
    };
    let checks = [
        ("train3800_test3600", 0.775),
        ("train3600_test3600", 0.830),
        ("fixed_train3800_test3600", 0.805),
        ("mixed_train3800_fixedtest3600", 0.830),
    ];
    for (value, target) in checks {
        let m = mean(value);
        assert!(
            (m - target).abs() < 0.05,
            "{value}: mean {:.1}% vs target {:.1}%",
            100.0 * m,
            100.0 * target
        );
    }
    println!(
        "criterion 6 (frequency generalization): PASS — mismatch lower {mismatch_lower}/10, fluctuating training wins {fluct_beats_fixed}/10, 3800->3600 {:.1}% vs matched {:.1}%",
        100.0 * mean("train3800_test3600"),
        100.0 * mean("train3600_test3600")
    );
}

#[test]
fn criterion_7_sample_size_study() {
    let t0 = Instant::now();
    let report = sample_size_study(
        &experiments::default_sample_size_grid(),
        experiments::DEFAULT_SAMPLE_SIZE_REPETITIONS,
        0,
    )
    .unwrap();
    let stats = |total: usize| {
        let s = report
            .summaries
            .iter()
            .find(|s| s.value == total.to_string())
            .unwrap();
        (s.mean_accuracy, s.accuracy_cov.unwrap())
    };
    let series: Vec<(f64, f64)> = [90, 450, 1800].iter().map(|&n| stats(n)).collect();
    for w in series.windows(2) {
        assert!(w[1].0 >= w[0].0, "mean accuracy decreased: {series:?}");
        assert!(w[1].1 < w[0].1, "CoV not strictly decreasing: {series:?}");
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 600.0, "took {dt:?}");
    println!(
        "criterion 7 (sample-size study): PASS — means {:.1}/{:.1}/{:.1}%, CoV {:.3}/{:.3}/{:.3}, {dt:?}",
        100.0 * series[0].0,
        100.0 * series[1].0,
        100.0 * series[2].0,
        series[0].1,
        series[1].1,
        series[2].1
    );
}

#[test]
fn criterion_8_property_suite() {
    use damage_twin::classify::{train_classifier, ClassifierKind};

    // eigen residuals on the fem model
    let props = BarProperties::nominal();
    let fem = assemble_bar(&props).unwrap();
    let modal = modal_analysis(&fem, &props.damping).unwrap();
    for i in 0..fem.dof_count() {
        let phi = modal.mode_shapes.column(i);
        let w = 2.0 * std::f64::consts::PI * modal.natural_frequencies_hz[i];
        let r = fem.stiffness() * phi - fem.mass() * phi * (w * w);
        assert!(r.norm() / (fem.stiffness() * phi).norm() < 1e-9);
    }

    // reciprocity on the lumped model
    let p = LumpedParameters::nominal();
    let lumped = build_lumped(&p, &SpringStiffnesses::uniform(p.stiffness)).unwrap();
    for (a, b) in [(1usize, 6usize), (2, 4)] {
        for f in [500.0, 3800.0, 7000.0] {
            let u_b = frf_solve(&lumped, &p.damping, &HarmonicLoad::new(a, 1.0).unwrap(), &[f])
                .unwrap()
                .response[0][b - 1];
            let u_a = frf_solve(&lumped, &p.damping, &HarmonicLoad::new(b, 1.0).unwrap(), &[f])
                .unwrap()
                .response[0][a - 1];
            assert!((u_b - u_a).norm() <= 1e-12 * u_b.norm());
        }
    }

    // dataset determinism and scheduling independence
    let cfg = GenerationConfig {
        samples_per_scenario: 20,
        master_seed: 42,
        ..Default::default()
    };
    let data = generate(&cfg).unwrap();
    let serial = generate_serial(&cfg).unwrap();
    assert_eq!(data.features, serial.features);

    // posterior normalization + z-score affine invariance with identical
    // predictions after refit
    let qda = train_classifier(ClassifierKind::Qda, &data).unwrap();
    let mut scaled = data.clone();
    scaled.features *= 250.0;
    let qda_scaled = train_classifier(ClassifierKind::Qda, &scaled).unwrap();
    for r in 0..data.n_rows() {
        let a = qda.predict(&data.row(r)).unwrap();
        let b = qda_scaled.predict(&scaled.row(r)).unwrap();
        assert!((a.posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(a.class_index, b.class_index);
        for (pa, pb) in a.posteriors.iter().zip(&b.posteriors) {
            assert!((pa - pb).abs() < 1e-8);
        }
    }

    // QDA constrained to the pooled covariance coincides with LDA
    let lda = train_classifier(ClassifierKind::Lda, &data).unwrap();
    if let (damage_twin::classify::Model::Qda(q), damage_twin::classify::Model::Lda(l)) =
        (&qda, &lda)
    {
        let mut pooled_qda = q.clone();
        for cov in &mut pooled_qda.covariances {
            *cov = l.pooled_covariance.clone();
        }
        let constrained = damage_twin::classify::Model::Qda(pooled_qda);
        for r in 0..data.n_rows() {
            let pq = constrained.predict(&data.row(r)).unwrap();
            let pl = lda.predict(&data.row(r)).unwrap();
            assert_eq!(pq.class_index, pl.class_index);
            for (a, b) in pq.posteriors.iter().zip(&pl.posteriors) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    } else {
        panic!("unexpected model kinds");
    }

    // save/load round trips are bit-exact
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roundtrip.csv");
    save(&data, &path).unwrap();
    let back = load(&path).unwrap();
    assert_eq!(back.labels, data.labels);
    for r in 0..data.n_rows() {
        for c in 0..data.n_features() {
            assert_eq!(back.features[(r, c)].to_bits(), data.features[(r, c)].to_bits());
        }
    }
    let stats = fit_normalization(&data).unwrap();
    let z = apply_normalization(&stats, &data).unwrap();
    assert!(z.features.iter().all(|v| v.is_finite()));

    println!("criterion 8 (property suite): PASS — residuals, reciprocity, determinism, posteriors, affine invariance, round-trip");
}
