//! Randomized invariants checked with proptest.

use damage_twin::classify::{train_classifier, ClassifierKind};
use damage_twin::dataset::{fit_normalization, Dataset};
use damage_twin::dynamics::{frf_solve, HarmonicLoad, RayleighDamping};
use damage_twin::lumped::{build_lumped, LumpedParameters, SpringStiffnesses};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spring_chain() -> impl Strategy<Value = SpringStiffnesses> {
    prop::array::uniform6(1.0e8..8.0e8f64).prop_map(SpringStiffnesses)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Maxwell-Betti reciprocity: the response at b to a unit force at a
    /// equals the response at a to a unit force at b, for any spring chain.
    #[test]
    fn reciprocity_for_random_chains(
        springs in spring_chain(),
        freq in 10.0..7900.0f64,
        a in 1usize..=6,
        b in 1usize..=6,
    ) {
        let p = LumpedParameters::nominal();
        let sys = build_lumped(&p, &springs).unwrap();
        let u_ab = frf_solve(&sys, &p.damping, &HarmonicLoad::new(a, 1.0).unwrap(), &[freq])
            .unwrap()
            .response[0][b - 1];
        let u_ba = frf_solve(&sys, &p.damping, &HarmonicLoad::new(b, 1.0).unwrap(), &[freq])
            .unwrap()
            .response[0][a - 1];
        prop_assert!((u_ab - u_ba).norm() <= 1e-10 * u_ab.norm().max(1e-300));
    }

    /// Static response never decreases along the chain (cumulative
    /// compliance), regardless of the spring values.
    #[test]
    fn static_response_is_monotone_along_chain(springs in spring_chain()) {
        let p = LumpedParameters::nominal();
        let sys = build_lumped(&p, &springs).unwrap();
        let damping = RayleighDamping::new(0.0, 0.0).unwrap();
        let frf = frf_solve(&sys, &damping, &HarmonicLoad::new(6, 1e4).unwrap(), &[0.0]).unwrap();
        for d in 1..6 {
            prop_assert!(frf.response[0][d].re >= frf.response[0][d - 1].re - 1e-12);
        }
    }
}

fn blob_dataset() -> impl Strategy<Value = Dataset> {
    // two well-separated 2-D clusters with random jitter
    (
        prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 12),
        prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 12),
    )
        .prop_map(|(a, b)| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (x, y) in &a {
                rows.push([*x, *y]);
                labels.push("a".to_string());
            }
            for (x, y) in &b {
                rows.push([10.0 + x, 10.0 + y]);
                labels.push("b".to_string());
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Dataset {
                features: DMatrix::from_row_slice(labels.len(), 2, &flat),
                labels,
                feature_names: vec!["f0".into(), "f1".into()],
                config: None,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Posteriors are a probability vector for every classifier kind.
    #[test]
    fn posteriors_are_normalized(
        data in blob_dataset(),
        x in -5.0..15.0f64,
        y in -5.0..15.0f64,
    ) {
        for kind in [ClassifierKind::Qda, ClassifierKind::Lda, ClassifierKind::Knn, ClassifierKind::Tree] {
            let model = train_classifier(kind, &data).unwrap();
            let pred = model.predict(&[x, y]).unwrap();
            let sum: f64 = pred.posteriors.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12, "{kind}: sum {sum}");
            prop_assert!(pred.posteriors.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
        }
    }

    /// Affine rescaling of the features changes neither the fitted z-scores
    /// nor any prediction, since normalization is refit.
    #[test]
    fn zscores_and_predictions_are_affine_invariant(
        data in blob_dataset(),
        scale in 0.01..100.0f64,
        offset in -50.0..50.0f64,
    ) {
        let mut shifted = data.clone();
        for v in shifted.features.iter_mut() {
            *v = *v * scale + offset;
        }
        let a = train_classifier(ClassifierKind::Qda, &data).unwrap();
        let b = train_classifier(ClassifierKind::Qda, &shifted).unwrap();
        let stats_a = fit_normalization(&data).unwrap();
        let stats_b = fit_normalization(&shifted).unwrap();
        for r in 0..data.n_rows() {
            let za = stats_a.transform_row(&data.row(r)).unwrap();
            let zb = stats_b.transform_row(&shifted.row(r)).unwrap();
            for (x, y) in za.iter().zip(&zb) {
                prop_assert!((x - y).abs() < 1e-8);
            }
            let pa = a.predict(&data.row(r)).unwrap();
            let pb = b.predict(&shifted.row(r)).unwrap();
            prop_assert_eq!(pa.class_index, pb.class_index);
        }
    }
}
