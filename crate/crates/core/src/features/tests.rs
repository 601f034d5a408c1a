use super::compute::*;
use super::*;
use crate::recording::WorkloadClass;
use alloc::string::ToString;
use alloc::vec;
use core::f64::consts::PI;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn by_name(catalog: &FeatureCatalog, fv: &FeatureVector, name: &str) -> f64 {
    fv.values[catalog.position(name).unwrap_or_else(|| panic!("no feature {name}"))]
}

#[test]
fn standard_catalog_has_210_unique_entries_in_domain_blocks() {
    let cat = FeatureCatalog::standard();
    assert_eq!(cat.len(), 210);
    let count = |d| cat.features.iter().filter(|f| f.domain == d).count();
    assert_eq!(count(Domain::Spectral), 119);
    assert_eq!(count(Domain::Wavelet), 37);
    assert_eq!(count(Domain::Statistical), 36);
    assert_eq!(count(Domain::Temporal), 18);
    assert_eq!(cat.features[0].name, "FFT mean coefficient_0");
    assert_eq!(cat.features[75].name, "FFT mean coefficient_75");
    assert_eq!(cat.features[78].name, "LPCC_0");
    assert_eq!(cat.features[90].name, "LPCC_12");
    assert_eq!(cat.features[91].name, "MFCC_0");
    assert_eq!(cat.features[137].name, "Wavelet entropy");
    assert_eq!(cat.features[168].name, "ECDF Percentile Count_0");
    assert_eq!(cat.features[209].name, "Zero crossing rate");
}

#[test]
fn catalog_rebuilds_from_its_parts() {
    let cat = FeatureCatalog::standard();
    let rebuilt = FeatureCatalog::new(cat.params.clone(), cat.features.clone()).unwrap();
    assert_eq!(rebuilt, cat);
}

#[test]
fn catalog_rejects_duplicates_and_bad_indices() {
    let p = CatalogParams::default();
    let dup = vec![FeatureDef::new(FeatureKind::Mean), FeatureDef::new(FeatureKind::Mean)];
    assert!(FeatureCatalog::new(p.clone(), dup).is_err());
    assert!(FeatureCatalog::new(p.clone(), vec![FeatureDef::new(FeatureKind::Lpcc(13))]).is_err());
    let sub = FeatureCatalog::standard().subset(&["Max".to_string(), "Mean".to_string()]).unwrap();
    assert_eq!(sub.names(), vec!["Max".to_string(), "Mean".to_string()]);
    assert!(FeatureCatalog::standard().subset(&["Nope".to_string()]).is_err());
}

#[test]
fn definitional_examples() {
    let cat = FeatureCatalog::standard();
    let mut x = vec![1.0, 2.0, 3.0, 4.0];
    x.extend([2.5; 12]);
    let fv = extract_values(&x, &cat, 1.0).unwrap();
    assert_eq!(by_name(&cat, &fv, "Max"), 4.0);
    assert_eq!(mean_diff(&[1.0, 2.0, 3.0, 4.0]), 1.0);
    assert_eq!(crate::stats::mean(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    assert_eq!(zero_crossing_rate(&[1.0, -1.0, 1.0, -1.0]), 1.0);
    assert_eq!(absolute_energy(&[1.0, 2.0, 2.0]), 9.0);
    let s = crate::stats::sorted(&[0.0, 5.0, -3.0]);
    assert_eq!(s[2] - s[0], 8.0);
}

#[test]
fn spectral_entropy_of_tone_is_below_noise() {
    let n = 150;
    let tone: Vec<f64> = (0..n).map(|i| 3.0 + libm::sin(2.0 * PI * 0.1 * i as f64)).collect();
    let noisy = noise(n, 9);
    let h_tone = spectral_entropy(&tone, 1.0);
    let h_noise = spectral_entropy(&noisy, 1.0);
    assert!(!h_tone.degenerate && !h_noise.degenerate);
    assert!(h_tone.value < h_noise.value, "{} vs {}", h_tone.value, h_noise.value);
}

#[test]
fn constant_series_is_flagged_not_an_error() {
    let cat = FeatureCatalog::standard();
    let fv = extract_values(&[2.0; 32], &cat, 1.0).unwrap();
    assert!(fv.values.iter().all(|v| v.is_finite()));
    assert_eq!(by_name(&cat, &fv, "Entropy"), 0.0);
    assert!(fv.degenerate.contains(&cat.position("Entropy").unwrap()));
    assert!(fv.degenerate.contains(&cat.position("Kurtosis").unwrap()));
    assert_eq!(by_name(&cat, &fv, "Histogram_0"), 32.0);
    assert!(matches!(extract_values(&[1.0; 8], &cat, 1.0), Err(crate::Error::TooShort { .. })));
}

#[test]
fn lpcc_matches_dense_log_spectrum_cepstrum() {
    let x = noise(64, 3);
    let order = 12;
    let (c, bad) = lpcc(&x, order);
    assert!(!bad);
    let (a, err) = levinson_durbin(&x, order).unwrap();
    // Real cepstrum of ln|sqrt(E)/A(e^jw)| on a dense grid.
    let n = 1 << 14;
    for (m, cm) in c.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..n {
            let w = 2.0 * PI * k as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (j, aj) in a.iter().enumerate() {
                re += aj * libm::cos(w * j as f64);
                im -= aj * libm::sin(w * j as f64);
            }
            let log_mag = 0.5 * libm::log(err) - 0.5 * libm::log(re * re + im * im);
            acc += log_mag * libm::cos(w * m as f64);
        }
        let real = acc / n as f64;
        let expected = if m == 0 { real } else { 2.0 * real };
        assert!((cm - expected).abs() < 1e-9 * (1.0 + expected.abs()), "c{m}: {cm} vs {expected}");
    }
}

#[test]
fn wavelet_entropy_single_scale_below_noise() {
    let mut below = 0;
    for seed in 0..10 {
        let n = 150;
        let tone: Vec<f64> = (0..n).map(|i| libm::sin(2.0 * PI * 0.02 * i as f64) + 0.01 * noise(1, seed)[0]).collect();
        let white = noise(n, 100 + seed);
        let h_tone = wavelet_entropy(&tone, &cwt(&tone, 9));
        let h_white = wavelet_entropy(&white, &cwt(&white, 9));
        if h_tone.value < h_white.value {
            below += 1;
        }
    }
    assert!(below >= 9, "{below}/10");
}

#[test]
fn extract_all_counts_and_discards() {
    use crate::bandindex::IndexId;
    let cat = FeatureCatalog::standard().subset(&["Mean".to_string(), "Max".to_string()]).unwrap();
    let mut series = Vec::new();
    let mut ratings = Vec::new();
    for subject in 1..=48u32 {
        for c in Condition::ALL {
            series.push(IndexSeries { index_id: IndexId::At1, subject_id: subject, condition: c, values: noise(20, subject as u64) });
            ratings.push(Rating::new(subject, c, if subject % 2 == 0 { 7 } else { 2 }).unwrap());
        }
    }
    let (fm, report) = extract_all(&series, &cat, &ratings, 1.0).unwrap();
    assert_eq!(fm.n_rows(), 96);
    assert!(report.unlabelled.is_empty() && report.neutral.is_empty());
    assert_eq!(fm.labels()[1], WorkloadClass::Suboptimal);

    let fives: Vec<Rating> = ratings.iter().map(|r| Rating { score: 5, ..*r }).collect();
    let (fm, report) = extract_all(&series, &cat, &fives, 1.0).unwrap();
    assert_eq!(fm.n_rows(), 0);
    assert_eq!(fm.n_features(), 2);
    assert_eq!(report.neutral.len(), 96);

    let (fm, report) = extract_all(&series, &cat, &ratings[..10], 1.0).unwrap();
    assert_eq!(fm.n_rows(), 10);
    assert_eq!(report.unlabelled.len(), 86);
}

#[test]
fn stew_scale_series_give_finite_rows() {
    let cat = FeatureCatalog::standard();
    for seed in 0..5 {
        let x: Vec<f64> = noise(150, seed).iter().map(|v| libm::exp(0.3 * v)).collect();
        let fv = extract_values(&x, &cat, 1.0).unwrap();
        assert_eq!(fv.values.len(), 210);
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn feature_matrix_rejects_duplicate_keys_and_selects_columns() {
    use crate::bandindex::IndexId;
    let key = RowKey { subject_id: 1, condition: Condition::Rest, index_id: IndexId::At1 };
    let cols = vec!["a".to_string(), "b".to_string()];
    let dup = FeatureMatrix::new(
        cols.clone(),
        vec![key, key],
        vec![WorkloadClass::Suboptimal; 2],
        vec![false; 2],
        vec![vec![1.0, 2.0], vec![3.0, 4.0]],
    );
    assert!(dup.is_err());
    let fm = FeatureMatrix::new(
        cols,
        vec![key, RowKey { subject_id: 2, ..key }],
        vec![WorkloadClass::Suboptimal, WorkloadClass::SuperOptimal],
        vec![false; 2],
        vec![vec![1.5, -2.25], vec![0.0, 1e-9]],
    )
    .unwrap();
    let b = fm.select_columns(&["b".to_string()]).unwrap();
    assert_eq!(b.column(0), vec![-2.25, 1e-9]);
    assert_eq!(fm.concat(&fm.filter_rows(|_| false)).unwrap(), fm);
    assert!(fm.concat(&fm).is_err());
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 16..64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_invariance(x in series_strategy(), c in -50.0f64..50.0) {
        let y: Vec<f64> = x.iter().map(|v| v + c).collect();
        let tol = 1e-9 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs())) + c.abs());
        prop_assert!((crate::stats::mean(&y) - crate::stats::mean(&x) - c).abs() < tol);
        prop_assert!((crate::stats::std_dev(&y) - crate::stats::std_dev(&x)).abs() < tol);
        prop_assert!((crate::stats::variance(&y) - crate::stats::variance(&x)).abs() < tol * tol.max(1.0) * 1e4);
        let iqr = |v: &[f64]| crate::stats::percentile(v, 75.0) - crate::stats::percentile(v, 25.0);
        prop_assert!((iqr(&y) - iqr(&x)).abs() < tol);
        let sx = crate::stats::sorted(&x);
        let sy = crate::stats::sorted(&y);
        prop_assert!(((sy[sy.len() - 1] - sy[0]) - (sx[sx.len() - 1] - sx[0])).abs() < tol);
    }

    #[test]
    fn scaling_laws(x in series_strategy(), c in -20.0f64..20.0) {
        let y: Vec<f64> = x.iter().map(|v| c * v).collect();
        let e = absolute_energy(&x);
        prop_assert!((absolute_energy(&y) - c * c * e).abs() <= 1e-9 * (1.0 + c * c * e));
        let r = root_mean_square(&x);
        prop_assert!((root_mean_square(&y) - c.abs() * r).abs() <= 1e-9 * (1.0 + c.abs() * r));
    }

    #[test]
    fn histogram_and_ecdf_shape(x in series_strategy()) {
        let h = histogram(&x, 10);
        prop_assert_eq!(h.iter().sum::<f64>(), x.len() as f64);
        let s = crate::stats::sorted(&x);
        let e = ecdf(&s, 10);
        prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn wavelet_energies_are_non_negative_and_all_features_finite(x in series_strategy()) {
        let cat = FeatureCatalog::standard();
        let fv = extract_values(&x, &cat, 1.0).unwrap();
        prop_assert!(fv.values.iter().all(|v| v.is_finite()));
        for i in 0..9 {
            let name = alloc::format!("Wavelet energy_{i}");
            let energy = by_name(&cat, &fv, &name);
            prop_assert!(energy >= 0.0);
        }
    }
}
