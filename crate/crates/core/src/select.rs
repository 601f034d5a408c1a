//! ANOVA-F ranking, iterative halving search for the feature count, and a
//! greedy Pearson-correlation filter.
//!
//! The search evaluates `K = n, n/2, n/4, …` (integer floor) with a
//! caller-supplied accuracy function and keeps the last `K` before accuracy
//! stops increasing. The filter then walks the chosen features in rank order
//! and drops any feature whose `|r|` with an already retained one exceeds the
//! threshold.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::linalg::Matrix;
use crate::recording::WorkloadClass;
use crate::stats;
use crate::{Error, Result};

/// One ranked feature. `f_value` is `+∞` for a perfectly separating feature
/// with zero within-group variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub f_value: f64,
    pub p_value: f64,
}

/// Features sorted by descending F; equal F keeps column order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<FeatureScore>,
}

impl FeatureRanking {
    /// Sorts `(name, F, p)` triples given in column order.
    pub fn from_scores(scores: Vec<FeatureScore>) -> Self {
        let mut entries = scores;
        // Stable sort keeps column order among ties.
        entries.sort_by(|a, b| b.f_value.total_cmp(&a.f_value));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn top(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidArgument(alloc::format!("k = {k} outside 1..={}", self.len())));
        }
        Ok(Self { entries: self.entries[..k].to_vec() })
    }
}

/// One-way ANOVA between the two classes: `(F, p)` with `p` from
/// `F(1, n - 2)`.
pub fn anova_f(x: &[f64], labels: &[WorkloadClass]) -> Result<(f64, f64)> {
    if x.len() != labels.len() {
        return Err(Error::Shape(alloc::format!("{} values for {} labels", x.len(), labels.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (v, c) in x.iter().zip(labels) {
        if c.is_positive() {
            s1 += v;
            n1 += 1;
        } else {
            s0 += v;
            n0 += 1;
        }
    }
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass("ANOVA needs both classes".into()));
    }
    let m1 = s1 / n1 as f64;
    let m0 = s0 / n0 as f64;
    let grand = (s0 + s1) / n as f64;
    let ss_between = n1 as f64 * (m1 - grand) * (m1 - grand) + n0 as f64 * (m0 - grand) * (m0 - grand);
    let mut ss_within = 0.0;
    let mut scale = 0.0f64;
    for (v, c) in x.iter().zip(labels) {
        let m = if c.is_positive() { m1 } else { m0 };
        ss_within += (v - m) * (v - m);
        scale = scale.max((v - grand).abs());
    }
    let df_within = (n - 2) as f64;
    // Rounding residue of exactly constant groups.
    let noise = n as f64 * (f64::EPSILON * 4.0 * scale) * (f64::EPSILON * 4.0 * scale);
    if ss_within <= noise {
        return Ok(if ss_between <= noise { (0.0, 1.0) } else { (f64::INFINITY, 0.0) });
    }
    let f = ss_between / (ss_within / df_within);
    Ok((f, stats::f_upper_tail_p(f, 1.0, df_within)))
}

/// Ranks every column of `fm` by ANOVA F.
pub fn rank_features(fm: &FeatureMatrix) -> Result<FeatureRanking> {
    let scores = (0..fm.n_features())
        .map(|j| {
            let (f_value, p_value) = anova_f(&fm.column(j), fm.labels())?;
            Ok(FeatureScore { name: fm.columns()[j].clone(), f_value, p_value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureRanking::from_scores(scores))
}

/// The `k` highest-F features.
pub fn select_k_best(fm: &FeatureMatrix, k: usize) -> Result<FeatureRanking> {
    if k == 0 || k > fm.n_features() {
        return Err(Error::InvalidArgument(alloc::format!("k = {k} outside 1..={}", fm.n_features())));
    }
    rank_features(fm)?.top(k)
}

/// `n, n/2, n/4, …, 1` with integer floor.
pub fn halving_schedule(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = n;
    while k >= 1 {
        out.push(k);
        k /= 2;
    }
    out
}

/// Accuracy observed at each evaluated `K` and the `K` kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSearch {
    pub trace: Vec<(usize, f64)>,
    pub chosen_k: usize,
}

/// Halving search over the top-`K` prefixes of `ranking`. `evaluate`
/// receives the feature names for one `K` and returns a mean accuracy.
/// The search continues while accuracy strictly increases.
pub fn iterative_k_search<F>(ranking: &FeatureRanking, mut evaluate: F) -> Result<KSearch>
where
    F: FnMut(&[String]) -> Result<f64>,
{
    if ranking.len() < 2 {
        return Err(Error::InvalidArgument("K search needs at least two features".into()));
    }
    let names = ranking.names();
    let mut trace = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for k in halving_schedule(names.len()) {
        let acc = evaluate(&names[..k])?;
        trace.push((k, acc));
        match best {
            Some((_, b)) if !(acc > b) => break,
            _ => best = Some((k, acc)),
        }
    }
    let chosen_k = best.map_or(names.len(), |(k, _)| k);
    Ok(KSearch { trace, chosen_k })
}

/// A feature removed by the correlation filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub name: String,
    /// Higher-ranked retained feature it correlated with.
    pub kept: String,
    pub r: f64,
}

/// Outcome of [`multicollinearity_filter`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFilter {
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedFeature>,
    /// Pearson matrix of the retained features, in `retained` order.
    pub correlation: Matrix,
}

/// Greedy pass over `ranked` (best first): a feature is dropped when
/// `|r| > threshold` against any already retained feature.
pub fn multicollinearity_filter(fm: &FeatureMatrix, ranked: &[String], threshold: f64) -> Result<CorrelationFilter> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(alloc::format!("correlation threshold {threshold} outside [0, 1]")));
    }
    let columns: Vec<Vec<f64>> = ranked
        .iter()
        .map(|n| {
            fm.column_index(n)
                .map(|j| fm.column(j))
                .ok_or_else(|| Error::FieldMismatch(alloc::format!("no column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for (i, col) in columns.iter().enumerate() {
        let clash = kept.iter().map(|&k| (k, stats::pearson(&columns[k], col))).find(|(_, r)| r.abs() > threshold);
        match clash {
            Some((k, r)) => dropped.push(DroppedFeature { name: ranked[i].clone(), kept: ranked[k].clone(), r }),
            None => kept.push(i),
        }
    }
    let kept_cols: Vec<&[f64]> = kept.iter().map(|&k| columns[k].as_slice()).collect();
    Ok(CorrelationFilter {
        retained: kept.iter().map(|&k| ranked[k].clone()).collect(),
        dropped,
        correlation: correlation_matrix(&kept_cols),
    })
}

/// Pairwise Pearson matrix with a unit diagonal.
pub fn correlation_matrix(columns: &[&[f64]]) -> Matrix {
    let d = columns.len();
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in (i + 1)..d {
            let r = stats::pearson(columns[i], columns[j]);
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    m
}

/// Selection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectConfig {
    /// Run the halving search; otherwise keep `fixed_k` (or every feature).
    pub k_search: bool,
    pub fixed_k: Option<usize>,
    pub correlation_threshold: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self { k_search: true, fixed_k: None, correlation_threshold: 0.5 }
    }
}

/// Full selection outcome for one feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub ranking: FeatureRanking,
    pub k: usize,
    pub trace: Vec<(usize, f64)>,
    pub selected: Vec<String>,
    pub dropped: Vec<DroppedFeature>,
    pub correlation: Matrix,
}

/// Ranks `fm`, picks `K` (searching with `evaluate` when enabled), truncates
/// and applies the correlation filter.
pub fn select_features<F>(fm: &FeatureMatrix, cfg: &SelectConfig, evaluate: F) -> Result<SelectionResult>
where
    F: FnMut(&[String]) -> Result<f64>,
{
    let ranking = rank_features(fm)?;
    select_from_ranking(fm, ranking, cfg, evaluate)
}

/// [`select_features`] with a precomputed ranking.
pub fn select_from_ranking<F>(
    fm: &FeatureMatrix,
    ranking: FeatureRanking,
    cfg: &SelectConfig,
    evaluate: F,
) -> Result<SelectionResult>
where
    F: FnMut(&[String]) -> Result<f64>,
{
    let (k, trace) = if cfg.k_search && ranking.len() >= 2 {
        let s = iterative_k_search(&ranking, evaluate)?;
        (s.chosen_k, s.trace)
    } else {
        (cfg.fixed_k.unwrap_or(ranking.len()), Vec::new())
    };
    let top = ranking.top(k)?;
    let filter = multicollinearity_filter(fm, &top.names(), cfg.correlation_threshold)?;
    Ok(SelectionResult {
        ranking,
        k,
        trace,
        selected: filter.retained,
        dropped: filter.dropped,
        correlation: filter.correlation,
    })
}

/// Pooled two-sample t statistic; used by the tests as the ANOVA oracle.
pub fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = ((na - 1.0) * stats::sample_variance(a) + (nb - 1.0) * stats::sample_variance(b)) / (na + nb - 2.0);
    (stats::mean(a) - stats::mean(b)) / sqrt(sp2 * (1.0 / na + 1.0 / nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandindex::IndexId;
    use crate::features::RowKey;
    use crate::recording::Condition;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use WorkloadClass::{Suboptimal as S, SuperOptimal as P};

    fn matrix(columns: &[Vec<f64>], labels: &[WorkloadClass]) -> FeatureMatrix {
        let n = labels.len();
        let names = (0..columns.len()).map(|j| alloc::format!("f{j}")).collect();
        let keys = (0..n)
            .map(|i| RowKey { subject_id: i as u32, condition: Condition::Rest, index_id: IndexId::At1 })
            .collect();
        let rows = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new(names, keys, labels.to_vec(), vec![false; n], rows).unwrap()
    }

    fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn anova_degenerate_cases() {
        let labels = [S, S, S, P, P, P];
        assert_eq!(anova_f(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], &labels).unwrap(), (f64::INFINITY, 0.0));
        assert_eq!(anova_f(&[0.1, 0.1, 0.1, 0.3, 0.3, 0.3], &labels).unwrap().0, f64::INFINITY);
        assert_eq!(anova_f(&[2.0; 6], &labels).unwrap(), (0.0, 1.0));
        let (f, p) = anova_f(&[1.0, 2.0, 3.0, 3.0, 2.0, 1.0], &labels).unwrap();
        assert_eq!(f, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(matches!(anova_f(&[1.0, 2.0, 3.0], &[S, S, S]), Err(Error::SingleClass(_))));
    }

    #[test]
    fn anova_equals_squared_pooled_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = gaussian(5, &mut rng);
        let b: Vec<f64> = gaussian(5, &mut rng).iter().map(|v| v + 0.7).collect();
        let x: Vec<f64> = a.iter().chain(&b).copied().collect();
        let labels: Vec<_> = (0..10).map(|i| if i < 5 { S } else { P }).collect();
        let (f, _) = anova_f(&x, &labels).unwrap();
        let t = pooled_t(&a, &b);
        assert!((f - t * t).abs() < 1e-9 * f.max(1.0));
    }

    #[test]
    fn ranking_matches_brute_force_group_means() {
        // Column j separates the groups by j/2 on top of shared noise.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let labels: Vec<_> = (0..30).map(|i| if i % 2 == 0 { S } else { P }).collect();
        let base = gaussian(30, &mut rng);
        let cols: Vec<Vec<f64>> = (0..10)
            .map(|j| base.iter().zip(&labels).map(|(v, c)| v + if c.is_positive() { j as f64 / 2.0 } else { 0.0 }).collect())
            .collect();
        let fm = matrix(&cols, &labels);
        let ranking = rank_features(&fm).unwrap();
        let brute = |c: &[f64]| {
            let g1: Vec<f64> = c.iter().zip(&labels).filter(|(_, l)| l.is_positive()).map(|(v, _)| *v).collect();
            let g0: Vec<f64> = c.iter().zip(&labels).filter(|(_, l)| !l.is_positive()).map(|(v, _)| *v).collect();
            let t = pooled_t(&g1, &g0);
            t * t
        };
        let mut expected: Vec<(usize, f64)> = cols.iter().enumerate().map(|(j, c)| (j, brute(c))).collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (e, (j, f)) in ranking.entries.iter().zip(expected) {
            assert_eq!(e.name, alloc::format!("f{j}"));
            assert!((e.f_value - f).abs() < 1e-9 * f.max(1.0));
        }
        assert_eq!(select_k_best(&fm, 10).unwrap(), ranking);
        assert!(select_k_best(&fm, 0).is_err());
        assert!(select_k_best(&fm, 11).is_err());
    }

    #[test]
    fn separating_feature_ranks_first_and_ties_keep_order() {
        let labels = [S, S, S, P, P, P];
        let fm = matrix(
            &[vec![1.0, 2.0, 3.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 0.0, 5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0, 2.0, 3.0, 4.0]],
            &labels,
        );
        let r = rank_features(&fm).unwrap();
        assert_eq!(r.names(), vec!["f1".to_string(), "f0".to_string(), "f2".to_string()]);
    }

    #[test]
    fn halving_schedule_uses_floor() {
        assert_eq!(halving_schedule(210), vec![210, 105, 52, 26, 13, 6, 3, 1]);
        assert_eq!(halving_schedule(1), vec![1]);
    }

    fn ranking_of(n: usize) -> FeatureRanking {
        FeatureRanking {
            entries: (0..n).map(|j| FeatureScore { name: alloc::format!("f{j}"), f_value: (n - j) as f64, p_value: 0.0 }).collect(),
        }
    }

    #[test]
    fn k_search_stops_after_peak() {
        let acc = |k: usize| match k {
            16 => 0.6,
            8 => 0.7,
            4 => 0.8,
            2 => 0.75,
            _ => 0.9,
        };
        let s = iterative_k_search(&ranking_of(16), |names| Ok(acc(names.len()))).unwrap();
        assert_eq!(s.chosen_k, 4);
        assert_eq!(s.trace, vec![(16, 0.6), (8, 0.7), (4, 0.8), (2, 0.75)]);

        let s = iterative_k_search(&ranking_of(16), |names| Ok(names.len() as f64)).unwrap();
        assert_eq!(s.chosen_k, 16);
        assert_eq!(s.trace.len(), 2);

        let s = iterative_k_search(&ranking_of(8), |names| Ok(1.0 / names.len() as f64)).unwrap();
        assert_eq!(s.chosen_k, 1);
    }

    #[test]
    fn filter_examples() {
        let labels = [S, S, S, S, P, P, P, P];
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let fm = matrix(&[a.clone(), a.clone()], &labels);
        let f = multicollinearity_filter(&fm, &["f1".to_string(), "f0".to_string()], 0.5).unwrap();
        assert_eq!(f.retained, vec!["f1".to_string()]);
        assert_eq!(f.dropped[0].kept, "f1");

        let o1 = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let o2 = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let o3 = vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        let fm = matrix(&[o1, o2, o3], &labels);
        let names: Vec<String> = fm.columns().to_vec();
        assert_eq!(multicollinearity_filter(&fm, &names, 0.5).unwrap().retained, names);
    }

    #[test]
    fn filter_hand_trace_keeps_first_and_third() {
        // Columns built from orthonormal u, v, w with r(1,2) = 0.9,
        // r(1,3) = r(2,3) = 0.1 approximately.
        let u = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let v = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let w = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        let c1: Vec<f64> = u.to_vec();
        let c2: Vec<f64> = (0..8).map(|i| 0.9 * u[i] + libm::sqrt(1.0 - 0.81) * v[i]).collect();
        let c3: Vec<f64> = (0..8).map(|i| 0.1 * u[i] + libm::sqrt(0.99) * w[i]).collect();
        let r13 = stats::pearson(&c1, &c3);
        let r12 = stats::pearson(&c1, &c2);
        assert!((r12 - 0.9).abs() < 1e-12 && (r13 - 0.1).abs() < 1e-12);
        let labels = [S, S, S, S, P, P, P, P];
        let fm = matrix(&[c1, c2, c3], &labels);
        let names: Vec<String> = fm.columns().to_vec();
        let f = multicollinearity_filter(&fm, &names, 0.5).unwrap();
        assert_eq!(f.retained, vec!["f0".to_string(), "f2".to_string()]);
        assert_eq!(f.correlation.rows(), 2);
    }

    #[test]
    fn select_features_fixed_k() {
        let labels = [S, S, S, P, P, P];
        let fm = matrix(&[vec![1.0, 2.0, 3.0, 2.0, 3.0, 4.0], vec![0.0, 0.1, 0.0, 5.0, 5.0, 5.2]], &labels);
        let cfg = SelectConfig { k_search: false, fixed_k: Some(1), correlation_threshold: 0.5 };
        let r = select_features(&fm, &cfg, |_| unreachable!()).unwrap();
        assert_eq!(r.selected, vec!["f1".to_string()]);
        assert_eq!(r.k, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn anova_is_affine_invariant(seed in 0u64..1000, a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0], b in -100.0f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = gaussian(20, &mut rng);
            let labels: Vec<_> = (0..20).map(|i| if i < 9 { S } else { P }).collect();
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let (fx, _) = anova_f(&x, &labels).unwrap();
            let (fy, _) = anova_f(&y, &labels).unwrap();
            prop_assert!((fx - fy).abs() <= 1e-9 * fx.max(1.0));
        }

        #[test]
        fn k_best_is_nested(seed in 0u64..1000, k1 in 1usize..8, extra in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<_> = (0..16).map(|i| if i % 3 == 0 { P } else { S }).collect();
            let cols: Vec<Vec<f64>> = (0..12).map(|_| gaussian(16, &mut rng)).collect();
            let fm = matrix(&cols, &labels);
            let small = select_k_best(&fm, k1).unwrap().names();
            let large = select_k_best(&fm, k1 + extra).unwrap().names();
            prop_assert_eq!(&large[..k1], &small[..]);
        }

        #[test]
        fn filter_bound_and_determinism(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<_> = (0..20).map(|i| if i % 2 == 0 { P } else { S }).collect();
            let base = gaussian(20, &mut rng);
            let cols: Vec<Vec<f64>> = (0..8)
                .map(|j| {
                    let noise = gaussian(20, &mut rng);
                    base.iter().zip(noise).map(|(b, e)| (j % 3) as f64 * b + e).collect()
                })
                .collect();
            let fm = matrix(&cols, &labels);
            let ranked = rank_features(&fm).unwrap().names();
            let f1 = multicollinearity_filter(&fm, &ranked, 0.5).unwrap();
            let f2 = multicollinearity_filter(&fm, &ranked, 0.5).unwrap();
            prop_assert_eq!(&f1, &f2);
            let d = f1.retained.len();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        prop_assert!(f1.correlation[(i, j)].abs() <= 0.5);
                    }
                }
            }
            prop_assert_eq!(d + f1.dropped.len(), 8);
        }
    }
}
