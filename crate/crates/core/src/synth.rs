//! Gaussian-copula synthesis of feature rows and the three stability scores
//! used to judge synthetic data.
//!
//! The copula keeps each field's empirical marginal and the correlation of
//! the fields' normal scores. Sampling draws correlated standard normals,
//! maps them through `Φ` and reads each field's marginal at that quantile
//! (linear interpolation between order statistics).
//!
//! Scores are percentages:
//!
//! - field correlation stability `100·(1 − mean|Δr|/2)` over field pairs;
//! - deep structure stability `100·(1 − mean JSD)` over principal components
//!   of the standardized original (≥ 95% variance, at most 5), each compared
//!   with 20-bin histograms on the pooled range;
//! - field distribution stability `100·(1 − mean JSD)` over fields.
//!
//! Jensen-Shannon divergences use base-2 logarithms and lie in `[0, 1]`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::{log2, sqrt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bandindex::IndexId;
use crate::features::{FeatureMatrix, RowKey};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::recording::{Condition, WorkloadClass};
use crate::{rng, stats};
use crate::{Error, Result};

/// Histogram resolution of the distribution comparisons.
pub const HISTOGRAM_BINS: usize = 20;
/// Smallest eigenvalue kept in the copula correlation matrix.
pub const EIGEN_FLOOR: f64 = 1e-6;
/// Rows needed to fit a copula.
pub const MIN_ROWS: usize = 10;

/// Named columns of numeric rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub fields: Vec<String>,
    pub values: Matrix,
}

impl Dataset {
    pub fn new(fields: Vec<String>, values: Matrix) -> Result<Self> {
        if fields.len() != values.cols() {
            return Err(Error::Shape(alloc::format!("{} field names for {} columns", fields.len(), values.cols())));
        }
        Ok(Self { fields, values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    fn check_fields(&self, other: &Dataset) -> Result<()> {
        if self.fields != other.fields {
            return Err(Error::FieldMismatch("original and synthetic field sets differ".into()));
        }
        Ok(())
    }
}

/// Fitted Gaussian copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub fields: Vec<String>,
    /// Sorted observed values per field.
    pub marginals: Vec<Vec<f64>>,
    /// Correlation of the normal scores after the eigenvalue floor.
    pub correlation: Matrix,
    /// `A` with `A·Aᵀ = correlation`.
    factor: Matrix,
}

/// Mid-ranks (1-based, ties averaged).
fn ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn fit_copula(data: &Dataset) -> Result<CopulaModel> {
    let n = data.n_rows();
    let d = data.fields.len();
    if n < MIN_ROWS {
        return Err(Error::TooShort { needed: MIN_ROWS, got: n });
    }
    if d < 2 {
        return Err(Error::InvalidArgument("a copula needs at least two fields".into()));
    }
    if !data.values.is_finite() {
        return Err(Error::InvalidArgument("copula input contains non-finite values".into()));
    }
    let columns: Vec<Vec<f64>> = (0..d).map(|j| data.values.column(j)).collect();
    let scores: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| ranks(c).iter().map(|r| stats::normal_quantile(r / (n as f64 + 1.0))).collect())
        .collect();
    let refs: Vec<&[f64]> = scores.iter().map(|s| s.as_slice()).collect();
    let raw = crate::select::correlation_matrix(&refs);
    let eig = symmetric_eigen(&raw)?;
    let lambda: Vec<f64> = eig.values.iter().map(|v| v.max(EIGEN_FLOOR)).collect();
    // Rebuild with the floored spectrum and rescale to a unit diagonal.
    let mut factor = Matrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            factor[(i, k)] = eig.vectors[(i, k)] * sqrt(lambda[k]);
        }
    }
    for i in 0..d {
        let norm = sqrt(factor.row(i).iter().map(|v| v * v).sum::<f64>());
        factor.row_mut(i).iter_mut().for_each(|v| *v /= norm);
    }
    let correlation = factor.matmul(&factor.transpose())?;
    Ok(CopulaModel {
        fields: data.fields.clone(),
        marginals: columns.into_iter().map(|c| stats::sorted(&c)).collect(),
        correlation,
        factor,
    })
}

/// Value of the sorted sample `s` at quantile `u ∈ [0, 1]`.
fn empirical_quantile(s: &[f64], u: f64) -> f64 {
    let pos = u.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(s.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 || s[lo] == s[hi] {
        s[lo]
    } else {
        s[lo] + frac * (s[hi] - s[lo])
    }
}

impl CopulaModel {
    /// `n` synthetic rows; identical for identical seeds.
    pub fn generate(&self, n: usize, seed: u64) -> Dataset {
        let d = self.fields.len();
        let mut rng = rng::stream(seed, &[]);
        let mut data = Vec::with_capacity(n * d);
        let mut eps = alloc::vec![0.0; d];
        for _ in 0..n {
            for e in eps.iter_mut() {
                *e = StandardNormal.sample(&mut rng);
            }
            for j in 0..d {
                let z: f64 = self.factor.row(j).iter().zip(&eps).map(|(a, e)| a * e).sum();
                data.push(empirical_quantile(&self.marginals[j], stats::normal_cdf(z)));
            }
        }
        Dataset { fields: self.fields.clone(), values: Matrix::from_vec(n, d, data).expect("n × d buffer") }
    }
}

/// Jensen-Shannon divergence in bits of two histograms (renormalized).
pub fn js_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(alloc::format!("histograms with {} and {} bins", p.len(), q.len())));
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if !(sp > 0.0 && sq > 0.0) || p.iter().chain(q).any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("histograms must be non-negative with positive mass".into()));
    }
    let h = |v: &mut dyn Iterator<Item = f64>| -> f64 { v.filter(|x| *x > 0.0).map(|x| -x * log2(x)).sum() };
    let hp = h(&mut p.iter().map(|v| v / sp));
    let hq = h(&mut q.iter().map(|v| v / sq));
    let hm = h(&mut p.iter().zip(q).map(|(a, b)| 0.5 * (a / sp + b / sq)));
    Ok((hm - 0.5 * (hp + hq)).clamp(0.0, 1.0))
}

/// Histograms of `a` and `b` on `bins` equal bins over their pooled range
/// (last bin closed). A zero-width range puts everything in the first bin.
pub fn pooled_histograms(a: &[f64], b: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = a.iter().chain(b).fold(f64::INFINITY, |m, v| m.min(*v));
    let hi = a.iter().chain(b).fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let fill = |x: &[f64]| {
        let mut h = alloc::vec![0.0; bins];
        for v in x {
            let k = if hi > lo { (((v - lo) / (hi - lo)) * bins as f64) as usize } else { 0 };
            h[k.min(bins - 1)] += 1.0;
        }
        h
    };
    (fill(a), fill(b))
}

fn column_jsd(a: &[f64], b: &[f64]) -> Result<f64> {
    let (p, q) = pooled_histograms(a, b, HISTOGRAM_BINS);
    js_distance(&p, &q)
}

fn check_pair(original: &Dataset, synthetic: &Dataset) -> Result<()> {
    original.check_fields(synthetic)?;
    if original.n_rows() == 0 || synthetic.n_rows() == 0 {
        return Err(Error::InvalidArgument("stability scores need rows on both sides".into()));
    }
    Ok(())
}

pub fn field_correlation_stability(original: &Dataset, synthetic: &Dataset) -> Result<f64> {
    check_pair(original, synthetic)?;
    let d = original.fields.len();
    if d < 2 {
        return Err(Error::InvalidArgument("field correlation stability needs at least two fields".into()));
    }
    let oc: Vec<Vec<f64>> = (0..d).map(|j| original.values.column(j)).collect();
    let sc: Vec<Vec<f64>> = (0..d).map(|j| synthetic.values.column(j)).collect();
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            total += (stats::pearson(&oc[i], &oc[j]) - stats::pearson(&sc[i], &sc[j])).abs();
            pairs += 1;
        }
    }
    Ok(100.0 * (1.0 - total / pairs as f64 / 2.0))
}

/// Maximum principal components compared by [`deep_structure_stability`].
pub const MAX_COMPONENTS: usize = 5;
/// Explained-variance fraction the compared components must reach.
pub const VARIANCE_TARGET: f64 = 0.95;

pub fn deep_structure_stability(original: &Dataset, synthetic: &Dataset) -> Result<f64> {
    check_pair(original, synthetic)?;
    let d = original.fields.len();
    let n = original.n_rows();
    let mean: Vec<f64> = (0..d).map(|j| stats::mean(&original.values.column(j))).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| stats::std_dev(&original.values.column(j)))
        .map(|s| if s < 1e-12 { 1.0 } else { s })
        .collect();
    let standardize = |m: &Matrix| {
        let mut out = m.clone();
        for i in 0..m.rows() {
            for j in 0..d {
                out[(i, j)] = (m[(i, j)] - mean[j]) / sd[j];
            }
        }
        out
    };
    let zo = standardize(&original.values);
    let zs = standardize(&synthetic.values);
    let mut cov = zo.transpose().matmul(&zo)?;
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= n as f64);
    let eig = symmetric_eigen(&cov)?;
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        // Every field is constant: both projections are identical points.
        return Ok(if column_jsd(&zo.column(0), &zs.column(0))? == 0.0 { 100.0 } else { 0.0 });
    }
    let rank = eig.values.iter().filter(|v| **v > 1e-10 * eig.values[0]).count();
    let mut k = 0;
    let mut acc = 0.0;
    while k < rank.min(MAX_COMPONENTS) {
        acc += eig.values[k];
        k += 1;
        if acc / total >= VARIANCE_TARGET {
            break;
        }
    }
    let mut jsd = 0.0;
    for c in 0..k {
        let v = eig.vectors.column(c);
        let po = zo.matvec(&v);
        let ps = zs.matvec(&v);
        jsd += column_jsd(&po, &ps)?;
    }
    Ok(100.0 * (1.0 - jsd / k as f64))
}

pub fn field_distribution_stability(original: &Dataset, synthetic: &Dataset) -> Result<f64> {
    check_pair(original, synthetic)?;
    let d = original.fields.len();
    if d == 0 {
        return Err(Error::InvalidArgument("no fields to compare".into()));
    }
    let mut jsd = 0.0;
    for j in 0..d {
        jsd += column_jsd(&original.values.column(j), &synthetic.values.column(j))?;
    }
    Ok(100.0 * (1.0 - jsd / d as f64))
}

/// Qualitative band of a percentage score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityBand {
    Excellent,
    Good,
    Moderate,
    Poor,
    VeryPoor,
}

impl QualityBand {
    /// `(80, 100]` Excellent, `(60, 80]` Good, `(40, 60]` Moderate,
    /// `(20, 40]` Poor, `[0, 20]` Very Poor.
    pub fn of(score: f64) -> Self {
        if score > 80.0 {
            QualityBand::Excellent
        } else if score > 60.0 {
            QualityBand::Good
        } else if score > 40.0 {
            QualityBand::Moderate
        } else if score > 20.0 {
            QualityBand::Poor
        } else {
            QualityBand::VeryPoor
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityBand::Excellent => "Excellent",
            QualityBand::Good => "Good",
            QualityBand::Moderate => "Moderate",
            QualityBand::Poor => "Poor",
            QualityBand::VeryPoor => "Very Poor",
        }
    }
}

impl fmt::Display for QualityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQualityReport {
    pub field_correlation_stability: f64,
    pub deep_structure_stability: f64,
    pub field_distribution_stability: f64,
    pub overall: f64,
    pub band: QualityBand,
}

pub fn quality_report(original: &Dataset, synthetic: &Dataset) -> Result<SyntheticQualityReport> {
    let fcs = field_correlation_stability(original, synthetic)?;
    let dss = deep_structure_stability(original, synthetic)?;
    let fds = field_distribution_stability(original, synthetic)?;
    let overall = (fcs + dss + fds) / 3.0;
    Ok(SyntheticQualityReport {
        field_correlation_stability: fcs,
        deep_structure_stability: dss,
        field_distribution_stability: fds,
        overall,
        band: QualityBand::of(overall),
    })
}

/// Name of the label field appended to copula inputs.
pub const LABEL_FIELD: &str = "label";

/// Feature columns plus the label as 0/1 (super-optimal = 1).
pub fn labelled_dataset(fm: &FeatureMatrix) -> Dataset {
    let mut fields = fm.columns().to_vec();
    fields.push(LABEL_FIELD.into());
    let d = fields.len();
    let mut data = Vec::with_capacity(fm.n_rows() * d);
    for i in 0..fm.n_rows() {
        data.extend_from_slice(fm.row(i));
        data.push(if fm.labels()[i].is_positive() { 1.0 } else { 0.0 });
    }
    Dataset { fields, values: Matrix::from_vec(fm.n_rows(), d, data).expect("row buffer") }
}

/// Feature columns only.
pub fn feature_dataset(fm: &FeatureMatrix) -> Dataset {
    Dataset { fields: fm.columns().to_vec(), values: fm.values().clone() }
}

/// Synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Synthetic subjects per condition.
    pub n_subjects: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n_subjects: 180, seed: 0 }
    }
}

/// Synthetic rows for every index and condition in `fm`, fitted separately
/// per (index, condition). Synthetic subject `i` gets id
/// `max(original id) + 1 + i` in every index and condition. The label is a
/// copula field and is thresholded at 0.5.
pub fn synthesize(fm: &FeatureMatrix, cfg: &SynthConfig) -> Result<FeatureMatrix> {
    let first_id = fm.subject_ids().last().map_or(0, |m| m + 1);
    let mut out = FeatureMatrix::empty(fm.columns().to_vec())?;
    for index in fm.index_ids() {
        for cond in Condition::ALL {
            let part = fm.filter_rows(|i| fm.keys()[i].index_id == index && fm.keys()[i].condition == cond);
            if part.n_rows() == 0 {
                continue;
            }
            let gen = synthesize_part(&part, index, cond, first_id, cfg)?;
            out = out.concat(&gen)?;
        }
    }
    Ok(out)
}

fn synthesize_part(part: &FeatureMatrix, index: IndexId, cond: Condition, first_id: u32, cfg: &SynthConfig) -> Result<FeatureMatrix> {
    let model = fit_copula(&labelled_dataset(part))?;
    let index_pos = IndexId::ALL.iter().position(|i| *i == index).expect("known index") as u64;
    let cond_pos = Condition::ALL.iter().position(|c| *c == cond).expect("known condition") as u64;
    let sample = model.generate(cfg.n_subjects, rng::derive_seed(cfg.seed, &[index_pos, cond_pos]));
    let d = part.n_features();
    let mut keys = Vec::with_capacity(cfg.n_subjects);
    let mut labels = Vec::with_capacity(cfg.n_subjects);
    let mut rows = Vec::with_capacity(cfg.n_subjects);
    for i in 0..cfg.n_subjects {
        let row = sample.values.row(i);
        keys.push(RowKey { subject_id: first_id + i as u32, condition: cond, index_id: index });
        labels.push(if row[d] >= 0.5 { WorkloadClass::SuperOptimal } else { WorkloadClass::Suboptimal });
        rows.push(row[..d].to_vec());
    }
    FeatureMatrix::new(part.columns().to_vec(), keys, labels, alloc::vec![true; cfg.n_subjects], rows)
}

/// Quality of `synthetic` against `original` for one index, on the feature
/// columns plus the label, over both conditions. The label keeps at least
/// two fields when selection retains a single feature.
pub fn index_quality(original: &FeatureMatrix, synthetic: &FeatureMatrix, index: IndexId) -> Result<SyntheticQualityReport> {
    quality_report(&labelled_dataset(&original.for_index(index)), &labelled_dataset(&synthetic.for_index(index)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn correlated(n: usize, d: usize, rho: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let common: f64 = StandardNormal.sample(&mut rng);
            for j in 0..d {
                let e: f64 = StandardNormal.sample(&mut rng);
                data.push(3.0 * j as f64 + sqrt(rho) * common + sqrt(1.0 - rho) * e);
            }
        }
        let fields = (0..d).map(|j| alloc::format!("f{j}")).collect();
        Dataset::new(fields, Matrix::from_vec(n, d, data).unwrap()).unwrap()
    }

    #[test]
    fn js_examples() {
        assert_eq!(js_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!((js_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let v = js_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        // H(0.75, 0.25) − ½·1 by hand.
        let hand = -(0.75 * log2(0.75) + 0.25 * log2(0.25)) - 0.5;
        assert!((v - hand).abs() < 1e-15);
        assert!((v - 0.3113).abs() < 1e-4);
        assert!(js_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(js_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn identical_data_scores_100() {
        let d = correlated(200, 5, 0.6, 1);
        let r = quality_report(&d, &d).unwrap();
        assert_eq!(r.field_correlation_stability, 100.0);
        assert_eq!(r.deep_structure_stability, 100.0);
        assert_eq!(r.field_distribution_stability, 100.0);
        assert_eq!(r.overall, 100.0);
        assert_eq!(r.band, QualityBand::Excellent);
    }

    #[test]
    fn disjoint_supports_score_zero() {
        let a = correlated(100, 3, 0.5, 2);
        let shifted = Matrix::from_vec(100, 3, a.values.as_slice().iter().map(|v| v + 1000.0).collect()).unwrap();
        let b = Dataset::new(a.fields.clone(), shifted).unwrap();
        assert_eq!(field_distribution_stability(&a, &b).unwrap(), 0.0);
        assert_eq!(deep_structure_stability(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn sign_flipped_correlations_score_zero_fcs() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let a = Dataset::new(
            vec!["a".to_string(), "b".to_string()],
            Matrix::from_columns(&[x.clone(), x.clone()]).unwrap(),
        )
        .unwrap();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let b = Dataset::new(a.fields.clone(), Matrix::from_columns(&[x.clone(), neg]).unwrap()).unwrap();
        assert_eq!(field_correlation_stability(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn sign_flip_lowers_deep_structure() {
        let a = correlated(300, 2, 0.8, 3);
        let mut flipped = a.values.clone();
        for i in 0..flipped.rows() {
            flipped[(i, 1)] = 2.0 * 3.0 - flipped[(i, 1)];
        }
        let b = Dataset::new(a.fields.clone(), flipped).unwrap();
        assert!(deep_structure_stability(&a, &b).unwrap() < deep_structure_stability(&a, &a).unwrap());
    }

    #[test]
    fn copula_keeps_strong_correlation() {
        let d = correlated(500, 2, 0.9, 4);
        let r0 = stats::pearson(&d.values.column(0), &d.values.column(1));
        assert!(r0 > 0.85);
        let s = fit_copula(&d).unwrap().generate(5000, 9);
        let r = stats::pearson(&s.values.column(0), &s.values.column(1));
        assert!((0.8..=0.97).contains(&r), "{r}");
    }

    #[test]
    fn copula_reproduces_constants_and_is_deterministic() {
        let mut d = correlated(50, 3, 0.3, 5);
        for i in 0..50 {
            d.values[(i, 2)] = 4.25;
        }
        let m = fit_copula(&d).unwrap();
        let a = m.generate(100, 1);
        assert!(a.values.column(2).iter().all(|v| *v == 4.25));
        assert_eq!(a, m.generate(100, 1));
        assert_ne!(a, m.generate(100, 2));
        assert_eq!(a.n_rows(), 100);
        assert!(fit_copula(&correlated(5, 3, 0.3, 0)).is_err());
    }

    #[test]
    fn copula_quality_on_correlated_gaussians() {
        let d = correlated(1000, 5, 0.6, 6);
        let s = fit_copula(&d).unwrap().generate(5000, 7);
        let r = quality_report(&d, &s).unwrap();
        assert!(r.field_correlation_stability >= 90.0, "{r:?}");
        assert!(r.field_distribution_stability >= 85.0, "{r:?}");
        assert!(r.overall >= 85.0, "{r:?}");
    }

    #[test]
    fn band_edges() {
        assert_eq!(QualityBand::of(100.0), QualityBand::Excellent);
        assert_eq!(QualityBand::of(80.0), QualityBand::Good);
        assert_eq!(QualityBand::of(60.0), QualityBand::Moderate);
        assert_eq!(QualityBand::of(40.0), QualityBand::Poor);
        assert_eq!(QualityBand::of(20.0), QualityBand::VeryPoor);
        assert_eq!(QualityBand::of(0.0), QualityBand::VeryPoor);
    }

    #[test]
    fn synthesize_assigns_fresh_subjects_per_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut keys = Vec::new();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for s in 1..=48u32 {
            for c in Condition::ALL {
                let class = if s % 2 == 0 { WorkloadClass::SuperOptimal } else { WorkloadClass::Suboptimal };
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                keys.push(RowKey { subject_id: s, condition: c, index_id: IndexId::At1 });
                labels.push(class);
                rows.push(vec![a + if class.is_positive() { 2.0 } else { 0.0 }, b]);
            }
        }
        let fm = FeatureMatrix::new(vec!["x".into(), "y".into()], keys, labels, vec![false; 96], rows).unwrap();
        let syn = synthesize(&fm, &SynthConfig { n_subjects: 180, seed: 3 }).unwrap();
        assert_eq!(syn.n_rows(), 360);
        assert!(syn.synthetic().iter().all(|s| *s));
        let ids = syn.subject_ids();
        assert_eq!((ids[0], ids[ids.len() - 1], ids.len()), (49, 228, 180));
        let combined = fm.concat(&syn).unwrap();
        assert_eq!(combined.subject_ids().len(), 228);
        // Labels follow the feature that separates them.
        let pos_mean = stats::mean(&(0..syn.n_rows()).filter(|&i| syn.labels()[i].is_positive()).map(|i| syn.row(i)[0]).collect::<Vec<_>>());
        let neg_mean = stats::mean(&(0..syn.n_rows()).filter(|&i| !syn.labels()[i].is_positive()).map(|i| syn.row(i)[0]).collect::<Vec<_>>());
        assert!(pos_mean - neg_mean > 1.0);
        assert_eq!(syn, synthesize(&fm, &SynthConfig { n_subjects: 180, seed: 3 }).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn js_symmetric_and_bounded(p in prop::collection::vec(0.0f64..10.0, 1..20), seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q: Vec<f64> = p.iter().map(|_| { let z: f64 = StandardNormal.sample(&mut rng); z.abs() }).collect();
            prop_assume!(p.iter().sum::<f64>() > 0.0);
            let a = js_distance(&p, &q).unwrap();
            let b = js_distance(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(js_distance(&p, &p).unwrap().abs() < 1e-12);
        }

        #[test]
        fn overall_is_mean_of_scores(seed in 0u64..50) {
            let a = correlated(60, 3, 0.4, seed);
            let b = correlated(60, 3, 0.1, seed + 1000);
            let r = quality_report(&a, &b).unwrap();
            let mean = (r.field_correlation_stability + r.deep_structure_stability + r.field_distribution_stability) / 3.0;
            prop_assert!((r.overall - mean).abs() < 1e-9);
            for s in [r.field_correlation_stability, r.deep_structure_stability, r.field_distribution_stability] {
                prop_assert!((0.0..=100.0).contains(&s));
            }
        }
    }
}
