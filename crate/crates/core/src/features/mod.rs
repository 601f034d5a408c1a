//! High-level feature catalog computed on workload-index series.
//!
//! [`FeatureCatalog::standard`] lists 210 features in four domains:
//! spectral (FFT mean coefficients, LPCC, MFCC and scalar spectral shape
//! measures), wavelet (Ricker CWT statistics per scale), statistical
//! (ECDF, histogram and moments) and temporal (differences, turning points,
//! energies). Formulas live in [`compute`].

mod catalog;
pub mod compute;
mod matrix;

use alloc::vec::Vec;
use core::cell::OnceCell;

use libm::fabs;
use serde::{Deserialize, Serialize};

pub use catalog::{CatalogParams, Domain, FeatureCatalog, FeatureDef, FeatureKind};
pub use matrix::{FeatureMatrix, RowKey};

use crate::bandindex::{IndexId, IndexSeries};
use crate::recording::{map_rating_to_class, Condition, Rating};
use crate::stats;
use crate::{Error, Result};
use compute::Value;

/// Feature values for one series plus the indices of degenerate entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub degenerate: Vec<usize>,
}

struct Analysis<'a> {
    x: &'a [f64],
    fs: f64,
    params: &'a CatalogParams,
    sorted: OnceCell<Vec<f64>>,
    spectrum: OnceCell<(Vec<f64>, Vec<f64>)>,
    fft_mean: OnceCell<Vec<f64>>,
    lpcc: OnceCell<(Vec<f64>, bool)>,
    mfcc: OnceCell<(Vec<f64>, bool)>,
    cwt: OnceCell<Vec<Vec<f64>>>,
    histogram: OnceCell<Vec<f64>>,
}

impl<'a> Analysis<'a> {
    fn new(x: &'a [f64], fs: f64, params: &'a CatalogParams) -> Self {
        Self {
            x,
            fs,
            params,
            sorted: OnceCell::new(),
            spectrum: OnceCell::new(),
            fft_mean: OnceCell::new(),
            lpcc: OnceCell::new(),
            mfcc: OnceCell::new(),
            cwt: OnceCell::new(),
            histogram: OnceCell::new(),
        }
    }

    fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| stats::sorted(self.x))
    }

    fn spectrum(&self) -> (&[f64], &[f64]) {
        let (f, m) = self.spectrum.get_or_init(|| compute::magnitude_spectrum(self.x, self.fs));
        (f, m)
    }

    fn cwt_row(&self, i: usize) -> &[f64] {
        &self.cwt.get_or_init(|| compute::cwt(self.x, self.params.wavelet_widths))[i]
    }

    fn value(&self, kind: FeatureKind) -> Value {
        use compute::*;
        use FeatureKind::*;
        let x = self.x;
        let fs = self.fs;
        let p = self.params;
        let (f, mag) = match kind.domain() {
            Domain::Spectral => self.spectrum(),
            _ => (&[][..], &[][..]),
        };
        let degenerate_if = |v: f64, bad: bool| if bad { Value::DEGENERATE } else { Value::ok(v) };
        match kind {
            FftMeanCoefficient(i) => Value::ok(self.fft_mean.get_or_init(|| fft_mean_coefficients(x, p))[i]),
            FundamentalFrequency => fundamental_frequency(x, fs),
            HumanRangeEnergy => human_range_energy(x, fs, p.human_range_hz),
            Lpcc(i) => {
                let (c, bad) = self.lpcc.get_or_init(|| lpcc(x, p.lpc_order));
                degenerate_if(c[i], *bad)
            }
            Mfcc(i) => {
                let (c, bad) = self.mfcc.get_or_init(|| mfcc(x, fs, p));
                degenerate_if(c[i], *bad)
            }
            MaxPowerSpectrum => max_power_spectrum(x, fs),
            MaxFrequency => max_frequency(f, mag),
            MedianFrequency => median_frequency(f, mag),
            PowerBandwidth => power_bandwidth(x, fs),
            SpectralCentroid => spectral_centroid(f, mag),
            SpectralDecrease => spectral_decrease(mag),
            SpectralDistance => spectral_distance(mag),
            SpectralEntropy => spectral_entropy(x, fs),
            SpectralKurtosis => spectral_kurtosis(f, mag),
            SpectralPositiveTurningPoints => spectral_positive_turning_points(mag),
            SpectralRollOff => spectral_roll_off(f, mag),
            SpectralRollOn => spectral_roll_on(f, mag),
            SpectralSkewness => spectral_skewness(f, mag),
            SpectralSlope => spectral_slope(f, mag),
            SpectralSpread => spectral_spread(f, mag),
            SpectralVariation => spectral_variation(mag),
            WaveletAbsMean(i) => Value::ok(fabs(stats::mean(self.cwt_row(i)))),
            WaveletEnergy(i) => {
                let row = self.cwt_row(i);
                Value::ok(row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64)
            }
            WaveletEntropy => wavelet_entropy(x, self.cwt.get_or_init(|| cwt(x, p.wavelet_widths))),
            WaveletStd(i) => Value::ok(stats::std_dev(self.cwt_row(i))),
            WaveletVariance(i) => Value::ok(stats::variance(self.cwt_row(i))),
            Ecdf(i) => Value::ok(ecdf(self.sorted(), p.ecdf_points)[i]),
            EcdfPercentile(i) => Value::ok(ecdf_percentile(self.sorted(), p.ecdf_percentiles[i])),
            EcdfPercentileCount(i) => {
                let v = ecdf_percentile(self.sorted(), p.ecdf_percentiles[i]);
                Value::ok(x.iter().filter(|s| **s <= v).count() as f64)
            }
            Histogram(i) => Value::ok(self.histogram.get_or_init(|| histogram(x, p.histogram_bins))[i]),
            InterquartileRange => {
                let s = self.sorted();
                Value::ok(stats::percentile_sorted(s, 75.0) - stats::percentile_sorted(s, 25.0))
            }
            Kurtosis => stats::kurtosis(x).map_or(Value::DEGENERATE, Value::ok),
            Max => Value::ok(*self.sorted().last().unwrap_or(&0.0)),
            Mean => Value::ok(stats::mean(x)),
            MeanAbsoluteDeviation => Value::ok(mean_absolute_deviation(x)),
            Median => Value::ok(stats::percentile_sorted(self.sorted(), 50.0)),
            MedianAbsoluteDeviation => Value::ok(median_absolute_deviation(x)),
            Min => Value::ok(*self.sorted().first().unwrap_or(&0.0)),
            RootMeanSquare => Value::ok(root_mean_square(x)),
            Skewness => stats::skewness(x).map_or(Value::DEGENERATE, Value::ok),
            StandardDeviation => Value::ok(stats::std_dev(x)),
            Variance => Value::ok(stats::variance(x)),
            AbsoluteEnergy => Value::ok(absolute_energy(x)),
            AreaUnderCurve => Value::ok(area_under_curve(x, fs)),
            Autocorrelation => autocorrelation(x),
            Centroid => centroid(x, fs),
            Entropy => entropy(self.sorted()),
            MeanAbsoluteDiff => Value::ok(mean_abs_diff(x)),
            MeanDiff => Value::ok(mean_diff(x)),
            MedianAbsoluteDiff => Value::ok(median_abs_diff(x)),
            MedianDiff => Value::ok(median_diff(x)),
            NegativeTurningPoints => Value::ok(negative_turning_count(x) as f64),
            NeighbourhoodPeaks => Value::ok(neighbourhood_peaks(x, p.neighbourhood) as f64),
            PeakToPeakDistance => {
                let s = self.sorted();
                Value::ok(fabs(s[s.len() - 1] - s[0]))
            }
            PositiveTurningPoints => Value::ok(positive_turning_count(x) as f64),
            SignalDistance => Value::ok(signal_distance(x)),
            Slope => Value::ok(slope(x)),
            SumAbsoluteDiff => Value::ok(sum_abs_diff(x)),
            TotalEnergy => total_energy(x, fs),
            ZeroCrossingRate => degenerate_if(zero_crossing_rate(x), stats::variance(x) == 0.0),
        }
    }
}

/// Computes every catalog entry for one series sampled at `fs` (index
/// series have one value per second, so `fs = 1`).
pub fn extract_values(x: &[f64], catalog: &FeatureCatalog, fs: f64) -> Result<FeatureVector> {
    if x.len() < catalog.params.min_length {
        return Err(Error::TooShort { needed: catalog.params.min_length, got: x.len() });
    }
    if !(fs > 0.0) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series must be finite with a positive sampling rate".into()));
    }
    let analysis = Analysis::new(x, fs, &catalog.params);
    let mut values = Vec::with_capacity(catalog.len());
    let mut degenerate = Vec::new();
    for (j, def) in catalog.features.iter().enumerate() {
        let v = analysis.value(def.kind);
        if v.degenerate {
            degenerate.push(j);
        }
        values.push(v.value);
    }
    Ok(FeatureVector { values, degenerate })
}

pub fn extract_features(series: &IndexSeries, catalog: &FeatureCatalog, fs: f64) -> Result<FeatureVector> {
    extract_values(&series.values, catalog, fs)
}

/// Bookkeeping from [`extract_all`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// `(row, column)` cells whose value was undefined and set to 0.
    pub degenerate_cells: Vec<(usize, usize)>,
    /// Series without any rating for their subject and condition.
    pub unlabelled: Vec<(u32, Condition, IndexId)>,
    /// Series dropped because the rating was the neutral 5.
    pub neutral: Vec<(u32, Condition, IndexId)>,
}

/// One labelled row per series. Series rated 5 or without a rating are
/// dropped and listed in the report.
pub fn extract_all(
    series: &[IndexSeries],
    catalog: &FeatureCatalog,
    ratings: &[Rating],
    fs: f64,
) -> Result<(FeatureMatrix, ExtractionReport)> {
    extract_all_with(series, catalog, ratings, fs, |s| extract_features(s, catalog, fs))
}

/// [`extract_all`] with a caller-supplied extractor (used by parallel
/// drivers that precompute the vectors).
pub fn extract_all_with<F>(
    series: &[IndexSeries],
    catalog: &FeatureCatalog,
    ratings: &[Rating],
    _fs: f64,
    mut extract: F,
) -> Result<(FeatureMatrix, ExtractionReport)>
where
    F: FnMut(&IndexSeries) -> Result<FeatureVector>,
{
    let mut report = ExtractionReport::default();
    let mut keys = Vec::new();
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for s in series {
        let key = (s.subject_id, s.condition, s.index_id);
        let Some(rating) = ratings.iter().find(|r| r.subject_id == s.subject_id && r.condition == s.condition) else {
            report.unlabelled.push(key);
            continue;
        };
        let Some(class) = map_rating_to_class(i64::from(rating.score))? else {
            report.neutral.push(key);
            continue;
        };
        let fv = extract(s)?;
        if fv.values.len() != catalog.len() {
            return Err(Error::Shape(alloc::format!(
                "extractor returned {} values for a {}-entry catalog",
                fv.values.len(),
                catalog.len()
            )));
        }
        let row = rows.len();
        report.degenerate_cells.extend(fv.degenerate.iter().map(|&j| (row, j)));
        keys.push(RowKey { subject_id: s.subject_id, condition: s.condition, index_id: s.index_id });
        labels.push(class);
        rows.push(fv.values);
    }
    let n = rows.len();
    let fm = FeatureMatrix::new(catalog.names(), keys, labels, alloc::vec![false; n], rows)?;
    Ok((fm, report))
}

#[cfg(test)]
mod tests;
