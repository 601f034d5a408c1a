use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spectral,
    Wavelet,
    Statistical,
    Temporal,
}

/// What a catalog entry computes. Indexed kinds refer to one coefficient,
/// scale, bin or percentile of a family whose size is set by
/// [`CatalogParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum FeatureKind {
    FftMeanCoefficient(usize),
    FundamentalFrequency,
    HumanRangeEnergy,
    Lpcc(usize),
    Mfcc(usize),
    MaxPowerSpectrum,
    MaxFrequency,
    MedianFrequency,
    PowerBandwidth,
    SpectralCentroid,
    SpectralDecrease,
    SpectralDistance,
    SpectralEntropy,
    SpectralKurtosis,
    SpectralPositiveTurningPoints,
    SpectralRollOff,
    SpectralRollOn,
    SpectralSkewness,
    SpectralSlope,
    SpectralSpread,
    SpectralVariation,
    WaveletAbsMean(usize),
    WaveletEnergy(usize),
    WaveletEntropy,
    WaveletStd(usize),
    WaveletVariance(usize),
    Ecdf(usize),
    EcdfPercentile(usize),
    EcdfPercentileCount(usize),
    Histogram(usize),
    InterquartileRange,
    Kurtosis,
    Max,
    Mean,
    MeanAbsoluteDeviation,
    Median,
    MedianAbsoluteDeviation,
    Min,
    RootMeanSquare,
    Skewness,
    StandardDeviation,
    Variance,
    AbsoluteEnergy,
    AreaUnderCurve,
    Autocorrelation,
    Centroid,
    Entropy,
    MeanAbsoluteDiff,
    MeanDiff,
    MedianAbsoluteDiff,
    MedianDiff,
    NegativeTurningPoints,
    NeighbourhoodPeaks,
    PeakToPeakDistance,
    PositiveTurningPoints,
    SignalDistance,
    Slope,
    SumAbsoluteDiff,
    TotalEnergy,
    ZeroCrossingRate,
}

impl FeatureKind {
    pub fn domain(self) -> Domain {
        use FeatureKind::*;
        match self {
            WaveletAbsMean(_) | WaveletEnergy(_) | WaveletEntropy | WaveletStd(_) | WaveletVariance(_) => Domain::Wavelet,
            Ecdf(_) | EcdfPercentile(_) | EcdfPercentileCount(_) | Histogram(_) | InterquartileRange | Kurtosis | Max
            | Mean | MeanAbsoluteDeviation | Median | MedianAbsoluteDeviation | Min | RootMeanSquare | Skewness
            | StandardDeviation | Variance => Domain::Statistical,
            AbsoluteEnergy | AreaUnderCurve | Autocorrelation | Centroid | Entropy | MeanAbsoluteDiff | MeanDiff
            | MedianAbsoluteDiff | MedianDiff | NegativeTurningPoints | NeighbourhoodPeaks | PeakToPeakDistance
            | PositiveTurningPoints | SignalDistance | Slope | SumAbsoluteDiff | TotalEnergy | ZeroCrossingRate => {
                Domain::Temporal
            }
            _ => Domain::Spectral,
        }
    }

    /// Display name used for matrix columns.
    pub fn name(self) -> String {
        use FeatureKind::*;
        let indexed = |base: &str, i: usize| alloc::format!("{base}_{i}");
        let plain = |s: &str| String::from(s);
        match self {
            FftMeanCoefficient(i) => indexed("FFT mean coefficient", i),
            FundamentalFrequency => plain("Fundamental frequency"),
            HumanRangeEnergy => plain("Human range energy"),
            Lpcc(i) => indexed("LPCC", i),
            Mfcc(i) => indexed("MFCC", i),
            MaxPowerSpectrum => plain("Maximum power spectrum"),
            MaxFrequency => plain("Maximum frequency"),
            MedianFrequency => plain("Median frequency"),
            PowerBandwidth => plain("Power bandwidth"),
            SpectralCentroid => plain("Spectral centroid"),
            SpectralDecrease => plain("Spectral decrease"),
            SpectralDistance => plain("Spectral distance"),
            SpectralEntropy => plain("Spectral entropy"),
            SpectralKurtosis => plain("Spectral kurtosis"),
            SpectralPositiveTurningPoints => plain("Spectral positive turning points"),
            SpectralRollOff => plain("Spectral roll-off"),
            SpectralRollOn => plain("Spectral roll-on"),
            SpectralSkewness => plain("Spectral skewness"),
            SpectralSlope => plain("Spectral slope"),
            SpectralSpread => plain("Spectral spread"),
            SpectralVariation => plain("Spectral variation"),
            WaveletAbsMean(i) => indexed("Wavelet absolute mean", i),
            WaveletEnergy(i) => indexed("Wavelet energy", i),
            WaveletEntropy => plain("Wavelet entropy"),
            WaveletStd(i) => indexed("Wavelet standard deviation", i),
            WaveletVariance(i) => indexed("Wavelet variance", i),
            Ecdf(i) => indexed("ECDF", i),
            EcdfPercentile(i) => indexed("ECDF Percentile", i),
            EcdfPercentileCount(i) => indexed("ECDF Percentile Count", i),
            Histogram(i) => indexed("Histogram", i),
            InterquartileRange => plain("Interquartile range"),
            Kurtosis => plain("Kurtosis"),
            Max => plain("Max"),
            Mean => plain("Mean"),
            MeanAbsoluteDeviation => plain("Mean absolute deviation"),
            Median => plain("Median"),
            MedianAbsoluteDeviation => plain("Median absolute deviation"),
            Min => plain("Min"),
            RootMeanSquare => plain("Root mean square"),
            Skewness => plain("Skewness"),
            StandardDeviation => plain("Standard deviation"),
            Variance => plain("Variance"),
            AbsoluteEnergy => plain("Absolute energy"),
            AreaUnderCurve => plain("Area under the curve"),
            Autocorrelation => plain("Autocorrelation"),
            Centroid => plain("Centroid"),
            Entropy => plain("Entropy"),
            MeanAbsoluteDiff => plain("Mean absolute diff"),
            MeanDiff => plain("Mean diff"),
            MedianAbsoluteDiff => plain("Median absolute diff"),
            MedianDiff => plain("Median diff"),
            NegativeTurningPoints => plain("Negative turning points"),
            NeighbourhoodPeaks => plain("Neighbourhood peaks"),
            PeakToPeakDistance => plain("Peak to peak distance"),
            PositiveTurningPoints => plain("Positive turning points"),
            SignalDistance => plain("Signal distance"),
            Slope => plain("Slope"),
            SumAbsoluteDiff => plain("Sum absolute diff"),
            TotalEnergy => plain("Total energy"),
            ZeroCrossingRate => plain("Zero crossing rate"),
        }
    }
}

/// Family sizes and constants shared by the catalog entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogParams {
    /// Transform length of the FFT mean coefficients (zero-padded segments).
    pub fft_length: usize,
    pub fft_coefficients: usize,
    pub lpc_order: usize,
    pub mel_filters: usize,
    pub mfcc_count: usize,
    /// Ricker widths `1..=wavelet_widths`.
    pub wavelet_widths: usize,
    pub ecdf_points: usize,
    pub ecdf_percentiles: Vec<f64>,
    pub histogram_bins: usize,
    pub neighbourhood: usize,
    /// Band of the human range energy ratio, in Hz.
    pub human_range_hz: (f64, f64),
    /// Shortest series accepted by the extractor.
    pub min_length: usize,
}

impl Default for CatalogParams {
    fn default() -> Self {
        Self {
            fft_length: 256,
            fft_coefficients: 76,
            lpc_order: 12,
            mel_filters: 26,
            mfcc_count: 12,
            wavelet_widths: 9,
            ecdf_points: 10,
            ecdf_percentiles: alloc::vec![0.2, 0.8],
            histogram_bins: 10,
            neighbourhood: 10,
            human_range_hz: (0.6, 2.5),
            min_length: 16,
        }
    }
}

impl CatalogParams {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(alloc::format!("catalog parameter {what}")));
        if self.fft_length < 2 || self.fft_coefficients == 0 || self.fft_coefficients > self.fft_length / 2 + 1 {
            return bad("fft_coefficients must be in 1..=fft_length/2+1");
        }
        if self.lpc_order == 0 || self.lpc_order >= self.min_length {
            return bad("lpc_order must be in 1..min_length");
        }
        if self.mel_filters == 0 || self.mfcc_count == 0 || self.mfcc_count >= self.mel_filters {
            return bad("mfcc_count must be in 1..mel_filters");
        }
        if self.wavelet_widths == 0 || self.histogram_bins == 0 || self.neighbourhood == 0 {
            return bad("wavelet_widths, histogram_bins and neighbourhood must be positive");
        }
        if self.ecdf_points > self.min_length {
            return bad("ecdf_points must not exceed min_length");
        }
        if self.ecdf_percentiles.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return bad("ecdf_percentiles must lie in (0, 1]");
        }
        if self.min_length < 4 {
            return bad("min_length must be at least 4");
        }
        Ok(())
    }

    fn family_size(&self, kind: FeatureKind) -> Option<usize> {
        use FeatureKind::*;
        match kind {
            FftMeanCoefficient(_) => Some(self.fft_coefficients),
            Lpcc(_) => Some(self.lpc_order + 1),
            Mfcc(_) => Some(self.mfcc_count),
            WaveletAbsMean(_) | WaveletEnergy(_) | WaveletStd(_) | WaveletVariance(_) => Some(self.wavelet_widths),
            Ecdf(_) => Some(self.ecdf_points),
            EcdfPercentile(_) | EcdfPercentileCount(_) => Some(self.ecdf_percentiles.len()),
            Histogram(_) => Some(self.histogram_bins),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub domain: Domain,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureDef {
    pub fn new(kind: FeatureKind) -> Self {
        Self { name: kind.name(), domain: kind.domain(), kind }
    }
}

/// Ordered, immutable list of features to extract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub params: CatalogParams,
    pub features: Vec<FeatureDef>,
}

impl FeatureCatalog {
    /// The full 210-entry catalog.
    pub fn standard() -> Self {
        Self::with_params(CatalogParams::default()).expect("default catalog parameters are valid")
    }

    /// Every family expanded to the sizes in `params`, in the standard order.
    pub fn with_params(params: CatalogParams) -> Result<Self> {
        use FeatureKind::*;
        params.validate()?;
        let mut kinds = Vec::new();
        kinds.extend((0..params.fft_coefficients).map(FftMeanCoefficient));
        kinds.extend([FundamentalFrequency, HumanRangeEnergy]);
        kinds.extend((0..=params.lpc_order).map(Lpcc));
        kinds.extend((0..params.mfcc_count).map(Mfcc));
        kinds.extend([
            MaxPowerSpectrum,
            MaxFrequency,
            MedianFrequency,
            PowerBandwidth,
            SpectralCentroid,
            SpectralDecrease,
            SpectralDistance,
            SpectralEntropy,
            SpectralKurtosis,
            SpectralPositiveTurningPoints,
            SpectralRollOff,
            SpectralRollOn,
            SpectralSkewness,
            SpectralSlope,
            SpectralSpread,
            SpectralVariation,
        ]);
        let w = params.wavelet_widths;
        kinds.extend((0..w).map(WaveletAbsMean));
        kinds.extend((0..w).map(WaveletEnergy));
        kinds.push(WaveletEntropy);
        kinds.extend((0..w).map(WaveletStd));
        kinds.extend((0..w).map(WaveletVariance));
        kinds.extend((0..params.ecdf_points).map(Ecdf));
        kinds.extend((0..params.ecdf_percentiles.len()).map(EcdfPercentile));
        kinds.extend((0..params.ecdf_percentiles.len()).map(EcdfPercentileCount));
        kinds.extend((0..params.histogram_bins).map(Histogram));
        kinds.extend([
            InterquartileRange,
            Kurtosis,
            Max,
            Mean,
            MeanAbsoluteDeviation,
            Median,
            MedianAbsoluteDeviation,
            Min,
            RootMeanSquare,
            Skewness,
            StandardDeviation,
            Variance,
            AbsoluteEnergy,
            AreaUnderCurve,
            Autocorrelation,
            Centroid,
            Entropy,
            MeanAbsoluteDiff,
            MeanDiff,
            MedianAbsoluteDiff,
            MedianDiff,
            NegativeTurningPoints,
            NeighbourhoodPeaks,
            PeakToPeakDistance,
            PositiveTurningPoints,
            SignalDistance,
            Slope,
            SumAbsoluteDiff,
            TotalEnergy,
            ZeroCrossingRate,
        ]);
        Self::new(params, kinds.into_iter().map(FeatureDef::new).collect())
    }

    /// Validates names (unique) and family indices against `params`.
    pub fn new(params: CatalogParams, features: Vec<FeatureDef>) -> Result<Self> {
        params.validate()?;
        for (i, f) in features.iter().enumerate() {
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate feature `{}`", f.name)));
            }
            let index = match f.kind {
                FeatureKind::FftMeanCoefficient(i)
                | FeatureKind::Lpcc(i)
                | FeatureKind::Mfcc(i)
                | FeatureKind::WaveletAbsMean(i)
                | FeatureKind::WaveletEnergy(i)
                | FeatureKind::WaveletStd(i)
                | FeatureKind::WaveletVariance(i)
                | FeatureKind::Ecdf(i)
                | FeatureKind::EcdfPercentile(i)
                | FeatureKind::EcdfPercentileCount(i)
                | FeatureKind::Histogram(i) => Some(i),
                _ => None,
            };
            if let (Some(i), Some(size)) = (index, params.family_size(f.kind)) {
                if i >= size {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "feature `{}` index {i} exceeds its family size {size}",
                        f.name
                    )));
                }
            }
        }
        Ok(Self { params, features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// The named entries, in catalog order.
    pub fn subset(&self, names: &[String]) -> Result<Self> {
        for n in names {
            if self.position(n).is_none() {
                return Err(Error::InvalidArgument(alloc::format!("unknown feature `{n}`")));
            }
        }
        let features = self.features.iter().filter(|f| names.contains(&f.name)).cloned().collect();
        Self::new(self.params.clone(), features)
    }
}
