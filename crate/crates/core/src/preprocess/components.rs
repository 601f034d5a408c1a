//! Per-component artifact statistics and the z-score outlier rule.
//!
//! Four statistics are computed for every ICA source: kurtosis of its
//! power spectrum, the slope of its spectrum, its Hurst exponent and the
//! median of its sample-to-sample gradient. Each is z-scored across the
//! components of one recording.

use alloc::vec::Vec;

use libm::{fabs, log, log10};
use serde::{Deserialize, Serialize};

use super::ica::IcaDecomposition;
use crate::signal::welch;
use crate::stats::{kurtosis, linear_fit, mean, median, std_dev, zscores};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    SpectralKurtosis,
    Slope,
    Hurst,
    GradientMedian,
}

impl Statistic {
    pub const ALL: [Statistic; 4] =
        [Statistic::SpectralKurtosis, Statistic::Slope, Statistic::Hurst, Statistic::GradientMedian];
}

/// How the spectral slope is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMethod {
    /// Least-squares slope of log10 power against log10 frequency.
    LogLog,
    /// Least-squares slope of power in dB against frequency in Hz.
    DecibelPerHz,
}

/// How the time-course gradient is summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Median of `|x[t+1] - x[t]|`.
    AbsoluteDiff,
    /// Median of `x[t+1] - x[t]`.
    SignedDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    /// Welch segment length used for the component spectra.
    pub welch_segment_s: f64,
    pub hurst_min_window: usize,
    pub slope: SlopeMethod,
    pub gradient: GradientMethod,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            band_lo_hz: 1.0,
            band_hi_hz: 45.0,
            welch_segment_s: 2.0,
            hurst_min_window: 16,
            slope: SlopeMethod::LogLog,
            gradient: GradientMethod::AbsoluteDiff,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatValues {
    pub spectral_kurtosis: Vec<f64>,
    pub slope: Vec<f64>,
    pub hurst: Vec<f64>,
    pub gradient_median: Vec<f64>,
}

impl StatValues {
    pub fn get(&self, s: Statistic) -> &[f64] {
        match s {
            Statistic::SpectralKurtosis => &self.spectral_kurtosis,
            Statistic::Slope => &self.slope,
            Statistic::Hurst => &self.hurst,
            Statistic::GradientMedian => &self.gradient_median,
        }
    }

    fn get_mut(&mut self, s: Statistic) -> &mut Vec<f64> {
        match s {
            Statistic::SpectralKurtosis => &mut self.spectral_kurtosis,
            Statistic::Slope => &mut self.slope,
            Statistic::Hurst => &mut self.hurst,
            Statistic::GradientMedian => &mut self.gradient_median,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub raw: StatValues,
    pub z: StatValues,
    /// Statistics whose spread across components was zero (z set to 0).
    pub degenerate_statistics: Vec<Statistic>,
    /// Components with a constant time course (raw statistics set to 0).
    pub constant_components: Vec<usize>,
}

impl ComponentStats {
    pub fn n_components(&self) -> usize {
        self.raw.hurst.len()
    }

    /// Builds z-scores from raw statistics.
    pub fn from_raw(raw: StatValues) -> Self {
        let mut z = StatValues::default();
        let mut degenerate = Vec::new();
        for s in Statistic::ALL {
            let (scores, flat) = zscores(raw.get(s));
            if flat {
                degenerate.push(s);
            }
            *z.get_mut(s) = scores;
        }
        Self { raw, z, degenerate_statistics: degenerate, constant_components: Vec::new() }
    }
}

/// Rescaled-range Hurst exponent over dyadic windows from `min_window` up
/// to `n / 4` samples. `None` when fewer than two window sizes fit or the
/// series is constant.
pub fn hurst_rs(x: &[f64], min_window: usize) -> Option<f64> {
    let n = x.len();
    let mut sizes = Vec::new();
    let mut w = min_window.max(4);
    while w <= n / 4 {
        sizes.push(w);
        w *= 2;
    }
    if sizes.len() < 2 {
        return None;
    }
    let mut log_w = Vec::new();
    let mut log_rs = Vec::new();
    for &w in &sizes {
        let mut total = 0.0;
        let mut count = 0usize;
        for chunk in x.chunks_exact(w) {
            let m = mean(chunk);
            let sd = std_dev(chunk);
            if sd <= 0.0 {
                continue;
            }
            let mut cum = 0.0;
            let mut lo = 0.0f64;
            let mut hi = 0.0f64;
            for v in chunk {
                cum += v - m;
                lo = lo.min(cum);
                hi = hi.max(cum);
            }
            total += (hi - lo) / sd;
            count += 1;
        }
        if count > 0 {
            log_w.push(log(w as f64));
            log_rs.push(log(total / count as f64));
        }
    }
    if log_w.len() < 2 {
        return None;
    }
    Some(linear_fit(&log_w, &log_rs).0)
}

fn spectral_stats(x: &[f64], fs: f64, cfg: &StatsConfig) -> (f64, f64) {
    let nperseg = (libm::round(cfg.welch_segment_s * fs) as usize).max(8);
    let (freqs, psd) = welch(x, fs, nperseg);
    let (f_band, p_band): (Vec<f64>, Vec<f64>) = freqs
        .iter()
        .zip(&psd)
        .filter(|(f, _)| **f >= cfg.band_lo_hz && **f <= cfg.band_hi_hz)
        .map(|(f, p)| (*f, *p))
        .unzip();
    let sk = kurtosis(&p_band).unwrap_or(0.0);
    let floor = 1e-300;
    let slope = match cfg.slope {
        SlopeMethod::LogLog => {
            let lf: Vec<f64> = f_band.iter().map(|f| log10(*f)).collect();
            let lp: Vec<f64> = p_band.iter().map(|p| log10(p.max(floor))).collect();
            linear_fit(&lf, &lp).0
        }
        SlopeMethod::DecibelPerHz => {
            let db: Vec<f64> = p_band.iter().map(|p| 10.0 * log10(p.max(floor))).collect();
            linear_fit(&f_band, &db).0
        }
    };
    (sk, slope)
}

/// Computes the four statistics for every component and z-scores them.
pub fn component_stats(dec: &IcaDecomposition, sampling_rate_hz: f64, cfg: &StatsConfig) -> Result<ComponentStats> {
    let k = dec.n_components();
    if k < 2 {
        return Err(Error::InvalidArgument("component statistics need at least two components".into()));
    }
    if cfg.band_lo_hz >= sampling_rate_hz / 2.0 || cfg.band_lo_hz >= cfg.band_hi_hz {
        return Err(Error::BandOutOfRange { lo: cfg.band_lo_hz, hi: cfg.band_hi_hz, nyquist: sampling_rate_hz / 2.0 });
    }
    let mut raw = StatValues::default();
    let mut constant = Vec::new();
    for c in 0..k {
        let s = dec.sources.column(c);
        let scale = s.iter().fold(0.0f64, |a, v| a.max(fabs(*v)));
        if !(std_dev(&s) > 1e-12 * scale.max(1e-300)) {
            constant.push(c);
            for stat in Statistic::ALL {
                raw.get_mut(stat).push(0.0);
            }
            continue;
        }
        let (sk, slope) = spectral_stats(&s, sampling_rate_hz, cfg);
        raw.spectral_kurtosis.push(sk);
        raw.slope.push(slope);
        raw.hurst.push(hurst_rs(&s, cfg.hurst_min_window).unwrap_or(0.5));
        let diffs: Vec<f64> = s
            .windows(2)
            .map(|w| match cfg.gradient {
                GradientMethod::AbsoluteDiff => fabs(w[1] - w[0]),
                GradientMethod::SignedDiff => w[1] - w[0],
            })
            .collect();
        raw.gradient_median.push(median(&diffs));
    }
    let mut stats = ComponentStats::from_raw(raw);
    stats.constant_components = constant;
    Ok(stats)
}

/// Indices (ascending) of components with `|z| > threshold` on any statistic.
pub fn flag_bad_components(stats: &ComponentStats, threshold: f64) -> Vec<usize> {
    (0..stats.n_components())
        .filter(|&c| Statistic::ALL.iter().any(|&s| fabs(stats.z.get(s)[c]) > threshold))
        .collect()
}
