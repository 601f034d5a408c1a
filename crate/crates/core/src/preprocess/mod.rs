//! Denoising pipeline: average re-reference, zero-phase high-pass, FastICA,
//! automatic rejection of outlier components and inverse reconstruction.

mod components;
mod ica;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use components::{
    component_stats, flag_bad_components, hurst_rs, ComponentStats, GradientMethod, SlopeMethod, Statistic,
    StatsConfig,
};
pub use ica::{fast_ica, IcaConfig, IcaDecomposition};

use crate::linalg::Matrix;
use crate::recording::{Condition, EegRecording};
use crate::signal::{butterworth_highpass, sosfiltfilt};
use crate::{Error, Result};

/// Subtracts the across-channel mean from every sample.
pub fn average_rereference(rec: &EegRecording) -> Result<EegRecording> {
    if rec.n_channels() < 2 {
        return Err(Error::InvalidArgument("average reference needs at least two channels".into()));
    }
    let mut out = rec.samples.clone();
    let n_ch = out.cols() as f64;
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let m = row.iter().sum::<f64>() / n_ch;
        row.iter_mut().for_each(|v| *v -= m);
    }
    Ok(rec.with_samples(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HighpassConfig {
    pub order: usize,
    pub cutoff_hz: f64,
    /// Odd-reflection padding applied at both ends, in seconds.
    pub pad_s: f64,
}

impl Default for HighpassConfig {
    fn default() -> Self {
        Self { order: 4, cutoff_hz: 1.0, pad_s: 1.0 }
    }
}

/// Zero-phase Butterworth high-pass of every channel.
pub fn highpass(rec: &EegRecording, cfg: &HighpassConfig) -> Result<EegRecording> {
    let fs = rec.sampling_rate_hz;
    if fs <= 2.0 * cfg.cutoff_hz {
        return Err(Error::InvalidArgument(alloc::format!(
            "sampling rate {fs} Hz is too low for a {} Hz high-pass",
            cfg.cutoff_hz
        )));
    }
    let sos = butterworth_highpass(cfg.order, cfg.cutoff_hz, fs)?;
    let pad = libm::round(cfg.pad_s * fs) as usize;
    let filtered: Vec<Vec<f64>> =
        (0..rec.n_channels()).map(|j| sosfiltfilt(&sos, &rec.channel(j), pad)).collect();
    Ok(rec.with_samples(Matrix::from_columns(&filtered)?))
}

/// The default 4th-order, 1 Hz, forward-backward high-pass.
pub fn highpass_1hz(rec: &EegRecording) -> Result<EegRecording> {
    highpass(rec, &HighpassConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub highpass: HighpassConfig,
    pub ica: IcaConfig,
    pub stats: StatsConfig,
    /// Components with `|z| >` this value on any statistic are removed.
    /// JSON has no infinity: `null` reads back as `f64::INFINITY`.
    #[serde(deserialize_with = "null_as_infinity")]
    pub z_threshold: f64,
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            highpass: HighpassConfig::default(),
            ica: IcaConfig::default(),
            stats: StatsConfig::default(),
            z_threshold: 3.0,
        }
    }
}

/// What the denoiser removed from one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub subject: u32,
    pub condition: Condition,
    pub n_components: usize,
    pub removed_indices: Vec<usize>,
    pub ica_converged: bool,
    pub ica_iterations: usize,
    pub per_component_stats: ComponentStats,
}

impl RemovalReport {
    pub fn removed_count(&self) -> usize {
        self.removed_indices.len()
    }
}

/// Re-reference and high-pass, i.e. everything before ICA.
pub fn prefilter(rec: &EegRecording, cfg: &DenoiseConfig) -> Result<EegRecording> {
    highpass(&average_rereference(rec)?, &cfg.highpass)
}

/// Full denoising of one recording with an explicit ICA seed.
pub fn denoise(rec: &EegRecording, cfg: &DenoiseConfig, seed: u64) -> Result<(EegRecording, RemovalReport)> {
    let filtered = prefilter(rec, cfg)?;
    let ica_cfg = IcaConfig { seed, ..cfg.ica.clone() };
    let dec = fast_ica(&filtered.samples, &ica_cfg)?;
    let stats = component_stats(&dec, rec.sampling_rate_hz, &cfg.stats)?;
    let removed = flag_bad_components(&stats, cfg.z_threshold);
    let cleaned = dec.reconstruct(&removed);
    let report = RemovalReport {
        subject: rec.subject_id,
        condition: rec.condition,
        n_components: dec.n_components(),
        removed_indices: removed,
        ica_converged: dec.converged,
        ica_iterations: dec.iterations,
        per_component_stats: stats,
    };
    Ok((filtered.with_samples(cleaned), report))
}
