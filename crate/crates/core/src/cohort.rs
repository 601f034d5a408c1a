//! Deterministic synthetic EEG cohort used for the demo run and for tests.
//!
//! Each recording mixes `n_sources` bursty cortical sources into the 14
//! channels of the reference headset. Every source shares one spectral
//! recipe (red broadband activity plus theta and alpha rhythms under a
//! log-normal envelope) and has its own random scalp map. Super-optimal
//! subjects carry `theta_effect` more theta-rhythm power. Optional eye
//! blinks are Gaussian bumps projected mostly onto the frontal channels.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, sqrt};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::recording::{Condition, EegRecording, Rating, WorkloadClass, STEW_CHANNELS};
use crate::rng::stream;
use crate::signal::{bandpass_biquad, sosfilt};
use crate::stats::std_dev;
use crate::{Error, Result};

/// Relative blink weight per channel, in [`STEW_CHANNELS`] order.
pub const BLINK_TOPOGRAPHY: [f64; 14] =
    [1.0, 0.6, 0.5, 0.25, 0.08, 0.04, 0.03, 0.03, 0.04, 0.08, 0.25, 0.5, 0.6, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub n_subjects: usize,
    pub duration_s: f64,
    pub sampling_rate_hz: f64,
    pub n_sources: usize,
    /// RMS of one source at the scalp before mixing, in microvolts.
    pub source_amplitude_uv: f64,
    /// Extra theta-rhythm power of super-optimal subjects (0.5 = +50%).
    pub theta_effect: f64,
    /// Standard deviation of the per-subject log power gain of each rhythm.
    pub subject_log_sd: f64,
    /// Per-subject perturbation of the shared scalp maps, relative to their
    /// entries' unit scale.
    pub map_jitter: f64,
    pub sensor_noise_uv: f64,
    /// Peak blink amplitude at AF3/AF4; 0 disables blinks.
    pub blink_amplitude_uv: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_subjects: 20,
            duration_s: 60.0,
            sampling_rate_hz: 128.0,
            n_sources: 12,
            source_amplitude_uv: 10.0,
            theta_effect: 0.5,
            subject_log_sd: 0.02,
            map_jitter: 0.02,
            sensor_noise_uv: 0.2,
            blink_amplitude_uv: 0.0,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn n_samples(&self) -> usize {
        libm::round(self.duration_s * self.sampling_rate_hz) as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::InvalidArgument("cohort needs at least one subject".into()));
        }
        if !(self.sampling_rate_hz >= 32.0) {
            return Err(Error::InvalidArgument("cohort sampling rate must be at least 32 Hz".into()));
        }
        if self.n_samples() < 2 * STEW_CHANNELS.len() {
            return Err(Error::TooShort { needed: 2 * STEW_CHANNELS.len(), got: self.n_samples() });
        }
        if !(self.map_jitter >= 0.0) {
            return Err(Error::InvalidArgument("map_jitter must be non-negative".into()));
        }
        if self.n_sources == 0 || self.n_sources >= STEW_CHANNELS.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "n_sources must be in 1..{}, got {}",
                STEW_CHANNELS.len(),
                self.n_sources
            )));
        }
        Ok(())
    }
}

/// Ground truth for one simulated subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortSubject {
    pub subject_id: u32,
    pub class: WorkloadClass,
    pub rest_rating: u8,
    pub simkap_rating: u8,
}

impl CohortSubject {
    pub fn rating(&self, condition: Condition) -> u8 {
        match condition {
            Condition::Rest => self.rest_rating,
            Condition::Simkap => self.simkap_rating,
        }
    }
}

/// Even-numbered subjects are super-optimal; ratings are drawn from 1-4 or
/// 6-9 to match the class.
pub fn cohort_subjects(cfg: &CohortConfig) -> Vec<CohortSubject> {
    (1..=cfg.n_subjects as u32)
        .map(|id| {
            let class = if id % 2 == 0 { WorkloadClass::SuperOptimal } else { WorkloadClass::Suboptimal };
            let mut rng = stream(cfg.seed, &[0x5241_5449, u64::from(id)]);
            let base = if class.is_positive() { 6 } else { 1 };
            CohortSubject {
                subject_id: id,
                class,
                rest_rating: base + rng.random_range(0..4u8),
                simkap_rating: base + rng.random_range(0..4u8),
            }
        })
        .collect()
}

pub fn cohort_ratings(subjects: &[CohortSubject]) -> Vec<Rating> {
    subjects
        .iter()
        .flat_map(|s| {
            Condition::ALL.into_iter().map(move |c| Rating {
                subject_id: s.subject_id,
                condition: c,
                score: s.rating(c),
            })
        })
        .collect()
}

/// A simulated recording split into its clean and blink contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedParts {
    /// Cortical sources plus sensor noise, `n_samples × 14`.
    pub clean: Matrix,
    /// Blink contribution at the scalp, `n_samples × 14` (zero if disabled).
    pub blink: Matrix,
    /// Unit-peak blink time course.
    pub blink_source: Vec<f64>,
}

impl SimulatedParts {
    pub fn combined(&self) -> Matrix {
        let mut m = self.clean.clone();
        m.as_mut_slice().iter_mut().zip(self.blink.as_slice()).for_each(|(a, b)| *a += b);
        m
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_variance(mut x: Vec<f64>) -> Vec<f64> {
    let m = crate::stats::mean(&x);
    let sd = std_dev(&x);
    x.iter_mut().for_each(|v| *v = if sd > 0.0 { (*v - m) / sd } else { 0.0 });
    x
}

fn ar1<R: Rng>(rng: &mut R, n: usize, phi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut state = normal(rng) / sqrt(1.0 - phi * phi);
    for _ in 0..n {
        state = phi * state + normal(rng);
        out.push(state);
    }
    out
}

fn rhythm<R: Rng>(rng: &mut R, n: usize, f0: f64, q: f64, fs: f64) -> Vec<f64> {
    let burn = libm::round(2.0 * fs) as usize;
    let mut x: Vec<f64> = (0..n + burn).map(|_| normal(rng)).collect();
    sosfilt(&[bandpass_biquad(f0, q, fs), bandpass_biquad(f0, q, fs)], &mut x);
    unit_variance(x.split_off(burn))
}

fn source_time_course<R: Rng>(rng: &mut R, n: usize, fs: f64, theta_gain: f64, alpha_gain: f64) -> Vec<f64> {
    let broadband = unit_variance(ar1(rng, n, 0.9));
    let theta = rhythm(rng, n, 6.0, 2.5, fs);
    let alpha = rhythm(rng, n, 10.0, 3.5, fs);
    let phi = exp(-1.0 / (1.5 * fs));
    let envelope = unit_variance(ar1(rng, n, phi));
    (0..n)
        .map(|t| exp(0.6 * envelope[t] - 0.36) * (0.8 * broadband[t] + theta_gain * theta[t] + alpha_gain * alpha[t]))
        .collect()
}

fn blink_course<R: Rng>(rng: &mut R, n: usize, fs: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let sigma = 0.08 * fs;
    let mut t = rng.random_range(0.5..3.0) * fs;
    while t < n as f64 {
        let peak = rng.random_range(0.8..1.2);
        let lo = (t - 5.0 * sigma).max(0.0) as usize;
        let hi = ((t + 5.0 * sigma) as usize).min(n - 1);
        for (i, v) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let u = (i as f64 - t) / sigma;
            *v += peak * exp(-0.5 * u * u);
        }
        t += rng.random_range(2.0..6.0) * fs;
    }
    out
}

/// Simulates one subject under one condition.
pub fn simulate_parts(cfg: &CohortConfig, subject: &CohortSubject, condition: Condition) -> Result<SimulatedParts> {
    cfg.validate()?;
    let n = cfg.n_samples();
    let fs = cfg.sampling_rate_hz;
    let n_ch = STEW_CHANNELS.len();
    let sid = u64::from(subject.subject_id);
    let cond = condition as u64;

    // Subject traits are shared by both conditions.
    // One head model for the cohort, perturbed per subject.
    let mut head = stream(cfg.seed, &[0x4845_4144]);
    let mut traits = stream(cfg.seed, &[0x5355_424a, sid]);
    let maps: Vec<Vec<f64>> = (0..cfg.n_sources)
        .map(|_| (0..n_ch).map(|_| normal(&mut head) + cfg.map_jitter * normal(&mut traits)).collect())
        .collect();
    let theta_log_gain = cfg.subject_log_sd * normal(&mut traits);
    let alpha_log_gain = cfg.subject_log_sd * normal(&mut traits);
    let effect = if subject.class.is_positive() { 1.0 + cfg.theta_effect } else { 1.0 };
    let theta_gain = sqrt(effect * exp(theta_log_gain));
    let alpha_gain = sqrt(exp(alpha_log_gain));

    let mut rng = stream(cfg.seed, &[0x5245_4353, sid, cond]);
    let mut clean = Matrix::zeros(n, n_ch);
    for map in &maps {
        let course = source_time_course(&mut rng, n, fs, theta_gain, alpha_gain);
        let norm = sqrt(map.iter().map(|w| w * w).sum::<f64>() / n_ch as f64);
        for (t, s) in course.iter().enumerate() {
            let row = clean.row_mut(t);
            for (v, w) in row.iter_mut().zip(map) {
                *v += cfg.source_amplitude_uv * w / norm * s;
            }
        }
    }
    for v in clean.as_mut_slice() {
        *v += cfg.sensor_noise_uv * normal(&mut rng);
    }

    let mut blink = Matrix::zeros(n, n_ch);
    let mut blink_source = vec![0.0; n];
    if cfg.blink_amplitude_uv > 0.0 {
        let mut brng = stream(cfg.seed, &[0x424c_4e4b, sid, cond]);
        blink_source = blink_course(&mut brng, n, fs);
        for (t, b) in blink_source.iter().enumerate() {
            let row = blink.row_mut(t);
            for (v, w) in row.iter_mut().zip(BLINK_TOPOGRAPHY) {
                *v = cfg.blink_amplitude_uv * w * b;
            }
        }
    }
    Ok(SimulatedParts { clean, blink, blink_source })
}

pub fn simulate_recording(cfg: &CohortConfig, subject: &CohortSubject, condition: Condition) -> Result<EegRecording> {
    let parts = simulate_parts(cfg, subject, condition)?;
    EegRecording::new(subject.subject_id, condition, parts.combined(), cfg.sampling_rate_hz, stew_channel_names())
}

pub fn stew_channel_names() -> Vec<String> {
    STEW_CHANNELS.iter().map(|c| c.to_string()).collect()
}
