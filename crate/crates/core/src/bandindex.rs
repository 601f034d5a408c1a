//! Per-second theta/alpha cluster powers and the ten band-ratio workload
//! indexes derived from them.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::recording::{Condition, EegRecording};
use crate::signal::{hann_periodic, periodogram};
use crate::{Error, Result};

/// Lower bound applied to every band power.
pub const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    /// `[4, 8)` Hz.
    Theta,
    /// `[8, 12)` Hz.
    Alpha,
}

impl Band {
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 12.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexId {
    #[serde(rename = "c1-theta")]
    C1Theta,
    #[serde(rename = "c2-theta")]
    C2Theta,
    #[serde(rename = "c3-theta")]
    C3Theta,
    #[serde(rename = "c-alpha")]
    CAlpha,
    #[serde(rename = "at-1")]
    At1,
    #[serde(rename = "at-2")]
    At2,
    #[serde(rename = "at-3")]
    At3,
    #[serde(rename = "ta-1")]
    Ta1,
    #[serde(rename = "ta-2")]
    Ta2,
    #[serde(rename = "ta-3")]
    Ta3,
}

impl IndexId {
    pub const ALL: [IndexId; 10] = [
        IndexId::C1Theta,
        IndexId::C2Theta,
        IndexId::C3Theta,
        IndexId::CAlpha,
        IndexId::At1,
        IndexId::At2,
        IndexId::At3,
        IndexId::Ta1,
        IndexId::Ta2,
        IndexId::Ta3,
    ];

    /// The six ratio indexes.
    pub const RATIOS: [IndexId; 6] =
        [IndexId::At1, IndexId::At2, IndexId::At3, IndexId::Ta1, IndexId::Ta2, IndexId::Ta3];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexId::C1Theta => "c1-theta",
            IndexId::C2Theta => "c2-theta",
            IndexId::C3Theta => "c3-theta",
            IndexId::CAlpha => "c-alpha",
            IndexId::At1 => "at-1",
            IndexId::At2 => "at-2",
            IndexId::At3 => "at-3",
            IndexId::Ta1 => "ta-1",
            IndexId::Ta2 => "ta-2",
            IndexId::Ta3 => "ta-3",
        }
    }

    pub fn is_ratio(self) -> bool {
        !matches!(self, IndexId::C1Theta | IndexId::C2Theta | IndexId::C3Theta | IndexId::CAlpha)
    }

    /// Cluster indexes that enter a ratio (theta cluster, alpha cluster).
    pub fn constituents(self) -> Option<(IndexId, IndexId)> {
        match self {
            IndexId::At1 | IndexId::Ta1 => Some((IndexId::C1Theta, IndexId::CAlpha)),
            IndexId::At2 | IndexId::Ta2 => Some((IndexId::C2Theta, IndexId::CAlpha)),
            IndexId::At3 | IndexId::Ta3 => Some((IndexId::C3Theta, IndexId::CAlpha)),
            _ => None,
        }
    }
}

impl fmt::Display for IndexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('θ', "theta").replace('α', "alpha");
        IndexId::ALL
            .into_iter()
            .find(|id| id.as_str() == t)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown index `{s}`")))
    }
}

/// Electrodes averaged for one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub name: IndexId,
    pub band: Band,
    pub electrodes: Vec<String>,
}

impl ClusterSpec {
    pub fn new(name: IndexId, band: Band, electrodes: &[&str]) -> Self {
        Self { name, band, electrodes: electrodes.iter().map(|e| String::from(*e)).collect() }
    }

    /// The four standard clusters: three frontal theta groups and the
    /// parietal alpha pair.
    pub fn canonical() -> [ClusterSpec; 4] {
        [
            ClusterSpec::new(IndexId::C1Theta, Band::Theta, &["AF3", "AF4", "F3", "F4", "F7", "F8"]),
            ClusterSpec::new(IndexId::C2Theta, Band::Theta, &["F3", "F4"]),
            ClusterSpec::new(IndexId::C3Theta, Band::Theta, &["F3", "F4", "F7", "F8"]),
            ClusterSpec::new(IndexId::CAlpha, Band::Alpha, &["P7", "P8"]),
        ]
    }
}

/// One workload index, one value per 1 s window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub index_id: IndexId,
    pub subject_id: u32,
    pub condition: Condition,
    pub values: Vec<f64>,
}

/// Splits a recording into consecutive non-overlapping windows; a trailing
/// partial window is dropped.
pub fn segment_windows(rec: &EegRecording, window_s: f64) -> Result<Vec<Matrix>> {
    let len = libm::round(window_s * rec.sampling_rate_hz) as usize;
    if !(window_s > 0.0) || len == 0 {
        return Err(Error::InvalidArgument(alloc::format!("window of {window_s} s is empty")));
    }
    if len > rec.n_samples() {
        return Err(Error::TooShort { needed: len, got: rec.n_samples() });
    }
    let n_ch = rec.n_channels();
    let data = rec.samples.as_slice();
    (0..rec.n_samples() / len)
        .map(|w| Matrix::from_vec(len, n_ch, data[w * len * n_ch..(w + 1) * len * n_ch].to_vec()))
        .collect()
}

/// Mean one-sided Hann periodogram density over bins with `lo <= f < hi`,
/// floored at [`POWER_FLOOR`].
pub fn band_power(window: &[f64], sampling_rate_hz: f64, band: (f64, f64)) -> Result<f64> {
    let (lo, hi) = band;
    let nyquist = sampling_rate_hz / 2.0;
    if !(lo >= 0.0 && lo < hi && hi <= nyquist) {
        return Err(Error::BandOutOfRange { lo, hi, nyquist });
    }
    let needed = libm::ceil(sampling_rate_hz) as usize;
    if window.len() < needed {
        return Err(Error::TooShort { needed, got: window.len() });
    }
    let (freqs, psd) = periodogram(window, sampling_rate_hz, &hann_periodic(window.len()));
    let (sum, count) = freqs
        .iter()
        .zip(&psd)
        .filter(|(f, _)| **f >= lo && **f < hi)
        .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
    if count == 0 {
        return Err(Error::BandOutOfRange { lo, hi, nyquist });
    }
    Ok((sum / count as f64).max(POWER_FLOOR))
}

fn resolve(spec: &ClusterSpec, channel_names: &[String]) -> Result<Vec<usize>> {
    if spec.electrodes.is_empty() {
        return Err(Error::InvalidArgument(alloc::format!("cluster {} has no electrodes", spec.name)));
    }
    spec.electrodes
        .iter()
        .map(|e| {
            channel_names
                .iter()
                .position(|c| c.eq_ignore_ascii_case(e))
                .ok_or_else(|| Error::MissingChannel(e.clone()))
        })
        .collect()
}

/// Mean band power over the cluster's electrodes for one window
/// (`samples × channels`).
pub fn cluster_power(window: &Matrix, spec: &ClusterSpec, channel_names: &[String], sampling_rate_hz: f64) -> Result<f64> {
    let cols = resolve(spec, channel_names)?;
    let mut total = 0.0;
    for &c in &cols {
        total += band_power(&window.column(c), sampling_rate_hz, spec.band.range_hz())?;
    }
    Ok(total / cols.len() as f64)
}

/// The four cluster-power series followed by `at-1..3` and `ta-1..3`, in
/// [`IndexId::ALL`] order.
pub fn compute_indexes(rec: &EegRecording) -> Result<Vec<IndexSeries>> {
    compute_indexes_with(rec, &ClusterSpec::canonical(), 1.0)
}

/// [`compute_indexes`] with explicit clusters (in `c1, c2, c3, alpha` order)
/// and window length.
pub fn compute_indexes_with(rec: &EegRecording, clusters: &[ClusterSpec; 4], window_s: f64) -> Result<Vec<IndexSeries>> {
    for spec in clusters {
        resolve(spec, &rec.channel_names)?;
    }
    let windows = segment_windows(rec, window_s)?;
    let mut cluster_values: [Vec<f64>; 4] = Default::default();
    for w in &windows {
        for (spec, out) in clusters.iter().zip(cluster_values.iter_mut()) {
            out.push(cluster_power(w, spec, &rec.channel_names, rec.sampling_rate_hz)?);
        }
    }
    let [c1, c2, c3, ca] = cluster_values;
    let ratio = |num: &[f64], den: &[f64]| -> Vec<f64> { num.iter().zip(den).map(|(a, b)| a / b).collect() };
    let values = [
        ratio(&ca, &c1),
        ratio(&ca, &c2),
        ratio(&ca, &c3),
        ratio(&c1, &ca),
        ratio(&c2, &ca),
        ratio(&c3, &ca),
    ];
    let mut out = Vec::with_capacity(10);
    let make = |id, values| IndexSeries { index_id: id, subject_id: rec.subject_id, condition: rec.condition, values };
    out.push(make(IndexId::C1Theta, c1));
    out.push(make(IndexId::C2Theta, c2));
    out.push(make(IndexId::C3Theta, c3));
    out.push(make(IndexId::CAlpha, ca));
    for (id, v) in IndexId::RATIOS.into_iter().zip(values) {
        out.push(make(id, v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recording::STEW_CHANNELS;
    use alloc::string::ToString;
    use alloc::vec;
    use core::f64::consts::PI;
    use libm::{cos, sin};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn tone(freq: f64, n: usize, fs: f64, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * sin(2.0 * PI * freq * i as f64 / fs)).collect()
    }

    fn stew(samples: Matrix) -> EegRecording {
        EegRecording::new(3, Condition::Simkap, samples, 128.0, STEW_CHANNELS.iter().map(|c| c.to_string()).collect())
            .unwrap()
    }

    /// Direct O(n²) DFT band power with the same window and scaling.
    fn dft_band_power(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
        let n = x.len();
        let w: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * cos(2.0 * PI * i as f64 / n as f64)).collect();
        let wss: f64 = w.iter().map(|v| v * v).sum();
        let mut vals = Vec::new();
        for k in 0..=n / 2 {
            let f = k as f64 * fs / n as f64;
            if f < lo || f >= hi {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, (xv, wv)) in x.iter().zip(&w).enumerate() {
                acc += Complex64::from_polar(xv * wv, -2.0 * PI * (k * t) as f64 / n as f64);
            }
            let scale = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            vals.push(scale * acc.norm_sqr() / (fs * wss));
        }
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    #[test]
    fn window_counts() {
        let rec = stew(Matrix::zeros(150 * 128, 14));
        let w = segment_windows(&rec, 1.0).unwrap();
        assert_eq!(w.len(), 150);
        assert!(w.iter().all(|m| m.rows() == 128));
        assert_eq!(segment_windows(&stew(Matrix::zeros(192, 14)), 1.0).unwrap().len(), 1);
        let exact = stew(Matrix::from_vec(256, 14, (0..256 * 14).map(|v| v as f64).collect()).unwrap());
        let w = segment_windows(&exact, 1.0).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].row(127), exact.samples.row(255));
        assert!(segment_windows(&stew(Matrix::zeros(100, 14)), 1.0).is_err());
    }

    #[test]
    fn six_hz_tone_is_theta() {
        let x = tone(6.0, 128, 128.0, 1.0);
        let theta = band_power(&x, 128.0, Band::Theta.range_hz()).unwrap();
        let alpha = band_power(&x, 128.0, Band::Alpha.range_hz()).unwrap();
        assert!(theta >= 50.0 * alpha);
        assert!((theta - dft_band_power(&x, 128.0, 4.0, 8.0)).abs() < 1e-10 * theta);
        assert!((alpha - dft_band_power(&x, 128.0, 8.0, 12.0).max(POWER_FLOOR)).abs() < 1e-9 * theta);
        let x = tone(10.0, 128, 128.0, 1.0);
        let theta = band_power(&x, 128.0, Band::Theta.range_hz()).unwrap();
        let alpha = band_power(&x, 128.0, Band::Alpha.range_hz()).unwrap();
        assert!(alpha >= 50.0 * theta);
    }

    #[test]
    fn zero_signal_hits_floor_and_band_errors() {
        assert_eq!(band_power(&[0.0; 128], 128.0, (4.0, 8.0)).unwrap(), POWER_FLOOR);
        assert!(band_power(&[0.0; 128], 128.0, (60.0, 70.0)).is_err());
        assert!(band_power(&[0.0; 64], 128.0, (4.0, 8.0)).is_err());
    }

    #[test]
    fn cluster_power_examples() {
        let fs = 128.0;
        let a = tone(6.0, 128, fs, 1.0);
        let b: Vec<f64> = a.iter().map(|v| v * libm::sqrt(2.0)).collect();
        let pa = band_power(&a, fs, (4.0, 8.0)).unwrap();
        let pb = band_power(&b, fs, (4.0, 8.0)).unwrap();
        let names = vec!["A".to_string(), "B".to_string()];
        let w = Matrix::from_columns(&[a, b]).unwrap();
        let spec = ClusterSpec::new(IndexId::C2Theta, Band::Theta, &["A", "B"]);
        assert!((cluster_power(&w, &spec, &names, fs).unwrap() - (pa + pb) / 2.0).abs() < 1e-12);
        let single = ClusterSpec::new(IndexId::C2Theta, Band::Theta, &["B"]);
        assert_eq!(cluster_power(&w, &single, &names, fs).unwrap(), pb);
        let missing = ClusterSpec::new(IndexId::C2Theta, Band::Theta, &["Cz"]);
        assert!(matches!(cluster_power(&w, &missing, &names, fs), Err(Error::MissingChannel(_))));
    }

    #[test]
    fn equal_frontal_channels_give_single_channel_power() {
        let t = tone(6.0, 128, 128.0, 3.0);
        let cols: Vec<Vec<f64>> = (0..14).map(|_| t.clone()).collect();
        let rec = stew(Matrix::from_columns(&cols).unwrap());
        let single = band_power(&t, 128.0, (4.0, 8.0)).unwrap();
        let c1 = &ClusterSpec::canonical()[0];
        let p = cluster_power(&rec.samples, c1, &rec.channel_names, 128.0).unwrap();
        assert!((p - single).abs() < 1e-9);
    }

    #[test]
    fn parietal_alpha_dominant_recording_has_at_above_one() {
        let n = 10 * 128;
        let alpha = tone(10.0, n, 128.0, 20.0);
        let theta = tone(6.0, n, 128.0, 2.0);
        let cols: Vec<Vec<f64>> = STEW_CHANNELS
            .iter()
            .map(|c| if *c == "P7" || *c == "P8" { alpha.clone() } else { theta.clone() })
            .collect();
        let series = compute_indexes(&stew(Matrix::from_columns(&cols).unwrap())).unwrap();
        assert_eq!(series.len(), 10);
        for s in &series {
            assert_eq!(s.values.len(), 10);
            if matches!(s.index_id, IndexId::At1 | IndexId::At2 | IndexId::At3) {
                assert!(crate::stats::mean(&s.values) > 1.0);
            }
        }
    }

    #[test]
    fn missing_cluster_electrode_is_reported() {
        let names: Vec<String> = (0..14).map(|i| alloc::format!("E{i}")).collect();
        let rec = EegRecording::new(1, Condition::Rest, Matrix::zeros(256, 14), 128.0, names).unwrap();
        assert!(matches!(compute_indexes(&rec), Err(Error::MissingChannel(_))));
    }

    #[test]
    fn index_ids_round_trip() {
        for id in IndexId::ALL {
            assert_eq!(id.as_str().parse::<IndexId>().unwrap(), id);
        }
        assert_eq!("c1-θ".parse::<IndexId>().unwrap(), IndexId::C1Theta);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ratios_are_reciprocal_and_positive(seed in any::<u64>(), secs in 1usize..4, scale in 0.1f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = secs * 128 + 37;
            let data: Vec<f64> = (0..n * 14).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }).collect();
            let series = compute_indexes(&stew(Matrix::from_vec(n, 14, data).unwrap())).unwrap();
            for s in &series {
                prop_assert_eq!(s.values.len(), secs);
                prop_assert!(s.values.iter().all(|v| v.is_finite() && *v > 0.0));
            }
            for k in 0..3 {
                for (a, t) in series[4 + k].values.iter().zip(&series[7 + k].values) {
                    prop_assert!((a * t - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn band_power_scales_quadratically(seed in any::<u64>(), c in 0.01f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..128).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>();
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let px = band_power(&x, 128.0, (4.0, 8.0)).unwrap();
            let py = band_power(&y, 128.0, (4.0, 8.0)).unwrap();
            prop_assert!((py - c * c * px).abs() <= 1e-9 * py.max(1e-12));
        }
    }
}
