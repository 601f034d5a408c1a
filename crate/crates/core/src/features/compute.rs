//! Per-series feature formulas.
//!
//! Every function returns a [`Value`]; undefined results (zero denominators,
//! logarithms of zero) come back as `0` with `degenerate = true`.
//!
//! Spectral conventions: `magnitude_spectrum` is `|DFT(x)|` over bins
//! `k = 0..=n/2` at frequencies `k·fs/n`, computed on the raw series except
//! where a function says it removes the mean first.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, cos, exp, fabs, floor, log, log10, log2, pow, sqrt};
use num_complex::Complex64;

use super::catalog::CatalogParams;
use crate::signal::{fft, hann_periodic, periodogram};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Value {
    pub value: f64,
    pub degenerate: bool,
}

impl Value {
    pub fn ok(value: f64) -> Self {
        if value.is_finite() {
            Self { value, degenerate: false }
        } else {
            Self::DEGENERATE
        }
    }

    pub const DEGENERATE: Value = Value { value: 0.0, degenerate: true };
}

fn ratio(num: f64, den: f64) -> Value {
    if den == 0.0 {
        Value::DEGENERATE
    } else {
        Value::ok(num / den)
    }
}

fn diffs(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

// ---------------------------------------------------------------- spectral

/// `(frequencies, |DFT|)` over the one-sided bins `0..=n/2`.
pub fn magnitude_spectrum(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    let bins = n / 2 + 1;
    let f = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    let mag = buf.iter().take(bins).map(|c| c.norm()).collect();
    (f, mag)
}

/// Mean `|DFT|` of zero-padded `fft_length`-sample segments, first
/// `fft_coefficients` bins.
pub fn fft_mean_coefficients(x: &[f64], p: &CatalogParams) -> Vec<f64> {
    let len = p.fft_length;
    let mut acc = vec![0.0; p.fft_coefficients];
    let mut count = 0usize;
    for seg in x.chunks(len) {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (b, &v) in buf.iter_mut().zip(seg) {
            b.re = v;
        }
        fft(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm();
        }
        count += 1;
    }
    acc.iter_mut().for_each(|a| *a /= count.max(1) as f64);
    acc
}

/// Lowest local maximum of the mean-removed magnitude spectrum whose height
/// reaches 30% of the spectral maximum; 0 when there is none.
pub fn fundamental_frequency(x: &[f64], fs: f64) -> Value {
    let m = stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let (f, mag) = magnitude_spectrum(&centered, fs);
    let top = mag.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return Value::DEGENERATE;
    }
    for k in 1..mag.len().saturating_sub(1) {
        if mag[k] > mag[k - 1] && mag[k] > mag[k + 1] && mag[k] >= 0.3 * top {
            return Value::ok(f[k]);
        }
    }
    Value::ok(0.0)
}

/// Share of spectral energy between the bins closest to `lo` and `hi`
/// (upper bin excluded).
pub fn human_range_energy(x: &[f64], fs: f64, band: (f64, f64)) -> Value {
    let (f, mag) = magnitude_spectrum(x, fs);
    let total: f64 = mag.iter().map(|m| m * m).sum();
    if total == 0.0 {
        return Value::DEGENERATE;
    }
    let nearest = |target: f64| {
        let mut best = 0;
        for (k, fk) in f.iter().enumerate() {
            if fabs(fk - target) < fabs(f[best] - target) {
                best = k;
            }
        }
        best
    };
    let (lo, hi) = (nearest(band.0), nearest(band.1));
    let part: f64 = mag[lo..hi.max(lo)].iter().map(|m| m * m).sum();
    Value::ok(part / total)
}

/// Autocorrelation-method linear prediction by Levinson-Durbin. Returns
/// `[1, a_1, .., a_p]` for `A(z) = 1 + Σ a_k z^-k` and the final
/// prediction-error energy, or `None` when the recursion breaks down.
pub fn levinson_durbin(x: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    let r: Vec<f64> = (0..=order).map(|k| x.iter().zip(&x[k.min(x.len())..]).map(|(a, b)| a * b).sum()).collect();
    if !(r[0] > 0.0) {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = r[i] + (1..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return None;
        }
    }
    Some((a, err))
}

/// Cepstrum of the all-pole model `sqrt(E)/A(z)`: `c_0 = ln(E)/2` and
/// `c_m = -a_m - Σ_{k<m} (k/m)·c_k·a_{m-k}`.
pub fn lpcc(x: &[f64], order: usize) -> (Vec<f64>, bool) {
    let Some((a, err)) = levinson_durbin(x, order) else {
        return (vec![0.0; order + 1], true);
    };
    let mut c = vec![0.0; order + 1];
    c[0] = 0.5 * log(err);
    for m in 1..=order {
        let mut acc = -a[m];
        for k in 1..m {
            acc -= (k as f64 / m as f64) * c[k] * a[m - k];
        }
        c[m] = acc;
    }
    if c.iter().all(|v| v.is_finite()) {
        (c, false)
    } else {
        (vec![0.0; order + 1], true)
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * log10(1.0 + f / 700.0)
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (pow(10.0, m / 2595.0) - 1.0)
}

/// Mel-frequency cepstral coefficients `1..=mfcc_count` of the power
/// spectrum `|DFT|²/N` (`N` = max(fft_length, next power of two)), using
/// triangular filters spaced evenly in mel from 0 to Nyquist, natural-log
/// energies and an orthonormal DCT-II.
pub fn mfcc(x: &[f64], fs: f64, p: &CatalogParams) -> (Vec<f64>, bool) {
    let nfft = p.fft_length.max(x.len().next_power_of_two());
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    fft(&mut buf);
    let power: Vec<f64> = buf.iter().take(nfft / 2 + 1).map(|c| c.norm_sqr() / nfft as f64).collect();
    let m_filters = p.mel_filters;
    let top = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..m_filters + 2).map(|i| mel_to_hz(top * i as f64 / (m_filters + 1) as f64)).collect();
    let mut log_energy = Vec::with_capacity(m_filters);
    for m in 1..=m_filters {
        let (lo, mid, hi) = (edges[m - 1], edges[m], edges[m + 1]);
        let mut e = 0.0;
        for (k, pk) in power.iter().enumerate() {
            let f = k as f64 * fs / nfft as f64;
            let w = if f >= lo && f <= mid && mid > lo {
                (f - lo) / (mid - lo)
            } else if f > mid && f <= hi && hi > mid {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            e += w * pk;
        }
        if !(e > 0.0) {
            return (vec![0.0; p.mfcc_count], true);
        }
        log_energy.push(log(e));
    }
    let scale = sqrt(2.0 / m_filters as f64);
    let coeffs = (1..=p.mfcc_count)
        .map(|j| {
            scale
                * log_energy
                    .iter()
                    .enumerate()
                    .map(|(m, l)| l * cos(core::f64::consts::PI * j as f64 * (2 * m + 1) as f64 / (2 * m_filters) as f64))
                    .sum::<f64>()
        })
        .collect();
    (coeffs, false)
}

/// Single-segment Hann periodogram of the series scaled to unit standard
/// deviation (unscaled when constant), mean removed.
pub fn normalized_psd(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let sd = stats::std_dev(x);
    let scale = if sd == 0.0 { 1.0 } else { sd };
    let m = stats::mean(x) / scale;
    let y: Vec<f64> = x.iter().map(|v| v / scale - m).collect();
    periodogram(&y, fs, &hann_periodic(y.len()))
}

pub fn max_power_spectrum(x: &[f64], fs: f64) -> Value {
    let (_, p) = normalized_psd(x, fs);
    let top = p.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        Value::DEGENERATE
    } else {
        Value::ok(top)
    }
}

fn cumulative_crossing(f: &[f64], mag: &[f64], share: f64, strict: bool) -> Value {
    let total: f64 = mag.iter().sum();
    if total == 0.0 {
        return Value::DEGENERATE;
    }
    let mut cum = 0.0;
    for (fk, m) in f.iter().zip(mag) {
        cum += m;
        if (strict && cum > share * total) || (!strict && cum >= share * total) {
            return Value::ok(*fk);
        }
    }
    Value::ok(*f.last().unwrap_or(&0.0))
}

/// First frequency where the cumulative magnitude exceeds 95% of its total.
pub fn max_frequency(f: &[f64], mag: &[f64]) -> Value {
    cumulative_crossing(f, mag, 0.95, true)
}

/// First frequency where the cumulative magnitude exceeds half its total.
pub fn median_frequency(f: &[f64], mag: &[f64]) -> Value {
    cumulative_crossing(f, mag, 0.5, true)
}

/// Width between the frequencies that bound 95% of the normalized PSD from
/// below and from above.
pub fn power_bandwidth(x: &[f64], fs: f64) -> Value {
    let (f, p) = normalized_psd(x, fs);
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return Value::DEGENERATE;
    }
    let mut cum = 0.0;
    let mut lower = f.len() - 1;
    for (k, v) in p.iter().enumerate() {
        cum += v;
        if cum >= 0.95 * total {
            lower = k;
            break;
        }
    }
    let mut cum = 0.0;
    let mut upper = 0;
    for (k, v) in p.iter().enumerate().rev() {
        cum += v;
        if cum >= 0.95 * total {
            upper = k;
            break;
        }
    }
    Value::ok(fabs(f[upper] - f[lower]))
}

pub fn spectral_centroid(f: &[f64], mag: &[f64]) -> Value {
    let total: f64 = mag.iter().sum();
    ratio(f.iter().zip(mag).map(|(a, b)| a * b).sum(), total)
}

pub fn spectral_spread(f: &[f64], mag: &[f64]) -> Value {
    let c = spectral_centroid(f, mag);
    if c.degenerate {
        return c;
    }
    let total: f64 = mag.iter().sum();
    Value::ok(sqrt(f.iter().zip(mag).map(|(fk, m)| (fk - c.value) * (fk - c.value) * m / total).sum::<f64>()))
}

fn spectral_moment(f: &[f64], mag: &[f64], order: i32) -> Value {
    let c = spectral_centroid(f, mag);
    let s = spectral_spread(f, mag);
    if c.degenerate || s.degenerate || s.value == 0.0 {
        return Value::DEGENERATE;
    }
    let total: f64 = mag.iter().sum();
    let num: f64 = f.iter().zip(mag).map(|(fk, m)| libm::pow(fk - c.value, order as f64) * m / total).sum();
    Value::ok(num / libm::pow(s.value, order as f64))
}

pub fn spectral_skewness(f: &[f64], mag: &[f64]) -> Value {
    spectral_moment(f, mag, 3)
}

pub fn spectral_kurtosis(f: &[f64], mag: &[f64]) -> Value {
    spectral_moment(f, mag, 4)
}

/// `Σ_{k≥1} (|X_k| - |X_0|)/k` divided by `Σ_{k≥1} |X_k|`.
pub fn spectral_decrease(mag: &[f64]) -> Value {
    let num: f64 = mag.iter().enumerate().skip(1).map(|(k, m)| (m - mag[0]) / k as f64).sum();
    ratio(num, mag.iter().skip(1).sum())
}

/// Signed area between the cumulative magnitude and the straight line from
/// 0 to its total.
pub fn spectral_distance(mag: &[f64]) -> Value {
    let k = mag.len();
    let total: f64 = mag.iter().sum();
    let mut cum = 0.0;
    let mut acc = 0.0;
    for (i, m) in mag.iter().enumerate() {
        cum += m;
        let line = if k > 1 { total * i as f64 / (k - 1) as f64 } else { total };
        acc += line - cum;
    }
    Value::ok(acc)
}

/// Spectral power shares at or below this count as empty bins.
pub const ZERO_SHARE: f64 = 1e-12;

/// Normalized Shannon entropy (bits) of the mean-removed power spectrum over
/// its non-empty bins.
pub fn spectral_entropy(x: &[f64], fs: f64) -> Value {
    let m = stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let (_, mag) = magnitude_spectrum(&centered, fs);
    let power: Vec<f64> = mag.iter().map(|v| v * v).collect();
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return Value::DEGENERATE;
    }
    // Rounding residue (e.g. the DC bin after mean removal) is not a bin.
    let probs: Vec<f64> = power.iter().map(|p| p / total).filter(|p| *p > ZERO_SHARE).collect();
    if probs.len() <= 1 {
        return Value::ok(0.0);
    }
    Value::ok(-probs.iter().map(|p| p * log2(*p)).sum::<f64>() / log2(probs.len() as f64))
}

/// Number of local maxima of the magnitude spectrum.
pub fn spectral_positive_turning_points(mag: &[f64]) -> Value {
    Value::ok(positive_turning_count(mag) as f64)
}

pub fn spectral_roll_off(f: &[f64], mag: &[f64]) -> Value {
    cumulative_crossing(f, mag, 0.95, false)
}

pub fn spectral_roll_on(f: &[f64], mag: &[f64]) -> Value {
    cumulative_crossing(f, mag, 0.05, false)
}

/// Least-squares slope of the normalized magnitude against frequency.
pub fn spectral_slope(f: &[f64], mag: &[f64]) -> Value {
    let total: f64 = mag.iter().sum();
    let len = f.len() as f64;
    let sum_f: f64 = f.iter().sum();
    let den = len * f.iter().map(|v| v * v).sum::<f64>() - sum_f * sum_f;
    if total == 0.0 || den == 0.0 {
        return Value::DEGENERATE;
    }
    let num = (len * f.iter().zip(mag).map(|(a, b)| a * b).sum::<f64>() - sum_f * total) / total;
    Value::ok(num / den)
}

/// One minus the normalized correlation of consecutive magnitude bins.
pub fn spectral_variation(mag: &[f64]) -> Value {
    if mag.len() < 2 {
        return Value::DEGENERATE;
    }
    let cross: f64 = mag.windows(2).map(|w| w[0] * w[1]).sum();
    let tail: f64 = mag[1..].iter().map(|m| m * m).sum();
    let head: f64 = mag[..mag.len() - 1].iter().map(|m| m * m).sum();
    if tail == 0.0 || head == 0.0 {
        return Value::DEGENERATE;
    }
    Value::ok(1.0 - cross / (sqrt(tail) * sqrt(head)))
}

// ----------------------------------------------------------------- wavelet

/// Ricker (Mexican hat) wavelet sampled at `points` positions centred on
/// zero.
pub fn ricker(points: usize, width: f64) -> Vec<f64> {
    let amp = 2.0 / (sqrt(3.0 * width) * pow(core::f64::consts::PI, 0.25));
    let wsq = width * width;
    (0..points)
        .map(|i| {
            let t = i as f64 - (points as f64 - 1.0) / 2.0;
            let tsq = t * t;
            amp * (1.0 - tsq / wsq) * exp(-tsq / (2.0 * wsq))
        })
        .collect()
}

/// Continuous wavelet transform with Ricker kernels of widths `1..=widths`:
/// the kernel has `min(10·w, n)` points and the output is the centred
/// `n`-sample part of the full convolution.
pub fn cwt(x: &[f64], widths: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    (1..=widths)
        .map(|w| {
            let len = (10 * w).min(n);
            let kernel = ricker(len, w as f64);
            let shift = (len - 1) / 2;
            (0..n)
                .map(|i| {
                    let j = i + shift;
                    let k_lo = j.saturating_sub(len - 1);
                    let k_hi = j.min(n - 1);
                    (k_lo..=k_hi).map(|k| x[k] * kernel[j - k]).sum()
                })
                .collect()
        })
        .collect()
}

/// Shannon entropy (nats) of the per-scale share of `Σ|cwt|`.
pub fn wavelet_entropy(x: &[f64], coeffs: &[Vec<f64>]) -> Value {
    if x.iter().sum::<f64>() == 0.0 {
        return Value::DEGENERATE;
    }
    let per_scale: Vec<f64> = coeffs.iter().map(|row| row.iter().map(|v| fabs(*v)).sum()).collect();
    let total: f64 = per_scale.iter().sum();
    if total == 0.0 {
        return Value::DEGENERATE;
    }
    Value::ok(-per_scale.iter().map(|e| e / total).filter(|p| *p > 0.0).map(|p| p * log(p)).sum::<f64>())
}

// ------------------------------------------------------------- statistical

/// ECDF evaluated at the first `points` order statistics.
pub fn ecdf(sorted: &[f64], points: usize) -> Vec<f64> {
    let n = sorted.len() as f64;
    (0..points)
        .map(|i| match sorted.get(i) {
            Some(v) => sorted.iter().filter(|x| *x <= v).count() as f64 / n,
            None => 1.0,
        })
        .collect()
}

/// Smallest sample whose ECDF reaches `p`.
pub fn ecdf_percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = (ceil(p * sorted.len() as f64) as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Equal-width bin counts over `[min, max]`; the last bin is closed.
/// A constant series puts every sample in bin 0.
pub fn histogram(x: &[f64], bins: usize) -> Vec<f64> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0.0; bins];
    if !(hi > lo) {
        counts[0] = x.len() as f64;
        return counts;
    }
    let width = (hi - lo) / bins as f64;
    for &v in x {
        let mut b = (floor((v - lo) / width) as usize).min(bins - 1);
        // Pin the index to the edges `lo + k·width` despite rounding.
        while b > 0 && v < lo + b as f64 * width {
            b -= 1;
        }
        while b + 1 < bins && v >= lo + (b + 1) as f64 * width {
            b += 1;
        }
        counts[b] += 1.0;
    }
    counts
}

pub fn mean_absolute_deviation(x: &[f64]) -> f64 {
    let m = stats::mean(x);
    stats::mean(&x.iter().map(|v| fabs(v - m)).collect::<Vec<_>>())
}

pub fn median_absolute_deviation(x: &[f64]) -> f64 {
    let m = stats::median(x);
    stats::median(&x.iter().map(|v| fabs(v - m)).collect::<Vec<_>>())
}

pub fn root_mean_square(x: &[f64]) -> f64 {
    sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

// ---------------------------------------------------------------- temporal

pub fn absolute_energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Trapezoidal area under `|x|` with sample spacing `1/fs`.
pub fn area_under_curve(x: &[f64], fs: f64) -> f64 {
    x.windows(2).map(|w| 0.5 / fs * fabs(w[0] + w[1])).sum()
}

/// Lag-1 Pearson autocorrelation.
pub fn autocorrelation(x: &[f64]) -> Value {
    let (a, b) = (&x[..x.len() - 1], &x[1..]);
    if stats::variance(a) == 0.0 || stats::variance(b) == 0.0 {
        return Value::DEGENERATE;
    }
    Value::ok(stats::pearson(a, b))
}

/// Energy-weighted mean time `Σ t·x² / Σ x²` with `t = i/fs`.
pub fn centroid(x: &[f64], fs: f64) -> Value {
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let weighted: f64 = x.iter().enumerate().map(|(i, v)| i as f64 / fs * v * v).sum();
    if energy == 0.0 {
        return Value::DEGENERATE;
    }
    Value::ok(weighted / energy)
}

/// Shannon entropy (bits) of the distinct-value frequencies divided by
/// `log2(n)`. A constant series is degenerate.
pub fn entropy(sorted: &[f64]) -> Value {
    let n = sorted.len();
    if n < 2 {
        return Value::DEGENERATE;
    }
    let mut probs = Vec::new();
    let mut run = 1usize;
    for i in 1..=n {
        if i < n && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            probs.push(run as f64 / n as f64);
            run = 1;
        }
    }
    if probs.len() == 1 {
        return Value::DEGENERATE;
    }
    Value::ok(-probs.iter().map(|p| p * log2(*p)).sum::<f64>() / log2(n as f64))
}

pub fn negative_turning_count(x: &[f64]) -> usize {
    let d = diffs(x);
    d.windows(2).filter(|w| w[0] < 0.0 && w[1] > 0.0).count()
}

pub fn positive_turning_count(x: &[f64]) -> usize {
    let d = diffs(x);
    d.windows(2).filter(|w| w[0] > 0.0 && w[1] < 0.0).count()
}

/// Samples strictly greater than every neighbour within `radius` on both
/// sides; the first and last `radius` samples are not candidates.
pub fn neighbourhood_peaks(x: &[f64], radius: usize) -> usize {
    let n = x.len();
    if n <= 2 * radius {
        return 0;
    }
    (radius..n - radius).filter(|&t| (1..=radius).all(|i| x[t] > x[t - i] && x[t] > x[t + i])).count()
}

pub fn signal_distance(x: &[f64]) -> f64 {
    x.windows(2).map(|w| sqrt(1.0 + (w[1] - w[0]) * (w[1] - w[0]))).sum()
}

/// Least-squares slope against the sample index.
pub fn slope(x: &[f64]) -> f64 {
    let t: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
    stats::linear_fit(&t, x).0
}

/// `Σ x²` divided by the time span `(n - 1)/fs`.
pub fn total_energy(x: &[f64], fs: f64) -> Value {
    ratio(absolute_energy(x), (x.len() - 1) as f64 / fs)
}

/// Sign changes of the mean-removed series per transition.
pub fn zero_crossing_rate(x: &[f64]) -> f64 {
    let m = stats::mean(x);
    let sign = |v: f64| {
        let d = v - m;
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    };
    let changes = x.windows(2).filter(|w| sign(w[0]) != sign(w[1])).count();
    changes as f64 / (x.len() - 1) as f64
}

pub fn mean_abs_diff(x: &[f64]) -> f64 {
    stats::mean(&diffs(x).iter().map(|d| fabs(*d)).collect::<Vec<_>>())
}

pub fn mean_diff(x: &[f64]) -> f64 {
    stats::mean(&diffs(x))
}

pub fn median_abs_diff(x: &[f64]) -> f64 {
    stats::median(&diffs(x).iter().map(|d| fabs(*d)).collect::<Vec<_>>())
}

pub fn median_diff(x: &[f64]) -> f64 {
    stats::median(&diffs(x))
}

pub fn sum_abs_diff(x: &[f64]) -> f64 {
    diffs(x).iter().map(|d| fabs(*d)).sum()
}
