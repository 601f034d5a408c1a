//! Brute-force feature reference: direct DFT sums, explicit full
//! convolutions and naive counting. Intended for series of at most a few
//! dozen samples.
//!
//! `None` marks an undefined value, matching the extractor's degenerate flag.

use std::f64::consts::PI;

use mwl_core::features::{CatalogParams, FeatureKind};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn pop_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

/// Linear interpolation between order statistics at rank `q·(n-1)`.
fn quantile(x: &[f64], q: f64) -> f64 {
    let s = sorted(x);
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

fn diffs(x: &[f64]) -> Vec<f64> {
    (1..x.len()).map(|i| x[i] - x[i - 1]).collect()
}

/// `|Σ_n x_n e^{-2πikn/len}|` for `k` in `0..bins`, with `x` zero-padded to
/// `len`.
fn dft_magnitudes(x: &[f64], len: usize, bins: usize) -> Vec<f64> {
    (0..bins)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let phase = -2.0 * PI * ((k * n) % len) as f64 / len as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

fn one_sided(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let bins = n / 2 + 1;
    ((0..bins).map(|k| k as f64 * fs / n as f64).collect(), dft_magnitudes(x, n, bins))
}

fn centered(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

/// Hann-windowed single-segment PSD of the unit-variance, zero-mean series.
fn normalized_psd(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let sd = pop_var(x).sqrt();
    let sd = if sd == 0.0 { 1.0 } else { sd };
    let y: Vec<f64> = x.iter().map(|v| v / sd - mean(x) / sd).collect();
    let w: Vec<f64> = (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect();
    let yw: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a * b).collect();
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let (f, mag) = one_sided(&yw, fs);
    let psd = mag
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let edge = k == 0 || (n % 2 == 0 && k == n / 2);
            m * m / (fs * wss) * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    (f, psd)
}

fn cumulative_at(f: &[f64], mag: &[f64], share: f64, strict: bool) -> Option<f64> {
    let total: f64 = mag.iter().sum();
    if total == 0.0 {
        return None;
    }
    for k in 0..mag.len() {
        let cum: f64 = mag[..=k].iter().sum();
        let hit = if strict { cum > share * total } else { cum >= share * total };
        if hit {
            return Some(f[k]);
        }
    }
    f.last().copied()
}

fn spectral_stats(f: &[f64], mag: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
    let total: f64 = mag.iter().sum();
    if total == 0.0 {
        return None;
    }
    let p: Vec<f64> = mag.iter().map(|m| m / total).collect();
    let c: f64 = f.iter().zip(&p).map(|(a, b)| a * b).sum();
    let s = f.iter().zip(&p).map(|(a, b)| (a - c).powi(2) * b).sum::<f64>().sqrt();
    Some((c, s, p))
}

fn spectral_moment(f: &[f64], mag: &[f64], order: i32) -> Option<f64> {
    let (c, s, p) = spectral_stats(f, mag)?;
    if s == 0.0 {
        return None;
    }
    Some(f.iter().zip(&p).map(|(a, b)| ((a - c) / s).powi(order) * b).sum())
}

fn local_maxima(x: &[f64]) -> usize {
    // Strict sign change of consecutive differences, + to -.
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] - x[i - 1] > 0.0 && x[i + 1] - x[i] < 0.0).count()
}

fn local_minima(x: &[f64]) -> usize {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] - x[i - 1] < 0.0 && x[i + 1] - x[i] > 0.0).count()
}

/// Autocorrelation `r_0..=r_p`, normal equations solved by Gaussian
/// elimination with partial pivoting.
fn lpc(x: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    let r: Vec<f64> = (0..=order).map(|k| (k..x.len()).map(|t| x[t] * x[t - k]).sum()).collect();
    if r[0] <= 0.0 {
        return None;
    }
    // R a = -r[1..], R_ij = r_|i-j|.
    let mut m: Vec<Vec<f64>> = (0..order)
        .map(|i| {
            let mut row: Vec<f64> = (0..order).map(|j| r[i.abs_diff(j)]).collect();
            row.push(-r[i + 1]);
            row
        })
        .collect();
    for col in 0..order {
        let piv = (col..order).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot = &top[col];
        for r in rest.iter_mut() {
            let factor = r[col] / pivot[col];
            for (x, p) in r[col..].iter_mut().zip(&pivot[col..]) {
                *x -= factor * p;
            }
        }
    }
    let mut a = vec![0.0; order];
    for i in (0..order).rev() {
        let tail: f64 = (i + 1..order).map(|j| m[i][j] * a[j]).sum();
        a[i] = (m[i][order] - tail) / m[i][i];
    }
    let err = r[0] + a.iter().enumerate().map(|(k, ak)| ak * r[k + 1]).sum::<f64>();
    if err <= 0.0 {
        return None;
    }
    let mut full = vec![1.0];
    full.extend(a);
    Some((full, err))
}

fn lpcc(x: &[f64], order: usize) -> Option<Vec<f64>> {
    let (a, err) = lpc(x, order)?;
    let mut c = vec![0.5 * err.ln()];
    for m in 1..=order {
        let mut v = -a[m];
        for k in 1..m {
            v -= k as f64 / m as f64 * c[k] * a[m - k];
        }
        c.push(v);
    }
    Some(c)
}

fn mfcc(x: &[f64], fs: f64, p: &CatalogParams) -> Option<Vec<f64>> {
    let nfft = p.fft_length.max(x.len().next_power_of_two());
    let power: Vec<f64> = dft_magnitudes(x, nfft, nfft / 2 + 1).iter().map(|m| m * m / nfft as f64).collect();
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let nf = p.mel_filters;
    let top = mel(fs / 2.0);
    let edge = |i: usize| hz(top * i as f64 / (nf + 1) as f64);
    let mut logs = Vec::new();
    for m in 1..=nf {
        let (lo, mid, hi) = (edge(m - 1), edge(m), edge(m + 1));
        let mut e = 0.0;
        for (k, pk) in power.iter().enumerate() {
            let f = k as f64 * fs / nfft as f64;
            let w = if lo <= f && f <= mid && mid > lo {
                (f - lo) / (mid - lo)
            } else if mid < f && f <= hi && hi > mid {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            e += w * pk;
        }
        if e <= 0.0 {
            return None;
        }
        logs.push(e.ln());
    }
    Some(
        (1..=p.mfcc_count)
            .map(|j| {
                (2.0 / nf as f64).sqrt()
                    * (0..nf).map(|m| logs[m] * (PI * j as f64 * (m as f64 + 0.5) / nf as f64).cos()).sum::<f64>()
            })
            .collect(),
    )
}

/// Ricker CWT row for width `w`: full linear convolution, centred slice.
fn cwt_row(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let len = (10 * w).min(n);
    let width = w as f64;
    let amp = 2.0 / ((3.0 * width).sqrt() * PI.powf(0.25));
    let kernel: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - (len as f64 - 1.0) / 2.0;
            amp * (1.0 - (t / width).powi(2)) * (-(t * t) / (2.0 * width * width)).exp()
        })
        .collect();
    let mut full = vec![0.0; n + len - 1];
    for (i, xi) in x.iter().enumerate() {
        for (j, kj) in kernel.iter().enumerate() {
            full[i + j] += xi * kj;
        }
    }
    let start = (len - 1) / 2;
    full[start..start + n].to_vec()
}

fn ecdf_at(x: &[f64], v: f64) -> f64 {
    x.iter().filter(|s| **s <= v).count() as f64 / x.len() as f64
}

fn ecdf_percentile(x: &[f64], p: f64) -> f64 {
    sorted(x).into_iter().find(|v| ecdf_at(x, *v) >= p).unwrap()
}

fn histogram(x: &[f64], bins: usize) -> Vec<f64> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0.0; bins];
    if hi <= lo {
        counts[0] = x.len() as f64;
        return counts;
    }
    let width = (hi - lo) / bins as f64;
    for &v in x {
        let b = (0..bins).rev().find(|&b| v >= lo + b as f64 * width).unwrap_or(0);
        counts[b] += 1.0;
    }
    counts
}

fn some(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 {
        None
    } else {
        some(num / den)
    }
}

/// Reference value of one catalog entry.
pub fn reference(kind: FeatureKind, x: &[f64], fs: f64, p: &CatalogParams) -> Option<f64> {
    use FeatureKind::*;
    let n = x.len();
    let (f, mag) = one_sided(x, fs);
    let cwt = |i: usize| cwt_row(x, i + 1);
    match kind {
        FftMeanCoefficient(i) => {
            let segs: Vec<&[f64]> = x.chunks(p.fft_length).collect();
            some(segs.iter().map(|s| dft_magnitudes(s, p.fft_length, i + 1)[i]).sum::<f64>() / segs.len() as f64)
        }
        FundamentalFrequency => {
            let (fc, mc) = one_sided(&centered(x), fs);
            let top = mc.iter().cloned().fold(0.0, f64::max);
            if top == 0.0 {
                return None;
            }
            let k = (1..mc.len().saturating_sub(1)).find(|&k| mc[k] > mc[k - 1] && mc[k] > mc[k + 1] && mc[k] >= 0.3 * top);
            Some(k.map_or(0.0, |k| fc[k]))
        }
        HumanRangeEnergy => {
            let total: f64 = mag.iter().map(|m| m * m).sum();
            if total == 0.0 {
                return None;
            }
            let nearest = |t: f64| {
                let best = f.iter().map(|fk| (fk - t).abs()).fold(f64::INFINITY, f64::min);
                f.iter().position(|fk| (fk - t).abs() == best).unwrap()
            };
            let (lo, hi) = (nearest(p.human_range_hz.0), nearest(p.human_range_hz.1));
            some((lo..hi).map(|k| mag[k] * mag[k]).sum::<f64>() / total)
        }
        Lpcc(i) => lpcc(x, p.lpc_order).map(|c| c[i]),
        Mfcc(i) => mfcc(x, fs, p).map(|c| c[i]),
        MaxPowerSpectrum => {
            let (_, psd) = normalized_psd(x, fs);
            let top = psd.iter().cloned().fold(0.0, f64::max);
            (top != 0.0).then_some(top)
        }
        MaxFrequency => cumulative_at(&f, &mag, 0.95, true),
        MedianFrequency => cumulative_at(&f, &mag, 0.5, true),
        PowerBandwidth => {
            let (fp, psd) = normalized_psd(x, fs);
            let total: f64 = psd.iter().sum();
            if total == 0.0 {
                return None;
            }
            let lower = (0..psd.len()).find(|&k| psd[..=k].iter().sum::<f64>() >= 0.95 * total).unwrap_or(psd.len() - 1);
            let upper = (0..psd.len()).rev().find(|&k| psd[k..].iter().sum::<f64>() >= 0.95 * total).unwrap_or(0);
            some((fp[upper] - fp[lower]).abs())
        }
        SpectralCentroid => spectral_stats(&f, &mag).map(|s| s.0),
        SpectralSpread => spectral_stats(&f, &mag).map(|s| s.1),
        SpectralSkewness => spectral_moment(&f, &mag, 3),
        SpectralKurtosis => spectral_moment(&f, &mag, 4),
        SpectralDecrease => {
            let num: f64 = (1..mag.len()).map(|k| (mag[k] - mag[0]) / k as f64).sum();
            ratio(num, mag[1..].iter().sum())
        }
        SpectralDistance => {
            let total: f64 = mag.iter().sum();
            let k = mag.len();
            some(
                (0..k)
                    .map(|i| {
                        let line = if k > 1 { total * i as f64 / (k - 1) as f64 } else { total };
                        line - mag[..=i].iter().sum::<f64>()
                    })
                    .sum(),
            )
        }
        SpectralEntropy => {
            let (_, mc) = one_sided(&centered(x), fs);
            let total: f64 = mc.iter().map(|m| m * m).sum();
            if total == 0.0 {
                return None;
            }
            let probs: Vec<f64> = mc.iter().map(|m| m * m / total).filter(|q| *q > 1e-12).collect();
            if probs.len() <= 1 {
                return Some(0.0);
            }
            some(-probs.iter().map(|q| q * q.log2()).sum::<f64>() / (probs.len() as f64).log2())
        }
        SpectralPositiveTurningPoints => Some(local_maxima(&mag) as f64),
        SpectralRollOff => cumulative_at(&f, &mag, 0.95, false),
        SpectralRollOn => cumulative_at(&f, &mag, 0.05, false),
        SpectralSlope => {
            let total: f64 = mag.iter().sum();
            let fm = mean(&f);
            let sxx: f64 = f.iter().map(|v| (v - fm).powi(2)).sum();
            if total == 0.0 || sxx == 0.0 {
                return None;
            }
            let y: Vec<f64> = mag.iter().map(|m| m / total).collect();
            let ym = mean(&y);
            some(f.iter().zip(&y).map(|(a, b)| (a - fm) * (b - ym)).sum::<f64>() / sxx)
        }
        SpectralVariation => {
            if mag.len() < 2 {
                return None;
            }
            let k = mag.len();
            let cross: f64 = (1..k).map(|i| mag[i] * mag[i - 1]).sum();
            let a: f64 = (1..k).map(|i| mag[i] * mag[i]).sum();
            let b: f64 = (0..k - 1).map(|i| mag[i] * mag[i]).sum();
            if a == 0.0 || b == 0.0 {
                return None;
            }
            some(1.0 - cross / (a * b).sqrt())
        }
        WaveletAbsMean(i) => some(mean(&cwt(i)).abs()),
        WaveletEnergy(i) => some(cwt(i).iter().map(|v| v * v).sum::<f64>() / n as f64),
        WaveletStd(i) => some(pop_var(&cwt(i)).sqrt()),
        WaveletVariance(i) => some(pop_var(&cwt(i))),
        WaveletEntropy => {
            if x.iter().sum::<f64>() == 0.0 {
                return None;
            }
            let e: Vec<f64> = (0..p.wavelet_widths).map(|i| cwt(i).iter().map(|v| v.abs()).sum()).collect();
            let total: f64 = e.iter().sum();
            if total == 0.0 {
                return None;
            }
            some(-e.iter().map(|v| v / total).filter(|q| *q > 0.0).map(|q| q * q.ln()).sum::<f64>())
        }
        Ecdf(i) => {
            let s = sorted(x);
            Some(s.get(i).map_or(1.0, |v| ecdf_at(x, *v)))
        }
        EcdfPercentile(i) => Some(ecdf_percentile(x, p.ecdf_percentiles[i])),
        EcdfPercentileCount(i) => {
            let v = ecdf_percentile(x, p.ecdf_percentiles[i]);
            Some(x.iter().filter(|s| **s <= v).count() as f64)
        }
        Histogram(i) => Some(histogram(x, p.histogram_bins)[i]),
        InterquartileRange => Some(quantile(x, 0.75) - quantile(x, 0.25)),
        Kurtosis => {
            let m2 = pop_var(x);
            let m = mean(x);
            let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
            ratio(m4, m2 * m2).map(|k| k - 3.0)
        }
        Skewness => {
            let m2 = pop_var(x);
            let m = mean(x);
            let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n as f64;
            ratio(m3, m2.powf(1.5))
        }
        Max => Some(x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        Min => Some(x.iter().cloned().fold(f64::INFINITY, f64::min)),
        Mean => Some(mean(x)),
        Median => Some(median(x)),
        MeanAbsoluteDeviation => {
            let m = mean(x);
            Some(mean(&x.iter().map(|v| (v - m).abs()).collect::<Vec<_>>()))
        }
        MedianAbsoluteDeviation => {
            let m = median(x);
            Some(median(&x.iter().map(|v| (v - m).abs()).collect::<Vec<_>>()))
        }
        RootMeanSquare => Some((x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()),
        StandardDeviation => Some(pop_var(x).sqrt()),
        Variance => Some(pop_var(x)),
        AbsoluteEnergy => Some(x.iter().map(|v| v * v).sum()),
        AreaUnderCurve => Some((1..n).map(|i| (x[i] + x[i - 1]).abs() / (2.0 * fs)).sum()),
        Autocorrelation => {
            let (a, b) = (&x[..n - 1], &x[1..]);
            let (ma, mb) = (mean(a), mean(b));
            let sab: f64 = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum();
            let saa: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
            let sbb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
            if saa == 0.0 || sbb == 0.0 {
                return None;
            }
            some(sab / (saa * sbb).sqrt())
        }
        Centroid => {
            let e: f64 = x.iter().map(|v| v * v).sum();
            ratio(x.iter().enumerate().map(|(i, v)| i as f64 / fs * v * v).sum(), e)
        }
        Entropy => {
            let s = sorted(x);
            let mut distinct = s.clone();
            distinct.dedup();
            if distinct.len() < 2 {
                return None;
            }
            let h: f64 = distinct
                .iter()
                .map(|d| {
                    let q = s.iter().filter(|v| *v == d).count() as f64 / n as f64;
                    -q * q.log2()
                })
                .sum();
            some(h / (n as f64).log2())
        }
        MeanAbsoluteDiff => Some(mean(&diffs(x).iter().map(|d| d.abs()).collect::<Vec<_>>())),
        MeanDiff => Some(mean(&diffs(x))),
        MedianAbsoluteDiff => Some(median(&diffs(x).iter().map(|d| d.abs()).collect::<Vec<_>>())),
        MedianDiff => Some(median(&diffs(x))),
        NegativeTurningPoints => Some(local_minima(x) as f64),
        PositiveTurningPoints => Some(local_maxima(x) as f64),
        NeighbourhoodPeaks => {
            let r = p.neighbourhood;
            let count = (0..n)
                .filter(|&t| t >= r && t + r < n)
                .filter(|&t| (t - r..=t + r).all(|j| j == t || x[t] > x[j]))
                .count();
            Some(count as f64)
        }
        PeakToPeakDistance => {
            let s = sorted(x);
            Some(s[n - 1] - s[0])
        }
        SignalDistance => Some(diffs(x).iter().map(|d| (1.0 + d * d).sqrt()).sum()),
        Slope => {
            // Closed form for t = 0..n-1.
            let tm = (n as f64 - 1.0) / 2.0;
            let num: f64 = x.iter().enumerate().map(|(t, v)| (t as f64 - tm) * v).sum();
            Some(12.0 * num / (n as f64 * ((n * n) as f64 - 1.0)))
        }
        SumAbsoluteDiff => Some(diffs(x).iter().map(|d| d.abs()).sum()),
        TotalEnergy => ratio(x.iter().map(|v| v * v).sum(), (n - 1) as f64 / fs),
        ZeroCrossingRate => {
            if pop_var(x) == 0.0 {
                return None;
            }
            let m = mean(x);
            let sign = |v: f64| (v - m).partial_cmp(&0.0).unwrap();
            Some((1..n).filter(|&i| sign(x[i]) != sign(x[i - 1])).count() as f64 / (n - 1) as f64)
        }
    }
}

/// Relative agreement with an absolute floor for values that vanish.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale || (a - b).abs() <= 1e-12
}
