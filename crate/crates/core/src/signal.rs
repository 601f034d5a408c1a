//! Spectral building blocks: FFT, Hann windows, periodogram/Welch PSD
//! estimates and Butterworth second-order-section filters.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin, tan};
use num_complex::Complex64;

use crate::{Error, Result};

/// In-place forward DFT of arbitrary length (`X_k = sum x_n e^{-2πikn/N}`).
///
/// Powers of two use an iterative radix-2 transform; other lengths go
/// through Bluestein's chirp-z reformulation.
pub fn fft(buf: &mut [Complex64]) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, false);
    } else {
        bluestein(buf);
    }
}

/// In-place inverse DFT including the `1/N` normalisation.
pub fn ifft(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    buf.iter_mut().for_each(|c| *c = c.conj());
    fft(buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c = c.conj() * scale);
}

fn radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        // Twiddles computed directly rather than by recurrence to keep
        // rounding error independent of the transform length.
        let twiddles: Vec<Complex64> =
            (0..half).map(|k| Complex64::new(cos(ang * k as f64), sin(ang * k as f64))).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = buf[start + k];
                let v = buf[start + k + half] * twiddles[k];
                buf[start + k] = u + v;
                buf[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

fn bluestein(buf: &mut [Complex64]) {
    let n = buf.len();
    let m = (2 * n - 1).next_power_of_two();
    // chirp_k = exp(-iπk²/n); k² is reduced mod 2n to keep the angle small.
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
            let ang = -PI * k2 / n as f64;
            Complex64::new(cos(ang), sin(ang))
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = buf[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    radix2(&mut a, false);
    radix2(&mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    radix2(&mut a, true);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        buf[k] = a[k] * scale * chirp[k];
    }
}

/// DFT of a real signal, returning all `N` complex bins.
pub fn rfft_full(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Periodic Hann window (the DFT-even form used for spectral estimation).
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * cos(2.0 * PI * i as f64 / n as f64)).collect()
}

/// One-sided PSD estimate of a single windowed segment.
///
/// Density scaling: `|DFT(w·x)|² / (fs · Σw²)`, doubled for every bin except
/// DC and (for even lengths) Nyquist, so the PSD integrates to the mean
/// power of the segment. Returns `(frequencies, psd)` with `N/2 + 1` bins.
pub fn periodogram(x: &[f64], fs: f64, window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    debug_assert_eq!(window.len(), n);
    let spec = rfft_full(&x.iter().zip(window).map(|(a, w)| a * w).collect::<Vec<_>>());
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let n_bins = n / 2 + 1;
    let mut psd = Vec::with_capacity(n_bins);
    for (k, c) in spec.iter().take(n_bins).enumerate() {
        let mut p = c.norm_sqr() / (fs * wss);
        if k != 0 && !(n % 2 == 0 && k == n / 2) {
            p *= 2.0;
        }
        psd.push(p);
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / n as f64).collect();
    (freqs, psd)
}

/// Welch PSD: Hann segments of `nperseg` samples with 50% overlap, each
/// segment mean-removed, periodograms averaged.
pub fn welch(x: &[f64], fs: f64, nperseg: usize) -> (Vec<f64>, Vec<f64>) {
    let nperseg = nperseg.min(x.len()).max(1);
    let step = (nperseg / 2).max(1);
    let window = hann_periodic(nperseg);
    let mut acc: Vec<f64> = Vec::new();
    let mut freqs = Vec::new();
    let mut count = 0usize;
    let mut start = 0;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let m = crate::stats::mean(seg);
        let centered: Vec<f64> = seg.iter().map(|v| v - m).collect();
        let (f, p) = periodogram(&centered, fs, &window);
        if acc.is_empty() {
            acc = p;
            freqs = f;
        } else {
            acc.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        }
        count += 1;
        start += step;
    }
    acc.iter_mut().for_each(|a| *a /= count.max(1) as f64);
    (freqs, acc)
}

/// One biquad in transposed direct form II with `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// State that keeps the section at rest under a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }
}

/// Butterworth high-pass of the given order, as second-order sections,
/// designed by bilinear transform with frequency pre-warping.
pub fn butterworth_highpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Biquad>> {
    if order == 0 {
        return Err(Error::InvalidArgument("filter order must be positive".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            fs / 2.0
        )));
    }
    let k = 2.0 * fs;
    let wc = k * tan(PI * cutoff_hz / fs);
    let mut sections = Vec::new();
    for i in 0..order / 2 {
        // Left-half-plane prototype pole pair at angle θ from the +imag axis.
        let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let re = -sin(theta);
        // Analog section s² / (s² - 2 re wc s + wc²) under s = k(1 - z⁻¹)/(1 + z⁻¹).
        let a0 = k * k - 2.0 * re * wc * k + wc * wc;
        let a1 = -2.0 * k * k + 2.0 * wc * wc;
        let a2 = k * k + 2.0 * re * wc * k + wc * wc;
        sections.push(Biquad {
            b: [k * k / a0, -2.0 * k * k / a0, k * k / a0],
            a: [1.0, a1 / a0, a2 / a0],
        });
    }
    if order % 2 == 1 {
        // First-order section s / (s + wc).
        let a0 = k + wc;
        sections.push(Biquad { b: [k / a0, -k / a0, 0.0], a: [1.0, (wc - k) / a0, 0.0] });
    }
    Ok(sections)
}

/// Band-pass biquad (constant 0 dB peak gain) centred on `f0` with quality `q`.
pub fn bandpass_biquad(f0: f64, q: f64, fs: f64) -> Biquad {
    let w0 = 2.0 * PI * f0 / fs;
    let alpha = sin(w0) / (2.0 * q);
    let a0 = 1.0 + alpha;
    Biquad {
        b: [alpha / a0, 0.0, -alpha / a0],
        a: [1.0, -2.0 * cos(w0) / a0, (1.0 - alpha) / a0],
    }
}

/// Runs the cascade over `x` starting from the given per-section states.
pub fn sosfilt_with_state(sections: &[Biquad], x: &mut [f64], state: &mut [[f64; 2]]) {
    for (sec, z) in sections.iter().zip(state.iter_mut()) {
        for v in x.iter_mut() {
            let input = *v;
            let y = sec.b[0] * input + z[0];
            z[0] = sec.b[1] * input - sec.a[1] * y + z[1];
            z[1] = sec.b[2] * input - sec.a[2] * y;
            *v = y;
        }
    }
}

/// Filters `x` in place from rest.
pub fn sosfilt(sections: &[Biquad], x: &mut [f64]) {
    let mut state = vec![[0.0; 2]; sections.len()];
    sosfilt_with_state(sections, x, &mut state);
}

/// Steady-state initial conditions of the cascade for a unit step.
fn cascade_step_state(sections: &[Biquad]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|sec| {
            let z = sec.step_state();
            let out = [z[0] * scale, z[1] * scale];
            scale *= sec.dc_gain();
            out
        })
        .collect()
}

/// Zero-phase forward-backward filtering.
///
/// The signal is extended by `pad` samples of odd reflection at both ends,
/// each pass starts from the steady state matching its first sample, and
/// the padding is trimmed afterwards.
pub fn sosfiltfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = pad.min(n.saturating_sub(1));
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let zi = cascade_step_state(sections);

    let x0 = ext[0];
    let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect();
    sosfilt_with_state(sections, &mut ext, &mut state);

    ext.reverse();
    let y0 = ext[0];
    let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * y0, z[1] * y0]).collect();
    sosfilt_with_state(sections, &mut ext, &mut state);
    ext.reverse();

    ext[pad..pad + n].to_vec()
}

/// Magnitude response of the cascade at `f` Hz.
pub fn frequency_response(sections: &[Biquad], f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let z1 = Complex64::new(cos(w), -sin(w));
    let z2 = z1 * z1;
    sections
        .iter()
        .map(|s| {
            let num = z1 * s.b[1] + z2 * s.b[2] + s.b[0];
            let den = z1 * s.a[1] + z2 * s.a[2] + s.a[0];
            (num / den).norm()
        })
        .product()
}
