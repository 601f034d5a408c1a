//! Descriptive statistics and the special functions behind the p-values.
//!
//! Variances and standard deviations use the population (`n`) convention
//! throughout unless a function says otherwise.

use alloc::vec::Vec;

use libm::{erfc, exp, fabs, lgamma, log, sqrt};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    sqrt(variance(x))
}

/// Unbiased (`n - 1`) sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Pearson correlation. Returns 0 when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0)
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(x: &[f64]) -> f64 {
    percentile(x, 50.0)
}

/// Percentile with linear interpolation between order statistics
/// (`q` in percent, 0..=100).
pub fn percentile(x: &[f64], q: f64) -> f64 {
    percentile_sorted(&sorted(x), q)
}

pub fn percentile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let pos = q / 100.0 * (s.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(s.len() - 1);
    let frac = pos - lo as f64;
    s[lo] + (s[hi] - s[lo]) * frac
}

/// Excess (Fisher) kurtosis, biased estimator. `None` for zero variance.
pub fn kurtosis(x: &[f64]) -> Option<f64> {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| { let d = (v - m) * (v - m); d * d }).sum::<f64>() / n;
    (m2 > 0.0).then(|| m4 / (m2 * m2) - 3.0)
}

/// Biased skewness. `None` for zero variance.
pub fn skewness(x: &[f64]) -> Option<f64> {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m) * (v - m) * (v - m)).sum::<f64>() / n;
    (m2 > 0.0).then(|| m3 / (m2 * sqrt(m2)))
}

/// Z-scores across the values. When the spread is (numerically) zero every
/// z-score is 0 and the second return value is `true`.
pub fn zscores(x: &[f64]) -> (Vec<f64>, bool) {
    let m = mean(x);
    let sd = std_dev(x);
    let scale = x.iter().fold(0.0f64, |a, v| a.max(fabs(*v)));
    if !(sd > 1e-12 * scale.max(1e-300)) {
        return (alloc::vec![0.0; x.len()], true);
    }
    (x.iter().map(|v| (v - m) / sd).collect(), false)
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log(1.0 - x);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < 1e-15 {
            break;
        }
    }
    h
}

/// Two-tailed p-value of a Student t statistic with `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Upper-tail p-value of an F statistic with `(d1, d2)` degrees of freedom.
pub fn f_upper_tail_p(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0).clamp(0.0, 1.0)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / core::f64::consts::SQRT_2)
}

#[allow(clippy::excessive_precision)]
/// Standard normal quantile function (Wichura's AS 241, ~1e-16 accuracy).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if fabs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                + 67265.770927008700853)
                * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                + 39307.89580009271061)
                * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = sqrt(-log(r));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
            + 0.24178072517745061177)
            * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 0.0012426609473880784386)
            * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Gaussian kernel density estimate evaluated on `grid`, Silverman bandwidth.
pub fn gaussian_kde(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return alloc::vec![0.0; grid.len()];
    }
    let sd = sqrt(sample_variance(samples));
    let s = sorted(samples);
    let iqr = percentile_sorted(&s, 75.0) - percentile_sorted(&s, 25.0);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let mut h = 0.9 * spread * libm::pow(n as f64, -0.2);
    if !(h > 0.0) {
        h = 1e-3;
    }
    let norm = 1.0 / (n as f64 * h * sqrt(2.0 * core::f64::consts::PI));
    grid.iter()
        .map(|&g| {
            samples
                .iter()
                .map(|&x| {
                    let u = (g - x) / h;
                    exp(-0.5 * u * u)
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal, StudentsT};

    #[test]
    fn percentile_matches_linear_interpolation() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(percentile(&x, 25.0), 1.75);
        assert_relative_eq!(percentile(&x, 75.0), 3.25);
        assert_relative_eq!(median(&x), 2.5);
    }

    #[test]
    fn moments_of_small_sample() {
        let x = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_relative_eq!(mean(&x), 5.0);
        assert_relative_eq!(std_dev(&x), 2.0);
        assert_eq!(kurtosis(&[3.0, 3.0]), None);
        assert_relative_eq!(skewness(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn t_p_values_match_reference() {
        for &(t, df) in &[(0.5, 10.0), (2.0, 198.0), (-3.1, 30.0), (4.9, 198.0)] {
            let reference = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(fabs(t)));
            assert_relative_eq!(student_t_two_tailed_p(t, df), reference, max_relative = 1e-9);
        }
    }

    #[test]
    fn f_p_values_match_reference() {
        for &(f, d1, d2) in &[(0.3, 1.0, 8.0), (4.0, 1.0, 40.0), (12.5, 1.0, 94.0)] {
            let reference = 1.0 - FisherSnedecor::new(d1, d2).unwrap().cdf(f);
            assert_relative_eq!(f_upper_tail_p(f, d1, d2), reference, max_relative = 1e-9);
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        let reference = Normal::new(0.0, 1.0).unwrap();
        for &p in &[1e-10, 0.001, 0.2, 0.5, 0.7, 0.975, 1.0 - 1e-9] {
            let z = normal_quantile(p);
            assert_relative_eq!(z, reference.inverse_cdf(p), max_relative = 1e-8);
            assert_relative_eq!(normal_cdf(z), p, max_relative = 1e-9);
        }
    }

    #[test]
    fn zscores_of_constant_are_flagged() {
        let (z, degenerate) = zscores(&[2.0, 2.0, 2.0]);
        assert!(degenerate);
        assert_eq!(z, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn kde_integrates_to_one() {
        let samples = [0.2, 0.3, 0.35, 0.5, 0.52, 0.8];
        let grid: Vec<f64> = (0..2001).map(|i| -1.0 + i as f64 * 0.0015).collect();
        let dens = gaussian_kde(&samples, &grid);
        let area: f64 = dens.iter().sum::<f64>() * 0.0015;
        assert_relative_eq!(area, 1.0, epsilon = 1e-3);
    }
}
