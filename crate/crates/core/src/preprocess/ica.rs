use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt, tanh};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, inverse_sqrt, symmetric_eigen, Matrix};
use crate::{Error, Result};

/// FastICA settings: tanh contrast, symmetric decorrelation, PCA whitening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Whitening drops directions whose variance is below this fraction of
    /// the largest one (an average reference removes exactly one).
    pub rank_tolerance: f64,
    /// Defaults to the number of channels, capped at the data rank.
    pub n_components: Option<usize>,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iterations: 200, seed: 0, rank_tolerance: 1e-10, n_components: None }
    }
}

/// Result of FastICA on an `n_samples × n_channels` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaDecomposition {
    /// `n_channels × n_components`; column `k` is the scalp map of source `k`.
    pub mixing: Matrix,
    /// `n_components × n_channels`.
    pub unmixing: Matrix,
    /// `n_samples × n_components`, unit variance and mutually uncorrelated.
    pub sources: Matrix,
    pub channel_means: Vec<f64>,
    /// `n_components × n_channels` PCA whitening transform.
    pub whitening: Matrix,
    pub converged: bool,
    pub iterations: usize,
}

impl IcaDecomposition {
    pub fn n_components(&self) -> usize {
        self.sources.cols()
    }

    /// Back-projects the sources to channel space with the listed
    /// components zeroed.
    pub fn reconstruct(&self, removed: &[usize]) -> Matrix {
        let n = self.sources.rows();
        let n_ch = self.mixing.rows();
        let keep: Vec<usize> = (0..self.n_components()).filter(|k| !removed.contains(k)).collect();
        let mut out = Matrix::zeros(n, n_ch);
        for t in 0..n {
            let s = self.sources.row(t);
            let row = out.row_mut(t);
            for (c, v) in row.iter_mut().enumerate() {
                let mut acc = self.channel_means[c];
                for &k in &keep {
                    acc += self.mixing[(c, k)] * s[k];
                }
                *v = acc;
            }
        }
        out
    }
}

fn symmetric_decorrelation(w: &Matrix) -> Result<Matrix> {
    let wwt = w.matmul(&w.transpose())?;
    inverse_sqrt(&wwt)?.matmul(w)
}

/// Symmetric FastICA with a tanh contrast.
///
/// When the fixed-point iteration does not reach `tolerance` the whitened
/// PCA components are returned instead and `converged` is `false`.
pub fn fast_ica(data: &Matrix, cfg: &IcaConfig) -> Result<IcaDecomposition> {
    let (n, n_ch) = (data.rows(), data.cols());
    if n_ch == 0 || n <= n_ch {
        return Err(Error::InvalidArgument(alloc::format!(
            "ICA needs more samples than channels, got {n}x{n_ch}"
        )));
    }
    let means: Vec<f64> = (0..n_ch).map(|j| (0..n).map(|i| data[(i, j)]).sum::<f64>() / n as f64).collect();
    let mut cov = Matrix::zeros(n_ch, n_ch);
    for i in 0..n {
        let row = data.row(i);
        for a in 0..n_ch {
            let da = row[a] - means[a];
            for b in a..n_ch {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..n_ch {
        for b in a..n_ch {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let top = eig.values[0];
    if !(top > 0.0) {
        return Err(Error::Numerical("ICA input has zero variance".into()));
    }
    let rank = eig.values.iter().take_while(|&&v| v > top * cfg.rank_tolerance).count();
    let r = cfg.n_components.unwrap_or(n_ch).min(rank).max(1);

    let mut whitening = Matrix::zeros(r, n_ch);
    let mut dewhitening = Matrix::zeros(n_ch, r);
    for k in 0..r {
        let sd = sqrt(eig.values[k]);
        for c in 0..n_ch {
            whitening[(k, c)] = eig.vectors[(c, k)] / sd;
            dewhitening[(c, k)] = eig.vectors[(c, k)] * sd;
        }
    }
    let mut z = Matrix::zeros(n, r);
    for i in 0..n {
        let centered: Vec<f64> = data.row(i).iter().zip(&means).map(|(x, m)| x - m).collect();
        for k in 0..r {
            z[(i, k)] = dot(whitening.row(k), &centered);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init: Vec<f64> = (0..r * r).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut w = symmetric_decorrelation(&Matrix::from_vec(r, r, init)?)?;

    let mut converged = false;
    let mut iterations = 0;
    let mut projected = vec![0.0; r];
    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let mut acc = Matrix::zeros(r, r);
        let mut deriv = vec![0.0; r];
        for i in 0..n {
            let zi = z.row(i);
            for (k, p) in projected.iter_mut().enumerate() {
                *p = dot(w.row(k), zi);
            }
            for k in 0..r {
                let g = tanh(projected[k]);
                deriv[k] += 1.0 - g * g;
                let acc_row = acc.row_mut(k);
                for (a, &zv) in acc_row.iter_mut().zip(zi) {
                    *a += g * zv;
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        let mut next = Matrix::zeros(r, r);
        for k in 0..r {
            for j in 0..r {
                next[(k, j)] = acc[(k, j)] * inv_n - deriv[k] * inv_n * w[(k, j)];
            }
        }
        let next = symmetric_decorrelation(&next)?;
        let lim = (0..r).map(|k| fabs(fabs(dot(next.row(k), w.row(k))) - 1.0)).fold(0.0f64, f64::max);
        w = next;
        if lim < cfg.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        w = Matrix::identity(r);
    }

    let unmixing = w.matmul(&whitening)?;
    let mixing = dewhitening.matmul(&w.transpose())?;
    let sources = z.matmul(&w.transpose())?;
    Ok(IcaDecomposition { mixing, unmixing, sources, channel_means: means, whitening, converged, iterations })
}
