//! Zero-mean Gaussian-process regression of execution rates on normalized time.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::RateFunction;

/// Jitter values tried in turn when the Gram matrix is not numerically PD.
const JITTER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Squared-exponential covariance `a² exp(−(t − t′)² / 2ℓ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeKernel {
    pub amplitude_sq: f64,
    pub lengthscale: f64,
}

impl Default for SeKernel {
    fn default() -> Self {
        SeKernel {
            amplitude_sq: 0.1,
            lengthscale: 0.1,
        }
    }
}

impl SeKernel {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let d = (s - t) / self.lengthscale;
        self.amplitude_sq * (-0.5 * d * d).exp()
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.amplitude_sq) || !ok(self.lengthscale) {
            return Err(Error::InvalidArgument(format!(
                "kernel hyperparameters must be positive, got amplitude² {} and lengthscale {}",
                self.amplitude_sq, self.lengthscale
            )));
        }
        Ok(())
    }
}

/// Default observation noise variance.
pub const DEFAULT_NOISE_VAR: f64 = 1e-2;

/// GP conditioned on noisy rate observations. Construction factors the Gram
/// matrix once; queries are read-only.
#[derive(Clone, Debug)]
pub struct RateGP {
    kernel: SeKernel,
    noise_var: f64,
    times: Vec<f64>,
    rates: Vec<f64>,
    noise: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl RateGP {
    /// Conditions on `(times, rates)` with i.i.d. noise variance `noise_var`.
    pub fn new(kernel: SeKernel, noise_var: f64, times: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let noise = vec![noise_var; times.len()];
        Self::with_noise(kernel, noise_var, times, rates, noise)
    }

    /// Pools observations from several rate functions into one GP.
    ///
    /// Observations at the same time are replaced by their average with noise
    /// variance `σ²/k`, which leaves the posterior unchanged and keeps the Gram
    /// matrix at the size of the distinct time set.
    pub fn pooled(kernel: SeKernel, noise_var: f64, rates: &[RateFunction]) -> Result<Self> {
        let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
        for r in rates {
            for (&t, &v) in r.grid.iter().zip(&r.values) {
                let e = groups.entry(t.to_bits()).or_insert((t, 0.0, 0));
                e.1 += v;
                e.2 += 1;
            }
        }
        let mut pts: Vec<(f64, f64, usize)> = groups.into_values().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let times = pts.iter().map(|p| p.0).collect();
        let values = pts.iter().map(|p| p.1 / p.2 as f64).collect();
        let noise = pts.iter().map(|p| noise_var / p.2 as f64).collect();
        Self::with_noise(kernel, noise_var, times, values, noise)
    }

    fn with_noise(kernel: SeKernel, noise_var: f64, times: Vec<f64>, rates: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        kernel.validate()?;
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be ≥ 0, got {noise_var}"
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidArgument("GP needs at least one observation".into()));
        }
        if times.len() != rates.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: rates.len(),
            });
        }
        if times.iter().chain(&rates).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("GP observations must be finite".into()));
        }
        let n = times.len();
        let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(times[i], times[j]));
        for jitter in JITTER {
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += noise[i] + jitter;
            }
            if let Some(chol) = k.cholesky() {
                let alpha = chol.solve(&DVector::from_column_slice(&rates));
                return Ok(RateGP {
                    kernel,
                    noise_var,
                    times,
                    rates,
                    noise,
                    chol,
                    alpha,
                    jitter,
                });
            }
        }
        Err(Error::SingularGram)
    }

    pub fn kernel(&self) -> SeKernel {
        self.kernel
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Jitter that was added to the diagonal to factor the Gram matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.times.len(), self.times.iter().map(|&s| self.kernel.eval(s, t)))
    }

    /// Posterior mean and variance (clamped at 0) of the latent rate at `t`.
    pub fn posterior(&self, t: f64) -> (f64, f64) {
        let q = self.cross(t);
        let mean = q.dot(&self.alpha);
        let v = self
            .chol
            .l()
            .solve_lower_triangular(&q)
            .expect("Cholesky factor is invertible");
        let var = (self.kernel.eval(t, t) - v.norm_squared()).max(0.0);
        (mean, var)
    }

    /// `log p(r)` under the model, including the `2π` constant.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.times.len() as f64;
        let r = DVector::from_column_slice(&self.rates);
        let logdet: f64 = 2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        -0.5 * r.dot(&self.alpha) - 0.5 * logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// Rebuilds the model with another kernel on the same observations.
    pub fn refit(&self, kernel: SeKernel) -> Result<RateGP> {
        Self::with_noise(
            kernel,
            self.noise_var,
            self.times.clone(),
            self.rates.clone(),
            self.noise.clone(),
        )
    }
}

pub fn gp_posterior(model: &RateGP, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("time {t} outside [0, 1]")));
    }
    Ok(model.posterior(t))
}

/// Kernel with the highest log marginal likelihood over a grid of
/// amplitudes and lengthscales; ties keep the earlier candidate.
pub fn select_kernel(model: &RateGP, amplitudes_sq: &[f64], lengthscales: &[f64]) -> Result<RateGP> {
    let mut best: Option<(f64, RateGP)> = None;
    for &a in amplitudes_sq {
        for &l in lengthscales {
            let m = model.refit(SeKernel {
                amplitude_sq: a,
                lengthscale: l,
            })?;
            let lml = m.log_marginal_likelihood();
            if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                best = Some((lml, m));
            }
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| Error::InvalidArgument("empty hyperparameter grid".into()))
}

/// Posterior mean with a symmetric `± k·sd` band on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBand {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Band multiplier used when none is given.
pub const DEFAULT_BAND_K: f64 = 1.5;

pub fn rate_band(model: &RateGP, grid: &[f64], k: f64) -> RateBand {
    let mut band = RateBand {
        t: grid.to_vec(),
        mean: Vec::with_capacity(grid.len()),
        lower: Vec::with_capacity(grid.len()),
        upper: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let (m, v) = model.posterior(t);
        let w = k * v.sqrt();
        band.mean.push(m);
        band.lower.push(m - w);
        band.upper.push(m + w);
    }
    band
}

impl RateBand {
    /// CSV with columns `t,mean,lower,upper`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,mean,lower,upper\n");
        for i in 0..self.t.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[i], self.mean[i], self.lower[i], self.upper[i]
            );
        }
        s
    }
}
