//! Wrapped truncated normal distributions on the posture manifold and their
//! maximum-likelihood and maximum-a-posteriori estimation.
//!
//! Densities live on tangent coordinates at the mean, truncated to the
//! support `‖c_i‖ ≤ π/2` per part. The truncation mass depends on the
//! covariance but is dropped from every likelihood, as is `2π`, so
//! `log_density(0, I) = 0`.

mod map;
mod mle;

pub use map::{fit_map, negative_log_posterior, MapFit, MapHyper, MapOptions, MotionDistribution};
pub use mle::{fit_mle, MleFit, MleOptions};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix};
use crate::posture::{exceeds_support, Chart, Posture};

/// Below this acceptance rate the rejection sampler gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Attempts made before the acceptance rate is judged.
const STALL_WINDOW: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrappedNormal {
    pub mean: Posture,
    #[serde(with = "serde_matrix")]
    pub cov: DMatrix<f64>,
}

impl WrappedNormal {
    pub fn new(mean: Posture, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.dim();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cov.nrows(),
            });
        }
        if (&cov - cov.transpose()).amax() > 1e-9 {
            return Err(Error::InvalidArgument("covariance is not symmetric".into()));
        }
        let (vals, _) = linalg::sym_eigen_desc(&cov);
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::InvalidArgument(
                "covariance is not positive semi-definite".into(),
            ));
        }
        Ok(WrappedNormal { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    /// Log density of a posture, through its coordinates at the mean.
    pub fn log_density_at(&self, y: &Posture) -> Result<f64> {
        let c = self.mean.chart().coords(y)?;
        log_density(&c, &self.cov)
    }

    pub fn sampler(&self) -> Result<WrappedSampler> {
        WrappedSampler::new(&self.mean, &self.cov)
    }
}

/// `−½ log|K| − ½ cᵀK⁻¹c` inside the support, `−∞` outside.
pub fn log_density(c: &DVector<f64>, k: &DMatrix<f64>) -> Result<f64> {
    if c.len() != k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            found: c.len(),
        });
    }
    let (inv, logdet) = linalg::spd_inverse_logdet(k)?;
    if exceeds_support(c) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-0.5 * logdet - 0.5 * (c.transpose() * inv * c)[0])
}

/// Rejection sampler for the truncated Gaussian on tangent coordinates,
/// pushed to the manifold by the exponential map.
#[derive(Clone, Debug)]
pub struct WrappedSampler {
    chart: Chart,
    factor: DMatrix<f64>,
    attempts: usize,
    accepted: usize,
}

impl WrappedSampler {
    pub fn new(mean: &Posture, k: &DMatrix<f64>) -> Result<Self> {
        let d = mean.dim();
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.nrows(),
            });
        }
        let (vals, vecs) = linalg::sym_eigen_desc(k);
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::InvalidArgument(
                "covariance is not positive semi-definite".into(),
            ));
        }
        let mut factor = vecs;
        for (j, v) in vals.iter().enumerate() {
            let s = v.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        Ok(WrappedSampler {
            chart: mean.chart(),
            factor,
            attempts: 0,
            accepted: 0,
        })
    }

    /// Tangent coordinates of one accepted draw.
    pub fn sample_coords<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DVector<f64>> {
        let d = self.factor.nrows();
        let mut tries = 0usize;
        loop {
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let c = &self.factor * z;
            self.attempts += 1;
            tries += 1;
            if !exceeds_support(&c) {
                self.accepted += 1;
                return Ok(c);
            }
            if tries >= STALL_WINDOW && (self.accepted as f64) < MIN_ACCEPTANCE * self.attempts as f64 {
                return Err(Error::RejectionStall {
                    acceptance: MIN_ACCEPTANCE,
                });
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Posture> {
        let c = self.sample_coords(rng)?;
        self.chart.point(&c)
    }

    /// Fraction of proposals accepted so far.
    pub fn acceptance(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

/// One draw from the wrapped truncated normal, deterministic in `seed`.
pub fn sample_wrapped(mean: &Posture, k: &DMatrix<f64>, seed: u64) -> Result<Posture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WrappedSampler::new(mean, k)?.sample(&mut rng)
}

/// Tangent coordinates of every posture at `mean`.
pub(crate) fn coords_at(chart: &Chart, ys: &[&Posture]) -> Result<Vec<DVector<f64>>> {
    ys.iter()
        .enumerate()
        .map(|(m, y)| chart.coords(y).map_err(|e| e.at_index(m)))
        .collect()
}
