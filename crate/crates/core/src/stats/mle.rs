use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{coords_at, WrappedNormal};
use crate::error::{Error, Result};
use crate::linalg;
use crate::posture::Posture;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Stop once the mean tangent coordinate has norm at most this.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

/// Fitted distribution plus convergence diagnostics. A fit that hit
/// `max_iter` is still returned, with `converged = false`.
#[derive(Clone, Debug, PartialEq)]
pub struct MleFit {
    pub dist: WrappedNormal,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn mean_of(cs: &[DVector<f64>]) -> DVector<f64> {
    let mut s = DVector::zeros(cs[0].len());
    for c in cs {
        s += c;
    }
    s / cs.len() as f64
}

/// Karcher-mean iteration from the first sample, then the scatter of the
/// tangent coordinates at the final mean.
pub fn fit_mle(samples: &[Posture], opts: &MleOptions) -> Result<MleFit> {
    fit_mle_refs(&samples.iter().collect::<Vec<_>>(), opts)
}

pub(crate) fn fit_mle_refs(samples: &[&Posture], opts: &MleOptions) -> Result<MleFit> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("MLE needs at least one sample".into()));
    }
    let mut mu = samples[0].clone();
    let mut chart = mu.chart();
    let mut cs = coords_at(&chart, samples)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let step = mean_of(&cs);
        residual = step.norm();
        if residual <= opts.tol {
            converged = true;
            break;
        }
        mu = chart.point(&step)?;
        chart = mu.chart();
        cs = coords_at(&chart, samples)?;
        iterations += 1;
    }
    if !converged {
        residual = mean_of(&cs).norm();
        converged = residual <= opts.tol;
    }
    let cov = linalg::symmetrize(&(linalg::scatter(&cs) / samples.len() as f64));
    Ok(MleFit {
        dist: WrappedNormal { mean: mu, cov },
        iterations,
        residual,
        converged,
    })
}
