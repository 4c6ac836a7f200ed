use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mle::{fit_mle_refs, MleOptions};
use super::{coords_at, WrappedNormal};
use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix};
use crate::posture::Posture;

/// Prior hyperparameters: random-walk variance of consecutive means, the
/// mean preceding the first step, and the inverse-Wishart scale and degrees
/// of freedom shared by every step covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapHyper {
    pub lambda0_sq: f64,
    pub mu0: Posture,
    #[serde(with = "serde_matrix")]
    pub k0: DMatrix<f64>,
    pub nu0: f64,
}

impl MapHyper {
    /// `λ0² = 1`, `K0 = 1e−3·I`, `ν0 = dim + 2`.
    pub fn default_for(mu0: Posture) -> MapHyper {
        let d = mu0.dim();
        MapHyper {
            lambda0_sq: 1.0,
            k0: DMatrix::identity(d, d) * 1e-3,
            nu0: d as f64 + 2.0,
            mu0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mu0.dim();
        if !(self.lambda0_sq > 0.0 && self.lambda0_sq.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda0_sq must be positive, got {}",
                self.lambda0_sq
            )));
        }
        if !(self.nu0 > d as f64 - 1.0) {
            return Err(Error::InvalidArgument(format!(
                "nu0 must exceed {}, got {}",
                d as f64 - 1.0,
                self.nu0
            )));
        }
        if self.k0.nrows() != d || self.k0.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.k0.nrows(),
            });
        }
        if self.k0.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("K0 must be positive definite".into()));
        }
        Ok(())
    }

    /// `M + ν0 + 2n − 1` with `n` landmarks, i.e. `M + ν0 + dim + 1`.
    fn divisor(&self, m: usize) -> f64 {
        m as f64 + self.nu0 + self.mu0.dim() as f64 + 1.0
    }
}

/// Per-step posture distributions of a motion with temporally coupled means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionDistribution {
    pub steps: Vec<WrappedNormal>,
    pub hyper: MapHyper,
}

impl MotionDistribution {
    pub fn means(&self) -> Vec<Posture> {
        self.steps.iter().map(|s| s.mean.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    pub max_iter: usize,
    /// Stop once the summed mean-step norms of a sweep are at most this.
    pub tol: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            max_iter: 200,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFit {
    pub dist: MotionDistribution,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
    /// Negative log posterior at the initialization and after every sweep.
    pub objective: Vec<f64>,
}

fn check_data(data: &[Vec<Posture>]) -> Result<(usize, usize)> {
    let m = data.len();
    if m == 0 {
        return Err(Error::InvalidArgument("MAP fit needs at least one sequence".into()));
    }
    let l = data[0].len();
    if l == 0 {
        return Err(Error::InvalidArgument("MAP fit needs at least one step".into()));
    }
    if let Some(row) = data.iter().find(|r| r.len() != l) {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: row.len(),
        });
    }
    Ok((m, l))
}

fn column(data: &[Vec<Posture>], l: usize) -> Vec<&Posture> {
    data.iter().map(|row| &row[l]).collect()
}

/// Squared summed part-wise distance used by the random-walk prior.
fn prior_sq(a: &Posture, b: &Posture) -> Result<f64> {
    Ok(a.parts()
        .iter()
        .zip(b.parts())
        .map(|(x, y)| x.distance(y).powi(2))
        .sum())
}

/// Negative log posterior up to an additive constant:
/// `½ Σ_l [(M + ν0 + 2n − 1) log|K_l| + Σ_m cᵀK_l⁻¹c + tr(K0 K_l⁻¹)]
///  + (1 / 2λ0²) Σ_l d(μ_l, μ_{l−1})²`, with `μ_0` from the hyperparameters.
pub fn negative_log_posterior(
    data: &[Vec<Posture>],
    means: &[Posture],
    covs: &[DMatrix<f64>],
    hyper: &MapHyper,
) -> Result<f64> {
    let (m, l_len) = check_data(data)?;
    if means.len() != l_len || covs.len() != l_len {
        return Err(Error::DimensionMismatch {
            expected: l_len,
            found: means.len().min(covs.len()),
        });
    }
    let div = hyper.divisor(m);
    let mut total = 0.0;
    for l in 0..l_len {
        let (inv, logdet) = linalg::spd_inverse_logdet(&covs[l])?;
        let cs = coords_at(&means[l].chart(), &column(data, l))?;
        let quad: f64 = cs.iter().map(|c| (c.transpose() * &inv * c)[0]).sum();
        let tr = (&hyper.k0 * &inv).trace();
        total += 0.5 * (div * logdet + quad + tr);
        let prev = if l == 0 { &hyper.mu0 } else { &means[l - 1] };
        total += prior_sq(&means[l], prev)? / (2.0 * hyper.lambda0_sq);
    }
    Ok(total)
}

const MAX_HALVINGS: usize = 30;

fn map_cov(cs: &[DVector<f64>], hyper: &MapHyper, m: usize) -> DMatrix<f64> {
    linalg::symmetrize(&((linalg::scatter(cs) + &hyper.k0) / hyper.divisor(m)))
}

/// Coordinate descent on the negative log posterior: per sweep and per step,
/// one linearized mean update (Gauss–Seidel in the step index) followed by
/// the closed-form covariance update. Initialized from per-step MLE means.
pub fn fit_map(data: &[Vec<Posture>], hyper: &MapHyper, opts: &MapOptions) -> Result<MapFit> {
    let (m, l_len) = check_data(data)?;
    hyper.validate()?;
    let d = hyper.mu0.dim();
    if data[0][0].dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: data[0][0].dim(),
        });
    }
    let inv_l2 = 1.0 / hyper.lambda0_sq;

    let mut means = Vec::with_capacity(l_len);
    let mut covs = Vec::with_capacity(l_len);
    for l in 0..l_len {
        let col = column(data, l);
        let mle = fit_mle_refs(&col, &MleOptions::default()).map_err(|e| e.at_index(l))?;
        let cs = coords_at(&mle.dist.mean.chart(), &col)?;
        covs.push(map_cov(&cs, hyper, m));
        means.push(mle.dist.mean);
    }
    let mut objective = vec![negative_log_posterior(data, &means, &covs, hyper)?];

    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while sweeps < opts.max_iter {
        residual = 0.0;
        for l in 0..l_len {
            let col = column(data, l);
            let chart = means[l].chart();
            let cs = coords_at(&chart, &col)?;
            let (kinv, _) = linalg::spd_inverse_logdet(&covs[l]).map_err(|e| e.at_index(l))?;

            let mut neighbours = vec![if l == 0 { &hyper.mu0 } else { &means[l - 1] }];
            if l + 1 < l_len {
                neighbours.push(&means[l + 1]);
            }
            let mut sum_c = DVector::zeros(d);
            for c in &cs {
                sum_c += c;
            }
            let mut rhs = &kinv * sum_c;
            for nb in &neighbours {
                rhs += chart.coords(nb)? * inv_l2;
            }
            let a_mat = &kinv * m as f64 + DMatrix::identity(d, d) * (neighbours.len() as f64 * inv_l2);
            let mut step = a_mat.cholesky().ok_or(Error::SingularCovariance)?.solve(&rhs);

            // The update comes from a linearization; halve it until the
            // local objective at the current K_l does not increase.
            let local = |mu: &Posture| -> Result<f64> {
                let ch = mu.chart();
                let mut v = 0.0;
                for c in coords_at(&ch, &col)? {
                    v += 0.5 * (c.transpose() * &kinv * &c)[0];
                }
                for nb in &neighbours {
                    v += prior_sq(mu, nb)? * 0.5 * inv_l2;
                }
                Ok(v)
            };
            let before = local(&means[l])?;
            let mut candidate = chart.point(&step)?;
            let mut halvings = 0;
            while local(&candidate)? > before {
                halvings += 1;
                step *= 0.5;
                if halvings > MAX_HALVINGS {
                    step.fill(0.0);
                    candidate = means[l].clone();
                    break;
                }
                candidate = chart.point(&step)?;
            }
            residual += step.norm();
            means[l] = candidate;

            let cs = coords_at(&means[l].chart(), &col)?;
            covs[l] = map_cov(&cs, hyper, m);
        }
        sweeps += 1;
        objective.push(negative_log_posterior(data, &means, &covs, hyper)?);
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }

    let steps = means
        .into_iter()
        .zip(covs)
        .map(|(mean, cov)| WrappedNormal { mean, cov })
        .collect();
    Ok(MapFit {
        dist: MotionDistribution {
            steps,
            hyper: hyper.clone(),
        },
        sweeps,
        residual,
        converged,
        objective,
    })
}
