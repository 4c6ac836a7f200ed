//! Sliced-inverse-regression directions linking tangent coordinates to rates,
//! and reconstruction of postures from projection features.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix};
use crate::motion::Kernel;
use crate::posture::Posture;
use crate::stats::MotionDistribution;

/// Eigenvalues of the expectation covariance at or below this are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Share of the expectation-covariance trace the default direction count explains.
pub const DEFAULT_EXPLAINED: f64 = 0.9;

/// How coordinates are rebuilt from projection features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconstruction {
    /// In the span of `K_t β_b`: `c = K_t D (Dᵀ K_t D)⁻¹ z`, the most likely
    /// coordinates under `K_t` with the given features.
    #[default]
    Covariance,
    /// Euclidean least norm: `c = D (DᵀD)⁻¹ z`.
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirOptions {
    /// Kernel bandwidth in rate units; `None` uses Silverman's rule on the rates.
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
    /// Number of directions; `None` keeps the fewest explaining 90% of the trace.
    pub n_directions: Option<usize>,
    /// The ridge added to `K_t` is this times `tr(K_t) / dim`.
    pub ridge_scale: f64,
    /// Subtract the mean of the conditional expectations before forming their covariance.
    pub center: bool,
    #[serde(default)]
    pub reconstruction: Reconstruction,
}

impl Default for SirOptions {
    fn default() -> Self {
        SirOptions {
            bandwidth: None,
            kernel: Kernel::Gaussian,
            n_directions: None,
            ridge_scale: 1e-6,
            center: false,
            reconstruction: Reconstruction::Covariance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirResult {
    /// One direction `β_b` per column, normalized so `‖K_t β_b‖ = 1`.
    #[serde(with = "serde_matrix")]
    pub directions: DMatrix<f64>,
    /// Eigenvalues of the kept directions, descending.
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue of the expectation covariance, descending.
    pub spectrum: Vec<f64>,
    #[serde(with = "serde_matrix")]
    pub mean_cov: DMatrix<f64>,
    pub bandwidth: f64,
    #[serde(default)]
    pub reconstruction: Reconstruction,
}

impl SirResult {
    pub fn n_directions(&self) -> usize {
        self.directions.ncols()
    }

    /// Fraction of the spectrum carried by each kept direction.
    pub fn explained(&self) -> Vec<f64> {
        let total: f64 = self.spectrum.iter().map(|v| v.max(0.0)).sum();
        self.eigenvalues
            .iter()
            .map(|v| if total > 0.0 { v / total } else { 0.0 })
            .collect()
    }

    /// Projection features `z_b = β_bᵀ c`.
    pub fn project(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        if c.len() != self.directions.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.directions.nrows(),
                found: c.len(),
            });
        }
        Ok(self.directions.transpose() * c)
    }

    /// Coordinates whose features are `z`, per the configured reconstruction.
    pub fn reconstruct_coords(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let b = self.n_directions();
        if z.len() != b {
            return Err(Error::DimensionMismatch {
                expected: b,
                found: z.len(),
            });
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("features must be finite".into()));
        }
        let d = &self.directions;
        let span = match self.reconstruction {
            Reconstruction::Covariance => &self.mean_cov * d,
            Reconstruction::Euclidean => d.clone(),
        };
        let gram = d.transpose() * &span;
        let gram = (&gram + gram.transpose()) * 0.5;
        let vals = linalg::sym_eigen_desc(&gram).0;
        let floor = EIGEN_FLOOR * vals.iter().cloned().fold(0.0, f64::max).max(EIGEN_FLOOR);
        let found = vals.iter().filter(|&&v| v > floor).count();
        let chol = gram
            .cholesky()
            .filter(|_| found == b)
            .ok_or(Error::RankDeficient { needed: b, found })?;
        Ok(span * chol.solve(z))
    }
}

fn silverman(rates: &[f64]) -> f64 {
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    1.06 * sd * n.powf(-0.2)
}

/// Nadaraya–Watson average of coordinates with kernel weights in rate.
///
/// Gaussian weights are taken relative to the largest one, so the estimate
/// stays defined far from every observed rate.
pub fn conditional_expectation(
    pairs: &[(DVector<f64>, f64)],
    r_star: f64,
    h: f64,
    kernel: Kernel,
) -> Result<DVector<f64>> {
    let first = pairs.first().ok_or(Error::EmptyWindow { at: r_star })?;
    let u = |r: f64| {
        if h > 0.0 {
            (r - r_star) / h
        } else if r == r_star {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let shift = match kernel {
        Kernel::Gaussian => pairs.iter().map(|p| u(p.1).abs()).fold(f64::INFINITY, f64::min),
        Kernel::Epanechnikov => 0.0,
    };
    let mut acc = DVector::zeros(first.0.len());
    let mut total = 0.0;
    for (c, r) in pairs {
        let x = u(*r);
        let w = match kernel {
            Kernel::Gaussian if x.is_finite() => (-0.5 * (x * x - shift * shift)).exp(),
            Kernel::Gaussian => 0.0,
            Kernel::Epanechnikov => kernel.weight(x),
        };
        if w > 0.0 {
            acc.axpy(w, c, 1.0);
            total += w;
        }
    }
    if total < 1e-300 {
        return Err(Error::EmptyWindow { at: r_star });
    }
    Ok(acc / total)
}

pub fn sir_directions(pairs: &[(DVector<f64>, f64)], opts: &SirOptions) -> Result<SirResult> {
    let m = pairs.len();
    let dim = pairs.first().map_or(0, |p| p.0.len());
    if m == 0 || dim == 0 {
        return Err(Error::InvalidArgument("SIR needs at least one non-empty pair".into()));
    }
    if let Some(p) = pairs.iter().find(|p| p.0.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.0.len(),
        });
    }
    let rates: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let h = match opts.bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
        None => silverman(&rates),
    };

    let mut expectations = Vec::with_capacity(m);
    for &r in &rates {
        expectations.push(conditional_expectation(pairs, r, h, opts.kernel)?);
    }
    if opts.center {
        let mean = expectations.iter().fold(DVector::zeros(dim), |a, e| a + e) / m as f64;
        for e in &mut expectations {
            *e -= &mean;
        }
    }
    let c_hat = linalg::symmetrize(&(linalg::scatter(&expectations) / m as f64));
    let (vals, vecs) = linalg::sym_eigen_desc(&c_hat);
    let spectrum: Vec<f64> = vals.iter().copied().collect();

    let b = match opts.n_directions {
        Some(b) => b,
        None => {
            let total: f64 = spectrum.iter().map(|v| v.max(0.0)).sum();
            let mut acc = 0.0;
            let mut b = spectrum.len();
            for (i, v) in spectrum.iter().enumerate() {
                acc += v.max(0.0);
                if acc >= DEFAULT_EXPLAINED * total {
                    b = i + 1;
                    break;
                }
            }
            b.max(1)
        }
    };
    if b == 0 || b > dim || m <= b {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ B ≤ {dim} and more than B pairs, got B = {b} with {m} pairs"
        )));
    }
    let found = spectrum.iter().filter(|&&v| v > EIGEN_FLOOR).count();
    if found < b {
        return Err(Error::RankDeficient { needed: b, found });
    }

    let k_t = linalg::symmetrize(&(linalg::scatter(&pairs.iter().map(|p| p.0.clone()).collect::<Vec<_>>()) / m as f64));
    let tr = k_t.trace();
    let eps = opts.ridge_scale * if tr > 0.0 { tr / dim as f64 } else { 1.0 };
    let ridged = &k_t + DMatrix::identity(dim, dim) * eps;
    let chol = ridged.cholesky().ok_or(Error::SingularCovariance)?;
    let mut directions = DMatrix::zeros(dim, b);
    for j in 0..b {
        let beta = chol.solve(&vecs.column(j).into_owned());
        let scale = (&k_t * &beta).norm();
        if !(scale > 0.0) {
            return Err(Error::RankDeficient { needed: b, found: j });
        }
        directions.set_column(j, &(beta / scale));
    }
    Ok(SirResult {
        directions,
        eigenvalues: spectrum[..b].to_vec(),
        spectrum,
        mean_cov: k_t,
        bandwidth: h,
        reconstruction: opts.reconstruction,
    })
}

/// Step indices with grid times in `[s, t]`.
pub fn window_indices(grid: &[f64], s: f64, t: f64) -> Result<Range<usize>> {
    if !(0.0 <= s && s <= t && t <= 1.0) {
        return Err(Error::BadInterval { s, t });
    }
    let slack = 1e-12;
    let lo = grid.partition_point(|&g| g < s - slack);
    let hi = grid.partition_point(|&g| g <= t + slack);
    if lo >= hi {
        return Err(Error::BadInterval { s, t });
    }
    Ok(lo..hi)
}

/// Concatenated tangent coordinates of `postures[range]` at the matching
/// fitted step means.
pub fn sequence_coords(postures: &[Posture], model: &MotionDistribution, range: Range<usize>) -> Result<DVector<f64>> {
    if postures.len() != model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            found: postures.len(),
        });
    }
    if range.is_empty() || range.end > postures.len() {
        return Err(Error::InvalidArgument(format!(
            "window {range:?} outside {} steps",
            postures.len()
        )));
    }
    let mut out = Vec::new();
    for l in range {
        let c = model.steps[l]
            .mean
            .chart()
            .coords(&postures[l])
            .map_err(|e| e.at_index(l))?;
        out.extend(c.iter());
    }
    Ok(DVector::from_vec(out))
}

/// Postures at each mean whose concatenated coordinates have the given features.
pub fn reconstruct_from_features(z: &DVector<f64>, result: &SirResult, means: &[Posture]) -> Result<Vec<Posture>> {
    let c = result.reconstruct_coords(z)?;
    let total: usize = means.iter().map(|m| m.dim()).sum();
    if total != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: total,
        });
    }
    let mut offset = 0;
    means
        .iter()
        .map(|m| {
            let block = c.rows(offset, m.dim()).into_owned();
            offset += m.dim();
            m.chart().point(&block)
        })
        .collect()
}
