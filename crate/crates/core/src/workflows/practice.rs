//! Rate-linked posture features around a time window and reconstruction of
//! representative low, medium and high-rate subsequences.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{cumulative_rate, uniform_grid, RateFunction};
use crate::posture::Posture;
use crate::sir::{reconstruct_from_features, sequence_coords, sir_directions, window_indices, SirOptions, SirResult};
use crate::stats::MotionDistribution;

/// Rate variance below this counts as no variation.
const MIN_RATE_VAR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PracticeOptions {
    pub sir: SirOptions,
    /// Rate percentiles (0–100) whose subsequences are reconstructed.
    pub percentiles: Vec<f64>,
}

impl Default for PracticeOptions {
    fn default() -> Self {
        PracticeOptions {
            sir: SirOptions::default(),
            percentiles: vec![10.0, 50.0, 90.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PracticeLevel {
    pub percentile: f64,
    pub rate: f64,
    pub features: Vec<f64>,
    pub postures: Vec<Posture>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPractice {
    pub window: (f64, f64),
    /// First and one-past-last step of the window.
    pub steps: (usize, usize),
    /// True when the cumulative rates do not vary; levels are then the mean subsequence.
    pub degenerate: bool,
    pub sir: Option<SirResult>,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub r_squared: f64,
    pub features: Vec<Vec<f64>>,
    pub cumulative_rates: Vec<f64>,
    pub levels: Vec<PracticeLevel>,
}

impl BestPractice {
    /// CSV with columns `feature_1..feature_B,rate`.
    pub fn features_csv(&self) -> String {
        let b = self.weights.len();
        let mut s = (1..=b).map(|i| format!("feature_{i},")).collect::<String>();
        s.push_str("rate\n");
        for (f, r) in self.features.iter().zip(&self.cumulative_rates) {
            for x in f {
                let _ = write!(s, "{x:.16e},");
            }
            let _ = writeln!(s, "{r:.16e}");
        }
        s
    }
}

/// Linearly interpolated percentile of `xs` (`p` in 0–100).
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let x = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let k = x.floor() as usize;
    if k + 1 >= v.len() {
        v[v.len() - 1]
    } else {
        v[k] + (x - k as f64) * (v[k + 1] - v[k])
    }
}

/// Ordinary least squares `y ≈ w₀ + wᵀf`, returning `(w₀, w, R²)`.
fn ols(features: &[DVector<f64>], y: &[f64]) -> Result<(f64, DVector<f64>, f64)> {
    let m = y.len();
    let b = features[0].len();
    let x = DMatrix::from_fn(m, b + 1, |i, j| if j == 0 { 1.0 } else { features[i][j - 1] });
    let yv = DVector::from_column_slice(y);
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let resid = &yv - &x * &coef;
    let mean = yv.mean();
    let tss: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 {
        1.0 - resid.norm_squared() / tss
    } else {
        0.0
    };
    Ok((coef[0], coef.rows(1, b).into_owned(), r2))
}

/// `aligned[m]` are the postures of sequence `m` at the model's steps (on a
/// uniform grid); `rates[m]` its rate function.
pub fn best_practice(
    aligned: &[Vec<Posture>],
    rates: &[RateFunction],
    model: &MotionDistribution,
    t_star: f64,
    delta: f64,
    opts: &PracticeOptions,
) -> Result<BestPractice> {
    if aligned.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: aligned.len(),
            found: rates.len(),
        });
    }
    if aligned.is_empty() {
        return Err(Error::InvalidArgument("no sequences".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {delta}")));
    }
    let (s, t) = ((t_star - delta).max(0.0), (t_star + delta).min(1.0));
    let grid = uniform_grid(model.len());
    let range = window_indices(&grid, s, t)?;
    if range.len() < 2 {
        return Err(Error::BadInterval { s, t });
    }
    let coords = aligned
        .iter()
        .map(|a| sequence_coords(a, model, range.clone()))
        .collect::<Result<Vec<_>>>()?;
    let cum = rates
        .iter()
        .map(|r| cumulative_rate(r, s, t))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<Posture> = model.steps[range.clone()].iter().map(|st| st.mean.clone()).collect();

    let m = cum.len() as f64;
    let mean_rate = cum.iter().sum::<f64>() / m;
    let var = cum.iter().map(|r| (r - mean_rate).powi(2)).sum::<f64>() / m;
    if var < MIN_RATE_VAR {
        let levels = opts
            .percentiles
            .iter()
            .map(|&p| PracticeLevel {
                percentile: p,
                rate: mean_rate,
                features: Vec::new(),
                postures: means.clone(),
            })
            .collect();
        return Ok(BestPractice {
            window: (s, t),
            steps: (range.start, range.end),
            degenerate: true,
            sir: None,
            intercept: mean_rate,
            weights: Vec::new(),
            r_squared: 0.0,
            features: vec![Vec::new(); cum.len()],
            cumulative_rates: cum,
            levels,
        });
    }

    let pairs: Vec<(DVector<f64>, f64)> = coords.into_iter().zip(cum.iter().copied()).collect();
    let sir = sir_directions(&pairs, &opts.sir)?;
    let feats: Vec<DVector<f64>> = pairs.iter().map(|(c, _)| sir.project(c)).collect::<Result<_>>()?;
    let (w0, w, r2) = ols(&feats, &cum)?;
    let f_mean = feats.iter().fold(DVector::zeros(w.len()), |a, f| a + f) / m;
    let fitted_at_mean = w0 + w.dot(&f_mean);
    let wn = w.norm_squared();

    let levels = opts
        .percentiles
        .iter()
        .map(|&p| {
            let q = percentile(&cum, p);
            let f = if wn > 0.0 {
                &f_mean + &w * ((q - fitted_at_mean) / wn)
            } else {
                f_mean.clone()
            };
            Ok(PracticeLevel {
                percentile: p,
                rate: q,
                postures: reconstruct_from_features(&f, &sir, &means)?,
                features: f.iter().copied().collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BestPractice {
        window: (s, t),
        steps: (range.start, range.end),
        degenerate: false,
        intercept: w0,
        weights: w.iter().copied().collect(),
        r_squared: r2,
        features: feats.iter().map(|f| f.iter().copied().collect()).collect(),
        cumulative_rates: cum,
        levels,
        sir: Some(sir),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_interpolate() {
        let xs = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(percentile(&xs, 50.0), 3.0);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 100.0), 5.0);
        assert!((percentile(&xs, 10.0) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_line() {
        let f: Vec<DVector<f64>> = (0..10)
            .map(|i| DVector::from_vec(vec![i as f64, (i * i) as f64 * 0.1]))
            .collect();
        let y: Vec<f64> = f.iter().map(|v| 1.5 + 2.0 * v[0] - 0.5 * v[1]).collect();
        let (w0, w, r2) = ols(&f, &y).unwrap();
        assert!((w0 - 1.5).abs() < 1e-9 && (w[0] - 2.0).abs() < 1e-9 && (w[1] + 0.5).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
