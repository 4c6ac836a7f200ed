//! Execution rates derived from alignment warps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{gradient, interp, Warping};
use crate::error::{Error, Result};

/// Slopes are floored here before taking the logarithm.
pub const RATE_FLOOR: f64 = 1e-8;

/// Log relative speed `r(t) = log δ̇(t)` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl RateFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if grid.len() < 2 {
            return Err(Error::GridMismatch("a rate function needs at least 2 points".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("rate values must be finite".into()));
        }
        Ok(RateFunction { grid, values })
    }

    pub fn constant(grid: Vec<f64>, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        RateFunction::new(grid, values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        interp(
            &self.grid,
            &self.values,
            t.clamp(self.grid[0], self.grid[self.grid.len() - 1]),
        )
    }

    /// Pointwise mean of rate functions sharing one grid.
    pub fn mean(rates: &[RateFunction]) -> Result<RateFunction> {
        let first = rates
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of no rate functions".into()))?;
        if rates.iter().any(|r| r.grid != first.grid) {
            return Err(Error::GridMismatch("rate functions use different grids".into()));
        }
        let m = rates.len() as f64;
        let values = (0..first.grid.len())
            .map(|l| rates.iter().map(|r| r.values[l]).sum::<f64>() / m)
            .collect();
        RateFunction::new(first.grid.clone(), values)
    }
}

/// Scaled warp `δ = (U_moving / U_ref) γ`.
pub fn scaled_warping(gamma: &Warping, u_moving: f64, u_ref: f64) -> Vec<f64> {
    let ratio = u_moving / u_ref;
    gamma.values().iter().map(|g| ratio * g).collect()
}

pub fn rate_from_warping(gamma: &Warping, u_moving: f64, u_ref: f64) -> Result<RateFunction> {
    if !(u_moving > 0.0 && u_ref > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "durations must be positive, got {u_moving} and {u_ref}"
        )));
    }
    let delta = scaled_warping(gamma, u_moving, u_ref);
    let values = gradient(gamma.grid(), &delta)
        .into_iter()
        .map(|d| d.max(RATE_FLOOR).ln())
        .collect();
    RateFunction::new(gamma.grid().to_vec(), values)
}

/// `log ∫_s^t exp(r(u)) du`, by the trapezoid rule on the rate grid with
/// linearly interpolated endpoints.
pub fn cumulative_rate(r: &RateFunction, s: f64, t: f64) -> Result<f64> {
    let g = &r.grid;
    if !(0.0 <= s && s < t && t <= 1.0) || s < g[0] || t > g[g.len() - 1] {
        return Err(Error::BadInterval { s, t });
    }
    let mut pts = vec![(s, r.eval(s).exp())];
    for (&u, &v) in g.iter().zip(&r.values) {
        if u > s && u < t {
            pts.push((u, v.exp()));
        }
    }
    pts.push((t, r.eval(t).exp()));
    let total: f64 = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(total.ln())
}

/// CSV with columns `t,gamma,delta,rate` on the warping grid.
pub fn alignment_csv(gamma: &Warping, delta: &[f64], rate: &RateFunction) -> String {
    let mut s = String::from("t,gamma,delta,rate\n");
    for (l, (t, g)) in gamma.grid().iter().zip(gamma.values()).enumerate() {
        let _ = writeln!(s, "{},{},{},{}", fmt(*t), fmt(*g), fmt(delta[l]), fmt(rate.values[l]));
    }
    s
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}
