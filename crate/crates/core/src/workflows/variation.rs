//! Postures along the principal directions of a fitted step covariance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::posture::Posture;
use crate::stats::MotionDistribution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub step: usize,
    pub eigenvalues: Vec<f64>,
    /// Share of `tr K_l` carried by each reported direction.
    pub explained: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `postures[e][k] = exp_μ(s_k v_e)`.
    pub postures: Vec<Vec<Posture>>,
}

/// `n` evenly spaced multipliers on `[−1, 1]`.
pub fn default_s_values(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

pub fn motion_variation(
    model: &MotionDistribution,
    l: usize,
    s_values: &[f64],
    n_eigs: usize,
) -> Result<VariationReport> {
    let step = model
        .steps
        .get(l)
        .ok_or_else(|| Error::InvalidArgument(format!("step {l} out of range for {} steps", model.len())))?;
    let (vals, vecs) = linalg::sym_eigen_desc(&step.cov);
    if vals.iter().any(|&v| v < -1e-10) {
        return Err(Error::InvalidArgument(
            "step covariance is not positive semi-definite".into(),
        ));
    }
    let n = n_eigs.min(vals.len());
    let trace: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    let chart = step.mean.chart();
    let mut postures = Vec::with_capacity(n);
    for e in 0..n {
        let v = vecs.column(e).into_owned();
        postures.push(
            s_values
                .iter()
                .map(|&s| chart.point(&(&v * s)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(VariationReport {
        step: l,
        eigenvalues: vals.iter().take(n).copied().collect(),
        explained: vals
            .iter()
            .take(n)
            .map(|v| if trace > 0.0 { v.max(0.0) / trace } else { 0.0 })
            .collect(),
        s_values: s_values.to_vec(),
        postures,
    })
}

impl VariationReport {
    /// CSV with columns `direction,s,part,x,y,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,s,part,x,y,z\n");
        for (e, row) in self.postures.iter().enumerate() {
            for (s, p) in self.s_values.iter().zip(row) {
                for (k, part) in p.parts().iter().enumerate() {
                    let c = part.coords();
                    let _ = writeln!(out, "{},{s:.16e},{k},{:.16e},{:.16e},{:.16e}", e + 1, c.x, c.y, c.z);
                }
            }
        }
        out
    }
}
