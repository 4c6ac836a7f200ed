//! Posture sequences on normalized time, resampling, TSRVF, elastic alignment
//! and execution rates.

mod align;
mod kernel;
mod rate;
mod tsrvf;

pub use align::{
    align_sequences, align_tsrvf, motion_distance, AlignOptions, Alignment, Lattice, SlopeSet, MIN_DP_GRID,
};
pub use kernel::{karcher_mean, local_kernel_posture, resample_sequence, Kernel, KernelEstimate, KernelOptions};
pub use rate::{alignment_csv, cumulative_rate, rate_from_warping, scaled_warping, RateFunction, RATE_FLOOR};
pub use tsrvf::{compute_tsrvf, tsrvf_distance, Tsrvf, ZERO_SPEED};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posture::Posture;

/// `n` equally spaced points on `[0, 1]`, with exact endpoints.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}

/// Index `k` with `grid[k] <= t <= grid[k + 1]`, clamped to the valid range.
pub(crate) fn bracket(grid: &[f64], t: f64) -> usize {
    let n = grid.len();
    match grid.partition_point(|&g| g <= t) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    }
}

/// Linear interpolation of `values` given on `grid`.
pub(crate) fn interp(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let k = bracket(grid, t);
    let w = (t - grid[k]) / (grid[k + 1] - grid[k]);
    values[k] + w * (values[k + 1] - values[k])
}

/// Central differences in the interior, one-sided at the ends.
pub(crate) fn gradient(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|l| {
            let (a, b) = match l {
                0 => (0, 1),
                l if l == n - 1 => (n - 2, n - 1),
                l => (l - 1, l + 1),
            };
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

/// Trapezoid rule for samples on an arbitrary grid.
pub(crate) fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::GridMismatch(format!(
            "grid needs at least 2 points, found {}",
            grid.len()
        )));
    }
    if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
        return Err(Error::GridMismatch("grid must start at 0 and end at 1".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Postures indexed by normalized time, plus the physical running time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostureSequence {
    grid: Vec<f64>,
    postures: Vec<Posture>,
    duration: f64,
}

impl PostureSequence {
    pub fn new(grid: Vec<f64>, postures: Vec<Posture>, duration: f64) -> Result<Self> {
        check_grid(&grid)?;
        if postures.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: postures.len(),
            });
        }
        let n = postures[0].n_parts();
        if let Some(p) = postures.iter().find(|p| p.n_parts() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.n_parts(),
            });
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "duration must be positive, got {duration}"
            )));
        }
        Ok(PostureSequence {
            grid,
            postures,
            duration,
        })
    }

    /// Sequence on the uniform grid with `postures.len()` points.
    pub fn uniform(postures: Vec<Posture>, duration: f64) -> Result<Self> {
        PostureSequence::new(uniform_grid(postures.len()), postures, duration)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn postures(&self) -> &[Posture] {
        &self.postures
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn with_duration(mut self, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "duration must be positive, got {duration}"
            )));
        }
        self.duration = duration;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn n_parts(&self) -> usize {
        self.postures[0].n_parts()
    }

    /// True when the grid is `l / (L − 1)` up to rounding.
    pub fn is_uniform(&self) -> bool {
        let last = (self.len() - 1) as f64;
        self.grid
            .iter()
            .enumerate()
            .all(|(l, &t)| (t - l as f64 / last).abs() < 1e-12)
    }

    /// Geodesic interpolation between the bracketing grid postures.
    pub fn sample_at(&self, t: f64) -> Result<Posture> {
        let t = t.clamp(0.0, 1.0);
        let k = bracket(&self.grid, t);
        let w = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        if w <= 0.0 {
            return Ok(self.postures[k].clone());
        }
        if w >= 1.0 {
            return Ok(self.postures[k + 1].clone());
        }
        self.postures[k]
            .geodesic(&self.postures[k + 1], w)
            .map_err(|e| e.at_index(k))
    }

    /// The sequence `t ↦ α(γ(t))` on the grid of `gamma`.
    pub fn compose(&self, gamma: &Warping) -> Result<PostureSequence> {
        let postures = gamma
            .values()
            .iter()
            .map(|&s| self.sample_at(s))
            .collect::<Result<Vec<_>>>()?;
        PostureSequence::new(gamma.grid().to_vec(), postures, self.duration)
    }

    /// Re-evaluates the sequence on another grid by geodesic interpolation.
    pub fn regrid(&self, grid: &[f64]) -> Result<PostureSequence> {
        check_grid(grid)?;
        let postures = grid.iter().map(|&t| self.sample_at(t)).collect::<Result<Vec<_>>>()?;
        PostureSequence::new(grid.to_vec(), postures, self.duration)
    }
}

/// Monotone reparametrization of `[0, 1]`, sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Warping {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Warping {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values[0] != 0.0 || values[values.len() - 1] != 1.0 {
            return Err(Error::InvalidArgument("a warping must fix 0 and 1".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("a warping must be strictly increasing".into()));
        }
        Ok(Warping { grid, values })
    }

    pub fn identity(grid: Vec<f64>) -> Result<Self> {
        let values = grid.clone();
        Warping::new(grid, values)
    }

    /// Samples a monotone function `f` with `f(0) = 0`, `f(1) = 1` on `grid`.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid.len();
        let values = grid
            .iter()
            .enumerate()
            .map(|(l, &t)| match l {
                0 => 0.0,
                l if l == n - 1 => 1.0,
                _ => f(t),
            })
            .collect();
        Warping::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        interp(&self.grid, &self.values, t.clamp(0.0, 1.0))
    }

    /// Piecewise-linear inverse evaluated on `grid`.
    pub fn inverse_on(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|&s| interp(&self.values, &self.grid, s.clamp(0.0, 1.0)))
            .collect()
    }

    /// Largest absolute deviation from `other` on this grid.
    pub fn sup_distance(&self, other: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| (v - other(t)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn seq() -> PostureSequence {
        let ps = [Vector3::x(), Vector3::y(), Vector3::new(0.0, 1.0, 1.0)]
            .iter()
            .map(|v| Posture::from_vectors(&[*v]).unwrap())
            .collect();
        PostureSequence::uniform(ps, 1.0).unwrap()
    }

    #[test]
    fn sample_at_grid_points_is_exact() {
        let s = seq();
        for (t, p) in s.grid().iter().zip(s.postures()) {
            assert_eq!(&s.sample_at(*t).unwrap(), p);
        }
        let mid = s.sample_at(0.25).unwrap();
        let h = 0.5f64.sqrt();
        assert!((mid.parts()[0].coords() - Vector3::new(h, h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bad_grids_rejected() {
        let p = Posture::from_vectors(&[Vector3::x()]).unwrap();
        assert!(PostureSequence::new(vec![0.0, 0.5], vec![p.clone(), p.clone()], 1.0).is_err());
        assert!(PostureSequence::new(vec![0.0, 1.0], vec![p.clone()], 1.0).is_err());
        assert!(PostureSequence::new(vec![0.0, 1.0], vec![p.clone(), p], 0.0).is_err());
    }

    #[test]
    fn warping_validation_and_inverse() {
        let g = uniform_grid(11);
        assert!(Warping::new(g.clone(), vec![0.0; 11]).is_err());
        let w = Warping::from_fn(g.clone(), |t| t * t).unwrap();
        let inv = w.inverse_on(&g);
        for (t, s) in g.iter().zip(&inv) {
            assert!((w.eval(*s) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_linear_is_exact() {
        let g = uniform_grid(7);
        let v: Vec<f64> = g.iter().map(|t| 3.0 * t + 1.0).collect();
        for d in gradient(&g, &v) {
            assert!((d - 3.0).abs() < 1e-12);
        }
    }
}
