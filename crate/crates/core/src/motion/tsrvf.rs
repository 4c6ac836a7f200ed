//! Transported square-root vector fields.

use nalgebra::{DVector, Vector3};

use super::{check_grid, trapezoid, PostureSequence};
use crate::error::{Error, Result};
use crate::posture::{Chart, Posture};

/// Velocities with Frobenius norm below this map to an exactly zero field.
pub const ZERO_SPEED: f64 = 1e-10;

/// Sequence velocity transported to a reference posture and scaled by the
/// inverse square root of its speed, in the reference tangent basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Tsrvf {
    pub reference: Posture,
    pub grid: Vec<f64>,
    pub values: Vec<DVector<f64>>,
}

impl Tsrvf {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Linear interpolation at `t`, written into `out`.
    pub(crate) fn eval_into(&self, t: f64, out: &mut DVector<f64>) {
        let k = super::bracket(&self.grid, t);
        let w = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        out.copy_from(&self.values[k]);
        *out *= 1.0 - w;
        out.axpy(w, &self.values[k + 1], 1.0);
    }

    /// Values linearly interpolated on another grid.
    pub fn regrid(&self, grid: &[f64]) -> Result<Tsrvf> {
        check_grid(grid)?;
        let values = grid
            .iter()
            .map(|&t| {
                let mut v = DVector::zeros(self.dim());
                self.eval_into(t, &mut v);
                v
            })
            .collect();
        Ok(Tsrvf {
            reference: self.reference.clone(),
            grid: grid.to_vec(),
            values,
        })
    }
}

/// Finite-difference velocity of the sequence at every grid point.
fn velocities(seq: &PostureSequence) -> Result<Vec<Vec<Vector3<f64>>>> {
    let g = seq.grid();
    let ps = seq.postures();
    let n = g.len();
    (0..n)
        .map(|l| {
            let here = &ps[l];
            let fwd = if l + 1 < n {
                Some(here.log(&ps[l + 1]).map_err(|e| e.at_index(l + 1))?)
            } else {
                None
            };
            let bwd = if l > 0 {
                Some(here.log(&ps[l - 1]).map_err(|e| e.at_index(l - 1))?)
            } else {
                None
            };
            Ok(match (fwd, bwd) {
                (Some(f), Some(b)) => {
                    let dt = g[l + 1] - g[l - 1];
                    f.iter().zip(&b).map(|(f, b)| (f - b) / dt).collect()
                }
                (Some(f), None) => f.iter().map(|f| f / (g[1] - g[0])).collect(),
                (None, Some(b)) => b.iter().map(|b| -b / (g[l] - g[l - 1])).collect(),
                (None, None) => unreachable!("sequence has at least two points"),
            })
        })
        .collect()
}

pub fn compute_tsrvf(seq: &PostureSequence, reference: &Posture) -> Result<Tsrvf> {
    if reference.n_parts() != seq.n_parts() {
        return Err(Error::DimensionMismatch {
            expected: seq.n_parts(),
            found: reference.n_parts(),
        });
    }
    let chart = Chart::new(reference.clone());
    let vel = velocities(seq)?;
    let values = vel
        .iter()
        .zip(seq.postures())
        .enumerate()
        .map(|(l, (v, p))| {
            let speed = v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
            if speed < ZERO_SPEED {
                return Ok(DVector::zeros(chart.dim()));
            }
            let moved = p.transport(reference, v).map_err(|e| e.at_index(l))?;
            Ok(chart.field_coords(&moved)? / speed.sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Tsrvf {
        reference: reference.clone(),
        grid: seq.grid().to_vec(),
        values,
    })
}

/// `sqrt(∫ ‖h1(t) − h2(t)‖² dt)` by the trapezoid rule.
pub fn tsrvf_distance(h1: &Tsrvf, h2: &Tsrvf) -> Result<f64> {
    if h1.grid != h2.grid {
        return Err(Error::GridMismatch("TSRVFs are sampled on different grids".into()));
    }
    if h1.reference != h2.reference {
        return Err(Error::GridMismatch("TSRVFs use different reference postures".into()));
    }
    let sq: Vec<f64> = h1
        .values
        .iter()
        .zip(&h2.values)
        .map(|(a, b)| (a - b).norm_squared())
        .collect();
    Ok(trapezoid(&h1.grid, &sq).max(0.0).sqrt())
}
