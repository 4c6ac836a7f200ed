//! Locally weighted Karcher means of postures.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::PostureSequence;
use crate::error::{Error, Result};
use crate::posture::Posture;

/// Weights below this are treated as zero when checking for an empty window.
const MIN_WEIGHT: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Unnormalized weight at scaled offset `u = (t − t*) / h`.
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp(),
            Kernel::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            kernel: Kernel::Gaussian,
            bandwidth: 0.02,
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

/// Result of a weighted mean iteration; `converged` is false after `max_iter`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelEstimate {
    pub posture: Posture,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn frobenius(field: &[Vector3<f64>]) -> f64 {
    field.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
}

/// Weighted Karcher mean starting at `data[start]`.
fn weighted_mean(
    data: &[&Posture],
    weights: &[f64],
    start: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KernelEstimate> {
    let total: f64 = weights.iter().sum();
    let mut y = data[start].clone();
    let n = y.n_parts();
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        let mut mean = vec![Vector3::zeros(); n];
        for (s, (p, &w)) in data.iter().zip(weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let f = y.log(p).map_err(|e| e.at_index(s))?;
            for (m, v) in mean.iter_mut().zip(&f) {
                *m += v * (w / total);
            }
        }
        residual = frobenius(&mean);
        if residual < tol {
            return Ok(KernelEstimate {
                posture: y,
                iterations: it,
                residual,
                converged: true,
            });
        }
        y = y.exp_unchecked(&mean);
    }
    Ok(KernelEstimate {
        posture: y,
        iterations: max_iter,
        residual,
        converged: false,
    })
}

/// Kernel-weighted Karcher mean of `(u, posture)` data around `u_star`.
pub fn local_kernel_posture(data: &[(f64, Posture)], u_star: f64, opts: &KernelOptions) -> Result<KernelEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyWindow { at: u_star });
    }
    if !(opts.bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {}",
            opts.bandwidth
        )));
    }
    let weights: Vec<f64> = data
        .iter()
        .map(|(u, _)| opts.kernel.weight((u - u_star) / opts.bandwidth))
        .collect();
    if weights.iter().all(|&w| w < MIN_WEIGHT) {
        return Err(Error::EmptyWindow { at: u_star });
    }
    let start = data
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - u_star).abs().total_cmp(&(b.1 .0 - u_star).abs()))
        .map(|(i, _)| i)
        .expect("non-empty data");
    let postures: Vec<&Posture> = data.iter().map(|(_, p)| p).collect();
    weighted_mean(&postures, &weights, start, opts.max_iter, opts.tol)
}

/// Unweighted Karcher mean, initialized at the first posture.
pub fn karcher_mean(postures: &[Posture], max_iter: usize, tol: f64) -> Result<KernelEstimate> {
    if postures.is_empty() {
        return Err(Error::InvalidArgument("mean of an empty set".into()));
    }
    let refs: Vec<&Posture> = postures.iter().collect();
    weighted_mean(&refs, &vec![1.0; postures.len()], 0, max_iter, tol)
}

/// Local kernel estimates on the uniform grid of `l` points.
pub fn resample_sequence(seq: &PostureSequence, l: usize, opts: &KernelOptions) -> Result<PostureSequence> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 output points, got {l}"
        )));
    }
    let data: Vec<(f64, Posture)> = seq.grid().iter().cloned().zip(seq.postures().iter().cloned()).collect();
    let grid = super::uniform_grid(l);
    let postures = grid
        .iter()
        .map(|&t| local_kernel_posture(&data, t, opts).map(|e| e.posture))
        .collect::<Result<Vec<_>>>()?;
    PostureSequence::new(grid, postures, seq.duration())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: Vector3<f64>) -> Posture {
        Posture::from_vectors(&[v]).unwrap()
    }

    #[test]
    fn single_datum() {
        let p = Posture::from_vectors(&[Vector3::new(0.2, 0.3, 1.0), Vector3::x()]).unwrap();
        let e = local_kernel_posture(&[(0.4, p.clone())], 0.5, &KernelOptions::default()).unwrap();
        assert_eq!(e.posture, p);
        assert!(e.converged);
    }

    #[test]
    fn midpoint_of_two() {
        let data = vec![(0.0, one(Vector3::x())), (1.0, one(Vector3::y()))];
        let opts = KernelOptions {
            bandwidth: 10.0,
            ..Default::default()
        };
        let e = local_kernel_posture(&data, 0.5, &opts).unwrap();
        let h = 0.5f64.sqrt();
        assert!((e.posture.parts()[0].coords() - Vector3::new(h, h, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_window() {
        let data = vec![(0.0, one(Vector3::x()))];
        let opts = KernelOptions {
            kernel: Kernel::Epanechnikov,
            bandwidth: 0.1,
            ..Default::default()
        };
        assert!(matches!(
            local_kernel_posture(&data, 0.5, &opts),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn tiny_bandwidth_keeps_uniform_sequence() {
        let ps: Vec<Posture> = (0..11).map(|i| one(Vector3::new(1.0, 0.1 * i as f64, 0.3))).collect();
        let s = PostureSequence::uniform(ps, 2.0).unwrap();
        let opts = KernelOptions {
            bandwidth: 1e-4,
            ..Default::default()
        };
        let r = resample_sequence(&s, 11, &opts).unwrap();
        for (a, b) in r.postures().iter().zip(s.postures()) {
            assert!(a.distance(b).unwrap() < 1e-9);
        }
        assert_eq!(r.duration(), 2.0);
    }

    #[test]
    fn constant_sequence_stays_constant() {
        let p = one(Vector3::new(0.3, -0.2, 0.9));
        let s = PostureSequence::new(vec![0.0, 0.13, 0.5, 1.0], vec![p.clone(); 4], 1.0).unwrap();
        let r = resample_sequence(&s, 9, &KernelOptions::default()).unwrap();
        assert!(r.postures().iter().all(|q| q.distance(&p).unwrap() < 1e-12));
    }
}
