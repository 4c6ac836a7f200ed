#![allow(dead_code)]

use motionlab::motion::uniform_grid;
use motionlab::{Posture, PostureSequence};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth random curve on `parts` spheres: each part wanders around a random
/// base direction near the north pole.
#[derive(Clone, Debug)]
pub struct Curve {
    base: Vec<Vector3<f64>>,
    amp: Vec<[Vector3<f64>; 3]>,
    phase: Vec<[f64; 3]>,
}

impl Curve {
    pub fn random(parts: usize, seed: u64) -> Curve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = |s: f64| {
            Vector3::new(
                rng.random_range(-s..s),
                rng.random_range(-s..s),
                rng.random_range(-s..s),
            )
        };
        let base = (0..parts).map(|_| v(0.4) + Vector3::z()).collect();
        let amp = (0..parts).map(|_| [v(0.8), v(0.4), v(0.2)]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let phase = (0..parts)
            .map(|_| {
                [
                    rng.random_range(0.0..6.3),
                    rng.random_range(0.0..6.3),
                    rng.random_range(0.0..6.3),
                ]
            })
            .collect();
        Curve { base, amp, phase }
    }

    pub fn at(&self, t: f64) -> Posture {
        let vs: Vec<Vector3<f64>> = self
            .base
            .iter()
            .zip(&self.amp)
            .zip(&self.phase)
            .map(|((b, a), p)| {
                let mut v = *b;
                for k in 0..3 {
                    v += a[k] * ((k as f64 + 1.0) * 2.0 * t + p[k]).sin();
                }
                v
            })
            .collect();
        Posture::from_vectors(&vs).unwrap()
    }

    pub fn sample(&self, l: usize, warp: impl Fn(f64) -> f64) -> PostureSequence {
        let ps = uniform_grid(l).iter().map(|&t| self.at(warp(t))).collect();
        PostureSequence::uniform(ps, 1.0).unwrap()
    }
}

/// Smooth monotone warp `t + s Σ a_k sin(kπt)/(kπ)` with slope in `[1 − s, 1 + s]`.
#[derive(Clone, Debug)]
pub struct SineWarp {
    coef: Vec<f64>,
    strength: f64,
}

impl SineWarp {
    pub fn random(strength: f64, seed: u64) -> SineWarp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l1: f64 = coef.iter().map(|c: &f64| c.abs()).sum();
        coef.iter_mut().for_each(|c| *c /= l1);
        SineWarp { coef, strength }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let s: f64 = self
            .coef
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let w = (k as f64 + 1.0) * pi;
                a * (w * t).sin() / w
            })
            .sum();
        (t + self.strength * s).clamp(0.0, 1.0)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `tpl ∘ γ⁻¹` on `l` uniform points, where `γ(t) = ∫₀ᵗρ / ∫₀¹ρ` is the
/// clock of a performer spending physical time `ρ(t)·U` per unit of
/// reference time. The duration is `U ∫₀¹ ρ`.
pub fn retime(tpl: &PostureSequence, rho: impl Fn(f64) -> f64, l: usize) -> PostureSequence {
    let n = 4000;
    let mut cum = vec![0.0; n + 1];
    for i in 1..=n {
        let (a, b) = ((i - 1) as f64 / n as f64, i as f64 / n as f64);
        cum[i] = cum[i - 1] + 0.5 * (b - a) * (rho(a) + rho(b));
    }
    let total = cum[n];
    let gamma = |t: f64| {
        let x = t * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        (cum[k] + (x - k as f64) * (cum[k + 1] - cum[k])) / total
    };
    let inverse = |s: f64| {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if gamma(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let ps = uniform_grid(l)
        .iter()
        .map(|&s| tpl.sample_at(inverse(s)).unwrap())
        .collect();
    PostureSequence::uniform(ps, tpl.duration() * total).unwrap()
}
