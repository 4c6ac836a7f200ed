//! Seeded synthetic skeleton datasets: per-class template paths, warped and
//! perturbed instances, reconstructed with random body sizes and positions.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{uniform_grid, PostureSequence};
use crate::posture::Posture;
use crate::skeleton::{posture_to_skeleton, Rig, SkeletonSequence};
use crate::stats::WrappedSampler;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub label: String,
    /// Waypoints of the template path.
    #[serde(default = "default_waypoints")]
    pub waypoints: usize,
    /// Largest per-part angle (radians) of a waypoint away from the rest posture.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_waypoints() -> usize {
    4
}

fn default_amplitude() -> f64 {
    0.8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default = "default_rig")]
    pub rig: String,
    pub classes: Vec<ClassSpec>,
    pub per_class: usize,
    /// Frames per recorded sequence.
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Nominal duration in seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Relative spread of instance durations around the nominal one.
    #[serde(default = "default_duration_jitter")]
    pub duration_jitter: f64,
    /// Warp slopes stay within `[1 − s, 1 + s]`; must be below 1.
    pub warp_strength: f64,
    /// Isotropic variance of the wrapped-normal waypoint perturbation.
    pub noise_k_scale: f64,
    /// Relative spread of per-instance bone lengths.
    #[serde(default = "default_bone_jitter")]
    pub bone_jitter: f64,
    /// Half-width (metres) of the per-instance root offset.
    #[serde(default = "default_translation")]
    pub translation: f64,
    pub seed: u64,
}

fn default_rig() -> String {
    "upper_body9".into()
}

fn default_frames() -> usize {
    60
}

fn default_duration() -> f64 {
    2.0
}

fn default_duration_jitter() -> f64 {
    0.1
}

fn default_bone_jitter() -> f64 {
    0.1
}

fn default_translation() -> f64 {
    0.5
}

impl DatasetSpec {
    /// `k` classes named `op1 … opk` with default shape parameters.
    pub fn with_classes(k: usize, per_class: usize, warp_strength: f64, noise_k_scale: f64, seed: u64) -> Self {
        DatasetSpec {
            rig: default_rig(),
            classes: (1..=k)
                .map(|i| ClassSpec {
                    label: format!("op{i}"),
                    waypoints: default_waypoints(),
                    amplitude: default_amplitude(),
                })
                .collect(),
            per_class,
            frames: default_frames(),
            duration: default_duration(),
            duration_jitter: default_duration_jitter(),
            warp_strength,
            noise_k_scale,
            bone_jitter: default_bone_jitter(),
            translation: default_translation(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.classes.is_empty() || self.per_class == 0 {
            return bad("a dataset needs at least one class and one instance per class".into());
        }
        if self.frames < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frames));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(0.0..1.0).contains(&self.duration_jitter) || !(0.0..1.0).contains(&self.bone_jitter) {
            return bad("duration and bone jitter must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.warp_strength) {
            return bad(format!("warp strength must lie in [0, 1), got {}", self.warp_strength));
        }
        if !(self.noise_k_scale >= 0.0 && self.noise_k_scale.is_finite()) {
            return bad(format!("noise scale must be ≥ 0, got {}", self.noise_k_scale));
        }
        if !(self.translation >= 0.0 && self.translation.is_finite()) {
            return bad(format!("translation must be ≥ 0, got {}", self.translation));
        }
        for c in &self.classes {
            if c.waypoints < 2 {
                return bad(format!("class {} needs at least 2 waypoints", c.label));
            }
            if !(c.amplitude > 0.0 && c.amplitude < 1.5) {
                return bad(format!("class {} amplitude must lie in (0, 1.5)", c.label));
            }
        }
        Rig::by_name(&self.rig)?;
        Ok(())
    }
}

/// Independent stream for `(seed, a, b)`.
fn rng_for(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Point on the piecewise geodesic through `points` at uniform knots.
fn along(points: &[Posture], s: f64) -> Result<Posture> {
    let segs = (points.len() - 1) as f64;
    let x = (s.clamp(0.0, 1.0) * segs).min(segs);
    let k = (x.floor() as usize).min(points.len() - 2);
    points[k].geodesic(&points[k + 1], x - k as f64)
}

fn class_waypoints(spec: &DatasetSpec, rig: &Rig, class: usize) -> Result<Vec<Posture>> {
    let c = &spec.classes[class];
    let mut rng = rng_for(spec.seed, 1, class as u64);
    let chart = rig.rest.chart();
    (0..c.waypoints)
        .map(|_| {
            let mut v = DVector::zeros(rig.rest.dim());
            for p in 0..rig.n_parts() {
                let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let len = c.amplitude * rng.random_range(0.3f64..1.0).sqrt();
                v[2 * p] = len * dir.cos();
                v[2 * p + 1] = len * dir.sin();
            }
            chart.point(&v)
        })
        .collect()
}

/// Noise-free template of each class on `frames` uniform points.
pub fn class_templates(spec: &DatasetSpec) -> Result<Vec<PostureSequence>> {
    spec.validate()?;
    let rig = Rig::by_name(&spec.rig)?;
    (0..spec.classes.len())
        .map(|c| {
            let w = class_waypoints(spec, &rig, c)?;
            let ps = uniform_grid(spec.frames)
                .iter()
                .map(|&t| along(&w, t))
                .collect::<Result<Vec<_>>>()?;
            PostureSequence::uniform(ps, spec.duration)
        })
        .collect()
}

/// Smooth increasing warp `t + s Σ a_k sin(kπt)/(kπ)` with `Σ|a_k| = 1`.
fn random_warp(strength: f64, rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let mut coef: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let l1: f64 = coef.iter().map(|c| c.abs()).sum::<f64>().max(1e-12);
    coef.iter_mut().for_each(|c| *c /= l1);
    move |t: f64| {
        let pi = std::f64::consts::PI;
        let s: f64 = coef
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let w = (k as f64 + 1.0) * pi;
                a * (w * t).sin() / w
            })
            .sum();
        (t + strength * s).clamp(0.0, 1.0)
    }
}

fn instance(spec: &DatasetSpec, rig: &Rig, waypoints: &[Posture], class: usize, i: usize) -> Result<SkeletonSequence> {
    let mut rng = rng_for(spec.seed, 2 + class as u64, i as u64);
    let d = rig.rest.dim();
    let noisy: Vec<Posture> = if spec.noise_k_scale > 0.0 {
        let k = DMatrix::identity(d, d) * spec.noise_k_scale;
        waypoints
            .iter()
            .map(|w| WrappedSampler::new(w, &k)?.sample(&mut rng))
            .collect::<Result<_>>()?
    } else {
        waypoints.to_vec()
    };
    let warp = random_warp(spec.warp_strength, &mut rng);
    let duration = spec.duration * (1.0 + spec.duration_jitter * rng.random_range(-1.0..1.0));
    let lengths: Vec<f64> = rig
        .bone_lengths
        .iter()
        .map(|l| l * (1.0 + spec.bone_jitter * rng.random_range(-1.0..1.0)))
        .collect();
    let tr = spec.translation;
    let root = if tr > 0.0 {
        Vector3::new(
            rng.random_range(-tr..tr),
            rng.random_range(-tr..tr),
            rng.random_range(-tr..tr),
        )
    } else {
        Vector3::zeros()
    };
    let frames = uniform_grid(spec.frames)
        .iter()
        .map(|&t| {
            let p = along(&noisy, warp(t))?;
            posture_to_skeleton(&p, &rig.hierarchy, &lengths, root, t * duration)
        })
        .collect::<Result<Vec<_>>>()?;
    SkeletonSequence::new(rig.hierarchy.clone(), frames, Some(spec.classes[class].label.clone()))
}

/// Every instance, class by class; identical for identical specs.
pub fn synthesize_dataset(spec: &DatasetSpec) -> Result<Vec<SkeletonSequence>> {
    spec.validate()?;
    let rig = Rig::by_name(&spec.rig)?;
    let waypoints = (0..spec.classes.len())
        .map(|c| class_waypoints(spec, &rig, c))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..spec.classes.len())
        .flat_map(|c| (0..spec.per_class).map(move |i| (c, i)))
        .collect();
    jobs.par_iter()
        .map(|&(c, i)| instance(spec, &rig, &waypoints[c], c, i))
        .collect()
}
