//! Run parameters: built-in defaults, then an optional TOML file, then flags.

use std::path::Path;

use clap::Args;
use motionlab::motion::{AlignOptions, KernelOptions, SlopeSet};
use motionlab::sir::Reconstruction;
use motionlab::workflows::BottleneckMode;
use serde::Deserialize;

use crate::CliError;

/// Environment variable supplying the seed when neither a flag nor the config file does.
pub const SEED_ENV: &str = "MOTIONLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BottleneckChoice {
    Slowdown,
    Literal,
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mle,
    Map,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionChoice {
    Covariance,
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SlopeChoice {
    /// Every coprime step with entries up to `max_slope`.
    Coprime,
    /// The five steps (1,1), (1,2), (2,1), (1,3), (3,1).
    Standard,
}

/// Every tunable parameter. Flags and config keys share names (kebab-case
/// flags, snake_case keys).
#[derive(Clone, Debug, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Resample every sequence to this many uniform points by kernel smoothing.
    #[arg(long, global = true)]
    pub resample: Option<usize>,
    /// Kernel bandwidth for resampling, in normalized time.
    #[arg(long, global = true)]
    pub bandwidth: Option<f64>,
    /// Alignment lattice size.
    #[arg(long, global = true)]
    pub dp_grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub slopes: Option<SlopeChoice>,
    /// Largest step entry of the coprime slope set.
    #[arg(long, global = true)]
    pub max_slope: Option<usize>,
    /// Number of time steps of a fitted motion distribution.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<FitMethod>,
    /// Prior variance of the step-to-step mean coupling.
    #[arg(long, global = true)]
    pub lambda0_sq: Option<f64>,
    /// Bottleneck window half-width.
    #[arg(long, global = true)]
    pub window: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub bottleneck_mode: Option<BottleneckChoice>,
    /// Half-width of the feature window around the bottleneck.
    #[arg(long, global = true)]
    pub practice_window: Option<f64>,
    /// Centre of the feature window; defaults to the detected bottleneck.
    #[arg(long, global = true)]
    pub t_star: Option<f64>,
    /// Kernel bandwidth on the rate axis for the inverse regression.
    #[arg(long, global = true)]
    pub sir_bandwidth: Option<f64>,
    /// Number of projection directions.
    #[arg(long, global = true)]
    pub directions: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub reconstruction: Option<ReconstructionChoice>,
    #[arg(long, global = true)]
    pub gp_amplitude_sq: Option<f64>,
    #[arg(long, global = true)]
    pub gp_lengthscale: Option<f64>,
    #[arg(long, global = true)]
    pub gp_noise: Option<f64>,
    /// Pick GP hyperparameters by marginal likelihood over a fixed grid.
    #[arg(long, global = true)]
    pub gp_select: Option<bool>,
    /// Band half-width in posterior standard deviations.
    #[arg(long, global = true)]
    pub band_k: Option<f64>,
    #[arg(long, global = true)]
    pub band_points: Option<usize>,
    /// Step of the motion distribution whose variation is reported.
    #[arg(long, global = true)]
    pub step: Option<usize>,
    #[arg(long, global = true)]
    pub n_eigs: Option<usize>,
    /// Number of multipliers spread over [-1, 1].
    #[arg(long, global = true)]
    pub s_points: Option<usize>,
    /// Fraction of each class used for training.
    #[arg(long, global = true)]
    pub train_frac: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Params {
    /// Fields set in `over` replace those in `self`.
    fn overlay(self, over: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            resample,
            bandwidth,
            dp_grid,
            slopes,
            max_slope,
            steps,
            method,
            lambda0_sq,
            window,
            bottleneck_mode,
            practice_window,
            t_star,
            sir_bandwidth,
            directions,
            reconstruction,
            gp_amplitude_sq,
            gp_lengthscale,
            gp_noise,
            gp_select,
            band_k,
            band_points,
            step,
            n_eigs,
            s_points,
            train_frac,
            seed
        )
    }
}

/// Fully resolved parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub resample: Option<usize>,
    pub bandwidth: f64,
    pub dp_grid: usize,
    pub slopes: SlopeChoice,
    pub max_slope: usize,
    pub steps: usize,
    pub method: FitMethod,
    pub lambda0_sq: f64,
    pub window: f64,
    pub bottleneck_mode: BottleneckChoice,
    pub practice_window: f64,
    pub t_star: Option<f64>,
    pub sir_bandwidth: Option<f64>,
    pub directions: Option<usize>,
    pub reconstruction: Reconstruction,
    pub gp_amplitude_sq: f64,
    pub gp_lengthscale: f64,
    pub gp_noise: f64,
    pub gp_select: bool,
    pub band_k: f64,
    pub band_points: usize,
    pub step: Option<usize>,
    pub n_eigs: usize,
    pub s_points: usize,
    pub train_frac: f64,
    /// Seed from a flag or the config file.
    pub seed: Option<u64>,
    /// Seed from the environment, used when nothing more specific is given.
    pub env_seed: Option<u64>,
}

impl RunConfig {
    pub fn load(file: Option<&Path>, flags: Params) -> Result<RunConfig, CliError> {
        let from_file = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<Params>(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {}", p.display(), e.message())))?
            }
            None => Params::default(),
        };
        let p = from_file.overlay(flags);
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?,
            ),
            Err(_) => None,
        };
        let k = KernelOptions::default();
        let cfg = RunConfig {
            resample: p.resample,
            bandwidth: p.bandwidth.unwrap_or(k.bandwidth),
            dp_grid: p.dp_grid.unwrap_or(AlignOptions::default().dp_grid),
            slopes: p.slopes.unwrap_or(SlopeChoice::Coprime),
            max_slope: p.max_slope.unwrap_or(6),
            steps: p.steps.unwrap_or(50),
            method: p.method.unwrap_or(FitMethod::Map),
            lambda0_sq: p.lambda0_sq.unwrap_or(1.0),
            window: p.window.unwrap_or(motionlab::workflows::DEFAULT_WINDOW),
            bottleneck_mode: p.bottleneck_mode.unwrap_or(BottleneckChoice::Slowdown),
            practice_window: p.practice_window.unwrap_or(0.1),
            t_star: p.t_star,
            sir_bandwidth: p.sir_bandwidth,
            directions: p.directions,
            reconstruction: match p.reconstruction.unwrap_or(ReconstructionChoice::Covariance) {
                ReconstructionChoice::Covariance => Reconstruction::Covariance,
                ReconstructionChoice::Euclidean => Reconstruction::Euclidean,
            },
            gp_amplitude_sq: p.gp_amplitude_sq.unwrap_or(0.1),
            gp_lengthscale: p.gp_lengthscale.unwrap_or(0.1),
            gp_noise: p.gp_noise.unwrap_or(motionlab::gp::DEFAULT_NOISE_VAR),
            gp_select: p.gp_select.unwrap_or(false),
            band_k: p.band_k.unwrap_or(motionlab::gp::DEFAULT_BAND_K),
            band_points: p.band_points.unwrap_or(101),
            step: p.step,
            n_eigs: p.n_eigs.unwrap_or(2),
            s_points: p.s_points.unwrap_or(5),
            train_frac: p.train_frac.unwrap_or(0.8),
            seed: p.seed,
            env_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if let Some(l) = self.resample {
            if l < 2 {
                return bad(format!("resample must be at least 2, got {l}"));
            }
        }
        if !pos(self.bandwidth) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if self.dp_grid < motionlab::motion::MIN_DP_GRID {
            return bad(format!(
                "dp_grid must be at least {}, got {}",
                motionlab::motion::MIN_DP_GRID,
                self.dp_grid
            ));
        }
        if self.max_slope == 0 {
            return bad("max_slope must be at least 1".into());
        }
        if self.steps < 2 {
            return bad(format!("steps must be at least 2, got {}", self.steps));
        }
        if !pos(self.lambda0_sq) {
            return bad(format!("lambda0_sq must be positive, got {}", self.lambda0_sq));
        }
        if !(pos(self.window) && self.window <= 0.5) {
            return bad(format!("window must lie in (0, 0.5], got {}", self.window));
        }
        if !(pos(self.practice_window) && self.practice_window <= 0.5) {
            return bad(format!(
                "practice_window must lie in (0, 0.5], got {}",
                self.practice_window
            ));
        }
        if let Some(t) = self.t_star {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("t_star must lie in [0, 1], got {t}"));
            }
        }
        if let Some(h) = self.sir_bandwidth {
            if !pos(h) {
                return bad(format!("sir_bandwidth must be positive, got {h}"));
            }
        }
        if self.directions == Some(0) {
            return bad("directions must be at least 1".into());
        }
        for (name, v) in [
            ("gp_amplitude_sq", self.gp_amplitude_sq),
            ("gp_lengthscale", self.gp_lengthscale),
            ("band_k", self.band_k),
        ] {
            if !pos(v) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gp_noise >= 0.0 && self.gp_noise.is_finite()) {
            return bad(format!("gp_noise must be non-negative, got {}", self.gp_noise));
        }
        if self.band_points < 2 {
            return bad(format!("band_points must be at least 2, got {}", self.band_points));
        }
        if self.n_eigs == 0 || self.s_points == 0 {
            return bad("n_eigs and s_points must be at least 1".into());
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!("train_frac must lie in (0, 1), got {}", self.train_frac));
        }
        Ok(())
    }

    pub fn align(&self) -> AlignOptions {
        let slopes = match self.slopes {
            SlopeChoice::Coprime => SlopeSet::coprime(self.max_slope).expect("validated bound"),
            SlopeChoice::Standard => SlopeSet::standard(),
        };
        AlignOptions {
            dp_grid: self.dp_grid,
            slopes,
        }
    }

    pub fn kernel(&self) -> KernelOptions {
        KernelOptions {
            bandwidth: self.bandwidth,
            ..KernelOptions::default()
        }
    }

    pub fn bottleneck(&self) -> Option<BottleneckMode> {
        match self.bottleneck_mode {
            BottleneckChoice::Slowdown => Some(BottleneckMode::Slowdown),
            BottleneckChoice::Literal => Some(BottleneckMode::Literal),
            BottleneckChoice::Printed => None,
        }
    }
}
