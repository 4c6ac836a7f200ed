//! Rate analysis against a reference, bottleneck search, and re-timing of
//! the reference to a cohort's pace.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{
    align_tsrvf, compute_tsrvf, rate_from_warping, scaled_warping, AlignOptions, PostureSequence, RateFunction, Warping,
};
use crate::posture::Posture;

/// Alignment of one sequence to the reference and the rate derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub warping: Warping,
    pub delta: Vec<f64>,
    pub rate: RateFunction,
    pub distance: f64,
}

pub fn rate_analysis(
    sequences: &[PostureSequence],
    reference: &PostureSequence,
    y_r: &Posture,
    opts: &AlignOptions,
) -> Result<Vec<RateRecord>> {
    let h_ref = compute_tsrvf(reference, y_r)?;
    sequences
        .par_iter()
        .map(|s| {
            let a = align_tsrvf(&compute_tsrvf(s, y_r)?, &h_ref, opts)?;
            let delta = scaled_warping(&a.warping, s.duration(), reference.duration());
            let rate = rate_from_warping(&a.warping, s.duration(), reference.duration())?;
            Ok(RateRecord {
                warping: a.warping,
                delta,
                rate,
                distance: a.distance,
            })
        })
        .collect()
}

/// Sequence re-timed by its alignment, `t ↦ α(γ(t))` on the warping grid.
pub fn aligned_sequence(seq: &PostureSequence, record: &RateRecord) -> Result<PostureSequence> {
    seq.compose(&record.warping)
}

/// Per-time score summed inside a window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BottleneckMode {
    /// `Σ min{0, −r}`: time spent beyond the reference pace.
    #[default]
    Slowdown,
    /// `Σ min{0, r}`.
    Literal,
}

/// Default half-width of the bottleneck window, in normalized time.
pub const DEFAULT_WINDOW: f64 = 0.020;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub t_star: f64,
    pub window: f64,
    pub score: f64,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
}

impl BottleneckReport {
    /// CSV with columns `t,score`.
    pub fn scores_csv(&self) -> String {
        let mut s = String::from("t,score\n");
        for (t, v) in self.grid.iter().zip(&self.scores) {
            let _ = writeln!(s, "{t:.16e},{v:.16e}");
        }
        s
    }
}

/// Grid offsets this close to the window half-width count as on its boundary.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Minimizes `Σ_{|t_l − t| < Δ} Σ_m f(x_m(t_l))` over the grid, earliest on ties.
pub fn window_argmin(
    grid: &[f64],
    curves: &[Vec<f64>],
    delta: f64,
    f: impl Fn(f64) -> f64,
) -> Result<BottleneckReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {delta}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if let Some(c) = curves.iter().find(|c| c.len() != grid.len()) {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: c.len(),
        });
    }
    let per_point: Vec<f64> = (0..grid.len()).map(|l| curves.iter().map(|c| f(c[l])).sum()).collect();
    let scores: Vec<f64> = grid
        .iter()
        .map(|&t| {
            grid.iter()
                .zip(&per_point)
                .filter(|(&tl, _)| (tl - t).abs() < delta - BOUNDARY_SLACK)
                .map(|(_, v)| v)
                .sum()
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(BottleneckReport {
        t_star: grid[best],
        window: delta,
        score: scores[best],
        grid: grid.to_vec(),
        scores,
    })
}

pub fn find_bottleneck(rates: &[RateFunction], delta: f64, mode: BottleneckMode) -> Result<BottleneckReport> {
    let first = rates
        .first()
        .ok_or_else(|| Error::InvalidArgument("no rate functions".into()))?;
    if rates.iter().any(|r| r.grid != first.grid) {
        return Err(Error::GridMismatch("rate functions use different grids".into()));
    }
    let curves: Vec<Vec<f64>> = rates.iter().map(|r| r.values.clone()).collect();
    match mode {
        BottleneckMode::Slowdown => window_argmin(&first.grid, &curves, delta, |r| (-r).min(0.0)),
        BottleneckMode::Literal => window_argmin(&first.grid, &curves, delta, |r| r.min(0.0)),
    }
}

/// The window score applied to the warping values themselves. They lie in
/// `[0, 1]`, so every score is zero and the first grid point wins.
pub fn find_bottleneck_printed(warpings: &[Warping], delta: f64) -> Result<BottleneckReport> {
    let first = warpings
        .first()
        .ok_or_else(|| Error::InvalidArgument("no warpings".into()))?;
    if warpings.iter().any(|w| w.grid() != first.grid()) {
        return Err(Error::GridMismatch("warpings use different grids".into()));
    }
    let curves: Vec<Vec<f64>> = warpings.iter().map(|w| w.values().to_vec()).collect();
    window_argmin(first.grid(), &curves, delta, |g| g.min(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restandardized {
    pub reference: PostureSequence,
    /// Cohort clock `γ̄(t) = ∫₀ᵗ e^r̄ / ∫₀¹ e^r̄` on the rate grid.
    pub gamma_bar: Warping,
}

/// Reference re-timed to the cohort pace: `α_R ∘ γ̄⁻¹` on the reference grid,
/// with duration `U_R ∫₀¹ e^r̄`.
pub fn restandardize(reference: &PostureSequence, mean_rate: &RateFunction) -> Result<Restandardized> {
    let g = &mean_rate.grid;
    if g[0] != 0.0 || g[g.len() - 1] != 1.0 {
        return Err(Error::GridMismatch(
            "mean rate must be given on a grid spanning [0, 1]".into(),
        ));
    }
    let dens: Vec<f64> = mean_rate.values.iter().map(|r| r.exp()).collect();
    let mut cum = vec![0.0; g.len()];
    for l in 1..g.len() {
        cum[l] = cum[l - 1] + 0.5 * (g[l] - g[l - 1]) * (dens[l] + dens[l - 1]);
    }
    let total = cum[g.len() - 1];
    let mut values: Vec<f64> = cum.iter().map(|c| c / total).collect();
    values[0] = 0.0;
    *values.last_mut().expect("grid has points") = 1.0;
    let gamma_bar = Warping::new(g.clone(), values)?;
    let inv = gamma_bar.inverse_on(reference.grid());
    let postures = inv
        .iter()
        .map(|&s| reference.sample_at(s))
        .collect::<Result<Vec<_>>>()?;
    let re = PostureSequence::new(reference.grid().to_vec(), postures, reference.duration() * total)?;
    Ok(Restandardized {
        reference: re,
        gamma_bar,
    })
}

/// Mean of every rate value of every function.
pub fn pooled_mean(rates: &[RateFunction]) -> f64 {
    let n: usize = rates.iter().map(|r| r.values.len()).sum();
    rates.iter().flat_map(|r| r.values.iter()).sum::<f64>() / n.max(1) as f64
}
