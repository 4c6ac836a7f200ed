//! Elastic alignment of TSRVFs by dynamic programming on a square lattice.
//!
//! Lattice node `(i, j)` pairs reference time `i / (N − 1)` with moving time
//! `j / (N − 1)`. A path moves from `(0, 0)` to `(N − 1, N − 1)` by steps
//! `(di, dj)` taken from a slope set. The cost of a step is the trapezoid
//! integral of `‖h_ref(τ) − sqrt(dj/di) · h_mov(γ(τ))‖²` over `max(di, dj)`
//! equal sub-intervals, with both fields linearly interpolated between
//! lattice nodes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{uniform_grid, PostureSequence, Tsrvf, Warping};
use crate::error::{Error, Result};
use crate::posture::Posture;

pub const MIN_DP_GRID: usize = 8;

/// Ordered list of admissible lattice steps `(reference, moving)`.
///
/// Order matters: among steps reaching a node with equal cost the earlier
/// one wins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct SlopeSet(Vec<(usize, usize)>);

impl SlopeSet {
    pub fn new(steps: Vec<(usize, usize)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("empty slope set".into()));
        }
        if !steps.contains(&(1, 1)) {
            return Err(Error::InvalidArgument("slope set must contain (1, 1)".into()));
        }
        for (k, s) in steps.iter().enumerate() {
            if s.0 == 0 || s.1 == 0 {
                return Err(Error::InvalidArgument(format!("step {s:?} is not strictly monotone")));
            }
            if steps[..k].contains(s) {
                return Err(Error::InvalidArgument(format!("duplicate step {s:?}")));
            }
        }
        Ok(SlopeSet(steps))
    }

    /// `(1,1), (1,2), (2,1), (1,3), (3,1)`.
    pub fn standard() -> Self {
        SlopeSet(vec![(1, 1), (1, 2), (2, 1), (1, 3), (3, 1)])
    }

    /// Every coprime step with both entries at most `k`, ordered by the larger
    /// entry and then by the reference entry.
    pub fn coprime(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("coprime slope bound must be positive".into()));
        }
        let mut steps = Vec::new();
        for m in 1..=k {
            for a in 1..=m {
                for (di, dj) in [(a, m), (m, a)] {
                    if gcd(di, dj) == 1 && !steps.contains(&(di, dj)) {
                        steps.push((di, dj));
                    }
                }
            }
        }
        steps.sort_by_key(|&(a, b)| (a.max(b), a));
        Ok(SlopeSet(steps))
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.0
    }
}

impl Default for SlopeSet {
    /// Coprime steps up to 6; the five-step set quantizes `sqrt(γ̇)` too coarsely.
    fn default() -> Self {
        SlopeSet::coprime(6).expect("positive bound")
    }
}

impl TryFrom<Vec<(usize, usize)>> for SlopeSet {
    type Error = Error;

    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        SlopeSet::new(v)
    }
}

impl From<SlopeSet> for Vec<(usize, usize)> {
    fn from(s: SlopeSet) -> Self {
        s.0
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignOptions {
    pub dp_grid: usize,
    pub slopes: SlopeSet,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            dp_grid: 100,
            slopes: SlopeSet::default(),
        }
    }
}

impl AlignOptions {
    pub fn with_grid(dp_grid: usize) -> Self {
        AlignOptions {
            dp_grid,
            ..Default::default()
        }
    }
}

/// Optimal warping from reference time to moving time and its distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub warping: Warping,
    pub distance: f64,
    /// Lattice vertices of the optimal path, from `(0, 0)` to `(N − 1, N − 1)`.
    pub path: Vec<(usize, usize)>,
}

/// Inner products of both TSRVFs sampled at the lattice nodes, so that a
/// segment cost needs no work proportional to the field dimension.
pub struct Lattice {
    n: usize,
    /// `⟨r_i, r_i⟩` and `⟨r_i, r_{i+1}⟩` for the reference field.
    rr: Vec<f64>,
    rr1: Vec<f64>,
    /// The same for the moving field.
    mm: Vec<f64>,
    mm1: Vec<f64>,
    /// `⟨r_i, m_j⟩`, row-major in `i`.
    rm: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Lattice {
    pub fn new(h_mov: &Tsrvf, h_ref: &Tsrvf, dp_grid: usize) -> Result<Self> {
        if dp_grid < MIN_DP_GRID {
            return Err(Error::GridTooCoarse { dp_grid });
        }
        if h_mov.reference != h_ref.reference {
            return Err(Error::GridMismatch("TSRVFs use different reference postures".into()));
        }
        if h_mov.dim() != h_ref.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_ref.dim(),
                found: h_mov.dim(),
            });
        }
        let n = dp_grid;
        let dim = h_ref.dim();
        let grid = uniform_grid(n);
        let sample = |h: &Tsrvf| {
            let mut out = Vec::with_capacity(n * dim);
            let mut v = DVector::zeros(dim);
            for &t in &grid {
                h.eval_into(t, &mut v);
                out.extend(v.iter());
            }
            out
        };
        let r = sample(h_ref);
        let m = sample(h_mov);
        fn row(x: &[f64], i: usize, dim: usize) -> &[f64] {
            &x[i * dim..(i + 1) * dim]
        }
        let norms = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let sq = (0..n).map(|i| dot(row(x, i, dim), row(x, i, dim))).collect();
            let next = (0..n - 1).map(|i| dot(row(x, i, dim), row(x, i + 1, dim))).collect();
            (sq, next)
        };
        let (rr, rr1) = norms(&r);
        let (mm, mm1) = norms(&m);
        let mut rm = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                rm.push(dot(row(&r, i, dim), row(&m, j, dim)));
            }
        }
        Ok(Lattice {
            n,
            rr,
            rr1,
            mm,
            mm1,
            rm,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Squared norm of a field linearly interpolated at `(i, w)`.
    #[inline]
    fn sq_norm(sq: &[f64], next: &[f64], i: usize, w: f64) -> f64 {
        if w > 0.0 {
            let u = 1.0 - w;
            u * u * sq[i] + 2.0 * u * w * next[i] + w * w * sq[i + 1]
        } else {
            sq[i]
        }
    }

    /// Squared discrepancy at fractional lattice positions `a` (reference)
    /// and `b` (moving), with the moving field scaled by `scale`.
    #[inline]
    fn discrepancy(&self, a: f64, b: f64, scale: f64) -> f64 {
        let n = self.n;
        let (ia, wa) = split(a, n);
        let (ib, wb) = split(b, n);
        let rr = Self::sq_norm(&self.rr, &self.rr1, ia, wa);
        let mm = Self::sq_norm(&self.mm, &self.mm1, ib, wb);
        let g = |i: usize, j: usize| self.rm[i * n + j];
        let rm = match (wa > 0.0, wb > 0.0) {
            (false, false) => g(ia, ib),
            (true, false) => (1.0 - wa) * g(ia, ib) + wa * g(ia + 1, ib),
            (false, true) => (1.0 - wb) * g(ia, ib) + wb * g(ia, ib + 1),
            (true, true) => {
                (1.0 - wa) * ((1.0 - wb) * g(ia, ib) + wb * g(ia, ib + 1))
                    + wa * ((1.0 - wb) * g(ia + 1, ib) + wb * g(ia + 1, ib + 1))
            }
        };
        (rr - 2.0 * scale * rm + scale * scale * mm).max(0.0)
    }

    /// Cost of the step `step` starting at lattice node `from`.
    pub fn segment_cost(&self, from: (usize, usize), step: (usize, usize)) -> f64 {
        let (i0, j0) = (from.0 as f64, from.1 as f64);
        let (di, dj) = step;
        let n_sub = di.max(dj);
        let scale = (dj as f64 / di as f64).sqrt();
        let mut sum = 0.0;
        for k in 0..=n_sub {
            let a = i0 + (k * di) as f64 / n_sub as f64;
            let b = j0 + (k * dj) as f64 / n_sub as f64;
            let f = self.discrepancy(a, b, scale);
            sum += if k == 0 || k == n_sub { 0.5 * f } else { f };
        }
        sum * (di as f64 / (self.n - 1) as f64) / n_sub as f64
    }

    /// Minimum accumulated cost over monotone paths, with the optimal path.
    pub fn solve(&self, slopes: &SlopeSet) -> Result<(f64, Vec<(usize, usize)>)> {
        let n = self.n;
        let mut cost = vec![f64::INFINITY; n * n];
        let mut back = vec![u8::MAX; n * n];
        cost[0] = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == 0 && j == 0 {
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut arg = u8::MAX;
                for (s, &(di, dj)) in slopes.steps().iter().enumerate() {
                    if di > i || dj > j {
                        continue;
                    }
                    let prev = cost[(i - di) * n + (j - dj)];
                    if !prev.is_finite() {
                        continue;
                    }
                    let c = prev + self.segment_cost((i - di, j - dj), (di, dj));
                    if c < best {
                        best = c;
                        arg = s as u8;
                    }
                }
                cost[i * n + j] = best;
                back[i * n + j] = arg;
            }
        }
        let total = cost[n * n - 1];
        if !total.is_finite() {
            return Err(Error::InvalidArgument("no lattice path reaches the end node".into()));
        }
        let mut path = vec![(n - 1, n - 1)];
        let (mut i, mut j) = (n - 1, n - 1);
        while i > 0 || j > 0 {
            let (di, dj) = slopes.steps()[back[i * n + j] as usize];
            i -= di;
            j -= dj;
            path.push((i, j));
        }
        path.reverse();
        Ok((total, path))
    }
}

/// Integer part and fraction of a lattice coordinate, clamped to the last cell.
#[inline]
fn split(x: f64, n: usize) -> (usize, f64) {
    let i = x.floor() as usize;
    if i >= n - 1 {
        (n - 1, 0.0)
    } else {
        (i, x - i as f64)
    }
}

/// Piecewise-linear warping through the path vertices, sampled at every lattice node.
fn path_to_warping(path: &[(usize, usize)], n: usize) -> Result<Warping> {
    let last = (n - 1) as f64;
    let mut values = vec![0.0; n];
    for w in path.windows(2) {
        let ((i0, j0), (i1, j1)) = (w[0], w[1]);
        for (i, v) in values.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let f = (i - i0) as f64 / (i1 - i0) as f64;
            *v = (j0 as f64 + f * (j1 - j0) as f64) / last;
        }
    }
    values[0] = 0.0;
    values[n - 1] = 1.0;
    Warping::new(uniform_grid(n), values)
}

/// Aligns `h_mov` to `h_ref`; the warping maps reference time to moving time.
pub fn align_tsrvf(h_mov: &Tsrvf, h_ref: &Tsrvf, opts: &AlignOptions) -> Result<Alignment> {
    let lattice = Lattice::new(h_mov, h_ref, opts.dp_grid)?;
    let (total, path) = lattice.solve(&opts.slopes)?;
    Ok(Alignment {
        warping: path_to_warping(&path, opts.dp_grid)?,
        distance: total.max(0.0).sqrt(),
        path,
    })
}

pub fn align_sequences(
    moving: &PostureSequence,
    reference: &PostureSequence,
    y_r: &Posture,
    opts: &AlignOptions,
) -> Result<Alignment> {
    if opts.dp_grid < MIN_DP_GRID {
        return Err(Error::GridTooCoarse { dp_grid: opts.dp_grid });
    }
    let h_mov = super::compute_tsrvf(moving, y_r)?;
    let h_ref = super::compute_tsrvf(reference, y_r)?;
    align_tsrvf(&h_mov, &h_ref, opts)
}

/// Elastic distance between two motions (the first is warped onto the second).
pub fn motion_distance(a1: &PostureSequence, a2: &PostureSequence, y_r: &Posture, opts: &AlignOptions) -> Result<f64> {
    Ok(align_sequences(a1, a2, y_r, opts)?.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::compute_tsrvf;
    use nalgebra::Vector3;

    fn wave(l: usize, phase: f64) -> PostureSequence {
        let ps = uniform_grid(l)
            .iter()
            .map(|&t| {
                let a = 1.2 * t + phase;
                Posture::from_vectors(&[
                    Vector3::new(a.cos(), a.sin(), 0.4),
                    Vector3::new(0.3 * (3.0 * t).sin(), 0.2, 1.0),
                ])
                .unwrap()
            })
            .collect();
        PostureSequence::uniform(ps, 1.0).unwrap()
    }

    #[test]
    fn slope_sets() {
        assert_eq!(SlopeSet::coprime(1).unwrap().steps(), &[(1, 1)]);
        assert_eq!(
            SlopeSet::coprime(3).unwrap().steps(),
            &[(1, 1), (1, 2), (2, 1), (1, 3), (2, 3), (3, 1), (3, 2)]
        );
        assert!(SlopeSet::new(vec![(1, 2)]).is_err());
        assert!(SlopeSet::new(vec![(1, 1), (0, 1)]).is_err());
    }

    #[test]
    fn too_coarse() {
        let s = wave(20, 0.0);
        let y = s.postures()[0].clone();
        assert!(matches!(
            align_sequences(&s, &s, &y, &AlignOptions::with_grid(7)),
            Err(Error::GridTooCoarse { dp_grid: 7 })
        ));
    }

    #[test]
    fn self_alignment_is_identity() {
        let s = wave(40, 0.0);
        let y = s.postures()[20].clone();
        let a = align_sequences(&s, &s, &y, &AlignOptions::with_grid(40)).unwrap();
        assert_eq!(a.distance, 0.0);
        assert!(a.warping.sup_distance(|t| t) <= 1.0 / 40.0);
    }

    #[test]
    fn aligned_not_worse_than_identity() {
        let (a, b) = (wave(30, 0.0), wave(30, 0.3));
        let y = a.postures()[15].clone();
        let ha = compute_tsrvf(&a, &y).unwrap();
        let hb = compute_tsrvf(&b, &y).unwrap();
        let d0 = super::super::tsrvf_distance(&ha, &hb).unwrap();
        let al = align_tsrvf(&ha, &hb, &AlignOptions::with_grid(30)).unwrap();
        assert!(al.distance <= d0 + 1e-12);
    }

    #[test]
    fn identity_path_cost_is_trapezoid_distance() {
        let (a, b) = (wave(12, 0.0), wave(12, 0.5));
        let y = a.postures()[0].clone();
        let ha = compute_tsrvf(&a, &y).unwrap();
        let hb = compute_tsrvf(&b, &y).unwrap();
        let lat = Lattice::new(&ha, &hb, 12).unwrap();
        let diag: f64 = (0..11).map(|i| lat.segment_cost((i, i), (1, 1))).sum();
        let d = super::super::tsrvf_distance(&ha, &hb).unwrap();
        assert!((diag.sqrt() - d).abs() < 1e-12);
    }
}
