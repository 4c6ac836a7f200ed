//! Skeleton data: landmark trees, frames, and their normalization to postures.

mod io;
mod rig;

pub use io::{load_sequence, parse_sequence, save_sequence, to_canonical_json};
pub use rig::Rig;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::motion::PostureSequence;
use crate::posture::Posture;
use crate::sphere::SpherePoint;

/// Default minimum bone length, in input units.
pub const DEFAULT_BONE_EPS: f64 = 1e-8;

/// Tree of landmarks given as `(child, parent)` edges.
///
/// Posture parts follow the order of child indices, so part `k` is the bone
/// ending at the `k`-th smallest non-root landmark.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    n: usize,
    root: usize,
    edges: Vec<(usize, usize)>,
    parent: Vec<Option<usize>>,
    children_sorted: Vec<usize>,
}

impl Hierarchy {
    pub fn new(n: usize, root: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Schema(format!("need at least 2 landmarks, got {n}")));
        }
        if root >= n {
            return Err(Error::Schema(format!("root {root} out of range for n = {n}")));
        }
        if edges.len() != n - 1 {
            return Err(Error::Schema(format!(
                "a tree on {n} landmarks has {} edges, found {}",
                n - 1,
                edges.len()
            )));
        }
        let mut parent = vec![None; n];
        for &(c, p) in &edges {
            if c >= n || p >= n {
                return Err(Error::Schema(format!("edge ({c}, {p}) out of range")));
            }
            if c == root {
                return Err(Error::Schema(format!("root {root} cannot have a parent")));
            }
            if c == p {
                return Err(Error::Schema(format!("self loop at {c}")));
            }
            if parent[c].is_some() {
                return Err(Error::Schema(format!("landmark {c} has more than one parent")));
            }
            parent[c] = Some(p);
        }
        // every node must reach the root without revisiting
        for start in 0..n {
            let mut node = start;
            let mut steps = 0;
            while node != root {
                node = parent[node]
                    .ok_or_else(|| Error::Schema(format!("landmark {node} is not connected to the root")))?;
                steps += 1;
                if steps > n {
                    return Err(Error::Schema(format!("cycle through landmark {start}")));
                }
            }
        }
        let children_sorted: Vec<usize> = (0..n).filter(|&i| i != root).collect();
        Ok(Hierarchy {
            n,
            root,
            edges,
            parent,
            children_sorted,
        })
    }

    /// Simple chain `0 ← 1 ← … ← n−1` rooted at landmark 0.
    pub fn chain(n: usize) -> Result<Self> {
        Hierarchy::new(n, 0, (1..n).map(|i| (i, i - 1)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_parts(&self) -> usize {
        self.n - 1
    }

    pub fn parent(&self, landmark: usize) -> Option<usize> {
        self.parent[landmark]
    }

    /// `(child, parent)` of every part, in part order.
    pub fn bones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children_sorted
            .iter()
            .map(|&c| (c, self.parent[c].expect("non-root has a parent")))
    }

    /// Landmarks ordered so that parents precede their children.
    fn topological_order(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.n];
        for (i, d) in depth.iter_mut().enumerate() {
            let mut node = i;
            while let Some(p) = self.parent[node] {
                *d += 1;
                node = p;
            }
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&i| (depth[i], i));
        order
    }
}

/// Landmark positions at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonFrame {
    pub t: f64,
    pub coords: Vec<Vector3<f64>>,
}

/// A recorded performance: a hierarchy plus time-ordered frames.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    pub hierarchy: Hierarchy,
    pub frames: Vec<SkeletonFrame>,
    pub label: Option<String>,
}

impl SkeletonSequence {
    pub fn new(hierarchy: Hierarchy, frames: Vec<SkeletonFrame>, label: Option<String>) -> Result<Self> {
        let seq = SkeletonSequence {
            hierarchy,
            frames,
            label,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 frames, found {}",
                self.frames.len()
            )));
        }
        for (k, f) in self.frames.iter().enumerate() {
            if f.coords.len() != self.hierarchy.n() {
                return Err(Error::Schema(format!(
                    "frame {k} has {} landmarks, expected {}",
                    f.coords.len(),
                    self.hierarchy.n()
                )));
            }
            if !f.t.is_finite() || f.t < 0.0 {
                return Err(Error::Schema(format!("frame {k} has invalid time {}", f.t)));
            }
            if f.coords.iter().any(|c| !c.iter().all(|x| x.is_finite())) {
                return Err(Error::Schema(format!("frame {k} has non-finite coordinates")));
            }
            if k > 0 && f.t <= self.frames[k - 1].t {
                return Err(Error::Schema(format!(
                    "frame times not strictly increasing at frame {k}"
                )));
            }
        }
        Ok(())
    }

    /// Physical duration from first to last frame.
    pub fn duration(&self) -> f64 {
        self.frames[self.frames.len() - 1].t - self.frames[0].t
    }

    /// Postures on the normalized clock `(t − t_first) / duration`.
    pub fn to_posture_sequence(&self) -> Result<PostureSequence> {
        let t0 = self.frames[0].t;
        let u = self.duration();
        let n = self.frames.len();
        let grid = self
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| match k {
                0 => 0.0,
                k if k == n - 1 => 1.0,
                _ => (f.t - t0) / u,
            })
            .collect();
        let postures = self
            .frames
            .iter()
            .map(|f| skeleton_to_posture(f, &self.hierarchy))
            .collect::<Result<Vec<_>>>()?;
        PostureSequence::new(grid, postures, u)
    }
}

/// Unit bone directions of a frame; drops location, global size and body ratios.
pub fn skeleton_to_posture(frame: &SkeletonFrame, h: &Hierarchy) -> Result<Posture> {
    skeleton_to_posture_eps(frame, h, DEFAULT_BONE_EPS)
}

pub fn skeleton_to_posture_eps(frame: &SkeletonFrame, h: &Hierarchy, eps: f64) -> Result<Posture> {
    if frame.coords.len() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            found: frame.coords.len(),
        });
    }
    let parts = h
        .bones()
        .enumerate()
        .map(|(part, (c, p))| {
            let bone = frame.coords[c] - frame.coords[p];
            let len = bone.norm();
            if len <= eps {
                Err(Error::ZeroBone { part })
            } else {
                Ok(SpherePoint::new_unchecked(bone / len))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Posture::new(parts)
}

/// Rebuilds landmark positions from a posture and nominal bone lengths.
pub fn posture_to_skeleton(
    posture: &Posture,
    h: &Hierarchy,
    bone_lengths: &[f64],
    root_pos: Vector3<f64>,
    t: f64,
) -> Result<SkeletonFrame> {
    if posture.n_parts() != h.n_parts() {
        return Err(Error::DimensionMismatch {
            expected: h.n_parts(),
            found: posture.n_parts(),
        });
    }
    if bone_lengths.len() != h.n_parts() {
        return Err(Error::DimensionMismatch {
            expected: h.n_parts(),
            found: bone_lengths.len(),
        });
    }
    if let Some(l) = bone_lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("bone length {l} must be positive")));
    }
    let mut part_of = vec![usize::MAX; h.n()];
    for (k, (c, _)) in h.bones().enumerate() {
        part_of[c] = k;
    }
    let mut coords = vec![Vector3::zeros(); h.n()];
    coords[h.root()] = root_pos;
    for node in h.topological_order() {
        if let Some(p) = h.parent(node) {
            let k = part_of[node];
            coords[node] = coords[p] + posture.parts()[k].coords() * bone_lengths[k];
        }
    }
    Ok(SkeletonFrame { t, coords })
}
