//! The posture manifold: a product of unit spheres, one per bone.
//!
//! Every map acts part-wise. Errors from a single sphere are re-raised with
//! the index of the offending part.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{tangent_basis, SpherePoint, TangentBasis};

/// Part-wise tangent vectors of a posture (one `Vector3` per part).
pub type TangentField = Vec<Vector3<f64>>;

/// Ordered bone directions of a skeleton, one unit vector per non-root landmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SpherePoint>", into = "Vec<SpherePoint>")]
pub struct Posture {
    parts: Vec<SpherePoint>,
}

impl TryFrom<Vec<SpherePoint>> for Posture {
    type Error = Error;

    fn try_from(parts: Vec<SpherePoint>) -> Result<Self> {
        Posture::new(parts)
    }
}

impl From<Posture> for Vec<SpherePoint> {
    fn from(p: Posture) -> Self {
        p.parts
    }
}

impl Posture {
    pub fn new(parts: Vec<SpherePoint>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("a posture needs at least one part".into()));
        }
        Ok(Posture { parts })
    }

    /// Builds a posture from raw vectors, normalizing each one.
    pub fn from_vectors(vs: &[Vector3<f64>]) -> Result<Self> {
        Posture::new(vs.iter().map(|v| SpherePoint::new(*v)).collect::<Result<_>>()?)
    }

    pub fn parts(&self) -> &[SpherePoint] {
        &self.parts
    }

    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    /// Dimension of the tangent-coordinate space, `2 · n_parts`.
    pub fn dim(&self) -> usize {
        2 * self.parts.len()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.parts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.parts.len(),
                found: n,
            });
        }
        Ok(())
    }

    /// Sum of part-wise geodesic distances.
    pub fn distance(&self, other: &Posture) -> Result<f64> {
        self.check_len(other.n_parts())?;
        Ok(self.parts.iter().zip(&other.parts).map(|(a, b)| a.distance(b)).sum())
    }

    pub fn log(&self, other: &Posture) -> Result<TangentField> {
        self.check_len(other.n_parts())?;
        self.parts
            .iter()
            .zip(&other.parts)
            .enumerate()
            .map(|(i, (a, b))| a.log(b).map_err(|e| e.at_part(i)))
            .collect()
    }

    pub fn exp(&self, field: &[Vector3<f64>]) -> Result<Posture> {
        self.check_len(field.len())?;
        let parts = self
            .parts
            .iter()
            .zip(field)
            .enumerate()
            .map(|(i, (a, f))| a.exp(f).map_err(|e| e.at_part(i)))
            .collect::<Result<_>>()?;
        Ok(Posture { parts })
    }

    pub(crate) fn exp_unchecked(&self, field: &[Vector3<f64>]) -> Posture {
        Posture {
            parts: self.parts.iter().zip(field).map(|(a, f)| a.exp_unchecked(f)).collect(),
        }
    }

    /// Part-wise geodesic interpolation.
    pub fn geodesic(&self, other: &Posture, t: f64) -> Result<Posture> {
        self.check_len(other.n_parts())?;
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .enumerate()
            .map(|(i, (a, b))| a.geodesic(b, t).map_err(|e| e.at_part(i)))
            .collect::<Result<_>>()?;
        Ok(Posture { parts })
    }

    /// Transports a tangent field at `self` to `target`, part by part.
    pub fn transport(&self, target: &Posture, field: &[Vector3<f64>]) -> Result<TangentField> {
        self.check_len(target.n_parts())?;
        self.check_len(field.len())?;
        self.parts
            .iter()
            .zip(&target.parts)
            .zip(field)
            .enumerate()
            .map(|(i, ((a, b), f))| a.transport(b, f).map_err(|e| e.at_part(i)))
            .collect()
    }

    pub fn bases(&self) -> Vec<TangentBasis> {
        self.parts.iter().map(tangent_basis).collect()
    }

    /// A chart of tangent coordinates centered at this posture.
    pub fn chart(&self) -> Chart {
        Chart::new(self.clone())
    }

    /// Stacked `[x, y, z]` of every part.
    pub fn to_vec(&self) -> Vec<[f64; 3]> {
        self.parts.iter().map(|p| (*p).into()).collect()
    }
}

/// Tangent coordinates of a posture relative to a base posture.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentCoords {
    pub base: Posture,
    pub coords: DVector<f64>,
}

impl TangentCoords {
    /// Euclidean norm of the two coordinates belonging to `part`.
    pub fn part_norm(&self, part: usize) -> f64 {
        Vector2::new(self.coords[2 * part], self.coords[2 * part + 1]).norm()
    }

    /// True when some part lies outside the truncation support `‖c_i‖ ≤ π/2`.
    pub fn exceeds_support(&self) -> bool {
        exceeds_support(&self.coords)
    }
}

/// Support indicator of the truncated tangent-coordinate density.
pub fn exceeds_support(c: &DVector<f64>) -> bool {
    (0..c.len() / 2).any(|i| Vector2::new(c[2 * i], c[2 * i + 1]).norm() > FRAC_PI_2 + 1e-9)
}

/// Cached tangent bases at a fixed posture for repeated coordinate maps.
#[derive(Clone, Debug)]
pub struct Chart {
    base: Posture,
    bases: Vec<TangentBasis>,
}

impl Chart {
    pub fn new(base: Posture) -> Self {
        let bases = base.bases();
        Chart { base, bases }
    }

    pub fn base(&self) -> &Posture {
        &self.base
    }

    pub fn bases(&self) -> &[TangentBasis] {
        &self.bases
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `(θ_i / sin θ_i) W_iᵀ y_i` for every part, stacked.
    pub fn coords(&self, y: &Posture) -> Result<DVector<f64>> {
        self.base.check_len(y.n_parts())?;
        let mut out = DVector::zeros(self.dim());
        for (i, (b, (m, p))) in self.bases.iter().zip(self.base.parts.iter().zip(&y.parts)).enumerate() {
            let v = m.log(p).map_err(|e| e.at_part(i))?;
            let c = b.coords(&v);
            out[2 * i] = c.x;
            out[2 * i + 1] = c.y;
        }
        Ok(out)
    }

    /// Tangent field corresponding to stacked basis coordinates.
    pub fn field(&self, c: &DVector<f64>) -> Result<TangentField> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.len(),
            });
        }
        Ok(self
            .bases
            .iter()
            .enumerate()
            .map(|(i, b)| b.vector(&Vector2::new(c[2 * i], c[2 * i + 1])))
            .collect())
    }

    /// Posture reached by the exponential map of the given coordinates.
    pub fn point(&self, c: &DVector<f64>) -> Result<Posture> {
        let f = self.field(c)?;
        Ok(self.base.exp_unchecked(&f))
    }

    /// Basis coordinates of a tangent field at the base.
    pub fn field_coords(&self, field: &[Vector3<f64>]) -> Result<DVector<f64>> {
        self.base.check_len(field.len())?;
        let mut out = DVector::zeros(self.dim());
        for (i, (b, f)) in self.bases.iter().zip(field).enumerate() {
            let c = b.coords(f);
            out[2 * i] = c.x;
            out[2 * i + 1] = c.y;
        }
        Ok(out)
    }
}

pub fn posture_distance(y: &Posture, z: &Posture) -> Result<f64> {
    y.distance(z)
}

pub fn posture_log(m: &Posture, y: &Posture) -> Result<TangentField> {
    m.log(y)
}

pub fn posture_exp(m: &Posture, f: &[Vector3<f64>]) -> Result<Posture> {
    m.exp(f)
}

pub fn posture_transport(m: &Posture, z: &Posture, f: &[Vector3<f64>]) -> Result<TangentField> {
    m.transport(z, f)
}

pub fn posture_coords(m: &Posture, y: &Posture) -> Result<TangentCoords> {
    let coords = m.chart().coords(y)?;
    Ok(TangentCoords {
        base: m.clone(),
        coords,
    })
}
