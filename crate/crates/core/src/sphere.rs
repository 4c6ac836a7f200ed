//! Closed-form Riemannian geometry of the unit 2-sphere.
//!
//! Tangent vectors are plain `Vector3<f64>` values orthogonal to their base
//! point. Maps that are undefined for antipodal pairs fail with
//! [`Error::Antipodal`] once the angle exceeds `π − ANTIPODAL_GAP`.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs closer than this to antipodal are rejected.
pub const ANTIPODAL_GAP: f64 = 1e-6;
/// Below this angle `θ / sin θ` is replaced by its limit 1.
pub const SMALL_ANGLE: f64 = 1e-9;
/// Maximum `|y·f|` accepted for a tangent vector `f` at `y`.
pub const TANGENT_TOL: f64 = 1e-6;

/// A point on the unit sphere in R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SpherePoint(Vector3<f64>);

impl SpherePoint {
    /// Normalizes `v`; fails for zero or non-finite input.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize vector {:?}",
                v.as_slice()
            )));
        }
        Ok(SpherePoint(v / norm))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    pub(crate) fn new_unchecked(v: Vector3<f64>) -> Self {
        SpherePoint(v / v.norm())
    }

    pub fn e1() -> Self {
        SpherePoint(Vector3::x())
    }

    pub fn e2() -> Self {
        SpherePoint(Vector3::y())
    }

    pub fn e3() -> Self {
        SpherePoint(Vector3::z())
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn antipode(&self) -> Self {
        SpherePoint(-self.0)
    }

    /// Geodesic distance in radians, in `[0, π]`.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        angle_between(&self.0, &other.0)
    }

    /// Inverse exponential map: the tangent vector at `self` pointing at `other`
    /// with length equal to their distance.
    pub fn log(&self, other: &SpherePoint) -> Result<Vector3<f64>> {
        let y = &self.0;
        let z = &other.0;
        let theta = angle_between(y, z);
        check_not_antipodal(theta)?;
        if theta == 0.0 {
            return Ok(Vector3::zeros());
        }
        let c = y.dot(z).clamp(-1.0, 1.0);
        let v = z - y * c;
        if theta < SMALL_ANGLE {
            return Ok(v);
        }
        // ‖v‖ = sin θ; rescale through the measured norm for stability.
        let vn = v.norm();
        if vn == 0.0 {
            return Ok(Vector3::zeros());
        }
        Ok(v * (theta / vn))
    }

    /// Exponential map of a tangent vector at `self`.
    pub fn exp(&self, f: &Vector3<f64>) -> Result<SpherePoint> {
        let dot = self.0.dot(f);
        if dot.abs() > TANGENT_TOL {
            return Err(Error::NotTangent { dot });
        }
        Ok(self.exp_unchecked(f))
    }

    pub(crate) fn exp_unchecked(&self, f: &Vector3<f64>) -> SpherePoint {
        let norm = f.norm();
        if norm < 1e-12 {
            return *self;
        }
        let v = self.0 * norm.cos() + f * (norm.sin() / norm);
        SpherePoint::new_unchecked(v)
    }

    /// Point at fraction `t` along the minimizing geodesic from `self` to `other`.
    pub fn geodesic(&self, other: &SpherePoint, t: f64) -> Result<SpherePoint> {
        let theta = self.distance(other);
        check_not_antipodal(theta)?;
        if theta < SMALL_ANGLE {
            return Ok(*self);
        }
        let s = theta.sin();
        let a = ((1.0 - t) * theta).sin() / s;
        let b = (t * theta).sin() / s;
        Ok(SpherePoint::new_unchecked(self.0 * a + other.0 * b))
    }

    /// Parallel transport of `f` (tangent at `self`) to `other` along the geodesic.
    pub fn transport(&self, other: &SpherePoint, f: &Vector3<f64>) -> Result<Vector3<f64>> {
        let theta = self.distance(other);
        check_not_antipodal(theta)?;
        Ok(transport_raw(&self.0, &other.0, f))
    }

    pub fn tangent_basis(&self) -> TangentBasis {
        tangent_basis(self)
    }
}

impl TryFrom<[f64; 3]> for SpherePoint {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        SpherePoint::new(Vector3::new(v[0], v[1], v[2]))
    }
}

impl From<SpherePoint> for [f64; 3] {
    fn from(p: SpherePoint) -> Self {
        [p.0.x, p.0.y, p.0.z]
    }
}

/// Orthonormal basis `{nu, omega}` of the tangent plane at `base`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentBasis {
    pub base: SpherePoint,
    pub nu: Vector3<f64>,
    pub omega: Vector3<f64>,
}

impl TangentBasis {
    /// Coordinates of a tangent vector in this basis.
    pub fn coords(&self, v: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.nu.dot(v), self.omega.dot(v))
    }

    /// Tangent vector with the given basis coordinates.
    pub fn vector(&self, c: &Vector2<f64>) -> Vector3<f64> {
        self.nu * c.x + self.omega * c.y
    }
}

/// Gram-Schmidt basis seeded with the canonical axis least aligned with `y`
/// (lowest index on ties); the second vector is `y × nu`.
pub fn tangent_basis(y: &SpherePoint) -> TangentBasis {
    let p = y.coords();
    let mut seed = 0;
    for k in 1..3 {
        if p[k].abs() < p[seed].abs() {
            seed = k;
        }
    }
    let mut e = Vector3::zeros();
    e[seed] = 1.0;
    let nu = (e - p * p[seed]).normalize();
    let omega = p.cross(&nu);
    TangentBasis { base: *y, nu, omega }
}

pub fn sphere_distance(y: &SpherePoint, z: &SpherePoint) -> f64 {
    y.distance(z)
}

pub fn sphere_geodesic(y: &SpherePoint, z: &SpherePoint, t: f64) -> Result<SpherePoint> {
    y.geodesic(z, t)
}

pub fn sphere_log(y: &SpherePoint, z: &SpherePoint) -> Result<Vector3<f64>> {
    y.log(z)
}

pub fn sphere_exp(y: &SpherePoint, f: &Vector3<f64>) -> Result<SpherePoint> {
    y.exp(f)
}

pub fn sphere_transport(y: &SpherePoint, z: &SpherePoint, f: &Vector3<f64>) -> Result<Vector3<f64>> {
    y.transport(z, f)
}

/// Angle between unit vectors, equal to `acos(clamp(a·b))` but accurate near 0 and π.
pub(crate) fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cross = a.cross(b).norm();
    let dot = a.dot(b);
    cross.atan2(dot).clamp(0.0, PI)
}

pub(crate) fn transport_raw(y: &Vector3<f64>, z: &Vector3<f64>, f: &Vector3<f64>) -> Vector3<f64> {
    let s = y + z;
    let denom = s.norm_squared();
    f - s * (2.0 * f.dot(z) / denom)
}

fn check_not_antipodal(theta: f64) -> Result<()> {
    if theta > PI - ANTIPODAL_GAP {
        Err(Error::Antipodal {
            part: None,
            index: None,
        })
    } else {
        Ok(())
    }
}
