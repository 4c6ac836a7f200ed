//! Statistical analysis of human motion from skeleton data.
//!
//! Skeleton frames are normalized to postures (bone directions on a product
//! of spheres), sequences are compared through transported square-root
//! velocity fields with elastic alignment, and execution rates, posture
//! distributions and rate-linked directions are estimated on top.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gp;
pub mod linalg;
pub mod motion;
pub mod posture;
pub mod sir;
pub mod skeleton;
pub mod sphere;
pub mod stats;
pub mod workflows;

pub use error::{Error, Result};
pub use motion::{PostureSequence, RateFunction, Tsrvf, Warping};
pub use posture::{Chart, Posture, TangentCoords};
pub use skeleton::{Hierarchy, SkeletonFrame, SkeletonSequence};
pub use sphere::SpherePoint;
