//! Named landmark trees with a rest posture and nominal bone lengths.

use nalgebra::Vector3;

use super::Hierarchy;
use crate::error::{Error, Result};
use crate::posture::Posture;

/// A hierarchy plus a neutral standing posture and typical bone lengths
/// (metres), used by the synthetic generator and for reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct Rig {
    pub name: String,
    pub landmarks: Vec<String>,
    pub hierarchy: Hierarchy,
    pub rest: Posture,
    pub bone_lengths: Vec<f64>,
}

/// `(name, parent, rest direction, length)`; the root has no parent.
type Spec = (&'static str, Option<usize>, [f64; 3], f64);

fn build(name: &str, spec: &[Spec]) -> Rig {
    let root = spec.iter().position(|s| s.1.is_none()).expect("rig has a root");
    let edges = spec
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.1.map(|p| (i, p)))
        .collect();
    let hierarchy = Hierarchy::new(spec.len(), root, edges).expect("preset tree is valid");
    let bones: Vec<&Spec> = spec.iter().filter(|s| s.1.is_some()).collect();
    let dirs: Vec<Vector3<f64>> = bones.iter().map(|s| Vector3::from(s.2)).collect();
    Rig {
        name: name.to_string(),
        landmarks: spec.iter().map(|s| s.0.to_string()).collect(),
        hierarchy,
        rest: Posture::from_vectors(&dirs).expect("preset directions are nonzero"),
        bone_lengths: bones.iter().map(|s| s.3).collect(),
    }
}

impl Rig {
    /// 21-landmark full body: spine and head chain, two four-bone arms, two
    /// three-bone legs, rooted at the pelvis (last index). z points up.
    pub fn humanoid21() -> Rig {
        const UP: [f64; 3] = [0.0, 0.0, 1.0];
        build(
            "humanoid21",
            &[
                ("spine_lower", Some(20), UP, 0.10),
                ("spine_mid", Some(0), UP, 0.12),
                ("spine_upper", Some(1), UP, 0.12),
                ("neck", Some(2), UP, 0.10),
                ("head", Some(3), UP, 0.10),
                ("head_top", Some(4), UP, 0.12),
                ("l_shoulder", Some(2), [1.0, 0.0, 0.1], 0.18),
                ("l_elbow", Some(6), [0.1, 0.0, -1.0], 0.30),
                ("l_wrist", Some(7), [0.05, 0.1, -1.0], 0.26),
                ("l_hand", Some(8), [0.0, 0.1, -1.0], 0.08),
                ("r_shoulder", Some(2), [-1.0, 0.0, 0.1], 0.18),
                ("r_elbow", Some(10), [-0.1, 0.0, -1.0], 0.30),
                ("r_wrist", Some(11), [-0.05, 0.1, -1.0], 0.26),
                ("r_hand", Some(12), [0.0, 0.1, -1.0], 0.08),
                ("l_hip", Some(20), [1.0, 0.0, -0.3], 0.10),
                ("l_knee", Some(14), [0.0, 0.0, -1.0], 0.42),
                ("l_ankle", Some(15), [0.0, -0.05, -1.0], 0.40),
                ("r_hip", Some(20), [-1.0, 0.0, -0.3], 0.10),
                ("r_knee", Some(17), [0.0, 0.0, -1.0], 0.42),
                ("r_ankle", Some(18), [0.0, -0.05, -1.0], 0.40),
                ("pelvis", None, UP, 0.0),
            ],
        )
    }

    /// 9-landmark torso, head and arms, rooted at the pelvis (last index).
    pub fn upper_body9() -> Rig {
        build(
            "upper_body9",
            &[
                ("chest", Some(8), [0.0, 0.0, 1.0], 0.45),
                ("head", Some(0), [0.0, 0.05, 1.0], 0.25),
                ("l_elbow", Some(0), [0.3, 0.0, -1.0], 0.30),
                ("l_wrist", Some(2), [0.1, 0.2, -1.0], 0.26),
                ("l_hand", Some(3), [0.0, 0.3, -1.0], 0.08),
                ("r_elbow", Some(0), [-0.3, 0.0, -1.0], 0.30),
                ("r_wrist", Some(5), [-0.1, 0.2, -1.0], 0.26),
                ("r_hand", Some(6), [0.0, 0.3, -1.0], 0.08),
                ("pelvis", None, [0.0, 0.0, 1.0], 0.0),
            ],
        )
    }

    /// Looks a preset up by name.
    pub fn by_name(name: &str) -> Result<Rig> {
        match name {
            "humanoid21" => Ok(Rig::humanoid21()),
            "upper_body9" => Ok(Rig::upper_body9()),
            other => Err(Error::InvalidArgument(format!(
                "unknown rig {other:?} (expected humanoid21 or upper_body9)"
            ))),
        }
    }

    pub fn n_parts(&self) -> usize {
        self.hierarchy.n_parts()
    }
}
