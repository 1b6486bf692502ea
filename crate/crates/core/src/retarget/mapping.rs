//! Joint correspondences between a human skeleton and the humanoid, plus the
//! built-in presets for the three supported human rigs.

use serde::{Deserialize, Serialize};

use crate::retarget::RetargetError;
use crate::skeleton::Skeleton;

/// One (human joint, humanoid joint) correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPair {
    pub human: usize,
    pub humanoid: usize,
}

/// A set of correspondences. Several humanoid joints may map to the same
/// human joint (they form a group); a humanoid joint may appear at most once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointMapping {
    pub pairs: Vec<JointPair>,
}

/// Humanoid joints that share one source human joint, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingGroup {
    pub human: usize,
    pub humanoid: Vec<usize>,
}

impl JointMapping {
    pub fn new(pairs: Vec<JointPair>) -> Self {
        JointMapping { pairs }
    }

    pub fn from_tuples(pairs: &[(usize, usize)]) -> Self {
        JointMapping {
            pairs: pairs.iter().map(|&(human, humanoid)| JointPair { human, humanoid }).collect(),
        }
    }

    /// Validates indices against both skeletons and rejects duplicate
    /// humanoid targets.
    pub fn validate(
        &self,
        human: &Skeleton,
        humanoid: &Skeleton,
    ) -> Result<(), RetargetError> {
        if self.pairs.is_empty() {
            return Err(RetargetError::Mapping("mapping has no pairs".into()));
        }
        let mut seen = vec![false; humanoid.len()];
        for pair in &self.pairs {
            if pair.human >= human.len() {
                return Err(RetargetError::Mapping(format!(
                    "human joint index {} out of range for skeleton {} ({} joints)",
                    pair.human,
                    human.name,
                    human.len()
                )));
            }
            if pair.humanoid >= humanoid.len() {
                return Err(RetargetError::Mapping(format!(
                    "humanoid joint index {} out of range for skeleton {} ({} joints)",
                    pair.humanoid,
                    humanoid.name,
                    humanoid.len()
                )));
            }
            if seen[pair.humanoid] {
                return Err(RetargetError::Mapping(format!(
                    "humanoid joint {} mapped twice",
                    pair.humanoid
                )));
            }
            seen[pair.humanoid] = true;
        }
        Ok(())
    }

    /// Groups pairs by human joint, preserving first-appearance order of the
    /// human joints; humanoid members sorted ascending within each group.
    pub fn groups(&self) -> Vec<MappingGroup> {
        let mut groups: Vec<MappingGroup> = Vec::new();
        for pair in &self.pairs {
            match groups.iter_mut().find(|g| g.human == pair.human) {
                Some(group) => group.humanoid.push(pair.humanoid),
                None => groups.push(MappingGroup {
                    human: pair.human,
                    humanoid: vec![pair.humanoid],
                }),
            }
        }
        for group in &mut groups {
            group.humanoid.sort_unstable();
        }
        groups
    }

    /// Human joint mapped to the given humanoid joint, if any.
    pub fn human_source(&self, humanoid: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.humanoid == humanoid).map(|p| p.human)
    }
}

/// Built-in correspondence for 15-joint human rigs (pelvis, torso chain with
/// head, then arms and legs), as produced by common physics-animation stacks.
pub fn unihsi_mapping() -> JointMapping {
    JointMapping::from_tuples(&[
        (0, 0),
        (0, 11),
        (12, 1),
        (12, 2),
        (13, 4),
        (14, 5),
        (9, 6),
        (9, 7),
        (10, 9),
        (11, 10),
        (6, 13),
        (7, 15),
        (3, 17),
        (4, 19),
    ])
}

/// Built-in correspondence for 25-joint human rigs with a full spine chain
/// and separate foot joints.
pub fn roam_mapping() -> JointMapping {
    JointMapping::from_tuples(&[
        (0, 0),
        (0, 11),
        (17, 1),
        (17, 2),
        (18, 4),
        (19, 5),
        (22, 6),
        (22, 7),
        (23, 9),
        (24, 10),
        (10, 12),
        (11, 15),
        (14, 16),
        (15, 19),
    ])
}

/// Built-in correspondence for 22-joint SMPL-style human rigs.
pub fn core4d_mapping() -> JointMapping {
    JointMapping::from_tuples(&[
        (0, 0),
        (0, 11),
        (1, 1),
        (1, 2),
        (4, 4),
        (7, 5),
        (2, 6),
        (2, 7),
        (5, 9),
        (8, 10),
        (16, 12),
        (18, 15),
        (17, 16),
        (19, 19),
    ])
}

/// Looks up a preset mapping by name.
pub fn preset_mapping(name: &str) -> Option<JointMapping> {
    match name {
        "unihsi" => Some(unihsi_mapping()),
        "roam" => Some(roam_mapping()),
        "core4d" => Some(core4d_mapping()),
        _ => None,
    }
}
