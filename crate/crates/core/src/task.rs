//! Task catalogue: the six interaction skills, their evaluation time limits,
//! and the root-height penalty weight used by the tracking reward.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("unknown task code {0:?} (expected one of SC, SS, LB, LS, T, L)")]
pub struct UnknownTask(pub String);

/// The six evaluated skills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskId {
    /// Sit on a chair.
    #[serde(rename = "SC")]
    SitChair,
    /// Sit on a sofa.
    #[serde(rename = "SS")]
    SitSofa,
    /// Lie on a bed.
    #[serde(rename = "LB")]
    LieBed,
    /// Lie on a sofa.
    #[serde(rename = "LS")]
    LieSofa,
    /// Touch a point pair with both wrists.
    #[serde(rename = "T")]
    Touch,
    /// Lift a box.
    #[serde(rename = "L")]
    Lift,
}

impl TaskId {
    pub const ALL: [TaskId; 6] = [
        TaskId::SitChair,
        TaskId::SitSofa,
        TaskId::LieBed,
        TaskId::LieSofa,
        TaskId::Touch,
        TaskId::Lift,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TaskId::SitChair => "SC",
            TaskId::SitSofa => "SS",
            TaskId::LieBed => "LB",
            TaskId::LieSofa => "LS",
            TaskId::Touch => "T",
            TaskId::Lift => "L",
        }
    }

    /// Seconds of motion considered by the kinematic success check; frames
    /// beyond the limit are ignored.
    pub fn time_limit(self) -> f64 {
        match self {
            TaskId::SitChair | TaskId::SitSofa | TaskId::LieBed | TaskId::LieSofa => 20.0,
            TaskId::Touch | TaskId::Lift => 10.0,
        }
    }

    /// Weight of the squared root-height error inside the root reward term.
    pub fn height_penalty_weight(self) -> f64 {
        match self {
            TaskId::SitChair | TaskId::SitSofa => 100.0,
            _ => 10.0,
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TaskId {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SC" => Ok(TaskId::SitChair),
            "SS" => Ok(TaskId::SitSofa),
            "LB" => Ok(TaskId::LieBed),
            "LS" => Ok(TaskId::LieSofa),
            "T" => Ok(TaskId::Touch),
            "L" => Ok(TaskId::Lift),
            other => Err(UnknownTask(other.to_string())),
        }
    }
}
