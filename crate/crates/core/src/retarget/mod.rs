//! Retargeting strategies: rotation transfer, whole-sequence optimization,
//! and shape-aligned optimization, selectable by name through a registry.

pub mod align;
pub mod copy;
pub mod mapping;
pub mod optimize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{MotionError, MotionSequence};
use crate::retarget::mapping::JointMapping;
use crate::skeleton::{Skeleton, SkeletonError};
use crate::task::TaskId;

#[derive(Debug, Error)]
pub enum RetargetError {
    #[error("mapping: {0}")]
    Mapping(String),
    #[error("shape alignment: {0}")]
    Scaling(String),
    #[error("initialization: {0}")]
    Initialization(String),
    #[error("configuration: {0}")]
    Configuration(String),
    #[error("unknown retarget strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Optimizer settings. All lambdas weight unweighted mean loss terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RetargetConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda_pos: f64,
    pub lambda_ori: f64,
    pub lambda_acc: f64,
    /// Wrist-tracking weight. None takes the task default (1.0 for the
    /// touch and lift tasks, inactive otherwise); setting a positive value
    /// for a task without a wrist term is a configuration error.
    pub lambda_hand: Option<f64>,
    /// Best-so-far loss is recorded every this many epochs.
    pub checkpoint_interval: usize,
    pub task: Option<TaskId>,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        RetargetConfig {
            learning_rate: 0.02,
            epochs: 3000,
            lambda_pos: 1.0,
            lambda_ori: 0.1,
            lambda_acc: 0.05,
            lambda_hand: None,
            checkpoint_interval: 100,
            task: None,
        }
    }
}

impl RetargetConfig {
    fn hand_term_applies(&self) -> bool {
        matches!(self.task, Some(TaskId::Touch) | Some(TaskId::Lift))
    }

    /// Wrist weight actually in effect, or None when the term is inactive.
    pub fn effective_lambda_hand(&self) -> Option<f64> {
        if self.hand_term_applies() {
            Some(self.lambda_hand.unwrap_or(1.0))
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<(), RetargetError> {
        for (name, value) in [
            ("learning_rate", self.learning_rate),
            ("lambda_pos", self.lambda_pos),
            ("lambda_ori", self.lambda_ori),
            ("lambda_acc", self.lambda_acc),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(RetargetError::Configuration(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if self.learning_rate == 0.0 && self.epochs > 0 {
            return Err(RetargetError::Configuration(
                "learning_rate must be positive when epochs > 0".into(),
            ));
        }
        if self.checkpoint_interval == 0 {
            return Err(RetargetError::Configuration(
                "checkpoint_interval must be at least 1".into(),
            ));
        }
        if let Some(hand) = self.lambda_hand {
            if !hand.is_finite() || hand < 0.0 {
                return Err(RetargetError::Configuration(format!(
                    "lambda_hand must be finite and non-negative, got {hand}"
                )));
            }
            if hand > 0.0 && !self.hand_term_applies() {
                return Err(RetargetError::Configuration(
                    "lambda_hand is set but the configured task has no wrist term".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Unweighted mean values of each loss term; `total` applies the lambdas.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub position: f64,
    pub orientation: f64,
    pub acceleration: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hand: Option<f64>,
}

/// Inputs shared by every retarget strategy.
pub struct RetargetRequest<'a> {
    pub human_motion: &'a MotionSequence,
    pub human_skeleton: &'a Skeleton,
    pub humanoid_skeleton: &'a Skeleton,
    pub mapping: &'a JointMapping,
    pub config: &'a RetargetConfig,
}

pub struct RetargetOutcome {
    pub motion: MotionSequence,
    /// Loss of the returned motion; None for strategies without a loss.
    pub final_loss: Option<LossBreakdown>,
    /// Best-so-far total loss sampled every `checkpoint_interval` epochs;
    /// non-increasing by construction.
    pub checkpoints: Vec<f64>,
}

/// A named retargeting algorithm.
pub trait Retargeter: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, request: &RetargetRequest) -> Result<RetargetOutcome, RetargetError>;
}

struct CopyRetargeter;

impl Retargeter for CopyRetargeter {
    fn name(&self) -> &'static str {
        "copy"
    }

    fn description(&self) -> &'static str {
        "per-frame rotation transfer onto the humanoid's joint axes"
    }

    fn run(&self, request: &RetargetRequest) -> Result<RetargetOutcome, RetargetError> {
        let motion = copy::copy_rotation_motion(
            request.human_motion,
            request.human_skeleton,
            request.humanoid_skeleton,
            request.mapping,
        )?;
        Ok(RetargetOutcome { motion, final_loss: None, checkpoints: Vec::new() })
    }
}

struct OptimizeRetargeter;

impl Retargeter for OptimizeRetargeter {
    fn name(&self) -> &'static str {
        "optimize"
    }

    fn description(&self) -> &'static str {
        "whole-sequence gradient optimization seeded by rotation transfer"
    }

    fn run(&self, request: &RetargetRequest) -> Result<RetargetOutcome, RetargetError> {
        optimize::optimize_motion(
            request.human_motion,
            request.human_skeleton,
            request.humanoid_skeleton,
            request.mapping,
            request.config,
        )
    }
}

struct AlignOptimizeRetargeter;

impl Retargeter for AlignOptimizeRetargeter {
    fn name(&self) -> &'static str {
        "align-optimize"
    }

    fn description(&self) -> &'static str {
        "shape-aligns the human skeleton, then optimizes against its motion"
    }

    fn run(&self, request: &RetargetRequest) -> Result<RetargetOutcome, RetargetError> {
        let aligned = align::align_skeleton_shape(
            request.human_skeleton,
            request.humanoid_skeleton,
            request.mapping,
        )?;
        optimize::optimize_motion(
            request.human_motion,
            &aligned,
            request.humanoid_skeleton,
            request.mapping,
            request.config,
        )
    }
}

/// Name-indexed strategy table.
pub struct RetargeterRegistry {
    strategies: BTreeMap<&'static str, Box<dyn Retargeter>>,
}

impl RetargeterRegistry {
    pub fn new() -> Self {
        RetargeterRegistry { strategies: BTreeMap::new() }
    }

    pub fn register(&mut self, strategy: Box<dyn Retargeter>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Retargeter> {
        self.strategies.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }

    /// Validates the request's config, then dispatches to the named strategy.
    pub fn run(
        &self,
        name: &str,
        request: &RetargetRequest,
    ) -> Result<RetargetOutcome, RetargetError> {
        let strategy = self
            .get(name)
            .ok_or_else(|| RetargetError::UnknownStrategy(name.to_string()))?;
        request.config.validate()?;
        request.mapping.validate(request.human_skeleton, request.humanoid_skeleton)?;
        strategy.run(request)
    }
}

impl Default for RetargeterRegistry {
    fn default() -> Self {
        default_registry()
    }
}

/// Registry with the three built-in strategies.
pub fn default_registry() -> RetargeterRegistry {
    let mut registry = RetargeterRegistry::new();
    registry.register(Box::new(CopyRetargeter));
    registry.register(Box::new(OptimizeRetargeter));
    registry.register(Box::new(AlignOptimizeRetargeter));
    registry
}
