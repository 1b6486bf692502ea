//! Offline toolkit for humanoid motion retargeting and skill evaluation:
//! map human mocap onto a 19-DoF humanoid, score task success kinematically
//! and against energy budgets, rasterize egocentric elevation maps, and
//! compute tracking rewards and observation vectors as pure functions.

pub mod metrics;
pub mod motion;
pub mod perception;
pub mod retarget;
pub mod rotation;
pub mod skeleton;
pub mod task;
pub mod tracking;

pub use metrics::{
    aggregate, energy_series, evaluate_motion, kinematic_success, load_gains, load_scene,
    pd_torques, physical_success, point_in_footprint, validate_footprint, EvalReport,
    KinematicOutcome, MetricsError, OrientedBox, PdGains, TaskScene, LAMBDA_P,
};
pub use motion::{
    derive_kinematics, load_motion, motion_to_json, save_motion, KinematicDerivatives,
    MotionError, MotionSequence, ObjectPose,
};
pub use perception::{
    backproject, depth_to_points, load_depth, rasterize_elevation, save_depth, target_point_map,
    Camera, CameraRig, DepthImage, ElevationMap, PerceptionError, DEFAULT_CELL_SIZE,
    DEPTH_KEEP_LIMIT, GRID_SIZE, TARGET_CELL_SIZE,
};
pub use retarget::{
    default_registry, LossBreakdown, RetargetConfig, RetargetError, RetargetOutcome,
    RetargetRequest, Retargeter, RetargeterRegistry,
};
pub use task::TaskId;
pub use tracking::{
    build_observation, early_termination, observation_length, reward_tracking, track_states,
    BodyState, ObjectState, RewardBreakdown, TrackState, TrackerVariant, TrackingError,
};
pub use rotation::{geodesic_distance, Rotation, RotationError};
pub use skeleton::{
    forward_kinematics, load_skeleton, to_root_frame, transform_distance, validate_pose, Joint,
    JointKind, JointValue, KeyJoints, Pose, RigidTransform, Skeleton, SkeletonError,
};
