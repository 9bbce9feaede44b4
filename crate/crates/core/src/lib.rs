//! Skateboard kinematics, tilt dynamics, steering and transition planning,
//! phase scheduling, reward evaluation and scenario simulation for a
//! humanoid skateboarding setup.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). Aliases
//! for both precisions are exported below; scenario orchestration and
//! domain randomization run in `f64`.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod board;
pub mod config;
pub mod error;
pub mod geometry;
pub mod phase;
pub mod randomization;
pub mod reward;
pub mod scalar;
pub mod scenario;
pub mod steering;
pub mod sysid;
pub mod transition;
pub mod truck;

pub use board::{
    simulate_constant_lean, simulate_free_decay, step_planar, step_tilt, step_tilt_limited,
    yaw_rate, BoardState, TiltModel, Trajectory, TrajectorySample, TRAJECTORY_CSV_HEADER,
};
pub use error::{Error, Result};
pub use geometry::{Quat, Vec3};
pub use phase::{dispatch_reward, PhaseKind, PhaseSchedule, PhaseState};
pub use randomization::{sample_domain_randomization, DomainRandomizer, DrDraw, DrRanges, Range};
pub use reward::{
    evaluate_phase_rewards, evaluate_regularization, HumanoidSnapshot, JointLimits, PhaseCommands,
    RewardBreakdown, RewardConfig, RewardWeights, Tolerances, DOF,
};
pub use scalar::{wrap_angle, Real};
pub use scenario::{
    run_scenario, RunMetrics, RunReport, ScenarioConfig, SpeedProfile, SteeringSegment,
};
pub use steering::{heading_error, reachable_heading_range, tilt_reference, SteeringCommand};
pub use sysid::{
    cuboid_roll_inertia, detect_peaks, find_peaks, identify, identify_from_peaks,
    identify_multi_peak, FreeDecayTrace, IdentificationResult, PeakDetection, PeakPair,
};
pub use transition::{
    bezier_point, eval_bezier, eval_transition, parse_poses, plan_transition, slerp, write_poses,
    BodyId, ControlPointPolicy, KeyBodyPose, TransitionPlan,
};
pub use truck::{
    construct_truck_rotation, steering_from_construction, steering_from_tilt, tilt_from_steering,
    truck_steering, TruckConstruction, TruckGeometry, TruckSide, TILT_JOINT_LIMIT,
    TRUCK_JOINT_LIMIT,
};

pub type TruckGeometryF64 = TruckGeometry<f64>;
pub type TruckGeometryF32 = TruckGeometry<f32>;
pub type BoardStateF64 = BoardState<f64>;
pub type BoardStateF32 = BoardState<f32>;
pub type TiltModelF64 = TiltModel<f64>;
pub type TiltModelF32 = TiltModel<f32>;
pub type SteeringCommandF64 = SteeringCommand<f64>;
pub type SteeringCommandF32 = SteeringCommand<f32>;
pub type PhaseScheduleF64 = PhaseSchedule<f64>;
pub type PhaseScheduleF32 = PhaseSchedule<f32>;
pub type TransitionPlanF64 = TransitionPlan<f64>;
pub type TransitionPlanF32 = TransitionPlan<f32>;
pub type KeyBodyPoseF64 = KeyBodyPose<f64>;
pub type KeyBodyPoseF32 = KeyBodyPose<f32>;
pub type FreeDecayTraceF64 = FreeDecayTrace<f64>;
pub type FreeDecayTraceF32 = FreeDecayTrace<f32>;
pub type RewardConfigF64 = RewardConfig<f64>;
pub type RewardConfigF32 = RewardConfig<f32>;
pub type Vec3F64 = Vec3<f64>;
pub type QuatF64 = Quat<f64>;
