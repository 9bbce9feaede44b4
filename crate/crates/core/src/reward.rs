//! Reward terms for every skateboarding phase plus regularisation.
//!
//! Tracking terms use the kernel `w * exp(-err^2 / sigma^2)`; indicator
//! terms multiply their weight by a 0/1 (or small integer) count. Every
//! function here is pure over the supplied snapshot.

use std::io::Write;

use crate::board::BoardState;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::phase::PhaseKind;
use crate::scalar::{cast, wrap_angle, Real};
use crate::transition::{eval_transition, BodyId, KeyBodyPose, TransitionPlan};
use crate::truck::TruckGeometry;

/// Controllable joints of the humanoid.
pub const DOF: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootState<T> {
    /// Position in the skateboard frame (m).
    pub position: Vec3<T>,
    pub on_ground: bool,
    pub on_board: bool,
    /// Time since the foot last left a surface (s).
    pub air_time: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanoidSnapshot<T> {
    pub joint_angles: Vec<T>,
    pub joint_velocities: Vec<T>,
    pub joint_accelerations: Vec<T>,
    pub joint_torques: Vec<T>,
    pub action: Vec<T>,
    /// `[a_{t-1}, a_{t-2}]`.
    pub prev_actions: [Vec<T>; 2],
    pub base_yaw: T,
    pub left_foot: FootState<T>,
    pub right_foot: FootState<T>,
    pub left_ankle_height_variance: T,
    pub collision: bool,
    pub key_body_poses: Vec<KeyBodyPose<T>>,
    /// Motion-prior discriminator output for the current window, if any.
    pub discriminator_score: Option<T>,
}

impl<T: Real> HumanoidSnapshot<T> {
    /// Motionless robot at the zero joint configuration with zero actions.
    pub fn at_rest() -> Self {
        let z = vec![T::zero(); DOF];
        let foot = FootState {
            position: Vec3::zero(),
            on_ground: false,
            on_board: false,
            air_time: T::zero(),
        };
        Self {
            joint_angles: z.clone(),
            joint_velocities: z.clone(),
            joint_accelerations: z.clone(),
            joint_torques: z.clone(),
            action: z.clone(),
            prev_actions: [z.clone(), z],
            base_yaw: T::zero(),
            left_foot: foot,
            right_foot: foot,
            left_ankle_height_variance: T::zero(),
            collision: false,
            key_body_poses: Vec::new(),
            discriminator_score: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vectors = [
            ("joint_angles", &self.joint_angles),
            ("joint_velocities", &self.joint_velocities),
            ("joint_accelerations", &self.joint_accelerations),
            ("joint_torques", &self.joint_torques),
            ("action", &self.action),
            ("prev_actions[0]", &self.prev_actions[0]),
            ("prev_actions[1]", &self.prev_actions[1]),
        ];
        for (name, v) in vectors {
            if v.len() != DOF {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} entries, expected {DOF}",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> JointLimits<T> {
    pub fn symmetric(bound: T) -> Self {
        Self {
            lower: vec![-bound; DOF],
            upper: vec![bound; DOF],
        }
    }

    pub fn violations(&self, q: &[T]) -> Result<usize> {
        if self.lower.len() != DOF || self.upper.len() != DOF || q.len() != DOF {
            return Err(Error::DimensionMismatch(
                "joint limits and angles must have 23 entries".into(),
            ));
        }
        Ok(q.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(q, (lo, hi))| **q < **lo || **q > **hi)
            .count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights<T> {
    pub velocity: T,
    pub yaw_alignment: T,
    pub air_time: T,
    pub ankle_parallel: T,
    /// Applied on top of the style scale, so 1.0 leaves it unchanged.
    pub style: T,
    pub steer_contact: T,
    pub joint_deviation: T,
    pub heading: T,
    pub tilt: T,
    pub marker: T,
    pub keybody_position: T,
    pub keybody_orientation: T,
    pub wheel_contact: T,
    pub joint_limits: T,
    pub joint_velocity: T,
    pub joint_acceleration: T,
    pub torque: T,
    pub action_rate: T,
    pub action_smoothness: T,
    pub collision: T,
}

impl<T: Real> Default for RewardWeights<T> {
    fn default() -> Self {
        Self {
            velocity: cast(3.0),
            yaw_alignment: cast(1.0),
            air_time: cast(3.0),
            ankle_parallel: cast(0.5),
            style: cast(1.0),
            steer_contact: cast(3.0),
            joint_deviation: cast(1.5),
            heading: cast(5.0),
            tilt: cast(4.0),
            marker: cast(1.0),
            keybody_position: cast(10.0),
            keybody_orientation: cast(10.0),
            wheel_contact: cast(0.5),
            joint_limits: cast(-5.0),
            joint_velocity: cast(-1e-3),
            joint_acceleration: cast(-2.5e-7),
            torque: cast(-1e-6),
            action_rate: cast(-0.1),
            action_smoothness: cast(-0.1),
            collision: cast(-10.0),
        }
    }
}

/// Kernel widths of the exponential tracking terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub velocity: T,
    pub yaw: T,
    pub heading: T,
    pub tilt: T,
    pub joint_position: T,
    pub marker: T,
    pub position: T,
    pub rotation: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            velocity: cast(0.25),
            yaw: cast(0.25),
            heading: cast(0.25),
            tilt: cast(0.05),
            joint_position: cast(0.5),
            marker: cast(0.1),
            position: cast(0.1),
            rotation: cast(0.3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirTimeWindow<T> {
    pub min: T,
    pub max: T,
    /// Air time is only rewarded when the commanded speed exceeds this.
    pub speed_threshold: T,
}

impl<T: Real> Default for AirTimeWindow<T> {
    fn default() -> Self {
        Self {
            min: cast(0.2),
            max: cast(0.6),
            speed_threshold: cast(0.2),
        }
    }
}

/// Preferred foot placements above the trucks, in the skateboard frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootMarkers<T> {
    /// Right foot target.
    pub front: Vec3<T>,
    /// Left foot target.
    pub rear: Vec3<T>,
}

impl<T: Real> FootMarkers<T> {
    pub fn above_trucks(geom: &TruckGeometry<T>, height: T) -> Self {
        let half = geom.wheelbase / cast(2.0);
        Self {
            front: Vec3::new(half, T::zero(), height),
            rear: Vec3::new(-half, T::zero(), height),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig<T> {
    pub weights: RewardWeights<T>,
    pub tolerances: Tolerances<T>,
    /// Style scale alpha of the motion-prior reward.
    pub style_scale: T,
    pub air_time: AirTimeWindow<T>,
    pub ankle_variance_threshold: T,
    /// Nominal steering joint configuration.
    pub nominal_pose: Vec<T>,
    pub markers: FootMarkers<T>,
}

impl<T: Real> RewardConfig<T> {
    pub fn for_geometry(geom: &TruckGeometry<T>) -> Self {
        Self {
            weights: RewardWeights::default(),
            tolerances: Tolerances::default(),
            style_scale: cast(5.0),
            air_time: AirTimeWindow::default(),
            ankle_variance_threshold: cast(0.05),
            nominal_pose: vec![T::zero(); DOF],
            markers: FootMarkers::above_trucks(geom, cast(0.02)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("velocity", t.velocity),
            ("yaw", t.yaw),
            ("heading", t.heading),
            ("tilt", t.tilt),
            ("joint_position", t.joint_position),
            ("marker", t.marker),
            ("position", t.position),
            ("rotation", t.rotation),
        ] {
            if !(v > T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        if self.nominal_pose.len() != DOF {
            return Err(Error::DimensionMismatch(format!(
                "nominal pose has {} entries, expected {DOF}",
                self.nominal_pose.len()
            )));
        }
        if !(self.air_time.max >= self.air_time.min) {
            return Err(Error::InvalidArgument("air-time window is empty".into()));
        }
        Ok(())
    }
}

impl<T: Real> Default for RewardConfig<T> {
    fn default() -> Self {
        Self::for_geometry(&TruckGeometry::default())
    }
}

/// Commanded quantities seen by the phase rewards.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseCommands<T> {
    pub v_cmd: T,
    pub psi_target: T,
    pub gamma_ref: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerm<T> {
    pub name: &'static str,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown<T> {
    pub terms: Vec<RewardTerm<T>>,
}

pub const REWARD_CSV_HEADER: &str = "t,phase,term,value";

impl<T: Real> RewardBreakdown<T> {
    fn new() -> Self {
        Self { terms: Vec::new() }
    }

    fn push(&mut self, name: &'static str, value: T) {
        self.terms.push(RewardTerm { name, value });
    }

    pub fn total(&self) -> T {
        self.terms.iter().fold(T::zero(), |a, t| a + t.value)
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    /// One `t,phase,term,value` row per term.
    pub fn write_csv_rows<W: Write>(&self, t: T, phase: &str, out: &mut W) -> Result<()> {
        for term in &self.terms {
            writeln!(out, "{t},{phase},{},{}", term.name, term.value)?;
        }
        Ok(())
    }
}

fn kernel<T: Real>(err_sq: T, sigma: T) -> T {
    (-err_sq / (sigma * sigma)).exp()
}

fn indicator<T: Real>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

fn sq_norm<T: Real>(v: impl Iterator<Item = T>) -> T {
    v.fold(T::zero(), |a, x| a + x * x)
}

/// Bounded style reward `alpha * max(0, 1 - (d - 1)^2 / 4)`.
pub fn style_reward<T: Real>(score: T, alpha: T) -> T {
    let e = score - T::one();
    alpha * (T::one() - cast::<T>(0.25) * e * e).max(T::zero())
}

/// Least-squares discriminator objective to minimise:
/// `mean((D_expert - 1)^2) + mean((D_policy + 1)^2)`. The gradient
/// penalty is not included.
pub fn discriminator_ls_loss<T: Real>(expert_scores: &[T], policy_scores: &[T]) -> Result<T> {
    if expert_scores.is_empty() || policy_scores.is_empty() {
        return Err(Error::InvalidArgument(
            "score sequences must be non-empty".into(),
        ));
    }
    let mean = |v: &[T], target: T| {
        v.iter()
            .fold(T::zero(), |a, d| a + (*d - target) * (*d - target))
            / T::from_usize(v.len()).unwrap()
    };
    Ok(mean(expert_scores, T::one()) + mean(policy_scores, -T::one()))
}

fn pose_of<T: Real>(poses: &[KeyBodyPose<T>], body: BodyId) -> Result<&KeyBodyPose<T>> {
    poses
        .iter()
        .find(|p| p.body == body)
        .ok_or_else(|| Error::DimensionMismatch(format!("snapshot lacks key body {body}")))
}

/// Phase-specific reward terms for the active phase.
pub fn evaluate_phase_rewards<T: Real>(
    kind: PhaseKind,
    humanoid: &HumanoidSnapshot<T>,
    board: &BoardState<T>,
    commands: &PhaseCommands<T>,
    plan: Option<&TransitionPlan<T>>,
    t: T,
    cfg: &RewardConfig<T>,
) -> Result<RewardBreakdown<T>> {
    humanoid.validate()?;
    cfg.validate()?;
    match (kind.is_transition(), plan.is_some()) {
        (true, false) => {
            return Err(Error::InvalidArgument(format!(
                "{kind} phase requires a transition plan"
            )))
        }
        (false, true) => {
            return Err(Error::InvalidArgument(format!(
                "{kind} phase takes no transition plan"
            )))
        }
        _ => {}
    }
    let w = &cfg.weights;
    let tol = &cfg.tolerances;
    let mut out = RewardBreakdown::new();
    match kind {
        PhaseKind::Pushing => {
            let dv = board.speed - commands.v_cmd;
            out.push(
                "linear_velocity",
                w.velocity * kernel(dv * dv, tol.velocity),
            );
            let dyaw = wrap_angle(humanoid.base_yaw - board.heading);
            out.push(
                "yaw_alignment",
                w.yaw_alignment * kernel(dyaw * dyaw, tol.yaw),
            );
            let air = humanoid.left_foot.air_time;
            let air_ok = air >= cfg.air_time.min && air <= cfg.air_time.max;
            let moving = commands.v_cmd > cfg.air_time.speed_threshold;
            out.push(
                "feet_air_time",
                w.air_time * indicator::<T>(air_ok && moving),
            );
            let parallel = humanoid.left_ankle_height_variance < cfg.ankle_variance_threshold
                && humanoid.left_foot.on_ground;
            out.push(
                "ankle_parallel",
                w.ankle_parallel * indicator::<T>(parallel),
            );
            let style = humanoid
                .discriminator_score
                .map_or(T::zero(), |d| style_reward(d, cfg.style_scale));
            out.push("amp_style", w.style * style);
        }
        PhaseKind::Steering => {
            let both = humanoid.left_foot.on_board && humanoid.right_foot.on_board;
            let contact = cast::<T>(2.0) * indicator::<T>(both)
                - indicator::<T>(humanoid.left_foot.on_ground);
            out.push("steer_feet_contact", w.steer_contact * contact);
            let dev = sq_norm(
                humanoid
                    .joint_angles
                    .iter()
                    .zip(&cfg.nominal_pose)
                    .map(|(q, n)| *q - *n),
            );
            out.push(
                "joint_position_deviation",
                w.joint_deviation * kernel(dev, tol.joint_position),
            );
            let dpsi = wrap_angle(board.heading - commands.psi_target);
            out.push(
                "heading_tracking",
                w.heading * kernel(dpsi * dpsi, tol.heading),
            );
            let dg = board.tilt - commands.gamma_ref;
            out.push("board_tilt_tracking", w.tilt * kernel(dg * dg, tol.tilt));
            let marker_err = (humanoid.right_foot.position - cfg.markers.front).norm_squared()
                + (humanoid.left_foot.position - cfg.markers.rear).norm_squared();
            out.push(
                "feet_marker_distance",
                w.marker * kernel(marker_err, tol.marker),
            );
        }
        PhaseKind::MountTransition | PhaseKind::DismountTransition => {
            let planned = eval_transition(plan.expect("checked above"), t)?;
            let (mut pos_err, mut rot_err) = (T::zero(), T::zero());
            for target in &planned {
                let actual = pose_of(&humanoid.key_body_poses, target.body)?;
                pos_err = pos_err + (actual.position - target.position).norm_squared();
                let angle = actual.orientation.angle_to(target.orientation);
                rot_err = rot_err + angle * angle;
            }
            out.push(
                "keybody_position",
                w.keybody_position * kernel(pos_err, tol.position),
            );
            out.push(
                "keybody_orientation",
                w.keybody_orientation * kernel(rot_err, tol.rotation),
            );
        }
    }
    Ok(out)
}

/// Always-on regularisation terms.
pub fn evaluate_regularization<T: Real>(
    humanoid: &HumanoidSnapshot<T>,
    wheel_contacts: [bool; 4],
    limits: &JointLimits<T>,
    cfg: &RewardConfig<T>,
) -> Result<RewardBreakdown<T>> {
    humanoid.validate()?;
    let w = &cfg.weights;
    let h = humanoid;
    let mut out = RewardBreakdown::new();
    out.push(
        "wheel_contact",
        w.wheel_contact * indicator::<T>(wheel_contacts.iter().all(|c| *c)),
    );
    let violations = T::from_usize(limits.violations(&h.joint_angles)?).unwrap();
    out.push("joint_limits", w.joint_limits * violations);
    out.push(
        "joint_velocity",
        w.joint_velocity * sq_norm(h.joint_velocities.iter().copied()),
    );
    out.push(
        "joint_acceleration",
        w.joint_acceleration * sq_norm(h.joint_accelerations.iter().copied()),
    );
    out.push(
        "joint_torque",
        w.torque * sq_norm(h.joint_torques.iter().copied()),
    );
    let [prev, prev2] = &h.prev_actions;
    let rate = sq_norm(h.action.iter().zip(prev).map(|(a, b)| *a - *b));
    out.push("action_rate", w.action_rate * rate);
    let two: T = cast(2.0);
    let smooth = sq_norm(
        h.action
            .iter()
            .zip(prev.iter().zip(prev2))
            .map(|(a, (b, c))| *a - two * *b + *c),
    );
    out.push("action_smoothness", w.action_smoothness * smooth);
    out.push("collision", w.collision * indicator::<T>(h.collision));
    Ok(out)
}
