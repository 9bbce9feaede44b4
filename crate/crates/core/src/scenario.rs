//! Scenario configuration and orchestration.
//!
//! A scenario glides the board through the phase cycle at a prescribed
//! speed profile. During steering phases the tilt reference is recomputed
//! at every control step for the heading error still outstanding and the
//! time left in the phase, and the deck is driven towards it through the
//! tilt spring-damper. A synthetic humanoid supplies the snapshots the
//! reward terms are evaluated on.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::board::{step_planar, step_tilt, BoardState, TiltModel, Trajectory};
use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::phase::{dispatch_reward, PhaseKind, PhaseSchedule};
use crate::randomization::{DomainRandomizer, DrDraw, DrRanges, Range};
use crate::reward::{
    evaluate_phase_rewards, evaluate_regularization, FootState, HumanoidSnapshot, JointLimits,
    PhaseCommands, RewardBreakdown, RewardConfig, RewardTerm, DOF, REWARD_CSV_HEADER,
};
use crate::scalar::wrap_angle;
use crate::steering::{heading_error, tilt_reference, SteeringCommand};
use crate::sysid::{identify, FreeDecayTrace, PeakDetection};
use crate::transition::{
    eval_transition, parse_poses, plan_transition, pushing_reference_pose, steering_reference_pose,
    ControlPointPolicy, KeyBodyPose, TransitionPlan,
};
use crate::truck::TruckGeometry;

/// Board speed as piecewise-constant segments `(start time, speed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    segments: Vec<(f64, f64)>,
}

impl SpeedProfile {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.first().map(|s| s.0) != Some(0.0) {
            return Err(Error::InvalidArgument(
                "speed profile must start at t = 0".into(),
            ));
        }
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument(
                "speed segment starts must increase".into(),
            ));
        }
        if segments.iter().any(|s| !(s.1 >= 0.0)) {
            return Err(Error::InvalidArgument(
                "segment speeds must be non-negative".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn constant(speed: f64) -> Self {
        Self {
            segments: vec![(0.0, speed)],
        }
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .rev()
            .find(|(start, _)| *start <= t)
            .map_or(self.segments[0].1, |s| s.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticHumanoidConfig {
    /// Uniform joint-angle jitter amplitude (rad).
    pub joint_noise: f64,
    /// Duration of one push stroke of the left foot (s).
    pub push_stroke: f64,
    /// Fraction of a stroke the pushing foot spends on the ground.
    pub ground_fraction: f64,
}

impl Default for SyntheticHumanoidConfig {
    fn default() -> Self {
        Self {
            joint_noise: 0.005,
            push_stroke: 1.0,
            ground_fraction: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputPaths {
    pub trajectory: Option<PathBuf>,
    pub rewards: Option<PathBuf>,
}

impl OutputPaths {
    /// Re-roots relative paths under `dir`.
    pub fn rebased(&self, dir: &Path) -> Self {
        let fix = |p: &Option<PathBuf>| {
            p.as_ref().map(|p| {
                if p.is_absolute() {
                    p.clone()
                } else {
                    dir.join(p)
                }
            })
        };
        Self {
            trajectory: fix(&self.trajectory),
            rewards: fix(&self.rewards),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: TruckGeometry<f64>,
    pub tilt_model: TiltModel<f64>,
    pub schedule: PhaseSchedule<f64>,
    pub steering: SteeringCommand<f64>,
    pub speed: SpeedProfile,
    pub v_cmd: f64,
    pub reward: RewardConfig<f64>,
    pub joint_limits: JointLimits<f64>,
    pub randomization: DrRanges,
    pub humanoid: SyntheticHumanoidConfig,
    pub push_reference: Vec<KeyBodyPose<f64>>,
    pub steer_reference: Vec<KeyBodyPose<f64>>,
    pub control_points: ControlPointPolicy<f64>,
    pub dt: f64,
    pub control_dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub initial: BoardState<f64>,
    pub outputs: OutputPaths,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let geometry = TruckGeometry::default();
        Self {
            geometry,
            tilt_model: TiltModel::standard_board(),
            schedule: PhaseSchedule::default(),
            steering: SteeringCommand::default(),
            speed: SpeedProfile::constant(1.0),
            v_cmd: 1.0,
            reward: RewardConfig::for_geometry(&geometry),
            joint_limits: JointLimits::symmetric(2.5),
            randomization: DrRanges::default(),
            humanoid: SyntheticHumanoidConfig::default(),
            push_reference: pushing_reference_pose(),
            steer_reference: steering_reference_pose(),
            control_points: ControlPointPolicy::default(),
            dt: 0.002,
            control_dt: 0.02,
            duration: 6.0,
            seed: 0,
            initial: BoardState::at_rest(),
            outputs: OutputPaths::default(),
        }
    }
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "geometry",
        &["rake", "truck_height", "half_width", "wheelbase"],
    ),
    (
        "tilt",
        &["inertia", "stiffness", "damping", "trace", "noise_floor"],
    ),
    ("schedule", &["cycle", "fractions"]),
    (
        "steering",
        &["target_heading", "horizon", "min_speed", "lean_limit"],
    ),
    ("speed", &["segments", "command"]),
    (
        "reward",
        &[
            "weight.*",
            "sigma.*",
            "style_scale",
            "air_time_min",
            "air_time_max",
            "air_speed_threshold",
            "ankle_variance_threshold",
            "marker_height",
            "joint_limit",
        ],
    ),
    (
        "randomization",
        &[
            "robot_com",
            "board_com",
            "root_position",
            "joint_position",
            "push_base_velocity",
            "body_friction",
            "deck_friction",
        ],
    ),
    (
        "humanoid",
        &["joint_noise", "push_stroke", "ground_fraction"],
    ),
    ("transition", &["push_pose", "steer_pose", "foot_lift"]),
    (
        "sim",
        &[
            "dt",
            "control_dt",
            "duration",
            "seed",
            "initial_heading",
            "initial_x",
            "initial_y",
        ],
    ),
    ("output", &["trajectory", "rewards"]),
];

fn is_multiple(value: f64, step: f64) -> bool {
    let n = (value / step).round();
    (n * step - value).abs() <= 1e-9 * value.abs().max(1.0)
}

impl ScenarioConfig {
    /// Loads a scenario file. Input paths inside it are resolved relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, source: &str, base_dir: &Path) -> Result<Self> {
        let doc = ConfigDocument::parse(text, source)?;
        doc.check_known(KNOWN_KEYS)?;
        let mut cfg = ScenarioConfig::default();
        let at = |section: &str, key: &str| doc.raw(section, key).map_or(1, |(_, l)| l);
        let wrap = |section: &str, key: &str, e: Error| match e {
            Error::Parse { .. } => e,
            other => doc.error(at(section, key), &other.to_string()),
        };

        let g = &mut cfg.geometry;
        g.rake = doc.f64_or("geometry", "rake", g.rake)?;
        g.truck_height = doc.f64_or("geometry", "truck_height", g.truck_height)?;
        g.half_width = doc.f64_or("geometry", "half_width", g.half_width)?;
        g.wheelbase = doc.f64_or("geometry", "wheelbase", g.wheelbase)?;
        g.validate().map_err(|e| wrap("geometry", "rake", e))?;

        if let Some((trace_path, line)) = doc.raw("tilt", "trace") {
            let inertia = doc
                .f64("tilt", "inertia")?
                .ok_or_else(|| doc.error(line, "`trace` requires `inertia`"))?;
            let full = base_dir.join(trace_path);
            let file = fs::File::open(&full).map_err(|e| {
                doc.error(line, &format!("cannot open trace {}: {e}", full.display()))
            })?;
            let trace = FreeDecayTrace::read_csv(file, &full.display().to_string())?;
            let detect = PeakDetection {
                noise_floor: doc.f64_or("tilt", "noise_floor", 1e-4)?,
                ..PeakDetection::default()
            };
            let id =
                identify(&trace, inertia, &detect).map_err(|e| doc.error(line, &e.to_string()))?;
            cfg.tilt_model = id
                .tilt_model(inertia)
                .map_err(|e| doc.error(line, &e.to_string()))?;
        } else {
            let m = cfg.tilt_model;
            cfg.tilt_model = TiltModel::new(
                doc.f64_or("tilt", "inertia", m.inertia)?,
                doc.f64_or("tilt", "stiffness", m.stiffness)?,
                doc.f64_or("tilt", "damping", m.damping)?,
            )
            .map_err(|e| wrap("tilt", "inertia", e))?;
        }

        cfg.schedule.cycle = doc.f64_or("schedule", "cycle", cfg.schedule.cycle)?;
        if let Some((f, line)) = doc.f64_list("schedule", "fractions")? {
            let arr: [f64; 4] = f
                .try_into()
                .map_err(|_| doc.error(line, "`fractions` expects four values"))?;
            cfg.schedule.fractions = arr;
        }
        cfg.schedule
            .validate()
            .map_err(|e| wrap("schedule", "fractions", e))?;

        let s = &mut cfg.steering;
        s.target_heading = doc.f64_or("steering", "target_heading", s.target_heading)?;
        s.horizon = doc.f64_or("steering", "horizon", s.horizon)?;
        s.min_speed_clip = doc.f64_or("steering", "min_speed", s.min_speed_clip)?;
        s.lean_limit = doc.f64_or("steering", "lean_limit", s.lean_limit)?;
        s.validate()
            .map_err(|e| wrap("steering", "lean_limit", e))?;

        if let Some((seg, line)) = doc.raw("speed", "segments") {
            let mut segments = Vec::new();
            for item in seg.split(',') {
                let (t, v) = item.split_once(':').ok_or_else(|| {
                    doc.error(
                        line,
                        &format!("segment `{}` is not `start:speed`", item.trim()),
                    )
                })?;
                segments.push((
                    doc.parse_f64(t.trim(), line, "segments")?,
                    doc.parse_f64(v.trim(), line, "segments")?,
                ));
            }
            cfg.speed = SpeedProfile::new(segments).map_err(|e| doc.error(line, &e.to_string()))?;
        }
        cfg.v_cmd = doc.f64_or("speed", "command", cfg.speed.speed_at(0.0))?;

        parse_reward(&doc, &mut cfg)?;
        parse_randomization(&doc, &mut cfg.randomization)?;

        let h = &mut cfg.humanoid;
        h.joint_noise = doc.f64_or("humanoid", "joint_noise", h.joint_noise)?;
        h.push_stroke = doc.f64_or("humanoid", "push_stroke", h.push_stroke)?;
        h.ground_fraction = doc.f64_or("humanoid", "ground_fraction", h.ground_fraction)?;
        if !(h.joint_noise >= 0.0
            && h.push_stroke > 0.0
            && (0.0..=1.0).contains(&h.ground_fraction))
        {
            return Err(doc.error(
                at("humanoid", "push_stroke"),
                "invalid synthetic humanoid settings",
            ));
        }

        for (key, slot) in [
            ("push_pose", &mut cfg.push_reference),
            ("steer_pose", &mut cfg.steer_reference),
        ] {
            if let Some((p, line)) = doc.raw("transition", key) {
                let full = base_dir.join(p);
                let text = fs::read_to_string(&full).map_err(|e| {
                    doc.error(line, &format!("cannot read poses {}: {e}", full.display()))
                })?;
                *slot = parse_poses(&text, &full.display().to_string())?;
            }
        }
        cfg.control_points.foot_lift =
            doc.f64_or("transition", "foot_lift", cfg.control_points.foot_lift)?;

        cfg.dt = doc.f64_or("sim", "dt", cfg.dt)?;
        cfg.control_dt = doc.f64_or("sim", "control_dt", cfg.control_dt)?;
        cfg.duration = doc.f64_or("sim", "duration", cfg.duration)?;
        cfg.seed = doc.u64_or("sim", "seed", cfg.seed)?;
        cfg.initial.heading = wrap_angle(doc.f64_or("sim", "initial_heading", 0.0)?);
        cfg.initial.x = doc.f64_or("sim", "initial_x", 0.0)?;
        cfg.initial.y = doc.f64_or("sim", "initial_y", 0.0)?;

        cfg.outputs.trajectory = doc
            .raw("output", "trajectory")
            .map(|(p, _)| PathBuf::from(p));
        cfg.outputs.rewards = doc.raw("output", "rewards").map(|(p, _)| PathBuf::from(p));

        cfg.validate().map_err(|e| wrap("sim", "dt", e))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.schedule.validate()?;
        self.steering.validate()?;
        self.reward.validate()?;
        self.randomization.validate()?;
        if !(self.dt > 0.0) || !(self.control_dt > 0.0) || !(self.duration > 0.0) {
            return Err(Error::InvalidArgument(
                "dt, control_dt and duration must be positive".into(),
            ));
        }
        if !is_multiple(self.control_dt, self.dt) {
            return Err(Error::InvalidArgument(format!(
                "control_dt {} is not a multiple of dt {}",
                self.control_dt, self.dt
            )));
        }
        if let Some((start, _)) = self
            .speed
            .segments()
            .iter()
            .find(|(s, _)| !is_multiple(*s, self.dt))
        {
            return Err(Error::InvalidArgument(format!(
                "speed segment start {start} is not a multiple of dt {}",
                self.dt
            )));
        }
        if !(self.v_cmd >= 0.0) {
            return Err(Error::InvalidArgument(
                "commanded speed must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn parse_reward(doc: &ConfigDocument, cfg: &mut ScenarioConfig) -> Result<()> {
    let r = &mut cfg.reward;
    {
        let w = &mut r.weights;
        let mut slots: Vec<(&str, &mut f64)> = vec![
            ("velocity", &mut w.velocity),
            ("yaw_alignment", &mut w.yaw_alignment),
            ("air_time", &mut w.air_time),
            ("ankle_parallel", &mut w.ankle_parallel),
            ("style", &mut w.style),
            ("steer_contact", &mut w.steer_contact),
            ("joint_deviation", &mut w.joint_deviation),
            ("heading", &mut w.heading),
            ("tilt", &mut w.tilt),
            ("marker", &mut w.marker),
            ("keybody_position", &mut w.keybody_position),
            ("keybody_orientation", &mut w.keybody_orientation),
            ("wheel_contact", &mut w.wheel_contact),
            ("joint_limits", &mut w.joint_limits),
            ("joint_velocity", &mut w.joint_velocity),
            ("joint_acceleration", &mut w.joint_acceleration),
            ("torque", &mut w.torque),
            ("action_rate", &mut w.action_rate),
            ("action_smoothness", &mut w.action_smoothness),
            ("collision", &mut w.collision),
        ];
        assign_named(doc, "weight.", &mut slots)?;
    }
    {
        let t = &mut r.tolerances;
        let mut slots: Vec<(&str, &mut f64)> = vec![
            ("velocity", &mut t.velocity),
            ("yaw", &mut t.yaw),
            ("heading", &mut t.heading),
            ("tilt", &mut t.tilt),
            ("joint_position", &mut t.joint_position),
            ("marker", &mut t.marker),
            ("position", &mut t.position),
            ("rotation", &mut t.rotation),
        ];
        assign_named(doc, "sigma.", &mut slots)?;
    }
    r.style_scale = doc.f64_or("reward", "style_scale", r.style_scale)?;
    r.air_time.min = doc.f64_or("reward", "air_time_min", r.air_time.min)?;
    r.air_time.max = doc.f64_or("reward", "air_time_max", r.air_time.max)?;
    r.air_time.speed_threshold =
        doc.f64_or("reward", "air_speed_threshold", r.air_time.speed_threshold)?;
    r.ankle_variance_threshold = doc.f64_or(
        "reward",
        "ankle_variance_threshold",
        r.ankle_variance_threshold,
    )?;
    let marker_height = doc.f64_or("reward", "marker_height", r.markers.front.z)?;
    r.markers = crate::reward::FootMarkers::above_trucks(&cfg.geometry, marker_height);
    if let Some(bound) = doc.f64("reward", "joint_limit")? {
        cfg.joint_limits = JointLimits::symmetric(bound);
    }
    r.validate().map_err(|e| doc.error(1, &e.to_string()))
}

fn assign_named(doc: &ConfigDocument, prefix: &str, slots: &mut [(&str, &mut f64)]) -> Result<()> {
    for (name, value, line) in doc.keys_with_prefix("reward", prefix) {
        let slot = slots
            .iter_mut()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| doc.error(line, &format!("unknown reward entry `{prefix}{name}`")))?;
        *slot.1 = doc.parse_f64(value, line, name)?;
    }
    Ok(())
}

fn parse_randomization(doc: &ConfigDocument, r: &mut DrRanges) -> Result<()> {
    let symmetric = [
        ("robot_com", &mut r.robot_com),
        ("board_com", &mut r.board_com),
        ("root_position", &mut r.root_position),
        ("joint_position", &mut r.joint_position),
    ];
    for (key, slot) in symmetric {
        if let Some(h) = doc.f64("randomization", key)? {
            *slot = Range::symmetric(h.abs());
        }
    }
    let bounded = [
        ("push_base_velocity", &mut r.push_base_velocity),
        ("body_friction", &mut r.body_friction),
        ("deck_friction", &mut r.deck_friction),
    ];
    for (key, slot) in bounded {
        if let Some((v, line)) = doc.f64_list("randomization", key)? {
            if v.len() != 2 || v[0] > v[1] {
                return Err(doc.error(line, &format!("`{key}` expects `lower, upper`")));
            }
            *slot = Range::new(v[0], v[1]);
        }
    }
    Ok(())
}

/// Deterministic stand-in for the humanoid: nominal joints with seeded
/// jitter, scripted foot contacts per phase and perfect key-body tracking.
struct SyntheticHumanoid {
    rng: ChaCha8Rng,
    nominal: Vec<f64>,
    cfg: SyntheticHumanoidConfig,
    control_dt: f64,
    prev_angles: Option<Vec<f64>>,
    prev_velocities: Vec<f64>,
    prev_actions: [Vec<f64>; 2],
}

impl SyntheticHumanoid {
    fn new(seed: u64, draw: &DrDraw, scenario: &ScenarioConfig) -> Self {
        let nominal = scenario
            .reward
            .nominal_pose
            .iter()
            .zip(&draw.joint_position)
            .map(|(n, o)| n + o)
            .collect();
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_fa11),
            nominal,
            cfg: scenario.humanoid.clone(),
            control_dt: scenario.control_dt,
            prev_angles: None,
            prev_velocities: vec![0.0; DOF],
            prev_actions: [vec![0.0; DOF], vec![0.0; DOF]],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn snapshot(
        &mut self,
        kind: PhaseKind,
        t: f64,
        phase_start: f64,
        board: &BoardState<f64>,
        plan: Option<&TransitionPlan<f64>>,
        scenario: &ScenarioConfig,
    ) -> Result<HumanoidSnapshot<f64>> {
        let noise = self.cfg.joint_noise;
        let angles: Vec<f64> = self
            .nominal
            .iter()
            .map(|n| {
                if noise > 0.0 {
                    n + self.rng.gen_range(-noise..=noise)
                } else {
                    *n
                }
            })
            .collect();
        let velocities: Vec<f64> = match &self.prev_angles {
            Some(prev) => angles
                .iter()
                .zip(prev)
                .map(|(a, p)| (a - p) / self.control_dt)
                .collect(),
            None => vec![0.0; DOF],
        };
        let accelerations = velocities
            .iter()
            .zip(&self.prev_velocities)
            .map(|(v, p)| (v - p) / self.control_dt)
            .collect();

        let markers = scenario.reward.markers;
        let on_board = |position: Vec3<f64>| FootState {
            position,
            on_ground: false,
            on_board: true,
            air_time: 0.0,
        };
        let lifted = |air_time: f64| FootState {
            position: Vec3::new(markers.rear.x, 0.25, 0.08),
            on_ground: false,
            on_board: false,
            air_time,
        };
        let elapsed = (t - phase_start).max(0.0);
        let (left_foot, right_foot) = match kind {
            PhaseKind::Pushing => {
                let stroke = self.cfg.push_stroke;
                let into = elapsed % stroke;
                let ground = self.cfg.ground_fraction * stroke;
                let left = if into < ground {
                    FootState {
                        position: Vec3::new(markers.rear.x, 0.25, 0.0),
                        on_ground: true,
                        on_board: false,
                        air_time: 0.0,
                    }
                } else {
                    lifted(into - ground)
                };
                (left, on_board(markers.front))
            }
            PhaseKind::Steering => (on_board(markers.rear), on_board(markers.front)),
            PhaseKind::MountTransition | PhaseKind::DismountTransition => {
                (lifted(elapsed), on_board(markers.front))
            }
        };

        let key_body_poses = match (kind, plan) {
            (_, Some(plan)) => eval_transition(plan, t.clamp(plan.t0, plan.tf))?,
            (PhaseKind::Steering, None) => scenario.steer_reference.clone(),
            _ => scenario.push_reference.clone(),
        };

        let action = angles.clone();
        let snapshot = HumanoidSnapshot {
            joint_angles: angles.clone(),
            joint_velocities: velocities.clone(),
            joint_accelerations: accelerations,
            joint_torques: vec![0.0; DOF],
            action: action.clone(),
            prev_actions: self.prev_actions.clone(),
            base_yaw: board.heading,
            left_foot,
            right_foot,
            left_ankle_height_variance: if left_foot.on_ground { 1e-3 } else { 0.0 },
            collision: false,
            key_body_poses,
            discriminator_score: (kind == PhaseKind::Pushing).then_some(1.0),
        };
        let [a1, _] = std::mem::take(&mut self.prev_actions);
        self.prev_actions = [action, a1];
        self.prev_velocities = velocities;
        self.prev_angles = Some(angles);
        Ok(snapshot)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardRow {
    pub time: f64,
    pub phase: PhaseKind,
    pub phase_terms: RewardBreakdown<f64>,
    pub regularization: RewardBreakdown<f64>,
    pub total: f64,
}

/// One contiguous steering phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringSegment {
    pub start: f64,
    pub end: f64,
    /// Heading change still required when the phase began.
    pub requested_change: f64,
    /// Unwrapped heading change over the phase.
    pub achieved_change: f64,
}

/// Summary metrics. `None` when the defining phase never occurred.
///
/// Success and contact rates need terminations and foot contacts from a
/// physics engine; the synthetic humanoid supplies neither, so they are
/// not reported.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMetrics {
    /// Mean |v_cmd - v_board| over pushing control steps.
    pub velocity_error: Option<f64>,
    /// Mean wrapped |psi_target - psi_board| over steering control steps.
    pub heading_error: Option<f64>,
    /// Mean per-step sum of absolute joint-angle changes.
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub trajectory: Trajectory<f64>,
    pub rewards: Vec<RewardRow>,
    pub metrics: RunMetrics,
    pub steering_segments: Vec<SteeringSegment>,
    pub randomization: DrDraw,
}

impl RunReport {
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        self.trajectory.write_csv(out)
    }

    /// Long-format reward breakdown; each control step ends with a `total`
    /// row equal to the dispatched reward.
    pub fn write_rewards_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{REWARD_CSV_HEADER}")?;
        for row in &self.rewards {
            let phase = row.phase.name();
            row.phase_terms.write_csv_rows(row.time, phase, &mut out)?;
            row.regularization
                .write_csv_rows(row.time, phase, &mut out)?;
            writeln!(out, "{},{phase},total,{}", row.time, row.total)?;
        }
        Ok(())
    }

    /// Writes whichever outputs are configured.
    pub fn write_outputs(&self, outputs: &OutputPaths) -> Result<()> {
        let create = |p: &Path| -> Result<fs::File> {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        };
        if let Some(p) = &outputs.trajectory {
            let mut f = std::io::BufWriter::new(create(p)?);
            self.write_trajectory_csv(&mut f)?;
            f.flush()?;
        }
        if let Some(p) = &outputs.rewards {
            let mut f = std::io::BufWriter::new(create(p)?);
            self.write_rewards_csv(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let mut s = format!(
            "steps            {}\nE_vel  (m/s)     {}\nE_yaw  (rad)     {}\nE_smth (rad)     {}\n",
            self.trajectory.len().saturating_sub(1),
            fmt(self.metrics.velocity_error),
            fmt(self.metrics.heading_error),
            fmt(self.metrics.smoothness),
        );
        for seg in &self.steering_segments {
            s.push_str(&format!(
                "steering [{:.3}, {:.3}] s: requested {:.6} rad, achieved {:.6} rad\n",
                seg.start, seg.end, seg.requested_change, seg.achieved_change
            ));
        }
        s
    }
}

struct ActivePlan {
    start: f64,
    plan: TransitionPlan<f64>,
}

struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn new() -> Self {
        Self { sum: 0.0, n: 0 }
    }
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }
    fn value(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Runs the scenario single-threaded. Identical configs give identical
/// reports.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let geom = &config.geometry;
    let steps = (config.duration / config.dt).round() as usize;
    let decimation = ((config.control_dt / config.dt).round() as usize).max(1);

    let draw = DomainRandomizer::new(config.seed).sample(&config.randomization)?;
    let mut humanoid = SyntheticHumanoid::new(config.seed, &draw, config);

    let mut state = BoardState {
        speed: config.speed.speed_at(0.0),
        ..config.initial
    };
    let mut trajectory = Trajectory::new(config.dt)?;
    trajectory.record(state, geom)?;

    let mut rewards = Vec::new();
    let mut segments = Vec::new();
    let mut open_segment: Option<(f64, f64, f64)> = None;
    let mut unwrapped_heading = state.heading;
    let mut current_plan: Option<ActivePlan> = None;
    let mut gamma_ref = 0.0;
    let (mut e_vel, mut e_yaw, mut e_smth) = (Mean::new(), Mean::new(), Mean::new());
    let mut prev_angles: Option<Vec<f64>> = None;

    for i in 0..steps {
        let t = i as f64 * config.dt;
        let (kind, start, end) = config.schedule.phase_window(t)?;
        state.speed = config.speed.speed_at(t);

        match (kind, open_segment) {
            (PhaseKind::Steering, None) => {
                let requested = heading_error(config.steering.target_heading, state.heading);
                open_segment = Some((t, unwrapped_heading, requested));
            }
            (PhaseKind::Steering, Some(_)) => {}
            (_, Some((s0, h0, requested))) => {
                segments.push(SteeringSegment {
                    start: s0,
                    end: t,
                    requested_change: requested,
                    achieved_change: unwrapped_heading - h0,
                });
                open_segment = None;
            }
            (_, None) => {}
        }

        if i % decimation == 0 {
            let plan = if kind.is_transition() {
                let stale = current_plan
                    .as_ref()
                    .is_none_or(|p| (p.start - start).abs() > config.dt / 2.0);
                if stale {
                    let (from, to) = match kind {
                        PhaseKind::MountTransition => {
                            (&config.push_reference, &config.steer_reference)
                        }
                        _ => (&config.steer_reference, &config.push_reference),
                    };
                    let plan = plan_transition(from, to, (start, end), &config.control_points)?;
                    current_plan = Some(ActivePlan { start, plan });
                }
                current_plan.as_ref().map(|p| &p.plan)
            } else {
                current_plan = None;
                None
            };

            gamma_ref = if kind == PhaseKind::Steering {
                let delta = heading_error(config.steering.target_heading, state.heading);
                let horizon = config.steering.horizon.min(end - t).max(config.control_dt);
                tilt_reference(
                    delta,
                    state.speed,
                    &config.steering.with_horizon(horizon),
                    geom,
                )
            } else {
                0.0
            };

            let snapshot = humanoid.snapshot(kind, t, start, &state, plan, config)?;
            let commands = PhaseCommands {
                v_cmd: config.v_cmd,
                psi_target: config.steering.target_heading,
                gamma_ref,
            };
            let eval_t = plan.map_or(t, |p| t.clamp(p.t0, p.tf));
            let phase_terms = evaluate_phase_rewards(
                kind,
                &snapshot,
                &state,
                &commands,
                plan,
                eval_t,
                &config.reward,
            )?;
            let regularization = evaluate_regularization(
                &snapshot,
                [true; 4],
                &config.joint_limits,
                &config.reward,
            )?;
            let r = phase_terms.total();
            let total = dispatch_reward(kind, r, r, r, regularization.total());
            rewards.push(RewardRow {
                time: t,
                phase: kind,
                phase_terms,
                regularization,
                total,
            });

            match kind {
                PhaseKind::Pushing => e_vel.add((config.v_cmd - state.speed).abs()),
                PhaseKind::Steering => {
                    e_yaw.add(heading_error(config.steering.target_heading, state.heading).abs())
                }
                _ => {}
            }
            if let Some(prev) = &prev_angles {
                let change: f64 = snapshot
                    .joint_angles
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                e_smth.add(change);
            }
            prev_angles = Some(snapshot.joint_angles);
        }

        let torque = config.tilt_model.stiffness * gamma_ref;
        let (tilt, tilt_rate) = step_tilt(
            state.tilt,
            state.tilt_rate,
            &config.tilt_model,
            torque,
            config.dt,
        )?;
        let mut next = step_planar(&state, state.tilt, geom, config.dt)?;
        next.tilt = tilt;
        next.tilt_rate = tilt_rate;
        if !next.is_finite() {
            return Err(Error::Diverged {
                step: i + 1,
                time: (i + 1) as f64 * config.dt,
            });
        }
        unwrapped_heading += wrap_angle(next.heading - state.heading);
        state = next;
        trajectory.record(state, geom)?;
    }

    if let Some((s0, h0, requested)) = open_segment {
        segments.push(SteeringSegment {
            start: s0,
            end: steps as f64 * config.dt,
            requested_change: requested,
            achieved_change: unwrapped_heading - h0,
        });
    }

    Ok(RunReport {
        trajectory,
        rewards,
        metrics: RunMetrics {
            velocity_error: e_vel.value(),
            heading_error: e_yaw.value(),
            smoothness: e_smth.value(),
        },
        steering_segments: segments,
        randomization: draw,
    })
}

/// Names of the reward terms a row carries, phase terms first.
pub fn reward_term_names(row: &RewardRow) -> Vec<&'static str> {
    row.phase_terms
        .terms
        .iter()
        .chain(&row.regularization.terms)
        .map(|t: &RewardTerm<f64>| t.name)
        .collect()
}
