//! Key-body transition trajectories: Bézier curves for positions and
//! slerp for orientations, parameterised by `s = (t - t0) / (tf - t0)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Quat, Vec3};
use crate::scalar::{cast, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BodyId {
    Pelvis,
    Torso,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
}

impl BodyId {
    pub const ALL: [BodyId; 14] = [
        BodyId::Pelvis,
        BodyId::Torso,
        BodyId::LeftHip,
        BodyId::RightHip,
        BodyId::LeftKnee,
        BodyId::RightKnee,
        BodyId::LeftAnkle,
        BodyId::RightAnkle,
        BodyId::LeftShoulder,
        BodyId::RightShoulder,
        BodyId::LeftElbow,
        BodyId::RightElbow,
        BodyId::LeftWrist,
        BodyId::RightWrist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyId::Pelvis => "pelvis",
            BodyId::Torso => "torso",
            BodyId::LeftHip => "left_hip",
            BodyId::RightHip => "right_hip",
            BodyId::LeftKnee => "left_knee",
            BodyId::RightKnee => "right_knee",
            BodyId::LeftAnkle => "left_ankle",
            BodyId::RightAnkle => "right_ankle",
            BodyId::LeftShoulder => "left_shoulder",
            BodyId::RightShoulder => "right_shoulder",
            BodyId::LeftElbow => "left_elbow",
            BodyId::RightElbow => "right_elbow",
            BodyId::LeftWrist => "left_wrist",
            BodyId::RightWrist => "right_wrist",
        }
    }

    pub fn is_foot(self) -> bool {
        matches!(self, BodyId::LeftAnkle | BodyId::RightAnkle)
    }
}

impl fmt::Display for BodyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BodyId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown body `{s}`")))
    }
}

/// Pose of a key body in the skateboard frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyBodyPose<T> {
    pub body: BodyId,
    pub position: Vec3<T>,
    pub orientation: Quat<T>,
}

fn binomial<T: Real>(n: usize, k: usize) -> T {
    let mut c = T::one();
    for i in 0..k {
        c = c * T::from_usize(n - i).unwrap() / T::from_usize(i + 1).unwrap();
    }
    c
}

fn check_window<T: Real>(t0: T, tf: T) -> Result<()> {
    if !(tf > t0) {
        return Err(Error::InvalidArgument(format!(
            "window end {tf} not after start {t0}"
        )));
    }
    Ok(())
}

fn phase_fraction<T: Real>(t: T, t0: T, tf: T) -> Result<T> {
    check_window(t0, tf)?;
    if !(t >= t0 && t <= tf) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside window [{t0}, {tf}]"
        )));
    }
    Ok((t - t0) / (tf - t0))
}

/// Bernstein-form Bézier point at fraction `s`.
pub fn bezier_point<T: Real>(points: &[Vec3<T>], s: T) -> Result<Vec3<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Bézier curve needs at least 2 control points, got {}",
            points.len()
        )));
    }
    let n = points.len() - 1;
    if s == T::zero() {
        return Ok(points[0]);
    }
    if s == T::one() {
        return Ok(points[n]);
    }
    let u = T::one() - s;
    let mut acc = Vec3::zero();
    for (i, p) in points.iter().enumerate() {
        let w = binomial::<T>(n, i) * u.powi((n - i) as i32) * s.powi(i as i32);
        acc = acc + *p * w;
    }
    Ok(acc)
}

/// Bézier curve over the time window `[t0, tf]`.
pub fn eval_bezier<T: Real>(points: &[Vec3<T>], t: T, t0: T, tf: T) -> Result<Vec3<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Bézier curve needs at least 2 control points, got {}",
            points.len()
        )));
    }
    bezier_point(points, phase_fraction(t, t0, tf)?)
}

/// Spherical linear interpolation along the shorter arc. Endpoints are
/// returned exactly (the far end possibly negated); nearly equal inputs
/// fall back to normalised linear interpolation.
pub fn slerp<T: Real>(q_end: Quat<T>, q_ref: Quat<T>, s: T) -> Quat<T> {
    let mut target = q_ref;
    let mut dot = q_end.dot(q_ref);
    if dot < T::zero() {
        target = -q_ref;
        dot = -dot;
    }
    if s <= T::zero() {
        return q_end;
    }
    if s >= T::one() {
        return target;
    }
    let omega = dot.min(T::one()).acos();
    if omega < cast(1e-6) {
        return (q_end.scale(T::one() - s) + target.scale(s)).normalized();
    }
    let sin_omega = omega.sin();
    let a = ((T::one() - s) * omega).sin() / sin_omega;
    let b = (s * omega).sin() / sin_omega;
    (q_end.scale(a) + target.scale(b)).normalized()
}

/// How interior Bézier control points are placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPointPolicy<T> {
    /// Vertical offset added to the interior points of foot bodies (m).
    pub foot_lift: T,
}

impl<T: Real> ControlPointPolicy<T> {
    /// Collinear control points for every body.
    pub fn straight() -> Self {
        Self {
            foot_lift: T::zero(),
        }
    }
}

impl<T: Real> Default for ControlPointPolicy<T> {
    fn default() -> Self {
        Self {
            foot_lift: cast(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyTrack<T> {
    pub body: BodyId,
    pub control_points: Vec<Vec3<T>>,
    pub q_end: Quat<T>,
    /// Hemisphere-aligned with `q_end`.
    pub q_ref: Quat<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPlan<T> {
    pub t0: T,
    pub tf: T,
    pub tracks: Vec<BodyTrack<T>>,
}

fn sorted_poses<T: Real>(poses: &[KeyBodyPose<T>], what: &str) -> Result<Vec<KeyBodyPose<T>>> {
    let mut v = poses.to_vec();
    v.sort_by_key(|p| p.body);
    if let Some(w) = v.windows(2).find(|w| w[0].body == w[1].body) {
        return Err(Error::InvalidArgument(format!(
            "duplicate body {} in {what} poses",
            w[0].body
        )));
    }
    Ok(v)
}

/// Plans cubic position curves and slerp orientation tracks from the
/// terminal poses of one phase to the reference poses of the next.
pub fn plan_transition<T: Real>(
    end_poses: &[KeyBodyPose<T>],
    ref_poses: &[KeyBodyPose<T>],
    window: (T, T),
    policy: &ControlPointPolicy<T>,
) -> Result<TransitionPlan<T>> {
    let (t0, tf) = window;
    check_window(t0, tf)?;
    let ends = sorted_poses(end_poses, "terminal")?;
    let refs = sorted_poses(ref_poses, "reference")?;
    let same = ends.len() == refs.len() && ends.iter().zip(&refs).all(|(a, b)| a.body == b.body);
    if !same {
        return Err(Error::InvalidArgument(
            "terminal and reference poses cover different body sets".into(),
        ));
    }
    let third: T = cast(1.0 / 3.0);
    let two_thirds: T = cast(2.0 / 3.0);
    let tracks = ends
        .iter()
        .zip(&refs)
        .map(|(e, r)| {
            let lift = if e.body.is_foot() {
                Vec3::new(T::zero(), T::zero(), policy.foot_lift)
            } else {
                Vec3::zero()
            };
            let d = r.position - e.position;
            let q_ref = if e.orientation.dot(r.orientation) < T::zero() {
                -r.orientation
            } else {
                r.orientation
            };
            BodyTrack {
                body: e.body,
                control_points: vec![
                    e.position,
                    e.position + d * third + lift,
                    e.position + d * two_thirds + lift,
                    r.position,
                ],
                q_end: e.orientation,
                q_ref,
            }
        })
        .collect();
    Ok(TransitionPlan { t0, tf, tracks })
}

impl<T: Real> TransitionPlan<T> {
    pub fn contains(&self, t: T) -> bool {
        t >= self.t0 && t <= self.tf
    }

    /// Upper bound on the speed of any planned position (m/s).
    pub fn max_speed(&self) -> T {
        let mut spread = T::zero();
        let mut degree = 1;
        for tr in &self.tracks {
            degree = degree.max(tr.control_points.len() - 1);
            for w in tr.control_points.windows(2) {
                spread = spread.max(w[0].distance(w[1]));
            }
        }
        T::from_usize(degree).unwrap() * spread / (self.tf - self.t0)
    }
}

/// Planned pose of every key body at time `t`.
pub fn eval_transition<T: Real>(plan: &TransitionPlan<T>, t: T) -> Result<Vec<KeyBodyPose<T>>> {
    let s = phase_fraction(t, plan.t0, plan.tf)?;
    plan.tracks
        .iter()
        .map(|tr| {
            Ok(KeyBodyPose {
                body: tr.body,
                position: bezier_point(&tr.control_points, s)?,
                orientation: slerp(tr.q_end, tr.q_ref, s),
            })
        })
        .collect()
}

/// Parses pose fixtures: one `body_id px py pz qw qx qy qz` record per
/// line, `#` starts a comment. Quaternions within 1e-3 of unit norm are
/// renormalised, others rejected.
pub fn parse_poses<T: Real>(text: &str, source: &str) -> Result<Vec<KeyBodyPose<T>>> {
    let mut poses = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", fields.len())));
        }
        let body: BodyId = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
        let mut v = [T::zero(); 7];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse::<f64>()
                .map(cast)
                .map_err(|_| err(format!("invalid number `{f}`")))?;
        }
        let q = Quat::new(v[3], v[4], v[5], v[6]);
        if !((q.norm() - T::one()).abs() < cast(1e-3)) {
            return Err(err(format!("quaternion norm {} is not unit", q.norm())));
        }
        poses.push(KeyBodyPose {
            body,
            position: Vec3::new(v[0], v[1], v[2]),
            orientation: q.normalized(),
        });
    }
    sorted_poses(&poses, source)?;
    Ok(poses)
}

pub fn write_poses<T: Real, W: Write>(poses: &[KeyBodyPose<T>], mut out: W) -> Result<()> {
    for p in poses {
        let (x, q) = (p.position, p.orientation);
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.body, x.x, x.y, x.z, q.w, q.x, q.y, q.z
        )?;
    }
    Ok(())
}

/// Placeholder key-body layout for a crouched one-foot pushing stance.
/// Illustrative values, not measured reference data.
pub fn pushing_reference_pose<T: Real>() -> Vec<KeyBodyPose<T>> {
    placeholder_pose(&[
        (BodyId::Pelvis, [0.05, -0.02, 0.78], 0.0),
        (BodyId::Torso, [0.08, -0.02, 1.05], 0.0),
        (BodyId::LeftHip, [0.05, 0.06, 0.74], 0.0),
        (BodyId::RightHip, [0.05, -0.10, 0.74], 0.0),
        (BodyId::LeftKnee, [-0.05, 0.12, 0.42], 0.0),
        (BodyId::RightKnee, [0.14, -0.08, 0.42], 0.0),
        (BodyId::LeftAnkle, [-0.12, 0.16, 0.08], 0.0),
        (BodyId::RightAnkle, [0.20, -0.04, 0.14], 0.0),
        (BodyId::LeftShoulder, [0.08, 0.14, 1.25], 0.0),
        (BodyId::RightShoulder, [0.08, -0.18, 1.25], 0.0),
        (BodyId::LeftElbow, [0.02, 0.20, 1.02], 0.0),
        (BodyId::RightElbow, [0.14, -0.24, 1.02], 0.0),
        (BodyId::LeftWrist, [0.00, 0.22, 0.82], 0.0),
        (BodyId::RightWrist, [0.18, -0.26, 0.82], 0.0),
    ])
}

/// Placeholder key-body layout for a two-foot sideways steering stance.
/// Illustrative values, not measured reference data.
pub fn steering_reference_pose<T: Real>() -> Vec<KeyBodyPose<T>> {
    let yaw = std::f64::consts::FRAC_PI_2;
    placeholder_pose(&[
        (BodyId::Pelvis, [0.0, 0.0, 0.82], yaw),
        (BodyId::Torso, [0.0, 0.0, 1.09], yaw),
        (BodyId::LeftHip, [-0.08, 0.0, 0.78], yaw),
        (BodyId::RightHip, [0.08, 0.0, 0.78], yaw),
        (BodyId::LeftKnee, [-0.16, 0.03, 0.46], yaw),
        (BodyId::RightKnee, [0.16, 0.03, 0.46], yaw),
        (BodyId::LeftAnkle, [-0.22, 0.0, 0.14], yaw),
        (BodyId::RightAnkle, [0.22, 0.0, 0.14], yaw),
        (BodyId::LeftShoulder, [-0.16, 0.0, 1.29], yaw),
        (BodyId::RightShoulder, [0.16, 0.0, 1.29], yaw),
        (BodyId::LeftElbow, [-0.24, 0.04, 1.06], yaw),
        (BodyId::RightElbow, [0.24, 0.04, 1.06], yaw),
        (BodyId::LeftWrist, [-0.28, 0.08, 0.88], yaw),
        (BodyId::RightWrist, [0.28, 0.08, 0.88], yaw),
    ])
}

fn placeholder_pose<T: Real>(entries: &[(BodyId, [f64; 3], f64)]) -> Vec<KeyBodyPose<T>> {
    let up = Vec3::new(T::zero(), T::zero(), T::one());
    entries
        .iter()
        .map(|&(body, p, yaw)| KeyBodyPose {
            body,
            position: Vec3::new(cast(p[0]), cast(p[1]), cast(p[2])),
            orientation: Quat::from_axis_angle(up, cast(yaw)),
        })
        .collect()
}
