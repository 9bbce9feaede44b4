//! Tilt reference generation for heading control.
//!
//! Holding the yaw rate at `dpsi / dt` over the horizon and inverting the
//! tilt-driven bicycle model gives
//! `gamma_ref = asin(L dpsi / (v dt tan(rake)))`.

use crate::error::{Error, Result};
use crate::scalar::{cast, wrap_angle, Real};
use crate::truck::{TruckGeometry, TILT_JOINT_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringCommand<T> {
    pub target_heading: T,
    /// Time over which the heading change should be completed (s).
    pub horizon: T,
    /// Speeds below this are raised to it before inverting the model (m/s).
    pub min_speed_clip: T,
    /// Largest tilt the planner may request (rad).
    pub lean_limit: T,
}

impl<T: Real> SteeringCommand<T> {
    pub fn new(target_heading: T, horizon: T, min_speed_clip: T, lean_limit: T) -> Result<Self> {
        let cmd = Self {
            target_heading,
            horizon,
            min_speed_clip,
            lean_limit,
        };
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.min_speed_clip > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "minimum speed clip must be positive, got {}",
                self.min_speed_clip
            )));
        }
        if !(self.lean_limit > T::zero() && self.lean_limit <= cast(TILT_JOINT_LIMIT)) {
            return Err(Error::InvalidArgument(format!(
                "lean limit {} outside (0, {TILT_JOINT_LIMIT}]",
                self.lean_limit
            )));
        }
        Ok(())
    }

    pub fn with_horizon(self, horizon: T) -> Self {
        Self { horizon, ..self }
    }
}

impl<T: Real> Default for SteeringCommand<T> {
    /// Zero target, a 2.7 s horizon (one steering phase of the default
    /// cycle), 0.3 m/s speed clip and 0.2 rad lean limit.
    fn default() -> Self {
        Self {
            target_heading: T::zero(),
            horizon: cast(2.7),
            min_speed_clip: cast(0.3),
            lean_limit: cast(TILT_JOINT_LIMIT),
        }
    }
}

/// Heading change still required, wrapped to (-pi, pi].
pub fn heading_error<T: Real>(psi_target: T, psi_board: T) -> T {
    wrap_angle(psi_target - psi_board)
}

/// Tilt that achieves `delta_psi` over the command horizon at constant speed.
///
/// Total: speed is raised to the clip, the arcsine argument is clamped to
/// [-1, 1] and the result to the lean limit, in that order.
pub fn tilt_reference<T: Real>(
    delta_psi: T,
    speed: T,
    cmd: &SteeringCommand<T>,
    geom: &TruckGeometry<T>,
) -> T {
    let v = speed.max(cmd.min_speed_clip);
    let arg = geom.wheelbase * delta_psi / (v * cmd.horizon * geom.rake.tan());
    let gamma = arg.max(-T::one()).min(T::one()).asin();
    gamma.max(-cmd.lean_limit).min(cmd.lean_limit)
}

/// Symmetric range of heading changes reachable within `steer_duration`
/// when leaning at the command's limit for the whole time.
pub fn reachable_heading_range<T: Real>(
    speed: T,
    steer_duration: T,
    cmd: &SteeringCommand<T>,
    geom: &TruckGeometry<T>,
) -> (T, T) {
    let max =
        (speed / geom.wheelbase * geom.rake.tan() * cmd.lean_limit.sin() * steer_duration).abs();
    (-max, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn geom() -> TruckGeometry<f64> {
        TruckGeometry::new(FRAC_PI_4, 0.09, 0.07, 0.5).unwrap()
    }

    #[test]
    fn heading_error_wraps() {
        assert!((heading_error::<f64>(0.3, 0.1) - 0.2).abs() < 1e-15);
        assert!((heading_error::<f64>(-3.0, 3.0) - 0.283_185_307_179_586_2).abs() < 1e-12);
        assert_eq!(heading_error(1.234, 1.234), 0.0);
    }

    #[test]
    fn reference_values() {
        let cmd = SteeringCommand::default().with_horizon(2.0);
        assert_eq!(tilt_reference(0.0, 1.0, &cmd, &geom()), 0.0);
        let g = tilt_reference(0.2, 1.0, &cmd, &geom());
        assert!((g - 0.050_020_856_805_770_02).abs() < 1e-12);
    }

    #[test]
    fn saturation_path() {
        let cmd = SteeringCommand::default().with_horizon(1.0);
        assert_eq!(tilt_reference(1.5, 0.1, &cmd, &geom()), cmd.lean_limit);
        assert_eq!(tilt_reference(-1.5, 0.1, &cmd, &geom()), -cmd.lean_limit);
        assert_eq!(tilt_reference(100.0, 0.0, &cmd, &geom()), cmd.lean_limit);
    }

    #[test]
    fn reachable_range() {
        let cmd = SteeringCommand::default();
        let (lo, hi) = reachable_heading_range(1.0, 2.7, &cmd, &geom());
        assert!((hi - 1.072_814_386_293_330_6).abs() < 1e-12);
        assert_eq!(lo, -hi);
        let (_, hi2) = reachable_heading_range(1.0, 5.4, &cmd, &geom());
        assert_eq!(hi2, 2.0 * hi);
    }

    #[test]
    fn zero_lean_limit_reaches_nothing() {
        let cmd = SteeringCommand {
            lean_limit: 0.0,
            ..SteeringCommand::default()
        };
        assert!(cmd.validate().is_err());
        assert_eq!(
            reachable_heading_range(1.0, 2.7, &cmd, &geom()),
            (-0.0, 0.0)
        );
    }

    #[test]
    fn command_validation() {
        assert!(SteeringCommand::new(0.0, 0.0, 0.3, 0.2).is_err());
        assert!(SteeringCommand::new(0.0, 1.0, 0.0, 0.2).is_err());
        assert!(SteeringCommand::new(0.0, 1.0, 0.3, 0.25).is_err());
        assert!(SteeringCommand::new(0.0, 1.0, 0.3, 0.2).is_ok());
    }
}
