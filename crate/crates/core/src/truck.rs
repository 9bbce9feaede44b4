//! Truck lean-to-steer kinematics.
//!
//! Tilting the deck by `gamma` rotates each truck about its kingpin by
//! `eta`, which yaws the axle by the steering angle `sigma`:
//!
//! ```text
//! tan(sigma) = tan(rake) * sin(gamma)
//! ```
//!
//! [`construct_truck_rotation`] rebuilds the same relation from the wheel
//! geometry (kingpin rotation, deck roll, equal wheel heights, axle
//! projection) and serves as a check on the closed form.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::{cast, Real};

/// Hinge range of the deck tilt joint (rad).
pub const TILT_JOINT_LIMIT: f64 = 0.2;
/// Hinge range of each truck steering joint (rad).
pub const TRUCK_JOINT_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckGeometry<T> {
    /// Kingpin rake angle relative to the deck's longitudinal axis (rad).
    pub rake: T,
    /// Pivot height above the deck centre projection (m).
    pub truck_height: T,
    /// Half of the truck (axle) width (m).
    pub half_width: T,
    /// Distance between the front and rear axles (m).
    pub wheelbase: T,
}

impl<T: Real> TruckGeometry<T> {
    pub fn new(rake: T, truck_height: T, half_width: T, wheelbase: T) -> Result<Self> {
        let geom = Self {
            rake,
            truck_height,
            half_width,
            wheelbase,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rake > T::zero() && self.rake < T::FRAC_PI_2()) {
            return Err(Error::Domain(format!(
                "rake angle {} outside (0, pi/2)",
                self.rake
            )));
        }
        for (name, v) in [
            ("truck height", self.truck_height),
            ("half width", self.half_width),
            ("wheelbase", self.wheelbase),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Same geometry with a different rake angle.
    pub fn with_rake(self, rake: T) -> Result<Self> {
        Self::new(rake, self.truck_height, self.half_width, self.wheelbase)
    }
}

impl<T: Real> Default for TruckGeometry<T> {
    /// 45 degree rake, 9 cm truck height, 7 cm wheel offset, 0.5 m wheelbase.
    fn default() -> Self {
        Self {
            rake: T::FRAC_PI_4(),
            truck_height: cast(0.09),
            half_width: cast(0.07),
            wheelbase: cast(0.5),
        }
    }
}

fn check_tilt<T: Real>(gamma: T) -> Result<()> {
    if !(gamma.abs() <= T::FRAC_PI_2()) {
        return Err(Error::Domain(format!("tilt {gamma} outside [-pi/2, pi/2]")));
    }
    Ok(())
}

/// Axle steering angle produced by deck tilt `gamma`.
pub fn steering_from_tilt<T: Real>(gamma: T, geom: &TruckGeometry<T>) -> Result<T> {
    geom.validate()?;
    check_tilt(gamma)?;
    Ok((geom.rake.tan() * gamma.sin()).atan())
}

/// Deck tilt required for axle steering `sigma`. Fails when the steering
/// angle exceeds what the rake allows (`|tan sigma| > tan rake`).
pub fn tilt_from_steering<T: Real>(sigma: T, geom: &TruckGeometry<T>) -> Result<T> {
    geom.validate()?;
    let ratio = sigma.tan() / geom.rake.tan();
    if !(ratio.abs() <= T::one()) || sigma.abs() >= T::FRAC_PI_2() {
        return Err(Error::Domain(format!(
            "steering angle {sigma} unreachable with rake {}",
            geom.rake
        )));
    }
    Ok(ratio.asin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruckSide {
    Front,
    Rear,
}

/// Signed steering of one truck. The rear hinge axis is mirrored, so a
/// positive tilt steers the front truck by `+sigma` and the rear by `-sigma`.
pub fn truck_steering<T: Real>(gamma: T, geom: &TruckGeometry<T>, side: TruckSide) -> Result<T> {
    let sigma = steering_from_tilt(gamma, geom)?;
    Ok(match side {
        TruckSide::Front => sigma,
        TruckSide::Rear => -sigma,
    })
}

/// Wheel and pivot positions after kingpin rotation and deck roll.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckConstruction<T> {
    pub tilt: T,
    /// Kingpin rotation satisfying the contact constraint.
    pub kingpin_eta: T,
    pub wheel_e: Vec3<T>,
    pub wheel_f: Vec3<T>,
    pub truck_center: Vec3<T>,
    /// `z(E) - z(F)`; zero when both wheels touch the same plane.
    pub contact_residual: T,
}

impl<T: Real> TruckConstruction<T> {
    /// Steering angle from the top-view projection of wheel `E` relative
    /// to the rotated truck centre.
    pub fn steering_angle(&self) -> T {
        let dx = self.wheel_e.x - self.truck_center.x;
        let dy = self.wheel_e.y - self.truck_center.y;
        dx.atan2(dy)
    }
}

/// Rotates a point about the x axis with the deck-roll sign convention
/// `y' = y cos g - z sin g`, `z' = z cos g + y sin g`.
fn roll<T: Real>(p: Vec3<T>, sin_g: T, cos_g: T) -> Vec3<T> {
    Vec3::new(p.x, p.y * cos_g - p.z * sin_g, p.z * cos_g + p.y * sin_g)
}

/// Builds the two-stage truck rotation for deck tilt `gamma`.
pub fn construct_truck_rotation<T: Real>(
    gamma: T,
    geom: &TruckGeometry<T>,
) -> Result<TruckConstruction<T>> {
    geom.validate()?;
    check_tilt(gamma)?;
    let h = geom.truck_height;
    let w = geom.half_width;

    if gamma == T::zero() {
        // cot(gamma) is singular here; the physical limit is no kingpin rotation.
        return Ok(TruckConstruction {
            tilt: gamma,
            kingpin_eta: T::zero(),
            wheel_e: Vec3::new(T::zero(), w, h),
            wheel_f: Vec3::new(T::zero(), -w, h),
            truck_center: Vec3::new(T::zero(), T::zero(), h),
            contact_residual: T::zero(),
        });
    }

    let (sin_l, cos_l) = geom.rake.sin_cos();
    let (sin_g, cos_g) = gamma.sin_cos();
    // cot(eta) = cos(rake) cot(gamma), solved without the cotangent.
    let eta = sin_g.atan2(cos_g * cos_l);
    let (sin_e, cos_e) = eta.sin_cos();

    let e1 = Vec3::new(w * sin_e * sin_l, w * cos_e, h - w * sin_e * cos_l);
    let f1 = Vec3::new(-w * sin_e * sin_l, -w * cos_e, h + w * sin_e * cos_l);
    let c1 = Vec3::new(T::zero(), T::zero(), h);

    let wheel_e = roll(e1, sin_g, cos_g);
    let wheel_f = roll(f1, sin_g, cos_g);
    let truck_center = roll(c1, sin_g, cos_g);

    Ok(TruckConstruction {
        tilt: gamma,
        kingpin_eta: eta,
        wheel_e,
        wheel_f,
        truck_center,
        contact_residual: wheel_e.z - wheel_f.z,
    })
}

/// Steering angle recovered through the geometric construction.
pub fn steering_from_construction<T: Real>(gamma: T, geom: &TruckGeometry<T>) -> Result<T> {
    Ok(construct_truck_rotation(gamma, geom)?.steering_angle())
}
