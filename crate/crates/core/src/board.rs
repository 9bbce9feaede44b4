//! Planar skateboard motion and passive tilt dynamics.
//!
//! The deck follows a bicycle model whose steering comes from deck tilt,
//! `psi_dot = v / L * tan(rake) * sin(gamma)`, with `x_dot = v cos(psi)` and
//! `y_dot = v sin(psi)`. Tilt obeys `I gamma_dd = -k gamma - d gamma_d + tau`.
//! Both are stepped with classic fourth-order Runge-Kutta.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{cast, wrap_angle, Real};
use crate::sysid::FreeDecayTrace;
use crate::truck::{steering_from_tilt, TruckGeometry, TILT_JOINT_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoardState<T> {
    pub x: T,
    pub y: T,
    /// Heading, wrapped to (-pi, pi].
    pub heading: T,
    /// Forward speed (m/s), non-negative.
    pub speed: T,
    pub tilt: T,
    pub tilt_rate: T,
}

impl<T: Real> BoardState<T> {
    pub fn at_rest() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            heading: T::zero(),
            speed: T::zero(),
            tilt: T::zero(),
            tilt_rate: T::zero(),
        }
    }

    pub fn gliding(speed: T, heading: T) -> Self {
        Self {
            speed,
            heading: wrap_angle(heading),
            ..Self::at_rest()
        }
    }

    /// Truck steering angle implied by the current tilt.
    pub fn steering(&self, geom: &TruckGeometry<T>) -> Result<T> {
        steering_from_tilt(self.tilt, geom)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x,
            self.y,
            self.heading,
            self.speed,
            self.tilt,
            self.tilt_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Yaw rate of the bicycle model for speed `v` and tilt `gamma`.
pub fn yaw_rate<T: Real>(speed: T, gamma: T, geom: &TruckGeometry<T>) -> T {
    speed / geom.wheelbase * geom.rake.tan() * gamma.sin()
}

/// Advances the planar pose by one step of length `dt` while the deck is held
/// at `gamma_command`. Speed and tilt fields are carried through unchanged.
pub fn step_planar<T: Real>(
    state: &BoardState<T>,
    gamma_command: T,
    geom: &TruckGeometry<T>,
    dt: T,
) -> Result<BoardState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    if !(state.speed >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "speed must be non-negative, got {}",
            state.speed
        )));
    }
    if !(gamma_command.abs() <= cast::<T>(TILT_JOINT_LIMIT)) {
        return Err(Error::Domain(format!(
            "tilt command {gamma_command} outside joint range ±{TILT_JOINT_LIMIT}"
        )));
    }
    geom.validate()?;

    let v = state.speed;
    let omega = yaw_rate(v, gamma_command, geom);
    let half = dt / cast(2.0);
    let sixth = dt / cast(6.0);
    let two: T = cast(2.0);

    // Heading is linear in time within the step, so the yaw stages collapse
    // and only the position derivatives differ between stages.
    let psi0 = state.heading;
    let k1 = (v * psi0.cos(), v * psi0.sin());
    let psi_mid = psi0 + omega * half;
    let k2 = (v * psi_mid.cos(), v * psi_mid.sin());
    let k3 = k2;
    let psi_end = psi0 + omega * dt;
    let k4 = (v * psi_end.cos(), v * psi_end.sin());

    Ok(BoardState {
        x: state.x + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0),
        y: state.y + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1),
        heading: wrap_angle(psi_end),
        ..*state
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltModel<T> {
    /// Roll inertia (kg m^2).
    pub inertia: T,
    /// Torsional stiffness (N m / rad).
    pub stiffness: T,
    /// Viscous damping (N m s / rad).
    pub damping: T,
}

impl<T: Real> TiltModel<T> {
    pub fn new(inertia: T, stiffness: T, damping: T) -> Result<Self> {
        for (name, v) in [
            ("inertia", inertia),
            ("stiffness", stiffness),
            ("damping", damping),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            inertia,
            stiffness,
            damping,
        })
    }

    /// Builds a model from its modal description.
    pub fn from_modal(inertia: T, natural_frequency: T, damping_ratio: T) -> Result<Self> {
        let stiffness = inertia * natural_frequency * natural_frequency;
        let damping = cast::<T>(2.0) * damping_ratio * (stiffness * inertia).sqrt();
        Self::new(inertia, stiffness, damping)
    }

    pub fn natural_frequency(&self) -> T {
        (self.stiffness / self.inertia).sqrt()
    }

    pub fn damping_ratio(&self) -> T {
        self.damping / (cast::<T>(2.0) * (self.stiffness * self.inertia).sqrt())
    }

    /// Damped oscillation period, `None` when the model is not underdamped.
    pub fn damped_period(&self) -> Option<T> {
        let zeta = self.damping_ratio();
        if zeta >= T::one() {
            return None;
        }
        let wd = self.natural_frequency() * (T::one() - zeta * zeta).sqrt();
        Some(cast::<T>(2.0) * T::PI() / wd)
    }

    /// Mechanical energy `I rate^2 / 2 + k gamma^2 / 2`.
    pub fn energy(&self, gamma: T, rate: T) -> T {
        let half: T = cast(0.5);
        half * self.inertia * rate * rate + half * self.stiffness * gamma * gamma
    }

    fn acceleration(&self, gamma: T, rate: T, torque: T) -> T {
        (torque - self.stiffness * gamma - self.damping * rate) / self.inertia
    }
}

impl TiltModel<f64> {
    /// Identified parameters of the standard 80 x 20 x 12 cm board.
    pub fn standard_board() -> Self {
        Self {
            inertia: 7.15e-3,
            stiffness: 34.835,
            damping: 0.540,
        }
    }
}

fn rk4_tilt<T: Real>(gamma: T, rate: T, model: &TiltModel<T>, torque: T, dt: T) -> (T, T) {
    let half = dt / cast(2.0);
    let two: T = cast(2.0);
    let k1 = (rate, model.acceleration(gamma, rate, torque));
    let k2 = {
        let g = gamma + half * k1.0;
        let r = rate + half * k1.1;
        (r, model.acceleration(g, r, torque))
    };
    let k3 = {
        let g = gamma + half * k2.0;
        let r = rate + half * k2.1;
        (r, model.acceleration(g, r, torque))
    };
    let k4 = {
        let g = gamma + dt * k3.0;
        let r = rate + dt * k3.1;
        (r, model.acceleration(g, r, torque))
    };
    let sixth = dt / cast(6.0);
    (
        gamma + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0),
        rate + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1),
    )
}

/// One tilt step with the torque held constant. The result is clamped to
/// the tilt joint range and any rate pointing further out is zeroed.
pub fn step_tilt<T: Real>(
    gamma: T,
    tilt_rate: T,
    model: &TiltModel<T>,
    external_torque: T,
    dt: T,
) -> Result<(T, T)> {
    step_tilt_limited(
        gamma,
        tilt_rate,
        model,
        external_torque,
        dt,
        Some(cast(TILT_JOINT_LIMIT)),
    )
}

/// [`step_tilt`] with an explicit joint limit; `None` leaves the hinge free.
pub fn step_tilt_limited<T: Real>(
    gamma: T,
    tilt_rate: T,
    model: &TiltModel<T>,
    external_torque: T,
    dt: T,
    limit: Option<T>,
) -> Result<(T, T)> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    let (mut g, mut r) = rk4_tilt(gamma, tilt_rate, model, external_torque, dt);
    if let Some(limit) = limit {
        if g > limit {
            g = limit;
            r = r.min(T::zero());
        } else if g < -limit {
            g = -limit;
            r = r.max(T::zero());
        }
    }
    Ok((g, r))
}

/// Releases the deck from rest at `gamma0` and records the unforced roll
/// response. The hinge is left unconstrained, as on an identification bench.
pub fn simulate_free_decay<T: Real>(
    model: &TiltModel<T>,
    gamma0: T,
    duration: T,
    dt: T,
) -> Result<FreeDecayTrace<T>> {
    let period = model
        .damped_period()
        .ok_or_else(|| Error::Overdamped(model.damping_ratio().to_f64().unwrap_or(f64::NAN)))?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    if !(gamma0.abs() <= T::FRAC_PI_2()) || gamma0 == T::zero() {
        return Err(Error::InvalidArgument(format!(
            "initial tilt {gamma0} must be non-zero and within ±pi/2"
        )));
    }
    if duration < cast::<T>(2.0) * period {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s shorter than two damped periods ({} s)",
            cast::<T>(2.0) * period
        )));
    }
    let steps = (duration / dt).round().to_usize().unwrap_or(0);
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut g, mut r) = (gamma0, T::zero());
    samples.push((T::zero(), g));
    for i in 1..=steps {
        (g, r) = rk4_tilt(g, r, model, T::zero(), dt);
        samples.push((T::from_usize(i).unwrap() * dt, g));
    }
    FreeDecayTrace::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub time: T,
    pub state: BoardState<T>,
    pub sigma: T,
}

/// Uniformly sampled board states recorded by a single stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dt: T,
    samples: Vec<TrajectorySample<T>>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,x,y,psi,v,gamma,gamma_rate,sigma";

impl<T: Real> Trajectory<T> {
    pub fn new(dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "timestep must be positive, got {dt}"
            )));
        }
        Ok(Self {
            dt,
            samples: Vec::new(),
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn samples(&self) -> &[TrajectorySample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends `state` at the next grid time `n * dt`.
    pub fn record(&mut self, state: BoardState<T>, geom: &TruckGeometry<T>) -> Result<()> {
        let time = T::from_usize(self.samples.len()).unwrap() * self.dt;
        let sigma = state.steering(geom)?;
        self.samples.push(TrajectorySample { time, state, sigma });
        Ok(())
    }

    /// Writes the trajectory as CSV using shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            let st = &s.state;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.time, st.x, st.y, st.heading, st.speed, st.tilt, st.tilt_rate, s.sigma
            )?;
        }
        Ok(())
    }
}

/// Glides at constant speed and constant tilt for `steps` steps, recording
/// the initial state and every step.
pub fn simulate_constant_lean<T: Real>(
    initial: BoardState<T>,
    gamma: T,
    geom: &TruckGeometry<T>,
    dt: T,
    steps: usize,
) -> Result<Trajectory<T>> {
    let mut traj = Trajectory::new(dt)?;
    let mut state = BoardState {
        tilt: gamma,
        tilt_rate: T::zero(),
        ..initial
    };
    traj.record(state, geom)?;
    for _ in 0..steps {
        state = step_planar(&state, gamma, geom, dt)?;
        traj.record(state, geom)?;
    }
    Ok(traj)
}
