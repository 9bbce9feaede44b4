//! Clock-driven skateboarding cycle and phase-indicator reward dispatch.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseKind {
    Pushing,
    MountTransition,
    Steering,
    DismountTransition,
}

impl PhaseKind {
    pub const ORDER: [PhaseKind; 4] = [
        PhaseKind::Pushing,
        PhaseKind::MountTransition,
        PhaseKind::Steering,
        PhaseKind::DismountTransition,
    ];

    pub fn is_transition(self) -> bool {
        matches!(
            self,
            PhaseKind::MountTransition | PhaseKind::DismountTransition
        )
    }

    /// `(push, steer, trans)` indicator values.
    pub fn indicators(self) -> (u8, u8, u8) {
        match self {
            PhaseKind::Pushing => (1, 0, 0),
            PhaseKind::Steering => (0, 1, 0),
            PhaseKind::MountTransition | PhaseKind::DismountTransition => (0, 0, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Pushing => "pushing",
            PhaseKind::MountTransition => "mount",
            PhaseKind::Steering => "steering",
            PhaseKind::DismountTransition => "dismount",
        }
    }

    fn index(self) -> usize {
        match self {
            PhaseKind::Pushing => 0,
            PhaseKind::MountTransition => 1,
            PhaseKind::Steering => 2,
            PhaseKind::DismountTransition => 3,
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSchedule<T> {
    /// Cycle duration H (s).
    pub cycle: T,
    /// Fractions of the cycle spent pushing, mounting, steering and
    /// dismounting, in that order.
    pub fractions: [T; 4],
}

impl<T: Real> Default for PhaseSchedule<T> {
    /// Six second cycle split 40 / 10 / 45 / 5 percent.
    fn default() -> Self {
        Self {
            cycle: cast(6.0),
            fractions: [cast(0.40), cast(0.10), cast(0.45), cast(0.05)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState<T> {
    /// Normalised cycle clock in [0, 1).
    pub phi: T,
    pub kind: PhaseKind,
}

impl<T: Real> PhaseSchedule<T> {
    pub fn new(cycle: T, fractions: [T; 4]) -> Result<Self> {
        let s = Self { cycle, fractions };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cycle > T::zero() && self.cycle.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cycle must be positive, got {}",
                self.cycle
            )));
        }
        if self
            .fractions
            .iter()
            .any(|f| !(*f > T::zero() && *f < T::one()))
        {
            return Err(Error::InvalidArgument(format!(
                "phase fractions must lie in (0, 1): {:?}",
                self.fractions
            )));
        }
        let sum = self.fractions.iter().fold(T::zero(), |a, f| a + *f);
        if (sum - T::one()).abs() > cast(1e-12) {
            return Err(Error::InvalidArgument(format!(
                "phase fractions sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Cumulative upper boundaries of the four phases in cycle fraction.
    pub fn boundaries(&self) -> [T; 4] {
        let f = self.fractions;
        [f[0], f[0] + f[1], f[0] + f[1] + f[2], T::one()]
    }

    pub fn duration(&self, kind: PhaseKind) -> T {
        self.fractions[kind.index()] * self.cycle
    }

    /// Cycle clock and active phase at time `t`. Intervals are half-open,
    /// so a boundary instant belongs to the later phase. Clocks within
    /// 1e-12 of a boundary are treated as on it.
    pub fn phase_state(&self, t: T) -> Result<PhaseState<T>> {
        self.validate()?;
        if !(t >= T::zero() && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time must be non-negative, got {t}"
            )));
        }
        let mut phi = (t % self.cycle) / self.cycle;
        if phi >= T::one() {
            phi = T::zero();
        }
        let b = self.boundaries();
        // Sampled clocks land a few ulps either side of a boundary; snap so
        // that n * dt on a boundary starts the later phase.
        let snap: T = cast(1e-12);
        if let Some(edge) = b.iter().find(|e| (**e - phi).abs() <= snap) {
            phi = if *edge >= T::one() { T::zero() } else { *edge };
        }
        let kind = if phi < b[0] {
            PhaseKind::Pushing
        } else if phi < b[1] {
            PhaseKind::MountTransition
        } else if phi < b[2] {
            PhaseKind::Steering
        } else {
            PhaseKind::DismountTransition
        };
        Ok(PhaseState { phi, kind })
    }

    /// Absolute start and end time of the phase instance active at `t`.
    pub fn phase_window(&self, t: T) -> Result<(PhaseKind, T, T)> {
        let st = self.phase_state(t)?;
        let cycle_start = t - st.phi * self.cycle;
        let i = st.kind.index();
        let lower = if i == 0 {
            T::zero()
        } else {
            self.boundaries()[i - 1]
        };
        let upper = self.boundaries()[i];
        Ok((
            st.kind,
            cycle_start + lower * self.cycle,
            cycle_start + upper * self.cycle,
        ))
    }
}

/// Combines per-phase rewards with the indicators of the active phase and
/// adds the always-on regularisation.
pub fn dispatch_reward<T: Real>(kind: PhaseKind, r_push: T, r_steer: T, r_trans: T, r_reg: T) -> T {
    let (ip, is, it) = kind.indicators();
    let ind = |i: u8| if i == 1 { T::one() } else { T::zero() };
    ind(ip) * r_push + ind(is) * r_steer + ind(it) * r_trans + r_reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cycle_states() {
        let s = PhaseSchedule::<f64>::default();
        let p = s.phase_state(0.0).unwrap();
        assert_eq!((p.phi, p.kind), (0.0, PhaseKind::Pushing));
        let p = s.phase_state(2.7).unwrap();
        assert!((p.phi - 0.45).abs() < 1e-15);
        assert_eq!(p.kind, PhaseKind::MountTransition);
        let p = s.phase_state(6.0).unwrap();
        assert_eq!((p.phi, p.kind), (0.0, PhaseKind::Pushing));
        assert_eq!(s.phase_state(4.0).unwrap().kind, PhaseKind::Steering);
        assert_eq!(
            s.phase_state(5.8).unwrap().kind,
            PhaseKind::DismountTransition
        );
    }

    #[test]
    fn boundary_belongs_to_later_phase() {
        let s = PhaseSchedule::new(1.0, [0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(
            s.phase_state(0.25).unwrap().kind,
            PhaseKind::MountTransition
        );
        assert_eq!(s.phase_state(0.5).unwrap().kind, PhaseKind::Steering);
        assert_eq!(
            s.phase_state(0.75).unwrap().kind,
            PhaseKind::DismountTransition
        );
    }

    #[test]
    fn sampled_boundaries_snap() {
        let s = PhaseSchedule::<f64>::default();
        let t = 1200.0 * 0.002;
        assert_eq!(s.phase_state(t).unwrap().kind, PhaseKind::MountTransition);
        let p = s.phase_state(3000.0 * 0.002).unwrap();
        assert_eq!((p.phi, p.kind), (0.0, PhaseKind::Pushing));
    }

    #[test]
    fn invalid_schedules() {
        assert!(PhaseSchedule::new(0.0, [0.4, 0.1, 0.45, 0.05]).is_err());
        assert!(PhaseSchedule::new(6.0, [0.4, 0.1, 0.45, 0.06]).is_err());
        assert!(PhaseSchedule::new(6.0, [0.5, 0.0, 0.45, 0.05]).is_err());
        assert!(PhaseSchedule::<f64>::default().phase_state(-1.0).is_err());
    }

    #[test]
    fn phase_windows() {
        let s = PhaseSchedule::<f64>::default();
        let (k, a, b) = s.phase_window(10.0).unwrap();
        assert_eq!(k, PhaseKind::Steering);
        assert!((a - 9.0).abs() < 1e-12 && (b - 11.7).abs() < 1e-12);
        assert!((s.duration(PhaseKind::MountTransition) - 0.6).abs() < 1e-15);
        assert!((s.duration(PhaseKind::DismountTransition) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dispatch_selects_one_phase() {
        assert_eq!(dispatch_reward(PhaseKind::Pushing, 2.0, 9.0, 9.0, 0.5), 2.5);
        assert_eq!(
            dispatch_reward(PhaseKind::Steering, 2.0, 9.0, 9.0, 0.5),
            9.5
        );
        assert_eq!(
            dispatch_reward(PhaseKind::DismountTransition, 2.0, 9.0, 9.0, 0.5),
            9.5
        );
        assert_eq!(
            dispatch_reward(PhaseKind::MountTransition, 2.0, 1.0, 7.0, 0.0),
            7.0
        );
    }
}
