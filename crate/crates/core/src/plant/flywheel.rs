use crate::domain::FlywheelParams;
use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlywheelState {
    /// Angular velocity, rad/s.
    pub omega: f64,
}

impl FlywheelState {
    /// Stored kinetic energy `½ I ω²`, J.
    pub fn energy(&self, params: &FlywheelParams) -> f64 {
        0.5 * params.inertia * self.omega * self.omega
    }

    /// `ω² / ω_max²`.
    pub fn soc(&self, params: &FlywheelParams) -> f64 {
        (self.omega * self.omega) / (params.omega_max * params.omega_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlywheelStep {
    pub state: FlywheelState,
    /// Mechanical power `τ · ω'`, W.
    pub p_f: f64,
    pub soc_f: f64,
}

/// `ω' = ω + τ/I · dt`, clamped to `[0, ω_max]`.
pub fn step_flywheel(
    params: &FlywheelParams,
    state: FlywheelState,
    tau_cmd: f64,
    dt: f64,
) -> Result<FlywheelStep, SimError> {
    if !(tau_cmd.abs() <= params.tau_max) {
        return Err(SimError::TorqueOutOfRange {
            torque: tau_cmd,
            limit: params.tau_max,
        });
    }
    let omega = (state.omega + tau_cmd / params.inertia * dt).clamp(0.0, params.omega_max);
    let state = FlywheelState { omega };
    Ok(FlywheelStep {
        state,
        p_f: tau_cmd * omega,
        soc_f: state.soc(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wheel() -> FlywheelParams {
        FlywheelParams {
            name: "fw".into(),
            inertia: 1.0,
            omega_max: 200.0,
            tau_max: 50.0,
            omega0: 100.0,
        }
    }

    #[test]
    fn full_speed_is_full_charge() {
        let p = wheel();
        assert_eq!(FlywheelState { omega: 200.0 }.soc(&p), 1.0);
    }

    #[test]
    fn stored_energy_hand_value() {
        assert_eq!(FlywheelState { omega: 100.0 }.energy(&wheel()), 5000.0);
    }

    #[test]
    fn zero_torque_holds() {
        let p = wheel();
        let s = FlywheelState { omega: 100.0 };
        let out = step_flywheel(&p, s, 0.0, 0.01).unwrap();
        assert_eq!(out.state, s);
        assert_eq!(out.p_f, 0.0);
        assert_eq!(out.soc_f, 0.25);
    }

    #[test]
    fn speed_clamped_and_torque_checked() {
        let p = wheel();
        let out = step_flywheel(&p, FlywheelState { omega: 199.9 }, 50.0, 1.0).unwrap();
        assert_eq!(out.state.omega, 200.0);
        let out = step_flywheel(&p, FlywheelState { omega: 0.1 }, -50.0, 1.0).unwrap();
        assert_eq!(out.state.omega, 0.0);
        assert!(step_flywheel(&p, FlywheelState { omega: 1.0 }, 51.0, 1.0).is_err());
    }
}
