use alloc::string::ToString;

use crate::dlc::{pi_step, PiState};
use crate::domain::GenParams;
use crate::error::SimError;

/// Electrical state of a power generation module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenState {
    /// Injected current, A.
    pub i_g: f64,
    /// DLC integrator, A·s for the current loop, V·s for the voltage loop.
    pub pi_integral: f64,
    /// Shunt capacitor voltage; present only for the capacitor variant.
    pub v_c: Option<f64>,
}

impl GenState {
    pub fn at_rest() -> Self {
        Self {
            i_g: 0.0,
            pi_integral: 0.0,
            v_c: None,
        }
    }

    /// Steady state delivering `p` into a bus held at `v_bus`.
    pub fn steady(params: &GenParams, p: f64, v_bus: f64) -> Self {
        Self {
            i_g: p / v_bus,
            pi_integral: 0.0,
            v_c: params.c_g.map(|_| v_bus),
        }
    }
}

/// Advance a generator one plant step toward the power command `p_cmd`.
///
/// RL variant (ideal bus): `i_ref = p_cmd / v_bus`, the DLC computes
/// `Δv = r_g·i_ref + PI(i_ref − i_g)` and `l_g di/dt = −r_g i + Δv`.
///
/// Shunt-capacitor variant: the DLC regulates the capacitor voltage to
/// `v_bus` with `v_g − v_c = PI(v_bus − v_c)` while the node is drained by
/// `i_ref = p_cmd / v_c`; delivered power is `v_c · i_g`.
///
/// Returns the new state and the delivered power.
pub fn step_pgm(
    params: &GenParams,
    state: GenState,
    p_cmd: f64,
    v_bus: f64,
    dt: f64,
) -> Result<(GenState, f64), SimError> {
    debug_assert!(dt > 0.0);
    if !(v_bus > 0.0) {
        return Err(SimError::InvalidBusVoltage(v_bus));
    }
    let pi = PiState {
        integral: state.pi_integral,
        gains: params.dlc,
    };
    let (next, p_actual) = match (params.c_g, state.v_c) {
        (Some(c_g), Some(v_c)) => {
            let i_ref = p_cmd / v_c;
            let (u, pi) = pi_step(pi, v_bus - v_c, dt);
            let i_g = state.i_g + dt / params.l_g * (-params.r_g * state.i_g + u);
            let v_c = v_c + dt / c_g * (state.i_g - i_ref);
            let next = GenState {
                i_g,
                pi_integral: pi.integral,
                v_c: Some(v_c),
            };
            (next, v_c * i_g)
        }
        _ => {
            let i_ref = p_cmd / v_bus;
            let (u, pi) = pi_step(pi, i_ref - state.i_g, dt);
            let dv = params.r_g * i_ref + u;
            let i_g = state.i_g + dt / params.l_g * (-params.r_g * state.i_g + dv);
            let next = GenState {
                i_g,
                pi_integral: pi.integral,
                v_c: None,
            };
            (next, v_bus * i_g)
        }
    };
    let finite = next.i_g.is_finite() && next.pi_integral.is_finite() && next.v_c.is_none_or(f64::is_finite);
    if !finite {
        return Err(SimError::DeviceFault {
            device: params.name.to_string(),
            time: f64::NAN,
        });
    }
    Ok((next, p_actual))
}
