use crate::dlc::{pi_step, PiState};
use crate::domain::LoadParams;
use crate::error::SimError;

/// Static resistive load drawing `p_l` from the bus: returns `(v_L, i_L)`.
pub fn static_load(p_l: f64, v_bus: f64, r_l: f64) -> Result<(f64, f64), SimError> {
    if !(v_bus > 0.0) {
        return Err(SimError::InvalidBusVoltage(v_bus));
    }
    let v_l = (v_bus * v_bus - p_l * r_l) / v_bus;
    Ok((v_l, (v_bus - v_l) / r_l))
}

/// Controllable power load: a current sink regulated through its voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlmState {
    pub i_l: f64,
    pub pi_integral: f64,
}

/// `l_L di/dt = −r_L i + ṽ` with `ṽ = PI(i_ref − i)` and `i_ref = p_l / v_bus`.
/// Returns the new state and the power drawn.
pub fn step_plm(
    params: &LoadParams,
    state: PlmState,
    p_l: f64,
    v_bus: f64,
    dt: f64,
) -> Result<(PlmState, f64), SimError> {
    if !(v_bus > 0.0) {
        return Err(SimError::InvalidBusVoltage(v_bus));
    }
    let i_ref = p_l / v_bus;
    let pi = PiState {
        integral: state.pi_integral,
        gains: params.dlc,
    };
    let (v_tilde, pi) = pi_step(pi, i_ref - state.i_l, dt);
    let i_l = state.i_l + dt / params.l_l * (-params.r_l * state.i_l + v_tilde);
    if !i_l.is_finite() {
        return Err(SimError::DeviceFault {
            device: "load".into(),
            time: f64::NAN,
        });
    }
    Ok((
        PlmState {
            i_l,
            pi_integral: pi.integral,
        },
        v_bus * i_l,
    ))
}
