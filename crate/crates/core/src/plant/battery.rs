use crate::domain::BattParams;
use crate::error::SimError;

/// Battery state of charge in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocState {
    pub q: f64,
}

/// Result of one battery plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmStep {
    /// Controlled source voltage, V.
    pub v_b: f64,
    /// Battery current (positive discharging), A.
    pub i_b: f64,
    pub soc: SocState,
    /// The raw update left `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// Discrete SoC update `q − T_s / (Q·v) · p_b`. No clamping; the MPC
/// constraint builder shares this arithmetic.
pub fn soc_discrete_update(q: f64, p_b: f64, t_s: f64, capacity: f64, v: f64) -> f64 {
    q - t_s / (capacity * v) * p_b
}

/// Algebraic battery exchange for command `p_cmd` on a bus at `v_bus`,
/// followed by the Euler SoC update `q' = q − (dt/Q)·i_b`.
pub fn step_pcm(params: &BattParams, soc: SocState, p_cmd: f64, v_bus: f64, dt: f64) -> Result<PcmStep, SimError> {
    if !(v_bus > 0.0) || !v_bus.is_finite() {
        return Err(SimError::InvalidBusVoltage(v_bus));
    }
    let v_oc = params.v_oc(soc.q);
    let v_b = (v_bus * v_bus - p_cmd * params.r_b - v_bus * v_oc) / v_bus;
    let i_b = (v_bus - v_b - v_oc) / params.r_b;
    let raw = soc.q - dt / params.capacity * i_b;
    let q = raw.clamp(0.0, 1.0);
    Ok(PcmStep {
        v_b,
        i_b,
        soc: SocState { q },
        clamped: q != raw,
    })
}
