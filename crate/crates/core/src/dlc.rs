//! Device-level controllers: PI loop, adaptive DC-generator voltage
//! controller with online parameter learning, and dq current references.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::domain::PiGains;
use crate::error::SimError;
use crate::math;

/// PI controller state: accumulated error·s plus its gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiState {
    pub integral: f64,
    pub gains: PiGains,
}

impl PiState {
    pub fn new(gains: PiGains) -> Self {
        Self { integral: 0.0, gains }
    }
}

/// One PI update: integrate `error` over `dt` (clamped to the anti-windup
/// bound when set), then return `kp·error + ki·integral'`.
pub fn pi_step(state: PiState, error: f64, dt: f64) -> (f64, PiState) {
    debug_assert!(dt > 0.0);
    let mut integral = state.integral + error * dt;
    if let Some(bound) = state.gains.windup {
        integral = integral.clamp(-bound, bound);
    }
    let u = state.gains.kp * error + state.gains.ki * integral;
    (u, PiState { integral, ..state })
}

/// Adaptive voltage controller for the RL + shunt-capacitor DC generator.
///
/// `theta_hat` estimates `[r_g, l_g]`. The controller drives the filtered
/// error `eta = de/dt + alpha·e` to zero with `v_g = v_c − Y·theta_hat − k·eta`
/// and learns the parameters with `d(theta_hat)/dt = Yᵀ·eta`, where
/// `Y = [−i_g, alpha·(i_g − i_ref)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub theta_hat: [f64; 2],
    pub eta: f64,
    pub e: f64,
    pub k: f64,
    pub alpha: f64,
}

impl AdaptiveState {
    /// Default gains `k = 10`, `alpha = 5` with the given initial estimate.
    pub fn new(theta_hat: [f64; 2]) -> Self {
        Self {
            theta_hat,
            eta: 0.0,
            e: 0.0,
            k: 10.0,
            alpha: 5.0,
        }
    }

    pub fn with_gains(mut self, k: f64, alpha: f64) -> Self {
        self.k = k;
        self.alpha = alpha;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcGenMeasurement {
    pub i_g: f64,
    /// Current drawn from the generator's capacitor node.
    pub i_ref: f64,
    pub v_c: f64,
    pub v_ref: f64,
}

/// One step of the adaptive controller; returns the commanded source
/// voltage `v_g` and the updated state. `de/dt` is reconstructed from the
/// capacitor current balance `(i_g − i_ref) / c_g`.
pub fn adaptive_dcgen_step(state: AdaptiveState, meas: DcGenMeasurement, c_g: f64, dt: f64) -> (f64, AdaptiveState) {
    debug_assert!(dt > 0.0 && c_g > 0.0);
    let e = meas.v_c - meas.v_ref;
    let e_dot = (meas.i_g - meas.i_ref) / c_g;
    let eta = e_dot + state.alpha * e;
    let y = [-meas.i_g, state.alpha * (meas.i_g - meas.i_ref)];
    let y_theta = y[0] * state.theta_hat[0] + y[1] * state.theta_hat[1];
    let v_g = meas.v_c - y_theta - state.k * eta;
    let theta_hat = [
        state.theta_hat[0] + y[0] * eta * dt,
        state.theta_hat[1] + y[1] * eta * dt,
    ];
    (
        v_g,
        AdaptiveState {
            theta_hat,
            eta,
            e,
            ..state
        },
    )
}

/// Hidden plant parameters of the RL + shunt-capacitor generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcGenPlant {
    pub r_g: f64,
    pub l_g: f64,
    pub c_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSample {
    pub t: f64,
    pub v_c: f64,
    pub i_g: f64,
    pub theta_hat: [f64; 2],
}

/// Closed loop of [`adaptive_dcgen_step`] against `plant`, starting
/// discharged, with a constant load current `i_load` drawn from the
/// capacitor node. Forward Euler at `dt`; one sample every `every` steps.
pub fn simulate_adaptive_dcgen(
    plant: DcGenPlant,
    ctrl: AdaptiveState,
    v_ref: f64,
    i_load: f64,
    dt: f64,
    duration: f64,
    every: usize,
) -> Result<Vec<AdaptiveSample>, SimError> {
    if !(dt > 0.0) || !(plant.l_g > 0.0) || !(plant.c_g > 0.0) {
        return Err(SimError::DeviceFault {
            device: "dcgen".to_string(),
            time: 0.0,
        });
    }
    let steps = math::round(duration / dt) as usize;
    let every = every.max(1);
    let (mut i, mut v, mut s) = (0.0, 0.0, ctrl);
    let mut out = Vec::with_capacity(steps / every + 1);
    out.push(AdaptiveSample {
        t: 0.0,
        v_c: v,
        i_g: i,
        theta_hat: s.theta_hat,
    });
    for n in 1..=steps {
        let meas = DcGenMeasurement {
            i_g: i,
            i_ref: i_load,
            v_c: v,
            v_ref,
        };
        let (v_g, next) = adaptive_dcgen_step(s, meas, plant.c_g, dt);
        s = next;
        let di = (v_g - v - plant.r_g * i) / plant.l_g;
        let dv = (i - i_load) / plant.c_g;
        i += dt * di;
        v += dt * dv;
        let t = n as f64 * dt;
        if !(i.is_finite() && v.is_finite()) {
            return Err(SimError::DeviceFault {
                device: "dcgen".to_string(),
                time: t,
            });
        }
        if n % every == 0 {
            out.push(AdaptiveSample {
                t,
                v_c: v,
                i_g: i,
                theta_hat: s.theta_hat,
            });
        }
    }
    Ok(out)
}

/// Load reference current in dq coordinates for active power `p` and
/// reactive power `q` at grid voltage `v_dq`.
pub fn dq_current_reference(p: f64, q: f64, v_dq: [f64; 2]) -> Result<[f64; 2], SimError> {
    let [vd, vq] = v_dq;
    let mag2 = vd * vd + vq * vq;
    if mag2 == 0.0 || !mag2.is_finite() {
        return Err(SimError::SingularVoltage);
    }
    Ok([(vd * p - vq * q) / mag2, (vq * p + vd * q) / mag2])
}
