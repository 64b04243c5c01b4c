//! Quantity conventions, device parameter records and the validated
//! scenario configuration shared by every other module.
//!
//! Everything here is SI. Human-facing units (MW, kV, A·h) are converted
//! exactly once, by the configuration loader, using the constants below.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Index;

use crate::error::ConfigError;
use crate::math;
use crate::qp::QpSettings;
use crate::sim::PulseLoadSpec;

pub const W_PER_MW: f64 = 1.0e6;
pub const V_PER_KV: f64 = 1.0e3;
/// Ampere-seconds in one ampere-hour.
pub const AS_PER_AH: f64 = 3600.0;
pub const S_PER_H: f64 = 3600.0;

/// Per-step power setpoints (W) across the prediction horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonProfile(Vec<f64>);

impl HorizonProfile {
    /// Returns `None` for an empty vector; a horizon has at least one step.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            None
        } else {
            Some(Self(values))
        }
    }

    pub fn constant(h: usize, value: f64) -> Self {
        assert!(h >= 1, "horizon must have at least one step");
        Self(alloc::vec![value; h])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The setpoint actually applied by the receding-horizon controller.
    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for HorizonProfile {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Proportional-integral gains with an optional symmetric anti-windup bound
/// on the integrator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    pub windup: Option<f64>,
}

impl PiGains {
    pub const fn new(kp: f64, ki: f64) -> Self {
        Self { kp, ki, windup: None }
    }
}

/// Default current-loop gains of the generator device-level controller.
pub const DEFAULT_GEN_DLC: PiGains = PiGains::new(5.0, 50.0);
/// Default current-loop gains of the load device-level controller.
pub const DEFAULT_LOAD_DLC: PiGains = PiGains::new(5.0, 50.0);

/// Power generation module (ramp-limited, unidirectional source).
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub name: String,
    /// Series resistance, Ω.
    pub r_g: f64,
    /// Series inductance, H.
    pub l_g: f64,
    /// Shunt capacitance, F. `Some` selects the RL + shunt-capacitor variant.
    pub c_g: Option<f64>,
    pub p_min: f64,
    pub p_max: f64,
    /// Desired operating point tracked by the generator cost term.
    pub p_rated: f64,
    /// Maximum change between consecutive MPC steps, W per step.
    pub ramp: f64,
    pub beta: f64,
    /// Power delivered at t = 0, also the first ramp anchor.
    pub p_init: f64,
    pub dlc: PiGains,
}

/// Power conversion module (battery storage).
#[derive(Debug, Clone, PartialEq)]
pub struct BattParams {
    pub name: String,
    /// Series resistance, Ω.
    pub r_b: f64,
    /// Capacity, A·s.
    pub capacity: f64,
    /// Open-circuit voltage slope, V per unit SoC.
    pub c1: f64,
    /// Open-circuit voltage offset, V.
    pub c2: f64,
    /// Charging limit (≤ 0), W.
    pub p_min: f64,
    /// Discharging limit (≥ 0), W.
    pub p_max: f64,
    pub ramp: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q0: f64,
    pub gamma_p: f64,
    pub gamma_q: f64,
    /// Power delivered at t = 0, also the first ramp anchor.
    pub p_init: f64,
}

impl BattParams {
    /// Open-circuit voltage at state of charge `q`.
    pub fn v_oc(&self, q: f64) -> f64 {
        self.c1 * q + self.c2
    }

    /// SoC change per W over one step: `T_s / (Q · v)`.
    pub fn kappa(&self, t_s: f64, v_bus: f64) -> f64 {
        t_s / (self.capacity * v_bus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadParams {
    pub r_l: f64,
    pub l_l: f64,
    pub dlc: PiGains,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlywheelParams {
    pub name: String,
    /// Moment of inertia, kg·m².
    pub inertia: f64,
    pub omega_max: f64,
    pub tau_max: f64,
    pub omega0: f64,
}

impl FlywheelParams {
    /// Solid disc inertia `½ m r²`.
    pub fn disc_inertia(mass: f64, radius: f64) -> f64 {
        0.5 * mass * radius * radius
    }
}

/// Arrhenius capacity-loss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationParams {
    pub zeta1: f64,
    /// Activation energy, J/mol.
    pub zeta2: f64,
    /// Battery temperature, K.
    pub temperature: f64,
    /// Gas constant, J/(mol·K).
    pub gas_constant: f64,
    /// C-rate in 1/h. `None` uses each battery's rated discharge C-rate.
    pub c_rate: Option<f64>,
    /// Current exponent in the throughput integrand.
    pub rho: f64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            zeta1: 1.0,
            zeta2: 31_700.0,
            temperature: 298.15,
            gas_constant: 8.314,
            c_rate: None,
            rho: 1.0,
        }
    }
}

impl DegradationParams {
    /// `zeta1 · exp((−zeta2 + T·C_r) / (R·T))`.
    pub fn zeta_eff(&self, c_rate: f64) -> f64 {
        let rt = self.gas_constant * self.temperature;
        self.zeta1 * math::exp((-self.zeta2 + self.temperature * c_rate) / rt)
    }

    /// C-rate used for `batt`: the configured value or `p_max / (v_bus · Q[A·h])`.
    pub fn c_rate_for(&self, batt: &BattParams, v_bus: f64) -> f64 {
        self.c_rate
            .unwrap_or_else(|| batt.p_max / v_bus / (batt.capacity / AS_PER_AH))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceFleet {
    pub generators: Vec<GenParams>,
    pub batteries: Vec<BattParams>,
    pub flywheels: Vec<FlywheelParams>,
    pub load: LoadParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmMode {
    Centralized,
    Distributed,
}

/// Fully validated scenario, SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub fleet: DeviceFleet,
    /// Regulated bus voltage, V.
    pub v_bus: f64,
    /// Prediction horizon in MPC steps.
    pub horizon: usize,
    /// MPC step, s.
    pub t_s: f64,
    /// Plant integration step, s.
    pub t_plant: f64,
    pub load: PulseLoadSpec,
    pub em_mode: EmMode,
    /// Dual-ascent step size (per-MW scaling).
    pub alpha: f64,
    /// Power-balance stopping tolerance, W.
    pub eps_tol: f64,
    pub max_iters: usize,
    /// Warm-start the dual variable from the previous tick.
    pub warm_start: bool,
    /// Number of non-converged distributed ticks tolerated before a run aborts.
    pub nonconverged_budget: usize,
    pub degradation: DegradationParams,
    pub qp: QpSettings,
}

impl ScenarioConfig {
    /// Plant sub-steps per MPC step.
    pub fn substeps(&self) -> usize {
        libm::round(self.t_s / self.t_plant) as usize
    }

    /// Number of MPC ticks; ticks run at `t = k·T_s` for `k = 0..=n`.
    pub fn ticks(&self) -> usize {
        libm::round(self.load.total_duration / self.t_s) as usize
    }

    /// Checks every invariant; violations are reported, never clamped.
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_pos("v_bus", self.v_bus)?;
        if self.horizon < 1 {
            return Err(ConfigError::new("horizon", "h >= 1 required"));
        }
        check_pos("t_s", self.t_s)?;
        check_pos("t_plant", self.t_plant)?;
        if self.t_plant > self.t_s {
            return Err(ConfigError::new("t_plant", "t_plant <= t_s required"));
        }
        let ratio = self.t_s / self.t_plant;
        if (ratio - libm::round(ratio)).abs() > 1e-9 * ratio {
            return Err(ConfigError::new("t_s", "t_s must be an integer multiple of t_plant"));
        }
        match self.em_mode {
            EmMode::Distributed if !(self.alpha > 0.0) || !self.alpha.is_finite() => {
                return Err(ConfigError::new("alpha", "alpha > 0 required in distributed mode"));
            }
            _ if !(self.alpha >= 0.0) || !self.alpha.is_finite() => {
                return Err(ConfigError::new("alpha", "alpha >= 0 required"));
            }
            _ => {}
        }
        check_pos("eps_tol", self.eps_tol)?;
        if self.max_iters < 1 {
            return Err(ConfigError::new("max_iters", "max_iters >= 1 required"));
        }
        self.qp.validate()?;
        validate_degradation(&self.degradation)?;
        self.load.validate()?;
        let ticks = self.load.total_duration / self.t_s;
        if (ticks - libm::round(ticks)).abs() > 1e-9 * ticks.max(1.0) {
            return Err(ConfigError::new(
                "load.total_duration",
                "total_duration must be an integer multiple of t_s",
            ));
        }
        if self.fleet.generators.is_empty() && self.fleet.batteries.is_empty() {
            return Err(ConfigError::new("fleet", "at least one generator or battery required"));
        }
        for (i, g) in self.fleet.generators.iter().enumerate() {
            validate_gen(&format!("generators[{i}]"), g)?;
        }
        for (j, b) in self.fleet.batteries.iter().enumerate() {
            validate_batt(&format!("batteries[{j}]"), b)?;
        }
        for (j, f) in self.fleet.flywheels.iter().enumerate() {
            validate_flywheel(&format!("flywheels[{j}]"), f)?;
        }
        let l = &self.fleet.load;
        check_pos("load_model.r_l", l.r_l)?;
        check_pos("load_model.l_l", l.l_l)?;
        check_gains("load_model", &l.dlc)?;
        Ok(())
    }
}

fn check_pos(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be finite and > 0 (got {x})")))
    }
}

fn check_nonneg(field: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be finite and >= 0 (got {x})")))
    }
}

fn check_finite(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be finite"))
    }
}

fn check_gains(prefix: &str, g: &PiGains) -> Result<(), ConfigError> {
    check_finite(&format!("{prefix}.kp"), g.kp)?;
    check_finite(&format!("{prefix}.ki"), g.ki)?;
    if let Some(w) = g.windup {
        check_pos(&format!("{prefix}.windup"), w)?;
    }
    Ok(())
}

pub(crate) fn validate_gen(p: &str, g: &GenParams) -> Result<(), ConfigError> {
    check_pos(&format!("{p}.r_g"), g.r_g)?;
    check_pos(&format!("{p}.l_g"), g.l_g)?;
    if let Some(c) = g.c_g {
        check_pos(&format!("{p}.c_g"), c)?;
    }
    check_nonneg(&format!("{p}.p_min"), g.p_min)?;
    check_finite(&format!("{p}.p_max"), g.p_max)?;
    if g.p_min >= g.p_max {
        return Err(ConfigError::new(format!("{p}.p_min"), "p_min >= p_max"));
    }
    check_pos(&format!("{p}.ramp"), g.ramp)?;
    if g.ramp > g.p_max - g.p_min {
        return Err(ConfigError::new(format!("{p}.ramp"), "ramp > p_max - p_min"));
    }
    check_finite(&format!("{p}.p_rated"), g.p_rated)?;
    if g.p_rated < g.p_min || g.p_rated > g.p_max {
        return Err(ConfigError::new(
            format!("{p}.p_rated"),
            "p_rated outside [p_min, p_max]",
        ));
    }
    check_nonneg(&format!("{p}.beta"), g.beta)?;
    check_finite(&format!("{p}.p_init"), g.p_init)?;
    if g.p_init < g.p_min || g.p_init > g.p_max {
        return Err(ConfigError::new(format!("{p}.p_init"), "p_init outside [p_min, p_max]"));
    }
    check_gains(&format!("{p}.dlc"), &g.dlc)
}

pub(crate) fn validate_batt(p: &str, b: &BattParams) -> Result<(), ConfigError> {
    check_pos(&format!("{p}.r_b"), b.r_b)?;
    check_pos(&format!("{p}.capacity"), b.capacity)?;
    check_finite(&format!("{p}.c1"), b.c1)?;
    check_finite(&format!("{p}.c2"), b.c2)?;
    if !(b.p_min < 0.0) || !b.p_min.is_finite() {
        return Err(ConfigError::new(format!("{p}.p_min"), "p_min < 0 required"));
    }
    if !(b.p_max > 0.0) || !b.p_max.is_finite() {
        return Err(ConfigError::new(format!("{p}.p_max"), "p_max > 0 required"));
    }
    check_pos(&format!("{p}.ramp"), b.ramp)?;
    for (name, q) in [("q_min", b.q_min), ("q_max", b.q_max), ("q0", b.q0)] {
        if !(0.0..=1.0).contains(&q) {
            return Err(ConfigError::new(format!("{p}.{name}"), "must lie in [0, 1]"));
        }
    }
    if b.q_min >= b.q_max {
        return Err(ConfigError::new(format!("{p}.q_min"), "q_min >= q_max"));
    }
    if b.q0 <= b.q_min || b.q0 > b.q_max {
        return Err(ConfigError::new(format!("{p}.q0"), "q0 outside (q_min, q_max]"));
    }
    check_nonneg(&format!("{p}.gamma_p"), b.gamma_p)?;
    check_nonneg(&format!("{p}.gamma_q"), b.gamma_q)?;
    check_finite(&format!("{p}.p_init"), b.p_init)?;
    if b.p_init < b.p_min || b.p_init > b.p_max {
        return Err(ConfigError::new(format!("{p}.p_init"), "p_init outside [p_min, p_max]"));
    }
    Ok(())
}

fn validate_flywheel(p: &str, f: &FlywheelParams) -> Result<(), ConfigError> {
    check_pos(&format!("{p}.inertia"), f.inertia)?;
    check_pos(&format!("{p}.omega_max"), f.omega_max)?;
    check_pos(&format!("{p}.tau_max"), f.tau_max)?;
    if !(0.0..=f.omega_max).contains(&f.omega0) {
        return Err(ConfigError::new(format!("{p}.omega0"), "omega0 outside [0, omega_max]"));
    }
    Ok(())
}

fn validate_degradation(d: &DegradationParams) -> Result<(), ConfigError> {
    check_nonneg("degradation.zeta1", d.zeta1)?;
    check_finite("degradation.zeta2", d.zeta2)?;
    check_pos("degradation.temperature", d.temperature)?;
    check_pos("degradation.gas_constant", d.gas_constant)?;
    if let Some(c) = d.c_rate {
        check_nonneg("degradation.c_rate", c)?;
    }
    check_pos("degradation.rho", d.rho)
}
