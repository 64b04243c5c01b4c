//! Scenario documents.
//!
//! A scenario is a JSON object. Powers are in MW, voltages in kV, battery
//! capacity in A·h and times in seconds; everything is converted to SI once,
//! here. Keys mirror the field names of [`ScenarioConfig`], so a validation
//! error such as ``invalid `batteries[0].q_min`: q_min >= q_max`` points at
//! the offending key. See `configs/` for complete examples.
//!
//! | key | unit | default |
//! |-----|------|---------|
//! | `v_bus` | kV | required |
//! | `horizon` | steps | 5 |
//! | `t_s`, `t_plant` | s | 1, 0.001 |
//! | `em_mode` | `centralized` / `distributed` | `centralized` |
//! | `alpha` | per MW | 0.1 |
//! | `eps_tol` | MW | 0.001 |
//! | `max_iters` | | 500 |
//! | `generators[].p_min, p_max, p_rated, ramp, p_init` | MW, ramp per MPC step | `p_min` 0, `p_init` = `p_rated` |
//! | `generators[].beta` | | 1 |
//! | `batteries[].capacity` | A·h | required |
//! | `batteries[].c1, c2` | kV | 0, `v_bus` − 0.05 |
//! | `batteries[].p_min, p_max, ramp, p_init` | MW | `p_min` = −`p_max`, `p_init` 0 |
//! | `batteries[].gamma_p, gamma_q` | | 1, 0 |
//! | `load.base, pulses[].amplitude, rating` | MW | |
//!
//! Overrides (`key=value`) address the same keys with dots or brackets,
//! e.g. `alpha=0.2`, `batteries.1.gamma_p=5`, `generators[0].beta=2`. They
//! are applied to the document before validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use shipem_core::domain::*;
use shipem_core::qp::QpSettings;
use shipem_core::sim::{Pulse, PulseLoadSpec};
use shipem_core::ConfigError;

use crate::error::{Error, Result};

/// Default open-circuit offset below the bus voltage, kV.
const BATT_C2_MARGIN_KV: f64 = 0.05;

fn to_si(x: f64, unit: f64) -> f64 {
    x * unit
}

/// Inverse of [`to_si`] that reloads to exactly `v` whenever a nearby
/// document value does.
fn from_si(v: f64, unit: f64) -> f64 {
    let x = v / unit;
    if !x.is_finite() || to_si(x, unit) == v {
        return x;
    }
    let up = x.next_up();
    let down = x.next_down();
    [up, down, up.next_up(), down.next_down()]
        .into_iter()
        .find(|c| to_si(*c, unit) == v)
        .unwrap_or(x)
}

fn mw(v: f64) -> f64 {
    from_si(v, W_PER_MW)
}

fn w(x: f64) -> f64 {
    to_si(x, W_PER_MW)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeDoc {
    #[default]
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDoc {
    #[serde(default)]
    pub name: String,
    pub r_g: f64,
    pub l_g: f64,
    #[serde(default)]
    pub c_g: Option<f64>,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    pub p_rated: f64,
    pub ramp: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub p_init: Option<f64>,
    #[serde(default = "gen_kp")]
    pub kp: f64,
    #[serde(default = "gen_ki")]
    pub ki: f64,
    #[serde(default)]
    pub windup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BattDoc {
    #[serde(default)]
    pub name: String,
    pub r_b: f64,
    /// A·h
    pub capacity: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub p_min: Option<f64>,
    pub p_max: f64,
    pub ramp: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q0: f64,
    #[serde(default = "one")]
    pub gamma_p: f64,
    #[serde(default)]
    pub gamma_q: f64,
    #[serde(default)]
    pub p_init: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlywheelDoc {
    #[serde(default)]
    pub name: String,
    /// kg·m²; alternatively `mass` and `radius` of a solid disc.
    #[serde(default)]
    pub inertia: Option<f64>,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    pub omega_max: f64,
    pub tau_max: f64,
    #[serde(default)]
    pub omega0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadModelDoc {
    pub r_l: f64,
    pub l_l: f64,
    pub kp: f64,
    pub ki: f64,
    pub windup: Option<f64>,
}

impl Default for LoadModelDoc {
    fn default() -> Self {
        Self {
            r_l: 0.05,
            l_l: 0.01,
            kp: DEFAULT_LOAD_DLC.kp,
            ki: DEFAULT_LOAD_DLC.ki,
            windup: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseDoc {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadDoc {
    pub base: f64,
    #[serde(default)]
    pub pulses: Vec<PulseDoc>,
    pub total_duration: f64,
    #[serde(default)]
    pub rating: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegradationDoc {
    pub zeta1: f64,
    pub zeta2: f64,
    pub temperature: f64,
    pub gas_constant: f64,
    pub c_rate: Option<f64>,
    pub rho: f64,
}

impl Default for DegradationDoc {
    fn default() -> Self {
        let d = DegradationParams::default();
        Self {
            zeta1: d.zeta1,
            zeta2: d.zeta2,
            temperature: d.temperature,
            gas_constant: d.gas_constant,
            c_rate: d.c_rate,
            rho: d.rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpDoc {
    pub rho: f64,
    pub sigma: f64,
    pub relaxation: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_infeasible: f64,
    pub max_iters: usize,
    pub infeasibility_after: usize,
    pub adaptive_rho: bool,
    pub adapt_interval: usize,
    pub polish: bool,
}

impl Default for QpDoc {
    fn default() -> Self {
        QpDoc::from(&QpSettings::default())
    }
}

impl From<&QpSettings> for QpDoc {
    fn from(s: &QpSettings) -> Self {
        Self {
            rho: s.rho,
            sigma: s.sigma,
            relaxation: s.relaxation,
            eps_abs: s.eps_abs,
            eps_rel: s.eps_rel,
            eps_infeasible: s.eps_infeasible,
            max_iters: s.max_iters,
            infeasibility_after: s.infeasibility_after,
            adaptive_rho: s.adaptive_rho,
            adapt_interval: s.adapt_interval,
            polish: s.polish,
        }
    }
}

/// The scenario document as written on disk (human units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    /// kV
    pub v_bus: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub t_s: f64,
    #[serde(default = "default_t_plant")]
    pub t_plant: f64,
    #[serde(default)]
    pub em_mode: ModeDoc,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// MW
    #[serde(default = "default_eps_tol")]
    pub eps_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default)]
    pub nonconverged_budget: usize,
    #[serde(default)]
    pub generators: Vec<GenDoc>,
    #[serde(default)]
    pub batteries: Vec<BattDoc>,
    #[serde(default)]
    pub flywheels: Vec<FlywheelDoc>,
    #[serde(default)]
    pub load_model: LoadModelDoc,
    pub load: LoadDoc,
    #[serde(default)]
    pub degradation: DegradationDoc,
    #[serde(default)]
    pub qp: QpDoc,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn gen_kp() -> f64 {
    DEFAULT_GEN_DLC.kp
}
fn gen_ki() -> f64 {
    DEFAULT_GEN_DLC.ki
}
fn default_horizon() -> usize {
    5
}
fn default_t_plant() -> f64 {
    1e-3
}
fn default_alpha() -> f64 {
    0.1
}
fn default_eps_tol() -> f64 {
    1e-3
}
fn default_max_iters() -> usize {
    500
}

impl ConfigDoc {
    /// Convert to SI. The result is not yet validated.
    pub fn to_config(&self) -> Result<ScenarioConfig, ConfigError> {
        let v_bus = to_si(self.v_bus, V_PER_KV);
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| GenParams {
                name: if g.name.is_empty() {
                    format!("pgm{}", i + 1)
                } else {
                    g.name.clone()
                },
                r_g: g.r_g,
                l_g: g.l_g,
                c_g: g.c_g,
                p_min: w(g.p_min),
                p_max: w(g.p_max),
                p_rated: w(g.p_rated),
                ramp: w(g.ramp),
                beta: g.beta,
                p_init: w(g.p_init.unwrap_or(g.p_rated)),
                dlc: PiGains {
                    kp: g.kp,
                    ki: g.ki,
                    windup: g.windup,
                },
            })
            .collect();
        let batteries = self
            .batteries
            .iter()
            .enumerate()
            .map(|(j, b)| BattParams {
                name: if b.name.is_empty() {
                    format!("pcm{}", j + 1)
                } else {
                    b.name.clone()
                },
                r_b: b.r_b,
                capacity: to_si(b.capacity, AS_PER_AH),
                c1: to_si(b.c1, V_PER_KV),
                c2: to_si(b.c2.unwrap_or(self.v_bus - BATT_C2_MARGIN_KV), V_PER_KV),
                p_min: w(b.p_min.unwrap_or(-b.p_max)),
                p_max: w(b.p_max),
                ramp: w(b.ramp),
                q_min: b.q_min,
                q_max: b.q_max,
                q0: b.q0,
                gamma_p: b.gamma_p,
                gamma_q: b.gamma_q,
                p_init: w(b.p_init),
            })
            .collect();
        let flywheels = self
            .flywheels
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let inertia = match (f.inertia, f.mass, f.radius) {
                    (Some(i), None, None) => i,
                    (None, Some(m), Some(r)) => FlywheelParams::disc_inertia(m, r),
                    _ => {
                        return Err(ConfigError::new(
                            format!("flywheels[{j}].inertia"),
                            "give either inertia or mass and radius",
                        ))
                    }
                };
                Ok(FlywheelParams {
                    name: if f.name.is_empty() {
                        format!("fw{}", j + 1)
                    } else {
                        f.name.clone()
                    },
                    inertia,
                    omega_max: f.omega_max,
                    tau_max: f.tau_max,
                    omega0: f.omega0,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let lm = &self.load_model;
        let d = &self.degradation;
        let q = &self.qp;
        Ok(ScenarioConfig {
            fleet: DeviceFleet {
                generators,
                batteries,
                flywheels,
                load: LoadParams {
                    r_l: lm.r_l,
                    l_l: lm.l_l,
                    dlc: PiGains {
                        kp: lm.kp,
                        ki: lm.ki,
                        windup: lm.windup,
                    },
                },
            },
            v_bus,
            horizon: self.horizon,
            t_s: self.t_s,
            t_plant: self.t_plant,
            load: PulseLoadSpec {
                base: w(self.load.base),
                pulses: self
                    .load
                    .pulses
                    .iter()
                    .map(|p| Pulse {
                        start: p.start,
                        end: p.end,
                        amplitude: w(p.amplitude),
                    })
                    .collect(),
                total_duration: self.load.total_duration,
                rating: self.load.rating.map(w),
            },
            em_mode: match self.em_mode {
                ModeDoc::Centralized => EmMode::Centralized,
                ModeDoc::Distributed => EmMode::Distributed,
            },
            alpha: self.alpha,
            eps_tol: w(self.eps_tol),
            max_iters: self.max_iters,
            warm_start: self.warm_start,
            nonconverged_budget: self.nonconverged_budget,
            degradation: DegradationParams {
                zeta1: d.zeta1,
                zeta2: d.zeta2,
                temperature: d.temperature,
                gas_constant: d.gas_constant,
                c_rate: d.c_rate,
                rho: d.rho,
            },
            qp: QpSettings {
                rho: q.rho,
                sigma: q.sigma,
                relaxation: q.relaxation,
                eps_abs: q.eps_abs,
                eps_rel: q.eps_rel,
                eps_infeasible: q.eps_infeasible,
                max_iters: q.max_iters,
                infeasibility_after: q.infeasibility_after,
                adaptive_rho: q.adaptive_rho,
                adapt_interval: q.adapt_interval,
                polish: q.polish,
                record_history: false,
            },
        })
    }

    /// Document with every key explicit.
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let d = &cfg.degradation;
        let lm = &cfg.fleet.load;
        Self {
            v_bus: from_si(cfg.v_bus, V_PER_KV),
            horizon: cfg.horizon,
            t_s: cfg.t_s,
            t_plant: cfg.t_plant,
            em_mode: match cfg.em_mode {
                EmMode::Centralized => ModeDoc::Centralized,
                EmMode::Distributed => ModeDoc::Distributed,
            },
            alpha: cfg.alpha,
            eps_tol: mw(cfg.eps_tol),
            max_iters: cfg.max_iters,
            warm_start: cfg.warm_start,
            nonconverged_budget: cfg.nonconverged_budget,
            generators: cfg
                .fleet
                .generators
                .iter()
                .map(|g| GenDoc {
                    name: g.name.clone(),
                    r_g: g.r_g,
                    l_g: g.l_g,
                    c_g: g.c_g,
                    p_min: mw(g.p_min),
                    p_max: mw(g.p_max),
                    p_rated: mw(g.p_rated),
                    ramp: mw(g.ramp),
                    beta: g.beta,
                    p_init: Some(mw(g.p_init)),
                    kp: g.dlc.kp,
                    ki: g.dlc.ki,
                    windup: g.dlc.windup,
                })
                .collect(),
            batteries: cfg
                .fleet
                .batteries
                .iter()
                .map(|b| BattDoc {
                    name: b.name.clone(),
                    r_b: b.r_b,
                    capacity: from_si(b.capacity, AS_PER_AH),
                    c1: from_si(b.c1, V_PER_KV),
                    c2: Some(from_si(b.c2, V_PER_KV)),
                    p_min: Some(mw(b.p_min)),
                    p_max: mw(b.p_max),
                    ramp: mw(b.ramp),
                    q_min: b.q_min,
                    q_max: b.q_max,
                    q0: b.q0,
                    gamma_p: b.gamma_p,
                    gamma_q: b.gamma_q,
                    p_init: mw(b.p_init),
                })
                .collect(),
            flywheels: cfg
                .fleet
                .flywheels
                .iter()
                .map(|f| FlywheelDoc {
                    name: f.name.clone(),
                    inertia: Some(f.inertia),
                    mass: None,
                    radius: None,
                    omega_max: f.omega_max,
                    tau_max: f.tau_max,
                    omega0: f.omega0,
                })
                .collect(),
            load_model: LoadModelDoc {
                r_l: lm.r_l,
                l_l: lm.l_l,
                kp: lm.dlc.kp,
                ki: lm.dlc.ki,
                windup: lm.dlc.windup,
            },
            load: LoadDoc {
                base: mw(cfg.load.base),
                pulses: cfg
                    .load
                    .pulses
                    .iter()
                    .map(|p| PulseDoc {
                        start: p.start,
                        end: p.end,
                        amplitude: mw(p.amplitude),
                    })
                    .collect(),
                total_duration: cfg.load.total_duration,
                rating: cfg.load.rating.map(mw),
            },
            degradation: DegradationDoc {
                zeta1: d.zeta1,
                zeta2: d.zeta2,
                temperature: d.temperature,
                gas_constant: d.gas_constant,
                c_rate: d.c_rate,
                rho: d.rho,
            },
            qp: QpDoc::from(&cfg.qp),
        }
    }
}

/// One `key=value` assignment. The value is read as JSON when it parses as
/// JSON and as a bare string otherwise, so `em_mode=distributed` works.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

impl std::str::FromStr for Override {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, value) = s.split_once('=').ok_or_else(|| Error::Override {
            key: s.to_string(),
            reason: "expected key=value".into(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Override {
                key: s.to_string(),
                reason: "empty key".into(),
            });
        }
        let value = serde_json::from_str(value.trim()).unwrap_or_else(|_| Value::String(value.trim().to_string()));
        Ok(Self {
            key: key.to_string(),
            value,
        })
    }
}

fn key_path(key: &str) -> Vec<String> {
    key.replace('[', ".")
        .replace(']', "")
        .split('.')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn apply_override(doc: &mut Value, ov: &Override) -> Result<()> {
    let err = |reason: String| Error::Override {
        key: ov.key.clone(),
        reason,
    };
    let mut node = doc;
    for seg in key_path(&ov.key) {
        node = match node {
            Value::Object(map) => map.get_mut(&seg).ok_or_else(|| err(format!("no key `{seg}`")))?,
            Value::Array(items) => {
                let len = items.len();
                let i: usize = seg.parse().map_err(|_| err(format!("`{seg}` is not a list index")))?;
                items
                    .get_mut(i)
                    .ok_or_else(|| err(format!("index {i} out of range (len {len})")))?
            }
            _ => return Err(err(format!("`{seg}` does not address a nested key"))),
        };
    }
    *node = ov.value.clone();
    Ok(())
}

/// Parse a document, apply `overrides`, convert to SI and validate.
pub fn load_config_with(text: &str, overrides: &[Override]) -> Result<ScenarioConfig> {
    let mut doc: ConfigDoc = serde_json::from_str(text)?;
    if !overrides.is_empty() {
        // work on the fully spelled-out document so defaulted keys exist too
        let mut value = serde_json::to_value(&doc)?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        doc = serde_json::from_value(value)?;
    }
    let cfg = doc.to_config()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    load_config_with(text, &[])
}

pub fn load_config_file(path: &Path, overrides: &[Override]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::input(path))?;
    load_config_with(&text, overrides)
}

/// Pretty-printed document with every key explicit. Reloading it gives back
/// `cfg` exactly.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    let mut s = serde_json::to_string_pretty(&ConfigDoc::from_config(cfg)).expect("plain data serializes");
    s.push('\n');
    s
}
