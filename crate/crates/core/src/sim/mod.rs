//! Two-rate co-simulation: the plant integrates at `t_plant` while the
//! energy manager runs every `t_s`, applying the first step of each plan
//! as a zero-order hold.

mod metrics;
mod profile;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use metrics::{compute_metrics, Metrics};
pub use profile::{pulse_load_profile, Pulse, PulseLoadSpec};

use crate::central::{apply_weights, Allocation, CentralMpc, Measurements};
use crate::distributed::DistributedEm;
use crate::domain::{EmMode, ScenarioConfig};
use crate::error::SimError;
use crate::plant::{
    step_flywheel, step_pcm, step_pgm, step_plm, update_degradation, DegradationState, FlywheelState, GenState,
    PlmState, SocState,
};

/// One EM tick. Powers in W, `q_loss` in A·s.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Demanded load.
    pub p_load: f64,
    /// Power delivered by the plant sources at the tick.
    pub p_sup: f64,
    /// Commands applied from this tick.
    pub p_g: Vec<f64>,
    pub p_b: Vec<f64>,
    /// Measured SoC at the tick.
    pub q: Vec<f64>,
    pub q_loss: Vec<f64>,
    /// Dual-ascent iterations (distributed) or ADMM iterations (centralized).
    pub iters: usize,
    /// Final balance residual of the EM solve, W.
    pub residual: f64,
}

/// Plant-rate sample, recorded only on request.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSample {
    pub t: f64,
    pub p_load: f64,
    pub p_g: Vec<f64>,
    pub p_b: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    /// The centralized problem was infeasible; the balance slack was used.
    BalanceSlack { tick: usize, t: f64 },
    /// Dual ascent stopped at `max_iters` above `eps_tol`.
    NotConverged { tick: usize, t: f64, residual: f64 },
    /// A battery's plant SoC left `[0, 1]` and was clamped.
    SocClamped { tick: usize, battery: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub gen_names: Vec<String>,
    pub batt_names: Vec<String>,
    /// Battery capacities, A·s.
    pub capacities: Vec<f64>,
    pub v_bus: f64,
    pub t_s: f64,
    pub rows: Vec<TraceRow>,
    pub events: Vec<SimEvent>,
    pub plant: Option<Vec<PlantSample>>,
}

impl SimulationTrace {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            gen_names: cfg.fleet.generators.iter().map(|g| g.name.clone()).collect(),
            batt_names: cfg.fleet.batteries.iter().map(|b| b.name.clone()).collect(),
            capacities: cfg.fleet.batteries.iter().map(|b| b.capacity).collect(),
            v_bus: cfg.v_bus,
            t_s: cfg.t_s,
            rows: Vec::new(),
            events: Vec::new(),
            plant: None,
        }
    }
}

/// Additive measurement perturbation applied before every EM solve.
pub type MeasurementHook = fn(tick: usize, meas: &mut Measurements);

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record every plant step.
    pub plant_trace: bool,
    pub measurement_noise: Option<MeasurementHook>,
}

enum Manager {
    Central(alloc::boxed::Box<CentralMpc>),
    Distributed(DistributedEm),
}

struct Solved {
    alloc: Allocation,
    residual: f64,
    event: Option<SimEvent>,
}

impl Manager {
    fn solve(&mut self, tick: usize, t: f64, meas: &Measurements) -> Result<Solved, SimError> {
        let em = |source| SimError::Em { tick, source };
        match self {
            Manager::Central(mpc) => {
                let alloc = mpc.solve(meas).map_err(em)?;
                let event = alloc.used_fallback().then_some(SimEvent::BalanceSlack { tick, t });
                Ok(Solved {
                    residual: alloc.balance_residual,
                    alloc,
                    event,
                })
            }
            Manager::Distributed(d) => {
                let c = d.coordinate(meas).map_err(em)?;
                if c.diverged {
                    return Err(SimError::NotConverged {
                        tick,
                        time: t,
                        residual: c.dual.residual,
                    });
                }
                let event = (!c.converged).then_some(SimEvent::NotConverged {
                    tick,
                    t,
                    residual: c.dual.residual,
                });
                Ok(Solved {
                    residual: c.dual.residual,
                    alloc: c.allocation,
                    event,
                })
            }
        }
    }
}

fn fault_time(e: SimError, t: f64) -> SimError {
    match e {
        SimError::DeviceFault { device, .. } => SimError::DeviceFault { device, time: t },
        other => other,
    }
}

/// Run the full closed loop and summarize it.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(SimulationTrace, Metrics), SimError> {
    run_scenario_with(cfg, RunOptions::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: RunOptions) -> Result<(SimulationTrace, Metrics), SimError> {
    cfg.validate()?;
    let fleet = &cfg.fleet;
    let v_bus = cfg.v_bus;
    let dt = cfg.t_plant;
    let substeps = cfg.substeps();
    let ticks = cfg.ticks();

    let mut manager = match cfg.em_mode {
        EmMode::Centralized => Manager::Central(alloc::boxed::Box::new(CentralMpc::new(cfg))),
        EmMode::Distributed => Manager::Distributed(DistributedEm::new(cfg)),
    };
    let mut gens: Vec<GenState> = fleet
        .generators
        .iter()
        .map(|g| GenState::steady(g, g.p_init, v_bus))
        .collect();
    let mut socs: Vec<SocState> = fleet.batteries.iter().map(|b| SocState { q: b.q0 }).collect();
    let mut degs: Vec<DegradationState> = fleet
        .batteries
        .iter()
        .map(|b| DegradationState::new(&cfg.degradation, cfg.degradation.c_rate_for(b, v_bus)))
        .collect();
    let mut wheels: Vec<FlywheelState> = fleet
        .flywheels
        .iter()
        .map(|f| FlywheelState { omega: f.omega0 })
        .collect();
    let p_load0 = pulse_load_profile(&cfg.load, 0.0)?;
    let mut plm = PlmState {
        i_l: p_load0 / v_bus,
        pi_integral: 0.0,
    };

    let mut cmd_g: Vec<f64> = fleet.generators.iter().map(|g| g.p_init).collect();
    let mut cmd_b: Vec<f64> = fleet.batteries.iter().map(|b| b.p_init).collect();
    let mut p_sup: f64 = cmd_g.iter().chain(&cmd_b).sum();
    let mut nonconverged = 0usize;

    let mut trace = SimulationTrace::new(cfg);
    let mut plant = opts.plant_trace.then(Vec::new);

    for tick in 0..=ticks {
        let t = tick as f64 * cfg.t_s;
        let p_load = pulse_load_profile(&cfg.load, t.min(cfg.load.total_duration))?;
        let mut meas = Measurements {
            p_g_prev: cmd_g.clone(),
            p_b_prev: cmd_b.clone(),
            q: socs.iter().map(|s| s.q).collect(),
            p_load,
        };
        if let Some(hook) = opts.measurement_noise {
            hook(tick, &mut meas);
        }
        let solved = manager.solve(tick, t, &meas)?;
        if let Some(ev) = solved.event {
            if let SimEvent::NotConverged { residual, .. } = ev {
                nonconverged += 1;
                if nonconverged > cfg.nonconverged_budget {
                    return Err(SimError::NotConverged {
                        tick,
                        time: t,
                        residual,
                    });
                }
            }
            trace.events.push(ev);
        }
        cmd_g = solved.alloc.first_gen_commands();
        cmd_b = solved.alloc.first_batt_commands();
        trace.rows.push(TraceRow {
            t,
            p_load,
            p_sup,
            p_g: cmd_g.clone(),
            p_b: cmd_b.clone(),
            q: meas.q.clone(),
            q_loss: degs.iter().map(|d| d.q_loss).collect(),
            iters: solved.alloc.iterations,
            residual: solved.residual,
        });
        if tick == ticks {
            break;
        }

        // hold the commands over one MPC step
        let mut clamped = vec![false; socs.len()];
        for s in 0..substeps {
            let ts = t + (s + 1) as f64 * dt;
            let mut supplied = 0.0;
            let mut pg = Vec::with_capacity(gens.len());
            for (i, g) in fleet.generators.iter().enumerate() {
                let (next, p) = step_pgm(g, gens[i], cmd_g[i], v_bus, dt).map_err(|e| fault_time(e, ts))?;
                gens[i] = next;
                supplied += p;
                pg.push(p);
            }
            let mut pb = Vec::with_capacity(socs.len());
            for (j, b) in fleet.batteries.iter().enumerate() {
                let step = step_pcm(b, socs[j], cmd_b[j], v_bus, dt).map_err(|e| fault_time(e, ts))?;
                socs[j] = step.soc;
                clamped[j] |= step.clamped;
                degs[j] = update_degradation(degs[j], step.i_b, dt);
                let p = v_bus * step.i_b;
                supplied += p;
                pb.push(p);
            }
            for (w, f) in wheels.iter_mut().zip(&fleet.flywheels) {
                *w = step_flywheel(f, *w, 0.0, dt).map_err(|e| fault_time(e, ts))?.state;
            }
            let (next, p_drawn) = step_plm(&fleet.load, plm, p_load, v_bus, dt).map_err(|e| fault_time(e, ts))?;
            plm = next;
            p_sup = supplied;
            if let Some(samples) = plant.as_mut() {
                samples.push(PlantSample {
                    t: ts,
                    p_load: p_drawn,
                    p_g: pg,
                    p_b: pb,
                    q: socs.iter().map(|s| s.q).collect(),
                });
            }
        }
        for (battery, _) in clamped.iter().enumerate().filter(|(_, c)| **c) {
            trace.events.push(SimEvent::SocClamped { tick, battery });
        }
    }
    trace.plant = plant;
    let metrics = compute_metrics(&trace);
    Ok((trace, metrics))
}

/// Parameter varied by [`sweep_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// All generators' `beta`.
    Beta,
    /// All batteries' `gamma_p`.
    GammaP,
    /// All batteries' `gamma_q`.
    GammaQ,
    /// `gamma_p` of battery `j` only.
    GammaJ(usize),
}

/// Copy of `cfg` with `param` set to `value`.
pub fn with_param(cfg: &ScenarioConfig, param: SweepParam, value: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    match param {
        SweepParam::Beta => c.fleet.generators.iter_mut().for_each(|g| g.beta = value),
        SweepParam::GammaP => c.fleet.batteries.iter_mut().for_each(|b| b.gamma_p = value),
        SweepParam::GammaQ => c.fleet.batteries.iter_mut().for_each(|b| b.gamma_q = value),
        SweepParam::GammaJ(j) => {
            if let Some(b) = c.fleet.batteries.get_mut(j) {
                b.gamma_p = value;
            }
        }
    }
    c
}

/// One full run per value, in input order.
pub fn sweep_weights(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<(f64, Metrics)>, SimError> {
    if let SweepParam::GammaJ(j) = param {
        if j >= cfg.fleet.batteries.len() {
            return Err(SimError::Em {
                tick: 0,
                source: crate::EmError::InvalidArgument("gamma_j index out of range".into()),
            });
        }
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(SimError::Em {
            tick: 0,
            source: crate::EmError::InvalidArgument(alloc::format!("sweep value {v} must be finite and >= 0")),
        });
    }
    values
        .iter()
        .map(|&v| run_scenario(&with_param(cfg, param, v)).map(|(_, m)| (v, m)))
        .collect()
}

/// Apply one of the three heuristic weight scenarios to a copy of `cfg`.
pub fn scenario_config(cfg: &ScenarioConfig, scenario: u32) -> Result<ScenarioConfig, crate::EmError> {
    let w = crate::central::scenario_weights(scenario)?;
    let mut c = cfg.clone();
    apply_weights(&mut c, w);
    Ok(c)
}
