#![allow(dead_code)]

use shipem_core::domain::*;
use shipem_core::qp::QpSettings;
use shipem_core::sim::{Pulse, PulseLoadSpec};

pub const MW: f64 = 1e6;

pub fn generator(name: &str, p_max: f64, p_rated: f64, ramp: f64, p_init: f64) -> GenParams {
    GenParams {
        name: name.into(),
        r_g: 0.05,
        l_g: 0.01,
        c_g: None,
        p_min: 0.2 * MW,
        p_max,
        p_rated,
        ramp,
        beta: 1.0,
        p_init,
        dlc: DEFAULT_GEN_DLC,
    }
}

pub fn battery(name: &str, p_max: f64, ramp: f64, q_min: f64, q_max: f64, q0: f64) -> BattParams {
    BattParams {
        name: name.into(),
        r_b: 0.05,
        capacity: 20.0 * AS_PER_AH,
        c1: 1000.0,
        c2: 11_500.0,
        p_min: -p_max,
        p_max,
        ramp,
        q_min,
        q_max,
        q0,
        gamma_p: 1.0,
        gamma_q: 0.0,
        p_init: 0.0,
    }
}

pub fn config(fleet: DeviceFleet, load: PulseLoadSpec, em_mode: EmMode) -> ScenarioConfig {
    ScenarioConfig {
        fleet,
        v_bus: 12e3,
        horizon: 5,
        t_s: 1.0,
        t_plant: 1e-3,
        load,
        em_mode,
        alpha: 0.1,
        eps_tol: 1e3,
        max_iters: 500,
        warm_start: true,
        nonconverged_budget: 0,
        degradation: DegradationParams::default(),
        qp: QpSettings::default(),
    }
}

fn load_model() -> LoadParams {
    LoadParams {
        r_l: 0.05,
        l_l: 0.01,
        dlc: DEFAULT_LOAD_DLC,
    }
}

/// Two 29 MW generators (15 MW desired) and two ±10.64 MW batteries,
/// driven by the three-pulse 16 MW profile.
pub fn four_zone(em_mode: EmMode) -> ScenarioConfig {
    let fleet = DeviceFleet {
        generators: vec![
            generator("pgm1", 29.0 * MW, 15.0 * MW, 2.9 * MW, 1.0 * MW),
            generator("pgm2", 29.0 * MW, 15.0 * MW, 2.9 * MW, 1.0 * MW),
        ],
        batteries: vec![
            battery("pcm1", 10.64 * MW, 10.1 * MW, 0.4, 0.9, 0.5),
            battery("pcm2", 10.64 * MW, 10.1 * MW, 0.4, 0.9, 0.5),
        ],
        flywheels: vec![],
        load: load_model(),
    };
    config(fleet, sixteen_mw_profile(), em_mode)
}

pub fn sixteen_mw_profile() -> PulseLoadSpec {
    PulseLoadSpec {
        base: 2.0 * MW,
        pulses: vec![
            Pulse {
                start: 10.0,
                end: 15.0,
                amplitude: 6.0 * MW,
            },
            Pulse {
                start: 25.0,
                end: 30.0,
                amplitude: 10.0 * MW,
            },
            Pulse {
                start: 40.0,
                end: 45.0,
                amplitude: 14.0 * MW,
            },
        ],
        total_duration: 50.0,
        rating: Some(16.0 * MW),
    }
}

/// Single generator / battery with the heuristics-chapter bounds and a
/// 20-70 s pulse.
pub fn heuristic() -> ScenarioConfig {
    let mut g = generator("pgm", 28.0 * MW, 15.0 * MW, 2.8 * MW, 12.0 * MW);
    g.p_init = 12.0 * MW;
    let fleet = DeviceFleet {
        generators: vec![g],
        batteries: vec![battery("pcm", 10.0 * MW, 10.0 * MW, 0.7, 0.8, 0.75)],
        flywheels: vec![],
        load: load_model(),
    };
    let load = PulseLoadSpec {
        base: 12.0 * MW,
        pulses: vec![Pulse {
            start: 20.0,
            end: 70.0,
            amplitude: 10.0 * MW,
        }],
        total_duration: 100.0,
        rating: Some(28.0 * MW),
    };
    config(fleet, load, EmMode::Centralized)
}

/// Single unit with the sweep-study limits (SoC 0.4-0.9, 2.9 MW ramp) and a
/// base load at the generator's desired point, so the battery only ever
/// helps with the pulse.
pub fn sweep_study() -> ScenarioConfig {
    let mut cfg = heuristic();
    let g = &mut cfg.fleet.generators[0];
    g.ramp = 2.9 * MW;
    g.p_init = 15.0 * MW;
    let b = &mut cfg.fleet.batteries[0];
    b.q_min = 0.4;
    b.q_max = 0.9;
    b.q0 = 0.85;
    b.gamma_p = 1.0;
    cfg.load.base = 15.0 * MW;
    cfg.load.rating = Some(25.0 * MW);
    cfg
}
