mod common;

use common::*;
use shipem_core::central::*;
use shipem_core::distributed::*;
use shipem_core::domain::*;
use shipem_core::plant::soc_discrete_update;
use shipem_core::qp::QpSettings;
use shipem_core::sim::{run_scenario, PulseLoadSpec};
use shipem_core::{EmError, SimError};

fn one_each(p_rated: f64, gamma_p: f64, load: f64) -> ScenarioConfig {
    let mut g = generator("pgm", 28.0 * MW, p_rated, 2.8 * MW, load.max(0.2 * MW));
    g.p_init = load.clamp(g.p_min, g.p_max);
    let mut b = battery("pcm", 10.0 * MW, 10.0 * MW, 0.7, 0.8, 0.75);
    b.gamma_p = gamma_p;
    let fleet = DeviceFleet {
        generators: vec![g],
        batteries: vec![b],
        flywheels: vec![],
        load: four_zone(EmMode::Centralized).fleet.load,
    };
    config(fleet, PulseLoadSpec::constant(load, 10.0), EmMode::Centralized)
}

#[test]
fn scenario_weight_table() {
    assert_eq!(scenario_weights(1).unwrap(), (1.0, 0.0, 0.0));
    assert_eq!(scenario_weights(2).unwrap(), (1.0, 1000.0, 0.0));
    assert_eq!(scenario_weights(3).unwrap(), (1.0, 0.0, 1000.0));
    assert!(matches!(scenario_weights(4), Err(EmError::UnknownScenario(4))));
}

#[test]
fn problem_shape_one_gen_one_batt() {
    let cfg = one_each(15.0 * MW, 1.0, 15.0 * MW);
    let prob = build_central_qp(&cfg, &Measurements::initial(&cfg, 15.0 * MW)).unwrap();
    assert_eq!(prob.q.len(), 15);
    let equalities = prob.l.iter().zip(&prob.u).filter(|(l, u)| l == u).count();
    assert_eq!(equalities, 10);
}

#[test]
fn rated_bounds_reach_box_rows() {
    let cfg = heuristic();
    let prob = build_central_qp(&cfg, &Measurements::initial(&cfg, 12.0 * MW)).unwrap();
    let has = |l: f64, u: f64| {
        prob.l
            .iter()
            .zip(&prob.u)
            .any(|(a, b)| (a - l).abs() < 1e-12 && (b - u).abs() < 1e-12)
    };
    assert!(has(0.2, 28.0));
    assert!(has(-10.0, 10.0));
    // SoC rows are in percent
    assert!(has(70.0, 80.0));
}

#[test]
fn dimension_mismatch_is_reported() {
    let cfg = heuristic();
    let mut meas = Measurements::initial(&cfg, 12.0 * MW);
    meas.q.push(0.5);
    assert!(matches!(
        build_central_qp(&cfg, &meas),
        Err(EmError::DimensionMismatch(_))
    ));
}

#[test]
fn zero_problem_has_zero_solution() {
    let mut cfg = one_each(0.0, 0.0, 0.0);
    let g = &mut cfg.fleet.generators[0];
    g.p_min = 0.0;
    g.p_rated = 0.0;
    g.p_init = 0.0;
    cfg.fleet.batteries[0].gamma_q = 0.0;
    let alloc = solve_central_mpc(&cfg, &Measurements::initial(&cfg, 0.0)).unwrap();
    // the objective is flat in the battery power up to the regularizer, so
    // zero holds to the solver tolerance (1e-6 MW)
    for p in alloc.p_g.iter().chain(&alloc.p_b) {
        assert!(p.as_slice().iter().all(|v| v.abs() < 1.0), "{p:?}");
    }
}

#[test]
fn generator_holds_reference_when_load_matches() {
    let cfg = one_each(15.0 * MW, 1000.0, 15.0 * MW);
    let alloc = solve_central_mpc(&cfg, &Measurements::initial(&cfg, 15.0 * MW)).unwrap();
    for k in 0..cfg.horizon {
        assert!((alloc.p_g[0][k] - 15.0 * MW).abs() < 1.0);
        assert!(alloc.p_b[0][k].abs() < 1.0);
    }
}

#[test]
fn ramp_limited_step_matches_grid_oracle() {
    // generator at 2 MW with a 2.9 MW/step ramp faces a 14 MW load
    let mut cfg = four_zone(EmMode::Centralized);
    cfg.fleet.generators.truncate(1);
    cfg.fleet.batteries.truncate(1);
    cfg.horizon = 2;
    cfg.fleet.generators[0].p_init = 2.0 * MW;
    let meas = Measurements::initial(&cfg, 14.0 * MW);
    let alloc = solve_central_mpc(&cfg, &meas).unwrap();

    // on the balance manifold p_b = p_L − p_g, search (p_g0, p_g1) at 1 kW
    let f = |g0: f64, g1: f64| {
        let b = [14.0 - g0, 14.0 - g1];
        0.5 * ((g0 - 15.0).powi(2) + (g1 - 15.0).powi(2)) + 0.5 * (b[0] * b[0] + b[1] * b[1])
    };
    let feasible = |g0: f64, g1: f64| {
        let (b0, b1) = (14.0 - g0, 14.0 - g1);
        (0.2..=4.9).contains(&g0)
            && (g1 - g0).abs() <= 2.9 + 1e-12
            && b0.abs() <= 10.1 + 1e-12
            && b1.abs() <= 10.64
            && (b1 - b0).abs() <= 10.1
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=4700 {
        let g0 = 0.2 + i as f64 * 1e-3;
        for j in -2900..=2900 {
            let g1 = g0 + j as f64 * 1e-3;
            if feasible(g0, g1) && f(g0, g1) < best.0 {
                best = (f(g0, g1), g0, g1);
            }
        }
    }
    assert!(
        (alloc.p_g[0][0] / MW - best.1).abs() <= 2e-3,
        "{:?} vs {best:?}",
        alloc.p_g
    );
    assert!((alloc.p_g[0][1] / MW - best.2).abs() <= 2e-3);
    assert!(alloc.balance_residual <= 1e-3 * 14.0);
    // the battery covers what the ramp cannot
    assert!((alloc.p_b[0][0] - 9.1 * MW).abs() < 10.0);
}

#[test]
fn infeasible_tick_falls_back_to_slack() {
    let mut cfg = four_zone(EmMode::Centralized);
    cfg.fleet.generators.truncate(1);
    cfg.fleet.batteries.truncate(1);
    let mut mpc = CentralMpc::new(&cfg);
    // 1 MW generator plus a 10.1 MW battery ramp cannot meet 16 MW
    let alloc = mpc.solve(&Measurements::initial(&cfg, 16.0 * MW)).unwrap();
    assert!(alloc.used_fallback());
    assert_eq!(mpc.infeasible_events, 1);
    assert!(alloc.slack.unwrap()[0] > 0.9 * MW);
}

fn check_invariants(cfg: &ScenarioConfig, meas: &Measurements, alloc: &Allocation) {
    let tol = 1e-6 * MW;
    assert!(
        alloc.balance_residual <= 1e-3 * (meas.p_load / MW).max(1.0),
        "{}",
        alloc.balance_residual
    );
    for (i, g) in cfg.fleet.generators.iter().enumerate() {
        let p = alloc.p_g[i].as_slice();
        let mut prev = meas.p_g_prev[i];
        for &v in p {
            assert!(v >= g.p_min - tol && v <= g.p_max + tol);
            assert!((v - prev).abs() <= g.ramp + tol, "gen ramp {} -> {}", prev, v);
            prev = v;
        }
    }
    for (j, b) in cfg.fleet.batteries.iter().enumerate() {
        let p = alloc.p_b[j].as_slice();
        let q = alloc.soc[j].as_slice();
        let mut prev = meas.p_b_prev[j];
        let mut qprev = meas.q[j];
        for (&v, &qk) in p.iter().zip(q) {
            assert!(v >= b.p_min - tol && v <= b.p_max + tol);
            assert!((v - prev).abs() <= b.ramp + tol);
            assert!(qk >= b.q_min - 1e-9 && qk <= b.q_max + 1e-9);
            let rebuilt = soc_discrete_update(qprev, v, cfg.t_s, b.capacity, cfg.v_bus);
            assert!((rebuilt - qk).abs() <= 1e-9, "chain {rebuilt} vs {qk}");
            prev = v;
            qprev = qk;
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn central_solutions_respect_constraints(
            load in 0.0f64..16.0,
            g1 in 0.2f64..10.0,
            g2 in 0.2f64..10.0,
            b1 in -10.0f64..10.0,
            b2 in -10.0f64..10.0,
            q1 in 0.45f64..0.85,
            q2 in 0.45f64..0.85,
            gamma_q in prop_oneof![Just(0.0), Just(1.0), Just(1000.0)],
        ) {
            let mut cfg = four_zone(EmMode::Centralized);
            cfg.fleet.batteries.iter_mut().for_each(|b| b.gamma_q = gamma_q);
            let meas = Measurements {
                p_g_prev: vec![g1 * MW, g2 * MW],
                p_b_prev: vec![b1 * MW, b2 * MW],
                q: vec![q1, q2],
                p_load: load * MW,
            };
            let alloc = solve_central_mpc(&cfg, &meas).unwrap();
            prop_assume!(!alloc.used_fallback());
            check_invariants(&cfg, &meas, &alloc);
        }

        #[test]
        fn node_order_does_not_matter(load in 3.0f64..16.0) {
            let mut cfg = four_zone(EmMode::Distributed);
            cfg.fleet.generators[1].p_rated = 14.0 * MW;
            cfg.fleet.batteries[1].gamma_p = 2.0;
            cfg.fleet.generators[0].p_init = 5.0 * MW;
            let mut swapped = cfg.clone();
            swapped.fleet.generators.reverse();
            swapped.fleet.batteries.reverse();
            let a = coordinate(&cfg, &Measurements::initial(&cfg, load * MW)).unwrap();
            let b = coordinate(&swapped, &Measurements::initial(&swapped, load * MW)).unwrap();
            prop_assert!(a.converged && b.converged);
            for k in 0..cfg.horizon {
                for i in 0..2 {
                    prop_assert!((a.allocation.p_g[i][k] - b.allocation.p_g[1 - i][k]).abs() <= 1e-9 * MW);
                    prop_assert!((a.allocation.p_b[i][k] - b.allocation.p_b[1 - i][k]).abs() <= 1e-9 * MW);
                }
            }
        }
    }
}

#[test]
fn battery_energy_falls_with_gamma_p() {
    let cfg = heuristic();
    let values = [0.0, 1.0, 10.0, 100.0, 1000.0];
    let rows = shipem_core::sim::sweep_weights(&cfg, shipem_core::sim::SweepParam::GammaP, &values).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (w[0].1.total_batt_abs_energy_wh(), w[1].1.total_batt_abs_energy_wh());
        assert!(
            b <= a * (1.0 + 1e-9) + 1e-6,
            "gamma_p {} -> {}: {a} -> {b}",
            w[0].0,
            w[1].0
        );
    }
}

// distributed

fn settings() -> QpSettings {
    QpSettings::default()
}

#[test]
fn pgm_node_examples() {
    let g = generator("pgm", 29.0 * MW, 15.0 * MW, 2.9 * MW, 15.0 * MW);
    let p = solve_pgm_node(&g, &[0.0; 5], 15.0 * MW, &settings()).unwrap();
    assert!(p.as_slice().iter().all(|v| (v - 15.0 * MW).abs() < 1.0));
    let p = solve_pgm_node(&g, &[1.5; 5], 15.0 * MW, &settings()).unwrap();
    assert!(p.as_slice().iter().all(|v| (v - 13.5 * MW).abs() < 1.0), "{p:?}");
    // a large price pins the unit at its lower bound once the ramp allows
    let p = solve_pgm_node(&g, &[100.0; 5], 1.0 * MW, &settings()).unwrap();
    assert!(p.as_slice().iter().all(|v| (v - 0.2 * MW).abs() < 1.0), "{p:?}");
}

#[test]
fn pcm_node_examples() {
    let b = battery("pcm", 10.64 * MW, 10.1 * MW, 0.0, 1.0, 0.5);
    let kappa = b.kappa(1.0, 12e3);
    let (p, q) = solve_pcm_node(&b, &[0.0; 5], 0.0, 0.5, kappa, &settings()).unwrap();
    assert!(p.as_slice().iter().all(|v| v.abs() < 1.0));
    assert!(q.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-9));
    let (p, _) = solve_pcm_node(&b, &[1.0; 5], 0.0, 0.5, kappa, &settings()).unwrap();
    assert!(p.as_slice().iter().all(|v| (v + 1.0 * MW).abs() < 1.0), "{p:?}");
}

#[test]
fn full_battery_refuses_to_charge() {
    let b = battery("pcm", 10.64 * MW, 10.1 * MW, 0.0, 0.9, 0.5);
    let kappa = b.kappa(1.0, 12e3);
    let (p, q) = solve_pcm_node(&b, &[1.0; 2], 0.0, 0.9, kappa, &settings()).unwrap();
    // grid oracle on (p0, p1) in MW: charging is infeasible, discharging costs
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in -1000..=1000 {
        for j in -1000..=1000 {
            let (p0, p1) = (i as f64 * 1e-2, j as f64 * 1e-2);
            let q1 = 0.9 - kappa * MW * p0;
            let q2 = q1 - kappa * MW * p1;
            if q1 > 0.9 || q2 > 0.9 {
                continue;
            }
            let f = 0.5 * (p0 * p0 + p1 * p1) + p0 + p1;
            if f < best.0 {
                best = (f, p0, p1);
            }
        }
    }
    assert_eq!((best.1, best.2), (0.0, 0.0));
    assert!(p.as_slice().iter().all(|v| v.abs() < 1.0), "{p:?}");
    assert!(q.as_slice().iter().all(|v| *v <= 0.9 + 1e-9));
}

#[test]
fn dual_update_examples() {
    let s = DualState::zeros(3);
    let same = dual_update(&s, &[15e6; 3], 15e6, 0.1);
    assert_eq!(same.lambda, vec![0.0; 3]);
    assert_eq!(same.residual, 0.0);
    assert_eq!(same.iteration, 1);
    let up = dual_update(&s, &[16e6; 3], 15e6, 0.1);
    assert!(up.lambda.iter().all(|l| (l - 0.1).abs() < 1e-15));
    assert_eq!(up.residual, 1e6);
}

#[test]
fn residual_decreases_on_four_zone_instance() {
    let mut cfg = four_zone(EmMode::Distributed);
    cfg.warm_start = false;
    for load in [2.0, 8.0, 12.0, 16.0] {
        let c = coordinate(&cfg, &Measurements::initial(&cfg, load * MW)).unwrap();
        assert!(c.converged, "load {load}");
        assert!(c.dual.residual <= cfg.eps_tol);
        for w in c.residual_history.windows(2) {
            assert!(w[1] < w[0], "load {load}: {:?}", c.residual_history);
        }
    }
}

#[test]
fn single_generator_price_is_closed_form() {
    let g = generator("pgm", 28.0 * MW, 15.0 * MW, 2.8 * MW, 12.0 * MW);
    let fleet = DeviceFleet {
        generators: vec![g],
        batteries: vec![],
        flywheels: vec![],
        load: four_zone(EmMode::Distributed).fleet.load,
    };
    let cfg = config(fleet, PulseLoadSpec::constant(12.0 * MW, 10.0), EmMode::Distributed);
    let c = coordinate(&cfg, &Measurements::initial(&cfg, 12.0 * MW)).unwrap();
    assert!(c.converged);
    // λ* = β (p_r − p_f) per MW
    for (l, p) in c.dual.lambda.iter().zip(c.allocation.p_g[0].as_slice()) {
        assert!((l - 3.0).abs() <= 2e-3, "{:?}", c.dual.lambda);
        assert!((p - 12.0 * MW).abs() <= cfg.eps_tol);
    }
}

#[test]
fn distributed_matches_central_in_closed_loop() {
    let (central, _) = run_scenario(&four_zone(EmMode::Centralized)).unwrap();
    let (dist, m) = run_scenario(&four_zone(EmMode::Distributed)).unwrap();
    assert_eq!(m.nonconverged_ticks, 0);
    for (a, b) in central.rows.iter().zip(&dist.rows) {
        for (x, y) in a.p_g.iter().chain(&a.p_b).zip(b.p_g.iter().chain(&b.p_b)) {
            assert!((x - y).abs() <= 1e-2 * MW, "t = {}: {x} vs {y}", a.t);
        }
    }
}

#[test]
fn horizon_profiles_match_central() {
    let cfg = four_zone(EmMode::Distributed);
    for load in [2.0, 8.0, 16.0] {
        let meas = Measurements::initial(&cfg, load * MW);
        let d = coordinate(&cfg, &meas).unwrap().allocation;
        let c = solve_central_mpc(&cfg, &meas).unwrap();
        for (x, y) in d.p_g.iter().chain(&d.p_b).zip(c.p_g.iter().chain(&c.p_b)) {
            for k in 0..cfg.horizon {
                assert!((x[k] - y[k]).abs() <= 1e-2 * MW, "load {load}: {x:?} vs {y:?}");
            }
        }
    }
}

#[test]
fn large_step_is_reported_as_divergence() {
    let mut cfg = four_zone(EmMode::Distributed);
    cfg.alpha = 1.0;
    let c = coordinate(&cfg, &Measurements::initial(&cfg, 16.0 * MW)).unwrap();
    assert!(c.diverged && !c.converged);
    assert!(c.residual_history.len() < cfg.max_iters);
    assert!(matches!(
        run_scenario(&cfg),
        Err(SimError::NotConverged { tick: 0, .. })
    ));
}
