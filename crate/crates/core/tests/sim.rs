mod common;

use common::*;
use shipem_core::domain::*;
use shipem_core::plant::soc_discrete_update;
use shipem_core::sim::*;
use shipem_core::SimError;

#[test]
fn profile_examples() {
    let p = sixteen_mw_profile();
    assert_eq!(pulse_load_profile(&p, 0.0).unwrap(), 2.0 * MW);
    assert_eq!(p.peak(), 16.0 * MW);
    assert_eq!(pulse_load_profile(&p, 42.0).unwrap(), 16.0 * MW);
    let h = heuristic().load;
    assert_eq!(pulse_load_profile(&h, 19.0).unwrap(), 12.0 * MW);
    assert_eq!(pulse_load_profile(&h, 20.0).unwrap(), 22.0 * MW);
    assert_eq!(pulse_load_profile(&h, 69.0).unwrap(), 22.0 * MW);
}

#[test]
fn zero_load_run_is_all_zeros() {
    let mut cfg = heuristic();
    let g = &mut cfg.fleet.generators[0];
    g.p_min = 0.0;
    g.p_rated = 0.0;
    g.p_init = 0.0;
    cfg.load = PulseLoadSpec::constant(0.0, 20.0);
    let (trace, m) = run_scenario(&cfg).unwrap();
    assert_eq!(trace.rows.len(), 21);
    for r in &trace.rows {
        assert!(r.p_g.iter().chain(&r.p_b).all(|p| p.abs() < 1.0));
    }
    assert!(m.total_gen_energy_wh().abs() < 1e-2);
    assert!(m.total_batt_abs_energy_wh() < 1e-2);
    assert!((m.capacity_loss_pct[0] - 100.0).abs() < 1e-9);
}

#[test]
fn trace_cadence_and_determinism() {
    let cfg = four_zone(EmMode::Distributed);
    let (a, ma) = run_scenario(&cfg).unwrap();
    let (b, mb) = run_scenario(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ma, mb);
    assert_eq!(a.rows.len(), cfg.ticks() + 1);
    for w in a.rows.windows(2) {
        assert!((w[1].t - w[0].t - cfg.t_s).abs() < 1e-12);
    }
}

/// Applied commands respect every device limit and the traced SoC follows
/// the discrete update of the traced battery power.
fn audit(cfg: &ScenarioConfig, trace: &SimulationTrace) {
    let tol = 1e-6 * MW;
    let fleet = &cfg.fleet;
    let mut prev_g: Vec<f64> = fleet.generators.iter().map(|g| g.p_init).collect();
    let mut prev_b: Vec<f64> = fleet.batteries.iter().map(|b| b.p_init).collect();
    for (k, r) in trace.rows.iter().enumerate() {
        let sum: f64 = r.p_g.iter().chain(&r.p_b).sum();
        assert!((sum - r.p_load).abs() <= r.residual + 1e-6, "t = {}", r.t);
        for (i, g) in fleet.generators.iter().enumerate() {
            assert!(r.p_g[i] >= g.p_min - tol && r.p_g[i] <= g.p_max + tol);
            assert!((r.p_g[i] - prev_g[i]).abs() <= g.ramp + tol);
        }
        for (j, b) in fleet.batteries.iter().enumerate() {
            assert!(r.p_b[j] >= b.p_min - tol && r.p_b[j] <= b.p_max + tol);
            assert!((r.p_b[j] - prev_b[j]).abs() <= b.ramp + tol);
            assert!(r.q[j] >= b.q_min - 1e-6 && r.q[j] <= b.q_max + 1e-6, "q = {}", r.q[j]);
            if let Some(next) = trace.rows.get(k + 1) {
                let rebuilt = soc_discrete_update(r.q[j], r.p_b[j], cfg.t_s, b.capacity, cfg.v_bus);
                assert!((rebuilt - next.q[j]).abs() <= 1e-6, "{rebuilt} vs {}", next.q[j]);
            }
        }
        prev_g.clone_from(&r.p_g);
        prev_b.clone_from(&r.p_b);
    }
}

#[test]
fn constraints_and_soc_reconstruction_hold() {
    for cfg in [
        four_zone(EmMode::Centralized),
        four_zone(EmMode::Distributed),
        heuristic(),
        sweep_study(),
    ] {
        let (trace, m) = run_scenario(&cfg).unwrap();
        assert_eq!(m.fallback_ticks, 0);
        audit(&cfg, &trace);
    }
}

#[test]
fn central_tracking_is_numerically_exact() {
    let (trace, m) = run_scenario(&four_zone(EmMode::Centralized)).unwrap();
    assert!(m.rms_tracking_error <= 1e-6 * 16.0 * MW, "{}", m.rms_tracking_error);
    // the residual column is the solver's own balance figure
    for r in &trace.rows {
        let sum: f64 = r.p_g.iter().chain(&r.p_b).sum();
        assert!((sum - r.p_load).abs() <= r.residual + 1e-9);
    }
}

#[test]
fn scenario_ordering() {
    let runs: Vec<Metrics> = (1..=3)
        .map(|s| run_scenario(&scenario_config(&heuristic(), s).unwrap()).unwrap().1)
        .collect();
    let ah: Vec<f64> = runs.iter().map(|m| m.batt_throughput_ah[0]).collect();
    assert!(ah[1] <= ah[2] && ah[2] <= ah[0], "{ah:?}");
    let remaining: Vec<f64> = runs.iter().map(|m| m.capacity_loss_pct[0]).collect();
    assert!(
        remaining[1] >= remaining[0] && remaining[1] >= remaining[2],
        "{remaining:?}"
    );
    let drift: Vec<f64> = runs.iter().map(|m| (m.q_final[0] - 0.75).abs()).collect();
    assert!(drift[2] <= drift[0] && drift[2] <= drift[1], "{drift:?}");
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-6)
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9) - 1e-6)
}

#[test]
fn weight_sweeps_trade_battery_for_generator() {
    let values = [0.0, 1.0, 2.0, 5.0, 10.0];
    let cfg = sweep_study();
    let gp = sweep_weights(&cfg, SweepParam::GammaP, &values).unwrap();
    let batt: Vec<f64> = gp.iter().map(|(_, m)| m.total_batt_abs_energy_wh()).collect();
    let gen: Vec<f64> = gp.iter().map(|(_, m)| m.total_gen_energy_wh()).collect();
    assert!(non_increasing(&batt) && non_decreasing(&gen), "{batt:?} {gen:?}");
    assert_eq!(gp.iter().map(|(v, _)| *v).collect::<Vec<_>>(), values);

    let beta = sweep_weights(&cfg, SweepParam::Beta, &values).unwrap();
    let batt: Vec<f64> = beta.iter().map(|(_, m)| m.total_batt_abs_energy_wh()).collect();
    let gen: Vec<f64> = beta.iter().map(|(_, m)| m.total_gen_energy_wh()).collect();
    assert!(non_decreasing(&batt) && non_increasing(&gen), "{batt:?} {gen:?}");
}

#[test]
fn second_battery_weight_shifts_energy_to_the_first() {
    let rows = sweep_weights(
        &four_zone(EmMode::Centralized),
        SweepParam::GammaJ(1),
        &[1.0, 2.0, 5.0, 10.0],
    )
    .unwrap();
    let e1: Vec<f64> = rows.iter().map(|(_, m)| m.batt_abs_energy_wh[0]).collect();
    let e2: Vec<f64> = rows.iter().map(|(_, m)| m.batt_abs_energy_wh[1]).collect();
    assert!(non_decreasing(&e1) && non_increasing(&e2), "{e1:?} {e2:?}");
}

#[test]
fn sweep_rejects_bad_values() {
    let cfg = heuristic();
    assert!(sweep_weights(&cfg, SweepParam::GammaP, &[-1.0]).is_err());
    assert!(sweep_weights(&cfg, SweepParam::GammaP, &[f64::NAN]).is_err());
    assert!(sweep_weights(&cfg, SweepParam::GammaJ(3), &[1.0]).is_err());
}

#[test]
fn nonconvergence_budget_aborts_the_run() {
    let mut cfg = four_zone(EmMode::Distributed);
    cfg.max_iters = 2;
    cfg.warm_start = false;
    match run_scenario(&cfg) {
        Err(SimError::NotConverged { tick, .. }) => assert_eq!(tick, 0),
        other => panic!("{other:?}"),
    }
    cfg.nonconverged_budget = usize::MAX;
    let (trace, m) = run_scenario(&cfg).unwrap();
    assert!(m.nonconverged_ticks > 0);
    assert_eq!(trace.rows.len(), cfg.ticks() + 1);
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = heuristic();
    cfg.fleet.batteries[0].q_min = 0.9;
    assert!(matches!(run_scenario(&cfg), Err(SimError::Config(_))));
}

#[test]
fn plant_trace_is_optional() {
    let mut cfg = heuristic();
    cfg.load = PulseLoadSpec::constant(12.0 * MW, 2.0);
    let (trace, _) = run_scenario_with(
        &cfg,
        RunOptions {
            plant_trace: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(trace.plant.as_ref().map(Vec::len), Some(2000));
    let (trace, _) = run_scenario(&cfg).unwrap();
    assert!(trace.plant.is_none());
}
