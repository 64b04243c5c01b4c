use proptest::prelude::*;
use shipem_core::dlc::*;
use shipem_core::domain::*;
use shipem_core::plant::*;

fn gen() -> GenParams {
    GenParams {
        name: "pgm".into(),
        r_g: 0.05,
        l_g: 0.01,
        c_g: None,
        p_min: 0.2e6,
        p_max: 28e6,
        p_rated: 15e6,
        ramp: 2.8e6,
        beta: 1.0,
        p_init: 0.2e6,
        dlc: DEFAULT_GEN_DLC,
    }
}

fn batt(r_b: f64) -> BattParams {
    BattParams {
        name: "pcm".into(),
        r_b,
        capacity: 20.0 * AS_PER_AH,
        c1: 0.0,
        c2: 11_950.0,
        p_min: -10e6,
        p_max: 10e6,
        ramp: 10e6,
        q_min: 0.0,
        q_max: 1.0,
        q0: 0.75,
        gamma_p: 1.0,
        gamma_q: 0.0,
        p_init: 0.0,
    }
}

fn step_response(dt: f64, duration: f64) -> f64 {
    let g = gen();
    let mut s = GenState::at_rest();
    let mut p = 0.0;
    for _ in 0..(duration / dt).round() as usize {
        let (next, out) = step_pgm(&g, s, 15e6, 12e3, dt).unwrap();
        s = next;
        p = out;
    }
    p
}

#[test]
fn generator_step_settles_within_one_percent() {
    let p = step_response(1e-3, 10.0);
    let reference = step_response(1e-5, 10.0);
    assert!((p - 15e6).abs() <= 0.01 * 15e6, "{p}");
    assert!((p - reference).abs() <= 0.01 * 15e6);
}

#[test]
fn pcm_exchange_is_power_over_voltage_as_resistance_shrinks() {
    // the algebraic source model gives v_bus·i_b = p_cmd for every r_b;
    // only cancellation error remains, and it stays negligible
    for k in 0..10 {
        let r_b = 0.05 / 2f64.powi(k);
        let step = step_pcm(&batt(r_b), SocState { q: 0.75 }, 10e6, 12e3, 1e-3).unwrap();
        let err = (12e3 * step.i_b - 10e6).abs();
        assert!(err <= 1e-9 * 10e6, "r_b = {r_b}: {err}");
    }
    let step = step_pcm(&batt(1e-6), SocState { q: 0.75 }, 10e6, 12e3, 1e-3).unwrap();
    assert!((step.i_b - 833.333_333).abs() < 1e-3);
}

#[test]
fn ten_megawatts_for_one_second() {
    let mut soc = SocState { q: 0.75 };
    for _ in 0..1000 {
        soc = step_pcm(&batt(0.05), soc, 10e6, 12e3, 1e-3).unwrap().soc;
    }
    assert!((soc.q - 0.738426).abs() < 1e-6);
    assert!((soc_discrete_update(0.75, 1e7, 1.0, 72_000.0, 12e3) - 0.738426).abs() < 1e-6);
    assert!((soc_discrete_update(0.75, -1e7, 1.0, 72_000.0, 12e3) - 0.761574).abs() < 1e-6);
}

#[test]
fn degradation_hand_values() {
    let params = DegradationParams {
        rho: 1.0,
        ..DegradationParams::default()
    };
    let mut d = DegradationState::new(&params, 1.0);
    for _ in 0..50_000 {
        d = update_degradation(d, 833.333_333_333, 1e-3);
    }
    assert!((d.throughput - 41_666.666_666).abs() < 1e-3);
    let half = DegradationParams { rho: 0.5, ..params };
    let d = update_degradation(DegradationState::new(&half, 1.0), 4.0, 1.0);
    assert!((d.throughput - 2.0).abs() < 1e-12);
    let lost = DegradationState {
        q_loss: 2.0 * AS_PER_AH,
        ..d
    };
    assert!((capacity_loss_percent(&lost, 20.0 * AS_PER_AH) - 90.0).abs() < 1e-12);
}

#[test]
fn adaptive_controller_tracks_hidden_plant() {
    let plant = DcGenPlant {
        r_g: 0.5,
        l_g: 0.5,
        c_g: 0.1,
    };
    let v_ref = 1.0;
    let samples = simulate_adaptive_dcgen(plant, AdaptiveState::new([0.0, 0.0]), v_ref, 0.5, 1e-4, 60.0, 100).unwrap();
    let err = |s: &AdaptiveSample| (s.v_c - v_ref).abs() / v_ref;
    assert!(samples.iter().filter(|s| s.t >= 5.0).all(|s| err(s) < 0.01));
    let bound = samples
        .iter()
        .map(|s| s.theta_hat[0].abs().max(s.theta_hat[1].abs()))
        .fold(0.0, f64::max);
    assert!(bound.is_finite() && bound < 10.0, "{bound}");
    // ∫e² converges: the last half of the run adds almost nothing
    let dt = samples[1].t - samples[0].t;
    let e2 = |from: f64| {
        samples
            .iter()
            .filter(|s| s.t >= from)
            .map(|s| (s.v_c - v_ref).powi(2) * dt)
            .sum::<f64>()
    };
    assert!(e2(30.0) < 1e-3 * e2(0.0));
}

#[test]
fn adaptive_equilibrium_holds_estimate() {
    let s = AdaptiveState::new([0.3, 0.2]);
    let meas = DcGenMeasurement {
        i_g: 2.0,
        i_ref: 2.0,
        v_c: 5.0,
        v_ref: 5.0,
    };
    let (v_g, next) = adaptive_dcgen_step(s, meas, 0.1, 1e-3);
    assert_eq!(next.eta, 0.0);
    assert_eq!(next.theta_hat, s.theta_hat);
    assert!((v_g - (5.0 + 2.0 * 0.3)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn dq_reference_round_trip(p in -1e7f64..1e7, q in -1e7f64..1e7, vd in -1e4f64..1e4, vq in -1e4f64..1e4) {
        prop_assume!(vd.hypot(vq) > 1.0);
        let [id, iq] = dq_current_reference(p, q, [vd, vq]).unwrap();
        let scale = p.abs().max(q.abs()).max(1.0);
        prop_assert!((vd * id + vq * iq - p).abs() <= 1e-9 * scale);
        prop_assert!((vd * iq - vq * id - q).abs() <= 1e-9 * scale);
    }

    #[test]
    fn soc_update_is_linear(q in 0.0f64..1.0, a in -1e7f64..1e7, b in -1e7f64..1e7) {
        let f = |p: f64| soc_discrete_update(q, p, 1.0, 72_000.0, 12e3) - q;
        prop_assert!((f(a + b) - f(a) - f(b)).abs() <= 1e-12);
    }

    #[test]
    fn discrete_update_conserves_energy(q in 0.0f64..1.0, powers in prop::collection::vec(-1e7f64..1e7, 1..20)) {
        let (cap, v, t_s) = (72_000.0, 12e3, 1.0);
        let mut soc = q;
        for &p in &powers {
            soc = soc_discrete_update(soc, p, t_s, cap, v);
        }
        let energy: f64 = powers.iter().sum::<f64>() * t_s;
        prop_assert!((energy + cap * v * (soc - q)).abs() <= 1e-6 * energy.abs().max(1e6));
    }

    #[test]
    fn plant_soc_stays_in_unit_interval(q in 0.0f64..1.0, cmds in prop::collection::vec(-1e7f64..1e7, 1..50)) {
        let b = batt(0.05);
        let mut soc = SocState { q };
        for &p in &cmds {
            // 20 s per command so the bounds are reachable
            for _ in 0..20 {
                soc = step_pcm(&b, soc, p, 12e3, 1.0).unwrap().soc;
                prop_assert!((0.0..=1.0).contains(&soc.q));
            }
        }
    }

    #[test]
    fn capacity_loss_never_decreases(currents in prop::collection::vec(-2e3f64..2e3, 1..100), rho in prop_oneof![Just(0.5), Just(1.0)]) {
        let params = DegradationParams { rho, ..DegradationParams::default() };
        let mut d = DegradationState::new(&params, 1.0);
        for &i in &currents {
            let next = update_degradation(d, i, 1e-3);
            prop_assert!(next.q_loss >= d.q_loss && next.throughput >= d.throughput);
            d = next;
        }
    }

    #[test]
    fn zeta_grows_with_c_rate(c in 0.0f64..10.0, dc in 1e-3f64..5.0) {
        let params = DegradationParams::default();
        prop_assert!(params.zeta_eff(c + dc) > params.zeta_eff(c));
    }

    #[test]
    fn antiwindup_bounds_integral(errors in prop::collection::vec(-1e3f64..1e3, 1..200), bound in 0.1f64..10.0) {
        let gains = PiGains { windup: Some(bound), ..PiGains::new(1.0, 2.0) };
        let mut s = PiState::new(gains);
        for &e in &errors {
            s = pi_step(s, e, 0.01).1;
            prop_assert!(s.integral.abs() <= bound);
        }
    }
}
