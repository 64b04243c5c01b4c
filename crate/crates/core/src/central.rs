//! Centralized receding-horizon energy management.
//!
//! One QP per MPC tick over the stacked decision vector
//! `(p_g, p_b, q)` for every step of the horizon, where `q` is the state of
//! charge *after* the step. All powers are scaled to MW inside the QP.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{BattParams, GenParams, HorizonProfile, ScenarioConfig, W_PER_MW};
use crate::error::EmError;
use crate::linalg::Mat;
use crate::plant::soc_discrete_update;
use crate::qp::{QpProblem, QpSettings, QpSolver, QpStatus};

/// Diagonal added to variables that carry no weight so `P` stays definite.
pub const REGULARIZATION: f64 = 1e-9;
/// SoC decision variables are in percent, so the `γ_q` term weighs the
/// deviation from `q₀` in percent.
pub const SOC_TERM_SCALE: f64 = 100.0;
/// Quadratic penalty on the power-balance slack of the fallback problem, per MW².
pub const SLACK_PENALTY: f64 = 1e6;

/// `(beta, gamma_p, gamma_q)` of the three heuristic scenarios.
pub fn scenario_weights(scenario: u32) -> Result<(f64, f64, f64), EmError> {
    match scenario {
        1 => Ok((1.0, 0.0, 0.0)),
        2 => Ok((1.0, 1000.0, 0.0)),
        3 => Ok((1.0, 0.0, 1000.0)),
        s => Err(EmError::UnknownScenario(s)),
    }
}

/// Set the same weights on every device of `cfg`.
pub fn apply_weights(cfg: &mut ScenarioConfig, (beta, gamma_p, gamma_q): (f64, f64, f64)) {
    for g in &mut cfg.fleet.generators {
        g.beta = beta;
    }
    for b in &mut cfg.fleet.batteries {
        b.gamma_p = gamma_p;
        b.gamma_q = gamma_q;
    }
}

/// Plant quantities sampled at an MPC tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    /// Previously applied generator commands, W (ramp anchors).
    pub p_g_prev: Vec<f64>,
    /// Previously applied battery commands, W.
    pub p_b_prev: Vec<f64>,
    /// Battery states of charge.
    pub q: Vec<f64>,
    /// Load, W, held constant over the horizon.
    pub p_load: f64,
}

impl Measurements {
    /// Measurements at `t = 0`: initial powers and SoC from the configuration.
    pub fn initial(cfg: &ScenarioConfig, p_load: f64) -> Self {
        Self {
            p_g_prev: cfg.fleet.generators.iter().map(|g| g.p_init).collect(),
            p_b_prev: cfg.fleet.batteries.iter().map(|b| b.p_init).collect(),
            q: cfg.fleet.batteries.iter().map(|b| b.q0).collect(),
            p_load,
        }
    }

    fn check(&self, cfg: &ScenarioConfig) -> Result<(), EmError> {
        let (ng, nb) = (cfg.fleet.generators.len(), cfg.fleet.batteries.len());
        if self.p_g_prev.len() != ng || self.p_b_prev.len() != nb || self.q.len() != nb {
            return Err(EmError::DimensionMismatch(format!(
                "measurements for {} generators / {} batteries, fleet has {ng} / {nb}",
                self.p_g_prev.len(),
                self.p_b_prev.len()
            )));
        }
        Ok(())
    }
}

/// Optimal power split over the horizon. The first entry of every profile
/// is the command applied at this tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub p_g: Vec<HorizonProfile>,
    pub p_b: Vec<HorizonProfile>,
    pub soc: Vec<HorizonProfile>,
    pub status: QpStatus,
    /// QP iterations (centralized) or dual-ascent iterations (distributed).
    pub iterations: usize,
    /// `max_k |Σ p_g + Σ p_b − p_L|`, W.
    pub balance_residual: f64,
    /// Per-step balance slack, W, when the relaxed fallback problem was used.
    pub slack: Option<Vec<f64>>,
}

impl Allocation {
    pub fn first_gen_commands(&self) -> Vec<f64> {
        self.p_g.iter().map(HorizonProfile::first).collect()
    }

    pub fn first_batt_commands(&self) -> Vec<f64> {
        self.p_b.iter().map(HorizonProfile::first).collect()
    }

    pub fn used_fallback(&self) -> bool {
        self.slack.is_some()
    }
}

/// Sparse row accumulator for `l ≤ A x ≤ u`.
#[derive(Debug, Default)]
pub(crate) struct Rows {
    rows: Vec<Vec<(usize, f64)>>,
    pub(crate) l: Vec<f64>,
    pub(crate) u: Vec<f64>,
}

impl Rows {
    pub(crate) fn push(&mut self, coeffs: &[(usize, f64)], l: f64, u: f64) {
        self.rows.push(coeffs.to_vec());
        self.l.push(l);
        self.u.push(u);
    }

    pub(crate) fn matrix(&self, n: usize) -> Mat {
        let mut a = Mat::zeros(self.rows.len(), n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        a
    }
}

/// Diagonal objective accumulator: `½ Σ w_j (x_j − r_j)²`.
#[derive(Debug)]
pub(crate) struct Objective {
    pub(crate) diag: Vec<f64>,
    pub(crate) lin: Vec<f64>,
}

impl Objective {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            lin: vec![0.0; n],
        }
    }

    pub(crate) fn track(&mut self, j: usize, weight: f64, target: f64) {
        self.diag[j] += weight;
        self.lin[j] -= weight * target;
    }

    pub(crate) fn finish(mut self) -> (Mat, Vec<f64>) {
        for d in &mut self.diag {
            if *d == 0.0 {
                *d = REGULARIZATION;
            }
        }
        (Mat::from_diag(&self.diag), self.lin)
    }
}

fn mw(w: f64) -> f64 {
    w / W_PER_MW
}

/// First-step bounds: the power box intersected with the ramp window around
/// the previous command (clamped into the box first).
fn anchored_box(p_min: f64, p_max: f64, ramp: f64, prev: f64) -> (f64, f64) {
    let prev = prev.clamp(p_min, p_max);
    ((prev - ramp).max(p_min), (prev + ramp).min(p_max))
}

/// Box and ramp rows of one generator; `idx(k)` locates its step-`k` power.
pub(crate) fn gen_rows(rows: &mut Rows, g: &GenParams, h: usize, prev: f64, idx: impl Fn(usize) -> usize) {
    let (p_min, p_max, ramp) = (mw(g.p_min), mw(g.p_max), mw(g.ramp));
    let (lo, hi) = anchored_box(p_min, p_max, ramp, mw(prev));
    rows.push(&[(idx(0), 1.0)], lo, hi);
    for k in 1..h {
        rows.push(&[(idx(k), 1.0)], p_min, p_max);
        rows.push(&[(idx(k), 1.0), (idx(k - 1), -1.0)], -ramp, ramp);
    }
}

pub(crate) fn gen_objective(obj: &mut Objective, g: &GenParams, h: usize, idx: impl Fn(usize) -> usize) {
    for k in 0..h {
        obj.track(idx(k), g.beta, mw(g.p_rated));
    }
}

/// Box, ramp, SoC-box and SoC-chain rows of one battery. `pidx(k)` is the
/// step-`k` power, `qidx(k)` the SoC (percent) after step `k`; `kappa` is
/// per MW.
#[allow(clippy::too_many_arguments)]
pub(crate) fn batt_rows(
    rows: &mut Rows,
    b: &BattParams,
    h: usize,
    prev: f64,
    q_meas: f64,
    kappa: f64,
    pidx: impl Fn(usize) -> usize,
    qidx: impl Fn(usize) -> usize,
) {
    let (p_min, p_max, ramp) = (mw(b.p_min), mw(b.p_max), mw(b.ramp));
    let (lo, hi) = anchored_box(p_min, p_max, ramp, mw(prev));
    rows.push(&[(pidx(0), 1.0)], lo, hi);
    for k in 1..h {
        rows.push(&[(pidx(k), 1.0)], p_min, p_max);
        rows.push(&[(pidx(k), 1.0), (pidx(k - 1), -1.0)], -ramp, ramp);
    }
    let s = SOC_TERM_SCALE;
    for k in 0..h {
        rows.push(&[(qidx(k), 1.0)], s * b.q_min, s * b.q_max);
    }
    // q_{k+1} = q_k − κ p_k
    rows.push(&[(qidx(0), 1.0), (pidx(0), s * kappa)], s * q_meas, s * q_meas);
    for k in 1..h {
        rows.push(&[(qidx(k), 1.0), (qidx(k - 1), -1.0), (pidx(k), s * kappa)], 0.0, 0.0);
    }
}

pub(crate) fn batt_objective(
    obj: &mut Objective,
    b: &BattParams,
    h: usize,
    pidx: impl Fn(usize) -> usize,
    qidx: impl Fn(usize) -> usize,
) {
    for k in 0..h {
        obj.track(pidx(k), b.gamma_p, 0.0);
        obj.track(qidx(k), b.gamma_q, SOC_TERM_SCALE * b.q0);
    }
}

/// SoC profile implied by the power profile `p_b` (W). The solver meets the
/// chain rows only to its tolerance, so the applied profile is rebuilt.
pub(crate) fn soc_chain(cfg: &ScenarioConfig, b: &BattParams, q_meas: f64, p_b: &[f64]) -> Vec<f64> {
    let mut q = q_meas;
    p_b.iter()
        .map(|&p| {
            q = soc_discrete_update(q, p, cfg.t_s, b.capacity, cfg.v_bus);
            q
        })
        .collect()
}

/// SoC change per MW over one MPC step.
pub(crate) fn kappa_mw(cfg: &ScenarioConfig, b: &BattParams) -> f64 {
    b.kappa(cfg.t_s, cfg.v_bus) * W_PER_MW
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    ng: usize,
    nb: usize,
    h: usize,
    slack: bool,
}

impl Layout {
    fn stride(&self) -> usize {
        self.ng + 2 * self.nb
    }
    fn g(&self, k: usize, i: usize) -> usize {
        k * self.stride() + i
    }
    fn b(&self, k: usize, j: usize) -> usize {
        k * self.stride() + self.ng + j
    }
    fn q(&self, k: usize, j: usize) -> usize {
        k * self.stride() + self.ng + self.nb + j
    }
    fn s(&self, k: usize) -> usize {
        self.h * self.stride() + k
    }
    fn n(&self) -> usize {
        self.h * self.stride() + if self.slack { self.h } else { 0 }
    }
}

fn build(cfg: &ScenarioConfig, meas: &Measurements, slack: bool) -> Result<(QpProblem, Layout), EmError> {
    meas.check(cfg)?;
    let fleet = &cfg.fleet;
    let lay = Layout {
        ng: fleet.generators.len(),
        nb: fleet.batteries.len(),
        h: cfg.horizon,
        slack,
    };
    let h = lay.h;
    let mut rows = Rows::default();
    let mut obj = Objective::new(lay.n());
    for (i, g) in fleet.generators.iter().enumerate() {
        gen_rows(&mut rows, g, h, meas.p_g_prev[i], |k| lay.g(k, i));
        gen_objective(&mut obj, g, h, |k| lay.g(k, i));
    }
    for (j, b) in fleet.batteries.iter().enumerate() {
        let kappa = kappa_mw(cfg, b);
        batt_rows(
            &mut rows,
            b,
            h,
            meas.p_b_prev[j],
            meas.q[j],
            kappa,
            |k| lay.b(k, j),
            |k| lay.q(k, j),
        );
        batt_objective(&mut obj, b, h, |k| lay.b(k, j), |k| lay.q(k, j));
    }
    let p_load = mw(meas.p_load);
    for k in 0..h {
        let mut coeffs: Vec<(usize, f64)> = (0..lay.ng).map(|i| (lay.g(k, i), 1.0)).collect();
        coeffs.extend((0..lay.nb).map(|j| (lay.b(k, j), 1.0)));
        if slack {
            coeffs.push((lay.s(k), 1.0));
            obj.track(lay.s(k), SLACK_PENALTY, 0.0);
        }
        rows.push(&coeffs, p_load, p_load);
    }
    let (p, q) = obj.finish();
    let a = rows.matrix(lay.n());
    Ok((QpProblem::new(p, q, a, rows.l, rows.u)?, lay))
}

/// The centralized QP in MW units. Variable order: for each step `k`,
/// generator powers, battery powers, then post-step SoC in percent.
pub fn build_central_qp(cfg: &ScenarioConfig, meas: &Measurements) -> Result<QpProblem, EmError> {
    build(cfg, meas, false).map(|(p, _)| p)
}

/// Reusable centralized controller: the factorization and the ADMM iterate
/// carry over between ticks, only bounds change.
#[derive(Debug, Clone)]
pub struct CentralMpc {
    cfg: ScenarioConfig,
    solver: Option<QpSolver>,
    fallback: Option<QpSolver>,
    /// Ticks that needed the relaxed problem.
    pub infeasible_events: usize,
}

impl CentralMpc {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            solver: None,
            fallback: None,
            infeasible_events: 0,
        }
    }

    pub fn solve(&mut self, meas: &Measurements) -> Result<Allocation, EmError> {
        let (prob, lay) = build(&self.cfg, meas, false)?;
        let sol = warm_solve(&mut self.solver, prob, self.cfg.qp)?;
        if sol.status != QpStatus::Infeasible {
            return Ok(extract(&self.cfg, &lay, meas, &sol.x, sol.status, sol.iterations));
        }
        self.infeasible_events += 1;
        let (prob, lay) = build(&self.cfg, meas, true)?;
        let sol = warm_solve(&mut self.fallback, prob, self.cfg.qp)?;
        if sol.status == QpStatus::Infeasible {
            return Err(EmError::NodeInfeasible("the relaxed centralized problem".into()));
        }
        Ok(extract(&self.cfg, &lay, meas, &sol.x, sol.status, sol.iterations))
    }
}

fn warm_solve(
    slot: &mut Option<QpSolver>,
    prob: QpProblem,
    settings: QpSettings,
) -> Result<crate::qp::QpSolution, EmError> {
    match slot {
        Some(s) => {
            s.update_vectors(Some(&prob.q), Some(&prob.l), Some(&prob.u))?;
        }
        None => *slot = Some(QpSolver::new(prob, settings)?),
    }
    Ok(slot.as_mut().map(QpSolver::solve).expect("solver initialized"))
}

fn extract(
    cfg: &ScenarioConfig,
    lay: &Layout,
    meas: &Measurements,
    x: &[f64],
    status: QpStatus,
    iterations: usize,
) -> Allocation {
    let h = lay.h;
    let profile = |f: &dyn Fn(usize) -> usize, scale: f64| {
        HorizonProfile::new((0..h).map(|k| x[f(k)] * scale).collect()).expect("h >= 1")
    };
    let p_g = (0..lay.ng).map(|i| profile(&|k| lay.g(k, i), W_PER_MW)).collect();
    let p_b: Vec<HorizonProfile> = (0..lay.nb).map(|j| profile(&|k| lay.b(k, j), W_PER_MW)).collect();
    let soc = cfg
        .fleet
        .batteries
        .iter()
        .zip(&p_b)
        .zip(&meas.q)
        .map(|((b, p), &q)| HorizonProfile::new(soc_chain(cfg, b, q, p.as_slice())).expect("h >= 1"))
        .collect();
    let slack = lay.slack.then(|| (0..h).map(|k| x[lay.s(k)] * W_PER_MW).collect());
    let mut alloc = Allocation {
        p_g,
        p_b,
        soc,
        status,
        iterations,
        balance_residual: 0.0,
        slack,
    };
    alloc.balance_residual = balance_residual(&alloc, meas.p_load);
    alloc
}

/// `max_k |Σ p_g,k + Σ p_b,k − p_L|`, W.
pub fn balance_residual(alloc: &Allocation, p_load: f64) -> f64 {
    let h = alloc.p_g.first().or(alloc.p_b.first()).map_or(0, HorizonProfile::len);
    (0..h)
        .map(|k| {
            let s: f64 = alloc.p_g.iter().chain(&alloc.p_b).map(|p| p[k]).sum();
            (s - p_load).abs()
        })
        .fold(0.0, f64::max)
}

/// Build and solve one tick from scratch.
pub fn solve_central_mpc(cfg: &ScenarioConfig, meas: &Measurements) -> Result<Allocation, EmError> {
    CentralMpc::new(cfg).solve(meas)
}
