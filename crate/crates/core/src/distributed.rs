//! Distributed energy management by dual ascent on the power-balance
//! constraint.
//!
//! Every generator and battery solves its own small QP given the price
//! vector `λ` (one entry per horizon step); a coordinator then moves `λ`
//! along the balance residual. Nodes only interact through `λ`, so the
//! node solves are independent within an iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::central::{
    balance_residual, batt_objective, batt_rows, gen_objective, gen_rows, kappa_mw, soc_chain, Allocation,
    Measurements, Objective, Rows,
};
use crate::domain::{BattParams, GenParams, HorizonProfile, ScenarioConfig, W_PER_MW};
use crate::error::EmError;
use crate::math::norm_inf;
use crate::qp::{QpProblem, QpSettings, QpSolver, QpStatus};

/// Residual growth relative to the best residual seen that is reported as
/// divergence.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Iterations inspected by the oscillation test.
const OSCILLATION_WINDOW: usize = 20;

/// A residual that keeps bouncing without beating the best value seen
/// before the window: the step size is past the stability limit. A residual
/// that merely stalls (saturated, infeasible demand) does not qualify.
fn oscillating(history: &[f64]) -> bool {
    let w = OSCILLATION_WINDOW;
    if history.len() < 2 * w {
        return false;
    }
    let (before, recent) = history.split_at(history.len() - w);
    let best_before = before.iter().copied().fold(f64::INFINITY, f64::min);
    let best_recent = recent.iter().copied().fold(f64::INFINITY, f64::min);
    let rises = history[history.len() - w - 1..]
        .windows(2)
        .filter(|p| p[1] > p[0] * (1.0 + 1e-9))
        .count();
    best_recent >= best_before && rises >= w / 4
}

/// Coordinator state. `lambda` is per MW; `residual` is in W.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iteration: usize,
    pub residual: f64,
}

impl DualState {
    pub fn zeros(h: usize) -> Self {
        Self {
            lambda: vec![0.0; h],
            iteration: 0,
            residual: f64::INFINITY,
        }
    }
}

/// `λ' = λ + α (Σp − p_f·1)` with `node_sum` and `p_f` in W and `λ` per MW.
pub fn dual_update(state: &DualState, node_sum: &[f64], p_f: f64, alpha: f64) -> DualState {
    debug_assert_eq!(state.lambda.len(), node_sum.len());
    let resid: Vec<f64> = node_sum.iter().map(|s| s - p_f).collect();
    let lambda = state
        .lambda
        .iter()
        .zip(&resid)
        .map(|(l, r)| l + alpha * r / W_PER_MW)
        .collect();
    DualState {
        lambda,
        iteration: state.iteration + 1,
        residual: norm_inf(&resid),
    }
}

fn gen_problem(g: &GenParams, h: usize, lambda: &[f64], p_prev: f64) -> Result<QpProblem, EmError> {
    let mut rows = Rows::default();
    gen_rows(&mut rows, g, h, p_prev, |k| k);
    let mut obj = Objective::new(h);
    gen_objective(&mut obj, g, h, |k| k);
    let (p, mut q) = obj.finish();
    q.iter_mut().zip(lambda).for_each(|(q, l)| *q += l);
    let a = rows.matrix(h);
    QpProblem::new(p, q, a, rows.l, rows.u)
}

fn batt_problem(
    b: &BattParams,
    h: usize,
    lambda: &[f64],
    p_prev: f64,
    q_meas: f64,
    kappa: f64,
) -> Result<QpProblem, EmError> {
    let mut rows = Rows::default();
    batt_rows(&mut rows, b, h, p_prev, q_meas, kappa, |k| k, |k| h + k);
    let mut obj = Objective::new(2 * h);
    batt_objective(&mut obj, b, h, |k| k, |k| h + k);
    let (p, mut q) = obj.finish();
    q.iter_mut().zip(lambda).for_each(|(q, l)| *q += l);
    let a = rows.matrix(2 * h);
    QpProblem::new(p, q, a, rows.l, rows.u)
}

fn node_solve(prob: QpProblem, settings: &QpSettings, name: &str) -> Result<Vec<f64>, EmError> {
    let sol = QpSolver::new(prob, *settings)?.solve();
    if sol.status == QpStatus::Infeasible {
        return Err(EmError::NodeInfeasible(name.into()));
    }
    Ok(sol.x)
}

/// Generator node: `argmin β/2‖p − p_r‖² + λᵀp` over box and ramp rows.
/// `lambda` is per MW; the returned profile is in W.
pub fn solve_pgm_node(
    params: &GenParams,
    lambda: &[f64],
    p_prev: f64,
    settings: &QpSettings,
) -> Result<HorizonProfile, EmError> {
    let h = lambda.len();
    let x = node_solve(gen_problem(params, h, lambda, p_prev)?, settings, &params.name)?;
    Ok(to_profile(&x[..h], W_PER_MW))
}

/// Battery node: `argmin γ_p/2‖p‖² + γ_q/2‖q − q₀‖² + λᵀp` (SoC in percent
/// in the `γ_q` term) over power box, ramp, SoC box and SoC chain. `kappa`
/// is the SoC change per W. Returns the power profile (W) and the post-step
/// SoC profile.
pub fn solve_pcm_node(
    params: &BattParams,
    lambda: &[f64],
    p_prev: f64,
    q_meas: f64,
    kappa: f64,
    settings: &QpSettings,
) -> Result<(HorizonProfile, HorizonProfile), EmError> {
    let h = lambda.len();
    let prob = batt_problem(params, h, lambda, p_prev, q_meas, kappa * W_PER_MW)?;
    let x = node_solve(prob, settings, &params.name)?;
    let p = to_profile(&x[..h], W_PER_MW);
    let mut q = q_meas;
    let soc = p
        .as_slice()
        .iter()
        .map(|v| {
            q -= kappa * v;
            q
        })
        .collect();
    Ok((p, HorizonProfile::new(soc).expect("h >= 1")))
}

fn to_profile(x: &[f64], scale: f64) -> HorizonProfile {
    HorizonProfile::new(x.iter().map(|v| v * scale).collect()).expect("h >= 1")
}

/// Outcome of one coordination round.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordination {
    pub allocation: Allocation,
    pub dual: DualState,
    /// Balance residual (W) of every primal iterate, starting with the one
    /// produced by the initial `λ`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// The residual blew up instead of contracting (step size too large).
    pub diverged: bool,
}

#[derive(Debug, Clone)]
struct Node {
    solver: Option<QpSolver>,
    h: usize,
}

impl Node {
    fn solve(&mut self, prob: QpProblem, settings: &QpSettings, name: &str) -> Result<Vec<f64>, EmError> {
        let sol = match &mut self.solver {
            Some(s) => {
                s.update_vectors(Some(&prob.q), Some(&prob.l), Some(&prob.u))?;
                s.solve()
            }
            None => {
                let mut s = QpSolver::new(prob, *settings)?;
                let sol = s.solve();
                self.solver = Some(s);
                sol
            }
        };
        if sol.status == QpStatus::Infeasible {
            return Err(EmError::NodeInfeasible(name.into()));
        }
        debug_assert!(sol.x.len() >= self.h);
        Ok(sol.x)
    }
}

/// Reusable coordinator: node solvers keep their factorizations and, when
/// warm starting is enabled, the converged `λ` of one tick (shifted by one
/// step) seeds the next.
#[derive(Debug, Clone)]
pub struct DistributedEm {
    cfg: ScenarioConfig,
    gens: Vec<Node>,
    batts: Vec<Node>,
    lambda: Vec<f64>,
}

impl DistributedEm {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let h = cfg.horizon;
        Self {
            cfg: cfg.clone(),
            gens: cfg.fleet.generators.iter().map(|_| Node { solver: None, h }).collect(),
            batts: cfg.fleet.batteries.iter().map(|_| Node { solver: None, h }).collect(),
            lambda: vec![0.0; h],
        }
    }

    /// Current price vector (per MW).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn coordinate(&mut self, meas: &Measurements) -> Result<Coordination, EmError> {
        let cfg = &self.cfg;
        let h = cfg.horizon;
        let (ng, nb) = (cfg.fleet.generators.len(), cfg.fleet.batteries.len());
        if meas.p_g_prev.len() != ng || meas.p_b_prev.len() != nb || meas.q.len() != nb {
            return Err(EmError::DimensionMismatch("measurements do not match the fleet".into()));
        }
        // Receding-horizon shift: last tick's price for step k+1 is the best
        // guess for this tick's step k.
        let start = if cfg.warm_start {
            let mut l = self.lambda.clone();
            l.rotate_left(1);
            l[h - 1] = l[h.saturating_sub(2)];
            l
        } else {
            vec![0.0; h]
        };
        let mut dual = DualState {
            lambda: start,
            iteration: 0,
            residual: f64::INFINITY,
        };
        let mut history = Vec::new();
        let mut best = f64::INFINITY;
        let mut converged = false;
        let mut diverged = false;
        let mut p_g: Vec<Vec<f64>> = vec![Vec::new(); ng];
        let mut p_b: Vec<Vec<f64>> = vec![Vec::new(); nb];
        let mut soc: Vec<Vec<f64>> = vec![Vec::new(); nb];

        loop {
            // node solves (independent given λ)
            for (i, g) in cfg.fleet.generators.iter().enumerate() {
                let prob = gen_problem(g, h, &dual.lambda, meas.p_g_prev[i])?;
                let x = self.gens[i].solve(prob, &cfg.qp, &g.name)?;
                p_g[i] = x[..h].iter().map(|v| v * W_PER_MW).collect();
            }
            for (j, b) in cfg.fleet.batteries.iter().enumerate() {
                let prob = batt_problem(b, h, &dual.lambda, meas.p_b_prev[j], meas.q[j], kappa_mw(cfg, b))?;
                let x = self.batts[j].solve(prob, &cfg.qp, &b.name)?;
                p_b[j] = x[..h].iter().map(|v| v * W_PER_MW).collect();
                soc[j] = soc_chain(cfg, b, meas.q[j], &p_b[j]);
            }
            let node_sum: Vec<f64> = (0..h).map(|k| p_g.iter().chain(&p_b).map(|p| p[k]).sum()).collect();
            let resid = node_sum
                .iter()
                .map(|s| s - meas.p_load)
                .map(f64::abs)
                .fold(0.0, f64::max);
            dual.residual = resid;
            history.push(resid);
            if resid <= cfg.eps_tol {
                converged = true;
                break;
            }
            if !resid.is_finite()
                || (dual.iteration > 5 && resid > DIVERGENCE_FACTOR * best.max(cfg.eps_tol))
                || oscillating(&history)
            {
                diverged = true;
                break;
            }
            best = best.min(resid);
            if dual.iteration >= cfg.max_iters {
                break;
            }
            dual = dual_update(&dual, &node_sum, meas.p_load, cfg.alpha);
        }
        // a failed round must not poison the next tick's starting point
        self.lambda = if converged { dual.lambda.clone() } else { vec![0.0; h] };
        let prof = |v: &Vec<f64>| HorizonProfile::new(v.clone()).expect("h >= 1");
        let mut allocation = Allocation {
            p_g: p_g.iter().map(prof).collect(),
            p_b: p_b.iter().map(prof).collect(),
            soc: soc.iter().map(prof).collect(),
            status: if converged {
                QpStatus::Optimal
            } else {
                QpStatus::MaxIters
            },
            iterations: dual.iteration,
            balance_residual: 0.0,
            slack: None,
        };
        allocation.balance_residual = balance_residual(&allocation, meas.p_load);
        Ok(Coordination {
            allocation,
            dual,
            residual_history: history,
            converged,
            diverged,
        })
    }
}

/// One tick from a cold start (`λ = 0`).
pub fn coordinate(cfg: &ScenarioConfig, meas: &Measurements) -> Result<Coordination, EmError> {
    DistributedEm::new(cfg).coordinate(meas)
}
