use alloc::vec;
use alloc::vec::Vec;

use super::{project_box, QpProblem, QpSettings, QpSolution, QpStatus};
use crate::error::EmError;
use crate::linalg::{Cholesky, Lu, Mat};
use crate::math::{self, norm_inf};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
/// Equality rows get a stiffer step size.
const RHO_EQ_FACTOR: f64 = 1e3;
const POLISH_DELTA: f64 = 1e-9;
const POLISH_REFINE: usize = 5;
/// Active-set corrections tried by the polish step, the first few of them
/// changing every offending row at once.
const POLISH_ROUNDS: usize = 40;
const POLISH_BATCH_ROUNDS: usize = 3;

/// Reusable ADMM solver.
///
/// The matrix `P + σI + Âᵀ R Â` is factored once at construction (and again
/// only when the step size adapts); `update_vectors` changes `q`, `l`, `u`
/// between solves and `solve` continues from the stored iterate, which gives
/// warm starts across receding-horizon ticks.
///
/// Internally the rows of `A` are equilibrated to unit 2-norm (`Â = E A`).
#[derive(Debug, Clone)]
pub struct QpSolver {
    prob: QpProblem,
    settings: QpSettings,
    row_scale: Vec<f64>,
    a_s: Mat,
    l_s: Vec<f64>,
    u_s: Vec<f64>,
    rho: f64,
    rho_vec: Vec<f64>,
    factor: Cholesky,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
}

impl QpSolver {
    pub fn new(prob: QpProblem, settings: QpSettings) -> Result<Self, EmError> {
        let (n, m) = (prob.n(), prob.m());
        let row_scale: Vec<f64> = (0..m)
            .map(|i| {
                let norm = math::sqrt(prob.a.row(i).iter().map(|a| a * a).sum());
                if norm > 0.0 {
                    1.0 / norm
                } else {
                    1.0
                }
            })
            .collect();
        let mut a_s = prob.a.clone();
        for (i, &e) in row_scale.iter().enumerate() {
            a_s.row_mut(i).iter_mut().for_each(|v| *v *= e);
        }
        let l_s = scale(&prob.l, &row_scale);
        let u_s = scale(&prob.u, &row_scale);
        let rho = settings.rho;
        let rho_vec = rho_vector(&l_s, &u_s, rho);
        let factor = factor_kkt(&prob.p, &a_s, settings.sigma, &rho_vec)?;
        Ok(Self {
            prob,
            settings,
            row_scale,
            a_s,
            l_s,
            u_s,
            rho,
            rho_vec,
            factor,
            x: vec![0.0; n],
            z: vec![0.0; m],
            y: vec![0.0; m],
        })
    }

    pub fn problem(&self) -> &QpProblem {
        &self.prob
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    /// Replace the linear cost and/or bounds; `P` and `A` stay fixed.
    pub fn update_vectors(&mut self, q: Option<&[f64]>, l: Option<&[f64]>, u: Option<&[f64]>) -> Result<(), EmError> {
        if let Some(q) = q {
            if q.len() != self.prob.n() {
                return Err(EmError::DimensionMismatch("q length changed".into()));
            }
            self.prob.q.copy_from_slice(q);
        }
        if let Some(l) = l {
            if l.len() != self.prob.m() {
                return Err(EmError::DimensionMismatch("l length changed".into()));
            }
            self.prob.l.copy_from_slice(l);
        }
        if let Some(u) = u {
            if u.len() != self.prob.m() {
                return Err(EmError::DimensionMismatch("u length changed".into()));
            }
            self.prob.u.copy_from_slice(u);
        }
        if (0..self.prob.m()).any(|i| !(self.prob.l[i] <= self.prob.u[i])) {
            return Err(EmError::InvalidArgument("bounds violate l <= u".into()));
        }
        self.l_s = scale(&self.prob.l, &self.row_scale);
        self.u_s = scale(&self.prob.u, &self.row_scale);
        let rho_vec = rho_vector(&self.l_s, &self.u_s, self.rho);
        if rho_vec != self.rho_vec {
            self.rho_vec = rho_vec;
            self.factor = factor_kkt(&self.prob.p, &self.a_s, self.settings.sigma, &self.rho_vec)?;
        }
        Ok(())
    }

    /// Seed the iterate with a primal/dual guess in original units.
    pub fn warm_start(&mut self, x: &[f64], y: &[f64]) {
        self.x.copy_from_slice(x);
        self.z = self.a_s.mul_vec(&self.x);
        for ((ys, &yi), &e) in self.y.iter_mut().zip(y).zip(&self.row_scale) {
            *ys = yi / e;
        }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
        self.z.iter_mut().for_each(|v| *v = 0.0);
        self.y.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Run ADMM from the current iterate.
    pub fn solve(&mut self) -> QpSolution {
        let s = self.settings;
        let (n, m) = (self.prob.n(), self.prob.m());
        let alpha = s.relaxation;
        let mut history = Vec::new();
        let mut status = QpStatus::MaxIters;
        let mut iterations = 0;
        let mut res = self.residuals();
        let mut early: Option<Polished> = None;

        if m == 0 {
            // Unconstrained: one linear solve is exact.
            let rhs: Vec<f64> = self.prob.q.iter().map(|q| -q).collect();
            let x = self.factor.solve(
                &rhs.iter()
                    .zip(&self.x)
                    .map(|(r, x)| r + s.sigma * x)
                    .collect::<Vec<_>>(),
            );
            self.x = x;
        }

        for k in 1..=s.max_iters {
            iterations = k;
            // x-update: (P + σI + ÂᵀRÂ) x̃ = σx − q + Âᵀ(R z − y)
            let mut v = vec![0.0; m];
            for i in 0..m {
                v[i] = self.rho_vec[i] * self.z[i] - self.y[i];
            }
            let at_v = self.a_s.tmul_vec(&v);
            let rhs: Vec<f64> = (0..n).map(|j| s.sigma * self.x[j] - self.prob.q[j] + at_v[j]).collect();
            let x_tilde = self.factor.solve(&rhs);
            let z_tilde = self.a_s.mul_vec(&x_tilde);

            for j in 0..n {
                self.x[j] = alpha * x_tilde[j] + (1.0 - alpha) * self.x[j];
            }
            // z-update: projection of the relaxed point shifted by the scaled dual y/ρ.
            let z_relaxed: Vec<f64> = (0..m).map(|i| alpha * z_tilde[i] + (1.0 - alpha) * self.z[i]).collect();
            let shifted: Vec<f64> = (0..m).map(|i| z_relaxed[i] + self.y[i] / self.rho_vec[i]).collect();
            let z_new = project_box(&shifted, &self.l_s, &self.u_s);
            // dual update
            let mut delta_y = vec![0.0; m];
            for i in 0..m {
                delta_y[i] = self.rho_vec[i] * (z_relaxed[i] - z_new[i]);
                self.y[i] += delta_y[i];
            }
            self.z = z_new;

            res = self.residuals();
            if s.record_history {
                history.push(res.primal.max(res.dual));
            }
            if res.converged() {
                status = QpStatus::Optimal;
                break;
            }
            if k >= s.infeasibility_after && k % 10 == 0 && self.primal_infeasible(&delta_y) {
                status = QpStatus::Infeasible;
                break;
            }
            if k % s.adapt_interval == 0 {
                // A correct active-set guess finishes degenerate problems early.
                if s.polish && m > 0 {
                    if let Some(p) = self.polish(&res) {
                        if p.primal <= res.eps_pri && p.dual <= res.eps_dua {
                            early = Some(p);
                            status = QpStatus::Optimal;
                            break;
                        }
                    }
                }
                if s.adaptive_rho {
                    self.adapt_rho(&res);
                }
            }
        }

        let mut sol = self.unscaled_solution(status, iterations, &res, history);
        let polished = match early {
            Some(p) => Some(p),
            None if s.polish && status != QpStatus::Infeasible && m > 0 => self.polish(&res),
            None => None,
        };
        {
            if let Some(p) = polished {
                sol.x = p.x;
                sol.z = p.z;
                sol.y = p.y;
                sol.primal_res = p.primal;
                sol.dual_res = p.dual;
                sol.polished = true;
                if p.primal <= res.eps_pri && p.dual <= res.eps_dua {
                    sol.status = QpStatus::Optimal;
                }
                // Keep the iterate consistent with the polished point for warm starts.
                self.x.copy_from_slice(&sol.x);
                self.z = self.a_s.mul_vec(&self.x);
                for i in 0..m {
                    self.y[i] = sol.y[i] / self.row_scale[i];
                }
            }
        }
        sol
    }

    fn unscaled_solution(&self, status: QpStatus, iterations: usize, res: &Residuals, history: Vec<f64>) -> QpSolution {
        let z = self.z.iter().zip(&self.row_scale).map(|(z, e)| z / e).collect();
        let y = self.y.iter().zip(&self.row_scale).map(|(y, e)| y * e).collect();
        QpSolution {
            x: self.x.clone(),
            z,
            y,
            status,
            iterations,
            primal_res: res.primal,
            dual_res: res.dual,
            polished: false,
            history,
        }
    }

    fn residuals(&self) -> Residuals {
        self.residuals_at(&self.x, &self.z, &self.y)
    }

    /// Residuals in original units for a scaled iterate.
    fn residuals_at(&self, x: &[f64], z_s: &[f64], y_s: &[f64]) -> Residuals {
        let ax_s = self.a_s.mul_vec(x);
        let mut primal: f64 = 0.0;
        let mut ax_norm: f64 = 0.0;
        let mut z_norm: f64 = 0.0;
        for i in 0..ax_s.len() {
            let e = self.row_scale[i];
            primal = primal.max(((ax_s[i] - z_s[i]) / e).abs());
            ax_norm = ax_norm.max((ax_s[i] / e).abs());
            z_norm = z_norm.max((z_s[i] / e).abs());
        }
        let px = self.prob.p.mul_vec(x);
        let aty = self.a_s.tmul_vec(y_s);
        let dual = (0..x.len())
            .map(|j| (px[j] + self.prob.q[j] + aty[j]).abs())
            .fold(0.0, f64::max);
        let s = &self.settings;
        let eps_pri = s.eps_abs + s.eps_rel * ax_norm.max(z_norm);
        let eps_dua = s.eps_abs + s.eps_rel * norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&self.prob.q));
        Residuals {
            primal,
            dual,
            eps_pri,
            eps_dua,
            primal_scale: ax_norm.max(z_norm),
            dual_scale: norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&self.prob.q)),
        }
    }

    /// Farkas-type certificate: `Âᵀδy ≈ 0` with `uᵀδy₊ + lᵀδy₋ < 0`.
    fn primal_infeasible(&self, delta_y: &[f64]) -> bool {
        let dy_norm = norm_inf(delta_y);
        if dy_norm < 1e-30 {
            return false;
        }
        let eps = self.settings.eps_infeasible * dy_norm;
        if norm_inf(&self.a_s.tmul_vec(delta_y)) > eps {
            return false;
        }
        let mut support = 0.0;
        for (i, &d) in delta_y.iter().enumerate() {
            if d > eps {
                if self.u_s[i] == f64::INFINITY {
                    return false;
                }
                support += self.u_s[i] * d;
            } else if d < -eps {
                if self.l_s[i] == f64::NEG_INFINITY {
                    return false;
                }
                support += self.l_s[i] * d;
            }
        }
        support < -eps
    }

    fn adapt_rho(&mut self, res: &Residuals) {
        let prim = res.primal / res.primal_scale.max(1e-30);
        let dual = res.dual / res.dual_scale.max(1e-30);
        if !(prim > 0.0 && dual > 0.0) {
            return;
        }
        let candidate = (self.rho * math::sqrt(prim / dual)).clamp(RHO_MIN, RHO_MAX);
        if candidate > 5.0 * self.rho || candidate < 0.2 * self.rho {
            let rho_vec = rho_vector(&self.l_s, &self.u_s, candidate);
            if let Ok(f) = factor_kkt(&self.prob.p, &self.a_s, self.settings.sigma, &rho_vec) {
                self.rho = candidate;
                self.rho_vec = rho_vec;
                self.factor = f;
            }
        }
    }

    /// Solve the equality-constrained QP on the guessed active set and keep
    /// the result only if it is primal/dual feasible with correct signs.
    /// Guess the active set from the ADMM iterate, then refine it a few
    /// rounds: rows whose multiplier has the wrong sign are released, rows
    /// the candidate violates are added at the violated bound.
    fn polish(&self, admm: &Residuals) -> Option<Polished> {
        let m = self.prob.m();
        // bound index per row: None = inactive, Some(value) = pinned there
        let mut active: Vec<Option<f64>> = (0..m)
            .map(|i| {
                if self.l_s[i] == self.u_s[i] || self.z[i] - self.l_s[i] < -self.y[i] {
                    Some(self.l_s[i])
                } else if self.u_s[i] - self.z[i] < self.y[i] {
                    Some(self.u_s[i])
                } else {
                    None
                }
            })
            .collect();
        let tol = admm.eps_dua.max(1e-9);
        let feas_tol = admm.eps_pri.max(1e-12);
        for round in 0..POLISH_ROUNDS {
            let (x, y_s) = self.solve_active(&active)?;
            let z_s = self.a_s.mul_vec(&x);
            // (row, new state, severity)
            let mut changes: Vec<(usize, Option<f64>, f64)> = Vec::new();
            for i in 0..m {
                if self.l_s[i] == self.u_s[i] {
                    continue;
                }
                match active[i] {
                    Some(b) => {
                        let wrong = if b == self.u_s[i] { -y_s[i] } else { y_s[i] };
                        if wrong > tol {
                            changes.push((i, None, wrong));
                        }
                    }
                    None => {
                        if z_s[i] > self.u_s[i] + feas_tol {
                            changes.push((i, Some(self.u_s[i]), z_s[i] - self.u_s[i]));
                        } else if z_s[i] < self.l_s[i] - feas_tol {
                            changes.push((i, Some(self.l_s[i]), self.l_s[i] - z_s[i]));
                        }
                    }
                }
            }
            if !changes.is_empty() {
                // all at once first; one at a time once that starts cycling
                if round < POLISH_BATCH_ROUNDS {
                    for (i, state, _) in changes {
                        active[i] = state;
                    }
                } else {
                    let (i, state, _) = changes
                        .into_iter()
                        .fold(None, |acc: Option<(usize, Option<f64>, f64)>, c| match acc {
                            Some(a) if a.2 >= c.2 => Some(a),
                            _ => Some(c),
                        })
                        .expect("non-empty");
                    active[i] = state;
                }
                continue;
            }
            let z_proj = project_box(&z_s, &self.l_s, &self.u_s);
            let res = self.residuals_at(&x, &z_proj, &y_s);
            let better = res.primal.max(res.dual) <= admm.primal.max(admm.dual)
                || (res.primal <= res.eps_pri && res.dual <= res.eps_dua);
            if !better {
                return None;
            }
            return Some(Polished {
                z: z_proj.iter().zip(&self.row_scale).map(|(z, e)| z / e).collect(),
                y: y_s.iter().zip(&self.row_scale).map(|(y, e)| y * e).collect(),
                x,
                primal: res.primal,
                dual: res.dual,
            });
        }
        None
    }

    /// Solve the equality-constrained KKT system of the pinned rows with a
    /// small regularization plus iterative refinement. Returns `x` and the
    /// scaled multipliers.
    fn solve_active(&self, active: &[Option<f64>]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.prob.n();
        let rows: Vec<(usize, f64)> = active
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.map(|b| (i, b)))
            .collect();
        let k = rows.len();
        let dim = n + k;
        let mut kkt = Mat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = self.prob.p[(i, j)];
            }
        }
        for (r, &(row, _)) in rows.iter().enumerate() {
            for j in 0..n {
                let a = self.a_s[(row, j)];
                kkt[(n + r, j)] = a;
                kkt[(j, n + r)] = a;
            }
        }
        let mut reg = kkt.clone();
        for i in 0..n {
            reg[(i, i)] += POLISH_DELTA;
        }
        for r in 0..k {
            reg[(n + r, n + r)] -= POLISH_DELTA;
        }
        let lu = Lu::factor(&reg, 1e-300)?;
        let mut rhs = vec![0.0; dim];
        for j in 0..n {
            rhs[j] = -self.prob.q[j];
        }
        for (r, &(_, b)) in rows.iter().enumerate() {
            rhs[n + r] = b;
        }
        let mut sol = lu.solve(&rhs);
        for _ in 0..POLISH_REFINE {
            let k_sol = kkt.mul_vec(&sol);
            let resid: Vec<f64> = rhs.iter().zip(&k_sol).map(|(b, ks)| b - ks).collect();
            let corr = lu.solve(&resid);
            sol.iter_mut().zip(&corr).for_each(|(s, c)| *s += c);
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut y_s = vec![0.0; self.prob.m()];
        for (r, &(row, _)) in rows.iter().enumerate() {
            y_s[row] = sol[n + r];
        }
        sol.truncate(n);
        Some((sol, y_s))
    }
}

struct Polished {
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    primal: f64,
    dual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Residuals {
    primal: f64,
    dual: f64,
    eps_pri: f64,
    eps_dua: f64,
    primal_scale: f64,
    dual_scale: f64,
}

impl Residuals {
    fn converged(&self) -> bool {
        self.primal <= self.eps_pri && self.dual <= self.eps_dua
    }
}

fn scale(v: &[f64], e: &[f64]) -> Vec<f64> {
    v.iter().zip(e).map(|(v, e)| v * e).collect()
}

fn rho_vector(l: &[f64], u: &[f64], rho: f64) -> Vec<f64> {
    l.iter()
        .zip(u)
        .map(|(l, u)| if l == u { RHO_EQ_FACTOR * rho } else { rho })
        .collect()
}

fn factor_kkt(p: &Mat, a_s: &Mat, sigma: f64, rho: &[f64]) -> Result<Cholesky, EmError> {
    let n = p.rows();
    let mut k = p.clone();
    for i in 0..n {
        k[(i, i)] += sigma;
    }
    for (r, &rho_r) in rho.iter().enumerate() {
        let row = a_s.row(r);
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            let ri = rho_r * row[i];
            for j in 0..n {
                k[(i, j)] += ri * row[j];
            }
        }
    }
    Cholesky::factor(&k).ok_or_else(|| EmError::InvalidArgument("P + σI + AᵀRA is not positive definite".into()))
}
