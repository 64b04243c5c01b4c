use super::{QpProblem, QpSolution};

/// Max-norm residuals of the three KKT blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖P x + q + Aᵀ y‖∞`
    pub stationarity: f64,
    /// Largest bound violation of `A x`.
    pub feasibility: f64,
    /// Largest `|y_i| · slack_i` on the side selected by the sign of `y_i`,
    /// plus any multiplier pointing at an infinite bound.
    pub comp_slack: f64,
}

/// Computed from `prob` and `sol.x`, `sol.y` only.
pub fn kkt_residuals(prob: &QpProblem, sol: &QpSolution) -> KktResiduals {
    let (x, y) = (&sol.x, &sol.y);
    let px = prob.p.mul_vec(x);
    let aty = prob.a.tmul_vec(y);
    let stationarity = (0..x.len())
        .map(|j| (px[j] + prob.q[j] + aty[j]).abs())
        .fold(0.0, f64::max);
    let ax = prob.a.mul_vec(x);
    let mut feasibility: f64 = 0.0;
    let mut comp_slack: f64 = 0.0;
    for i in 0..ax.len() {
        feasibility = feasibility.max(prob.l[i] - ax[i]).max(ax[i] - prob.u[i]);
        let cs = if y[i] > 0.0 {
            if prob.u[i].is_finite() {
                y[i] * (prob.u[i] - ax[i]).abs()
            } else {
                y[i]
            }
        } else if y[i] < 0.0 {
            if prob.l[i].is_finite() {
                -y[i] * (ax[i] - prob.l[i]).abs()
            } else {
                -y[i]
            }
        } else {
            0.0
        };
        comp_slack = comp_slack.max(cs);
    }
    KktResiduals {
        stationarity,
        feasibility,
        comp_slack,
    }
}
