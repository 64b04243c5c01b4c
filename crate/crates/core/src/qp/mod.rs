//! Strictly convex quadratic programs
//!
//! ```text
//! minimize    ½ xᵀP x + qᵀx
//! subject to  l ≤ A x ≤ u
//! ```
//!
//! solved by scaled-form ADMM with over-relaxation, row equilibration of
//! `A`, optional step-size adaptation and an active-set polish. Every
//! energy-management problem in the crate (ramp rows, box rows, SoC chains,
//! power balance) is expressed in this one form.

mod admm;
mod kkt;

use alloc::format;
use alloc::vec::Vec;

pub use admm::QpSolver;
pub use kkt::{kkt_residuals, KktResiduals};

use crate::error::{ConfigError, EmError};
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: Mat,
    pub q: Vec<f64>,
    pub a: Mat,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl QpProblem {
    /// Checks dimensions, symmetry of `P` and `l ≤ u`.
    pub fn new(p: Mat, q: Vec<f64>, a: Mat, l: Vec<f64>, u: Vec<f64>) -> Result<Self, EmError> {
        let n = q.len();
        if p.rows() != n || p.cols() != n {
            return Err(EmError::DimensionMismatch(format!(
                "P is {}x{}, q has {n} entries",
                p.rows(),
                p.cols()
            )));
        }
        if a.cols() != n && a.rows() > 0 {
            return Err(EmError::DimensionMismatch(format!(
                "A has {} columns, expected {n}",
                a.cols()
            )));
        }
        if l.len() != a.rows() || u.len() != a.rows() {
            return Err(EmError::DimensionMismatch(format!(
                "A has {} rows but l, u have {}, {}",
                a.rows(),
                l.len(),
                u.len()
            )));
        }
        if !p.is_symmetric(1e-12 * (1.0 + max_abs(&p))) {
            return Err(EmError::InvalidArgument("P is not symmetric".into()));
        }
        if let Some(i) = (0..l.len()).find(|&i| !(l[i] <= u[i]) || l[i] == f64::INFINITY || u[i] == f64::NEG_INFINITY) {
            return Err(EmError::InvalidArgument(format!("bounds violate l <= u at row {i}")));
        }
        Ok(Self { p, q, a, l, u })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.l.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let px = self.p.mul_vec(x);
        0.5 * crate::linalg::dot(x, &px) + crate::linalg::dot(&self.q, x)
    }
}

fn max_abs(m: &Mat) -> f64 {
    (0..m.rows())
        .flat_map(|i| m.row(i).iter())
        .fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// ADMM settings. Defaults: `rho = 1`, `eps_abs = eps_rel = 1e-6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub rho: f64,
    /// Proximal regularization of the x-update.
    pub sigma: f64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Tolerance of the primal infeasibility certificate.
    pub eps_infeasible: f64,
    pub max_iters: usize,
    /// Iterations before infeasibility certificates are examined.
    pub infeasibility_after: usize,
    pub adaptive_rho: bool,
    /// Iterations between step-size adaptations.
    pub adapt_interval: usize,
    pub polish: bool,
    /// Keep `max(primal, dual)` residual of every iteration.
    pub record_history: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            sigma: 1e-6,
            relaxation: 1.6,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            eps_infeasible: 1e-6,
            max_iters: 20_000,
            infeasibility_after: 50,
            adaptive_rho: true,
            adapt_interval: 25,
            polish: true,
            record_history: false,
        }
    }
}

impl QpSettings {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(format!("qp.{name}"), "must be finite and > 0"))
            }
        };
        pos("rho", self.rho)?;
        pos("sigma", self.sigma)?;
        pos("eps_abs", self.eps_abs)?;
        pos("eps_rel", self.eps_rel)?;
        pos("eps_infeasible", self.eps_infeasible)?;
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(ConfigError::new("qp.relaxation", "must lie in (0, 2)"));
        }
        if self.max_iters == 0 || self.adapt_interval == 0 {
            return Err(ConfigError::new("qp.max_iters", "iteration counts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Constraint values `A x` at termination (projected iterate).
    pub z: Vec<f64>,
    /// Multipliers: positive on active upper bounds, negative on lower.
    pub y: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub polished: bool,
    /// Per-iteration `max(primal, dual)` when `record_history` is set.
    pub history: Vec<f64>,
}

/// Solve `prob` from a cold start. Fails only when `P + σI + AᵀRA` cannot be
/// factored, i.e. `P` is not positive semidefinite.
pub fn solve_qp(prob: &QpProblem, settings: &QpSettings) -> Result<QpSolution, EmError> {
    Ok(QpSolver::new(prob.clone(), *settings)?.solve())
}

/// Componentwise `median(l, x, u)`.
pub fn project_box(x: &[f64], l: &[f64], u: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(l.iter().zip(u))
        .map(|(&xi, (&li, &ui))| xi.max(li).min(ui))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn project_box_examples() {
        assert_eq!(project_box(&[0.3], &[0.0], &[1.0]), vec![0.3]);
        assert_eq!(project_box(&[5.0], &[0.0], &[1.0]), vec![1.0]);
        assert_eq!(
            project_box(&[-1.0, 0.5, 2.0], &[0.0; 3], &[1.0; 3]),
            vec![0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn rejects_inverted_bounds() {
        let r = QpProblem::new(Mat::identity(1), vec![0.0], Mat::identity(1), vec![1.0], vec![0.0]);
        assert!(matches!(r, Err(EmError::InvalidArgument(_))));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let r = QpProblem::new(Mat::identity(2), vec![0.0], Mat::identity(1), vec![0.0], vec![1.0]);
        assert!(matches!(r, Err(EmError::DimensionMismatch(_))));
    }
}
