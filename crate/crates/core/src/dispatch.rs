//! Classical economic dispatch with quadratic costs.

use alloc::format;
use alloc::vec::Vec;

use crate::error::EmError;

/// `C(p) = a p² + b p + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCost {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCost {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, EmError> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() || !c.is_finite() {
            return Err(EmError::InvalidArgument(format!(
                "cost requires finite a > 0, got a = {a}"
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.a * p * p + self.b * p + self.c
    }

    /// `dC/dp = 2 a p + b`.
    pub fn incremental(&self, p: f64) -> f64 {
        2.0 * self.a * p + self.b
    }

    /// Output at incremental cost `lambda`, clipped to `[lo, hi]`.
    fn output_at(&self, lambda: f64, (lo, hi): (f64, f64)) -> f64 {
        ((lambda - self.b) / (2.0 * self.a)).clamp(lo, hi)
    }
}

/// Minimum-cost split of `p_load` among units with the given limits.
///
/// Bisection on the common incremental cost `λ`; each unit runs at
/// `(λ − b)/(2a)` clipped to its limits. The final allocation is adjusted
/// on the unclamped units so the sum equals `p_load` to rounding.
pub fn economic_dispatch(costs: &[QuadCost], bounds: &[(f64, f64)], p_load: f64) -> Result<Vec<f64>, EmError> {
    if costs.len() != bounds.len() || costs.is_empty() {
        return Err(EmError::DimensionMismatch(format!(
            "{} costs for {} bound pairs",
            costs.len(),
            bounds.len()
        )));
    }
    if let Some(i) = bounds
        .iter()
        .position(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(EmError::InvalidArgument(format!(
            "unit {i}: bounds must be finite with lo <= hi"
        )));
    }
    let min: f64 = bounds.iter().map(|b| b.0).sum();
    let max: f64 = bounds.iter().map(|b| b.1).sum();
    let slack = 1e-12 * (1.0 + max.abs());
    if !(p_load >= min - slack && p_load <= max + slack) {
        return Err(EmError::DispatchInfeasible {
            demand: p_load,
            min,
            max,
        });
    }
    let total = |lambda: f64| -> f64 { costs.iter().zip(bounds).map(|(c, &b)| c.output_at(lambda, b)).sum() };
    let mut lo = costs
        .iter()
        .zip(bounds)
        .map(|(c, b)| c.incremental(b.0))
        .fold(f64::INFINITY, f64::min);
    let mut hi = costs
        .iter()
        .zip(bounds)
        .map(|(c, b)| c.incremental(b.1))
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < p_load {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs().max(lo.abs())) {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut p: Vec<f64> = costs.iter().zip(bounds).map(|(c, &b)| c.output_at(lambda, b)).collect();

    // Spread the remaining mismatch over free units in proportion to 1/(2a),
    // which keeps their incremental costs equal.
    let free: Vec<usize> = (0..p.len())
        .filter(|&i| p[i] > bounds[i].0 && p[i] < bounds[i].1)
        .collect();
    let mismatch = p_load - p.iter().sum::<f64>();
    let weight: f64 = free.iter().map(|&i| 0.5 / costs[i].a).sum();
    if weight > 0.0 {
        for &i in &free {
            p[i] = (p[i] + mismatch * (0.5 / costs[i].a) / weight).clamp(bounds[i].0, bounds[i].1);
        }
    }
    Ok(p)
}
