use alloc::vec::Vec;

use super::SimulationTrace;
use crate::domain::{AS_PER_AH, S_PER_H};
use crate::math;

/// Run summary. Energies in Wh, throughput in A·h.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub gen_energy_wh: Vec<f64>,
    /// Net battery energy (discharge positive).
    pub batt_energy_wh: Vec<f64>,
    /// Battery energy throughput `∫|p_b| dt`.
    pub batt_abs_energy_wh: Vec<f64>,
    /// `∫|p_b| / v_bus dt`.
    pub batt_throughput_ah: Vec<f64>,
    /// Remaining capacity `(Q − Q_L)/Q·100` at the end of the run.
    pub capacity_loss_pct: Vec<f64>,
    pub q_final: Vec<f64>,
    /// RMS over ticks of `Σ commanded supply − demand`, W.
    pub rms_tracking_error: f64,
    pub max_tracking_error: f64,
    /// Same, using the plant-measured supply at each tick.
    pub rms_plant_tracking_error: f64,
    pub iterations_total: usize,
    pub iterations_max: usize,
    pub iterations_median: f64,
    pub nonconverged_ticks: usize,
    pub fallback_ticks: usize,
}

impl Metrics {
    pub fn total_batt_abs_energy_wh(&self) -> f64 {
        self.batt_abs_energy_wh.iter().sum()
    }

    pub fn total_gen_energy_wh(&self) -> f64 {
        self.gen_energy_wh.iter().sum()
    }
}

fn trapezoid(t: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    (1..t.len()).map(|k| 0.5 * (y(k) + y(k - 1)) * (t[k] - t[k - 1])).sum()
}

fn median(values: &mut [usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2]) as f64
    }
}

/// Trapezoidal energies, tracking RMS and end-of-run battery figures.
pub fn compute_metrics(trace: &SimulationTrace) -> Metrics {
    let rows = &trace.rows;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ng = trace.gen_names.len();
    let nb = trace.batt_names.len();
    let wh = |x: f64| x / S_PER_H;

    let gen_energy_wh = (0..ng).map(|i| wh(trapezoid(&t, |k| rows[k].p_g[i]))).collect();
    let batt_energy_wh = (0..nb).map(|j| wh(trapezoid(&t, |k| rows[k].p_b[j]))).collect();
    let batt_abs: Vec<f64> = (0..nb).map(|j| wh(trapezoid(&t, |k| rows[k].p_b[j].abs()))).collect();
    let batt_throughput_ah = batt_abs.iter().map(|e| e * S_PER_H / trace.v_bus / AS_PER_AH).collect();
    let capacity_loss_pct = (0..nb)
        .map(|j| {
            let q = trace.capacities[j];
            let ql = rows.last().map_or(0.0, |r| r.q_loss[j]);
            (q - ql) / q * 100.0
        })
        .collect();
    let q_final = (0..nb).map(|j| rows.last().map_or(f64::NAN, |r| r.q[j])).collect();

    let n = rows.len().max(1) as f64;
    let mut sq = 0.0;
    let mut sq_plant = 0.0;
    let mut max_err: f64 = 0.0;
    for r in rows {
        let e = r.p_g.iter().chain(&r.p_b).sum::<f64>() - r.p_load;
        sq += e * e;
        max_err = max_err.max(e.abs());
        let ep = r.p_sup - r.p_load;
        sq_plant += ep * ep;
    }
    let mut iters: Vec<usize> = rows.iter().map(|r| r.iters).collect();
    Metrics {
        gen_energy_wh,
        batt_energy_wh,
        batt_abs_energy_wh: batt_abs,
        batt_throughput_ah,
        capacity_loss_pct,
        q_final,
        rms_tracking_error: math::sqrt(sq / n),
        max_tracking_error: max_err,
        rms_plant_tracking_error: math::sqrt(sq_plant / n),
        iterations_total: iters.iter().sum(),
        iterations_max: iters.iter().copied().max().unwrap_or(0),
        iterations_median: median(&mut iters),
        nonconverged_ticks: trace
            .events
            .iter()
            .filter(|e| matches!(e, super::SimEvent::NotConverged { .. }))
            .count(),
        fallback_ticks: trace
            .events
            .iter()
            .filter(|e| matches!(e, super::SimEvent::BalanceSlack { .. }))
            .count(),
    }
}
