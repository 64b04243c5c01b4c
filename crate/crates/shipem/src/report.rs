//! Run summaries (`metrics.json`) and per-figure series files.

use std::fs;
use std::path::Path;

use serde::Serialize;
use shipem_core::domain::{AS_PER_AH, W_PER_MW};
use shipem_core::sim::{Metrics, SimEvent, SimulationTrace, SweepParam, TraceRow};

use crate::error::{Error, Result};
use crate::trace::{csv_writer, fmt};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenSummary {
    pub name: String,
    pub energy_wh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BattSummary {
    pub name: String,
    pub energy_wh: f64,
    pub abs_energy_wh: f64,
    pub throughput_ah: f64,
    pub capacity_remaining_pct: f64,
    pub q_final: f64,
}

/// JSON form of [`Metrics`] with device names attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsDoc {
    pub generators: Vec<GenSummary>,
    pub batteries: Vec<BattSummary>,
    pub total_gen_energy_wh: f64,
    pub total_batt_abs_energy_wh: f64,
    pub rms_tracking_error_w: f64,
    pub max_tracking_error_w: f64,
    pub rms_plant_tracking_error_w: f64,
    pub iterations_total: usize,
    pub iterations_max: usize,
    pub iterations_median: f64,
    pub nonconverged_ticks: usize,
    pub fallback_ticks: usize,
    pub soc_clamped_events: usize,
}

impl MetricsDoc {
    pub fn new(gen_names: &[String], batt_names: &[String], m: &Metrics, events: &[SimEvent]) -> Self {
        Self {
            generators: gen_names
                .iter()
                .zip(&m.gen_energy_wh)
                .map(|(name, e)| GenSummary {
                    name: name.clone(),
                    energy_wh: *e,
                })
                .collect(),
            batteries: batt_names
                .iter()
                .enumerate()
                .map(|(j, name)| BattSummary {
                    name: name.clone(),
                    energy_wh: m.batt_energy_wh[j],
                    abs_energy_wh: m.batt_abs_energy_wh[j],
                    throughput_ah: m.batt_throughput_ah[j],
                    capacity_remaining_pct: m.capacity_loss_pct[j],
                    q_final: m.q_final[j],
                })
                .collect(),
            total_gen_energy_wh: m.total_gen_energy_wh(),
            total_batt_abs_energy_wh: m.total_batt_abs_energy_wh(),
            rms_tracking_error_w: m.rms_tracking_error,
            max_tracking_error_w: m.max_tracking_error,
            rms_plant_tracking_error_w: m.rms_plant_tracking_error,
            iterations_total: m.iterations_total,
            iterations_max: m.iterations_max,
            iterations_median: m.iterations_median,
            nonconverged_ticks: m.nonconverged_ticks,
            fallback_ticks: m.fallback_ticks,
            soc_clamped_events: events
                .iter()
                .filter(|e| matches!(e, SimEvent::SocClamped { .. }))
                .count(),
        }
    }

    pub fn from_trace(trace: &SimulationTrace, m: &Metrics) -> Self {
        Self::new(&trace.gen_names, &trace.batt_names, m, &trace.events)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(Error::output(path))
}

fn write_table(path: &Path, head: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let file = fs::File::create(path).map_err(Error::output(path))?;
    let mut w = csv_writer(std::io::BufWriter::new(file));
    w.write_record(&head)?;
    for r in rows {
        w.write_record(r.into_iter().map(fmt))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn names<'a>(prefix: &'a str, n: usize, unit: &'a str) -> impl Iterator<Item = String> + 'a {
    (1..=n).map(move |i| format!("{prefix}_{i}{unit}"))
}

/// `power_split.csv` (MW), `soc.csv`, `capacity_loss.csv` (% remaining and
/// A·h lost) and `iterations.csv`, written into `dir`.
pub fn write_run_figures(dir: &Path, n_g: usize, capacities: &[f64], rows: &[TraceRow]) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::output(dir))?;
    let n_b = capacities.len();
    let mw = |x: &f64| x / W_PER_MW;

    let mut head = vec!["t".to_string(), "p_L_MW".to_string()];
    head.extend(names("p_g", n_g, "_MW"));
    head.extend(names("p_b", n_b, "_MW"));
    write_table(
        &dir.join("power_split.csv"),
        head,
        rows.iter().map(|r| {
            let mut v = vec![r.t, r.p_load / W_PER_MW];
            v.extend(r.p_g.iter().chain(&r.p_b).map(mw));
            v
        }),
    )?;

    let mut head = vec!["t".to_string()];
    head.extend(names("q", n_b, ""));
    write_table(
        &dir.join("soc.csv"),
        head,
        rows.iter()
            .map(|r| std::iter::once(r.t).chain(r.q.iter().copied()).collect()),
    )?;

    let mut head = vec!["t".to_string()];
    head.extend(names("remaining", n_b, "_pct"));
    head.extend(names("QL", n_b, "_Ah"));
    write_table(
        &dir.join("capacity_loss.csv"),
        head,
        rows.iter().map(|r| {
            let mut v = vec![r.t];
            v.extend(r.q_loss.iter().zip(capacities).map(|(l, q)| (q - l) / q * 100.0));
            v.extend(r.q_loss.iter().map(|l| l / AS_PER_AH));
            v
        }),
    )?;

    write_table(
        &dir.join("iterations.csv"),
        vec!["t".into(), "iters".into(), "residual_W".into()],
        rows.iter().map(|r| vec![r.t, r.iters as f64, r.residual]),
    )
}

pub fn param_name(param: SweepParam) -> String {
    match param {
        SweepParam::Beta => "beta".into(),
        SweepParam::GammaP => "gamma_p".into(),
        SweepParam::GammaQ => "gamma_q".into(),
        SweepParam::GammaJ(j) => format!("gamma_p_{}", j + 1),
    }
}

/// `sweep.csv` (one row per value) in `out` and the plotted series
/// `figures/sweep_<param>.csv` (energies in MWh).
pub fn write_sweep(out: &Path, param: SweepParam, results: &[(f64, Metrics)]) -> Result<()> {
    let figures = out.join("figures");
    fs::create_dir_all(&figures).map_err(Error::output(&figures))?;
    let (n_g, n_b) = results
        .first()
        .map_or((0, 0), |(_, m)| (m.gen_energy_wh.len(), m.batt_energy_wh.len()));
    let name = param_name(param);

    let mut head = vec![
        name.clone(),
        "gen_energy_wh".into(),
        "batt_abs_energy_wh".into(),
        "rms_tracking_error_w".into(),
        "iterations_median".into(),
    ];
    head.extend(names("gen_energy", n_g, "_wh"));
    head.extend(names("batt_abs_energy", n_b, "_wh"));
    head.extend(names("throughput", n_b, "_ah"));
    head.extend(names("remaining", n_b, "_pct"));
    head.extend(names("q_final", n_b, ""));
    write_table(
        &out.join("sweep.csv"),
        head,
        results.iter().map(|(v, m)| {
            let mut r = vec![
                *v,
                m.total_gen_energy_wh(),
                m.total_batt_abs_energy_wh(),
                m.rms_tracking_error,
                m.iterations_median,
            ];
            r.extend(m.gen_energy_wh.iter().chain(&m.batt_abs_energy_wh));
            r.extend(
                m.batt_throughput_ah
                    .iter()
                    .chain(&m.capacity_loss_pct)
                    .chain(&m.q_final),
            );
            r
        }),
    )?;

    let mut head = vec![name.clone(), "gen_MWh".into(), "batt_MWh".into()];
    head.extend(names("gen", n_g, "_MWh"));
    head.extend(names("batt", n_b, "_MWh"));
    write_table(
        &figures.join(format!("sweep_{name}.csv")),
        head,
        results.iter().map(|(v, m)| {
            let mut r = vec![*v, m.total_gen_energy_wh() / 1e6, m.total_batt_abs_energy_wh() / 1e6];
            r.extend(m.gen_energy_wh.iter().chain(&m.batt_abs_energy_wh).map(|e| e / 1e6));
            r
        }),
    )
}
