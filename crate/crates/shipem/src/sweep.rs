//! Weight sweeps over a pool of worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use shipem_core::domain::ScenarioConfig;
use shipem_core::sim::{run_scenario, sweep_weights, with_param, Metrics, SweepParam};
use shipem_core::SimError;

/// Same result as [`sweep_weights`], with the runs spread over `workers`
/// threads. Runs share nothing, so the output does not depend on `workers`
/// and is always in input order.
pub fn parallel_sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    workers: usize,
) -> Result<Vec<(f64, Metrics)>, SimError> {
    // argument checks without running anything
    sweep_weights(cfg, param, &[])?;
    if let Some(bad) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return sweep_weights(cfg, param, &values[bad..=bad]);
    }
    if workers <= 1 || values.len() <= 1 {
        return sweep_weights(cfg, param, values);
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Metrics, SimError>>>> = Mutex::new(vec![None; values.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.min(values.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&v) = values.get(i) else { break };
                let r = run_scenario(&with_param(cfg, param, v)).map(|(_, m)| m);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    let slots = slots.into_inner().expect("worker panicked");
    values
        .iter()
        .zip(slots)
        .map(|(&v, r)| r.expect("every value is run").map(|m| (v, m)))
        .collect()
}
