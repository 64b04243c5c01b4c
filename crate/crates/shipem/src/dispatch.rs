//! Economic-dispatch problem files.
//!
//! ```json
//! { "demand": 3.0,
//!   "units": [ { "name": "g1", "a": 1.0, "b": 0.0, "c": 0.0, "p_min": 0.0, "p_max": 10.0 } ] }
//! ```
//!
//! Cost of a unit is `a p² + b p + c`; the solver is unit-agnostic, so the
//! answer comes back in whatever power unit the file uses.

use serde::{Deserialize, Serialize};
use shipem_core::dispatch::{economic_dispatch, QuadCost};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitDoc {
    #[serde(default)]
    pub name: String,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchDoc {
    pub demand: f64,
    pub units: Vec<UnitDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitResult {
    pub name: String,
    pub p: f64,
    pub incremental_cost: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchResult {
    pub demand: f64,
    pub units: Vec<UnitResult>,
    pub total_cost: f64,
}

pub fn solve_dispatch(doc: &DispatchDoc) -> Result<DispatchResult> {
    let costs = doc
        .units
        .iter()
        .map(|u| QuadCost::new(u.a, u.b, u.c))
        .collect::<Result<Vec<_>, _>>()?;
    let bounds: Vec<(f64, f64)> = doc.units.iter().map(|u| (u.p_min, u.p_max)).collect();
    let p = economic_dispatch(&costs, &bounds, doc.demand)?;
    let units: Vec<UnitResult> = doc
        .units
        .iter()
        .zip(&costs)
        .zip(&p)
        .enumerate()
        .map(|(i, ((u, c), p))| UnitResult {
            name: if u.name.is_empty() {
                format!("unit{}", i + 1)
            } else {
                u.name.clone()
            },
            p: *p,
            incremental_cost: c.incremental(*p),
            cost: c.cost(*p),
        })
        .collect();
    let total_cost = units.iter().map(|u| u.cost).sum();
    Ok(DispatchResult {
        demand: doc.demand,
        units,
        total_cost,
    })
}
