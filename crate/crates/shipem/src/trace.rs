//! CSV trace files.
//!
//! One row per energy-management tick with the header
//!
//! ```text
//! t,p_L,p_sup,p_g_1..p_g_G,p_b_1..p_b_B,q_1..q_B,QL_1..QL_B,iters,residual
//! ```
//!
//! Times in s, powers in W, `QL` (capacity lost) in A·s, `residual` in W.
//! Floats are written with 17 significant digits so a reader gets the exact
//! bits back; lines end in `\n`.

use std::io::{Read, Write};
use std::path::Path;

use shipem_core::sim::{PlantSample, SimulationTrace, TraceRow};

use crate::error::{Error, Result};

pub fn header(n_g: usize, n_b: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "p_L", "p_sup"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=n_g).map(|i| format!("p_g_{i}")));
    for prefix in ["p_b", "q", "QL"] {
        h.extend((1..=n_b).map(|j| format!("{prefix}_{j}")));
    }
    h.push("iters".into());
    h.push("residual".into());
    h
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Write `rows` for a fleet of `n_g` generators and `n_b` batteries.
pub fn write_rows<W: Write>(out: W, n_g: usize, n_b: usize, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(header(n_g, n_b))?;
    for r in rows {
        if r.p_g.len() != n_g || r.p_b.len() != n_b || r.q.len() != n_b || r.q_loss.len() != n_b {
            return Err(Error::Trace(format!("row at t = {} does not match the fleet", r.t)));
        }
        let mut rec: Vec<String> = [r.t, r.p_load, r.p_sup].into_iter().map(fmt).collect();
        rec.extend(r.p_g.iter().chain(&r.p_b).chain(&r.q).chain(&r.q_loss).map(|x| fmt(*x)));
        rec.push(r.iters.to_string());
        rec.push(fmt(r.residual));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::output(path))?;
    write_rows(
        std::io::BufWriter::new(file),
        trace.gen_names.len(),
        trace.batt_names.len(),
        &trace.rows,
    )
}

/// Rows read back from a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub n_g: usize,
    pub n_b: usize,
    pub rows: Vec<TraceRow>,
}

pub fn read_rows<R: Read>(input: R) -> Result<TraceTable> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let head: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let n_g = head.iter().filter(|h| h.starts_with("p_g_")).count();
    let n_b = head.iter().filter(|h| h.starts_with("p_b_")).count();
    if head != header(n_g, n_b) {
        return Err(Error::Trace(format!("unexpected header {}", head.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |field: &str| Error::Trace(format!("row {}: bad value `{field}`", line + 1));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&rec[i]));
        let nums = |from: usize, n: usize| (from..from + n).map(num).collect::<Result<Vec<_>>>();
        let iters_col = 3 + n_g + 3 * n_b;
        rows.push(TraceRow {
            t: num(0)?,
            p_load: num(1)?,
            p_sup: num(2)?,
            p_g: nums(3, n_g)?,
            p_b: nums(3 + n_g, n_b)?,
            q: nums(3 + n_g + n_b, n_b)?,
            q_loss: nums(3 + n_g + 2 * n_b, n_b)?,
            iters: rec[iters_col].parse().map_err(|_| bad(&rec[iters_col]))?,
            residual: num(iters_col + 1)?,
        });
    }
    Ok(TraceTable { n_g, n_b, rows })
}

pub fn read_trace(path: &Path) -> Result<TraceTable> {
    let file = std::fs::File::open(path).map_err(Error::input(path))?;
    read_rows(std::io::BufReader::new(file))
}

/// Plant-rate samples: `t,p_L,p_g_*,p_b_*,q_*`.
pub fn write_plant_samples(path: &Path, n_g: usize, n_b: usize, samples: &[PlantSample]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::output(path))?;
    let mut w = csv_writer(std::io::BufWriter::new(file));
    let mut head = vec!["t".to_string(), "p_L".to_string()];
    head.extend((1..=n_g).map(|i| format!("p_g_{i}")));
    head.extend((1..=n_b).map(|j| format!("p_b_{j}")));
    head.extend((1..=n_b).map(|j| format!("q_{j}")));
    w.write_record(&head)?;
    for s in samples {
        let rec: Vec<String> = [s.t, s.p_load]
            .iter()
            .chain(&s.p_g)
            .chain(&s.p_b)
            .chain(&s.q)
            .map(|x| fmt(*x))
            .collect();
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
