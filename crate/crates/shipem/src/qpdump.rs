//! Line-oriented text dump of a QP for offline inspection.
//!
//! ```text
//! qp <n> <m>
//! P <i> <j> <value>     one line per nonzero, 0-based indices
//! q <i> <value>
//! A <i> <j> <value>
//! l <i> <value>         -inf / inf for open sides
//! u <i> <value>
//! ```

use std::io::{self, BufRead, Write};

use shipem_core::linalg::Mat;
use shipem_core::qp::QpProblem;

use crate::error::{Error, Result};
use crate::trace::fmt;

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        fmt(x)
    }
}

fn write_mat<W: Write>(w: &mut W, tag: &str, m: &Mat) -> io::Result<()> {
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(w, "{tag} {i} {j} {}", num(*v))?;
        }
    }
    Ok(())
}

pub fn write_qp<W: Write>(mut w: W, prob: &QpProblem) -> io::Result<()> {
    writeln!(w, "qp {} {}", prob.n(), prob.m())?;
    write_mat(&mut w, "P", &prob.p)?;
    for (i, v) in prob.q.iter().enumerate() {
        writeln!(w, "q {i} {}", num(*v))?;
    }
    write_mat(&mut w, "A", &prob.a)?;
    for (tag, v) in [("l", &prob.l), ("u", &prob.u)] {
        for (i, x) in v.iter().enumerate() {
            writeln!(w, "{tag} {i} {}", num(*x))?;
        }
    }
    Ok(())
}

pub fn read_qp<R: BufRead>(r: R) -> Result<QpProblem> {
    let bad = |line: usize, what: &str| Error::Trace(format!("qp dump line {line}: {what}"));
    let mut lines = r.lines().enumerate();
    let (n, m) = match lines.next() {
        Some((_, Ok(l))) => {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                ["qp", n, m] => (n.parse().map_err(|_| bad(1, "n"))?, m.parse().map_err(|_| bad(1, "m"))?),
                _ => return Err(bad(1, "expected `qp <n> <m>`")),
            }
        }
        _ => return Err(bad(1, "empty dump")),
    };
    let (mut p, mut a) = (Mat::zeros(n, n), Mat::zeros(m, n));
    let (mut q, mut l, mut u) = (vec![0.0; n], vec![0.0; m], vec![0.0; m]);
    for (k, line) in lines {
        let line = line.map_err(|e| bad(k + 1, &e.to_string()))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        let idx = |s: &str, lim: usize| {
            s.parse::<usize>()
                .ok()
                .filter(|i| *i < lim)
                .ok_or_else(|| bad(k + 1, "index"))
        };
        let val = |s: &str| s.parse::<f64>().map_err(|_| bad(k + 1, "value"));
        match f.as_slice() {
            ["P", i, j, v] => p.row_mut(idx(i, n)?)[idx(j, n)?] = val(v)?,
            ["A", i, j, v] => a.row_mut(idx(i, m)?)[idx(j, n)?] = val(v)?,
            ["q", i, v] => q[idx(i, n)?] = val(v)?,
            ["l", i, v] => l[idx(i, m)?] = val(v)?,
            ["u", i, v] => u[idx(i, m)?] = val(v)?,
            [] => {}
            _ => return Err(bad(k + 1, "unknown record")),
        }
    }
    Ok(QpProblem::new(p, q, a, l, u)?)
}
