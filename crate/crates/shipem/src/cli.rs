//! `shipem` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use shipem_core::central::{build_central_qp, Measurements};
use shipem_core::sim::{pulse_load_profile, run_scenario_with, RunOptions, SweepParam};

use crate::config::{load_config_file, Override};
use crate::dispatch::{solve_dispatch, DispatchDoc};
use crate::error::{Error, Result};
use crate::report::{param_name, write_json, write_run_figures, write_sweep, MetricsDoc};
use crate::sweep::parallel_sweep;
use crate::trace::{read_trace, write_plant_samples, write_trace};

#[derive(Debug, Parser)]
#[command(
    name = "shipem",
    version,
    about = "Predictive energy management for islanded DC microgrids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one closed-loop scenario; writes trace.csv, metrics.json and figures/
    Run {
        /// Scenario document (JSON)
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
        /// Override a config key before validation, e.g. --set alpha=0.2
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<Override>,
        /// Also write every plant step to plant.csv
        #[arg(long)]
        plant_trace: bool,
    },
    /// Re-run a scenario for each value of one weight; writes sweep.csv,
    /// metrics.json and figures/sweep_<param>.csv
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// beta, gamma_p, gamma_q or gamma_j (one battery, see --battery)
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0,1,10
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        /// Battery (1-based) swept by gamma_j
        #[arg(long)]
        battery: Option<usize>,
        /// Runs executed in parallel
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<Override>,
    },
    /// Solve an economic-dispatch file and print the split as JSON
    Dispatch {
        /// Dispatch document (JSON)
        #[arg(short, long)]
        config: PathBuf,
        /// Also write dispatch.json here
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Load and check a scenario without running it
    Validate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<Override>,
        /// Write the first centralized QP in text form to this file
        #[arg(long, value_name = "PATH")]
        dump_qp: Option<PathBuf>,
    },
    /// Turn an existing trace into per-figure series files
    Plotdata {
        /// Scenario the trace came from (device count and capacities)
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        trace: PathBuf,
        /// Output directory; series go to <out>/figures/
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::output(dir))
}

fn sweep_param(name: &str, battery: Option<usize>) -> Result<SweepParam> {
    match (name, battery) {
        ("beta", None) => Ok(SweepParam::Beta),
        ("gamma_p", None) => Ok(SweepParam::GammaP),
        ("gamma_q", None) => Ok(SweepParam::GammaQ),
        ("gamma_j", Some(j)) if j >= 1 => Ok(SweepParam::GammaJ(j - 1)),
        ("gamma_j", _) => Err(Error::Usage("gamma_j needs --battery <index >= 1>".into())),
        (_, Some(_)) => Err(Error::Usage("--battery only applies to gamma_j".into())),
        (other, None) => Err(Error::Usage(format!(
            "unknown sweep parameter `{other}` (beta, gamma_p, gamma_q, gamma_j)"
        ))),
    }
}

pub fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    let say = |out: &mut dyn Write, s: String| {
        let _ = writeln!(out, "{s}");
    };
    match cmd {
        Command::Run {
            config,
            out,
            overrides,
            plant_trace,
        } => {
            let cfg = load_config_file(&config, &overrides)?;
            let (trace, metrics) = run_scenario_with(
                &cfg,
                RunOptions {
                    plant_trace,
                    ..RunOptions::default()
                },
            )?;
            create_dir(&out)?;
            write_trace(&trace, &out.join("trace.csv"))?;
            write_json(&out.join("metrics.json"), &MetricsDoc::from_trace(&trace, &metrics))?;
            write_run_figures(
                &out.join("figures"),
                trace.gen_names.len(),
                &trace.capacities,
                &trace.rows,
            )?;
            if let Some(samples) = &trace.plant {
                write_plant_samples(
                    &out.join("plant.csv"),
                    trace.gen_names.len(),
                    trace.batt_names.len(),
                    samples,
                )?;
            }
            say(
                stdout,
                format!(
                    "{} ticks, rms tracking error {:.3e} W, median iterations {}",
                    trace.rows.len(),
                    metrics.rms_tracking_error,
                    metrics.iterations_median
                ),
            );
        }
        Command::Sweep {
            config,
            out,
            param,
            values,
            battery,
            workers,
            overrides,
        } => {
            let param = sweep_param(&param, battery)?;
            if workers == 0 {
                return Err(Error::Usage("--workers must be >= 1".into()));
            }
            let cfg = load_config_file(&config, &overrides)?;
            let results = parallel_sweep(&cfg, param, &values, workers)?;
            create_dir(&out)?;
            write_sweep(&out, param, &results)?;
            let gens: Vec<String> = cfg.fleet.generators.iter().map(|g| g.name.clone()).collect();
            let batts: Vec<String> = cfg.fleet.batteries.iter().map(|b| b.name.clone()).collect();
            let docs: Vec<serde_json::Value> = results
                .iter()
                .map(|(v, m)| {
                    serde_json::json!({
                        "value": v,
                        "metrics": MetricsDoc::new(&gens, &batts, m, &[]),
                    })
                })
                .collect();
            write_json(
                &out.join("metrics.json"),
                &serde_json::json!({ "param": param_name(param), "runs": docs }),
            )?;
            say(stdout, format!("{} runs written to {}", results.len(), out.display()));
        }
        Command::Dispatch { config, out } => {
            let text = fs::read_to_string(&config).map_err(Error::input(&config))?;
            let doc: DispatchDoc = serde_json::from_str(&text)?;
            let result = solve_dispatch(&doc)?;
            if let Some(out) = out {
                create_dir(&out)?;
                write_json(&out.join("dispatch.json"), &result)?;
            }
            say(stdout, serde_json::to_string_pretty(&result)?);
        }
        Command::Validate {
            config,
            overrides,
            dump_qp,
        } => {
            let cfg = load_config_file(&config, &overrides)?;
            if let Some(path) = dump_qp {
                let p_load = pulse_load_profile(&cfg.load, 0.0)?;
                let prob = build_central_qp(&cfg, &Measurements::initial(&cfg, p_load))?;
                let file = fs::File::create(&path).map_err(Error::output(&path))?;
                crate::qpdump::write_qp(std::io::BufWriter::new(file), &prob).map_err(Error::output(&path))?;
            }
            say(
                stdout,
                format!(
                    "ok: {} generator(s), {} battery(ies), horizon {}, {} ticks",
                    cfg.fleet.generators.len(),
                    cfg.fleet.batteries.len(),
                    cfg.horizon,
                    cfg.ticks()
                ),
            );
        }
        Command::Plotdata { config, trace, out } => {
            let cfg = load_config_file(&config, &[])?;
            let table = read_trace(&trace)?;
            let capacities: Vec<f64> = cfg.fleet.batteries.iter().map(|b| b.capacity).collect();
            if table.n_g != cfg.fleet.generators.len() || table.n_b != capacities.len() {
                return Err(Error::Usage(format!(
                    "trace has {} generator(s) and {} battery(ies), config has {} and {}",
                    table.n_g,
                    table.n_b,
                    cfg.fleet.generators.len(),
                    capacities.len()
                )));
            }
            write_run_figures(&out.join("figures"), table.n_g, &capacities, &table.rows)?;
            say(
                stdout,
                format!("{} rows written to {}", table.rows.len(), out.join("figures").display()),
            );
        }
    }
    Ok(())
}

/// Parse `args` (program name first), run, and return the exit code:
/// 0 on success, 1 for usage or validation errors, 2 for runtime faults.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
