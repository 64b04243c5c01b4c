//! File formats and the command-line front end for `shipem-core`: scenario
//! documents, CSV traces, metrics summaries, plot series and parallel
//! weight sweeps.

pub mod cli;
pub mod config;
pub mod dispatch;
mod error;
pub mod qpdump;
pub mod report;
pub mod sweep;
pub mod trace;

pub use config::{emit_config, load_config, load_config_file, load_config_with, Override};
pub use error::{Error, Result};
