use alloc::string::String;
use core::fmt;

/// A configuration value violated one of its declared invariants.
///
/// `field` names the offending key (dotted path for nested records) and
/// `violation` states the broken relation, e.g. `"q_min >= q_max"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub violation: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, violation: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            violation: violation.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.violation)
    }
}

impl core::error::Error for ConfigError {}

/// Errors raised while building or solving energy-management problems.
#[derive(Debug, Clone, PartialEq)]
pub enum EmError {
    /// Vector or matrix sizes disagree with the device fleet or horizon.
    DimensionMismatch(String),
    UnknownScenario(u32),
    /// A single node's local box/ramp/SoC constraints admit no solution.
    NodeInfeasible(String),
    /// Economic dispatch demand lies outside the aggregate unit limits.
    DispatchInfeasible {
        demand: f64,
        min: f64,
        max: f64,
    },
    InvalidArgument(String),
}

impl fmt::Display for EmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            EmError::UnknownScenario(id) => write!(f, "unknown weight scenario {id} (expected 1, 2 or 3)"),
            EmError::NodeInfeasible(node) => write!(f, "local constraints of {node} are infeasible"),
            EmError::DispatchInfeasible { demand, min, max } => {
                write!(f, "demand {demand} W outside aggregate capability [{min}, {max}] W")
            }
            EmError::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
        }
    }
}

impl core::error::Error for EmError {}

/// Device-model and co-simulation faults.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// Integration produced a non-finite state.
    DeviceFault {
        device: String,
        time: f64,
    },
    InvalidBusVoltage(f64),
    TorqueOutOfRange {
        torque: f64,
        limit: f64,
    },
    /// dq reference computation with a zero grid-voltage vector.
    SingularVoltage,
    TimeOutOfRange {
        t: f64,
        duration: f64,
    },
    /// The distributed coordinator exhausted its budget of non-converged ticks.
    NotConverged {
        tick: usize,
        time: f64,
        residual: f64,
    },
    Em {
        tick: usize,
        source: EmError,
    },
    Config(ConfigError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::DeviceFault { device, time } => {
                write!(f, "simulation fault: {device} state became non-finite at t = {time} s")
            }
            SimError::InvalidBusVoltage(v) => write!(f, "invalid bus voltage {v} V"),
            SimError::TorqueOutOfRange { torque, limit } => {
                write!(f, "torque command {torque} N·m exceeds limit {limit} N·m")
            }
            SimError::SingularVoltage => f.write_str("zero grid voltage: current reference is singular"),
            SimError::TimeOutOfRange { t, duration } => {
                write!(f, "time {t} s outside profile range [0, {duration}] s")
            }
            SimError::NotConverged { tick, time, residual } => write!(
                f,
                "energy management did not converge at tick {tick} (t = {time} s, residual {residual} W)"
            ),
            SimError::Em { tick, source } => write!(f, "tick {tick}: {source}"),
            SimError::Config(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e)
    }
}
