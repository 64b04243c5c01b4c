use alloc::format;
use alloc::vec::Vec;

use crate::error::{ConfigError, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// s
    pub start: f64,
    /// s, exclusive
    pub end: f64,
    /// W added on top of the base load.
    pub amplitude: f64,
}

/// Piecewise-constant load: a base level plus rectangular pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseLoadSpec {
    pub base: f64,
    pub pulses: Vec<Pulse>,
    pub total_duration: f64,
    /// Upper limit on the instantaneous load, W.
    pub rating: Option<f64>,
}

impl PulseLoadSpec {
    pub fn constant(base: f64, total_duration: f64) -> Self {
        Self {
            base,
            pulses: Vec::new(),
            total_duration,
            rating: None,
        }
    }

    /// Peak instantaneous load.
    pub fn peak(&self) -> f64 {
        // the load only changes at pulse edges, so probing every start suffices
        let mut peak = self.base;
        for p in &self.pulses {
            peak = peak.max(self.value_at(p.start));
        }
        peak
    }

    fn value_at(&self, t: f64) -> f64 {
        self.base
            + self
                .pulses
                .iter()
                .filter(|p| p.start <= t && t < p.end)
                .map(|p| p.amplitude)
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.total_duration > 0.0) || !self.total_duration.is_finite() {
            return Err(ConfigError::new("load.total_duration", "must be finite and > 0"));
        }
        if !self.base.is_finite() {
            return Err(ConfigError::new("load.base", "must be finite"));
        }
        for (i, p) in self.pulses.iter().enumerate() {
            if !(0.0 <= p.start && p.start < p.end && p.end <= self.total_duration) {
                return Err(ConfigError::new(
                    format!("load.pulses[{i}]"),
                    "0 <= start < end <= total_duration required",
                ));
            }
            if !p.amplitude.is_finite() {
                return Err(ConfigError::new(
                    format!("load.pulses[{i}].amplitude"),
                    "must be finite",
                ));
            }
        }
        if let Some(r) = self.rating {
            if self.peak() > r {
                return Err(ConfigError::new(
                    "load.rating",
                    format!("peak load {} W exceeds rating {r} W", self.peak()),
                ));
            }
        }
        Ok(())
    }
}

/// Load demanded at time `t`; pulses are active on `[start, end)`.
pub fn pulse_load_profile(spec: &PulseLoadSpec, t: f64) -> Result<f64, SimError> {
    if !(0.0..=spec.total_duration).contains(&t) {
        return Err(SimError::TimeOutOfRange {
            t,
            duration: spec.total_duration,
        });
    }
    Ok(spec.value_at(t))
}
