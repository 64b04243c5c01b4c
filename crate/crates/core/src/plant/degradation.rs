use crate::domain::DegradationParams;
use crate::math;

/// Accumulated current throughput and the resulting capacity loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationState {
    /// `∫ |i_b|^rho dt`.
    pub throughput: f64,
    /// Capacity loss, A·s.
    pub q_loss: f64,
    /// Arrhenius coefficient resolved at the battery's C-rate.
    pub zeta_eff: f64,
    pub rho: f64,
}

impl DegradationState {
    pub fn new(params: &DegradationParams, c_rate: f64) -> Self {
        Self {
            throughput: 0.0,
            q_loss: 0.0,
            zeta_eff: params.zeta_eff(c_rate),
            rho: params.rho,
        }
    }
}

/// Accumulate `|i_b|^rho · dt` and refresh `Q_L = zeta_eff · throughput`.
pub fn update_degradation(deg: DegradationState, i_b: f64, dt: f64) -> DegradationState {
    debug_assert!(dt > 0.0);
    let mag = i_b.abs();
    let increment = if deg.rho == 1.0 { mag } else { math::powf(mag, deg.rho) };
    let throughput = deg.throughput + increment * dt;
    DegradationState {
        throughput,
        q_loss: deg.zeta_eff * throughput,
        ..deg
    }
}

/// `(Q − Q_L) / Q × 100`. Despite the "capacity loss" label this is the
/// remaining-capacity percentage: 100 for a fresh battery.
pub fn capacity_loss_percent(deg: &DegradationState, capacity: f64) -> f64 {
    (capacity - deg.q_loss) / capacity * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rho: f64) -> DegradationState {
        let params = DegradationParams {
            rho,
            ..DegradationParams::default()
        };
        DegradationState::new(&params, 41.67)
    }

    #[test]
    fn zero_current_leaves_state() {
        let d = state(1.0);
        assert_eq!(update_degradation(d, 0.0, 3.0), d);
    }

    #[test]
    fn constant_current_integrates_linearly() {
        let mut d = state(1.0);
        for _ in 0..50_000 {
            d = update_degradation(d, 833.333_333_333_333_3, 1e-3);
        }
        assert!((d.throughput - 41_666.666_7).abs() < 1e-3);
        assert!((d.q_loss - d.zeta_eff * d.throughput).abs() < 1e-12);
    }

    #[test]
    fn half_exponent() {
        let d = update_degradation(state(0.5), -4.0, 1.0);
        assert!((d.throughput - 2.0).abs() < 1e-15);
    }

    #[test]
    fn loss_percent_examples() {
        let mut d = state(1.0);
        assert_eq!(capacity_loss_percent(&d, 72_000.0), 100.0);
        d.q_loss = 7_200.0;
        assert!((capacity_loss_percent(&d, 72_000.0) - 90.0).abs() < 1e-12);
        d.q_loss = 72_000.0;
        assert_eq!(capacity_loss_percent(&d, 72_000.0), 0.0);
    }
}
