//! Device models integrated at the plant step with forward Euler.
//!
//! Every step function is pure: state in, state out.

mod battery;
mod degradation;
mod flywheel;
mod generator;
mod load;

pub use battery::{soc_discrete_update, step_pcm, PcmStep, SocState};
pub use degradation::{capacity_loss_percent, update_degradation, DegradationState};
pub use flywheel::{step_flywheel, FlywheelState, FlywheelStep};
pub use generator::{step_pgm, GenState};
pub use load::{static_load, step_plm, PlmState};
