//! Unilateral pseudo-shifts, bilateral weighted shifts and their sums with `Id_C`.

mod phi;
mod presets;
mod shift;
mod weights;

pub use phi::{phi_iterate, PhiSpec};
pub use presets::{preset, PresetParams, PRESETS};
pub use shift::{BilateralShift, Operator, PseudoShift, MAX_POWER};
pub use weights::WeightRule;
