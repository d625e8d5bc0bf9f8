//! Density functionals on subsets of `N0` and separated schedules.

mod density;
mod index_set;
mod schedule;

pub use density::{
    banach_upper_density_est, classify_visit_set, default_window, density_report, lower_density_est,
    upper_density_est, Classification, DensityReport, FamilyKind, MIN_HORIZON,
};
pub use index_set::IndexSet;
pub use schedule::{generate_schedules, verify_separation, ScheduleFamily};
