//! Finitely supported vectors, sequence-space norms and best-scalar fits.

mod projection;
mod scalar;
mod space;
mod vector;

pub use projection::{best_scalar_distance, best_scalar_distance_scaled, ScalarFit, GRID_MODULI, GRID_PHASES};
pub use scalar::{ComplexScalar, LogScalar};
pub use space::{norm, SpaceSpec};
pub use vector::{axpy, DirectSumVector, IndexDomain, ScaledVector, SparseVector, Vector, VectorRef, PRUNE_THRESHOLD};

