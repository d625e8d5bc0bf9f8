//! Gamma-scaled linear dynamics on sequence spaces.
//!
//! The crate models finitely supported vectors in `c0(N)`, `lp(N)`, `lp(Z)`
//! and their direct sums with `C`, the unilateral pseudo-shifts and bilateral
//! weighted shifts acting on them, density functionals on subsets of `N0`,
//! and the machinery that turns a scalar sequence `(gamma_n)` plus a family of
//! separated schedules into an explicit vector whose Gamma-scaled orbit
//! revisits every target along a prescribed schedule.
//!
//! Everything is deterministic and pure; products of many weights are kept in
//! log-modulus form so that orbits of length `10^5` neither overflow nor
//! underflow.

pub mod criterion;
pub mod error;
pub mod families;
pub mod numerics;
pub mod operators;
pub mod orbit;
pub mod spaces;

pub use error::{Error, Result};
