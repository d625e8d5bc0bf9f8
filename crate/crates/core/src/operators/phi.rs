use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PHI_LIMIT: u64 = 1 << 62;

/// A strictly increasing `phi: N -> N` with `phi(1) > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    /// `phi(n) = n + offset`.
    Affine { offset: u64 },
    /// `phi(n) = values[n-1]` on the table, then steps of `tail_step`.
    Table { values: Vec<u64>, tail_step: u64 },
}

impl PhiSpec {
    pub fn affine(offset: u64) -> Self {
        PhiSpec::Affine { offset }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhiSpec::Affine { offset } => {
                if *offset == 0 {
                    return Err(Error::InvalidParameter("phi offset must be >= 1".into()));
                }
            }
            PhiSpec::Table { values, tail_step } => {
                if values.is_empty() {
                    return Err(Error::InvalidParameter("phi table is empty".into()));
                }
                if values[0] <= 1 {
                    return Err(Error::InvalidParameter("phi(1) must exceed 1".into()));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter("phi table must be strictly increasing".into()));
                }
                if *tail_step == 0 {
                    return Err(Error::InvalidParameter("phi tail step must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// `phi(n)` for `n >= 1`, `None` past `2^62`.
    pub fn eval(&self, n: u64) -> Option<u64> {
        debug_assert!(n >= 1);
        let v = match self {
            PhiSpec::Affine { offset } => n.checked_add(*offset)?,
            PhiSpec::Table { values, tail_step } => {
                let len = values.len() as u64;
                if n <= len {
                    values[(n - 1) as usize]
                } else {
                    values[values.len() - 1].checked_add((n - len).checked_mul(*tail_step)?)?
                }
            }
        };
        (v <= PHI_LIMIT).then_some(v)
    }

    /// The unique `n >= 1` with `phi(n) = target`, if any.
    pub fn invert(&self, target: u64) -> Option<u64> {
        match self {
            PhiSpec::Affine { offset } => {
                let n = target.checked_sub(*offset)?;
                (n >= 1).then_some(n)
            }
            PhiSpec::Table { values, tail_step } => {
                let len = values.len() as u64;
                let last = values[values.len() - 1];
                if target > last {
                    let d = target - last;
                    return (d % tail_step == 0).then_some(len + d / tail_step);
                }
                values.binary_search(&target).ok().map(|i| i as u64 + 1)
            }
        }
    }

    /// Affine offset when `phi` is affine, the shape the closed forms use.
    pub fn offset(&self) -> Option<u64> {
        match self {
            PhiSpec::Affine { offset } => Some(*offset),
            PhiSpec::Table { .. } => None,
        }
    }
}

/// `phi^m(n)`; `phi_iterate(phi, n, n)` is `Phi(n)`.
pub fn phi_iterate(phi: &PhiSpec, n: u64, m: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::out_of_range("n", n, "[1, inf)"));
    }
    let range = || Error::PhiRange { n, m };
    match phi {
        PhiSpec::Affine { offset } => {
            let v = m.checked_mul(*offset).and_then(|s| s.checked_add(n)).ok_or_else(range)?;
            if v > PHI_LIMIT {
                return Err(range());
            }
            Ok(v)
        }
        PhiSpec::Table { values, tail_step } => {
            let len = values.len() as u64;
            let mut x = n;
            let mut left = m;
            while left > 0 && x <= len {
                x = phi.eval(x).ok_or_else(range)?;
                left -= 1;
            }
            // tail: phi(x) = tail_step * x + (last - len * tail_step)
            if left > 0 && *tail_step == 1 {
                let shift = values[values.len() - 1] - len;
                x = left
                    .checked_mul(shift)
                    .and_then(|s| s.checked_add(x))
                    .ok_or_else(range)?;
            } else {
                while left > 0 {
                    x = phi.eval(x).ok_or_else(range)?;
                    left -= 1;
                }
            }
            if x > PHI_LIMIT {
                return Err(range());
            }
            Ok(x)
        }
    }
}
