use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pow2;
use crate::spaces::{IndexDomain, SparseVector};

/// An enumeration `E_1, E_2, ...` of a dense set, consumed as
/// `E_1; E_1, E_2; E_1, E_2, E_3; ...` so that each element recurs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenseSequence {
    /// Finite-support vectors with coordinates in `2^-resolution (Z + iZ)` and
    /// support in `[1, bound]` (or `[-bound, bound]` on `Z`), listed by height.
    Diagonal { bound: u64, resolution: u32 },
    /// The given vectors cycled in order.
    Cycle { targets: Vec<Vec<(i64, f64, f64)>> },
}

impl DenseSequence {
    /// The first `len` vectors `y_1, ..., y_len`.
    pub fn take(&self, domain: IndexDomain, len: usize) -> Result<Vec<SparseVector>> {
        match self {
            DenseSequence::Cycle { targets } => {
                if targets.is_empty() {
                    return Err(Error::InvalidParameter("dense cycle has no targets".into()));
                }
                let base = targets
                    .iter()
                    .map(|t| SparseVector::from_triples(domain, t))
                    .collect::<Result<Vec<_>>>()?;
                if base.iter().any(|v| v.is_empty()) {
                    return Err(Error::InvalidParameter("dense cycle contains a zero vector".into()));
                }
                Ok((0..len).map(|i| base[i % base.len()].clone()).collect())
            }
            DenseSequence::Diagonal { bound, resolution } => {
                if *bound == 0 || *resolution > 60 {
                    return Err(Error::InvalidParameter("diagonal needs bound >= 1 and resolution <= 60".into()));
                }
                // E_1 .. E_t suffice once t(t+1)/2 >= len
                let mut t = 0usize;
                while t * (t + 1) / 2 < len {
                    t += 1;
                }
                let distinct = lattice_prefix(domain, *bound, *resolution, t);
                let mut out = Vec::with_capacity(len);
                'outer: for round in 1..=t {
                    for e in distinct.iter().take(round) {
                        if out.len() == len {
                            break 'outer;
                        }
                        out.push(e.clone());
                    }
                }
                Ok(out)
            }
        }
    }
}

/// The first `count` lattice vectors in height order.
///
/// The height of a vector is the largest of its integer numerators and of
/// `max(|i|, 1)` over its support. Height `h` lists the vectors of height
/// exactly `h` in odometer order over positions and numerators.
fn lattice_prefix(domain: IndexDomain, bound: u64, resolution: u32, count: usize) -> Vec<SparseVector> {
    let unit = pow2(-(resolution as i64));
    let mut out = Vec::with_capacity(count);
    let mut h = 1u64;
    while out.len() < count {
        let r = h.min(bound) as i64;
        let pos: Vec<i64> = match domain {
            IndexDomain::Natural => (1..=r).collect(),
            IndexDomain::Integer => (-r..=r).collect(),
        };
        let width = 2 * h as i64 + 1;
        let digits = 2 * pos.len();
        let mut odo = vec![0i64; digits];
        'scan: loop {
            let nums: Vec<i64> = odo.iter().map(|d| d - h as i64).collect();
            let height = pos
                .iter()
                .enumerate()
                .filter(|&(i, _)| nums[2 * i] != 0 || nums[2 * i + 1] != 0)
                .map(|(i, &p)| p.unsigned_abs().max(1).max(nums[2 * i].unsigned_abs()).max(nums[2 * i + 1].unsigned_abs()))
                .max();
            if height == Some(h) {
                let entries = pos
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (p, Complex64::new(nums[2 * i] as f64 * unit, nums[2 * i + 1] as f64 * unit)));
                out.push(SparseVector::from_entries(domain, entries).expect("lattice entries are finite"));
                if out.len() == count {
                    break 'scan;
                }
            }
            let mut i = 0;
            loop {
                if i == digits {
                    break 'scan;
                }
                odo[i] += 1;
                if odo[i] < width {
                    break;
                }
                odo[i] = 0;
                i += 1;
            }
        }
        h += 1;
    }
    out
}
