use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndexSet;
use crate::error::{Error, Result};

/// Smallest horizon for which the asymptotic estimators are defined.
pub const MIN_HORIZON: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub lower_est: f64,
    pub upper_est: f64,
    pub banach_upper_est: f64,
    pub horizon: u64,
    pub window_s: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Infinite sets.
    AInf,
    /// Positive lower density.
    DLower,
    /// Positive upper density.
    DUpper,
    /// Positive upper Banach density.
    BUpper,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "a_inf" => Ok(FamilyKind::AInf),
            "d_lower" => Ok(FamilyKind::DLower),
            "d_upper" => Ok(FamilyKind::DUpper),
            "b_upper" => Ok(FamilyKind::BUpper),
            other => Err(Error::InvalidParameter(format!("unknown family kind `{other}`"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::AInf => "a_inf",
            FamilyKind::DLower => "d_lower",
            FamilyKind::DUpper => "d_upper",
            FamilyKind::BUpper => "b_upper",
        };
        f.write_str(s)
    }
}

fn check_horizon(e: &IndexSet) -> Result<()> {
    if e.horizon() < MIN_HORIZON {
        return Err(Error::InsufficientHorizon {
            horizon: e.horizon(),
            required: MIN_HORIZON,
        });
    }
    Ok(())
}

/// `(min, max)` of `#(E ∩ [0, n]) / n` over `n ∈ [ceil(h/2), h]`.
fn ratio_range(e: &IndexSet) -> (f64, f64) {
    let h = e.horizon();
    let start = h.div_ceil(2).max(1);
    let elems = e.elems();
    let mut count = e.count_upto(start - 1);
    let mut idx = count;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for n in start..=h {
        while idx < elems.len() && elems[idx] <= n {
            idx += 1;
            count += 1;
        }
        let r = count as f64 / n as f64;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
}

/// Finite-horizon lower asymptotic density.
pub fn lower_density_est(e: &IndexSet) -> Result<f64> {
    check_horizon(e)?;
    Ok(ratio_range(e).0)
}

/// Finite-horizon upper asymptotic density.
pub fn upper_density_est(e: &IndexSet) -> Result<f64> {
    check_horizon(e)?;
    Ok(ratio_range(e).1)
}

/// `max_{0 <= k <= h - s} #(E ∩ [k+1, k+s]) / s`.
pub fn banach_upper_density_est(e: &IndexSet, s: u64) -> Result<f64> {
    let h = e.horizon();
    if s == 0 || s > h / 10 {
        return Err(Error::out_of_range("window s", s, format!("[1, {}]", h / 10)));
    }
    let elems = e.elems();
    let k_max = h - s;
    // a best window can always be slid right until its left end is an element
    // (or the last admissible start), so only those starts are scanned
    let count_in = |k: u64| -> usize {
        let a = elems.partition_point(|&x| x < k + 1);
        let b = elems.partition_point(|&x| x <= k + s);
        b - a
    };
    let mut best = count_in(0).max(count_in(k_max));
    let mut right = 0usize;
    for (left, &x) in elems.iter().enumerate() {
        if x == 0 || x - 1 > k_max {
            continue;
        }
        if right < left {
            right = left;
        }
        while right < elems.len() && elems[right] <= x - 1 + s {
            right += 1;
        }
        best = best.max(right - left);
    }
    Ok((best as f64 / s as f64).clamp(0.0, 1.0))
}

/// Window used when callers do not choose one: about `sqrt(h)`, at most `h/10`.
pub fn default_window(horizon: u64) -> u64 {
    ((horizon as f64).sqrt().round() as u64).clamp(1, (horizon / 10).max(1))
}

pub fn density_report(e: &IndexSet, s: Option<u64>) -> Result<DensityReport> {
    check_horizon(e)?;
    let s = s.unwrap_or_else(|| default_window(e.horizon()));
    let (lower_est, upper_est) = ratio_range(e);
    Ok(DensityReport {
        lower_est,
        upper_est,
        banach_upper_est: banach_upper_density_est(e, s)?,
        horizon: e.horizon(),
        window_s: s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: FamilyKind,
    pub member: bool,
    /// The estimator compared against the threshold (`#E / sqrt(h)` for `a_inf`).
    pub value: f64,
    pub threshold: f64,
}

/// Finite-horizon membership call for the four standard families.
pub fn classify_visit_set(e: &IndexSet, kind: FamilyKind, threshold: f64) -> Result<Classification> {
    if !(threshold > 0.0) {
        return Err(Error::out_of_range("threshold", threshold, "(0, inf)"));
    }
    let value = match kind {
        FamilyKind::AInf => e.len() as f64 / (e.horizon().max(1) as f64).sqrt(),
        FamilyKind::DLower => lower_density_est(e)?,
        FamilyKind::DUpper => upper_density_est(e)?,
        FamilyKind::BUpper => banach_upper_density_est(e, default_window(e.horizon()))?,
    };
    Ok(Classification {
        kind,
        member: value >= threshold,
        value,
        threshold,
    })
}
