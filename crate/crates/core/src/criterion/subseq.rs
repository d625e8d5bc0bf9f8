use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::ComplexScalar;

/// Log tolerance on ratio comparisons.
const LN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub indices: Vec<usize>,
    pub delta_used: f64,
    /// `|alpha_(k_(l+1))| / |alpha_(k_l)|` for consecutive chosen indices.
    pub ratios: Vec<f64>,
}

/// Greedy extraction of `k_0 = 0 < k_1 < ...` with
/// `delta^2 <= |alpha_(k_(l+1))| / |alpha_(k_l)| <= delta`.
///
/// `delta = None` takes the smallest consecutive ratio of the input, the
/// largest value for which every step ratio is at least `delta`.
pub fn extract_exponential_subsequence(alphas: &[ComplexScalar], delta: Option<f64>) -> Result<Extraction> {
    let ln: Vec<f64> = alphas.iter().map(|a| a.norm().ln()).collect();
    extract_ln(&ln, delta)
}

/// As [`extract_exponential_subsequence`] on `ln |alpha_k|`.
pub fn extract_ln(ln_abs: &[f64], delta: Option<f64>) -> Result<Extraction> {
    if ln_abs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two terms".into()));
    }
    if let Some(k) = ln_abs.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha_{k} is zero or not finite")));
    }
    let steps: Vec<f64> = ln_abs.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(k) = steps.iter().position(|&s| s >= 0.0) {
        return Err(Error::InvalidParameter(format!("|alpha| is not strictly decreasing at index {}", k + 1)));
    }
    let delta = match delta {
        Some(d) => d,
        None => steps.iter().copied().fold(f64::INFINITY, f64::min).exp(),
    };
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::out_of_range("delta", delta, "(0, 1)"));
    }
    let ld = delta.ln();
    if let Some(k) = steps.iter().position(|&s| s < ld - LN_TOL) {
        return Err(Error::HypothesisNotMet {
            index: k,
            ratio: steps[k].exp(),
            delta,
        });
    }
    let mut indices = vec![0usize];
    let mut ratios = Vec::new();
    let mut base = 0usize;
    for k in 1..ln_abs.len() {
        let r = ln_abs[k] - ln_abs[base];
        if r <= ld + LN_TOL {
            indices.push(k);
            ratios.push(r.exp());
            base = k;
        }
    }
    Ok(Extraction {
        indices,
        delta_used: delta,
        ratios,
    })
}
