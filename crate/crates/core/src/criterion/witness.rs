use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::ak::ln_a;
use super::gamma::GammaSpec;
use crate::error::{Error, Result};
use crate::operators::{phi_iterate, PseudoShift};
use crate::spaces::LogScalar;

/// Largest witness count accepted by [`select_gamma_witnesses`].
pub const MAX_WITNESSES: usize = 1_000_000;

const MAX_K: usize = 1 << 31;
const MAX_LN_MODULUS: f64 = 1e15;

/// Chosen scalars `alpha_n` in Gamma together with `gamma_n = alpha_n^-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSequence {
    pub alphas: Vec<LogScalar>,
    pub gammas_are_inverses: bool,
    /// `ln a_(k_n)`, when the sequence comes from witness selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majorant: Option<Vec<f64>>,
}

impl GammaSequence {
    pub fn new(alphas: Vec<LogScalar>) -> Result<Self> {
        if let Some(n) = alphas.iter().position(|a| a.is_zero() || !a.ln_abs.is_finite()) {
            return Err(Error::InvalidGamma(format!("alpha_{n} is zero or not finite")));
        }
        Ok(Self {
            alphas,
            gammas_are_inverses: true,
            majorant: None,
        })
    }

    /// `alpha_n = alpha0 * delta^n` for `n < len`.
    pub fn geometric(alpha0: LogScalar, delta: f64, len: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::out_of_range("delta", delta, "(0, inf)"));
        }
        let ld = delta.ln();
        Self::new((0..len).map(|n| alpha0.scale_ln(n as f64 * ld)).collect())
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alpha(&self, n: usize) -> LogScalar {
        self.alphas[n]
    }

    /// `gamma_n`.
    pub fn gamma(&self, n: usize) -> LogScalar {
        if self.gammas_are_inverses {
            self.alphas[n].inv()
        } else {
            self.alphas[n]
        }
    }

    pub fn ln_abs_gamma(&self, n: usize) -> f64 {
        self.gamma(n).ln_abs
    }
}

/// Witnesses `alpha_0..alpha_N` and the increasing indices `k_0 < ... < k_(N+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSelection {
    pub sequence: GammaSequence,
    pub k_indices: Vec<usize>,
    /// Log-domain lower and upper bounds that `ln |alpha_n|` sits strictly between.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `ln(v_1 ... v_M)` where `v_i = min(w_i, 1)`.
pub(crate) fn ln_v_product(shift: &PseudoShift, m: u64) -> f64 {
    shift.weights.log_min1_range(1, m)
}

/// `Phi(n) = phi^n(n)`, with `Phi(0) = 0`.
pub(crate) fn big_phi(shift: &PseudoShift, n: u64) -> Result<u64> {
    if n == 0 {
        Ok(0)
    } else {
        phi_iterate(&shift.phi, n, n)
    }
}

/// `-ln a_k - n ln(v_1 ... v_Phi(n))`.
fn bound(k: usize, n: u64, ln_v: f64) -> f64 {
    -ln_a(k) - n as f64 * ln_v
}

/// Picks `alpha_n` in Gamma and `k_n` so that
/// `1/(a_(k_n) V_n) < |alpha_n| < 1/(a_(k_(n+1)) V_(n+1))`, `V_n = (v_1 ... v_Phi(n))^n`.
///
/// Each `alpha_n` is the smallest admissible element of Gamma above the lower
/// bound, and `k_(n+1)` the smallest index past `k_n` lifting the upper bound
/// above it. Indices start at `k_0 = 1`.
pub fn select_gamma_witnesses(gamma: &GammaSpec, shift: &PseudoShift, n_max: usize) -> Result<WitnessSelection> {
    gamma.validate()?;
    if !gamma.is_unbounded() {
        return Err(Error::NotApplicable("witness selection needs an unbounded scalar set".into()));
    }
    if n_max > MAX_WITNESSES {
        return Err(Error::out_of_range("N", n_max, format!("[0, {MAX_WITNESSES}]")));
    }
    let mut alphas = Vec::with_capacity(n_max + 1);
    let mut ks = vec![1usize];
    let mut lower = Vec::with_capacity(n_max + 1);
    let mut upper = Vec::with_capacity(n_max + 1);
    let mut ln_v_n = ln_v_product(shift, big_phi(shift, 0)?);
    for n in 0..=n_max {
        let k_n = ks[n];
        let lo = bound(k_n, n as u64, ln_v_n);
        let alpha = match gamma {
            GammaSpec::UnboundedGen {
                base, min_exponent, phase, ..
            } => {
                let lb = base.ln();
                let mut m = ((lo / lb).floor() as i64).saturating_add(1).max(*min_exponent);
                while (m as f64) * lb <= lo {
                    m += 1;
                }
                LogScalar::new(m as f64 * lb, *phase)
            }
            _ => LogScalar::new(lo + LN_2, 0.0),
        };
        if !(alpha.ln_abs.is_finite() && alpha.ln_abs < MAX_LN_MODULUS) {
            return Err(Error::UnboundednessViolation {
                n,
                reason: format!("required ln|alpha| = {lo:.6e} exceeds the modulus range"),
            });
        }
        let ln_v_next = ln_v_product(shift, big_phi(shift, n as u64 + 1)?);
        let mut k = k_n + 1;
        while bound(k, n as u64 + 1, ln_v_next) <= alpha.ln_abs {
            k += 1;
            if k > MAX_K {
                return Err(Error::UnboundednessViolation {
                    n,
                    reason: format!("no index k <= {MAX_K} lifts the upper bound"),
                });
            }
        }
        alphas.push(alpha);
        lower.push(lo);
        upper.push(bound(k, n as u64 + 1, ln_v_next));
        ks.push(k);
        ln_v_n = ln_v_next;
    }
    let mut sequence = GammaSequence::new(alphas)?;
    sequence.majorant = Some(ks[..=n_max].iter().map(|&k| ln_a(k)).collect());
    Ok(WitnessSelection {
        sequence,
        k_indices: ks,
        lower,
        upper,
    })
}
