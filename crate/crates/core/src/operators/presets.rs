use serde::{Deserialize, Serialize};

use super::{Operator, PhiSpec, WeightRule};
use crate::error::{Error, Result};
use crate::spaces::SpaceSpec;

/// Optional knobs for the preset catalog; unset fields take the defaults below.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    /// Exponent of `lp` (default 2).
    pub p: Option<f64>,
    /// Use `c0(N)` instead of `lp(N)` for unilateral presets.
    #[serde(default)]
    pub c0: bool,
    /// Bilateral weight on the positive side (default 2).
    pub eta: Option<f64>,
    /// Bilateral weight on the non-positive side (default 1).
    pub nonpositive: Option<f64>,
    /// Constant backward-shift weight (default 2).
    pub v: Option<f64>,
    /// `u_n = u_scale * u_ratio^n` (defaults 1 and 1/2).
    pub u_scale: Option<f64>,
    pub u_ratio: Option<f64>,
}

/// Preset names with one-line descriptions.
pub const PRESETS: &[(&str, &str)] = &[
    ("cor22c", "backward shift on lp(N) with w_k = ((k+1)/k)^(1/p): mixing, not reiteratively hypercyclic"),
    ("prop59", "bilateral shift on l2(Z), w_k = eta for k > 0 and 1 otherwise (eta > 1)"),
    ("tu", "pseudo-shift phi(n) = n+1 with w = (u_1, u_1, u_2, ...), u_n = u_scale * u_ratio^n summable"),
    ("geometric", "backward shift with constant weight v on lp(N) or c0(N)"),
    ("eta-bilateral", "bilateral shift on lp(Z), w_k = eta for k > 0 and `nonpositive` otherwise"),
];

fn unilateral_space(params: &PresetParams) -> SpaceSpec {
    if params.c0 {
        SpaceSpec::C0N
    } else {
        SpaceSpec::lp_n(params.p.unwrap_or(2.0))
    }
}

/// Backward shift `B_v` written as the pseudo-shift `phi(n) = n+1`, `w = (1, v_1, v_2, ...)`.
fn backward_shift(v: WeightRule, space: SpaceSpec) -> Result<Operator> {
    Operator::pseudo_shift(
        PhiSpec::affine(1),
        WeightRule::Shifted {
            lead: 1.0,
            rest: Box::new(v),
        },
        space,
    )
}

fn eta(params: &PresetParams) -> Result<f64> {
    let eta = params.eta.unwrap_or(2.0);
    if !(eta.is_finite() && eta > 1.0) {
        return Err(Error::out_of_range("eta", eta, "(1, inf)"));
    }
    Ok(eta)
}

pub fn preset(name: &str, params: &PresetParams) -> Result<Operator> {
    match name {
        "cor22c" => {
            let p = params.p.unwrap_or(2.0);
            backward_shift(WeightRule::Cor22c { p }, SpaceSpec::lp_n(p))
        }
        "geometric" => backward_shift(WeightRule::constant(params.v.unwrap_or(2.0)), unilateral_space(params)),
        "tu" => {
            let scale = params.u_scale.unwrap_or(1.0);
            let ratio = params.u_ratio.unwrap_or(0.5);
            if !(scale.is_finite() && scale > 0.0) || !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::InvalidParameter("u must be positive and summable: u_scale > 0, 0 < u_ratio < 1".into()));
            }
            Operator::pseudo_shift(
                PhiSpec::affine(1),
                WeightRule::Shifted {
                    lead: scale * ratio,
                    rest: Box::new(WeightRule::Geometric { scale, ratio }),
                },
                unilateral_space(params),
            )
        }
        "prop59" => Operator::bilateral(
            WeightRule::Step {
                positive: eta(params)?,
                nonpositive: 1.0,
            },
            2.0,
        ),
        "eta-bilateral" => Operator::bilateral(
            WeightRule::Step {
                positive: eta(params)?,
                nonpositive: params.nonpositive.unwrap_or(1.0),
            },
            params.p.unwrap_or(2.0),
        ),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}
