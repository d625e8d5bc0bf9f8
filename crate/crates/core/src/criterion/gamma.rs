use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{ComplexScalar, LogScalar};

/// A representation of the scalar set Gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSpec {
    /// A finite list of scalars.
    Finite { samples: Vec<ComplexScalar> },
    /// `{alpha0 * ratio^j : j >= 0}`.
    Geometric { alpha0: ComplexScalar, ratio: f64 },
    /// `{base^m * e^(i phase) : m >= min_exponent}`, unbounded for `base > 1`.
    UnboundedGen {
        base: f64,
        #[serde(default)]
        min_exponent: i64,
        #[serde(default)]
        phase: f64,
    },
    /// `{base^(-k^2) : k >= 0}`.
    QuadraticDecay { base: f64 },
    /// `{z : r_min <= |z| <= r_max}`.
    Annulus { r_min: f64, r_max: f64 },
    /// All of `C`.
    FullPlane,
}

/// Scalars on one ray whose moduli are indexed by an integer `j >= lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RayLattice {
    pub phase: f64,
    pub lo: i64,
    pub shape: LatticeShape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LatticeShape {
    /// `ln|a_j| = ln_a0 + j * ln_ratio`, `ln_ratio < 0`.
    Geometric { ln_a0: f64, ln_ratio: f64 },
    /// `ln|a_m| = m * ln_base`, `ln_base > 0`.
    Power { ln_base: f64 },
    /// `ln|a_k| = -k^2 * ln_base`.
    Quadratic { ln_base: f64 },
}

impl RayLattice {
    pub fn ln_modulus(&self, j: i64) -> f64 {
        match self.shape {
            LatticeShape::Geometric { ln_a0, ln_ratio } => ln_a0 + j as f64 * ln_ratio,
            LatticeShape::Power { ln_base } => j as f64 * ln_base,
            LatticeShape::Quadratic { ln_base } => -((j as f64) * (j as f64)) * ln_base,
        }
    }

    pub fn element(&self, j: i64) -> LogScalar {
        LogScalar::new(self.ln_modulus(j), self.phase)
    }

    /// Indices whose moduli bracket `exp(ln_t)`, clamped to the index range.
    pub fn bracket(&self, ln_t: f64) -> [i64; 2] {
        let real = match self.shape {
            LatticeShape::Geometric { ln_a0, ln_ratio } => (ln_t - ln_a0) / ln_ratio,
            LatticeShape::Power { ln_base } => ln_t / ln_base,
            LatticeShape::Quadratic { ln_base } => (-ln_t / ln_base).max(0.0).sqrt(),
        };
        let real = real.clamp(-9.0e15, 9.0e15);
        let lo = (real.floor() as i64).max(self.lo);
        let hi = (real.ceil() as i64).max(self.lo);
        [lo, hi]
    }

    /// Whether moduli decrease to zero as the index grows.
    pub fn decays(&self) -> bool {
        !matches!(self.shape, LatticeShape::Power { .. })
    }
}

impl GammaSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGamma(m.to_string()));
        match self {
            GammaSpec::Finite { samples } => {
                if samples.is_empty() {
                    return bad("finite sample is empty");
                }
                if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return bad("finite sample contains a non-finite scalar");
                }
            }
            GammaSpec::Geometric { alpha0, ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return bad("geometric ratio must lie in (0, 1)");
                }
                if alpha0.norm() == 0.0 || !alpha0.norm().is_finite() {
                    return bad("geometric alpha0 must be finite and nonzero");
                }
            }
            GammaSpec::UnboundedGen { base, phase, .. } => {
                if !(base.is_finite() && *base > 1.0) || !phase.is_finite() {
                    return bad("generator base must be finite and > 1");
                }
            }
            GammaSpec::QuadraticDecay { base } => {
                if !(base.is_finite() && *base > 1.0) {
                    return bad("quadratic-decay base must be finite and > 1");
                }
            }
            GammaSpec::Annulus { r_min, r_max } => {
                if !(r_min.is_finite() && r_max.is_finite() && *r_min > 0.0 && r_min <= r_max) {
                    return bad("annulus needs 0 < r_min <= r_max");
                }
            }
            GammaSpec::FullPlane => {}
        }
        Ok(())
    }

    pub(crate) fn ray_lattice(&self) -> Option<RayLattice> {
        match *self {
            GammaSpec::Geometric { alpha0, ratio } => Some(RayLattice {
                phase: alpha0.arg(),
                lo: 0,
                shape: LatticeShape::Geometric {
                    ln_a0: alpha0.norm().ln(),
                    ln_ratio: ratio.ln(),
                },
            }),
            GammaSpec::UnboundedGen {
                base,
                min_exponent,
                phase,
            } => Some(RayLattice {
                phase,
                lo: min_exponent,
                shape: LatticeShape::Power { ln_base: base.ln() },
            }),
            GammaSpec::QuadraticDecay { base } => Some(RayLattice {
                phase: 0.0,
                lo: 0,
                shape: LatticeShape::Quadratic { ln_base: base.ln() },
            }),
            _ => None,
        }
    }

    /// Some element of Gamma.
    pub fn representative(&self) -> LogScalar {
        match self {
            GammaSpec::Finite { samples } => LogScalar::from_complex(samples[0]),
            GammaSpec::Annulus { r_min, .. } => LogScalar::from_real(*r_min),
            GammaSpec::FullPlane => LogScalar::ONE,
            _ => {
                let lat = self.ray_lattice().expect("lattice kinds");
                lat.element(lat.lo)
            }
        }
    }

    /// True for the kinds with `sup |gamma| = inf`.
    pub fn is_unbounded(&self) -> bool {
        matches!(self, GammaSpec::UnboundedGen { .. } | GammaSpec::FullPlane)
    }

    /// Deterministic finite sample of at most `budget` elements of a bounded
    /// kind (lattice kinds: the first `budget` elements).
    pub fn sample(&self, budget: usize) -> Vec<ComplexScalar> {
        let budget = budget.max(1);
        match self {
            GammaSpec::Finite { samples } => samples.iter().copied().take(budget).collect(),
            GammaSpec::Annulus { r_min, r_max } => {
                let side = (budget as f64).sqrt().floor().max(1.0) as usize;
                let mut out = Vec::with_capacity(side * side);
                for i in 0..side {
                    let r = if side == 1 {
                        *r_min
                    } else {
                        r_min + (r_max - r_min) * i as f64 / (side - 1) as f64
                    };
                    for j in 0..side {
                        out.push(Complex64::from_polar(r, 2.0 * PI * j as f64 / side as f64));
                    }
                }
                out
            }
            GammaSpec::FullPlane => vec![Complex64::new(1.0, 0.0)],
            _ => {
                let lat = self.ray_lattice().expect("lattice kinds");
                (0..budget as i64)
                    .map(|j| lat.element(lat.lo + j))
                    .filter(|s| s.fits_f64())
                    .map(|s| s.to_complex())
                    .collect()
            }
        }
    }
}

/// `2^m` as a log scalar.
pub fn pow2_scalar(m: i64) -> LogScalar {
    LogScalar::new(m as f64 * LN_2, 0.0)
}
