use std::fmt;

use serde::{Deserialize, Serialize};

use super::vector::{IndexDomain, SparseVector, VectorRef};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// The Banach sequence space a vector is measured in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    /// `c0(N)` with the sup norm.
    C0N,
    /// `lp(N)`.
    LpN { p: f64 },
    /// `lp(Z)`.
    LpZ { p: f64 },
    /// `X (+) C` with `||(x, l)|| = ||x|| + |l|`.
    DirectSumWithC { inner: Box<SpaceSpec> },
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::C0N => write!(f, "c0(N)"),
            SpaceSpec::LpN { p } => write!(f, "l{p}(N)"),
            SpaceSpec::LpZ { p } => write!(f, "l{p}(Z)"),
            SpaceSpec::DirectSumWithC { inner } => write!(f, "{inner} (+) C"),
        }
    }
}

impl SpaceSpec {
    pub fn lp_n(p: f64) -> Self {
        SpaceSpec::LpN { p }
    }

    pub fn lp_z(p: f64) -> Self {
        SpaceSpec::LpZ { p }
    }

    pub fn direct_sum(inner: SpaceSpec) -> Self {
        SpaceSpec::DirectSumWithC { inner: Box::new(inner) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::C0N => Ok(()),
            SpaceSpec::LpN { p } | SpaceSpec::LpZ { p } => {
                if p.is_finite() && *p >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::out_of_range("p", p, "[1, inf)"))
                }
            }
            SpaceSpec::DirectSumWithC { inner } => {
                if matches!(**inner, SpaceSpec::DirectSumWithC { .. }) {
                    return Err(Error::InvalidParameter("direct sums nest at most one level".into()));
                }
                inner.validate()
            }
        }
    }

    /// The sequence space underneath a direct sum, or `self`.
    pub fn base(&self) -> &SpaceSpec {
        match self {
            SpaceSpec::DirectSumWithC { inner } => inner,
            other => other,
        }
    }

    pub fn is_direct_sum(&self) -> bool {
        matches!(self, SpaceSpec::DirectSumWithC { .. })
    }

    pub fn domain(&self) -> IndexDomain {
        match self.base() {
            SpaceSpec::LpZ { .. } => IndexDomain::Integer,
            _ => IndexDomain::Natural,
        }
    }

    /// `Some(p)` for `lp` spaces, `None` for the sup norm.
    pub fn exponent(&self) -> Option<f64> {
        match self.base() {
            SpaceSpec::LpN { p } | SpaceSpec::LpZ { p } => Some(*p),
            _ => None,
        }
    }

    /// True when the norm is Euclidean (so least squares is exact).
    pub fn is_hilbert(&self) -> bool {
        !self.is_direct_sum() && self.exponent() == Some(2.0)
    }

    pub fn check_sequence(&self, v: &SparseVector) -> Result<()> {
        self.validate()?;
        let base = self.base();
        if v.domain() != base.domain() {
            return Err(Error::conformance(
                base,
                format!("expected a {:?}-indexed vector, got {:?}", base.domain(), v.domain()),
            ));
        }
        Ok(())
    }

    pub fn check<'a>(&self, v: impl Into<VectorRef<'a>>) -> Result<()> {
        match (self, v.into()) {
            (SpaceSpec::DirectSumWithC { .. }, VectorRef::Sum(s)) => self.check_sequence(&s.x),
            (SpaceSpec::DirectSumWithC { .. }, VectorRef::Seq(_)) => {
                Err(Error::conformance(self, "expected a pair (x, lambda)"))
            }
            (_, VectorRef::Sum(_)) => Err(Error::conformance(self, "a pair (x, lambda) is not a sequence")),
            (_, VectorRef::Seq(s)) => self.check_sequence(s),
        }
    }
}

/// Norm of moduli under an `lp` exponent (`None` = sup norm), scaled by the
/// largest modulus so huge or tiny entries do not overflow.
pub(crate) fn modulus_norm<I: IntoIterator<Item = f64>>(moduli: I, exponent: Option<f64>) -> f64 {
    match exponent {
        None => moduli.into_iter().fold(0.0, f64::max),
        Some(p) => {
            let mods: Vec<f64> = moduli.into_iter().filter(|m| *m > 0.0).collect();
            let top = mods.iter().copied().fold(0.0, f64::max);
            if top == 0.0 {
                return 0.0;
            }
            if !top.is_finite() {
                return f64::INFINITY;
            }
            let mut acc = CompensatedSum::new();
            if p == 2.0 {
                for m in &mods {
                    let r = m / top;
                    acc.add(r * r);
                }
                top * acc.value().sqrt()
            } else if p == 1.0 {
                for m in &mods {
                    acc.add(*m);
                }
                acc.value()
            } else {
                for m in &mods {
                    acc.add((m / top).powf(p));
                }
                top * acc.value().powf(1.0 / p)
            }
        }
    }
}

/// The norm of `v` in `space`.
pub fn norm<'a>(v: impl Into<VectorRef<'a>>, space: &SpaceSpec) -> Result<f64> {
    let v = v.into();
    space.check(v)?;
    Ok(match v {
        VectorRef::Seq(s) => sequence_norm(s, space.exponent()),
        VectorRef::Sum(s) => sequence_norm(&s.x, space.exponent()) + s.lambda.norm(),
    })
}

pub(crate) fn sequence_norm(v: &SparseVector, exponent: Option<f64>) -> f64 {
    modulus_norm(v.iter().map(|(_, z)| z.norm()), exponent)
}
