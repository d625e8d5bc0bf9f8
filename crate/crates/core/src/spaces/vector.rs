use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scalar::{is_finite, ComplexScalar, LogScalar};
use crate::error::{Error, Result};

/// Entries whose modulus falls below this after an update are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexDomain {
    /// Indices `0, 1, 2, ...`.
    Natural,
    /// Indices in `Z`.
    Integer,
}

/// A finitely supported complex sequence. Only nonzero entries are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SparseDoc", try_from = "SparseDoc")]
pub struct SparseVector {
    domain: IndexDomain,
    entries: BTreeMap<i64, ComplexScalar>,
}

/// `{"domain": ..., "entries": [[index, re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct SparseDoc {
    domain: IndexDomain,
    entries: Vec<(i64, f64, f64)>,
}

impl From<SparseVector> for SparseDoc {
    fn from(v: SparseVector) -> Self {
        SparseDoc {
            domain: v.domain,
            entries: v.to_triples(),
        }
    }
}

impl TryFrom<SparseDoc> for SparseVector {
    type Error = Error;
    fn try_from(d: SparseDoc) -> Result<Self> {
        SparseVector::from_triples(d.domain, &d.entries)
    }
}

impl SparseVector {
    pub fn zero(domain: IndexDomain) -> Self {
        Self {
            domain,
            entries: BTreeMap::new(),
        }
    }

    pub fn basis(domain: IndexDomain, index: i64) -> Result<Self> {
        Self::from_entries(domain, [(index, Complex64::new(1.0, 0.0))])
    }

    pub fn from_entries<I>(domain: IndexDomain, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, ComplexScalar)>,
    {
        let mut v = Self::zero(domain);
        for (i, z) in entries {
            v.check_index(i)?;
            if !is_finite(z) {
                return Err(Error::InvalidParameter(format!("non-finite entry at index {i}")));
            }
            let slot = v.entries.entry(i).or_insert(Complex64::new(0.0, 0.0));
            *slot += z;
        }
        v.entries.retain(|_, z| z.norm() >= PRUNE_THRESHOLD);
        Ok(v)
    }

    /// Parses the literal `[[index, re, im], ...]` triples.
    pub fn from_triples(domain: IndexDomain, triples: &[(i64, f64, f64)]) -> Result<Self> {
        Self::from_entries(domain, triples.iter().map(|&(i, re, im)| (i, Complex64::new(re, im))))
    }

    pub fn to_triples(&self) -> Vec<(i64, f64, f64)> {
        self.entries.iter().map(|(&i, z)| (i, z.re, z.im)).collect()
    }

    fn check_index(&self, i: i64) -> Result<()> {
        if self.domain == IndexDomain::Natural && i < 0 {
            return Err(Error::conformance("N0-indexed vector", format!("negative index {i}")));
        }
        Ok(())
    }

    pub fn domain(&self) -> IndexDomain {
        self.domain
    }

    pub fn get(&self, i: i64) -> ComplexScalar {
        self.entries.get(&i).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (i64, ComplexScalar)> + '_ {
        self.entries.iter().map(|(&i, &z)| (i, z))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_index(&self) -> Option<i64> {
        self.entries.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<i64> {
        self.entries.keys().next_back().copied()
    }

    pub fn max_modulus(&self) -> f64 {
        self.entries.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: ComplexScalar) -> SparseVector {
        let entries = self
            .entries
            .iter()
            .map(|(&i, &z)| (i, a * z))
            .filter(|(_, z)| z.norm() >= PRUNE_THRESHOLD)
            .collect();
        SparseVector {
            domain: self.domain,
            entries,
        }
    }

    /// Builds a vector from entries known to be valid and sorted-unique.
    pub(crate) fn from_raw(domain: IndexDomain, entries: BTreeMap<i64, ComplexScalar>) -> Self {
        let mut v = SparseVector { domain, entries };
        v.entries.retain(|_, z| z.norm() >= PRUNE_THRESHOLD);
        v
    }

    /// Keeps only the coordinates for which `keep` returns true.
    pub fn restrict<F: FnMut(i64) -> bool>(&self, mut keep: F) -> SparseVector {
        SparseVector {
            domain: self.domain,
            entries: self.entries.iter().filter(|(&i, _)| keep(i)).map(|(&i, &z)| (i, z)).collect(),
        }
    }
}

/// `a * x + y` with cancellation pruning.
pub fn axpy(a: ComplexScalar, x: &SparseVector, y: &SparseVector) -> Result<SparseVector> {
    if x.domain != y.domain {
        return Err(Error::conformance(
            format!("{:?} domain", y.domain),
            format!("cannot combine with a {:?}-indexed vector", x.domain),
        ));
    }
    let mut out = y.entries.clone();
    if a != Complex64::new(0.0, 0.0) {
        for (&i, &z) in &x.entries {
            let slot = out.entry(i).or_insert(Complex64::new(0.0, 0.0));
            *slot += a * z;
        }
    }
    Ok(SparseVector::from_raw(y.domain, out))
}

/// An element `(x, lambda)` of `X (+) C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSumVector {
    pub x: SparseVector,
    pub lambda: ComplexScalar,
}

impl DirectSumVector {
    pub fn new(x: SparseVector, lambda: ComplexScalar) -> Self {
        Self { x, lambda }
    }

    pub fn scale(&self, a: ComplexScalar) -> Self {
        Self {
            x: self.x.scale(a),
            lambda: a * self.lambda,
        }
    }
}

/// Either shape of vector an operator can act on.
#[derive(Debug, Clone, PartialEq)]
pub enum Vector {
    Seq(SparseVector),
    Sum(DirectSumVector),
}

impl Vector {
    pub fn as_ref(&self) -> VectorRef<'_> {
        match self {
            Vector::Seq(v) => VectorRef::Seq(v),
            Vector::Sum(v) => VectorRef::Sum(v),
        }
    }

    pub fn sequence(&self) -> &SparseVector {
        match self {
            Vector::Seq(v) => v,
            Vector::Sum(v) => &v.x,
        }
    }

    pub fn scale(&self, a: ComplexScalar) -> Vector {
        match self {
            Vector::Seq(v) => Vector::Seq(v.scale(a)),
            Vector::Sum(v) => Vector::Sum(v.scale(a)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Vector::Seq(v) => v.is_empty(),
            Vector::Sum(v) => v.x.is_empty() && v.lambda == Complex64::new(0.0, 0.0),
        }
    }

    pub fn max_modulus(&self) -> f64 {
        match self {
            Vector::Seq(v) => v.max_modulus(),
            Vector::Sum(v) => v.x.max_modulus().max(v.lambda.norm()),
        }
    }
}

impl From<SparseVector> for Vector {
    fn from(v: SparseVector) -> Self {
        Vector::Seq(v)
    }
}

impl From<DirectSumVector> for Vector {
    fn from(v: DirectSumVector) -> Self {
        Vector::Sum(v)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum VectorRef<'a> {
    Seq(&'a SparseVector),
    Sum(&'a DirectSumVector),
}

impl<'a> From<&'a SparseVector> for VectorRef<'a> {
    fn from(v: &'a SparseVector) -> Self {
        VectorRef::Seq(v)
    }
}

impl<'a> From<&'a DirectSumVector> for VectorRef<'a> {
    fn from(v: &'a DirectSumVector) -> Self {
        VectorRef::Sum(v)
    }
}

impl<'a> From<&'a Vector> for VectorRef<'a> {
    fn from(v: &'a Vector) -> Self {
        v.as_ref()
    }
}

/// The vector `2^exp2 * vector`.
///
/// Orbits of shifts with large weights (or the iterates `T^q x` of a vector
/// built from huge scalars) leave the double range after a few hundred
/// steps. Rescaling by exact powers of two keeps every entry representable
/// without perturbing a single bit of the mantissas.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVector {
    pub exp2: i64,
    pub vector: Vector,
}

const RENORM_HI: f64 = 1.157_920_892_373_162e77; // 2^256
const RENORM_LO: f64 = 8.636_168_555_094_445e-78; // 2^-256

impl ScaledVector {
    pub fn new(vector: impl Into<Vector>) -> Self {
        let mut s = Self {
            exp2: 0,
            vector: vector.into(),
        };
        s.renormalize();
        s
    }

    /// Rescales by a power of two when the largest entry leaves `[2^-256, 2^256]`.
    pub fn renormalize(&mut self) {
        let m = self.vector.max_modulus();
        if m == 0.0 || (RENORM_LO..=RENORM_HI).contains(&m) {
            return;
        }
        let k = m.log2().floor() as i64;
        let factor = crate::numerics::pow2((-k).clamp(-1022, 1022));
        let applied = (-k).clamp(-1022, 1022);
        self.vector = self.vector.scale(Complex64::new(factor, 0.0));
        self.exp2 -= applied;
        if !(RENORM_LO..=RENORM_HI).contains(&self.vector.max_modulus()) {
            self.renormalize();
        }
    }

    /// Multiplies by a scalar that may lie outside the double range.
    pub fn scale_log(&self, a: LogScalar) -> ScaledVector {
        if a.is_zero() {
            return ScaledVector {
                exp2: 0,
                vector: self.vector.scale(Complex64::new(0.0, 0.0)),
            };
        }
        let (k, c) = a.split_pow2();
        let mut out = ScaledVector {
            exp2: self.exp2 + k,
            vector: self.vector.scale(c),
        };
        out.renormalize();
        out
    }

    /// Sums coefficients given in log form into one scaled vector. Entries
    /// more than about `2^-1074` below the largest one vanish.
    pub fn from_log_terms<I>(domain: IndexDomain, terms: I, lambda: Option<LogScalar>) -> Result<ScaledVector>
    where
        I: IntoIterator<Item = (i64, LogScalar)>,
    {
        let terms: Vec<(i64, LogScalar)> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let top = terms
            .iter()
            .map(|(_, c)| c.ln_abs)
            .chain(lambda.filter(|l| !l.is_zero()).map(|l| l.ln_abs))
            .fold(f64::NEG_INFINITY, f64::max);
        if top.is_nan() || top == f64::INFINITY {
            return Err(Error::NumericRange("non-finite log coefficient".into()));
        }
        let k = if top.is_finite() { (top / LN_2).floor() as i64 } else { 0 };
        let shift = k as f64 * LN_2;
        let at = |c: LogScalar| Complex64::from_polar((c.ln_abs - shift).exp(), c.arg);
        let x = SparseVector::from_entries(domain, terms.into_iter().map(|(i, c)| (i, at(c))))?;
        let vector = match lambda {
            Some(l) => Vector::Sum(DirectSumVector::new(x, if l.is_zero() { Complex64::new(0.0, 0.0) } else { at(l) })),
            None => Vector::Seq(x),
        };
        let mut out = ScaledVector { exp2: k, vector };
        out.renormalize();
        Ok(out)
    }

    /// Log-form coefficients `(index, 2^exp2 * v_index)` of the sequence part.
    pub fn log_terms(&self) -> Vec<(i64, LogScalar)> {
        let shift = self.exp2 as f64 * LN_2;
        self.vector
            .sequence()
            .iter()
            .map(|(i, z)| (i, LogScalar::from_complex(z).scale_ln(shift)))
            .collect()
    }

    /// `ln ||.||` computed without leaving the double range.
    pub fn ln_norm(&self, space: &crate::spaces::SpaceSpec) -> Result<f64> {
        let n = crate::spaces::norm(&self.vector, space)?;
        Ok(if n == 0.0 {
            f64::NEG_INFINITY
        } else {
            n.ln() + self.exp2 as f64 * LN_2
        })
    }

    /// Materializes the vector, or `None` when the scale leaves the double range.
    pub fn materialize(&self) -> Option<Vector> {
        if self.vector.is_zero() {
            return Some(self.vector.clone());
        }
        let top = self.exp2 as f64 + self.vector.max_modulus().log2();
        if !(-1000.0..1000.0).contains(&top) {
            return None;
        }
        let mut e = self.exp2;
        let mut v = self.vector.clone();
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            v = v.scale(Complex64::new(crate::numerics::pow2(step), 0.0));
            e -= step;
        }
        Some(v)
    }
}
