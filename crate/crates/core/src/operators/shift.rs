use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phi::{phi_iterate, PhiSpec};
use super::weights::WeightRule;
use crate::error::{Error, Result};
use crate::spaces::{DirectSumVector, IndexDomain, LogScalar, ScaledVector, SpaceSpec, SparseVector, Vector, VectorRef};

/// Largest power accepted by the power operations.
pub const MAX_POWER: u64 = 1_000_000;

/// `T e_phi(n) = w_phi(n) e_n`, `T e_j = 0` off the range of `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoShift {
    pub phi: PhiSpec,
    pub weights: WeightRule,
    pub space: SpaceSpec,
}

/// `T e_k = w_k e_(k-1)` on `lp(Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralShift {
    pub weights: WeightRule,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operator {
    PseudoShift(PseudoShift),
    Bilateral(BilateralShift),
    /// `T (+) Id_C` on `X (+) C`.
    DirectSumId { inner: Box<Operator> },
}

impl PseudoShift {
    /// `T e_j = coefficient * e_target` after `m` steps, in log form.
    fn t_power_basis(&self, j: i64, m: u64) -> Option<(i64, f64)> {
        if m == 0 {
            return Some((j, 0.0));
        }
        match self.phi.offset() {
            Some(k) => {
                let drop = (m as i128) * (k as i128);
                let target = j as i128 - drop;
                if target < 1 {
                    return None;
                }
                let first = (target + k as i128) as i64;
                Some((target as i64, self.weights.log_product_affine(first, m, k)))
            }
            None => {
                let mut cur = j as u64;
                let mut acc = crate::numerics::CompensatedSum::new();
                for _ in 0..m {
                    acc.add(self.weights.log_weight(cur as i64));
                    cur = self.phi.invert(cur)?;
                }
                Some((cur as i64, acc.value()))
            }
        }
    }

    /// `S^m e_l = exp(-L) e_phi^m(l)`; returns `(phi^m(l), L)`.
    fn s_power_basis(&self, l: i64, m: u64) -> Result<(i64, f64)> {
        let target = phi_iterate(&self.phi, l as u64, m)?;
        if m == 0 {
            return Ok((l, 0.0));
        }
        let log = match self.phi.offset() {
            Some(k) => self.weights.log_product_affine(l + k as i64, m, k),
            None => {
                let mut cur = l as u64;
                let mut acc = crate::numerics::CompensatedSum::new();
                for _ in 0..m {
                    cur = self.phi.eval(cur).ok_or(Error::PhiRange { n: l as u64, m })?;
                    acc.add(self.weights.log_weight(cur as i64));
                }
                acc.value()
            }
        };
        Ok((target as i64, log))
    }

    /// Number of inverse steps of `phi` available from `j`.
    fn chain_length(&self, j: i64) -> u64 {
        match self.phi.offset() {
            Some(k) => (j as u64 - 1) / k,
            None => {
                let mut cur = j as u64;
                let mut len = 0;
                while let Some(prev) = self.phi.invert(cur) {
                    cur = prev;
                    len += 1;
                }
                len
            }
        }
    }

    /// For `phi(n) = n + 1`: the weight `v_k` with `T e_(k+1) = v_k e_k`.
    pub fn backward_weight(&self, k: i64) -> f64 {
        self.weights.weight(k + 1)
    }
}

impl Operator {
    pub fn pseudo_shift(phi: PhiSpec, weights: WeightRule, space: SpaceSpec) -> Result<Self> {
        let op = Operator::PseudoShift(PseudoShift { phi, weights, space });
        op.validate()?;
        Ok(op)
    }

    pub fn bilateral(weights: WeightRule, p: f64) -> Result<Self> {
        let op = Operator::Bilateral(BilateralShift { weights, p });
        op.validate()?;
        Ok(op)
    }

    pub fn with_identity(self) -> Result<Self> {
        let op = Operator::DirectSumId { inner: Box::new(self) };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Operator::PseudoShift(s) => {
                s.phi.validate()?;
                s.weights.validate()?;
                s.space.validate()?;
                if !matches!(s.space, SpaceSpec::C0N | SpaceSpec::LpN { .. }) {
                    return Err(Error::InvalidParameter(format!("pseudo-shifts act on c0(N) or lp(N), not {}", s.space)));
                }
                Ok(())
            }
            Operator::Bilateral(b) => {
                b.weights.validate()?;
                if !b.weights.is_bilateral() {
                    return Err(Error::InvalidParameter("bilateral shifts need a weight rule defined on Z".into()));
                }
                SpaceSpec::lp_z(b.p).validate()
            }
            Operator::DirectSumId { inner } => {
                if matches!(**inner, Operator::DirectSumId { .. }) {
                    return Err(Error::InvalidParameter("direct sums nest at most one level".into()));
                }
                inner.validate()
            }
        }
    }

    pub fn space(&self) -> SpaceSpec {
        match self {
            Operator::PseudoShift(s) => s.space.clone(),
            Operator::Bilateral(b) => SpaceSpec::lp_z(b.p),
            Operator::DirectSumId { inner } => SpaceSpec::direct_sum(inner.space()),
        }
    }

    pub fn domain(&self) -> IndexDomain {
        self.space().domain()
    }

    fn base(&self) -> &Operator {
        match self {
            Operator::DirectSumId { inner } => inner,
            other => other,
        }
    }

    /// `sup w`, so that `||T v|| <= W ||v||`.
    pub fn weight_bound(&self) -> f64 {
        match self {
            Operator::PseudoShift(s) => s.weights.upper_bound(),
            Operator::Bilateral(b) => b.weights.upper_bound(),
            Operator::DirectSumId { inner } => inner.weight_bound().max(1.0),
        }
    }

    /// `sup 1/w`, a bound for `||S||` (infinite when weights accumulate at 0).
    pub fn inverse_weight_bound(&self) -> f64 {
        match self {
            Operator::PseudoShift(s) => 1.0 / s.weights.lower_bound(),
            Operator::Bilateral(b) => 1.0 / b.weights.lower_bound(),
            Operator::DirectSumId { inner } => inner.inverse_weight_bound().max(1.0),
        }
    }

    fn check_input(&self, v: VectorRef<'_>) -> Result<()> {
        let space = self.space();
        space.check(v)?;
        if let Operator::PseudoShift(_) = self.base() {
            let x = match v {
                VectorRef::Seq(x) => x,
                VectorRef::Sum(s) => &s.x,
            };
            if x.min_index() == Some(0) {
                return Err(Error::conformance(space, "pseudo-shift coordinates start at index 1"));
            }
        }
        Ok(())
    }

    /// Log-form terms of `T^m x` for the sequence part.
    pub(crate) fn t_power_terms(&self, x: &SparseVector, m: u64) -> Result<Vec<(i64, LogScalar)>> {
        check_power(m)?;
        let mut out = Vec::with_capacity(x.len());
        for (j, z) in x.iter() {
            let hit = match self.base() {
                Operator::PseudoShift(s) => s.t_power_basis(j, m),
                Operator::Bilateral(b) => Some((j - m as i64, b.weights.log_product_affine(j - m as i64 + 1, m, 1))),
                Operator::DirectSumId { .. } => unreachable!(),
            };
            if let Some((target, log)) = hit {
                out.push((target, LogScalar::from_complex(z).scale_ln(log)));
            }
        }
        Ok(out)
    }

    /// Log-form terms of `S^m x` for the sequence part.
    pub(crate) fn s_power_terms(&self, x: &SparseVector, m: u64) -> Result<Vec<(i64, LogScalar)>> {
        check_power(m)?;
        let mut out = Vec::with_capacity(x.len());
        for (l, z) in x.iter() {
            let (target, log) = match self.base() {
                Operator::PseudoShift(s) => s.s_power_basis(l, m)?,
                Operator::Bilateral(b) => (l + m as i64, b.weights.log_product_affine(l + 1, m, 1)),
                Operator::DirectSumId { .. } => unreachable!(),
            };
            out.push((target, LogScalar::from_complex(z).scale_ln(-log)));
        }
        Ok(out)
    }

    fn power_scaled(&self, v: &ScaledVector, m: u64, forward: bool) -> Result<ScaledVector> {
        self.check_input(v.vector.as_ref())?;
        let x = v.vector.sequence();
        let shift = v.exp2 as f64 * std::f64::consts::LN_2;
        let terms = if forward { self.t_power_terms(x, m)? } else { self.s_power_terms(x, m)? };
        let lambda = match &v.vector {
            Vector::Sum(s) => Some(LogScalar::from_complex(s.lambda).scale_ln(shift)),
            Vector::Seq(_) => None,
        };
        ScaledVector::from_log_terms(self.domain(), terms.into_iter().map(|(i, c)| (i, c.scale_ln(shift))), lambda)
    }

    fn power(&self, v: VectorRef<'_>, m: u64, forward: bool) -> Result<Vector> {
        self.check_input(v)?;
        if m == 0 {
            return Ok(match v {
                VectorRef::Seq(x) => Vector::Seq(x.clone()),
                VectorRef::Sum(s) => Vector::Sum(s.clone()),
            });
        }
        let (x, lambda) = match v {
            VectorRef::Seq(x) => (x, None),
            VectorRef::Sum(s) => (&s.x, Some(s.lambda)),
        };
        let terms = if forward { self.t_power_terms(x, m)? } else { self.s_power_terms(x, m)? };
        let mut entries = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            if c.ln_abs > 709.0 {
                return Err(Error::NumericRange(format!("coefficient e^{:.1} at index {i} overflows", c.ln_abs)));
            }
            entries.push((i, c.to_complex()));
        }
        let out = SparseVector::from_entries(self.domain(), entries)?;
        Ok(match lambda {
            Some(l) => Vector::Sum(DirectSumVector::new(out, l)),
            None => Vector::Seq(out),
        })
    }

    pub fn apply_t<'a>(&self, v: impl Into<VectorRef<'a>>) -> Result<Vector> {
        self.power(v.into(), 1, true)
    }

    pub fn apply_s<'a>(&self, v: impl Into<VectorRef<'a>>) -> Result<Vector> {
        self.power(v.into(), 1, false)
    }

    /// `T^m v`, computed per basis vector from log-domain weight products.
    pub fn apply_t_power<'a>(&self, v: impl Into<VectorRef<'a>>, m: u64) -> Result<Vector> {
        self.power(v.into(), m, true)
    }

    pub fn apply_s_power<'a>(&self, v: impl Into<VectorRef<'a>>, m: u64) -> Result<Vector> {
        self.power(v.into(), m, false)
    }

    /// `T^m v` for a vector carrying a power-of-two scale.
    pub fn apply_t_power_scaled(&self, v: &ScaledVector, m: u64) -> Result<ScaledVector> {
        self.power_scaled(v, m, true)
    }

    pub fn apply_s_power_scaled(&self, v: &ScaledVector, m: u64) -> Result<ScaledVector> {
        self.power_scaled(v, m, false)
    }

    /// Smallest `m` with `T^m v = 0`, or `None` when the orbit never dies.
    pub fn death_index<'a>(&self, v: impl Into<VectorRef<'a>>) -> Option<u64> {
        let v = v.into();
        let x = match v {
            VectorRef::Seq(x) => x,
            VectorRef::Sum(s) => {
                if s.lambda != Complex64::new(0.0, 0.0) {
                    return None;
                }
                &s.x
            }
        };
        match self.base() {
            Operator::PseudoShift(s) => Some(x.iter().map(|(j, _)| s.chain_length(j) + 1).max().unwrap_or(0)),
            _ => {
                if x.is_empty() {
                    Some(0)
                } else {
                    None
                }
            }
        }
    }

    /// The pseudo-shift underneath, if any.
    pub fn as_pseudo_shift(&self) -> Option<&PseudoShift> {
        match self.base() {
            Operator::PseudoShift(s) => Some(s),
            _ => None,
        }
    }
}

fn check_power(m: u64) -> Result<()> {
    if m > MAX_POWER {
        return Err(Error::out_of_range("power m", m, format!("[0, {MAX_POWER}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn backward(v: f64) -> Operator {
        Operator::pseudo_shift(
            PhiSpec::affine(1),
            WeightRule::Shifted {
                lead: 1.0,
                rest: Box::new(WeightRule::constant(v)),
            },
            SpaceSpec::lp_n(2.0),
        )
        .unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, domain: IndexDomain, lo: i64, hi: i64) -> SparseVector {
        let n = rng.gen_range(1..6);
        SparseVector::from_entries(
            domain,
            (0..n).map(|_| (rng.gen_range(lo..=hi), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
        )
        .unwrap()
    }

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        let (a, b) = (a.sequence(), b.sequence());
        let scale = a.max_modulus().max(b.max_modulus()).max(1e-300);
        a.iter().chain(b.iter()).all(|(i, _)| (a.get(i) - b.get(i)).norm() <= tol * scale)
    }

    #[test]
    fn basis_vector_at_phi_n() {
        let op = Operator::pseudo_shift(
            PhiSpec::Table {
                values: vec![3, 5, 6],
                tail_step: 2,
            },
            WeightRule::Geometric { scale: 1.5, ratio: 0.9 },
            SpaceSpec::C0N,
        )
        .unwrap();
        let w = WeightRule::Geometric { scale: 1.5, ratio: 0.9 };
        for (n, phin) in [(1, 3), (2, 5), (3, 6), (4, 8), (5, 10)] {
            let v = SparseVector::basis(IndexDomain::Natural, phin).unwrap();
            let out = op.apply_t(&v).unwrap();
            assert_eq!(out.sequence().len(), 1);
            assert!((out.sequence().get(n) - c(w.weight(phin))).norm() < 1e-14);
        }
        // 1 and 4 are not values of phi
        for j in [1, 4, 7] {
            let v = SparseVector::basis(IndexDomain::Natural, j).unwrap();
            assert!(op.apply_t(&v).unwrap().is_zero());
        }
    }

    #[test]
    fn backward_shift_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vs: Vec<f64> = (0..40).map(|_| rng.gen_range(0.2..3.0)).collect();
        let op = Operator::pseudo_shift(
            PhiSpec::affine(1),
            WeightRule::Table {
                values: std::iter::once(1.0).chain(vs.iter().copied()).collect(),
                tail: Box::new(WeightRule::constant(1.0)),
            },
            SpaceSpec::lp_n(2.0),
        )
        .unwrap();
        for _ in 0..1000 {
            let x = random_vector(&mut rng, IndexDomain::Natural, 1, 40);
            // B_v e_1 = 0, B_v e_(m+1) = v_m e_m
            let direct = SparseVector::from_entries(
                IndexDomain::Natural,
                x.iter().filter(|&(j, _)| j >= 2).map(|(j, z)| (j - 1, z * vs[(j - 2) as usize])),
            )
            .unwrap();
            assert!(close(&op.apply_t(&x).unwrap(), &Vector::Seq(direct), 1e-14));
        }
    }

    #[test]
    fn powers_agree_with_repetition() {
        let ops = [
            backward(2.0),
            Operator::pseudo_shift(PhiSpec::affine(3), WeightRule::Cor22c { p: 2.0 }, SpaceSpec::lp_n(2.0)).unwrap(),
            Operator::pseudo_shift(
                PhiSpec::Table {
                    values: vec![2, 4, 7, 8],
                    tail_step: 1,
                },
                WeightRule::Geometric { scale: 2.0, ratio: 0.95 },
                SpaceSpec::C0N,
            )
            .unwrap(),
            Operator::bilateral(
                WeightRule::Step {
                    positive: 2.0,
                    nonpositive: 0.75,
                },
                2.0,
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for op in &ops {
            let domain = op.domain();
            let lo = if domain == IndexDomain::Natural { 1 } else { -15 };
            for _ in 0..20 {
                let x = random_vector(&mut rng, domain, lo, 60);
                let mut t = Vector::Seq(x.clone());
                let mut s = Vector::Seq(x.clone());
                for m in 0..=20u64 {
                    assert!(close(&op.apply_t_power(&x, m).unwrap(), &t, 1e-12), "{op:?} T^{m}");
                    assert!(close(&op.apply_s_power(&x, m).unwrap(), &s, 1e-12), "{op:?} S^{m}");
                    t = op.apply_t(&t).unwrap();
                    s = op.apply_s(&s).unwrap();
                }
            }
        }
    }

    #[test]
    fn right_inverse_and_semigroup() {
        let op = Operator::pseudo_shift(PhiSpec::affine(2), WeightRule::Cor22c { p: 1.5 }, SpaceSpec::lp_n(1.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_vector(&mut rng, IndexDomain::Natural, 1, 30);
            let ts = op.apply_t(&op.apply_s(&x).unwrap()).unwrap();
            assert!(close(&ts, &Vector::Seq(x.clone()), 1e-12));
            let a = rng.gen_range(0..50);
            let b = rng.gen_range(0..50);
            let lhs = op.apply_t_power(&x, a + b).unwrap();
            let rhs = op.apply_t_power(&op.apply_t_power(&x, b).unwrap(), a).unwrap();
            assert!(close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn bilateral_s_of_e0() {
        let op = Operator::bilateral(
            WeightRule::Step {
                positive: 2.0,
                nonpositive: 1.0,
            },
            2.0,
        )
        .unwrap();
        let e0 = SparseVector::basis(IndexDomain::Integer, 0).unwrap();
        let s = op.apply_s(&e0).unwrap();
        assert!((s.sequence().get(1) - c(0.5)).norm() < 1e-15);
        let s10 = op.apply_s_power(&e0, 10).unwrap();
        assert!((s10.sequence().get(10) - c(2f64.powi(-10))).norm() < 1e-15);
        // weights on the non-positive side are 1
        let t = op.apply_t_power(&e0, 25).unwrap();
        assert!((t.sequence().get(-25) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn nilpotent_on_finite_support() {
        let op = backward(2.0);
        let y = SparseVector::from_triples(IndexDomain::Natural, &[(1, 1.0, 0.0), (5, 0.5, 0.5)]).unwrap();
        assert_eq!(op.death_index(&y), Some(5));
        assert!(!op.apply_t_power(&y, 4).unwrap().is_zero());
        assert!(op.apply_t_power(&y, 5).unwrap().is_zero());
        assert!(op.apply_t_power(&y, 600).unwrap().is_zero());
    }

    #[test]
    fn direct_sum_keeps_lambda() {
        let op = backward(2.0).with_identity().unwrap();
        let v = DirectSumVector::new(SparseVector::basis(IndexDomain::Natural, 3).unwrap(), Complex64::new(0.5, -1.0));
        let out = op.apply_t_power(&v, 2).unwrap();
        match out {
            Vector::Sum(s) => {
                assert_eq!(s.lambda, Complex64::new(0.5, -1.0));
                assert!((s.x.get(1) - c(4.0)).norm() < 1e-14);
            }
            _ => panic!("expected a direct-sum vector"),
        }
        assert!(op.apply_t(&SparseVector::basis(IndexDomain::Natural, 3).unwrap()).is_err());
    }

    #[test]
    fn index_zero_is_rejected() {
        let op = backward(2.0);
        let v = SparseVector::basis(IndexDomain::Natural, 0).unwrap();
        assert!(matches!(op.apply_t(&v), Err(Error::Conformance { .. })));
    }

    #[test]
    fn overflow_is_reported_and_scaled_variant_survives() {
        let grow = Operator::bilateral(WeightRule::constant(0.5), 2.0).unwrap();
        let e0 = SparseVector::basis(IndexDomain::Integer, 0).unwrap();
        assert!(matches!(grow.apply_s_power(&e0, 5000), Err(Error::NumericRange(_))));
        let scaled = grow.apply_s_power_scaled(&ScaledVector::new(e0), 5000).unwrap();
        assert_eq!(scaled.exp2, 5000);
    }

    #[test]
    fn norm_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = Operator::pseudo_shift(PhiSpec::affine(1), WeightRule::Cor22c { p: 2.0 }, SpaceSpec::lp_n(2.0)).unwrap();
        for _ in 0..200 {
            let x = random_vector(&mut rng, IndexDomain::Natural, 1, 50);
            let tx = op.apply_t(&x).unwrap();
            let space = op.space();
            assert!(norm(&tx, &space).unwrap() <= op.weight_bound() * norm(&x, &space).unwrap() * (1.0 + 1e-12));
        }
    }
}
