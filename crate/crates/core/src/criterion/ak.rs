use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `K` accepted by [`gen_ak_sequence`].
pub const AK_MAX: usize = 500;

/// `a_0 > a_1 > ... > a_K` in `(0, 1)`, stored as natural logarithms.
///
/// Each value also comes split as `a_k = 2^-pow2_exponents[k] * exp(-log_corrections[k])`
/// with an integer exponent and a correction below 1.3, which keeps ratios of
/// neighbouring terms accurate to the last bit even where `ln a_k` is large.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AkSequence {
    pub log_values: Vec<f64>,
    pub k: usize,
    pub pow2_exponents: Vec<u64>,
    pub log_corrections: Vec<f64>,
}

impl AkSequence {
    pub fn value(&self, k: usize) -> f64 {
        self.log_values[k].exp()
    }

    /// `ln s_k` with `s_k = 1 - a_0 - ... - a_k`.
    pub fn log_remainder(&self, k: usize) -> f64 {
        self.log_values[k] - k as f64 * LN_2
    }

    /// `(s_k - a_(k+1)) / a_(k+1)` for `k < K`.
    pub fn remainder_ratio(&self, k: usize) -> f64 {
        // s_k = 2^-(E_k + k) exp(-C_k) and E_(k+1) = E_k + k
        debug_assert_eq!(self.pow2_exponents[k] + k as u64, self.pow2_exponents[k + 1]);
        (self.log_corrections[k + 1] - self.log_corrections[k]).exp_m1()
    }

    /// `2^k a_k^-1 sum_{n=k+1}^{K} a_n`, at most 1 exactly when the tail bound holds.
    pub fn scaled_tail_ratio(&self, k: usize) -> f64 {
        let (ek, ck) = (self.pow2_exponents[k], self.log_corrections[k]);
        (k + 1..=self.k)
            .map(|n| {
                let d = (self.pow2_exponents[n] - ek) as f64 - k as f64;
                (-d * LN_2 + ck - self.log_corrections[n]).exp()
            })
            .sum()
    }
}

/// `E_k = 1 + k(k-1)/2`.
fn pow2_exponent(k: usize) -> u64 {
    let k = k as u64;
    1 + k * k.saturating_sub(1) / 2
}

/// `C_k = sum_{j=1}^{k} ln(1 + 2^-j)`; terms past `j = 64` vanish in double precision.
fn log_correction(k: usize) -> f64 {
    (1..=k.min(64)).map(|j| (-(j as f64) * LN_2).exp().ln_1p()).sum()
}

/// `ln a_k` for any `k`, with `a_0 = 1/2` and `a_(k+1) = s_k / (1 + 2^-(k+1))`.
///
/// Since `s_(k+1) = a_(k+1) 2^-(k+1)`, the recurrence telescopes to
/// `ln a_k = -E_k ln 2 - C_k`.
pub(crate) fn ln_a(k: usize) -> f64 {
    -(pow2_exponent(k) as f64) * LN_2 - log_correction(k)
}

pub fn gen_ak_sequence(k: usize) -> Result<AkSequence> {
    if !(1..=AK_MAX).contains(&k) {
        return Err(Error::out_of_range("K", k, format!("[1, {AK_MAX}]")));
    }
    let pow2_exponents: Vec<u64> = (0..=k).map(pow2_exponent).collect();
    let mut log_corrections = Vec::with_capacity(k + 1);
    let mut c = 0.0;
    log_corrections.push(c);
    for j in 1..=k {
        c += (-(j as f64) * LN_2).exp().ln_1p();
        log_corrections.push(c);
    }
    let log_values = pow2_exponents
        .iter()
        .zip(&log_corrections)
        .map(|(&e, &c)| -(e as f64) * LN_2 - c)
        .collect();
    Ok(AkSequence {
        log_values,
        k,
        pow2_exponents,
        log_corrections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_sum_exp;

    /// Exact rationals, enough for the first few terms.
    #[derive(Clone, Copy, Debug, PartialEq)]
    struct Q(u128, u128);

    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    impl Q {
        fn norm(self) -> Q {
            let g = gcd(self.0, self.1);
            Q(self.0 / g, self.1 / g)
        }
        fn sub(self, o: Q) -> Q {
            Q(self.0 * o.1 - o.0 * self.1, self.1 * o.1).norm()
        }
        fn div(self, o: Q) -> Q {
            Q(self.0 * o.1, self.1 * o.0).norm()
        }
        fn f(self) -> f64 {
            self.0 as f64 / self.1 as f64
        }
    }

    #[test]
    fn first_terms_match_exact_rationals() {
        let seq = gen_ak_sequence(6).unwrap();
        assert_eq!(seq.value(0), 0.5);
        let mut a = Q(1, 2);
        let mut s = Q(1, 2);
        for k in 0..6usize {
            let denom = Q((1 << (k + 1)) + 1, 1 << (k + 1));
            let next = s.div(denom);
            // (s_k - a_(k+1)) / a_(k+1) = 2^-(k+1)
            assert_eq!(s.sub(next).div(next), Q(1, 1 << (k + 1)));
            assert!(next.f() < a.f());
            s = s.sub(next);
            a = next;
            let got = seq.value(k + 1);
            assert!((got - a.f()).abs() <= 1e-14 * a.f(), "k={} {got} {}", k + 1, a.f());
        }
        assert!((seq.value(1) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn remainder_identity_holds() {
        let seq = gen_ak_sequence(AK_MAX).unwrap();
        for k in 0..AK_MAX {
            let want = (-((k + 1) as f64) * LN_2).exp();
            assert!((seq.remainder_ratio(k) - want).abs() <= 1e-12, "k={k}");
            assert!(seq.log_values[k + 1] < seq.log_values[k]);
            // the split form and the plain logarithm agree
            assert!((seq.log_remainder(k) - seq.log_values[k + 1] - want.ln_1p()).abs() <= 1e-10 * (1.0 + seq.log_values[k].abs()));
        }
    }

    #[test]
    fn finite_tail_ratio_is_bounded() {
        let seq = gen_ak_sequence(200).unwrap();
        for k in 0..200 {
            let tail = log_sum_exp(&seq.log_values[k + 1..]);
            assert!(tail - seq.log_values[k] <= -(k as f64) * LN_2 + 1e-9, "k={k}");
            assert!(seq.scaled_tail_ratio(k) <= 1.0, "k={k}");
        }
    }

    #[test]
    fn closed_form_matches_recurrence() {
        // step the recurrence directly in the log domain
        let mut ln_a_k = -LN_2;
        for k in 0..2000usize {
            assert!((ln_a(k) - ln_a_k).abs() <= 1e-12 * (1.0 + ln_a_k.abs()), "k={k}");
            let ln_s = ln_a_k - k as f64 * LN_2;
            ln_a_k = ln_s - (-((k + 1) as f64) * LN_2).exp().ln_1p();
        }
        let seq = gen_ak_sequence(AK_MAX).unwrap();
        assert_eq!(seq.log_values[317], ln_a(317));
        assert!(gen_ak_sequence(0).is_err());
        assert!(gen_ak_sequence(501).is_err());
    }
}
