use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// A rule producing positive weights `w_n`.
///
/// Unilateral rules are read for `n >= 1`; `Step` and `Constant` are also
/// defined on all of `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "params", rename_all = "snake_case")]
pub enum WeightRule {
    Constant { value: f64 },
    /// `w_k = ((k+1)/k)^(1/p)`.
    Cor22c { p: f64 },
    /// `w_n = scale * ratio^n`.
    Geometric { scale: f64, ratio: f64 },
    /// `w_1 = lead`, `w_n = rest(n-1)` for `n >= 2`.
    Shifted { lead: f64, rest: Box<WeightRule> },
    /// `w_n = values[n-1]` on the table, `tail(n)` beyond it.
    Table { values: Vec<f64>, tail: Box<WeightRule> },
    /// `positive` for `k > 0`, `nonpositive` otherwise.
    Step { positive: f64, nonpositive: f64 },
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite and positive, got {x}")))
    }
}

impl WeightRule {
    pub fn constant(value: f64) -> Self {
        WeightRule::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightRule::Constant { value } => positive("weight", *value),
            WeightRule::Cor22c { p } => {
                if p.is_finite() && *p >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::out_of_range("p", p, "[1, inf)"))
                }
            }
            WeightRule::Geometric { scale, ratio } => {
                positive("scale", *scale)?;
                positive("ratio", *ratio)?;
                if *ratio > 1.0 {
                    return Err(Error::InvalidParameter("geometric weights with ratio > 1 are unbounded".into()));
                }
                Ok(())
            }
            WeightRule::Shifted { lead, rest } => {
                positive("lead weight", *lead)?;
                rest.validate()
            }
            WeightRule::Table { values, tail } => {
                for &v in values {
                    positive("table weight", v)?;
                }
                tail.validate()
            }
            WeightRule::Step { positive: a, nonpositive: b } => {
                positive("weight", *a)?;
                positive("weight", *b)
            }
        }
    }

    /// Whether the rule gives a weight for every `k ∈ Z`.
    pub fn is_bilateral(&self) -> bool {
        matches!(self, WeightRule::Constant { .. } | WeightRule::Step { .. })
    }

    /// `ln w_n`.
    pub fn log_weight(&self, n: i64) -> f64 {
        match self {
            WeightRule::Constant { value } => value.ln(),
            WeightRule::Cor22c { p } => {
                debug_assert!(n >= 1);
                (1.0 / n as f64).ln_1p() / p
            }
            WeightRule::Geometric { scale, ratio } => scale.ln() + n as f64 * ratio.ln(),
            WeightRule::Shifted { lead, rest } => {
                if n == 1 {
                    lead.ln()
                } else {
                    rest.log_weight(n - 1)
                }
            }
            WeightRule::Table { values, tail } => {
                if n >= 1 && (n as usize) <= values.len() {
                    values[n as usize - 1].ln()
                } else {
                    tail.log_weight(n)
                }
            }
            WeightRule::Step { positive, nonpositive } => {
                if n > 0 {
                    positive.ln()
                } else {
                    nonpositive.ln()
                }
            }
        }
    }

    pub fn weight(&self, n: i64) -> f64 {
        self.log_weight(n).exp()
    }

    /// `sum_{i < count} ln w_{start + i step}`, in closed form where the rule allows.
    pub fn log_product_affine(&self, start: i64, count: u64, step: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let c = count as f64;
        match self {
            WeightRule::Constant { value } => c * value.ln(),
            WeightRule::Cor22c { p } if step == 1 => {
                (c / start as f64).ln_1p() / p
            }
            WeightRule::Geometric { scale, ratio } => {
                // sum of indices: count*start + step*count*(count-1)/2
                let idx = c * start as f64 + step as f64 * c * (c - 1.0) / 2.0;
                c * scale.ln() + idx * ratio.ln()
            }
            WeightRule::Shifted { lead, rest } => {
                if start == 1 {
                    lead.ln() + rest.log_product_affine(step as i64, count - 1, step)
                } else {
                    rest.log_product_affine(start - 1, count, step)
                }
            }
            WeightRule::Table { values, tail } => {
                let len = values.len() as i64;
                let mut acc = CompensatedSum::new();
                let mut i = 0u64;
                let mut n = start;
                while i < count && n <= len {
                    acc.add(self.log_weight(n));
                    i += 1;
                    n += step as i64;
                }
                acc.add(tail.log_product_affine(n, count - i, step));
                acc.value()
            }
            WeightRule::Step { positive, nonpositive } => {
                // indices start + i*step > 0  <=>  i > -start/step
                let s = step as i64;
                let first_pos = if start > 0 { 0 } else { (-start) / s + 1 };
                let n_pos = (count as i64 - first_pos).clamp(0, count as i64) as f64;
                n_pos * positive.ln() + (c - n_pos) * nonpositive.ln()
            }
            _ => (0..count)
                .map(|i| self.log_weight(start + (i * step) as i64))
                .collect::<CompensatedSum>()
                .value(),
        }
    }

    /// `sum_{i < count} min(ln w_(start+i), 0)`: the log-product of the
    /// weights clipped at 1 from above.
    pub fn log_min1_range(&self, start: i64, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let c = count as f64;
        match self {
            WeightRule::Constant { value } => c * value.ln().min(0.0),
            WeightRule::Cor22c { .. } => 0.0,
            WeightRule::Geometric { scale, ratio } => {
                if *ratio >= 1.0 {
                    return c * scale.ln().min(0.0);
                }
                // ln w_n < 0 exactly for n > ln(scale) / -ln(ratio)
                let pivot = scale.ln() / -ratio.ln();
                let end = start + count as i64 - 1;
                let first = if pivot < start as f64 { start } else { (pivot.floor() as i64 + 1).max(start) };
                if first > end {
                    return 0.0;
                }
                let k = (end - first + 1) as f64;
                k * scale.ln() + ratio.ln() * (first + end) as f64 * k / 2.0
            }
            WeightRule::Shifted { lead, rest } => {
                if start == 1 {
                    lead.ln().min(0.0) + rest.log_min1_range(1, count - 1)
                } else {
                    rest.log_min1_range(start - 1, count)
                }
            }
            WeightRule::Table { values, tail } => {
                let len = values.len() as i64;
                let mut acc = CompensatedSum::new();
                let mut i = 0u64;
                let mut n = start;
                while i < count && n <= len {
                    acc.add(self.log_weight(n).min(0.0));
                    i += 1;
                    n += 1;
                }
                acc.add(tail.log_min1_range(n, count - i));
                acc.value()
            }
            WeightRule::Step { positive, nonpositive } => {
                let n_pos = (start + count as i64 - 1).clamp(0, i64::MAX) - (start - 1).clamp(0, i64::MAX);
                let n_pos = (n_pos.max(0) as f64).min(c);
                n_pos * positive.ln().min(0.0) + (c - n_pos) * nonpositive.ln().min(0.0)
            }
        }
    }

    /// `sup w`.
    pub fn upper_bound(&self) -> f64 {
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::Cor22c { p } => 2f64.powf(1.0 / p),
            WeightRule::Geometric { scale, ratio } => scale * ratio,
            WeightRule::Shifted { lead, rest } => lead.max(rest.upper_bound()),
            WeightRule::Table { values, tail } => values.iter().copied().fold(tail.upper_bound(), f64::max),
            WeightRule::Step { positive, nonpositive } => positive.max(*nonpositive),
        }
    }

    /// `inf w` (zero when the weights accumulate at zero).
    pub fn lower_bound(&self) -> f64 {
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::Cor22c { .. } => 1.0,
            WeightRule::Geometric { scale, ratio } => {
                if *ratio < 1.0 {
                    0.0
                } else {
                    *scale
                }
            }
            WeightRule::Shifted { lead, rest } => lead.min(rest.lower_bound()),
            WeightRule::Table { values, tail } => values.iter().copied().fold(tail.lower_bound(), f64::min),
            WeightRule::Step { positive, nonpositive } => positive.min(*nonpositive),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(rule: &WeightRule, start: i64, count: u64, step: u64) -> f64 {
        (0..count).map(|i| rule.log_weight(start + (i * step) as i64)).sum()
    }

    #[test]
    fn closed_forms_match_direct_sums() {
        let rules = [
            WeightRule::constant(2.0),
            WeightRule::Cor22c { p: 2.0 },
            WeightRule::Geometric { scale: 0.7, ratio: 0.5 },
            WeightRule::Shifted {
                lead: 1.0,
                rest: Box::new(WeightRule::Cor22c { p: 3.0 }),
            },
            WeightRule::Table {
                values: vec![0.5, 3.0, 1.5],
                tail: Box::new(WeightRule::constant(1.25)),
            },
            WeightRule::Step {
                positive: 2.0,
                nonpositive: 0.5,
            },
        ];
        for rule in &rules {
            for start in 1..12i64 {
                for count in 0..30u64 {
                    let step = if matches!(rule, WeightRule::Cor22c { .. }) { 1 } else { 1 + (count % 3) };
                    let a = rule.log_product_affine(start, count, step);
                    let b = direct(rule, start, count, step);
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{rule:?} {start} {count} {step}: {a} vs {b}");
                }
            }
        }
        let step = WeightRule::Step {
            positive: 2.0,
            nonpositive: 0.5,
        };
        for start in -20..5i64 {
            for step_len in 1..4u64 {
                let a = step.log_product_affine(start, 17, step_len);
                assert!((a - direct(&step, start, 17, step_len)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clipped_products_match_direct_sums() {
        let rules = [
            WeightRule::constant(0.5),
            WeightRule::constant(3.0),
            WeightRule::Cor22c { p: 2.0 },
            WeightRule::Geometric { scale: 7.0, ratio: 0.5 },
            WeightRule::Geometric { scale: 0.3, ratio: 0.9 },
            WeightRule::Shifted {
                lead: 0.25,
                rest: Box::new(WeightRule::Geometric { scale: 1.0, ratio: 0.5 }),
            },
            WeightRule::Table {
                values: vec![0.5, 3.0, 1.5],
                tail: Box::new(WeightRule::constant(0.75)),
            },
            WeightRule::Step {
                positive: 0.5,
                nonpositive: 2.0,
            },
        ];
        for rule in &rules {
            let lo = if rule.is_bilateral() { -10 } else { 1 };
            for start in lo..12i64 {
                for count in 0..25u64 {
                    let a = rule.log_min1_range(start, count);
                    let b: f64 = (0..count).map(|i| rule.log_weight(start + i as i64).min(0.0)).sum();
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{rule:?} {start} {count}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn cor22c_telescopes() {
        let r = WeightRule::Cor22c { p: 2.0 };
        assert!((r.weight(1) - 2f64.sqrt()).abs() < 1e-15);
        // w_1 ... w_n = (n+1)^(1/p)
        let n = 1000u64;
        assert!((r.log_product_affine(1, n, 1) - ((n + 1) as f64).ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert_eq!(WeightRule::Cor22c { p: 1.0 }.upper_bound(), 2.0);
        let t = WeightRule::Table {
            values: vec![5.0],
            tail: Box::new(WeightRule::constant(1.0)),
        };
        assert_eq!(t.upper_bound(), 5.0);
        assert_eq!(t.lower_bound(), 1.0);
        assert!(WeightRule::Geometric { scale: 1.0, ratio: 2.0 }.validate().is_err());
        assert!(WeightRule::constant(-1.0).validate().is_err());
    }
}
