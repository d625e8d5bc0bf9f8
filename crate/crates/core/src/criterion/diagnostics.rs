use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gamma::GammaSpec;
use super::subseq::extract_ln;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, log_add_exp, CompensatedSum};
use crate::operators::WeightRule;

/// Ratios below this count as tending to zero.
const RATIO_ZERO: f64 = 1e-6;
const HEAD: usize = 30;

/// A sequence in Gamma decreasing to zero, with its consecutive ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSequenceReport {
    pub description: String,
    /// `ln |alpha_k|` for the first terms.
    pub ln_moduli: Vec<f64>,
    /// `|alpha_(k+1)| / |alpha_k|` for the first terms.
    pub ratios: Vec<f64>,
    pub ratio_limit: f64,
    /// Whether the ratios tend to zero.
    pub ratio_tends_to_zero: bool,
    /// Whether a subsequence with ratios pinned in `[delta^2, delta]` exists
    /// for `delta = max(ratio_limit, smallest sampled ratio)`.
    pub exponential_subsequence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDiagnostics {
    pub bounded: bool,
    pub away_from_zero: bool,
    /// False when the flags come from a finite sample.
    pub exact: bool,
    pub sup_modulus: f64,
    /// Infimum over the nonzero elements.
    pub inf_modulus: f64,
    /// Bounded and bounded away from zero.
    pub sufficient_condition: bool,
    pub null_sequence: Option<NullSequenceReport>,
    /// A null sequence whose ratios stay bounded below was found.
    pub obstruction: bool,
}

pub fn gamma_diagnostics(gamma: &GammaSpec, sample_budget: usize) -> Result<GammaDiagnostics> {
    gamma.validate()?;
    let budget = sample_budget.max(100);
    let (bounded, away, exact, sup, inf) = match gamma {
        GammaSpec::Finite { samples } => {
            let mods: Vec<f64> = samples.iter().map(|z| z.norm()).filter(|&r| r > 0.0).collect();
            let sup = mods.iter().copied().fold(0.0, f64::max);
            let inf = mods.iter().copied().fold(f64::INFINITY, f64::min);
            (true, !mods.is_empty(), true, sup, inf)
        }
        GammaSpec::Geometric { alpha0, .. } => (true, false, true, alpha0.norm(), 0.0),
        GammaSpec::Annulus { r_min, r_max } => (true, true, true, *r_max, *r_min),
        GammaSpec::FullPlane => (false, false, true, f64::INFINITY, 0.0),
        GammaSpec::UnboundedGen { .. } | GammaSpec::QuadraticDecay { .. } => {
            let lat = gamma.ray_lattice().expect("lattice kinds");
            let ln: Vec<f64> = (0..budget as i64).map(|j| lat.ln_modulus(lat.lo + j)).collect();
            let hi = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = ln.iter().copied().fold(f64::INFINITY, f64::min);
            let growing = ln.windows(2).all(|w| w[1] > w[0]);
            if lat.decays() {
                (true, false, false, hi.exp(), 0.0)
            } else {
                (!growing, true, false, if growing { f64::INFINITY } else { hi.exp() }, lo.exp())
            }
        }
    };
    let null_sequence = match gamma {
        GammaSpec::Geometric { alpha0, ratio } => {
            let ln0 = alpha0.norm().ln();
            let ln: Vec<f64> = (0..budget).map(|k| ln0 + k as f64 * ratio.ln()).collect();
            Some(null_report(format!("alpha_k = alpha0 * {ratio}^k"), &ln, Some(*ratio)))
        }
        GammaSpec::QuadraticDecay { base } => {
            let ln: Vec<f64> = (0..budget).map(|k| -((k * k) as f64) * base.ln()).collect();
            Some(null_report(format!("alpha_k = {base}^(-k^2)"), &ln, None))
        }
        GammaSpec::FullPlane => {
            let ln: Vec<f64> = (0..budget).map(|k| -(k as f64) * std::f64::consts::LN_2).collect();
            Some(null_report("alpha_k = 2^-k".into(), &ln, Some(0.5)))
        }
        _ => None,
    };
    let obstruction = null_sequence
        .as_ref()
        .is_some_and(|s| !s.ratio_tends_to_zero && s.exponential_subsequence);
    Ok(GammaDiagnostics {
        bounded,
        away_from_zero: away,
        exact,
        sup_modulus: sup,
        inf_modulus: inf,
        sufficient_condition: bounded && away,
        null_sequence,
        obstruction,
    })
}

fn null_report(description: String, ln: &[f64], exact_limit: Option<f64>) -> NullSequenceReport {
    let ln_ratios: Vec<f64> = ln.windows(2).map(|w| w[1] - w[0]).collect();
    let ratio_limit = exact_limit.unwrap_or_else(|| ln_ratios.last().copied().unwrap_or(0.0).exp());
    let decreasing = ln_ratios.windows(2).all(|w| w[1] < w[0]);
    let ratio_tends_to_zero = ratio_limit < RATIO_ZERO && (exact_limit.is_some() || decreasing);
    let smallest = ln_ratios.iter().copied().fold(f64::INFINITY, f64::min).exp();
    let delta = ratio_limit.max(smallest);
    let exponential_subsequence = delta > 0.0 && delta < 1.0 && extract_ln(ln, Some(delta)).is_ok();
    NullSequenceReport {
        description,
        ln_moduli: ln.iter().copied().take(HEAD).collect(),
        ratios: ln_ratios.iter().take(HEAD).map(|r| r.exp()).collect(),
        ratio_limit,
        ratio_tends_to_zero,
        exponential_subsequence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSide {
    Unilateral,
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub n_max: u64,
    /// `(n, ln S_n)` at `n = N/4, N/2, N`.
    pub ln_partial_sums: Vec<(u64, f64)>,
    pub ln_last_term: f64,
    pub last_term: f64,
    /// Fitted `t_(n+1)/t_n` over `[N/2, N]`.
    pub fitted_ratio: Option<f64>,
    /// Fitted exponent `a` in `t_n ~ c n^a` over `[N/4, N]`.
    pub fitted_exponent: Option<f64>,
    pub class: SeriesClass,
    /// `(n, ln t_n)` at sampled `n`.
    pub samples: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSeriesReport {
    pub p: f64,
    /// `sum_(n>=1) (w_1 ... w_n)^-p`.
    pub positive: SeriesReport,
    /// `sum_(n<0) (w_-1 ... w_n)^p`.
    pub negative: Option<SeriesReport>,
}

pub const MAX_SERIES_TERMS: u64 = 10_000_000;

pub fn weight_series_check(weights: &WeightRule, p: f64, side: SeriesSide, n_max: u64) -> Result<WeightSeriesReport> {
    weights.validate()?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::out_of_range("p", p, "(0, inf)"));
    }
    if !(4..=MAX_SERIES_TERMS).contains(&n_max) {
        return Err(Error::out_of_range("N", n_max as f64, "[4, 1e7]"));
    }
    let positive = series(n_max, |n| -p * weights.log_weight(n as i64));
    let negative = match side {
        SeriesSide::Unilateral => None,
        SeriesSide::Bilateral => {
            if !weights.is_bilateral() {
                return Err(Error::InvalidParameter("weight rule is not defined on the negative indices".into()));
            }
            Some(series(n_max, |n| p * weights.log_weight(-(n as i64))))
        }
    };
    Ok(WeightSeriesReport { p, positive, negative })
}

/// `t_n = exp(sum_(i <= n) step(i))`, summed for `n = 1..=n_max`.
fn series(n_max: u64, step: impl Fn(u64) -> f64) -> SeriesReport {
    let mut marks = BTreeSet::new();
    for i in 0..=256u32 {
        marks.insert(((n_max as f64).powf(i as f64 / 256.0).round() as u64).clamp(1, n_max));
    }
    let quarter = (n_max / 4).max(1);
    for i in 0..=128u64 {
        marks.insert(quarter + (n_max - quarter) * i / 128);
    }
    let checkpoints = [quarter, (n_max / 2).max(1), n_max];
    let mut ln_t = CompensatedSum::new();
    let mut ln_s = f64::NEG_INFINITY;
    let mut samples = Vec::with_capacity(marks.len());
    let mut ln_partial_sums = Vec::new();
    for n in 1..=n_max {
        ln_t.add(step(n));
        let t = ln_t.value();
        ln_s = log_add_exp(ln_s, t);
        if marks.contains(&n) {
            samples.push((n, t));
        }
        if checkpoints.contains(&n) && ln_partial_sums.last().map(|l: &(u64, f64)| l.0) != Some(n) {
            ln_partial_sums.push((n, ln_s));
        }
    }
    let ln_last = ln_t.value();
    let tail = |from: u64| -> Vec<(u64, f64)> { samples.iter().copied().filter(|s| s.0 >= from).collect() };
    let half = tail((n_max / 2).max(1));
    let fitted_ratio = fit_line(
        &half.iter().map(|s| s.0 as f64).collect::<Vec<_>>(),
        &half.iter().map(|s| s.1).collect::<Vec<_>>(),
    );
    let late = tail(quarter);
    let fitted_power = fit_line(
        &late.iter().map(|s| (s.0 as f64).ln()).collect::<Vec<_>>(),
        &late.iter().map(|s| s.1).collect::<Vec<_>>(),
    );
    let class = if fitted_ratio.is_some_and(|f| f.slope.exp() < 0.999 && f.r_squared >= 0.99) {
        SeriesClass::Converging
    } else if fitted_power.is_some_and(|f| f.slope >= -1.0 - 1e-9) {
        SeriesClass::Diverging
    } else {
        SeriesClass::Inconclusive
    };
    SeriesReport {
        n_max,
        ln_partial_sums,
        ln_last_term: ln_last,
        last_term: ln_last.exp(),
        fitted_ratio: fitted_ratio.map(|f| f.slope.exp()),
        fitted_exponent: fitted_power.map(|f| f.slope),
        class,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn geometric_gamma_is_obstructed() {
        let g = GammaSpec::Geometric {
            alpha0: Complex64::new(1.0, 0.0),
            ratio: 0.9,
        };
        let d = gamma_diagnostics(&g, 100).unwrap();
        assert!(d.bounded && !d.away_from_zero && d.exact);
        let s = d.null_sequence.unwrap();
        assert!((s.ratio_limit - 0.9).abs() < 1e-15);
        assert!(!s.ratio_tends_to_zero);
        assert!(d.obstruction);
    }

    #[test]
    fn annulus_meets_the_sufficient_condition() {
        let d = gamma_diagnostics(&GammaSpec::Annulus { r_min: 1.0, r_max: 2.0 }, 100).unwrap();
        assert!(d.sufficient_condition && !d.obstruction);
    }

    #[test]
    fn quadratic_decay_ratios() {
        let d = gamma_diagnostics(&GammaSpec::QuadraticDecay { base: 2.0 }, 100).unwrap();
        let s = d.null_sequence.unwrap();
        for k in 0..30 {
            let want = 2f64.powi(-(2 * k as i32 + 1));
            assert!((s.ratios[k] - want).abs() <= 1e-12 * want);
        }
        assert!(s.ratio_tends_to_zero);
        assert!(!d.obstruction);
    }

    #[test]
    fn unbounded_generator_is_not_bounded() {
        let g = GammaSpec::UnboundedGen {
            base: 2.0,
            min_exponent: -3,
            phase: 0.0,
        };
        let d = gamma_diagnostics(&g, 100).unwrap();
        assert!(!d.bounded && d.away_from_zero && !d.exact);
        assert!((d.inf_modulus - 0.125).abs() < 1e-15);
    }

    #[test]
    fn harmonic_weights_diverge() {
        let r = weight_series_check(&WeightRule::Cor22c { p: 2.0 }, 2.0, SeriesSide::Unilateral, 100_000).unwrap();
        assert_eq!(r.positive.class, SeriesClass::Diverging);
        for &(n, ln_t) in &r.positive.samples {
            let want = 1.0 / (n as f64 + 1.0);
            assert!((ln_t.exp() - want).abs() <= 1e-9 * want, "{n}");
        }
        // partial sums against the harmonic numbers
        let h: f64 = (2..=100_001u64).map(|k| 1.0 / k as f64).sum();
        let (_, ln_s) = *r.positive.ln_partial_sums.last().unwrap();
        assert!((ln_s.exp() - h).abs() < 1e-8 * h);
    }

    #[test]
    fn constant_two_converges() {
        let r = weight_series_check(&WeightRule::constant(2.0), 2.0, SeriesSide::Unilateral, 10_000).unwrap();
        assert_eq!(r.positive.class, SeriesClass::Converging);
        assert!((r.positive.fitted_ratio.unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn step_weights_negative_side_diverges() {
        let w = WeightRule::Step {
            positive: 2.0,
            nonpositive: 1.0,
        };
        let r = weight_series_check(&w, 2.0, SeriesSide::Bilateral, 10_000).unwrap();
        assert_eq!(r.positive.class, SeriesClass::Converging);
        let neg = r.negative.unwrap();
        assert_eq!(neg.class, SeriesClass::Diverging);
        assert!(neg.samples.iter().all(|s| s.1 == 0.0));
    }
}
