use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::witness::GammaSequence;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, log_add_exp, log_sum_exp, GeometricFit};
use crate::operators::Operator;
use crate::spaces::{axpy, norm, LogScalar, ScaledVector, SparseVector, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionOptions {
    pub m_max: usize,
    pub tail_len: usize,
    pub tol_i: f64,
    pub tol_ii: f64,
    pub tol_iii: f64,
    /// Inclusive `m` range of the geometric fit of the (ii) curve.
    pub fit_range: (usize, usize),
    /// Random finite sets drawn per start index for the unconditional-sum certificate.
    pub certificate_draws: usize,
    pub seed: u64,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            m_max: 200,
            tail_len: 400,
            tol_i: 1e-6,
            tol_ii: 1e-6,
            tol_iii: 1e-9,
            fit_range: (5, 40),
            certificate_draws: 200,
            seed: 0,
        }
    }
}

impl CriterionOptions {
    /// Largest `r` in the sups and the last gamma index used.
    pub fn r_max(&self) -> usize {
        self.m_max + self.tail_len
    }
}

/// `sup_F ||sum_(n in F) gamma_n S^n y||` over random finite `F` in `[start, r_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub start: usize,
    pub sup_norm: f64,
    /// `sum_(n >= start) |gamma_n| ||S^n y||`, which dominates every draw.
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_iii: bool,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorReport {
    /// `T_m = sum_(n=m)^(m+tail_len) |gamma_n| ||S^n y||` for `m = 0..=m_max`.
    pub cond_i_tail: Vec<f64>,
    /// The (ii) expression for `m = 1..=m_max` (entry `m - 1`).
    pub cond_ii_curve: Vec<f64>,
    pub cond_ii_first: Vec<f64>,
    pub cond_ii_second: Vec<f64>,
    /// Natural log of `cond_ii_curve`, finite where the curve underflows.
    pub cond_ii_ln: Vec<f64>,
    pub cond_ii_fit: Option<GeometricFit>,
    pub cond_iii_residual: f64,
    pub certificate: Vec<CertificateRow>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub options: CriterionOptions,
    pub vectors: Vec<VectorReport>,
}

impl CriterionReport {
    pub fn pass(&self) -> bool {
        self.vectors.iter().all(|v| v.verdict.pass())
    }
}

/// `ln ||T^j y||` and `ln ||S^j y||` for `j = 0..=j_max` (`-inf` once the orbit dies).
pub(crate) fn norm_profiles(op: &Operator, y: &SparseVector, j_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let space = op.space();
    let mut t = Vec::with_capacity(j_max + 1);
    let mut s = Vec::with_capacity(j_max + 1);
    let mut tv = ScaledVector::new(y.clone());
    let mut sv = tv.clone();
    for j in 0..=j_max {
        if j > 0 {
            if !tv.vector.is_zero() {
                tv = op.apply_t_power_scaled(&tv, 1)?;
            }
            sv = op.apply_s_power_scaled(&sv, 1)?;
        }
        t.push(tv.ln_norm(&space)?);
        s.push(sv.ln_norm(&space)?);
    }
    Ok((t, s))
}

/// `ln(sum_(i >= j) exp(v_i))` for every `j`.
fn log_suffix(v: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; v.len() + 1];
    for i in (0..v.len()).rev() {
        out[i] = log_add_exp(out[i + 1], v[i]);
    }
    out
}

fn check_vector(op: &Operator, seq: &GammaSequence, y: &SparseVector, opts: &CriterionOptions) -> Result<VectorReport> {
    let r_max = opts.r_max();
    let (t, s) = norm_profiles(op, y, r_max)?;
    let lg: Vec<f64> = (0..=r_max).map(|n| seq.ln_abs_gamma(n)).collect();

    // (i)
    let terms: Vec<f64> = (0..=r_max).map(|n| lg[n] + s[n]).collect();
    let ln_tail: Vec<f64> = (0..=opts.m_max)
        .map(|m| log_sum_exp(&terms[m..=(m + opts.tail_len).min(r_max)]))
        .collect();
    let cond_i_tail: Vec<f64> = ln_tail.iter().map(|v| v.exp()).collect();
    let half = opts.m_max / 2;
    let settles = ln_tail[half..].windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
    let cond_i = settles && cond_i_tail[opts.m_max] <= opts.tol_i;

    // (ii): F(r, m) = sum_(j=m)^r |gamma_(r-j)/gamma_r| e^(t_j),
    //       G(r, m) = sum_(j=m)^(r_max-r) |gamma_(r+j)/gamma_r| e^(s_j)
    let mut first = vec![f64::NEG_INFINITY; opts.m_max + 1];
    let mut second = vec![f64::NEG_INFINITY; opts.m_max + 1];
    for r in 1..=r_max {
        let f: Vec<f64> = (0..=r).map(|j| lg[r - j] - lg[r] + t[j]).collect();
        let fs = log_suffix(&f);
        for m in 1..=opts.m_max.min(r) {
            first[m] = first[m].max(fs[m]);
        }
        let g: Vec<f64> = (0..=r_max - r).map(|j| lg[r + j] - lg[r] + s[j]).collect();
        let gs = log_suffix(&g);
        for m in 1..=opts.m_max.min(r_max - r) {
            second[m] = second[m].max(gs[m]);
        }
    }
    let ln_curve: Vec<f64> = (1..=opts.m_max).map(|m| log_add_exp(first[m], second[m])).collect();
    let cond_ii_curve: Vec<f64> = ln_curve.iter().map(|v| v.exp()).collect();
    let cond_ii = cond_ii_curve.last().is_some_and(|&v| v <= opts.tol_ii);
    let (lo, hi) = opts.fit_range;
    let cond_ii_fit = if lo >= 1 && hi <= opts.m_max && lo < hi {
        let xs: Vec<f64> = (lo..=hi).map(|m| m as f64).collect();
        let ys: Vec<f64> = (lo..=hi).map(|m| ln_curve[m - 1]).collect();
        fit_line(&xs, &ys).map(|f| GeometricFit {
            ratio: f.slope.exp(),
            constant: f.intercept.exp(),
            r_squared: f.r_squared,
        })
    } else {
        None
    };

    // (iii)
    let space = op.space();
    let ts = op.apply_t(&op.apply_s(y)?)?;
    let diff = axpy(num_complex::Complex64::new(-1.0, 0.0), y, ts.sequence())?;
    let cond_iii_residual = norm(&Vector::Seq(diff), &space)?;

    let certificate = certificate(op, seq, y, opts, &terms)?;

    Ok(VectorReport {
        cond_i_tail,
        cond_ii_first: first[1..].iter().map(|v| v.exp()).collect(),
        cond_ii_second: second[1..].iter().map(|v| v.exp()).collect(),
        cond_ii_curve,
        cond_ii_ln: ln_curve,
        cond_ii_fit,
        cond_iii_residual,
        certificate,
        verdict: Verdict {
            cond_i,
            cond_ii,
            cond_iii: cond_iii_residual < opts.tol_iii,
        },
    })
}

fn certificate(
    op: &Operator,
    seq: &GammaSequence,
    y: &SparseVector,
    opts: &CriterionOptions,
    terms: &[f64],
) -> Result<Vec<CertificateRow>> {
    let r_max = opts.r_max();
    let space = op.space();
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut starts = vec![0, opts.m_max / 4, opts.m_max / 2, opts.m_max];
    starts.dedup();
    let mut rows = Vec::with_capacity(starts.len());
    for start in starts {
        let bound = log_sum_exp(&terms[start..]).exp();
        let mut sup = 0f64;
        for _ in 0..opts.certificate_draws {
            let p: f64 = rng.gen_range(0.05..1.0);
            let mut parts: Vec<(i64, LogScalar)> = Vec::new();
            for n in start..=r_max {
                if rng.gen_bool(p) {
                    let g = seq.gamma(n);
                    parts.extend(op.s_power_terms(y, n as u64)?.into_iter().map(|(i, c)| (i, c.mul(g))));
                }
            }
            let v = ScaledVector::from_log_terms(op.domain(), parts, None)?;
            let ln = v.ln_norm(&space)?;
            sup = sup.max(ln.exp());
        }
        rows.push(CertificateRow {
            start,
            sup_norm: sup,
            bound,
        });
    }
    Ok(rows)
}

/// Evaluates the three conditions on each test vector over a finite window.
pub fn check_criterion(
    op: &Operator,
    gamma_seq: &GammaSequence,
    test_vectors: &[SparseVector],
    opts: &CriterionOptions,
) -> Result<CriterionReport> {
    if opts.m_max == 0 {
        return Err(Error::out_of_range("m_max", 0, "[1, inf)"));
    }
    let need = opts.r_max() + 1;
    if gamma_seq.len() < need {
        return Err(Error::TruncationBudget(format!(
            "gamma sequence has {} terms, the window needs {need}",
            gamma_seq.len()
        )));
    }
    if matches!(op, Operator::DirectSumId { .. }) {
        return Err(Error::NotApplicable("criterion checks run on the base operator".into()));
    }
    for y in test_vectors {
        op.space().check(y)?;
    }
    let vectors = std::thread::scope(|scope| {
        let handles: Vec<_> = test_vectors
            .iter()
            .map(|y| scope.spawn(move || check_vector(op, gamma_seq, y, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(CriterionReport {
        options: opts.clone(),
        vectors,
    })
}
