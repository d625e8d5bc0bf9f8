use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::witness::GammaSequence;
use super::Inequality;
use crate::error::{Error, Result};
use crate::families::{verify_separation, ScheduleFamily};
use crate::numerics::{log_add_exp, log_sum_exp};
use crate::operators::Operator;
use crate::spaces::{norm, LogScalar, ScaledVector, SparseVector, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructOptions {
    /// Fixed part of the residual slack.
    pub slack: f64,
    /// Terms this far (in natural log) below the largest one end a window.
    pub window_drop: f64,
    /// Largest number of terms gathered on either side of a window.
    pub max_window: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self {
            slack: 1e-6,
            window_drop: 70.0,
            max_window: 1 << 16,
        }
    }
}

/// One summand `gamma_n S^n y_level` of the constructed vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub n: u64,
    /// Index into the dense sequence (level `l` is entry `l - 1`).
    pub level: usize,
}

/// `x = sum gamma_n S^n z_n` over the scheduled points, kept symbolic since its
/// coefficients span far more than the double range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVector {
    pub gamma: GammaSequence,
    pub dense: Vec<SparseVector>,
    pub terms: Vec<SeriesTerm>,
    pub horizon: u64,
}

/// `T^q x` restricted to the terms that matter, with an estimate of what was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint {
    pub value: ScaledVector,
    /// Natural log of the bound on the omitted terms (`-inf` when none).
    pub ln_omitted: f64,
    pub window: usize,
}

/// `ln ||P(d) z||` where `P(d) = T^d` for `d >= 0` and `S^-d` otherwise.
fn ln_power_norm(op: &Operator, z: &SparseVector, d: i64) -> Result<f64> {
    let terms = power_terms(op, z, d)?;
    Ok(ln_norm_of_terms(&terms, op.space().exponent()))
}

fn power_terms(op: &Operator, z: &SparseVector, d: i64) -> Result<Vec<(i64, LogScalar)>> {
    if d >= 0 {
        op.t_power_terms(z, d as u64)
    } else {
        op.s_power_terms(z, d.unsigned_abs())
    }
}

/// Norm of a vector with distinct indices given in log form.
pub(crate) fn ln_norm_of_terms(terms: &[(i64, LogScalar)], exponent: Option<f64>) -> f64 {
    match exponent {
        None => terms.iter().map(|(_, c)| c.ln_abs).fold(f64::NEG_INFINITY, f64::max),
        Some(p) => {
            let v: Vec<f64> = terms.iter().map(|(_, c)| p * c.ln_abs).collect();
            log_sum_exp(&v) / p
        }
    }
}

fn ln_l1(z: &SparseVector) -> f64 {
    z.iter().map(|(_, c)| c.norm()).sum::<f64>().ln()
}

/// Sum of term magnitudes over a sorted index list around `q`, grown outward
/// from `q` until terms drop `window_drop` below the largest one and keep
/// falling. The second value estimates the skipped remainder.
struct Window {
    ln_sum: f64,
    ln_skipped: f64,
    len: usize,
}

fn window_sum<F>(points: &[u64], q: u64, exclude_q: bool, death: Option<u64>, opts: &ConstructOptions, mut term: F) -> Result<Window>
where
    F: FnMut(usize) -> Result<f64>,
{
    let split = points.partition_point(|&n| n < q);
    let mut top = f64::NEG_INFINITY;
    let mut acc = f64::NEG_INFINITY;
    let mut len = 0usize;
    let mut ln_skipped = f64::NEG_INFINITY;
    let mut upper = split;
    if split < points.len() && points[split] == q {
        upper += 1;
        if !exclude_q {
            let v = term(split)?;
            top = top.max(v);
            acc = log_add_exp(acc, v);
            len += 1;
        }
    }
    // n > q
    let mut prev = f64::INFINITY;
    let mut i = upper;
    while i < points.len() {
        let v = term(i)?;
        acc = log_add_exp(acc, v);
        len += 1;
        top = top.max(v);
        i += 1;
        if v < top - opts.window_drop && v < prev {
            let rest = (points.len() - i) as f64;
            if rest > 0.0 {
                ln_skipped = log_add_exp(ln_skipped, v + rest.ln());
            }
            break;
        }
        prev = v;
        if i - upper > opts.max_window {
            return Err(Error::TruncationBudget(format!("window above q = {q} exceeds {} terms", opts.max_window)));
        }
    }
    // n < q
    let mut prev = f64::INFINITY;
    let mut i = split;
    while i > 0 {
        i -= 1;
        if let Some(d) = death {
            if q - points[i] >= d {
                break;
            }
        }
        let v = term(i)?;
        acc = log_add_exp(acc, v);
        len += 1;
        top = top.max(v);
        if death.is_none() && v < top - opts.window_drop && v < prev {
            if i > 0 {
                ln_skipped = log_add_exp(ln_skipped, v + (i as f64).ln());
            }
            break;
        }
        prev = v;
        if split - i > opts.max_window {
            return Err(Error::TruncationBudget(format!("window below q = {q} exceeds {} terms", opts.max_window)));
        }
    }
    Ok(Window {
        ln_sum: acc,
        ln_skipped,
        len,
    })
}

fn max_death(op: &Operator, vs: &[SparseVector]) -> Option<u64> {
    let mut d = 0;
    for v in vs {
        d = d.max(op.death_index(v)?);
    }
    Some(d)
}

impl SeriesVector {
    fn points(&self) -> Vec<u64> {
        self.terms.iter().map(|t| t.n).collect()
    }

    /// Checks that the gamma sequence covers the horizon plus the tail term.
    fn check_len(&self) -> Result<()> {
        let need = self.horizon as usize + 2;
        if self.gamma.len() < need {
            return Err(Error::TruncationBudget(format!(
                "gamma sequence has {} terms, horizon {} needs {need}",
                self.gamma.len(),
                self.horizon
            )));
        }
        Ok(())
    }

    /// `ln` of a bound on `||sum_(n > horizon) gamma_n S^(n-q) z_n||`.
    fn ln_beyond_horizon(&self, q: u64) -> f64 {
        let Some(maj) = &self.gamma.majorant else {
            return f64::INFINITY;
        };
        let h = self.horizon as usize;
        let z1 = self.dense.iter().map(ln_l1).fold(f64::NEG_INFINITY, f64::max);
        if q as usize + 1 >= maj.len() || h + 1 >= maj.len() {
            return f64::INFINITY;
        }
        // |gamma_n| ||S^(n-q) z|| <= |gamma_q| ||z||_1 a_(k_n) / a_(k_(q+1)) and the a_k tail after k_(h+1)
        // is at most 2^-k a_k; k_(h+1) >= h + 2 bounds the factor by 1 + 2^-(h+2).
        let tail = maj[h + 1] + (-((h + 2) as f64) * std::f64::consts::LN_2).exp().ln_1p();
        self.gamma.ln_abs_gamma(q as usize) + z1 + tail - maj[q as usize + 1]
    }

    /// `scale * T^q x` over the window of relevant terms.
    pub fn orbit_point(&self, op: &Operator, q: u64, scale: LogScalar, opts: &ConstructOptions) -> Result<OrbitPoint> {
        self.evaluator(op)?.point(q, scale, opts)
    }

    /// Caches the per-vector data needed by repeated [`SeriesVector::orbit_point`] calls.
    pub fn evaluator<'a>(&'a self, op: &'a Operator) -> Result<SeriesEval<'a>> {
        self.check_len()?;
        Ok(SeriesEval {
            series: self,
            op,
            points: self.points(),
            death: max_death(op, &self.dense),
        })
    }

    /// The coefficients that fit the double range, smaller ones dropped.
    pub fn to_sparse(&self, op: &Operator) -> Result<SparseVector> {
        let mut entries = Vec::new();
        for t in &self.terms {
            let g = self.gamma.gamma(t.n as usize);
            for (j, c) in op.s_power_terms(&self.dense[t.level], t.n)? {
                let c = c.mul(g);
                if c.ln_abs > -69.0 && c.ln_abs < 709.0 {
                    entries.push((j, c.to_complex()));
                }
            }
        }
        SparseVector::from_entries(op.domain(), entries)
    }
}

/// Orbit evaluation of one [`SeriesVector`] under one operator.
pub struct SeriesEval<'a> {
    series: &'a SeriesVector,
    op: &'a Operator,
    points: Vec<u64>,
    death: Option<u64>,
}

impl SeriesEval<'_> {
    pub fn point(&self, q: u64, scale: LogScalar, opts: &ConstructOptions) -> Result<OrbitPoint> {
        let (s, op) = (self.series, self.op);
        let mut parts: Vec<(i64, LogScalar)> = Vec::new();
        let w = window_sum(&self.points, q, false, self.death, opts, |i| {
            let t = s.terms[i];
            let g = s.gamma.gamma(t.n as usize).mul(scale);
            let d = q as i64 - t.n as i64;
            let terms = power_terms(op, &s.dense[t.level], d)?;
            let ln = ln_norm_of_terms(&terms, op.space().exponent());
            parts.extend(terms.into_iter().map(|(j, c)| (j, c.mul(g))));
            Ok(ln + g.ln_abs)
        })?;
        let beyond = if q <= s.horizon {
            s.ln_beyond_horizon(q) + scale.ln_abs
        } else {
            f64::INFINITY
        };
        let value = ScaledVector::from_log_terms(op.domain(), parts, None)?;
        Ok(OrbitPoint {
            value,
            ln_omitted: log_add_exp(w.ln_skipped, beyond),
            window: w.len,
        })
    }
}

/// The four inequality values of one level, as checked for the chosen index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelChecks {
    pub tail: f64,
    pub self_cross: f64,
    pub earlier_cross: f64,
    pub inverse: f64,
    pub tail_bound: f64,
    pub self_cross_bound: f64,
    pub inverse_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResidual {
    pub level: usize,
    pub k: usize,
    /// `sup_q ||gamma_q^-1 T^q x - y_l||` over `q` in `A_(k_l)` up to the horizon.
    pub residual: f64,
    pub worst_q: Option<u64>,
    /// `2^(3-l) + 2^-l`.
    pub bound: f64,
    pub slack: f64,
    /// Largest omitted-terms estimate met while computing the residual.
    pub tail_bound: f64,
    /// `sup_q ||T^q S^q y_l - y_l||`.
    pub inverse_residual: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPlan {
    pub chosen_k: Vec<usize>,
    pub schedules: ScheduleFamily,
    pub dense_seq: Vec<SparseVector>,
    pub x: SeriesVector,
    pub horizon: u64,
    pub checks: Vec<LevelChecks>,
    pub residuals: Vec<LevelResidual>,
}

impl ConstructionPlan {
    pub fn pass(&self) -> bool {
        self.residuals.iter().all(|r| r.pass)
    }
}

/// `||T^q S^q y - y||` from the two log-products, so that an exact right
/// inverse gives exactly zero.
pub(crate) fn inverse_residual(op: &Operator, y: &SparseVector, q: u64) -> Result<f64> {
    let mut entries = Vec::with_capacity(2 * y.len());
    for (l, z) in y.iter() {
        let e = SparseVector::basis(op.domain(), l)?;
        let mut back = Vec::new();
        for (j, s) in op.s_power_terms(&e, q)? {
            let f = SparseVector::basis(op.domain(), j)?;
            for (i, t) in op.t_power_terms(&f, q)? {
                back.push((i, t.ln_abs + s.ln_abs));
            }
        }
        for (i, ln) in back {
            entries.push((i, z * ln.exp()));
        }
        entries.push((l, -z));
    }
    let v = SparseVector::from_entries(op.domain(), entries)?;
    norm(&Vector::Seq(v), &op.space())
}

struct Builder<'a> {
    op: &'a Operator,
    gamma: &'a GammaSequence,
    fam: &'a ScheduleFamily,
    dense: &'a [SparseVector],
    horizon: u64,
    opts: &'a ConstructOptions,
    death: Option<u64>,
    union: Vec<u64>,
}

impl Builder<'_> {
    fn set(&self, k: usize) -> &[u64] {
        let e = self.fam.set(k).elems();
        &e[..e.partition_point(|&n| n <= self.horizon)]
    }

    fn lg(&self, n: u64) -> f64 {
        self.gamma.ln_abs_gamma(n as usize)
    }

    /// `sum_(n in A, n != q) |gamma_n / gamma_q| ||P(q - n) y||` in log form.
    fn cross(&self, a: &[u64], q: u64, y: &SparseVector) -> Result<f64> {
        let lq = self.lg(q);
        let w = window_sum(a, q, true, self.death, self.opts, |i| {
            let n = a[i];
            Ok(self.lg(n) - lq + ln_power_norm(self.op, y, q as i64 - n as i64)?)
        })?;
        Ok(log_add_exp(w.ln_sum, w.ln_skipped))
    }

    /// `sum_(n in A, n >= from) |gamma_n| ||S^n y||` in log form.
    fn tail(&self, a: &[u64], from: u64, y: &SparseVector) -> Result<f64> {
        let start = a.partition_point(|&n| n < from);
        let rest = &a[start..];
        if rest.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        // a window "around" the point before the first element covers only n >= from
        let w = window_sum(rest, rest[0], false, Some(0), self.opts, |i| {
            let n = rest[i];
            Ok(self.lg(n) + ln_power_norm(self.op, y, -(n as i64))?)
        })?;
        Ok(log_add_exp(w.ln_sum, w.ln_skipped))
    }

    /// Checks level `l` with candidate `k`; `Err` carries the first violation.
    fn check_level(&self, l: usize, k: usize, chosen: &[usize]) -> Result<std::result::Result<LevelChecks, (Inequality, f64, f64)>> {
        let y = &self.dense[l - 1];
        let a = self.set(k);
        let lf = l as f64;
        let small = 1.0 / (lf * 2f64.powi(l as i32));
        let half = 2f64.powi(-(l as i32));

        let mut inverse = 0f64;
        for &q in a {
            inverse = inverse.max(inverse_residual(self.op, y, q)?);
        }
        if inverse > half {
            return Ok(Err((Inequality::Inverse, inverse, half)));
        }

        let mut tail = f64::NEG_INFINITY;
        for (j, &kj) in chosen.iter().chain([&k]).enumerate() {
            tail = tail.max(self.tail(self.set(kj), k as u64, &self.dense[j])?);
        }
        let tail = tail.exp();
        if tail > small {
            return Ok(Err((Inequality::Tail, tail, small)));
        }

        let mut earlier = f64::NEG_INFINITY;
        for (j, &kj) in chosen.iter().enumerate() {
            let aj = self.set(kj);
            for &q in a {
                earlier = earlier.max(self.cross(aj, q, &self.dense[j])?);
            }
        }
        let earlier = earlier.exp();
        if earlier > small {
            return Ok(Err((Inequality::EarlierCross, earlier, small)));
        }

        let mut self_cross = f64::NEG_INFINITY;
        for &q in &self.union {
            self_cross = self_cross.max(self.cross(a, q, y)?);
        }
        let self_cross = self_cross.exp();
        if self_cross > half {
            return Ok(Err((Inequality::SelfCross, self_cross, half)));
        }
        Ok(Ok(LevelChecks {
            tail,
            self_cross,
            earlier_cross: earlier,
            inverse,
            tail_bound: small,
            self_cross_bound: half,
            inverse_bound: half,
        }))
    }
}

/// Chooses `k_1 < ... < k_L` level by level and assembles
/// `x = sum_(n in A_(k_l), n <= horizon) gamma_n S^n y_l`, then measures
/// `sup_q ||gamma_q^-1 T^q x - y_l||` over each schedule.
pub fn construct_hypercyclic_vector(
    op: &Operator,
    gamma_seq: &GammaSequence,
    schedules: &ScheduleFamily,
    dense_seq: &[SparseVector],
    levels: usize,
    horizon: u64,
    opts: &ConstructOptions,
) -> Result<ConstructionPlan> {
    if levels == 0 || dense_seq.len() < levels {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= L <= {} dense vectors, got L = {levels}",
            dense_seq.len()
        )));
    }
    if horizon > schedules.horizon {
        return Err(Error::out_of_range("horizon", horizon, format!("[0, {}]", schedules.horizon)));
    }
    if !verify_separation(schedules) || !schedules.respects_offsets() {
        return Err(Error::InvalidParameter("schedule family fails the separation check".into()));
    }
    if matches!(op, Operator::DirectSumId { .. }) {
        return Err(Error::NotApplicable("construction runs on the base operator".into()));
    }
    for y in &dense_seq[..levels] {
        op.space().check(y)?;
        if y.is_empty() {
            return Err(Error::InvalidParameter("dense vectors must be nonzero".into()));
        }
    }
    let need = horizon as usize + 2;
    if gamma_seq.len() < need {
        return Err(Error::TruncationBudget(format!(
            "gamma sequence has {} terms, horizon {horizon} needs {need}",
            gamma_seq.len()
        )));
    }
    let dense = &dense_seq[..levels];
    let b = Builder {
        op,
        gamma: gamma_seq,
        fam: schedules,
        dense,
        horizon,
        opts,
        death: max_death(op, dense),
        union: schedules
            .labelled_union()
            .into_iter()
            .map(|(n, _)| n)
            .take_while(|&n| n <= horizon)
            .collect(),
    };

    let mut chosen: Vec<usize> = Vec::with_capacity(levels);
    let mut checks = Vec::with_capacity(levels);
    for l in 1..=levels {
        let first = chosen.last().map_or(1, |k| k + 1);
        let mut last_fail = None;
        let mut found = None;
        for k in first..=schedules.len() {
            if b.set(k).is_empty() {
                continue;
            }
            match b.check_level(l, k, &chosen)? {
                Ok(c) => {
                    found = Some((k, c));
                    break;
                }
                Err(v) => last_fail = Some((k, v)),
            }
        }
        match found {
            Some((k, c)) => {
                chosen.push(k);
                checks.push(c);
            }
            None => {
                let (last_k, (inequality, value, bound)) = last_fail.unwrap_or((first.saturating_sub(1), (Inequality::Tail, f64::INFINITY, 0.0)));
                return Err(Error::ConstructionFailure {
                    level: l,
                    inequality,
                    last_k,
                    value,
                    bound,
                });
            }
        }
    }

    let mut terms: Vec<SeriesTerm> = chosen
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| b.set(k).iter().map(move |&n| SeriesTerm { n, level: i }))
        .collect();
    terms.sort_by_key(|t| t.n);
    let x = SeriesVector {
        gamma: gamma_seq.clone(),
        dense: dense.to_vec(),
        terms,
        horizon,
    };

    let space = op.space();
    let eval = x.evaluator(op)?;
    let mut residuals = Vec::with_capacity(levels);
    for (i, &k) in chosen.iter().enumerate() {
        let l = i + 1;
        let y = &dense[i];
        let mut residual = 0f64;
        let mut worst_q = None;
        let mut tail_bound = 0f64;
        let mut inverse = 0f64;
        let pts = b.set(k);
        for &q in pts {
            let scale = gamma_seq.gamma(q as usize).inv();
            let p = eval.point(q, scale, opts)?;
            let mut diff = p.value;
            let minus_y = ScaledVector::new(y.scale(Complex64::new(-1.0, 0.0)));
            let r = match (diff.materialize(), minus_y.materialize()) {
                (Some(u), Some(v)) => {
                    let s = crate::spaces::axpy(Complex64::new(1.0, 0.0), u.sequence(), v.sequence())?;
                    norm(&Vector::Seq(s), &space)?
                }
                _ => {
                    diff.renormalize();
                    diff.ln_norm(&space)?.exp() + norm(y, &space)?
                }
            };
            inverse = inverse.max(inverse_residual(op, y, q)?);
            tail_bound = tail_bound.max(p.ln_omitted.exp());
            if r > residual || worst_q.is_none() {
                residual = residual.max(r);
                worst_q = Some(q);
            }
        }
        let bound = 2f64.powi(3 - l as i32) + 2f64.powi(-(l as i32));
        let slack = opts.slack + tail_bound;
        residuals.push(LevelResidual {
            level: l,
            k,
            residual,
            worst_q,
            bound,
            slack,
            tail_bound,
            inverse_residual: inverse,
            points: pts.len(),
            pass: residual <= bound + slack,
        });
    }

    Ok(ConstructionPlan {
        chosen_k: chosen,
        schedules: schedules.clone(),
        dense_seq: dense.to_vec(),
        x,
        horizon,
        checks,
        residuals,
    })
}
