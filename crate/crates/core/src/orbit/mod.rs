//! Orbit probes and visit sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criterion::{ConstructOptions, GammaSpec, SeriesVector};
use crate::error::{Error, Result};
use crate::families::{density_report, DensityReport, IndexSet};
use crate::operators::Operator;
use crate::spaces::{
    axpy, best_scalar_distance_scaled, norm, DirectSumVector, LogScalar, ScaledVector, SparseVector, Vector, VectorRef,
};

/// Densities are reported only from this horizon on.
pub const MIN_DENSITY_HORIZON: u64 = 100;
pub const MAX_HORIZON: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitStart {
    Vector(Vector),
    /// A constructed vector, evaluated as `T^n x` term by term.
    Series(SeriesVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitProbe {
    pub op: Operator,
    pub start: OrbitStart,
    pub gamma: GammaSpec,
    pub targets: Vec<Vector>,
    pub epsilons: Vec<f64>,
    pub horizon: u64,
    /// Window options for series starts.
    pub series: ConstructOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub target: usize,
    pub epsilon: f64,
    pub visits: IndexSet,
    /// `None` below [`MIN_DENSITY_HORIZON`].
    pub density: Option<DensityReport>,
    /// `(n, gamma)` for each visit.
    pub witness_gammas: Vec<(u64, LogScalar)>,
}

/// Best distance and scalar per iterate for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTrace {
    pub target: usize,
    pub distance: Vec<f64>,
    pub gamma: Vec<LogScalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub records: Vec<VisitRecord>,
    pub traces: Vec<TargetTrace>,
    /// Last iterate actually evaluated.
    pub last_n: u64,
    /// First `n` with `T^n x = 0`.
    pub death_index: Option<u64>,
    /// Set when the run stopped early on a numeric-range failure.
    pub truncated: bool,
    pub truncation_reason: Option<String>,
    /// Largest bound on terms left out of a series start (`-inf` if none).
    pub max_ln_omitted: f64,
}

impl OrbitProbe {
    pub fn validate(&self) -> Result<()> {
        self.op.validate()?;
        self.gamma.validate()?;
        if self.horizon > MAX_HORIZON {
            return Err(Error::out_of_range("horizon", self.horizon as f64, "[0, 1e7]"));
        }
        if self.targets.is_empty() || self.epsilons.is_empty() {
            return Err(Error::InvalidParameter("probe needs at least one target and one epsilon".into()));
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::out_of_range("epsilon", e, "(0, inf)"));
        }
        let space = self.op.space();
        for t in &self.targets {
            space.check(t.as_ref())?;
        }
        match &self.start {
            OrbitStart::Vector(v) => space.check(v.as_ref()),
            OrbitStart::Series(s) => {
                if matches!(self.op, Operator::DirectSumId { .. }) {
                    return Err(Error::InvalidParameter("series starts live in the sequence space".into()));
                }
                s.dense.iter().try_for_each(|z| space.check(VectorRef::Seq(z)))
            }
        }
    }
}

/// Iterates the orbit once and tests every `(target, epsilon)` pair at each step.
pub fn run_probe(probe: &OrbitProbe) -> Result<ProbeReport> {
    probe.validate()?;
    let op = &probe.op;
    let space = op.space();
    let h = probe.horizon;
    let nt = probe.targets.len();
    let mut traces: Vec<TargetTrace> = (0..nt)
        .map(|target| TargetTrace {
            target,
            distance: Vec::new(),
            gamma: Vec::new(),
        })
        .collect();
    let target_norms = probe
        .targets
        .iter()
        .map(|t| norm(t, &space))
        .collect::<Result<Vec<_>>>()?;

    let series = match &probe.start {
        OrbitStart::Series(s) => Some(s.evaluator(op)?),
        OrbitStart::Vector(_) => None,
    };
    let death = match &probe.start {
        OrbitStart::Vector(v) => op.death_index(v),
        OrbitStart::Series(_) => None,
    };
    let mut current = match &probe.start {
        OrbitStart::Vector(v) => Some(ScaledVector::new(v.clone())),
        OrbitStart::Series(_) => None,
    };
    let mut max_ln_omitted = f64::NEG_INFINITY;
    let mut failure: Option<(u64, Error)> = None;

    for n in 0..=h {
        if death.is_some_and(|d| n >= d) {
            for (t, tr) in traces.iter_mut().enumerate() {
                tr.distance.push(target_norms[t]);
                tr.gamma.push(probe.gamma.representative());
            }
            continue;
        }
        let step: Result<ScaledVector> = match (&series, &mut current) {
            (Some(ev), _) => ev.point(n, LogScalar::ONE, &probe.series).map(|p| {
                max_ln_omitted = max_ln_omitted.max(p.ln_omitted);
                p.value
            }),
            (None, Some(cur)) => {
                if n > 0 {
                    op.apply_t_power_scaled(cur, 1).map(|next| {
                        *cur = next;
                        cur.clone()
                    })
                } else {
                    Ok(cur.clone())
                }
            }
            (None, None) => unreachable!(),
        };
        let point = match step {
            Ok(p) => p,
            Err(e) => {
                failure = Some((n, e));
                break;
            }
        };
        let mut fits = Vec::with_capacity(nt);
        for t in &probe.targets {
            match best_scalar_distance_scaled(&point, t.as_ref(), &space, &probe.gamma) {
                Ok(f) if f.distance.is_finite() => fits.push(f),
                Ok(_) => {
                    failure = Some((n, Error::NumericRange(format!("distance not finite at n = {n}"))));
                    break;
                }
                Err(e) => {
                    failure = Some((n, e));
                    break;
                }
            }
        }
        if failure.is_some() {
            break;
        }
        for (tr, f) in traces.iter_mut().zip(fits) {
            tr.distance.push(f.distance);
            tr.gamma.push(f.gamma);
        }
    }

    let (truncated, truncation_reason) = match failure {
        None => (false, None),
        Some((_, e @ (Error::NumericRange(_) | Error::TruncationBudget(_)))) => (true, Some(e.to_string())),
        Some((_, e)) => return Err(e),
    };
    let evaluated = traces[0].distance.len() as u64;
    if evaluated == 0 {
        return Err(Error::NumericRange("no iterate could be evaluated".into()));
    }
    let last_n = evaluated - 1;

    let mut records = Vec::with_capacity(nt * probe.epsilons.len());
    for tr in &traces {
        for &eps in &probe.epsilons {
            let hits: Vec<u64> = (0..evaluated).filter(|&n| tr.distance[n as usize] < eps).collect();
            let witness_gammas = hits.iter().map(|&n| (n, tr.gamma[n as usize])).collect();
            let visits = IndexSet::new(hits, last_n)?;
            let density = if last_n >= MIN_DENSITY_HORIZON {
                Some(density_report(&visits, None)?)
            } else {
                None
            };
            records.push(VisitRecord {
                target: tr.target,
                epsilon: eps,
                visits,
                density,
                witness_gammas,
            });
        }
    }
    Ok(ProbeReport {
        records,
        traces,
        last_n,
        death_index: death.filter(|&d| d <= h),
        truncated,
        truncation_reason,
        max_ln_omitted,
    })
}

/// Runs independent probes in parallel; results keep the input order.
pub fn run_probes(probes: &[OrbitProbe]) -> Vec<Result<ProbeReport>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = probes.iter().map(|p| scope.spawn(move || run_probe(p))).collect();
        handles.into_iter().map(|h| h.join().expect("probe thread panicked")).collect()
    })
}

/// `ln ||T^n start||` for `n = 0..=horizon`, `-inf` once the orbit dies.
pub fn orbit_norm_profile(op: &Operator, start: &Vector, horizon: u64) -> Result<Vec<f64>> {
    let space = op.space();
    space.check(start.as_ref())?;
    let death = op.death_index(start);
    let mut cur = ScaledVector::new(start.clone());
    let mut out = Vec::with_capacity(horizon as usize + 1);
    for n in 0..=horizon {
        if death.is_some_and(|d| n >= d) {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        if n > 0 {
            cur = op.apply_t_power_scaled(&cur, 1)?;
        }
        out.push(cur.ln_norm(&space)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftRow {
    pub m: u64,
    /// `||T^m z0 - z / beta||`.
    pub base_distance: f64,
    /// `||beta (T (+) Id)^m (z0, 1) - (z, beta)||`.
    pub lifted_distance: f64,
    /// `|lifted - |beta| base|`.
    pub identity_gap: f64,
    pub base_hit: bool,
    pub lifted_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftTargetReport {
    pub beta: Complex64,
    pub rows: Vec<LiftRow>,
    /// `m` with `base_distance < eps / |beta|`.
    pub base_set: Vec<u64>,
    /// `m` with `lifted_distance < eps`.
    pub lifted_set: Vec<u64>,
    pub implication_holds: bool,
    pub max_identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub eps: f64,
    pub targets: Vec<LiftTargetReport>,
    pub all_hold: bool,
}

/// Compares approximation by `T^m z0` in `X` with approximation by the lifted
/// orbit of `(z0, 1)` under `T (+) Id` in `X (+) C`.
pub fn lift_and_compare(
    op: &Operator,
    z0: &SparseVector,
    schedule: &IndexSet,
    targets: &[(SparseVector, Complex64)],
    eps: f64,
) -> Result<LiftReport> {
    if matches!(op, Operator::DirectSumId { .. }) {
        return Err(Error::InvalidParameter("pass the base operator; the lift is formed here".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::out_of_range("eps", eps, "(0, inf)"));
    }
    let space = op.space();
    let lifted = op.clone().with_identity()?;
    let lifted_space = lifted.space();
    space.check(VectorRef::Seq(z0))?;
    let one = Complex64::new(1.0, 0.0);
    let start = DirectSumVector::new(z0.clone(), one);
    let mut reports = Vec::with_capacity(targets.len());
    for (z, beta) in targets {
        if *beta == Complex64::new(0.0, 0.0) || !beta.norm().is_finite() {
            return Err(Error::InvalidParameter("lift target needs beta != 0".into()));
        }
        space.check(VectorRef::Seq(z))?;
        let b = beta.norm();
        let mut rows = Vec::with_capacity(schedule.len());
        for &m in schedule.elems() {
            let tz = op.apply_t_power(z0, m)?;
            let d_base = norm(&axpy(-one / beta, z, tz.sequence())?, &space)?;
            let lifted_point = match lifted.apply_t_power(&start, m)? {
                Vector::Sum(s) => s.scale(*beta),
                Vector::Seq(_) => unreachable!("direct sums map to direct sums"),
            };
            let diff = DirectSumVector::new(axpy(-one, z, &lifted_point.x)?, lifted_point.lambda - beta);
            let d_lift = norm(&diff, &lifted_space)?;
            rows.push(LiftRow {
                m,
                base_distance: d_base,
                lifted_distance: d_lift,
                identity_gap: (d_lift - b * d_base).abs(),
                base_hit: d_base < eps / b,
                lifted_hit: d_lift < eps,
            });
        }
        let base_set: Vec<u64> = rows.iter().filter(|r| r.base_hit).map(|r| r.m).collect();
        let lifted_set: Vec<u64> = rows.iter().filter(|r| r.lifted_hit).map(|r| r.m).collect();
        let implication_holds = rows.iter().all(|r| !r.base_hit || r.lifted_hit);
        let max_identity_gap = rows.iter().map(|r| r.identity_gap).fold(0.0, f64::max);
        reports.push(LiftTargetReport {
            beta: *beta,
            rows,
            base_set,
            lifted_set,
            implication_holds,
            max_identity_gap,
        });
    }
    let all_hold = reports.iter().all(|r| r.implication_holds);
    Ok(LiftReport {
        eps,
        targets: reports,
        all_hold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub n: u64,
    pub lambda: Complex64,
    /// `||lambda_n T^n x0 - x|| + |lambda_n lambda0 - lambda0|`.
    pub premise_value: f64,
    pub premise_holds: bool,
    /// `|lambda_n|^-1` against `j |lambda0| / (j |lambda0| - 1)`.
    pub inverse_bound_holds: bool,
    /// `||T^n x0 - x||` against `(||x|| + |lambda0|) / (j |lambda0| - 1)`.
    pub base_distance: f64,
    pub base_bound: f64,
    pub conclusion_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseAudit {
    pub j: u64,
    pub applicable: bool,
    pub rows: Vec<AuditRow>,
    pub consistent: bool,
}

/// Consistency audit of recorded witnesses `(n, lambda_n)` for `(x0, lambda0)`
/// approximating `(x, 1)` up to `1/j` under `T (+) Id`: wherever the premise
/// holds and `j |lambda0| > 1`, the derived bounds on `|lambda_n|^-1` and on
/// `||T^n x0 - x||` must hold too.
pub fn reverse_audit(
    op: &Operator,
    x0: &SparseVector,
    lambda0: Complex64,
    x: &SparseVector,
    j: u64,
    witnesses: &[(u64, Complex64)],
) -> Result<ReverseAudit> {
    if lambda0 == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("lambda0 = 0 cannot give a hypercyclic lift".into()));
    }
    if j == 0 {
        return Err(Error::out_of_range("j", 0.0, "[1, inf)"));
    }
    let space = op.space();
    let one = Complex64::new(1.0, 0.0);
    let jl = j as f64 * lambda0.norm();
    let applicable = jl > 1.0;
    let x_norm = norm(x, &space)?;
    let mut rows = Vec::with_capacity(witnesses.len());
    for &(n, lambda) in witnesses {
        let tx = op.apply_t_power(x0, n)?;
        let scaled = norm(&axpy(lambda, tx.sequence(), &x.scale(-one))?, &space)?;
        let premise_value = scaled + (lambda * lambda0 - lambda0).norm();
        let premise_holds = premise_value <= 1.0 / j as f64;
        let base_distance = norm(&axpy(-one, x, tx.sequence())?, &space)?;
        let base_bound = if applicable {
            (x_norm + lambda0.norm()) / (jl - 1.0)
        } else {
            f64::INFINITY
        };
        let inverse_bound_holds = !applicable || 1.0 / lambda.norm() <= jl / (jl - 1.0) * (1.0 + 1e-12);
        let conclusion_holds = base_distance <= base_bound * (1.0 + 1e-12);
        rows.push(AuditRow {
            n,
            lambda,
            premise_value,
            premise_holds,
            inverse_bound_holds,
            base_distance,
            base_bound,
            conclusion_holds,
        });
    }
    let consistent = rows
        .iter()
        .all(|r| !r.premise_holds || !applicable || (r.inverse_bound_holds && r.conclusion_holds));
    Ok(ReverseAudit {
        j,
        applicable,
        rows,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{preset, PresetParams, WeightRule};
    use crate::spaces::IndexDomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(t: &[(i64, f64, f64)]) -> SparseVector {
        SparseVector::from_triples(IndexDomain::Natural, t).unwrap()
    }

    fn probe(op: Operator, start: SparseVector, targets: Vec<SparseVector>, horizon: u64) -> OrbitProbe {
        OrbitProbe {
            op,
            start: OrbitStart::Vector(start.into()),
            gamma: GammaSpec::Finite {
                samples: vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.5)],
            },
            targets: targets.into_iter().map(Vector::from).collect(),
            epsilons: vec![0.1, 0.5],
            horizon,
            series: ConstructOptions::default(),
        }
    }

    #[test]
    fn start_equal_to_target_visits_at_zero() {
        let op = preset("geometric", &PresetParams::default()).unwrap();
        let x = seq(&[(1, 1.0, 0.0), (3, 0.5, 0.0)]);
        let r = run_probe(&probe(op, x.clone(), vec![x], 20)).unwrap();
        assert!(r.records.iter().all(|rec| rec.visits.contains(0)));
        assert_eq!(r.death_index, Some(3));
        assert!(r.records[0].density.is_none());
    }

    #[test]
    fn incremental_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = Operator::bilateral(
            WeightRule::Step {
                positive: 1.5,
                nonpositive: 0.8,
            },
            2.0,
        )
        .unwrap();
        let z = |rng: &mut ChaCha8Rng| {
            let t: Vec<(i64, f64, f64)> = (-1..=2).map(|i| (i, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            SparseVector::from_triples(IndexDomain::Integer, &t).unwrap()
        };
        let (x, y) = (z(&mut rng), z(&mut rng));
        let p = OrbitProbe {
            op: op.clone(),
            start: OrbitStart::Vector(x.clone().into()),
            gamma: GammaSpec::FullPlane,
            targets: vec![y.clone().into()],
            epsilons: vec![0.3, 0.9],
            horizon: 50,
            series: ConstructOptions::default(),
        };
        let r = run_probe(&p).unwrap();
        let space = op.space();
        for rec in &r.records {
            let brute: Vec<u64> = (0..=50)
                .filter(|&n| {
                    let v = op.apply_t_power(&x, n).unwrap();
                    crate::spaces::best_scalar_distance(&v, &y, &space, &p.gamma).unwrap().distance < rec.epsilon
                })
                .collect();
            assert_eq!(rec.visits.elems(), &brute[..]);
        }
        // monotone in epsilon
        assert!(r.records[0].visits.is_subset(&r.records[1].visits));
    }

    #[test]
    fn norm_profiles() {
        let iso = Operator::bilateral(WeightRule::constant(1.0), 2.0).unwrap();
        let e0 = SparseVector::basis(IndexDomain::Integer, 0).unwrap();
        let prof = orbit_norm_profile(&iso, &e0.clone().into(), 30).unwrap();
        assert!(prof.iter().all(|v| v.abs() < 1e-15));
        let eta = preset("prop59", &PresetParams::default()).unwrap();
        let prof = orbit_norm_profile(&eta, &e0.into(), 30).unwrap();
        assert!(prof.iter().all(|v| v.abs() < 1e-15));
        let bw = preset("geometric", &PresetParams::default()).unwrap();
        let prof = orbit_norm_profile(&bw, &seq(&[(1, 1.0, 0.0), (4, 1.0, 0.0)]).into(), 10).unwrap();
        assert!(prof[3].is_finite());
        assert!(prof[4..].iter().all(|v| *v == f64::NEG_INFINITY));
    }

    #[test]
    fn lifting_identity() {
        let op = preset("cor22c", &PresetParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut r3 = || -> SparseVector {
            let t: Vec<(i64, f64, f64)> = (1..=3).map(|i| (i, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            seq(&t)
        };
        let z0 = r3();
        let targets = vec![(r3(), Complex64::new(1.0, 0.0)), (r3(), Complex64::new(0.0, 2.0))];
        let sched = IndexSet::new((0..20).collect(), 20).unwrap();
        let rep = lift_and_compare(&op, &z0, &sched, &targets, 0.1).unwrap();
        assert!(rep.all_hold);
        for t in &rep.targets {
            assert!(t.max_identity_gap <= 1e-12);
            assert!(t.base_set.iter().all(|m| t.lifted_set.contains(m)));
        }
        // z = z0, beta = 1, m = 0
        let one = IndexSet::new(vec![0], 0).unwrap();
        let rep = lift_and_compare(&op, &z0, &one, &[(z0.clone(), Complex64::new(1.0, 0.0))], 1e-9).unwrap();
        assert_eq!(rep.targets[0].rows[0].lifted_distance, 0.0);
        assert!(lift_and_compare(&op, &z0, &one, &[(z0.clone(), Complex64::new(0.0, 0.0))], 0.1).is_err());
    }

    #[test]
    fn reverse_audit_on_exact_witnesses() {
        let op = preset("geometric", &PresetParams::default()).unwrap();
        let x0 = seq(&[(3, 1.0, 0.0)]);
        let x = seq(&[(1, 4.0, 0.0)]);
        // T^2 x0 = 4 e_1 exactly, so lambda = 1 gives a zero premise
        let a = reverse_audit(&op, &x0, Complex64::new(1.0, 0.0), &x, 10, &[(2, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(a.applicable && a.consistent && a.rows[0].premise_holds);
        assert_eq!(a.rows[0].base_distance, 0.0);
    }
}
