//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use hypershift::criterion::{
    check_criterion, construct_hypercyclic_vector, extract_exponential_subsequence, gen_ak_sequence, select_gamma_witnesses,
    weight_series_check, ConstructOptions, CriterionOptions, DenseSequence, GammaSequence, GammaSpec, SeriesClass,
    SeriesSide,
};
use hypershift::families::{
    banach_upper_density_est, generate_schedules, lower_density_est, upper_density_est, verify_separation, IndexSet,
};
use hypershift::operators::{preset, PresetParams, WeightRule};
use hypershift::orbit::{lift_and_compare, run_probe, OrbitProbe, OrbitStart};
use hypershift::spaces::{best_scalar_distance, IndexDomain, LogScalar, SparseVector, Vector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: f64) -> Result<Duration, String> {
    let d = t.elapsed();
    ensure(d.as_secs_f64() < limit, || format!("runtime {:.2}s exceeds {limit}s", d.as_secs_f64()))?;
    Ok(d)
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn c1_ak_sequence() -> Outcome {
    let t = Instant::now();
    let seq = gen_ak_sequence(200).map_err(e)?;
    ensure(seq.value(0) == 0.5, || format!("a_0 = {}", seq.value(0)))?;
    ensure(seq.log_values.windows(2).all(|w| w[1] < w[0]), || "not strictly decreasing".into())?;
    let mut worst = 0f64;
    for k in 0..200 {
        let r = seq.scaled_tail_ratio(k);
        ensure(r <= 1.0, || format!("tail bound fails at k = {k}: 2^k * ratio = {r}"))?;
        worst = worst.max(r);
    }
    let d = within(t, 1.0)?;
    Ok(format!("K=200, max 2^k*tail/a_k = {worst:.6}, {:.3}s", d.as_secs_f64()))
}

fn c2_schedules() -> Outcome {
    let t = Instant::now();
    let fam = generate_schedules(6, 100_000, 0.125).map_err(e)?;
    ensure(verify_separation(&fam), || "separation violated".into())?;
    let mut dens = Vec::new();
    for k in 1..=6 {
        let d = lower_density_est(fam.set(k)).map_err(e)?;
        let need = 8f64.powi(-(k as i32)) / 2.0;
        ensure(d >= need, || format!("A_{k}: lower density {d} < {need}"))?;
        dens.push(format!("{d:.3e}"));
    }
    let d = within(t, 5.0)?;
    Ok(format!("lower densities [{}], {:.3}s", dens.join(", "), d.as_secs_f64()))
}

fn c3_constructor() -> Outcome {
    let t = Instant::now();
    let h = 10_000u64;
    let op = preset("geometric", &PresetParams::default()).map_err(e)?;
    let gamma = GammaSpec::UnboundedGen {
        base: 2.0,
        min_exponent: 0,
        phase: 0.0,
    };
    let sel = select_gamma_witnesses(&gamma, op.as_pseudo_shift().unwrap(), h as usize + 2).map_err(e)?;
    let fam = generate_schedules(6, h, 0.25).map_err(e)?;
    let dense = DenseSequence::Diagonal { bound: 2, resolution: 1 }
        .take(IndexDomain::Natural, 6)
        .map_err(e)?;
    let opts = ConstructOptions::default();
    let plan = construct_hypercyclic_vector(&op, &sel.sequence, &fam, &dense, 6, h, &opts).map_err(e)?;
    let mut worst = f64::NEG_INFINITY;
    for r in &plan.residuals {
        let l = r.level as i32;
        let bound = 2.0 / 2f64.powi(l - 2) + 1.0 / 2f64.powi(l);
        let allowed = bound + 1e-6 + r.tail_bound;
        ensure(r.residual <= allowed, || format!("level {l}: residual {} > {allowed}", r.residual))?;
        worst = worst.max(r.residual - bound);
    }
    let d = within(t, 30.0)?;
    Ok(format!(
        "k = {:?}, max residual - bound = {worst:.3e}, {:.2}s",
        plan.chosen_k,
        d.as_secs_f64()
    ))
}

fn c4_prop59() -> Outcome {
    let t = Instant::now();
    let eta = 2.0;
    let delta = 0.9;
    let op = preset(
        "prop59",
        &PresetParams {
            eta: Some(eta),
            ..Default::default()
        },
    )
    .map_err(e)?;
    let opts = CriterionOptions::default();
    let seq = GammaSequence::geometric(LogScalar::ONE, delta, opts.r_max() + 1).map_err(e)?;
    let z = |t: &[(i64, f64, f64)]| SparseVector::from_triples(IndexDomain::Integer, t).unwrap();
    let ys = vec![
        z(&[(0, 1.0, 0.0)]),
        z(&[(1, 1.0, 0.0), (-2, 0.0, 1.0)]),
        z(&[(-1, 0.5, -0.5), (0, 0.25, 0.0), (2, -1.0, 0.0)]),
    ];
    let rep = check_criterion(&op, &seq, &ys, &opts).map_err(e)?;
    let limit = delta.max(1.0 / (delta * delta * eta)) + 0.05;
    let mut fits = Vec::new();
    for (i, v) in rep.vectors.iter().enumerate() {
        ensure(v.verdict.pass(), || format!("vector {i}: {:?}", v.verdict))?;
        let f = v.cond_ii_fit.ok_or_else(|| format!("vector {i}: no fit"))?;
        ensure(f.ratio <= limit && f.r_squared >= 0.99, || {
            format!("vector {i}: ratio {} (limit {limit}), R^2 {}", f.ratio, f.r_squared)
        })?;
        fits.push(format!("{:.4}/{:.4}", f.ratio, f.r_squared));
    }
    let d = within(t, 10.0)?;
    Ok(format!("(i)-(iii) hold, fit ratio/R^2 [{}], {:.2}s", fits.join(", "), d.as_secs_f64()))
}

fn c5_series() -> Outcome {
    let t = Instant::now();
    let n = 1_000_000;
    let r = weight_series_check(&WeightRule::Cor22c { p: 2.0 }, 2.0, SeriesSide::Unilateral, n).map_err(e)?;
    ensure(r.positive.class == SeriesClass::Diverging, || format!("harmonic case: {:?}", r.positive.class))?;
    let mut worst = 0f64;
    for &(k, ln_t) in &r.positive.samples {
        let want = 1.0 / (k as f64 + 1.0);
        let rel = (ln_t.exp() - want).abs() / want;
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-9, || format!("terms deviate from 1/(n+1) by {worst:e}"))?;
    let d1 = within(t, 5.0)?;
    let t = Instant::now();
    let r = weight_series_check(&WeightRule::constant(2.0), 2.0, SeriesSide::Unilateral, n).map_err(e)?;
    ensure(r.positive.class == SeriesClass::Converging, || format!("w = 2: {:?}", r.positive.class))?;
    let d2 = within(t, 5.0)?;
    Ok(format!(
        "harmonic diverging (max rel dev {worst:.1e}, {:.2}s), w=2 converging ({:.2}s)",
        d1.as_secs_f64(),
        d2.as_secs_f64()
    ))
}

fn c6_densities() -> Outcome {
    let h = 100_000u64;
    let t = Instant::now();
    let evens = IndexSet::new((0..=h).step_by(2).collect(), h).map_err(e)?;
    let lo = lower_density_est(&evens).map_err(e)?;
    let hi = upper_density_est(&evens).map_err(e)?;
    let ba = banach_upper_density_est(&evens, 316).map_err(e)?;
    // the extreme ratio 25001/50000 sits exactly on 0.5 + 2e-5 before rounding
    let tol = 2e-5 * (1.0 + 1e-9);
    for (name, v) in [("lower", lo), ("upper", hi), ("banach", ba)] {
        ensure((v - 0.5).abs() <= tol, || format!("evens {name} = {v}"))?;
    }
    within(t, 1.0)?;
    let t = Instant::now();
    let pow2 = IndexSet::new((0..17).map(|i| 1u64 << i).collect(), h).map_err(e)?;
    let up = upper_density_est(&pow2).map_err(e)?;
    ensure(up <= 4e-4, || format!("powers of two upper = {up}"))?;
    within(t, 1.0)?;
    let t = Instant::now();
    let mut blocks = Vec::new();
    let mut j = 0u32;
    while 4u64.pow(j) <= h {
        let s = 4u64.pow(j);
        blocks.extend((s..=s + j as u64).filter(|&n| n <= h));
        j += 1;
    }
    blocks.dedup();
    let block = IndexSet::new(blocks, h).map_err(e)?;
    let b = banach_upper_density_est(&block, 8).map_err(e)?;
    ensure(b == 1.0, || format!("block set banach = {b}"))?;
    within(t, 1.0)?;
    Ok(format!("evens {lo:.6}/{hi:.6}/{ba:.6}, powers of two upper {up:.2e}, blocks banach {b}"))
}

fn random_vec(rng: &mut ChaCha8Rng, domain: IndexDomain, dim: i64) -> SparseVector {
    let range: Vec<i64> = match domain {
        IndexDomain::Natural => (1..=dim).collect(),
        IndexDomain::Integer => (-(dim / 2)..=(dim - 1 - dim / 2)).collect(),
    };
    let t: Vec<(i64, f64, f64)> = range
        .into_iter()
        .map(|i| (i, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SparseVector::from_triples(domain, &t).unwrap()
}

fn c7_lifting() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ops = [
        preset("cor22c", &PresetParams::default()).map_err(e)?,
        preset("prop59", &PresetParams::default()).map_err(e)?,
        preset("geometric", &PresetParams::default()).map_err(e)?,
    ];
    let mut worst = 0f64;
    for draw in 0..1000 {
        let op = &ops[draw % ops.len()];
        let dom = op.domain();
        let z0 = random_vec(&mut rng, dom, 5);
        let z = random_vec(&mut rng, dom, 5);
        let beta = Complex64::from_polar(rng.gen_range(0.25..4.0), rng.gen_range(-3.1..3.1));
        let m = rng.gen_range(0..=30u64);
        let sched = IndexSet::new(vec![m], m.max(1)).map_err(e)?;
        let rep = lift_and_compare(op, &z0, &sched, &[(z, beta)], 0.5).map_err(e)?;
        let gap = rep.targets[0].max_identity_gap;
        ensure(gap <= 1e-12, || format!("draw {draw}: identity gap {gap:e}"))?;
        ensure(rep.all_hold, || format!("draw {draw}: implication fails"))?;
        worst = worst.max(gap);
    }
    let d = within(t, 2.0)?;
    Ok(format!("1000 draws, max gap {worst:.2e}, {:.3}s", d.as_secs_f64()))
}

fn c8_orbit_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ops = [
        preset("geometric", &PresetParams::default()).map_err(e)?,
        preset("cor22c", &PresetParams::default()).map_err(e)?,
        preset("prop59", &PresetParams::default()).map_err(e)?,
        preset(
            "eta-bilateral",
            &PresetParams {
                eta: Some(1.3),
                nonpositive: Some(0.9),
                ..Default::default()
            },
        )
        .map_err(e)?,
        preset("tu", &PresetParams::default()).map_err(e)?,
    ];
    let gammas = [
        GammaSpec::FullPlane,
        GammaSpec::Finite {
            samples: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-0.5, 0.0)],
        },
        GammaSpec::Geometric {
            alpha0: Complex64::new(4.0, 0.0),
            ratio: 0.5,
        },
        GammaSpec::UnboundedGen {
            base: 2.0,
            min_exponent: -4,
            phase: 0.0,
        },
        GammaSpec::Annulus { r_min: 0.5, r_max: 3.0 },
    ];
    let mut total_hits = 0usize;
    for i in 0..100 {
        let op = &ops[i % ops.len()];
        let gamma = gammas[(i / ops.len()) % gammas.len()].clone();
        let dom = op.domain();
        let dim = rng.gen_range(1..=4);
        let x = random_vec(&mut rng, dom, dim);
        let ydim = rng.gen_range(1..=4);
        let y = random_vec(&mut rng, dom, ydim);
        let probe = OrbitProbe {
            op: op.clone(),
            start: OrbitStart::Vector(x.clone().into()),
            gamma: gamma.clone(),
            targets: vec![y.clone().into()],
            epsilons: vec![rng.gen_range(0.3..1.5)],
            horizon: 50,
            series: ConstructOptions::default(),
        };
        let rep = run_probe(&probe).map_err(e)?;
        let space = op.space();
        let eps = probe.epsilons[0];
        let mut brute = Vec::new();
        for n in 0..=50u64 {
            let v: Vector = op.apply_t_power(&x, n).map_err(e)?;
            if best_scalar_distance(&v, &y, &space, &gamma).map_err(e)?.distance < eps {
                brute.push(n);
            }
        }
        let got = rep.records[0].visits.elems();
        ensure(got == &brute[..], || format!("probe {i}: incremental {got:?} vs brute force {brute:?}"))?;
        total_hits += brute.len();
    }
    let d = within(t, 2.0)?;
    Ok(format!("100 probes agree ({total_hits} visits in total), {:.3}s", d.as_secs_f64()))
}

fn c9_end_to_end() -> Outcome {
    let t = Instant::now();
    let h = 100_000u64;
    let op = preset("cor22c", &PresetParams { p: Some(2.0), ..Default::default() }).map_err(e)?;
    let gamma = GammaSpec::UnboundedGen {
        base: 2.0,
        min_exponent: 0,
        phase: 0.0,
    };
    let sel = select_gamma_witnesses(&gamma, op.as_pseudo_shift().unwrap(), h as usize + 2).map_err(e)?;
    let fam = generate_schedules(6, h, 0.25).map_err(e)?;
    let targets = vec![
        vec![(1, 1.0, 0.0)],
        vec![(1, -1.0, 0.0)],
        vec![(1, 0.0, 1.0)],
    ];
    let dense = DenseSequence::Cycle { targets: targets.clone() }
        .take(IndexDomain::Natural, 6)
        .map_err(e)?;
    let opts = ConstructOptions::default();
    let plan = construct_hypercyclic_vector(&op, &sel.sequence, &fam, &dense, 6, h, &opts).map_err(e)?;
    let probe = OrbitProbe {
        op: op.clone(),
        start: OrbitStart::Series(plan.x.clone()),
        gamma,
        targets: dense[..3].iter().cloned().map(Vector::from).collect(),
        epsilons: vec![0.25],
        horizon: h,
        series: opts,
    };
    let rep = run_probe(&probe).map_err(e)?;
    ensure(!rep.truncated, || format!("orbit truncated: {:?}", rep.truncation_reason))?;
    let mut dens = Vec::new();
    for r in &rep.records {
        let d = r.density.ok_or("no density")?.lower_est;
        ensure(d > 0.01, || format!("target {}: lower density {d}", r.target))?;
        dens.push(format!("{d:.4}"));
    }
    let d = within(t, 60.0)?;
    Ok(format!(
        "k = {:?}, lower densities [{}], {:.1}s",
        plan.chosen_k,
        dens.join(", "),
        d.as_secs_f64()
    ))
}

fn c10_extraction() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut picked = 0usize;
    for run in 0..50 {
        let delta: f64 = rng.gen_range(0.2..0.95);
        let len = rng.gen_range(50..400);
        let mut ln = vec![rng.gen_range(-2.0..2.0f64)];
        for _ in 1..len {
            let r: f64 = rng.gen_range(delta..(1.0 + delta) / 2.0);
            ln.push(ln.last().unwrap() + r.ln());
        }
        let alphas: Vec<Complex64> = ln
            .iter()
            .map(|l| Complex64::from_polar(l.exp(), rng.gen_range(-3.0..3.0)))
            .collect();
        let ex = extract_exponential_subsequence(&alphas, Some(delta)).map_err(e)?;
        for w in ex.indices.windows(2) {
            let r = alphas[w[1]].norm() / alphas[w[0]].norm();
            ensure(r >= delta * delta - 1e-12 && r <= delta + 1e-12, || {
                format!("run {run}: ratio {r} outside [{}, {delta}]", delta * delta)
            })?;
        }
        picked += ex.indices.len();
    }
    let d = within(t, 1.0)?;
    Ok(format!("50 runs, {picked} indices checked, {:.3}s", d.as_secs_f64()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("a_k sequence tail bound", c1_ak_sequence),
        ("schedule generation", c2_schedules),
        ("constructor residual bound", c3_constructor),
        ("bilateral eta-shift criterion", c4_prop59),
        ("weight series diagnostics", c5_series),
        ("density estimators", c6_densities),
        ("lifting identity", c7_lifting),
        ("orbit oracle equivalence", c8_orbit_oracle),
        ("end-to-end visit densities", c9_end_to_end),
        ("exponential subsequence extraction", c10_extraction),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
