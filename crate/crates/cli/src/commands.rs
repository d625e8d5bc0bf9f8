use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use hypershift::criterion::{
    check_criterion, construct_hypercyclic_vector, cover_gamma, cover_radius, gamma_diagnostics, weight_series_check,
    ConstructionPlan, GammaSpec, SeriesReport, SeriesSide, MAX_SERIES_TERMS,
};
use hypershift::families::{
    density_report, lower_density_est, verify_separation, DensityReport, IndexSet, ScheduleFamily, MIN_HORIZON,
};
use hypershift::operators::{Operator, PRESETS};
use hypershift::orbit::{run_probe, OrbitProbe, OrbitStart};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::{self, ConstructSpec};
use crate::output::{num, Meta, Outputs};
use crate::{Code, Failure, Globals, Run};

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        error: anyhow!("{msg}"),
    }
}

fn out_dir(g: &Globals, cfg: &Option<PathBuf>, base: &Path) -> PathBuf {
    match (&g.out, cfg) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => config::resolve(base, o),
        (None, None) => PathBuf::from("."),
    }
}

fn report(outputs: &Outputs) {
    for p in outputs.written() {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct DensitiesDoc<'a> {
    set_file: String,
    elements: usize,
    report: &'a DensityReport,
}

pub fn densities(g: &Globals, set_file: Option<PathBuf>, window: Option<u64>) -> Run {
    let (mut cfg, base): (config::DensitiesConfig, _) = config::load(g.config.as_deref()).code(2)?;
    let path = match (set_file, &cfg.set_file) {
        (Some(p), _) => p,
        (None, Some(p)) => config::resolve(&base, p),
        (None, None) => return Err(fail(2, "no index set file given")),
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .code(2)?;
    let horizon = g.horizon.or(cfg.horizon);
    let parsed = IndexSet::parse(&text, horizon)
        .with_context(|| format!("in {}", path.display()))
        .code(2)?;
    let set = match horizon {
        Some(_) => parsed,
        None => IndexSet::new(parsed.elems().to_vec(), parsed.horizon().max(MIN_HORIZON)).code(2)?,
    };
    let rep = density_report(&set, window.or(cfg.window)).code(2)?;

    cfg.set_file = Some(path.clone());
    cfg.horizon = Some(set.horizon());
    cfg.window = Some(rep.window_s);
    let mut meta = Meta::new("densities", &(&cfg, &text)).code(1)?;
    meta.horizon = Some(rep.horizon);
    meta.tolerances.push(("window", rep.window_s.to_string()));
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    let doc = DensitiesDoc {
        set_file: path.display().to_string(),
        elements: set.len(),
        report: &rep,
    };
    outputs.json("densities.json", &doc).code(1)?;
    outputs
        .csv(
            "densities.csv",
            &["horizon", "window_s", "elements", "lower_est", "upper_est", "banach_upper_est"],
            [vec![
                rep.horizon.to_string(),
                rep.window_s.to_string(),
                set.len().to_string(),
                num(rep.lower_est),
                num(rep.upper_est),
                num(rep.banach_upper_est),
            ]],
        )
        .code(1)?;
    println!(
        "lower {:.6} upper {:.6} banach_upper {:.6} (horizon {}, window {})",
        rep.lower_est, rep.upper_est, rep.banach_upper_est, rep.horizon, rep.window_s
    );
    report(&outputs);
    Ok(())
}

#[derive(Serialize)]
struct ScheduleSummary {
    k: usize,
    target_density: f64,
    elements: usize,
    lower_density_est: f64,
}

pub fn schedules(g: &Globals, k: Option<usize>, base_density: Option<f64>) -> Run {
    let (mut cfg, base): (config::SchedulesConfig, _) = config::load(g.config.as_deref()).code(2)?;
    let k = k.or(cfg.k).unwrap_or(6);
    let b = base_density.or(cfg.base_density).unwrap_or(0.125);
    let h = g.horizon.or(cfg.horizon).unwrap_or(100_000);
    let fam = hypershift::families::generate_schedules(k, h, b).code(3)?;
    if !verify_separation(&fam) {
        return Err(fail(3, "generated schedules failed the separation check"));
    }
    (cfg.k, cfg.base_density, cfg.horizon) = (Some(k), Some(b), Some(h));
    let mut meta = Meta::new("schedules", &cfg).code(1)?;
    meta.horizon = Some(h);
    meta.tolerances.push(("base_density", num(b)));
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    outputs.json("schedules.json", &fam).code(1)?;
    outputs
        .csv(
            "schedules.csv",
            &["n", "set"],
            fam.labelled_union().into_iter().map(|(n, k)| vec![n.to_string(), k.to_string()]),
        )
        .code(1)?;
    let summary = (1..=fam.len())
        .map(|i| {
            let a = fam.set(i);
            Ok(ScheduleSummary {
                k: i,
                target_density: fam.target_densities[i - 1],
                elements: a.len(),
                lower_density_est: lower_density_est(a)?,
            })
        })
        .collect::<hypershift::Result<Vec<_>>>()
        .code(3)?;
    outputs
        .csv(
            "schedule_densities.csv",
            &["k", "target_density", "elements", "lower_density_est"],
            summary.iter().map(|s| {
                vec![s.k.to_string(), num(s.target_density), s.elements.to_string(), num(s.lower_density_est)]
            }),
        )
        .code(1)?;
    for s in &summary {
        println!(
            "A_{}: {} elements, lower density {:.3e} (target {:.3e})",
            s.k, s.elements, s.lower_density_est, s.target_density
        );
    }
    report(&outputs);
    Ok(())
}

pub fn criterion(g: &Globals) -> Run {
    let (mut cfg, base): (config::CriterionConfig, _) = config::load(g.config.as_deref()).code(2)?;
    let op = cfg.operator.build().code(2)?;
    if let Some(seed) = g.seed.or(cfg.seed) {
        cfg.options.seed = seed;
    }
    let opts = cfg.options.clone();
    let seq_cfg = cfg.sequence.as_ref().ok_or_else(|| fail(2, "config needs a [sequence] table"))?;
    let seq = seq_cfg.build(&op, opts.r_max() + 1).code(2)?;
    if cfg.targets.is_empty() {
        return Err(fail(2, "config needs at least one entry in `targets`"));
    }
    let ys = cfg
        .targets
        .iter()
        .map(|t| config::sparse(op.domain(), t))
        .collect::<anyhow::Result<Vec<_>>>()
        .code(2)?;
    let rep = check_criterion(&op, &seq, &ys, &opts).code(1)?;

    let mut meta = Meta::new("criterion", &cfg).code(1)?;
    meta.seed = Some(opts.seed);
    meta.tolerances = vec![
        ("tol_i", num(opts.tol_i)),
        ("tol_ii", num(opts.tol_ii)),
        ("tol_iii", num(opts.tol_iii)),
        ("m_max", opts.m_max.to_string()),
        ("tail_len", opts.tail_len.to_string()),
    ];
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    outputs.json("criterion.json", &rep).code(1)?;
    for (i, v) in rep.vectors.iter().enumerate() {
        let rows = (0..v.cond_i_tail.len()).map(|m| {
            let ii = |c: &Vec<f64>| if m == 0 { String::new() } else { c.get(m - 1).map(|&x| num(x)).unwrap_or_default() };
            vec![
                m.to_string(),
                num(v.cond_i_tail[m]),
                ii(&v.cond_ii_curve),
                ii(&v.cond_ii_first),
                ii(&v.cond_ii_second),
                ii(&v.cond_ii_ln),
            ]
        });
        outputs
            .csv(
                &format!("criterion_y{i}.csv"),
                &["m", "cond_i_tail", "cond_ii", "cond_ii_first", "cond_ii_second", "cond_ii_ln"],
                rows,
            )
            .code(1)?;
        let fit = v
            .cond_ii_fit
            .map(|f| format!(", (ii) fit ratio {:.4} r2 {:.4}", f.ratio, f.r_squared))
            .unwrap_or_default();
        println!(
            "y{i}: (i) {} (ii) {} (iii) {}{fit}",
            v.verdict.cond_i, v.verdict.cond_ii, v.verdict.cond_iii
        );
    }
    report(&outputs);
    if g.strict && !rep.pass() {
        return Err(fail(4, "criterion conditions not met"));
    }
    Ok(())
}

fn build_plan(op: &Operator, spec: &ConstructSpec, h: u64, base: &Path) -> Result<ConstructionPlan, Failure> {
    let seq = spec.sequence.build(op, h as usize + 2).code(2)?;
    let fam: ScheduleFamily = match spec.schedules.load_file(base).code(2)? {
        Some(f) => f,
        None => spec.schedules.generate(h).code(3)?,
    };
    let dense = spec.dense.take(op.domain(), spec.levels).code(2)?;
    construct_hypercyclic_vector(op, &seq, &fam, &dense, spec.levels, h, &spec.options).code(5)
}

pub fn construct(g: &Globals) -> Run {
    let (mut cfg, base): (config::ConstructConfig, _) = config::load(g.config.as_deref()).code(2)?;
    let op = cfg.operator.build().code(2)?;
    let spec = cfg.construct.clone().ok_or_else(|| fail(2, "config needs a [construct] table"))?;
    let h = g.horizon.or(cfg.horizon).unwrap_or(10_000);
    cfg.horizon = Some(h);
    let plan = build_plan(&op, &spec, h, &base)?;

    let mut meta = Meta::new("construct", &cfg).code(1)?;
    meta.horizon = Some(h);
    meta.tolerances = vec![
        ("slack", num(spec.options.slack)),
        ("window_drop", num(spec.options.window_drop)),
    ];
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    outputs.json("construction.json", &plan).code(1)?;
    outputs
        .csv(
            "residuals.csv",
            &[
                "level",
                "k",
                "residual",
                "bound",
                "slack",
                "tail_bound",
                "inverse_residual",
                "worst_q",
                "points",
                "pass",
            ],
            plan.residuals.iter().map(|r| {
                vec![
                    r.level.to_string(),
                    r.k.to_string(),
                    num(r.residual),
                    num(r.bound),
                    num(r.slack),
                    num(r.tail_bound),
                    num(r.inverse_residual),
                    r.worst_q.map(|q| q.to_string()).unwrap_or_default(),
                    r.points.to_string(),
                    (r.pass as u8).to_string(),
                ]
            }),
        )
        .code(1)?;
    outputs
        .csv(
            "checks.csv",
            &[
                "level",
                "tail",
                "tail_bound",
                "self_cross",
                "self_cross_bound",
                "earlier_cross",
                "inverse",
                "inverse_bound",
            ],
            plan.checks.iter().enumerate().map(|(i, c)| {
                vec![
                    (i + 1).to_string(),
                    num(c.tail),
                    num(c.tail_bound),
                    num(c.self_cross),
                    num(c.self_cross_bound),
                    num(c.earlier_cross),
                    num(c.inverse),
                    num(c.inverse_bound),
                ]
            }),
        )
        .code(1)?;
    for r in &plan.residuals {
        println!(
            "level {}: k = {}, residual {:.3e} <= bound {:.3e} + slack {:.1e}: {}",
            r.level, r.k, r.residual, r.bound, r.slack, r.pass
        );
    }
    report(&outputs);
    if !plan.pass() {
        return Err(fail(5, "a level residual exceeds its bound"));
    }
    Ok(())
}

#[derive(Serialize)]
struct RecordSummary {
    target: usize,
    epsilon: f64,
    visits: usize,
    first_visit: Option<u64>,
    /// A visit exists, so the scaled orbit meets this ball.
    supercyclic_evidence: bool,
    density: Option<DensityReport>,
}

#[derive(Serialize)]
struct OrbitSummary {
    horizon: u64,
    last_n: u64,
    death_index: Option<u64>,
    truncated: bool,
    truncation_reason: Option<String>,
    max_ln_omitted: Option<f64>,
    chosen_k: Option<Vec<usize>>,
    records: Vec<RecordSummary>,
}

pub fn orbit(g: &Globals) -> Run {
    let (mut cfg, base): (config::OrbitConfig, _) = config::load(g.config.as_deref()).code(2)?;
    let op = cfg.operator.build().code(2)?;
    let gamma = cfg.gamma.clone().ok_or_else(|| fail(2, "config needs `gamma`"))?;
    let h = g.horizon.or(cfg.horizon).unwrap_or(1000);
    cfg.horizon = Some(h);
    if cfg.epsilons.is_empty() {
        cfg.epsilons = vec![0.25];
    }
    if cfg.targets.is_empty() {
        return Err(fail(2, "config needs at least one entry in `targets`"));
    }
    let start_cfg = cfg.start.clone().ok_or_else(|| fail(2, "config needs a [start] table"))?;
    let (start, series, chosen_k) = match (&start_cfg.vector, &start_cfg.construct) {
        (Some(v), None) => (
            OrbitStart::Vector(config::vector(&op, v, start_cfg.lambda).code(2)?),
            Default::default(),
            None,
        ),
        (None, Some(spec)) => {
            let plan = build_plan(&op, spec, h, &base)?;
            (OrbitStart::Series(plan.x), spec.options.clone(), Some(plan.chosen_k))
        }
        _ => return Err(fail(2, "[start] takes exactly one of `vector` and `construct`")),
    };
    let targets = cfg
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| config::vector(&op, t, cfg.target_lambdas.get(i).copied()))
        .collect::<anyhow::Result<Vec<_>>>()
        .code(2)?;
    let probe = OrbitProbe {
        op,
        start,
        gamma,
        targets,
        epsilons: cfg.epsilons.clone(),
        horizon: h,
        series,
    };
    let rep = run_probe(&probe).code(2)?;

    let mut meta = Meta::new("orbit", &cfg).code(1)?;
    meta.horizon = Some(h);
    meta.tolerances = vec![(
        "epsilons",
        cfg.epsilons.iter().map(|&e| num(e)).collect::<Vec<_>>().join(" "),
    )];
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    let mut records = Vec::new();
    for r in &rep.records {
        let j = cfg.epsilons.iter().position(|&e| e == r.epsilon).unwrap_or(0);
        let tr = &rep.traces[r.target];
        let rows = (0..=rep.last_n).map(|n| {
            let i = n as usize;
            let z = tr.gamma[i].to_complex();
            vec![
                n.to_string(),
                (r.visits.contains(n) as u8).to_string(),
                num(z.re),
                num(z.im),
                num(tr.gamma[i].ln_abs),
                num(tr.distance[i]),
            ]
        });
        outputs
            .csv(
                &format!("orbit_target{}_eps{j}.csv", r.target),
                &["n", "hit", "witness_gamma_re", "witness_gamma_im", "witness_ln_abs", "distance"],
                rows,
            )
            .code(1)?;
        outputs
            .write(&format!("visits_target{}_eps{j}.txt", r.target), r.visits.to_text().as_bytes())
            .code(1)?;
        records.push(RecordSummary {
            target: r.target,
            epsilon: r.epsilon,
            visits: r.visits.len(),
            first_visit: r.visits.elems().first().copied(),
            supercyclic_evidence: !r.visits.is_empty(),
            density: r.density,
        });
    }
    let summary = OrbitSummary {
        horizon: h,
        last_n: rep.last_n,
        death_index: rep.death_index,
        truncated: rep.truncated,
        truncation_reason: rep.truncation_reason.clone(),
        max_ln_omitted: rep.max_ln_omitted.is_finite().then_some(rep.max_ln_omitted),
        chosen_k,
        records,
    };
    outputs.json("orbit.json", &summary).code(1)?;
    for r in &summary.records {
        let d = r
            .density
            .map(|d| format!(", lower density {:.4}", d.lower_est))
            .unwrap_or_default();
        println!("target {} eps {}: {} visits{d}", r.target, r.epsilon, r.visits);
    }
    report(&outputs);
    if rep.truncated {
        let why = rep.truncation_reason.unwrap_or_default();
        eprintln!("warning: orbit truncated at n = {}: {why}", rep.last_n);
        if g.strict {
            return Err(fail(6, format!("orbit truncated at n = {}", rep.last_n)));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CoverDoc {
    delta: f64,
    cells: Vec<hypershift::criterion::CoverCell>,
    checks: usize,
    max_distance: f64,
    covered: bool,
}

#[derive(Serialize)]
struct GammaDoc {
    gamma: Option<GammaSpec>,
    diagnostics: Option<hypershift::criterion::GammaDiagnostics>,
    cover: Option<CoverDoc>,
    series: Option<hypershift::criterion::WeightSeriesReport>,
}

fn series_inputs(op: &Operator) -> anyhow::Result<(hypershift::operators::WeightRule, f64, SeriesSide)> {
    match op {
        Operator::PseudoShift(s) => {
            let p = s.space.exponent().context("weight series need an lp space")?;
            Ok((s.weights.clone(), p, SeriesSide::Unilateral))
        }
        Operator::Bilateral(b) => Ok((b.weights.clone(), b.p, SeriesSide::Bilateral)),
        Operator::DirectSumId { inner } => series_inputs(inner),
    }
}

fn cover_checks(gamma: &GammaSpec, count: usize, seed: u64) -> Vec<Complex64> {
    match gamma {
        GammaSpec::Annulus { r_min, r_max } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let r = rng.gen_range(*r_min..=*r_max);
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex64::from_polar(r, t)
                })
                .collect()
        }
        _ => gamma.sample(count),
    }
}

pub fn gamma(g: &Globals) -> Run {
    let (mut cfg, base): (config::GammaConfig, _) = config::load(g.config.as_deref()).code(2)?;
    if cfg.gamma.is_none() && cfg.series.is_none() {
        return Err(fail(2, "config needs `gamma`, a [series] table, or both"));
    }
    let seed = g.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    let budget = cfg.budget.unwrap_or(1000);
    let diagnostics = cfg.gamma.as_ref().map(|gm| gamma_diagnostics(gm, budget)).transpose().code(2)?;
    let cover = match (&cfg.gamma, cfg.cover_delta) {
        (Some(gm), Some(delta)) => {
            let cells = cover_gamma(gm, delta).code(2)?;
            let checks = cover_checks(gm, cfg.cover_checks.unwrap_or(10_000), seed);
            let max_distance = cover_radius(&cells, &checks);
            Some(CoverDoc {
                delta,
                cells,
                checks: checks.len(),
                max_distance,
                covered: max_distance < delta,
            })
        }
        (None, Some(_)) => return Err(fail(2, "`cover_delta` needs `gamma`")),
        _ => None,
    };
    let series = match &cfg.series {
        Some(s) => {
            let op = s.operator.build().code(2)?;
            let (w, p, side) = series_inputs(&op).code(2)?;
            let n = s.terms.unwrap_or(1_000_000);
            if n > MAX_SERIES_TERMS {
                return Err(fail(2, format!("series terms {n} exceed {MAX_SERIES_TERMS}")));
            }
            Some(weight_series_check(&w, p, side, n).code(2)?)
        }
        None => None,
    };

    let mut meta = Meta::new("gamma", &cfg).code(1)?;
    meta.seed = Some(seed);
    meta.horizon = cfg.series.as_ref().map(|s| s.terms.unwrap_or(1_000_000));
    if let Some(d) = cfg.cover_delta {
        meta.tolerances.push(("cover_delta", num(d)));
    }
    let mut outputs = Outputs::new(&out_dir(g, &cfg.out, &base), meta).code(1)?;
    if let Some(ns) = diagnostics.as_ref().and_then(|d| d.null_sequence.as_ref()) {
        let rows = ns.ln_moduli.iter().enumerate().map(|(j, &l)| {
            let ratio = if j == 0 { String::new() } else { ns.ratios.get(j - 1).map(|&r| num(r)).unwrap_or_default() };
            vec![j.to_string(), num(l), ratio]
        });
        outputs.csv("gamma_null.csv", &["j", "ln_modulus", "ratio"], rows).code(1)?;
    }
    if let Some(s) = &series {
        let side = |name: &'static str, r: &SeriesReport| {
            r.samples
                .iter()
                .map(move |&(n, l)| vec![name.to_string(), n.to_string(), num(l)])
                .collect::<Vec<_>>()
        };
        let mut rows = side("positive", &s.positive);
        if let Some(neg) = &s.negative {
            rows.extend(side("negative", neg));
        }
        outputs.csv("series_samples.csv", &["side", "n", "ln_term"], rows).code(1)?;
    }
    let doc = GammaDoc {
        gamma: cfg.gamma.clone(),
        diagnostics,
        cover,
        series,
    };
    outputs.json("gamma.json", &doc).code(1)?;
    if let Some(d) = &doc.diagnostics {
        println!(
            "bounded {} away_from_zero {} sufficient_condition {} obstruction {}",
            d.bounded, d.away_from_zero, d.sufficient_condition, d.obstruction
        );
    }
    if let Some(c) = &doc.cover {
        println!("cover: {} cells, max distance {:.4} < {}: {}", c.cells.len(), c.max_distance, c.delta, c.covered);
    }
    if let Some(s) = &doc.series {
        println!("positive series: {:?}", s.positive.class);
        if let Some(n) = &s.negative {
            println!("negative series: {:?}", n.class);
        }
    }
    report(&outputs);
    Ok(())
}

pub fn presets() -> Run {
    for (name, desc) in PRESETS {
        println!("{name:<14} {desc}");
    }
    println!();
    println!("Parameters (table [operator.params]): p, c0, eta, nonpositive, v, u_scale, u_ratio");
    Ok(())
}
