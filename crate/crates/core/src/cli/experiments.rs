use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use crate::analysis::gap_slope_vs_beta;
use crate::annealing::{schedule_constants, success_probability, CoolingSchedule, SuccessCurve, ThresholdPolicy};
use crate::chain::{build_mh_generator, hitting_time_mc, mean_hitting_times, simulate_ctmc, FiniteLandscape};
use crate::cli::config::{Experiment, ExperimentConfig, PolicyKind, ScheduleChoice};
use crate::cli::table::{num, opt, Table};
use crate::curie_weiss::rfcw::{PointKind, RandomFieldCw};
use crate::curie_weiss::{
    classical_wells, convexification_check, crossover_time, CurieWeiss, Stationarity, Variant,
};
use crate::ehrenfest::{gap_bounds_report, log_classical_bound, log_modified_bound};
use crate::error::{Error, Result};
use crate::stats::mean_and_stderr;
use crate::transform::{Family, TransformSpec};

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn csv(name: &str, table: &Table) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            bytes: table.to_csv()?,
        })
    }
}

/// Runs the configured experiment in memory. `base` resolves relative paths.
pub fn execute(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    match cfg.experiment {
        Experiment::CwFigures => cw_figures(cfg),
        Experiment::CwCrossover => cw_crossover(cfg),
        Experiment::CwRfcw => cw_rfcw(cfg),
        Experiment::EhrenfestGaps => ehrenfest_gaps(cfg),
        Experiment::SpectralSlope => spectral_slope(cfg, base),
        Experiment::AnnealCompare => anneal_compare(cfg, base),
        Experiment::MhSample => mh_sample(cfg, base),
    }
}

fn family(s: &str) -> Result<Family> {
    s.parse()
}

fn stationarity(k: Stationarity) -> &'static str {
    match k {
        Stationarity::Minimum => "minimum",
        Stationarity::Maximum => "maximum",
        Stationarity::Degenerate => "degenerate",
    }
}

fn cw_variants(cfg: &ExperimentConfig) -> Result<Vec<(String, String, Variant)>> {
    let fam = family(&cfg.curie_weiss.family)?;
    let mut out = vec![("classical".to_string(), String::new(), Variant::Classical)];
    for &c in &cfg.curie_weiss.thresholds {
        out.push((
            "modified".into(),
            num(c),
            Variant::Modified {
                family: fam.clone(),
                c,
            },
        ));
    }
    Ok(out)
}

fn cw_figures(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.curie_weiss;
    let cw = CurieWeiss::new(s.beta, s.h)?;
    let g = s.grid_points;
    let grid: Vec<f64> = (0..g).map(|k| -1.0 + 2.0 * k as f64 / (g - 1) as f64).collect();
    let (eps, d) = (cw.epsilon(), cw.reference_level());

    let mut free = Table::new(&["curve", "c", "m", "value"]);
    let mut field = Table::new(&["curve", "c", "m", "rhs"]);
    let mut roots = Table::new(&["curve", "c", "m", "kind", "energy", "residual"]);
    for (curve, c, variant) in cw_variants(cfg)? {
        let shifted = matches!(variant, Variant::Modified { .. });
        let name = if shifted { "modified_shifted" } else { "classical" };
        for &m in &grid {
            let v = cw.free_energy(&variant, m)?;
            let v = if shifted { eps * v + d } else { v };
            free.row(vec![name.into(), c.clone(), num(m), num(v)]);
            field.row(vec![curve.clone(), c.clone(), num(m), num(cw.mean_field_rhs(&variant, m)?)]);
        }
        for r in cw.solve_mean_field(&variant, 1e-12)?.roots {
            roots.row(vec![
                curve.clone(),
                c.clone(),
                num(r.m),
                stationarity(r.kind).into(),
                num(cw.energy(r.m)?),
                num(r.residual),
            ]);
        }
    }

    let fam = family(&s.family)?;
    let mut conv = Table::new(&[
        "c",
        "threshold_between_wells",
        "threshold_below_peak",
        "interval_left_of_saddle",
        "residual_positive",
        "all_pass",
        "modified_roots",
    ]);
    for &c in &s.thresholds {
        let rep = convexification_check(&cw, &fam, c)?;
        let n_roots = cw
            .solve_mean_field(&Variant::Modified { family: fam.clone(), c }, 1e-12)?
            .roots
            .len();
        conv.row(vec![
            num(c),
            rep.threshold_between_wells.to_string(),
            rep.threshold_below_peak.to_string(),
            rep.interval_left_of_saddle.to_string(),
            rep.residual_positive.to_string(),
            rep.all_pass().to_string(),
            n_roots.to_string(),
        ]);
    }
    Ok(vec![
        Artifact::csv("free_energy.csv", &free)?,
        Artifact::csv("mean_field.csv", &field)?,
        Artifact::csv("roots.csv", &roots)?,
        Artifact::csv("convexification.csv", &conv)?,
    ])
}

fn cw_crossover(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.curie_weiss;
    let cw = CurieWeiss::new(s.beta, s.h)?;
    let (_, m_plus, z) = classical_wells(&cw)?;
    let barrier = s.beta * (cw.free_energy(&Variant::Classical, z)? - cw.free_energy(&Variant::Classical, m_plus)?);
    let jobs: Vec<(String, String, Variant, usize)> = cw_variants(cfg)?
        .into_iter()
        .flat_map(|(curve, c, v)| s.sizes.iter().map(move |&n| (curve.clone(), c.clone(), v.clone(), n)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|(_, _, v, n)| crossover_time(&cw, v, *n))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "curve",
        "c",
        "n",
        "from",
        "to",
        "log_exact",
        "scaled_log_exact",
        "log_eyring_kramers",
        "saddle",
        "classical_barrier",
    ]);
    for ((curve, c, _, n), x) in jobs.iter().zip(results) {
        t.row(vec![
            curve.clone(),
            c.clone(),
            n.to_string(),
            num(x.from),
            num(x.to),
            num(x.log_exact),
            num(x.log_exact / *n as f64),
            opt(x.log_eyring_kramers),
            opt(x.saddle),
            num(barrier),
        ]);
    }
    Ok(vec![Artifact::csv("crossover.csv", &t)?])
}

fn point_kind(k: PointKind) -> &'static str {
    match k {
        PointKind::Minimum => "minimum",
        PointKind::Saddle => "saddle",
        PointKind::Maximum => "maximum",
    }
}

fn cw_rfcw(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.rfcw;
    let rf = RandomFieldCw::new(s.theta, s.beta)?;
    let fam = family(&s.family)?;
    let (m0, m1, m2) = rf.closed_form_points()?;
    let thresholds = match &s.thresholds {
        Some(t) => t.clone(),
        None => {
            let (lo, hi) = (rf.energy(m1), rf.energy(m0));
            (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
        }
    };
    let mut closed = Table::new(&["point", "m_plus", "m_minus", "energy"]);
    for (name, p) in [("m0", m0), ("m1", m1), ("m2", m2)] {
        closed.row(vec![name.into(), num(p[0]), num(p[1]), num(rf.energy(p))]);
    }
    let mut variants = vec![("classical".to_string(), String::new(), Variant::Classical)];
    for &c in &thresholds {
        variants.push(("modified".into(), num(c), Variant::Modified { family: fam.clone(), c }));
    }
    let mut points = Table::new(&["curve", "c", "m_plus", "m_minus", "kind", "residual"]);
    let mut barriers = Table::new(&["curve", "c", "to_saddle", "between_minima", "beta_times_classical"]);
    let classical = rf.barrier(&Variant::Classical, s.grid)?;
    let computed = variants
        .par_iter()
        .map(|(_, _, v)| Ok((rf.critical_points(v)?, rf.barrier(v, s.grid)?)))
        .collect::<Result<Vec<_>>>()?;
    for ((curve, c, _), (pts, b)) in variants.iter().zip(computed) {
        for p in pts {
            points.row(vec![
                curve.clone(),
                c.clone(),
                num(p.m[0]),
                num(p.m[1]),
                point_kind(p.kind).into(),
                num(p.residual),
            ]);
        }
        barriers.row(vec![
            curve.clone(),
            c.clone(),
            num(b.to_saddle),
            num(b.between_minima),
            num(s.beta * classical.to_saddle),
        ]);
    }
    Ok(vec![
        Artifact::csv("closed_form.csv", &closed)?,
        Artifact::csv("critical_points.csv", &points)?,
        Artifact::csv("barrier.csv", &barriers)?,
    ])
}

fn ehrenfest_gaps(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.ehrenfest;
    let exact_ds: Vec<usize> = (s.d_min..=s.d_max).collect();
    let exact = gap_bounds_report(&exact_ds, s.beta, true)?;
    let bound_ds: Vec<usize> = (s.bounds_d_min..=s.bounds_d_max).step_by(s.bounds_step).collect();
    let bounds = gap_bounds_report(&bound_ds, s.beta, false)?;

    let mut gaps = Table::new(&[
        "d",
        "beta",
        "lambda2_classical",
        "bound_classical",
        "lambda2_modified",
        "bound_modified",
        "lambda2_proposal",
        "classical_ok",
        "modified_ok",
    ]);
    for r in &exact.rows {
        let flag = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
        gaps.row(vec![
            r.d.to_string(),
            num(r.beta),
            opt(r.lambda2_classical),
            num(r.bound_classical),
            opt(r.lambda2_modified),
            num(r.bound_modified),
            opt(r.lambda2_proposal),
            flag(r.classical_ok()),
            flag(r.modified_ok()),
        ]);
    }
    let mut bt = Table::new(&["d", "beta", "log_bound_classical", "log_bound_modified"]);
    for r in &bounds.rows {
        bt.row(vec![
            r.d.to_string(),
            num(r.beta),
            num(log_classical_bound(r.d, r.beta)),
            num(log_modified_bound(r.d, r.beta)),
        ]);
    }
    let mut fit = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("classical_log_slope", exact.classical_fit.slope),
        ("classical_log_intercept", exact.classical_fit.intercept),
        ("classical_r_squared", exact.classical_fit.r_squared),
        ("modified_exponent", bounds.modified_fit.slope),
        ("modified_r_squared", bounds.modified_fit.r_squared),
        ("cubic_residual", bounds.cubic_residual),
    ] {
        fit.row(vec![k.into(), num(v)]);
    }
    Ok(vec![
        Artifact::csv("gaps.csv", &gaps)?,
        Artifact::csv("bounds.csv", &bt)?,
        Artifact::csv("fit.csv", &fit)?,
    ])
}

fn threshold(cfg: &ExperimentConfig, land: &FiniteLandscape) -> f64 {
    cfg.policy.c.unwrap_or_else(|| land.h_min())
}

/// Threshold clamped into the energy range, with a warning when it moves.
pub(crate) fn clamped_threshold(cfg: &ExperimentConfig, land: &FiniteLandscape) -> (f64, bool) {
    let c = threshold(cfg, land);
    let k = c.clamp(land.h_min(), land.h_max());
    (k, k != c)
}

fn spectral_slope(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    let land = cfg.landscape.resolve(base)?;
    let fam = family(&cfg.transform.family)?;
    let (c, moved) = clamped_threshold(cfg, &land);
    if moved {
        warn!("policy.c clamped to {c}");
    }
    let rep = gap_slope_vs_beta(&land, &fam, c, &cfg.slope.betas)?;
    let mut gaps = Table::new(&["beta", "lambda2", "log_lambda2"]);
    for &(b, l) in &rep.points {
        gaps.row(vec![num(b), num(l), num(l.ln())]);
    }
    let mut summary = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("slope", rep.fit.slope),
        ("intercept", rep.fit.intercept),
        ("r_squared", rep.fit.r_squared),
        ("predicted", rep.predicted),
        ("c_star", rep.c_star),
        ("h0", rep.h0),
        ("threshold", c),
        ("discarded", rep.discarded.len() as f64),
    ] {
        summary.row(vec![k.into(), num(v)]);
    }
    Ok(vec![Artifact::csv("gaps.csv", &gaps)?, Artifact::csv("summary.csv", &summary)?])
}

fn anneal_compare(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    let land = cfg.landscape.resolve(base)?;
    let seed = cfg.seed.ok_or_else(|| Error::Config("seed is required".into()))?;
    let x0 = cfg.anneal.x0;
    if x0 >= land.n() {
        return Err(Error::Config(format!("anneal.x0 = {x0} out of range for {} states", land.n())));
    }
    let slack = cfg.schedule.slack;
    let horizon = cfg.horizon();
    let tp = cfg.anneal.t_points;
    let grid: Vec<f64> = (1..=tp).map(|k| horizon * k as f64 / tp as f64).collect();
    let fam = family(&cfg.transform.family)?;
    let c = threshold(cfg, &land);
    let modified = TransformSpec::new(fam, c, 1.0)?;
    let classical = TransformSpec::new(Family::Zero, land.h_max(), 1.0)?;
    let policy = match cfg.policy.kind {
        PolicyKind::Fixed => ThresholdPolicy::Fixed(c),
        PolicyKind::RunningMinimum => ThresholdPolicy::RunningMinimum,
    };

    let mut runs: Vec<(&str, TransformSpec, ThresholdPolicy, CoolingSchedule)> = Vec::new();
    let choice = cfg.schedule.kind;
    if matches!(choice, ScheduleChoice::Compare | ScheduleChoice::Improved) {
        runs.push(("improved", modified.clone(), policy, CoolingSchedule::improved(&land, &modified, slack)?));
    }
    if matches!(choice, ScheduleChoice::Compare | ScheduleChoice::Classical) {
        runs.push((
            "classical",
            classical.clone(),
            ThresholdPolicy::Fixed(land.h_max()),
            CoolingSchedule::classical(&land, slack)?,
        ));
    }
    if choice == ScheduleChoice::Fixed {
        runs.push(("fixed", modified.clone(), policy, CoolingSchedule::fixed(slack)?));
    }

    let mut tail = Table::new(&[
        "schedule",
        "t",
        "empirical_tail",
        "wilson_low",
        "wilson_high",
        "envelope",
        "epsilon_t",
        "std_error",
        "bound_applies",
    ]);
    let mut consts = Table::new(&["schedule", "quantity", "value"]);
    for (name, spec, pol, sched) in runs {
        let curve: SuccessCurve = success_probability(&land, &spec, pol, &sched, x0, &grid, cfg.reps(), seed)?;
        for p in &curve.points {
            tail.row(vec![
                name.into(),
                num(p.t),
                num(p.empirical),
                num(p.wilson_low),
                num(p.wilson_high),
                num(p.envelope),
                num(p.epsilon_t),
                num(p.std_error),
                p.bound_applies.to_string(),
            ]);
        }
        consts.row(vec![name.into(), "height".into(), num(sched.height)]);
        consts.row(vec![name.into(), "slack".into(), num(sched.slack)]);
        match schedule_constants(&land, &spec, slack) {
            Ok(k) => {
                for (q, v) in [
                    ("M", k.m),
                    ("p", k.p),
                    ("A", k.a),
                    ("B", k.b),
                    ("K", k.k),
                    ("eps_bar", k.eps_bar),
                    ("delta", k.delta.unwrap_or(f64::NAN)),
                    ("d_low", k.d_low),
                    ("c_star", k.c_star),
                    ("threshold_time", k.threshold_time),
                ] {
                    consts.row(vec![name.into(), q.into(), num(v)]);
                }
            }
            Err(e) => info!("{name} schedule: constants unavailable: {e}"),
        }
        for t in curve.envelope_violations() {
            warn!("{name} schedule: empirical tail above envelope at t = {t} (envelope uses unit constant)");
        }
    }
    Ok(vec![Artifact::csv("tail.csv", &tail)?, Artifact::csv("constants.csv", &consts)?])
}

fn mh_sample(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<Artifact>> {
    let land = cfg.landscape.resolve(base)?;
    let seed = cfg.seed.ok_or_else(|| Error::Config("seed is required".into()))?;
    let s = &cfg.sample;
    if s.x0 >= land.n() {
        return Err(Error::Config(format!("sample.x0 = {} out of range for {} states", s.x0, land.n())));
    }
    let spec = TransformSpec::new(family(&cfg.transform.family)?, threshold(cfg, &land), s.epsilon)?;
    let gen = build_mh_generator(&land, &spec)?;
    let horizon = cfg.horizon();
    let reps = cfg.reps();
    let n = land.n();
    let occ = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let tr = simulate_ctmc(&gen, s.x0, horizon, seed.wrapping_add(r))?;
            Ok(tr.occupation(n).into_iter().map(|o| o / horizon).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut occupation = Table::new(&["state", "energy", "pi_exact", "occupation_mean", "occupation_std_error"]);
    for x in 0..n {
        let col: Vec<f64> = occ.iter().map(|o| o[x]).collect();
        let (m, se) = mean_and_stderr(&col);
        occupation.row(vec![x.to_string(), num(land.energy(x)), num(gen.stationary()[x]), num(m), num(se)]);
    }
    let target = s.target.clone().unwrap_or_else(|| land.minimizers());
    let exact = mean_hitting_times(&gen, &target)?;
    let mc = hitting_time_mc(&gen, s.x0, &target, reps, seed)?;
    let mut hitting = Table::new(&["x0", "target", "exact_mean", "mc_mean", "mc_std_error", "z_score"]);
    let z = if mc.std_error > 0.0 {
        (mc.mean - exact[s.x0]) / mc.std_error
    } else {
        0.0
    };
    hitting.row(vec![
        s.x0.to_string(),
        target.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "),
        num(exact[s.x0]),
        num(mc.mean),
        num(mc.std_error),
        num(z),
    ]);
    Ok(vec![
        Artifact::csv("occupation.csv", &occupation)?,
        Artifact::csv("hitting.csv", &hitting)?,
    ])
}
