//! One function per subcommand. Each writes its tables into the output set
//! and returns the summary lines printed on stdout.

use crate::config::Config;
use crate::error::CliError;
use crate::output::{fmt_flag, fmt_float, fmt_opt, json_num, OutputSet};
use degenwave_core::conjecture::{scan_cell, Branch, CellStatus, ScanCell};
use degenwave_core::model::{linear_speed, min_wave_speed_formula, MinSpeed, ModelParams};
use degenwave_core::pde::{
    front_position, run, sweep_cases, sweep_record, track_front_settled, PdeConfig, PdeError,
    PdeState, SweepRecord,
};
use degenwave_core::profile::{
    compare_profiles, desingularised_to_physical, ProfileSource, WaveProfile, ANCHOR_LEVEL,
};
use degenwave_core::shooting::{
    classify_trajectory, find_alpha0, find_alpha1, find_alpha_for_mbar, min_speed_numeric,
    min_speed_search, tail_diagnostics, AlphaBracket, ShootConfig, ShootError, ShootOutcome,
    ShotKind, SpeedMethod, TailReport,
};
use rayon::prelude::*;
use serde_json::{json, Value};

pub const PROFILE_HEADER: [&str; 3] = ["xi", "N", "M"];
pub const SNAPSHOT_HEADER: [&str; 3] = ["x", "N", "M"];
pub const SWEEP_HEADER: [&str; 5] = ["kappa", "M_bar", "speed", "residual", "status"];
pub const CONJECTURE_HEADER: [&str; 10] = [
    "kappa",
    "m_bar",
    "c",
    "branch",
    "g_kpp",
    "H0_lt_1",
    "H_lt_1",
    "H_monotone",
    "gdd_neg",
    "status",
];

/// `key = value` lines for stdout.
pub type Summary = Vec<(&'static str, String)>;

fn profile_rows(p: &WaveProfile) -> Vec<Vec<String>> {
    (0..p.len())
        .map(|i| {
            vec![
                fmt_float(p.xi[i]),
                fmt_float(p.n_vals[i]),
                fmt_float(p.m_vals[i]),
            ]
        })
        .collect()
}

fn snapshot_rows(x: &[f64], s: &PdeState) -> Vec<Vec<String>> {
    (0..x.len())
        .map(|i| vec![fmt_float(x[i]), fmt_float(s.n[i]), fmt_float(s.m[i])])
        .collect()
}

/// Physical profile of a shot, cut before the first sample where `m` rounds to 1.
pub fn ode_profile(o: &ShootOutcome) -> Result<WaveProfile, CliError> {
    let mut traj = o.trajectory.clone();
    if let Some(k) = traj.states.iter().position(|s| s[2] >= 1.0) {
        traj.truncate(k);
    }
    let params = ModelParams::new(o.kappa, o.c, o.m_inf.clamp(0.0, 1.0))?;
    Ok(desingularised_to_physical(&traj, &params)?)
}

fn tail_json(o: &ShootOutcome) -> Value {
    match tail_diagnostics(o) {
        Ok(TailReport::Algebraic {
            a_m,
            a_n,
            expected_m,
            expected_n,
            rel_residual_m,
            rel_residual_n,
            horizon_m,
            horizon_n,
            samples,
        }) => json!({
            "law": "algebraic",
            "a_m": json_num(a_m),
            "a_n": json_num(a_n),
            "expected_m": json_num(expected_m),
            "expected_n": json_num(expected_n),
            "rel_residual_m": json_num(rel_residual_m),
            "rel_residual_n": json_num(rel_residual_n),
            "horizon_m": json_num(horizon_m),
            "horizon_n": json_num(horizon_n),
            "samples": samples,
        }),
        Ok(TailReport::Exponential {
            rate,
            expected,
            rel_residual,
            samples,
        }) => json!({
            "law": "exponential",
            "rate": json_num(rate),
            "expected": json_num(expected),
            "rel_residual": json_num(rel_residual),
            "samples": samples,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn outcome_json(o: &ShootOutcome) -> Value {
    let convergent = o.kind.is_convergent();
    json!({
        "alpha": json_num(o.alpha),
        "c": json_num(o.c),
        "kappa": json_num(o.kappa),
        "kind": o.kind.label(),
        "evidence": format!("{:?}", o.evidence),
        "t_exit": json_num(o.t_exit),
        "n_inf": json_num(o.n_inf),
        "p_inf": json_num(o.p_inf),
        "m_inf": json_num(o.m_inf),
        "invariant": json_num(o.invariant),
        "tail": if convergent { tail_json(o) } else { Value::Null },
    })
}

fn bracket_json(b: &AlphaBracket) -> Value {
    json!({
        "value": json_num(b.value),
        "lo": json_num(b.lo),
        "hi": json_num(b.hi),
        "width": json_num(b.width()),
        "shots": b.shots,
    })
}

pub fn shoot(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let m = &cfg.model;
    let alpha = m
        .alpha
        .ok_or_else(|| CliError::Usage("shoot needs --alpha or model.alpha".into()))?;
    let o = classify_trajectory(alpha, m.c, m.kappa, &cfg.shoot.to_core())?;
    out.write_csv(
        "profile.csv",
        &PROFILE_HEADER,
        profile_rows(&ode_profile(&o)?),
    )?;
    out.write_json("result.json", &outcome_json(&o))?;
    Ok(vec![
        ("kind", o.kind.label().to_string()),
        ("t_exit", fmt_float(o.t_exit)),
        ("n_inf", fmt_float(o.n_inf)),
        ("m_inf", fmt_float(o.m_inf)),
    ])
}

/// Writes the bracket and the profile of its convergent side.
fn write_search(
    out: &mut OutputSet,
    key: &'static str,
    b: &AlphaBracket,
    c: f64,
    kappa: f64,
    sc: &ShootConfig,
) -> Result<Summary, CliError> {
    let edge = classify_trajectory(b.hi, c, kappa, sc)?;
    if edge.kind.is_convergent() {
        out.write_csv(
            "profile.csv",
            &PROFILE_HEADER,
            profile_rows(&ode_profile(&edge)?),
        )?;
    }
    out.write_json(
        "result.json",
        &json!({ key: bracket_json(b), "edge_shot": outcome_json(&edge) }),
    )?;
    Ok(vec![
        (key, fmt_float(b.value)),
        ("bracket_lo", fmt_float(b.lo)),
        ("bracket_hi", fmt_float(b.hi)),
        ("edge_kind", edge.kind.label().to_string()),
    ])
}

pub fn alpha1(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let (c, kappa, sc) = (cfg.model.c, cfg.model.kappa, cfg.shoot.to_core());
    let b = find_alpha1(c, kappa, &sc, None)?;
    write_search(out, "alpha1", &b, c, kappa, &sc)
}

pub fn alpha0(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let (c, kappa, sc) = (cfg.model.c, cfg.model.kappa, cfg.shoot.to_core());
    let b = find_alpha0(c, kappa, &sc)?;
    write_search(out, "alpha0", &b, c, kappa, &sc)
}

pub fn alpha_for_mbar(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let m = &cfg.model;
    let sol = find_alpha_for_mbar(m.c, m.kappa, m.m_bar, &cfg.shoot.to_core())?;
    out.write_csv(
        "profile.csv",
        &PROFILE_HEADER,
        profile_rows(&ode_profile(&sol.outcome)?),
    )?;
    out.write_json(
        "result.json",
        &json!({
            "alpha": json_num(sol.alpha),
            "m_inf": json_num(sol.m_inf),
            "bracket": bracket_json(&sol.bracket),
            "shot": outcome_json(&sol.outcome),
        }),
    )?;
    Ok(vec![
        ("alpha", fmt_float(sol.alpha)),
        ("m_inf", fmt_float(sol.m_inf)),
    ])
}

pub fn min_speed(
    cfg: &Config,
    out: &mut OutputSet,
    numeric: bool,
    width: f64,
) -> Result<Summary, CliError> {
    let (kappa, m_bar, sc) = (cfg.model.kappa, cfg.model.m_bar, cfg.shoot.to_core());
    if width.is_nan() || width <= 0.0 {
        return Err(CliError::Usage(format!(
            "--width must be positive, got {width}"
        )));
    }
    let r = if numeric {
        min_speed_numeric(kappa, m_bar, &sc, width)?
    } else {
        min_speed_search(kappa, m_bar, &sc)?
    };
    let (lower, upper) = match min_wave_speed_formula(kappa, m_bar)? {
        MinSpeed::Exact(v) => (v, v),
        MinSpeed::Interval { lower, upper } => (lower, upper),
    };
    let method = match r.method {
        SpeedMethod::Formula => "formula",
        SpeedMethod::Numeric => "numeric",
    };
    out.write_json(
        "result.json",
        &json!({
            "c_star": json_num(r.c_star),
            "lo": json_num(r.lo),
            "hi": json_num(r.hi),
            "method": method,
            "bound_lower": json_num(lower),
            "bound_upper": json_num(upper),
        }),
    )?;
    Ok(vec![
        ("c_star", fmt_float(r.c_star)),
        ("method", method.to_string()),
        ("bracket_lo", fmt_float(r.lo)),
        ("bracket_hi", fmt_float(r.hi)),
    ])
}

fn write_snapshots(out: &mut OutputSet, x: &[f64], states: &[PdeState]) -> Result<(), CliError> {
    let mut index = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let name = format!("snapshot_{i:04}.csv");
        out.write_csv(&name, &SNAPSHOT_HEADER, snapshot_rows(x, s))?;
        index.push(vec![i.to_string(), fmt_float(s.t), name]);
    }
    out.write_csv("snapshots.csv", &["index", "t", "file"], index)
}

/// Runs the PDE, writing whatever was computed before a failure.
fn run_pde(pc: &PdeConfig, out: &mut OutputSet, keep: bool) -> Result<Vec<PdeState>, CliError> {
    match run(pc) {
        Ok(states) => Ok(states),
        Err(PdeError::Integration { t, reason, partial }) => {
            if keep && !partial.is_empty() {
                write_snapshots(out, &pc.grid(), &partial)?;
            }
            Err(CliError::Numerical(format!(
                "time integration failed at t = {t}: {reason}"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn pde_run(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let pc = cfg.pde.to_core(cfg.model.kappa, cfg.model.m_bar);
    let states = run_pde(&pc, out, true)?;
    let x = pc.grid();
    write_snapshots(out, &x, &states)?;
    let front: Vec<Vec<String>> = states
        .iter()
        .filter_map(|s| {
            front_position(&x, &s.n, ANCHOR_LEVEL, s.t)
                .ok()
                .map(|p| vec![fmt_float(s.t), fmt_float(p)])
        })
        .collect();
    out.write_csv("front.csv", &["t", "x_front"], front)?;
    let dx = pc.dx();
    let (mass0, mass1) = (states[0].mass(dx), states.last().unwrap().mass(dx));
    let (speed, result) = match track_front_settled(&states, &x, ANCHOR_LEVEL) {
        Ok(tr) => (
            Some(tr.speed_fit.slope),
            json!({
                "speed": json_num(tr.speed_fit.slope),
                "intercept": json_num(tr.speed_fit.intercept),
                "residual": json_num(tr.speed_fit.residual),
            }),
        ),
        Err(e) => (None, json!({ "speed": null, "error": e.to_string() })),
    };
    out.write_json(
        "result.json",
        &json!({ "front": result, "mass_initial": json_num(mass0), "mass_final": json_num(mass1) }),
    )?;
    Ok(vec![
        ("snapshots", states.len().to_string()),
        ("speed", fmt_opt(speed)),
        ("mass_final", fmt_float(mass1)),
    ])
}

/// Pool sized by `DEGENWAVE_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DEGENWAVE_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "DEGENWAVE_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))
}

fn sweep_row(r: &SweepRecord) -> Vec<String> {
    vec![
        fmt_float(r.kappa),
        fmt_float(r.m_bar),
        fmt_opt(r.speed),
        fmt_opt(r.fit_residual),
        r.status.label().to_string(),
    ]
}

pub fn speed_sweep(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let template = cfg.pde.to_core(cfg.model.kappa, cfg.model.m_bar);
    let cases = sweep_cases(&cfg.sweep.kappas, &cfg.sweep.m_bars)?;
    let pool = worker_pool()?;
    let recs: Vec<SweepRecord> = pool.install(|| {
        cases
            .par_iter()
            .map(|&(k, m)| sweep_record(k, m, &template))
            .collect()
    });
    out.write_csv("sweep.csv", &SWEEP_HEADER, recs.iter().map(sweep_row))?;
    let failed = recs.iter().filter(|r| r.speed.is_none()).count();
    Ok(vec![
        ("cells", recs.len().to_string()),
        ("failed", failed.to_string()),
    ])
}

/// ODE wave towards `m_bar` at speed `c`, raised to the minimal speed when
/// `c` lies below it. Returns the speed actually used.
pub fn ode_wave(
    c: f64,
    kappa: f64,
    m_bar: f64,
    sc: &ShootConfig,
) -> Result<(f64, ShootOutcome), CliError> {
    if m_bar >= 1.0 {
        let b = find_alpha1(c, kappa, sc, None)?;
        let o = classify_trajectory(b.hi, c, kappa, sc)?;
        if o.kind != ShotKind::ConvergedToM1 {
            return Err(ShootError::NotConvergent(o.kind).into());
        }
        return Ok((c, o));
    }
    match find_alpha_for_mbar(c, kappa, m_bar, sc) {
        Ok(sol) => Ok((c, sol.outcome)),
        Err(ShootError::BelowMinimalSpeed { .. }) | Err(ShootError::NotAttained { .. }) => {
            let c_min = min_speed_search(kappa, m_bar, sc)?.c_star;
            let sol = find_alpha_for_mbar(c_min, kappa, m_bar, sc)?;
            Ok((c_min, sol.outcome))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn compare(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let (kappa, m_bar) = (cfg.model.kappa, cfg.model.m_bar);
    let pc = cfg.pde.to_core(kappa, m_bar);
    let states = run_pde(&pc, out, false)?;
    let x = pc.grid();
    let track = track_front_settled(&states, &x, ANCHOR_LEVEL)?;
    let speed = track.speed_fit.slope;
    if speed.is_nan() || speed <= 0.0 {
        return Err(CliError::Numerical(format!(
            "front is not advancing (speed {speed})"
        )));
    }
    let last = states.last().unwrap();
    let pde = WaveProfile::new(x, last.n.clone(), last.m.clone(), speed, ProfileSource::Pde)?
        .anchored(ANCHOR_LEVEL)?;
    let (c_used, shot) = ode_wave(speed, kappa, m_bar, &cfg.shoot.to_core())?;
    let ode = ode_profile(&shot)?;
    let cmp = compare_profiles(&ode, &pde)?;
    out.write_csv("ode_profile.csv", &PROFILE_HEADER, profile_rows(&ode))?;
    out.write_csv("pde_profile.csv", &PROFILE_HEADER, profile_rows(&pde))?;
    out.write_json(
        "comparison.json",
        &json!({
            "pde_speed": json_num(speed),
            "pde_fit_residual": json_num(track.speed_fit.residual),
            "pde_time": json_num(last.t),
            "ode_speed": json_num(c_used),
            "speed_raised": c_used != speed,
            "alpha": json_num(shot.alpha),
            "ode_kind": shot.kind.label(),
            "sup_norm_N": json_num(cmp.sup_norm_n),
            "sup_norm_M": json_num(cmp.sup_norm_m),
            "optimal_shift": json_num(cmp.optimal_shift),
        }),
    )?;
    Ok(vec![
        ("pde_speed", fmt_float(speed)),
        ("ode_speed", fmt_float(c_used)),
        ("sup_norm_N", fmt_float(cmp.sup_norm_n)),
        ("sup_norm_M", fmt_float(cmp.sup_norm_m)),
        ("optimal_shift", fmt_float(cmp.optimal_shift)),
    ])
}

fn conjecture_row(cell: &ScanCell) -> Vec<String> {
    let f = cell.flags.as_ref();
    vec![
        fmt_float(cell.kappa),
        fmt_float(cell.m_bar),
        fmt_float(cell.c),
        cell.branch.label().to_string(),
        fmt_flag(f.map(|f| f.g_kpp_type)),
        fmt_flag(cell.h0_lt_1()),
        fmt_flag(f.map(|f| f.h_lt_1_everywhere)),
        fmt_flag(f.map(|f| f.h_monotone_nonincreasing)),
        fmt_flag(f.map(|f| f.g_dd_negative_everywhere)),
        cell.status.label().to_string(),
    ]
}

pub fn conjecture_scan(cfg: &Config, out: &mut OutputSet) -> Result<Summary, CliError> {
    let s = &cfg.sweep;
    if s.kappas.is_empty() || s.m_bars.is_empty() {
        return Err(CliError::Domain("scan grids must be non-empty".into()));
    }
    let mut cases: Vec<(f64, f64, Branch)> = Vec::new();
    for &k in &s.kappas {
        for &m in &s.m_bars {
            for &b in s.branch.branches() {
                cases.push((k, m, b));
            }
        }
    }
    let speed = |m: f64| s.speed.unwrap_or(s.speed_factor * linear_speed(m));
    let pool = worker_pool()?;
    let cells: Vec<ScanCell> = pool.install(|| {
        cases
            .par_iter()
            .map(|&(k, m, b)| scan_cell(k, m, speed(m), b, s.n_tol))
            .collect()
    });
    out.write_csv(
        "conjecture.csv",
        &CONJECTURE_HEADER,
        cells.iter().map(conjecture_row),
    )?;
    let undecided = cells
        .iter()
        .filter(|c| c.status == CellStatus::Indeterminate)
        .count();
    Ok(vec![
        ("cells", cells.len().to_string()),
        ("indeterminate", undecided.to_string()),
    ])
}
