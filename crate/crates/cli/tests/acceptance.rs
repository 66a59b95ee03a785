//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use degenwave_core::conjecture::{
    integrate_phase_plane, reaction_diagnostics, Branch, DEFAULT_N_TOL,
};
use degenwave_core::model::{kappa_star, linear_speed};
use degenwave_core::pde::{initial_condition, measure_speed, run_from, PdeConfig};
use degenwave_core::shooting::{
    classify_trajectory, closed_form_deviation, find_alpha1, tail_diagnostics, ShootConfig,
    ShotKind, TailReport,
};
use proptest::prelude::*;
use proptest::test_runner::{RngAlgorithm, TestError, TestRng, TestRunner};
use std::cell::Cell;
use std::process::Command;
use std::time::Instant;

/// Pinned thresholds.
mod tol {
    pub const ALPHA1_AT_C1: (f64, f64) = (3.6, 3.85);
    pub const ALPHA1_AT_C2: (f64, f64) = (1.10, 1.22);
    pub const ALPHA1_SECONDS: f64 = 30.0;
    pub const KPP_SECONDS: f64 = 10.0;
    pub const SPEED_REL: f64 = 0.05;
    pub const SPEED_SECONDS: f64 = 300.0;
    /// Relative band for successive speed differences.
    pub const SPEED_BAND: f64 = 0.005;
    pub const PROFILE_SUP_N: f64 = 0.05;
    pub const COMPARE_SECONDS: f64 = 300.0;
    pub const ALPHA_ORDER: f64 = 1e-9;
    pub const CLOSED_FORM: f64 = 1e-4;
    pub const CENTRE_TAIL_REL: f64 = 0.10;
    pub const FACTORISATION: f64 = 1e-8;
    pub const SLOPE_AT_ORIGIN: f64 = 1e-5;
    pub const MASS_REL: f64 = 1e-6;
    pub const MIN_SPEED_BRACKET: f64 = 1e-3;
}

struct Ledger {
    passed: usize,
    failed: Vec<String>,
}

impl Ledger {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id:<3} {detail}", if ok { "PASS" } else { "FAIL" });
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }
}

fn cli(args: &[&str]) -> (Option<i32>, String, f64) {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_degenwave"))
        .args(args)
        .arg("--out")
        .arg(dir.path())
        .output()
        .expect("binary runs");
    let secs = start.elapsed().as_secs_f64();
    let mut text = String::from_utf8_lossy(&o.stdout).into_owned();
    text.push_str(&String::from_utf8_lossy(&o.stderr));
    (o.status.code(), text, secs)
}

fn field(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .and_then(|v| v.trim().parse().ok())
}

fn runner(cases: u32) -> TestRunner {
    let cfg = ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn verdict<T: std::fmt::Debug>(r: Result<(), TestError<T>>, cases: u32) -> (bool, String) {
    match r {
        Ok(()) => (true, format!("{cases} cases")),
        Err(e) => (false, e.to_string()),
    }
}

fn shoot(alpha: f64, c: f64, kappa: f64) -> degenwave_core::shooting::ShootOutcome {
    classify_trajectory(alpha, c, kappa, &ShootConfig::default()).unwrap()
}

fn pde_speed(m_bar: f64, kappa: f64) -> Option<f64> {
    let cfg = PdeConfig {
        m_bar,
        kappa,
        ..PdeConfig::default()
    };
    measure_speed(&cfg).ok().map(|t| t.speed_fit.slope)
}

fn fmt_speeds(v: &[Option<f64>]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|s| s.map_or("failed".to_string(), |s| format!("{s:.4}")))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1(l: &mut Ledger) {
    for (id, c, (lo, hi)) in [
        ("1a", "1", tol::ALPHA1_AT_C1),
        ("1b", "2", tol::ALPHA1_AT_C2),
    ] {
        let (code, out, secs) = cli(&["alpha1", "--c", c, "--kappa", "1"]);
        let v = field(&out, "alpha1");
        let ok =
            code == Some(0) && v.is_some_and(|v| v >= lo && v <= hi) && secs < tol::ALPHA1_SECONDS;
        l.record(
            id,
            ok,
            format!(
                "alpha1(c={c}, kappa=1) = {v:?}, expected in [{lo}, {hi}], {secs:.2} s (< {} s)",
                tol::ALPHA1_SECONDS
            ),
        );
    }
}

fn criterion_2(l: &mut Ledger) {
    let start = Instant::now();
    let kinds: Vec<(f64, ShotKind)> = [2.0, 2.5, 1.9]
        .iter()
        .map(|&c| (c, shoot(0.0, c, 1.0).kind))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = kinds[0].1 != ShotKind::ExitedNegativeN
        && kinds[1].1 != ShotKind::ExitedNegativeN
        && kinds[2].1 == ShotKind::ExitedNegativeN
        && secs < tol::KPP_SECONDS;
    l.record(
        "2",
        ok,
        format!(
            "alpha=0, m_bar=0 shots {kinds:?}, {secs:.2} s (< {} s)",
            tol::KPP_SECONDS
        ),
    );
}

fn criterion_3(l: &mut Ledger) {
    let start = Instant::now();
    let cases = [(0.25, 1.0), (0.75, 1.0 / 3.0), (0.0, 1.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (m_bar, kappa) in cases {
        let target = linear_speed(m_bar);
        let v = pde_speed(m_bar, kappa);
        ok &= v.is_some_and(|v| (v - target).abs() <= tol::SPEED_REL * target);
        parts.push(format!(
            "(M_bar={m_bar}, kappa={kappa:.4}): {v:.4?} vs {target:.4}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < tol::SPEED_SECONDS;
    l.record(
        "3",
        ok,
        format!(
            "front speeds within {}%: {}; {secs:.1} s",
            tol::SPEED_REL * 100.0,
            parts.join("; ")
        ),
    );
}

fn strictly_increasing(v: &[Option<f64>]) -> bool {
    v.iter().all(|s| s.is_some())
        && v.windows(2)
            .all(|w| w[1].unwrap() - w[0].unwrap() > tol::SPEED_BAND * w[0].unwrap())
}

fn criterion_4(l: &mut Ledger) {
    let ks = kappa_star(0.75).unwrap();
    let by_kappa: Vec<Option<f64>> = [ks, 10.0 * ks, 100.0 * ks]
        .iter()
        .map(|&k| pde_speed(0.75, k))
        .collect();
    l.record(
        "4a",
        strictly_increasing(&by_kappa),
        format!(
            "M_bar=0.75, kappa in {{1,10,100}} x {ks:.4}: speeds {} strictly increasing beyond {}%",
            fmt_speeds(&by_kappa),
            tol::SPEED_BAND * 100.0
        ),
    );
    let m_bars: Vec<f64> = (1..=7).map(|j| 0.125 * j as f64).collect();
    let by_mbar: Vec<Option<f64>> = m_bars.iter().map(|&m| pde_speed(m, 1.0)).collect();
    let ok = by_mbar.iter().all(|s| s.is_some())
        && by_mbar
            .windows(2)
            .all(|w| w[1].unwrap() - w[0].unwrap() <= tol::SPEED_BAND * w[0].unwrap());
    l.record(
        "4b",
        ok,
        format!(
            "kappa=1, M_bar=0.125..0.875: speeds {} non-increasing within {}%",
            fmt_speeds(&by_mbar),
            tol::SPEED_BAND * 100.0
        ),
    );
}

fn criterion_5(l: &mut Ledger) {
    let speeds: Vec<Option<f64>> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&k| pde_speed(1.0, k))
        .collect();
    let ok = speeds.iter().all(|s| s.is_some_and(|v| v > 0.0)) && strictly_increasing(&speeds);
    l.record(
        "5",
        ok,
        format!(
            "M_bar=1, kappa in {{1,10,100}}: speeds {} positive and increasing",
            fmt_speeds(&speeds)
        ),
    );
}

fn criterion_6(l: &mut Ledger) {
    for (id, m_bar) in [("6a", "0.5"), ("6b", "1")] {
        let (code, out, secs) = cli(&["compare", "--kappa", "1", "--mbar", m_bar]);
        let sup = field(&out, "sup_norm_N");
        let ok = code == Some(0)
            && sup.is_some_and(|v| v < tol::PROFILE_SUP_N)
            && secs < tol::COMPARE_SECONDS;
        l.record(
            id,
            ok,
            format!(
                "compare kappa=1 M_bar={m_bar}: sup|N_ode - N_pde| = {sup:?} (< {}), pde speed {:?}, ode speed {:?}, {secs:.1} s",
                tol::PROFILE_SUP_N,
                field(&out, "pde_speed"),
                field(&out, "ode_speed"),
            ),
        );
    }
}

fn criterion_7(l: &mut Ledger) {
    let cases = 50;
    let r = runner(cases).run(
        &(0.05f64..8.0, 1.01f64..3.0, 0.6f64..2.5, 0.3f64..4.0),
        |(a, factor, c, kappa)| {
            let lo = shoot(a, c, kappa);
            let hi = shoot(a * factor, c, kappa);
            let end = lo
                .t_exit
                .min(hi.t_exit)
                .min(lo.trajectory.last_y())
                .min(hi.trajectory.last_y());
            for (y, s) in lo.trajectory.ys.iter().zip(&lo.trajectory.states) {
                if *y > end {
                    break;
                }
                if let Some(h) = hi.trajectory.interpolate(*y) {
                    prop_assert!(
                        h[0] >= s[0] - tol::ALPHA_ORDER && h[2] >= s[2] - tol::ALPHA_ORDER
                    );
                }
            }
            prop_assert!(hi.t_exit >= lo.t_exit);
            Ok(())
        },
    );
    let (ok, detail) = verdict(r, cases);
    l.record(
        "7a",
        ok,
        format!("larger alpha dominates (n, m) and delays exit: {detail}"),
    );

    let cases = 200;
    let checked = Cell::new(0usize);
    let r = runner(cases).run(&(0.3f64..6.0, 1.0f64..3.0, 0.3f64..3.0), |(a, c, kappa)| {
        let o = shoot(a, c, kappa);
        if o.kind == ShotKind::ConvergedToMbar {
            checked.set(checked.get() + 1);
            let err = closed_form_deviation(&o);
            prop_assert!(err < tol::CLOSED_FORM, "deviation {err}");
        }
        Ok(())
    });
    let (ok, detail) = verdict(r, cases);
    l.record(
        "7b",
        ok,
        format!(
            "closed-form m(y) within {:e} on {} intermediate-limit shots: {detail}",
            tol::CLOSED_FORM,
            checked.get()
        ),
    );

    let cases = 12;
    let r = runner(cases).run(&(0.8f64..2.5, 0.5f64..3.0), |(c, kappa)| {
        let a1 = find_alpha1(c, kappa, &ShootConfig::default(), None)
            .unwrap()
            .value;
        let o = shoot(a1 * (1.0 + 1e-6), c, kappa);
        prop_assert_eq!(o.kind, ShotKind::ConvergedToM1);
        match tail_diagnostics(&o) {
            Ok(TailReport::Algebraic { horizon_m, .. }) => {
                prop_assert!(
                    (horizon_m - c).abs() < tol::CENTRE_TAIL_REL * c,
                    "y(1-m) = {horizon_m}, c = {c}"
                );
            }
            other => prop_assert!(false, "unexpected tail {:?}", other),
        }
        Ok(())
    });
    let (ok, detail) = verdict(r, cases);
    l.record(
        "7c",
        ok,
        format!(
            "y(1-m) -> c within {}% on shots converging to (0,0,1): {detail}",
            tol::CENTRE_TAIL_REL * 100.0
        ),
    );

    let cases = 48;
    let worst_identity = Cell::new(0.0f64);
    let worst_slope = Cell::new(0.0f64);
    let r = runner(cases).run(
        &(0.05f64..5.0, 0.0f64..0.9, 0.0f64..1.0, any::<bool>()),
        |(kappa, m_bar, excess, plus)| {
            let c = linear_speed(m_bar) * (1.0 + excess);
            let branch = if plus { Branch::Plus } else { Branch::Minus };
            let Ok(sol) = integrate_phase_plane(c, kappa, m_bar, branch, DEFAULT_N_TOL) else {
                return Ok(());
            };
            let d = reaction_diagnostics(&sol);
            for i in 0..d.n.len() {
                let factored = -2.0 * (1.0 - sol.m_vals[i]) * (1.0 - d.h[i]);
                worst_identity.set(
                    worst_identity
                        .get()
                        .max((d.g_double_prime[i] - factored).abs()),
                );
            }
            worst_slope.set(
                worst_slope
                    .get()
                    .max((d.g_prime_at_0 - (1.0 - m_bar)).abs()),
            );
            prop_assert!(
                worst_identity.get() < tol::FACTORISATION
                    && worst_slope.get() < tol::SLOPE_AT_ORIGIN
            );
            Ok(())
        },
    );
    let ok = r.is_ok();
    let (worst_identity, worst_slope) = (worst_identity.get(), worst_slope.get());
    l.record(
        "7d",
        ok && worst_identity < tol::FACTORISATION,
        format!(
            "g'' = -2(1-M)(1-H): worst {worst_identity:.2e} (< {:e}) over {cases} cases",
            tol::FACTORISATION
        ),
    );
    l.record(
        "7e",
        ok && worst_slope < tol::SLOPE_AT_ORIGIN,
        format!(
            "g'(0) = 1 - m_bar: worst {worst_slope:.2e} (< {:e}) over {cases} cases",
            tol::SLOPE_AT_ORIGIN
        ),
    );

    let cfg = PdeConfig {
        disable_reactions: true,
        m_bar: 0.6,
        length: 20.0,
        num_points: 400,
        t_final: 10.0,
        ..PdeConfig::default()
    };
    let mut init = initial_condition(&cfg).unwrap();
    for (i, x) in cfg.grid().iter().enumerate() {
        init.n[i] = 0.5 * (1.0 - ((x - 6.0) / 1.5).tanh());
        init.m[i] = 0.6 * (1.0 - init.n[i]) * (1.0 + 0.3 * (x * 0.7).sin()) / 1.3;
    }
    let drift = run_from(&cfg, &init).map(|states| {
        let m0 = states[0].mass(cfg.dx());
        states
            .iter()
            .map(|s| (s.mass(cfg.dx()) - m0).abs() / m0)
            .fold(0.0, f64::max)
    });
    let detail = match &drift {
        Ok(d) => format!("{d:.2e}"),
        Err(e) => e.to_string(),
    };
    l.record(
        "7f",
        drift.is_ok_and(|d| d < tol::MASS_REL),
        format!(
            "relative mass drift without reactions {detail} (< {:e})",
            tol::MASS_REL
        ),
    );
}

fn criterion_8(l: &mut Ledger) {
    let (code, out, _) = cli(&["min-speed", "--kappa", "1", "--mbar", "0.25", "--numeric"]);
    let c_num = field(&out, "c_star");
    let formula = linear_speed(0.25);
    let allowed = tol::MIN_SPEED_BRACKET + ShootConfig::default().conv_tol;
    let ok = code == Some(0) && c_num.is_some_and(|c| (c - formula).abs() <= allowed);
    l.record("8a", ok, format!("kappa=1, m_bar=0.25: numeric c* = {c_num:?} vs formula {formula:.6} (within {allowed:e})"));

    let (code, out, _) = cli(&["min-speed", "--kappa", "1", "--mbar", "0.75"]);
    let c_star = field(&out, "c_star");
    let ok = code == Some(0) && c_star.is_some_and(|c| c > 1.0 && c <= 2.0f64.sqrt());
    l.record(
        "8b",
        ok,
        format!("kappa=1, m_bar=0.75: numeric c* = {c_star:?}, expected in (1, sqrt 2]"),
    );
}

fn main() {
    let mut l = Ledger {
        passed: 0,
        failed: Vec::new(),
    };
    let start = Instant::now();
    criterion_1(&mut l);
    criterion_2(&mut l);
    criterion_3(&mut l);
    criterion_4(&mut l);
    criterion_5(&mut l);
    criterion_6(&mut l);
    criterion_7(&mut l);
    criterion_8(&mut l);
    println!(
        "acceptance: {} passed, {} failed {:?} in {:.0} s",
        l.passed,
        l.failed.len(),
        l.failed,
        start.elapsed().as_secs_f64()
    );
    if !l.failed.is_empty() {
        std::process::exit(1);
    }
}
