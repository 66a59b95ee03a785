use degenwave_core::pde::*;

fn cfg(m_bar: f64, kappa: f64, length: f64, num_points: usize, t_final: f64) -> PdeConfig {
    PdeConfig {
        m_bar,
        kappa,
        length,
        num_points,
        t_final,
        ..PdeConfig::default()
    }
}

#[test]
fn kpp_front_moves_at_two() {
    let c = cfg(0.0, 1.0, 200.0, 2000, 100.0);
    let tr = measure_speed(&c).unwrap();
    let v = tr.speed_fit.slope;
    assert!((v - 2.0).abs() < 0.05 * 2.0, "speed {v}");
    assert!(tr.positions.iter().all(|p| (0.0..=200.0).contains(p)));
}

#[test]
fn fully_degenerate_far_field_still_invades() {
    let c = cfg(1.0, 1.0, 60.0, 600, 40.0);
    let states = run(&c).unwrap();
    for s in &states {
        assert!(s.n.iter().all(|v| *v >= -1e-8 && *v <= 1.0 + 1e-8));
        assert!(s.m.iter().all(|v| *v >= -1e-8 && *v <= 1.0 + 1e-8));
    }
    let tr = track_front_settled(&states, &c.grid(), 0.5).unwrap();
    assert!(tr.speed_fit.slope > 0.1, "speed {}", tr.speed_fit.slope);
}

#[test]
fn comparison_bounds_and_ecm_decay() {
    let c = cfg(0.5, 2.0, 60.0, 600, 20.0);
    let states = run(&c).unwrap();
    assert_eq!(states.len(), 21);
    for s in &states {
        for (n, m) in s.n.iter().zip(&s.m) {
            assert!(*n >= -1e-8 && *n <= 1.0 + 1e-8, "N = {n} at t = {}", s.t);
            assert!(*m >= -1e-8 && *m <= 0.5 + 1e-8, "M = {m} at t = {}", s.t);
        }
    }
    for w in states.windows(2) {
        for (a, b) in w[0].m.iter().zip(&w[1].m) {
            assert!(b <= &(a + 1e-8), "M grew from {a} to {b} by t = {}", w[1].t);
        }
    }
}

#[test]
fn mass_is_conserved_without_reactions() {
    let c = PdeConfig {
        disable_reactions: true,
        ..cfg(0.6, 1.0, 20.0, 400, 10.0)
    };
    let mut init = initial_condition(&c).unwrap();
    // Spread the tumour so the flux is active across a variable D.
    let x = c.grid();
    for (i, xv) in x.iter().enumerate() {
        init.n[i] = 0.5 * (1.0 - ((xv - 6.0) / 1.5).tanh());
        init.m[i] = 0.6 * (1.0 - init.n[i]) * (1.0 + 0.3 * (xv * 0.7).sin()) / 1.3;
    }
    let states = run_from(&c, &init).unwrap();
    let m0 = states[0].mass(c.dx());
    for s in &states {
        let rel = (s.mass(c.dx()) - m0).abs() / m0;
        assert!(rel < 1e-6, "relative mass drift {rel:e} at t = {}", s.t);
    }
    // M is frozen when reactions are off.
    assert_eq!(states.last().unwrap().m, init.m);
}

#[test]
fn full_degeneracy_freezes_n() {
    let c = PdeConfig {
        disable_reactions: true,
        ..cfg(1.0, 1.0, 20.0, 200, 5.0)
    };
    let mut init = initial_condition(&c).unwrap();
    init.m.iter_mut().for_each(|v| *v = 1.0);
    let states = run_from(&c, &init).unwrap();
    for s in &states {
        assert_eq!(s.n, init.n, "N changed at t = {}", s.t);
    }
}

#[test]
fn refinement_changes_speed_by_under_one_percent() {
    let coarse = cfg(0.5, 1.0, 100.0, 1000, 50.0);
    let fine = PdeConfig {
        num_points: 2000,
        ..coarse.clone()
    };
    let a = measure_speed(&coarse).unwrap().speed_fit.slope;
    let b = measure_speed(&fine).unwrap().speed_fit.slope;
    assert!((a - b).abs() / b < 0.01, "{a} vs {b}");
}

#[test]
fn empty_tumour_is_rejected() {
    let c = PdeConfig {
        sigma: 0.0,
        ..PdeConfig::default()
    };
    assert!(matches!(run(&c), Err(PdeError::Domain(_))));
    let bad_init = PdeState {
        t: 0.0,
        n: vec![0.0; 10],
        m: vec![0.0; 10],
    };
    assert!(run_from(&PdeConfig::default(), &bad_init).is_err());
}

#[test]
fn explicit_output_times_are_honoured() {
    let c = PdeConfig {
        output_times: vec![0.0, 0.37, 2.5, 3.0],
        ..cfg(0.25, 1.0, 30.0, 300, 3.0)
    };
    let states = run(&c).unwrap();
    let ts: Vec<f64> = states.iter().map(|s| s.t).collect();
    assert_eq!(ts, vec![0.0, 0.37, 2.5, 3.0]);
}

#[test]
fn sweep_speeds_decrease_with_far_field_ecm() {
    let template = cfg(0.0, 1.0, 100.0, 1000, 50.0);
    let m_bars: Vec<f64> = (1..=15).map(|j| 0.0625 * j as f64).collect();
    let recs = speed_sweep(&[1.0], &m_bars, &template).unwrap();
    assert_eq!(recs.len(), 15);
    let speeds: Vec<f64> = recs
        .iter()
        .map(|r| {
            assert_eq!(r.status, SweepStatus::Ok);
            r.speed.unwrap()
        })
        .collect();
    for w in speeds.windows(2) {
        assert!(w[1] <= w[0], "{speeds:?}");
    }
}

#[test]
fn failed_cells_are_recorded() {
    let template = PdeConfig {
        t_final: 2.0,
        length: 20.0,
        num_points: 200,
        ..PdeConfig::default()
    };
    let recs = speed_sweep(&[-1.0, 1.0], &[0.5], &template).unwrap();
    assert_eq!(recs[0].status, SweepStatus::Failed);
    assert!(recs[0].speed.is_none());
    assert_eq!(recs[1].kappa, 1.0);
}
