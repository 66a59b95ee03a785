use degenwave_core::model::tail_eigen;
use degenwave_core::shooting::*;
use proptest::prelude::*;

fn cfg() -> ShootConfig {
    ShootConfig::default()
}

fn shoot(alpha: f64, c: f64, kappa: f64) -> ShootOutcome {
    classify_trajectory(alpha, c, kappa, &cfg()).unwrap()
}

#[test]
fn moderate_alpha_ends_on_intermediate_ecm() {
    let o = shoot(3.0, 1.0, 1.0);
    assert_eq!(o.kind, ShotKind::ConvergedToMbar);
    assert!(o.m_inf > 0.0 && o.m_inf < 1.0, "{}", o.m_inf);
    assert!(o.n_inf.abs() < 1e-6 && o.p_inf.abs() < 1e-6);
}

#[test]
fn caption_alpha_lands_next_to_full_ecm() {
    // 3.72 sits just below the separatrix; its limit is within the caption's
    // precision of m = 1, and a shot slightly above it converges to m = 1.
    let o = shoot(3.72, 1.0, 1.0);
    assert!(o.kind.is_convergent());
    assert!((1.0 - o.m_inf).abs() < 1.5e-3, "{}", o.m_inf);
    assert_eq!(shoot(3.73, 1.0, 1.0).kind, ShotKind::ConvergedToM1);
}

#[test]
fn small_alpha_exits_through_zero() {
    let o = shoot(0.01, 1.0, 1.0);
    assert_eq!(o.kind, ShotKind::ExitedNegativeN);
    assert!(o.t_exit.is_finite());
    let hit = o.trajectory.interpolate(o.t_exit).unwrap();
    assert!(hit[1] < 0.0);
}

#[test]
fn kpp_reduction_speed_threshold() {
    for c in [2.0, 2.5] {
        let o = shoot(0.0, c, 1.0);
        assert_ne!(o.kind, ShotKind::ExitedNegativeN, "c = {c}");
        assert_eq!(o.m_inf, 0.0);
    }
    assert_eq!(shoot(0.0, 1.9, 1.0).kind, ShotKind::ExitedNegativeN);
}

#[test]
fn alpha1_anchors() {
    let a = find_alpha1(1.0, 1.0, &cfg(), None).unwrap();
    assert!((a.value - 3.72).abs() < 0.1, "{}", a.value);
    assert!((a.value - 3.727166).abs() < 1e-4, "{}", a.value);
    assert!(a.width() < 1e-6 * a.value.max(1.0));
    assert_eq!(
        shoot(a.hi + a.width(), 1.0, 1.0).kind,
        ShotKind::ConvergedToM1
    );
    assert_ne!(
        shoot(a.lo - a.width(), 1.0, 1.0).kind,
        ShotKind::ConvergedToM1
    );

    // Regression anchors.
    let a2 = find_alpha1(2.0, 1.0, &cfg(), None).unwrap();
    assert!((a2.value - 1.6165).abs() < 1e-3, "{}", a2.value);
    let a05 = find_alpha1(0.5, 1.0, &cfg(), None).unwrap();
    assert!(a05.value > 0.0 && a05.value.is_finite());
    assert!((a05.value - 22.6106).abs() < 1e-3, "{}", a05.value);
}

#[test]
fn alpha1_with_hint_agrees() {
    let free = find_alpha1(1.0, 1.0, &cfg(), None).unwrap();
    let hinted = find_alpha1(1.0, 1.0, &cfg(), Some((3.0, 4.0))).unwrap();
    assert!((free.value - hinted.value).abs() < 2e-6);
}

#[test]
fn alpha0_cases() {
    assert_eq!(find_alpha0(2.0, 1.0, &cfg()).unwrap().value, 0.0);
    assert_eq!(find_alpha0(2.5, 0.3, &cfg()).unwrap().value, 0.0);
    let a0 = find_alpha0(1.0, 1.0, &cfg()).unwrap();
    let a1 = find_alpha1(1.0, 1.0, &cfg(), None).unwrap();
    assert!(a0.value > 0.0 && a0.value < a1.value);
    assert!((a0.value - 2.57976).abs() < 1e-4, "{}", a0.value);
}

#[test]
fn alpha_for_intermediate_ecm() {
    let s = find_alpha_for_mbar(2.0, 1.0, 0.5, &cfg()).unwrap();
    let a1 = find_alpha1(2.0, 1.0, &cfg(), None).unwrap().value;
    assert!(s.alpha > 0.0 && s.alpha < a1);
    assert!((s.m_inf - 0.5).abs() < 1e-4);
    assert!((s.alpha - 0.7680159).abs() < 1e-5, "{}", s.alpha);
}

#[test]
fn alpha_for_mbar_endpoints() {
    let a1 = find_alpha1(2.0, 1.0, &cfg(), None).unwrap().value;
    let low = find_alpha_for_mbar(2.0, 1.0, 1e-3, &cfg()).unwrap();
    let high = find_alpha_for_mbar(2.0, 1.0, 0.999, &cfg()).unwrap();
    assert!(low.alpha < 1e-2, "{}", low.alpha);
    assert!(
        high.alpha < a1 && a1 - high.alpha < 0.05 * a1,
        "{} vs {a1}",
        high.alpha
    );
}

#[test]
fn ordering_and_strict_increase() {
    for (c, kappa) in [(2.0, 1.0), (1.5, 0.5), (1.2, 2.0)] {
        let a0 = find_alpha0(c, kappa, &cfg()).unwrap().value;
        let a1 = find_alpha1(c, kappa, &cfg(), None).unwrap().value;
        let floor = c * c / 4.0;
        let mut prev = a0;
        for m in [0.2, 0.5, 0.8] {
            // Only targets at or above the linear threshold are attainable.
            if 1.0 - m > floor {
                continue;
            }
            let s = find_alpha_for_mbar(c, kappa, m, &cfg()).unwrap();
            assert!(s.alpha >= a0 && s.alpha <= a1, "c={c} k={kappa} m={m}");
            assert!(s.alpha > prev);
            prev = s.alpha;
        }
    }
}

#[test]
fn minimal_speed_formula_branch() {
    let r = min_speed_search(1.0, 0.25, &cfg()).unwrap();
    assert_eq!(r.method, SpeedMethod::Formula);
    assert!((r.c_star - 1.73205).abs() < 1e-5);
    assert_eq!(min_speed_search(1.0, 0.0, &cfg()).unwrap().c_star, 2.0);
}

#[test]
fn below_linear_speed_no_wave_reaches_target() {
    let m_bar = 0.5;
    let c = 0.9 * 0.95 * 2.0 * (1.0f64 - m_bar).sqrt();
    assert!(matches!(
        find_alpha_for_mbar(c, 1.0, m_bar, &cfg()),
        Err(ShootError::BelowMinimalSpeed { .. })
    ));
    for k in 0..40 {
        let alpha = 0.05 * 1.25f64.powi(k);
        let o = shoot(alpha, c, 1.0);
        if o.kind == ShotKind::ConvergedToMbar {
            assert!(
                (o.m_inf - m_bar).abs() > 1e-3,
                "alpha {alpha} reached {}",
                o.m_inf
            );
        }
    }
}

#[test]
fn full_ecm_tail_is_algebraic() {
    let a1 = find_alpha1(1.0, 1.0, &cfg(), None).unwrap();
    let o = shoot(a1.hi, 1.0, 1.0);
    assert_eq!(o.kind, ShotKind::ConvergedToM1);
    match tail_diagnostics(&o).unwrap() {
        TailReport::Algebraic {
            rel_residual_m,
            rel_residual_n,
            horizon_m,
            ..
        } => {
            assert!(rel_residual_m < 0.1, "{rel_residual_m}");
            assert!(rel_residual_n < 0.1, "{rel_residual_n}");
            assert!((horizon_m - 1.0).abs() < 0.1, "{horizon_m}");
        }
        other => panic!("unexpected report {other:?}"),
    }
}

#[test]
fn intermediate_ecm_tail_decays_at_slow_rate() {
    let s = find_alpha_for_mbar(2.0, 1.0, 0.5, &cfg()).unwrap();
    match tail_diagnostics(&s.outcome).unwrap() {
        TailReport::Exponential { rate, expected, .. } => {
            let nu1 = tail_eigen(2.0, 0.5).unwrap().real_pair().unwrap().0;
            assert!((expected - nu1).abs() < 1e-4);
            assert!((rate - nu1).abs() < 0.05 * nu1.abs(), "{rate} vs {nu1}");
        }
        other => panic!("unexpected report {other:?}"),
    }
    assert!(matches!(
        tail_diagnostics(&shoot(0.01, 1.0, 1.0)),
        Err(ShootError::NotConvergent(ShotKind::ExitedNegativeN))
    ));
}

#[test]
fn seed_truncation_is_robust() {
    let base = find_alpha1(1.0, 1.0, &cfg(), None).unwrap().value;
    let half = ShootConfig {
        seed_epsilon: 0.5e-8,
        ..cfg()
    };
    let a = find_alpha1(1.0, 1.0, &half, None).unwrap().value;
    assert!((a - base).abs() < 1e-5, "{a} vs {base}");
}

#[test]
fn invalid_inputs_are_domain_errors() {
    assert!(matches!(
        classify_trajectory(-1.0, 1.0, 1.0, &cfg()),
        Err(ShootError::Domain(_))
    ));
    assert!(matches!(
        classify_trajectory(1.0, 0.0, 1.0, &cfg()),
        Err(ShootError::Domain(_))
    ));
    assert!(matches!(
        find_alpha_for_mbar(2.0, 1.0, 1.0, &cfg()),
        Err(ShootError::Domain(_))
    ));
    let bad = ShootConfig {
        seed_epsilon: 1e-2,
        ..cfg()
    };
    assert!(classify_trajectory(1.0, 1.0, 1.0, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn larger_alpha_dominates(
        a in 0.05f64..8.0,
        factor in 1.01f64..3.0,
        c in 0.6f64..2.5,
        kappa in 0.3f64..4.0,
    ) {
        let lo = shoot(a, c, kappa);
        let hi = shoot(a * factor, c, kappa);
        let end = lo.t_exit.min(hi.t_exit).min(lo.trajectory.last_y()).min(hi.trajectory.last_y());
        for (y, s) in lo.trajectory.ys.iter().zip(&lo.trajectory.states) {
            if *y > end {
                break;
            }
            if let Some(h) = hi.trajectory.interpolate(*y) {
                prop_assert!(h[0] >= s[0] - 1e-9, "n at y = {}: {} < {}", y, h[0], s[0]);
                prop_assert!(h[2] >= s[2] - 1e-9, "m at y = {}: {} < {}", y, h[2], s[2]);
            }
        }
    }

    #[test]
    fn states_stay_in_the_invariant_box(
        a in 0.01f64..20.0,
        c in 0.5f64..3.0,
        kappa in 0.2f64..5.0,
    ) {
        let o = shoot(a, c, kappa);
        let mut m_prev = 0.0;
        // n = 1 - u rounds to 1.0 while the seed deficit u is below machine resolution.
        for s in &o.trajectory.states {
            if s[0] <= 0.0 {
                break;
            }
            prop_assert!(s[0] <= 1.0 && s[1] < 1e-12 && s[2] > 0.0 && s[2] < 1.0, "{:?}", s);
            prop_assert!(s[2] >= m_prev - 1e-12);
            m_prev = s[2];
        }
    }

    #[test]
    fn intermediate_limits_match_closed_form(
        a in 0.5f64..6.0,
        c in 1.0f64..3.0,
        kappa in 0.3f64..3.0,
    ) {
        let o = shoot(a, c, kappa);
        prop_assume!(o.kind == ShotKind::ConvergedToMbar);
        let err = closed_form_deviation(&o);
        prop_assert!(err < 1e-4, "closed-form mismatch {err:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn separatrix_shots_follow_centre_manifold(
        c in 0.8f64..2.5,
        kappa in 0.5f64..3.0,
    ) {
        let a1 = find_alpha1(c, kappa, &cfg(), None).unwrap().value;
        let o = shoot(a1 * (1.0 + 1e-6), c, kappa);
        prop_assert_eq!(o.kind, ShotKind::ConvergedToM1);
        match tail_diagnostics(&o).unwrap() {
            TailReport::Algebraic { horizon_m, rel_residual_m, .. } => {
                prop_assert!((horizon_m - c).abs() < 0.1 * c, "y(1-m) = {horizon_m} vs c = {c}");
                prop_assert!(rel_residual_m < 0.1);
            }
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn shots_above_separatrix_keep_tumour_behind(
        c in 0.8f64..2.5,
        kappa in 0.5f64..3.0,
        over in 0.05f64..2.0,
    ) {
        let a1 = find_alpha1(c, kappa, &cfg(), None).unwrap().value;
        let o = shoot(a1 * (1.0 + over), c, kappa);
        prop_assert_eq!(o.kind, ShotKind::ConvergedToM1);
        // Limit (n_inf, 0, 1) with n_inf > 0: 1 - m decays exponentially, far below c/y.
        let s = o.trajectory.last_state();
        prop_assert!(s[0] > 1e-3 && s[0] < 1.0, "n = {}", s[0]);
        prop_assert!(o.trajectory.last_y() * (1.0 - s[2]) < 1e-3 * c);
    }
}
