//! Shooting from the invaded state `(1, 0, 0)` along its unstable manifold.
//!
//! A shot is parametrised by the amplitude `alpha` of the ECM component of the
//! manifold. Its fate is one of: `n` reaches zero (exit), convergence to
//! `(0, 0, m_inf)` with `m_inf < 1`, or convergence to `(n_inf, 0, 1)`.
//!
//! Classification leans on the quantity `F = p + c n + (c/kappa) ln m`, whose
//! derivative along orbits is `n^2 (1 - m) >= 0`. Its limit is `c n_inf` when
//! `m -> 1` and `(c/kappa) ln m_inf` otherwise, so `F > 0` at any point proves
//! the shot ends on `m = 1`. While `p < 0`, the remaining growth of `F` is at
//! most `B = n (c/kappa) ln(1/m)`, so `F + B < 0` proves it does not.

use crate::model::{
    check_kappa, check_speed, linear_speed, m_star, saddle_eigen, tail_eigen, DomainError,
};
use crate::ode::{
    rhs_desingularised, Control, EventSpec, IntegrationError, Integrator, StopReason, Trajectory,
};
use thiserror::Error;

/// Settings shared by all shots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootConfig {
    /// Amplitude at which the unstable-manifold expansion is truncated.
    pub seed_epsilon: f64,
    /// Initial integration horizon, measured from the seed point.
    pub y_max: f64,
    /// Number of times the horizon may be doubled when a shot is undecided.
    pub max_doublings: u32,
    /// Norm of the vector field below which a limit is declared.
    pub conv_tol: f64,
    /// Length in `y` over which the field must stay below `conv_tol`.
    pub dwell: f64,
    /// A shot exits once `n < -exit_tol`.
    pub exit_tol: f64,
    /// Fallback split between the two convergent kinds, `m_inf >= 1 - m1_split`.
    pub m1_split: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            seed_epsilon: 1e-8,
            y_max: 1e4,
            max_doublings: 3,
            conv_tol: 1e-9,
            dwell: 10.0,
            exit_tol: 1e-10,
            m1_split: 1e-3,
            rel_tol: 1e-11,
            abs_tol: 1e-20,
        }
    }
}

impl ShootConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        let ok = self.seed_epsilon > 0.0
            && self.seed_epsilon <= 1e-4
            && self.y_max > 0.0
            && self.conv_tol > 0.0
            && self.dwell >= 0.0
            && self.exit_tol > 0.0
            && self.m1_split > 0.0
            && self.m1_split < 1.0
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(DomainError(format!(
                "invalid shooting configuration: {self:?}"
            )))
        }
    }

    fn integrator(&self) -> Integrator {
        Integrator::with_tolerances(self.rel_tol, self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShotKind {
    ExitedNegativeN,
    ConvergedToMbar,
    ConvergedToM1,
    Inconclusive,
}

impl ShotKind {
    pub fn label(&self) -> &'static str {
        match self {
            ShotKind::ExitedNegativeN => "ExitedNegativeN",
            ShotKind::ConvergedToMbar => "ConvergedToMbar",
            ShotKind::ConvergedToM1 => "ConvergedToM1",
            ShotKind::Inconclusive => "Inconclusive",
        }
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self, ShotKind::ConvergedToMbar | ShotKind::ConvergedToM1)
    }
}

/// How a classification was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    /// `n` crossed zero on the computed trajectory.
    Crossing,
    /// The linearisation at the limit predicts a later zero of `n`.
    PredictedCrossing,
    /// `F > 0` or `F + B < 0`.
    Invariant,
    /// The vector field stayed below `conv_tol` over the dwell interval.
    Dwell,
    /// Neither certificate applied; decided by the `m1_split` rule.
    SplitRule,
    Undecided,
}

#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub kind: ShotKind,
    pub evidence: Evidence,
    /// Location of the zero of `n`, `f64::INFINITY` when there is none.
    pub t_exit: f64,
    pub n_inf: f64,
    pub p_inf: f64,
    pub m_inf: f64,
    /// `F` at the last sample.
    pub invariant: f64,
    pub alpha: f64,
    pub c: f64,
    pub kappa: f64,
    pub trajectory: Trajectory<3>,
}

#[derive(Debug, Error)]
pub enum ShootError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("integration failed for alpha = {alpha}: {source}")]
    Integration {
        alpha: f64,
        #[source]
        source: IntegrationError<3>,
    },
    #[error("no bracket found after {doublings} doublings (last alpha = {last})")]
    NoBracket { doublings: u32, last: f64 },
    #[error("inconclusive shot at alpha = {alpha}; enlarge y_max")]
    InconclusiveShot { alpha: f64 },
    #[error("c = {c} is below the minimal speed for m_bar = {m_bar}")]
    BelowMinimalSpeed { c: f64, m_bar: f64 },
    #[error("m_bar = {m_bar} not attained at c = {c}; limits jump from {below} to {above}")]
    NotAttained {
        c: f64,
        m_bar: f64,
        below: f64,
        above: f64,
    },
    #[error("shot is not convergent ({0:?})")]
    NotConvergent(ShotKind),
    #[error("insufficient tail data: {0}")]
    InsufficientData(String),
}

/// First point of a shot: `y0` and `(n, p, m)` with the leading manifold terms.
pub fn seed_state(
    alpha: f64,
    c: f64,
    kappa: f64,
    cfg: &ShootConfig,
) -> Result<(f64, [f64; 3]), DomainError> {
    let (y0, u, p, m) = seed_parts(alpha, c, kappa, cfg)?;
    Ok((y0, [1.0 - u, p, m]))
}

/// Seed point with the deficit `1 - n` kept separately.
fn seed_parts(
    alpha: f64,
    c: f64,
    kappa: f64,
    cfg: &ShootConfig,
) -> Result<(f64, f64, f64, f64), DomainError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(DomainError(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    let e = saddle_eigen(c, kappa)?;
    let eps = cfg.seed_epsilon;
    let mut y0 = eps.ln() / e.lambda2;
    if alpha > 0.0 {
        y0 = y0.min((eps / alpha).ln() / e.lambda3);
    }
    let en = (e.lambda2 * y0).exp();
    let m = alpha * (e.lambda3 * y0).exp();
    Ok((y0, en, -e.lambda2 * en, m))
}

fn invariant(s: &[f64; 3], c: f64, kappa: f64) -> f64 {
    s[1] + c * s[0] + c / kappa * s[2].ln()
}

fn growth_bound(s: &[f64; 3], c: f64, kappa: f64) -> f64 {
    s[0].max(0.0) * c / kappa * (1.0 / s[2]).ln().max(0.0)
}

/// Zero of `n` predicted by the linearisation at `(0, 0, m_lim)`, as an offset
/// from the current point; `None` if the linear solution stays positive.
fn predicted_exit(n0: f64, p0: f64, c: f64, m_lim: f64) -> Option<f64> {
    let q = (1.0 - m_lim).max(0.0);
    let disc = c * c - 4.0 * q;
    if n0 <= 0.0 {
        return Some(0.0);
    }
    if disc < 0.0 {
        let a = -c / 2.0;
        let w = (-disc).sqrt() / 2.0;
        let b = (p0 - a * n0) / w;
        // n = R e^{a s} cos(w s - phi)
        let phi = b.atan2(n0);
        let mut theta = phi + std::f64::consts::FRAC_PI_2;
        while theta <= 0.0 {
            theta += std::f64::consts::PI;
        }
        return Some(theta / w);
    }
    if disc == 0.0 {
        let nu = -c / 2.0;
        let slope = p0 - nu * n0;
        return (slope < 0.0).then(|| -n0 / slope);
    }
    let s = disc.sqrt();
    let nu2 = (-c - s) / 2.0;
    let nu1 = if nu2 != 0.0 { q / nu2 } else { 0.0 };
    let c1 = (p0 - nu2 * n0) / (nu1 - nu2);
    if c1 < 0.0 {
        let c2 = n0 - c1;
        Some((-c2 / c1).ln() / (nu1 - nu2))
    } else {
        None
    }
}

/// Integrates one shot and classifies its fate.
pub fn classify_trajectory(
    alpha: f64,
    c: f64,
    kappa: f64,
    cfg: &ShootConfig,
) -> Result<ShootOutcome, ShootError> {
    cfg.validate()?;
    let (y0, u0, p0, m0) = seed_parts(alpha, c, kappa, cfg)?;
    let integ = cfg.integrator();
    let exit_tol = cfg.exit_tol;
    let events = [
        EventSpec::new("n_zero", -1, false, |_, s: &[f64; 3]| s[0]),
        EventSpec::new("exit", -1, true, move |_, s: &[f64; 3]| s[0] + exit_tol),
    ];
    let rhs = |_: f64, s: &[f64; 3]| rhs_desingularised(s, c, kappa);
    let mut dwell_start: Option<f64> = None;
    let mut monitor = |y: f64, _: &[f64; 3], f: &[f64; 3]| {
        let norm = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        if norm < cfg.conv_tol {
            let start = *dwell_start.get_or_insert(y);
            if y - start >= cfg.dwell {
                return Control::Stop;
            }
        } else {
            dwell_start = None;
        }
        Control::Continue
    };

    // Leave the saddle in the deficit u = 1 - n, which keeps full relative
    // precision while n is within rounding distance of 1.
    let mut horizon = y0 + cfg.y_max;
    let rhs_deficit = |_: f64, s: &[f64; 3]| {
        let [u, p, m] = *s;
        [
            -p,
            -c * p - u * (1.0 - u) * (1.0 - m),
            kappa / c * m * (1.0 - m) * (1.0 - u),
        ]
    };
    let half = [EventSpec::new("half", 1, true, |_, s: &[f64; 3]| {
        s[0] - 0.5
    })];
    let mut traj = integ
        .integrate_monitored(rhs_deficit, y0, [u0, p0, m0], horizon, &half, &mut monitor)
        .map_err(|source| ShootError::Integration { alpha, source })?;
    traj.map_affine([-1.0, 1.0, 1.0], [1.0, 0.0, 0.0]);
    let mut resume = traj.stop == StopReason::TerminalEvent;
    if resume {
        traj.terminal_event = None;
        traj.events.clear();
        traj.stop = StopReason::Horizon;
    }

    let mut doublings = 0;
    loop {
        if resume {
            let piece = integ
                .integrate_monitored(
                    rhs,
                    traj.last_y(),
                    traj.last_state(),
                    horizon,
                    &events,
                    &mut monitor,
                )
                .map_err(|source| ShootError::Integration { alpha, source })?;
            traj.extend_with(piece);
        }
        resume = true;
        let done = traj.terminal_event.is_some() || traj.stop == StopReason::Monitor;
        if done || doublings >= cfg.max_doublings {
            break;
        }
        // Undecided at the horizon: keep going only if no certificate settles it.
        let s = traj.last_state();
        if s[2] > 0.0 {
            let f = invariant(&s, c, kappa);
            if f > 0.0 || (s[1] < 0.0 && f + growth_bound(&s, c, kappa) < 0.0 && s[0] < 1e-6) {
                break;
            }
        }
        doublings += 1;
        horizon = y0 + cfg.y_max * 2f64.powi(doublings as i32);
    }
    Ok(decide(alpha, c, kappa, cfg, traj))
}

fn decide(alpha: f64, c: f64, kappa: f64, cfg: &ShootConfig, traj: Trajectory<3>) -> ShootOutcome {
    let s = traj.last_state();
    let converged = traj.stop == StopReason::Monitor;
    let t_zero = traj.events.iter().find(|e| e.id == "n_zero").map(|e| e.y);
    let mut out = ShootOutcome {
        kind: ShotKind::Inconclusive,
        evidence: Evidence::Undecided,
        t_exit: f64::INFINITY,
        n_inf: s[0],
        p_inf: s[1],
        m_inf: s[2],
        invariant: if s[2] > 0.0 {
            invariant(&s, c, kappa)
        } else {
            f64::NEG_INFINITY
        },
        alpha,
        c,
        kappa,
        trajectory: traj,
    };

    if let Some(t) = t_zero {
        out.kind = ShotKind::ExitedNegativeN;
        out.evidence = Evidence::Crossing;
        out.t_exit = t;
        return out;
    }

    // Candidate limit for the ECM component.
    let (certain_m1, certain_not_m1, m_est) = if s[2] > 0.0 {
        let f = out.invariant;
        let b = growth_bound(&s, c, kappa);
        let monotone = s[1] < 0.0 || (s[1] == 0.0 && s[0] >= 0.0);
        let est = (kappa * (f + 0.5 * b) / c).exp().min(1.0);
        (f > 0.0, monotone && f + b < 0.0, est)
    } else {
        (false, true, 0.0)
    };

    let fallback_m1 = s[2] >= 1.0 - cfg.m1_split;
    if certain_m1 || (!certain_not_m1 && converged && fallback_m1) {
        out.kind = ShotKind::ConvergedToM1;
        out.evidence = if certain_m1 {
            Evidence::Invariant
        } else {
            Evidence::SplitRule
        };
        out.m_inf = 1.0;
        out.n_inf = s[0].max(0.0);
        return out;
    }
    if !(certain_not_m1 || converged) {
        if fallback_m1 {
            out.kind = ShotKind::ConvergedToM1;
            out.evidence = Evidence::SplitRule;
            out.m_inf = 1.0;
        }
        return out;
    }
    // Heading for (0, 0, m_est) unless the linearisation there reaches n = 0 first.
    let m_lim = if s[2] > 0.0 { m_est.max(s[2]) } else { 0.0 };
    if let Some(dt) = predicted_exit(s[0], s[1], c, m_lim) {
        out.kind = ShotKind::ExitedNegativeN;
        out.evidence = Evidence::PredictedCrossing;
        out.t_exit = out.trajectory.last_y() + dt;
        return out;
    }
    if !converged && s[0] > 1e-3 {
        return out;
    }
    out.kind = ShotKind::ConvergedToMbar;
    out.evidence = if converged {
        Evidence::Dwell
    } else {
        Evidence::Invariant
    };
    out.m_inf = m_lim;
    out
}

/// Result of a bisection over `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBracket {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub shots: usize,
}

impl AlphaBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn kind_of(alpha: f64, c: f64, kappa: f64, cfg: &ShootConfig) -> Result<ShootOutcome, ShootError> {
    let o = classify_trajectory(alpha, c, kappa, cfg)?;
    if o.kind == ShotKind::Inconclusive {
        return Err(ShootError::InconclusiveShot { alpha });
    }
    Ok(o)
}

/// Bisects a monotone indicator that is false at `lo` and true at `hi`.
fn bisect_indicator(
    mut lo: f64,
    mut hi: f64,
    mut shots: usize,
    rel_width: f64,
    mut pred: impl FnMut(f64) -> Result<bool, ShootError>,
) -> Result<AlphaBracket, ShootError> {
    while hi - lo >= rel_width * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        shots += 1;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(AlphaBracket {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        shots,
    })
}

/// Doubles upward from `start` until `pred` holds, returning `(last_false, first_true, shots)`.
fn expand_upward(
    start: f64,
    floor: f64,
    mut pred: impl FnMut(f64) -> Result<bool, ShootError>,
) -> Result<(f64, f64, usize), ShootError> {
    let mut lo = floor;
    let mut hi = start;
    for k in 0..=60u32 {
        if pred(hi)? {
            return Ok((lo, hi, k as usize + 1));
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(ShootError::NoBracket {
        doublings: 60,
        last: hi,
    })
}

const ALPHA_WIDTH: f64 = 1e-6;

/// Smallest `alpha` whose shot ends on `m = 1`.
pub fn find_alpha1(
    c: f64,
    kappa: f64,
    cfg: &ShootConfig,
    bracket_hint: Option<(f64, f64)>,
) -> Result<AlphaBracket, ShootError> {
    check_speed(c)?;
    check_kappa(kappa)?;
    let is_m1 = |a: f64| Ok(kind_of(a, c, kappa, cfg)?.kind == ShotKind::ConvergedToM1);
    let (mut lo, mut hi, mut shots) = (0.0f64, 1.0, 0);
    if let Some((a, b)) = bracket_hint {
        if a >= 0.0 && b > a {
            shots += 2;
            if !is_m1(a)? && is_m1(b)? {
                return bisect_indicator(a, b, shots, ALPHA_WIDTH, is_m1);
            }
            hi = b;
        }
    }
    let (l, h, n) = expand_upward(hi, 0.0, is_m1)?;
    lo = lo.max(l);
    hi = h;
    shots += n;
    bisect_indicator(lo, hi, shots, ALPHA_WIDTH, is_m1)
}

/// Smallest `alpha` whose shot does not exit; zero for `c >= 2`.
pub fn find_alpha0(c: f64, kappa: f64, cfg: &ShootConfig) -> Result<AlphaBracket, ShootError> {
    check_speed(c)?;
    check_kappa(kappa)?;
    if c >= 2.0 {
        return Ok(AlphaBracket {
            value: 0.0,
            lo: 0.0,
            hi: 0.0,
            shots: 0,
        });
    }
    let stays = |a: f64| Ok(kind_of(a, c, kappa, cfg)?.kind != ShotKind::ExitedNegativeN);
    let (lo, hi, n) = expand_upward(1.0, 0.0, stays)?;
    bisect_indicator(lo, hi, n, ALPHA_WIDTH, stays)
}

/// Result of the search for the shot that ends at a prescribed ECM density.
#[derive(Debug, Clone)]
pub struct MbarSolution {
    pub alpha: f64,
    pub m_inf: f64,
    pub bracket: AlphaBracket,
    pub outcome: ShootOutcome,
}

/// `alpha` whose shot converges to `(0, 0, m_bar)`.
pub fn find_alpha_for_mbar(
    c: f64,
    kappa: f64,
    m_bar: f64,
    cfg: &ShootConfig,
) -> Result<MbarSolution, ShootError> {
    check_speed(c)?;
    check_kappa(kappa)?;
    if !(m_bar > 0.0 && m_bar < 1.0) {
        return Err(DomainError(format!("m_bar must lie in (0,1), got {m_bar}")).into());
    }
    if c < linear_speed(m_bar) * (1.0 - 1e-12) {
        return Err(ShootError::BelowMinimalSpeed { c, m_bar });
    }
    let tol = cfg.conv_tol;
    // Signed distance of the shot's fate from the target: exits count as below.
    let score = |o: &ShootOutcome| -> f64 {
        match o.kind {
            ShotKind::ExitedNegativeN => -1.0,
            ShotKind::ConvergedToM1 => 1.0,
            _ => o.m_inf - m_bar,
        }
    };
    let mut best: Option<ShootOutcome> = None;
    let consider = |o: ShootOutcome, best: &mut Option<ShootOutcome>| -> f64 {
        let s = score(&o);
        if o.kind == ShotKind::ConvergedToMbar && s.abs() < tol {
            let better = best
                .as_ref()
                .is_none_or(|b| s.abs() < (b.m_inf - m_bar).abs());
            if better {
                *best = Some(o);
            }
        }
        s
    };

    let (mut lo, mut hi, mut shots) = (0.0, 1.0, 0usize);
    let mut lo_out = kind_of(0.0, c, kappa, cfg)?;
    let mut hi_out;
    shots += 1;
    if consider(lo_out.clone(), &mut best) >= 0.0 {
        return Err(ShootError::NotAttained {
            c,
            m_bar,
            below: 0.0,
            above: lo_out.m_inf,
        });
    }
    loop {
        let o = kind_of(hi, c, kappa, cfg)?;
        shots += 1;
        let s = consider(o.clone(), &mut best);
        if best.is_some() {
            hi_out = o;
            break;
        }
        if s > 0.0 {
            hi_out = o;
            break;
        }
        lo = hi;
        lo_out = o;
        hi *= 2.0;
        if shots > 62 {
            return Err(ShootError::NoBracket {
                doublings: 60,
                last: hi,
            });
        }
    }
    while best.is_none() {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let o = kind_of(mid, c, kappa, cfg)?;
        shots += 1;
        let s = consider(o.clone(), &mut best);
        if best.is_some() {
            break;
        }
        if s < 0.0 {
            lo = mid;
            lo_out = o;
        } else {
            hi = mid;
            hi_out = o;
        }
    }
    match best {
        Some(o) => Ok(MbarSolution {
            alpha: o.alpha,
            m_inf: o.m_inf,
            bracket: AlphaBracket {
                value: o.alpha,
                lo,
                hi,
                shots,
            },
            outcome: o,
        }),
        None => {
            let limit = |o: &ShootOutcome| match o.kind {
                ShotKind::ConvergedToMbar => o.m_inf,
                ShotKind::ConvergedToM1 => 1.0,
                _ => f64::NAN,
            };
            if lo_out.kind == ShotKind::ExitedNegativeN && limit(&hi_out) > m_bar + tol {
                Err(ShootError::BelowMinimalSpeed { c, m_bar })
            } else {
                Err(ShootError::NotAttained {
                    c,
                    m_bar,
                    below: limit(&lo_out),
                    above: limit(&hi_out),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedMethod {
    Formula,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSpeedResult {
    pub c_star: f64,
    /// Largest speed found infeasible and smallest found feasible.
    pub lo: f64,
    pub hi: f64,
    pub method: SpeedMethod,
}

/// Minimal wave speed: closed form where it is known, bisection otherwise.
pub fn min_speed_search(
    kappa: f64,
    m_bar: f64,
    cfg: &ShootConfig,
) -> Result<MinSpeedResult, ShootError> {
    check_kappa(kappa)?;
    if !(0.0..1.0).contains(&m_bar) {
        return Err(DomainError(format!("m_bar must lie in [0,1), got {m_bar}")).into());
    }
    if m_bar <= m_star(kappa)? {
        let v = linear_speed(m_bar);
        return Ok(MinSpeedResult {
            c_star: v,
            lo: v,
            hi: v,
            method: SpeedMethod::Formula,
        });
    }
    min_speed_numeric(kappa, m_bar, cfg, 1e-3)
}

/// Bisection on `c` over `[2 sqrt(1 - m_bar), 2]` with feasibility decided by
/// [`find_alpha_for_mbar`].
pub fn min_speed_numeric(
    kappa: f64,
    m_bar: f64,
    cfg: &ShootConfig,
    width: f64,
) -> Result<MinSpeedResult, ShootError> {
    check_kappa(kappa)?;
    if !(0.0..1.0).contains(&m_bar) {
        return Err(DomainError(format!("m_bar must lie in [0,1), got {m_bar}")).into());
    }
    let lower = linear_speed(m_bar);
    let numeric = |c_star: f64, lo: f64, hi: f64| MinSpeedResult {
        c_star,
        lo,
        hi,
        method: SpeedMethod::Numeric,
    };
    if m_bar == 0.0 {
        return Ok(numeric(2.0, 2.0, 2.0));
    }
    let feasible = |c: f64| match find_alpha_for_mbar(c, kappa, m_bar, cfg) {
        Ok(_) => Ok(true),
        Err(ShootError::BelowMinimalSpeed { .. }) | Err(ShootError::NotAttained { .. }) => {
            Ok(false)
        }
        Err(e) => Err(e),
    };
    if feasible(lower)? {
        return Ok(numeric(lower, lower, lower));
    }
    let mut lo = lower;
    let mut hi = 2.0f64.max(lower);
    let mut tries = 0;
    while !feasible(hi)? {
        lo = hi;
        hi *= 1.25;
        tries += 1;
        if tries > 8 {
            return Err(ShootError::NoBracket {
                doublings: tries,
                last: hi,
            });
        }
    }
    while hi - lo >= width {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(numeric(hi, lo, hi))
}

/// Largest deviation of `m` from the closed form
/// `m_inf / (m_inf + (1 - m_inf) exp((kappa/c) int_y^inf n))`, with the tail
/// integral of `n` accumulated by the trapezoid rule from the last sample.
pub fn closed_form_deviation(outcome: &ShootOutcome) -> f64 {
    let t = &outcome.trajectory;
    let ratio = outcome.kappa / outcome.c;
    let m_inf = outcome.m_inf;
    let k = t.ys.len();
    let mut tail = 0.0;
    let mut worst: f64 = 0.0;
    for i in (0..k).rev() {
        if i + 1 < k {
            tail += 0.5 * (t.ys[i + 1] - t.ys[i]) * (t.states[i][0] + t.states[i + 1][0]);
        }
        let rebuilt = m_inf / (m_inf + (1.0 - m_inf) * (ratio * tail).exp());
        worst = worst.max((rebuilt - t.states[i][2]).abs());
    }
    worst
}

/// Comparison of a convergent shot's tail with its predicted asymptotics.
#[derive(Debug, Clone, PartialEq)]
pub enum TailReport {
    /// Algebraic approach to `m = 1`: `1 - m ~ a_m / y`, `n + p/c ~ a_n / y`.
    Algebraic {
        a_m: f64,
        a_n: f64,
        expected_m: f64,
        expected_n: f64,
        rel_residual_m: f64,
        rel_residual_n: f64,
        /// `y (1 - m)` and `y (n + p/c)` at the last sample.
        horizon_m: f64,
        horizon_n: f64,
        samples: usize,
    },
    /// Exponential approach to `m_inf`: `m_inf - m ~ C e^{rate y}`.
    Exponential {
        rate: f64,
        expected: f64,
        rel_residual: f64,
        samples: usize,
    },
}

pub fn tail_diagnostics(outcome: &ShootOutcome) -> Result<TailReport, ShootError> {
    let (c, kappa) = (outcome.c, outcome.kappa);
    let t = &outcome.trajectory;
    match outcome.kind {
        ShotKind::ConvergedToM1 => {
            let y_end = t.last_y();
            if y_end <= 0.0 {
                return Err(ShootError::InsufficientData(
                    "horizon is not positive".into(),
                ));
            }
            let (mut snum, mut sden, mut nnum) = (0.0, 0.0, 0.0);
            let mut count = 0;
            for (y, s) in t.ys.iter().zip(&t.states) {
                if *y >= y_end / 10.0 && *y > 0.0 {
                    let w = 1.0 / (y * y);
                    snum += (1.0 - s[2]) / y;
                    nnum += (s[0] + s[1] / c) / y;
                    sden += w;
                    count += 1;
                }
            }
            if count < 8 {
                return Err(ShootError::InsufficientData(format!(
                    "{count} samples in the last decade"
                )));
            }
            let a_m = snum / sden;
            let a_n = nnum / sden;
            let s = t.last_state();
            Ok(TailReport::Algebraic {
                a_m,
                a_n,
                expected_m: c,
                expected_n: c / kappa,
                rel_residual_m: (a_m - c).abs() / c,
                rel_residual_n: (a_n - c / kappa).abs() / (c / kappa),
                horizon_m: y_end * (1.0 - s[2]),
                horizon_n: y_end * (s[0] + s[1] / c),
                samples: count,
            })
        }
        ShotKind::ConvergedToMbar => {
            let m_inf = outcome.m_inf;
            let te = tail_eigen(c, m_inf)?;
            let nu1 = te.real_pair().map(|(a, _)| a).unwrap_or(te.nu1_re);
            let (mut sx, mut sy, mut sxx, mut sxy, mut k) = (0.0, 0.0, 0.0, 0.0, 0usize);
            for (y, s) in t.ys.iter().zip(&t.states) {
                let d = m_inf - s[2];
                if d > 1e-8 && d < 1e-4 * m_inf.max(1e-3) && s[0] < 1e-2 {
                    let l = d.ln();
                    sx += y;
                    sy += l;
                    sxx += y * y;
                    sxy += y * l;
                    k += 1;
                }
            }
            if k < 8 {
                return Err(ShootError::InsufficientData(format!("{k} tail samples")));
            }
            let kf = k as f64;
            let denom = kf * sxx - sx * sx;
            if denom <= 0.0 {
                return Err(ShootError::InsufficientData(
                    "degenerate tail window".into(),
                ));
            }
            let rate = (kf * sxy - sx * sy) / denom;
            Ok(TailReport::Exponential {
                rate,
                expected: nu1,
                rel_residual: (rate - nu1).abs() / nu1.abs(),
                samples: k,
            })
        }
        other => Err(ShootError::NotConvergent(other)),
    }
}
