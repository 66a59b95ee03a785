//! Phase-plane audit of the concavity hypothesis for the effective reaction
//! term `g(n) = (1 - n) n (1 - M(n))`.
//!
//! With `n` as the independent variable the wave satisfies
//!
//! ```text
//! P' = -c - (1 - n) n (1 - M) / P,
//! M' = (kappa / c) M (1 - M) n / P,
//! ```
//!
//! started from the node at `n = 0` along one of its eigendirections. Writing
//! `g'' = -2 (1 - M)(1 - H)`, concavity of `g` on `[0, 1]` is `H < 1` there.

use crate::model::{self, DomainError};
use crate::ode::{EventSpec, Integrator};
use thiserror::Error;

/// Number of uniform samples on `[n_tol, 1 - n_tol]`.
pub const SAMPLE_COUNT: usize = 2001;
/// Default distance of the start and end points from the singular ends.
pub const DEFAULT_N_TOL: f64 = 1e-6;
/// Tolerance used when deciding the sign flags.
pub const FLAG_TOL: f64 = 1e-9;

const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Steeper root `(-c - sqrt(c^2 - 4(1 - m_bar))) / 2`.
    Minus,
    /// Shallower root `(-c + sqrt(c^2 - 4(1 - m_bar))) / 2`.
    Plus,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConjectureError {
    #[error("domain error: {0}")]
    Domain(#[from] DomainError),
    #[error("slopes at n = 0 are complex: c = {c} < 2 sqrt(1 - m_bar) for m_bar = {m_bar}")]
    ComplexRoots { c: f64, m_bar: f64 },
    #[error("slope P reached zero at n = {n}")]
    SingularSlope { n: f64 },
}

/// Both roots of `s^2 + c s + (1 - m_bar) = 0`, ordered `(minus, plus)`.
pub fn p_prime_zero(c: f64, m_bar: f64) -> Result<(f64, f64), ConjectureError> {
    model::check_speed(c)?;
    if !(0.0..1.0).contains(&m_bar) {
        return Err(DomainError(format!("m_bar must lie in [0, 1), got {m_bar}")).into());
    }
    let q = 1.0 - m_bar;
    let mut disc = c * c - 4.0 * q;
    if disc < 0.0 {
        // Rounding at the critical speed counts as a double root.
        if disc > -1e-12 * c * c {
            disc = 0.0;
        } else {
            return Err(ConjectureError::ComplexRoots { c, m_bar });
        }
    }
    let r = disc.sqrt();
    let minus = (-c - r) / 2.0;
    Ok((minus, q / minus))
}

/// Limit of `H` at `n = 0` on the given branch: `-m_bar (kappa / c) / P'(0)`.
pub fn h_at_zero(c: f64, kappa: f64, m_bar: f64, branch: Branch) -> Result<f64, ConjectureError> {
    model::check_kappa(kappa)?;
    let (minus, plus) = p_prime_zero(c, m_bar)?;
    let slope = match branch {
        Branch::Minus => minus,
        Branch::Plus => plus,
    };
    Ok(-m_bar * kappa / c / slope)
}

/// Forward solution of the phase-plane system sampled on a uniform `n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlaneSolution {
    pub n_samples: Vec<f64>,
    pub p_vals: Vec<f64>,
    pub m_vals: Vec<f64>,
    /// Accumulated `int_0^n q / (-P(q)) dq`.
    pub q_vals: Vec<f64>,
    pub branch: Branch,
    pub p_prime_0: f64,
    pub c: f64,
    pub kappa: f64,
    pub m_bar: f64,
    pub n_tol: f64,
}

impl PhasePlaneSolution {
    /// `M` from the logistic closed form driven by the accumulated integral.
    pub fn closed_form_m(&self, q: f64) -> f64 {
        closed_form(self.m_bar, self.kappa, self.c, q)
    }

    /// Residuals of the right-end conditions `P(1) = M(1) = 0`.
    pub fn end_residual(&self) -> (f64, f64) {
        (*self.p_vals.last().unwrap(), *self.m_vals.last().unwrap())
    }
}

fn closed_form(m_bar: f64, kappa: f64, c: f64, q: f64) -> f64 {
    if m_bar == 0.0 {
        return 0.0;
    }
    m_bar / (m_bar + (1.0 - m_bar) * (kappa / c * q).exp())
}

fn rhs(n: f64, s: &[f64; 3], c: f64, kappa: f64) -> [f64; 3] {
    let [p, m, _] = *s;
    [
        -c - (1.0 - n) * n * (1.0 - m) / p,
        kappa / c * m * (1.0 - m) * n / p,
        -n / p,
    ]
}

pub fn integrate_phase_plane(
    c: f64,
    kappa: f64,
    m_bar: f64,
    branch: Branch,
    n_tol: f64,
) -> Result<PhasePlaneSolution, ConjectureError> {
    model::check_kappa(kappa)?;
    if !(n_tol > 0.0 && n_tol < 0.1) {
        return Err(DomainError(format!("n_tol must lie in (0, 0.1), got {n_tol}")).into());
    }
    let (minus, plus) = p_prime_zero(c, m_bar)?;
    let slope = match branch {
        Branch::Minus => minus,
        Branch::Plus => plus,
    };
    let q0 = n_tol / -slope;
    let start = [slope * n_tol, closed_form(m_bar, kappa, c, q0), q0];
    let n_end = 1.0 - n_tol;
    let events = [EventSpec::new("p_zero", 1, true, |_, s: &[f64; 3]| s[0])];
    let traj = Integrator::with_tolerances(REL_TOL, ABS_TOL)
        .integrate(|n, s| rhs(n, s, c, kappa), n_tol, start, n_end, &events)
        .map_err(|e| ConjectureError::SingularSlope { n: e.location() })?;
    if let Some(hit) = traj.events.iter().find(|h| h.id == "p_zero") {
        return Err(ConjectureError::SingularSlope { n: hit.y });
    }

    let step = (n_end - n_tol) / (SAMPLE_COUNT - 1) as f64;
    let mut sol = PhasePlaneSolution {
        n_samples: Vec::with_capacity(SAMPLE_COUNT),
        p_vals: Vec::with_capacity(SAMPLE_COUNT),
        m_vals: Vec::with_capacity(SAMPLE_COUNT),
        q_vals: Vec::with_capacity(SAMPLE_COUNT),
        branch,
        p_prime_0: slope,
        c,
        kappa,
        m_bar,
        n_tol,
    };
    for i in 0..SAMPLE_COUNT {
        let n = if i + 1 == SAMPLE_COUNT {
            n_end
        } else {
            n_tol + step * i as f64
        };
        let s = traj
            .interpolate(n)
            .ok_or(ConjectureError::SingularSlope { n: traj.last_y() })?;
        sol.n_samples.push(n);
        sol.p_vals.push(s[0]);
        sol.m_vals.push(s[1]);
        sol.q_vals.push(s[2]);
    }
    Ok(sol)
}

/// `g`, its derivatives and `H` on the solution's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionDiagnostics {
    pub n: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    /// Direct expansion `-2(1-M) - 2(1-2n)M' - n(1-n)M''`.
    pub g_double_prime: Vec<f64>,
    pub h: Vec<f64>,
    /// One-sided difference `(g(n_tol) - g(0)) / n_tol`.
    pub g_prime_at_0: f64,
    /// Limit `-m_bar (kappa / c) / P'(0)`.
    pub h_at_0: f64,
    pub g_at_0: f64,
    pub g_at_1: f64,
}

pub fn reaction_diagnostics(sol: &PhasePlaneSolution) -> ReactionDiagnostics {
    let (c, kappa) = (sol.c, sol.kappa);
    let r = kappa / c;
    let k = sol.n_samples.len();
    let mut d = ReactionDiagnostics {
        n: sol.n_samples.clone(),
        g: Vec::with_capacity(k),
        g_prime: Vec::with_capacity(k),
        g_double_prime: Vec::with_capacity(k),
        h: Vec::with_capacity(k),
        g_prime_at_0: 0.0,
        h_at_0: -sol.m_bar * r / sol.p_prime_0,
        g_at_0: 0.0,
        g_at_1: 0.0,
    };
    for i in 0..k {
        let (n, p, m) = (sol.n_samples[i], sol.p_vals[i], sol.m_vals[i]);
        let dp = -c - (1.0 - n) * n * (1.0 - m) / p;
        let dm = r * m * (1.0 - m) * n / p;
        let ddm = r * ((1.0 - 2.0 * m) * dm * n / p + m * (1.0 - m) * (1.0 / p - n * dp / (p * p)));
        d.g.push((1.0 - n) * n * (1.0 - m));
        d.g_prime
            .push((1.0 - 2.0 * n) * (1.0 - m) - n * (1.0 - n) * dm);
        d.g_double_prime
            .push(-2.0 * (1.0 - m) - 2.0 * (1.0 - 2.0 * n) * dm - n * (1.0 - n) * ddm);
        let np = n / p;
        let brace = (1.0 - 2.0 * n + (1.0 - n) / 2.0) / np
            + r * n * (1.0 - n) / 2.0 * (1.0 - 2.0 * m)
            - (1.0 - n) / 2.0 * dp;
        d.h.push(-m * r * np * np * brace);
    }
    let m_end = *sol.m_vals.last().unwrap();
    let g = |n: f64, m: f64| (1.0 - n) * n * (1.0 - m);
    d.g_at_0 = g(0.0, sol.m_bar);
    d.g_at_1 = g(1.0, m_end);
    d.g_prime_at_0 = (d.g[0] - d.g_at_0) / sol.n_samples[0];
    d
}

/// Sign flags of one scan cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConjectureFlags {
    pub g_kpp_type: bool,
    pub h0_lt_1: bool,
    pub h_lt_1_everywhere: bool,
    pub h_monotone_nonincreasing: bool,
    pub g_dd_negative_everywhere: bool,
}

pub fn decide_flags(d: &ReactionDiagnostics) -> ConjectureFlags {
    let tol = FLAG_TOL;
    ConjectureFlags {
        g_kpp_type: d.g_at_0.abs() <= tol && d.g_at_1.abs() <= tol && d.g.iter().all(|v| *v > -tol),
        h0_lt_1: d.h_at_0 < 1.0 + tol,
        h_lt_1_everywhere: d.h_at_0 < 1.0 + tol && d.h.iter().all(|v| *v < 1.0 + tol),
        h_monotone_nonincreasing: d.h_at_0 >= d.h[0] - tol
            && d.h.windows(2).all(|w| w[1] <= w[0] + tol),
        g_dd_negative_everywhere: d.g_double_prime.iter().all(|v| *v < tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Indeterminate,
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub kappa: f64,
    pub m_bar: f64,
    pub c: f64,
    pub branch: Branch,
    /// Closed-form limit, available whenever the slopes at `n = 0` are real.
    pub h_at_0: Option<f64>,
    /// Sampled flags, present only when the integration succeeded.
    pub flags: Option<ConjectureFlags>,
    pub status: CellStatus,
    pub message: Option<String>,
}

impl ScanCell {
    pub fn h0_lt_1(&self) -> Option<bool> {
        self.h_at_0.map(|h| h < 1.0 + FLAG_TOL)
    }
}

/// Default test speed: the linear spreading speed `2 sqrt(1 - m_bar)`.
pub fn critical_speed(_kappa: f64, m_bar: f64) -> f64 {
    model::linear_speed(m_bar)
}

/// Evaluates one `(kappa, m_bar)` cell at speed `c`.
pub fn scan_cell(kappa: f64, m_bar: f64, c: f64, branch: Branch, n_tol: f64) -> ScanCell {
    let h_at_0 = h_at_zero(c, kappa, m_bar, branch).ok();
    let (flags, status, message) = match integrate_phase_plane(c, kappa, m_bar, branch, n_tol) {
        Ok(sol) => (
            Some(decide_flags(&reaction_diagnostics(&sol))),
            CellStatus::Ok,
            None,
        ),
        Err(e) => (None, CellStatus::Indeterminate, Some(e.to_string())),
    };
    ScanCell {
        kappa,
        m_bar,
        c,
        branch,
        h_at_0,
        flags,
        status,
        message,
    }
}

/// Cells in row-major order, `kappa` outer and `m_bar` inner.
pub fn conjecture_scan(
    kappa_grid: &[f64],
    m_bar_grid: &[f64],
    c_rule: impl Fn(f64, f64) -> f64,
    branch: Branch,
) -> Result<Vec<ScanCell>, DomainError> {
    if kappa_grid.is_empty() || m_bar_grid.is_empty() {
        return Err(DomainError("scan grids must be non-empty".into()));
    }
    let mut out = Vec::with_capacity(kappa_grid.len() * m_bar_grid.len());
    for &k in kappa_grid {
        for &m in m_bar_grid {
            out.push(scan_cell(k, m, c_rule(k, m), branch, DEFAULT_N_TOL));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn slope_roots() {
        let (a, b) = p_prime_zero(2.0, 0.5).unwrap();
        assert_abs_diff_eq!(a, -1.70711, epsilon = 1e-5);
        assert_abs_diff_eq!(b, -0.29289, epsilon = 1e-5);
        let (a, b) = p_prime_zero(3.0, 0.75).unwrap();
        assert_abs_diff_eq!(a, -2.91421, epsilon = 1e-5);
        assert_abs_diff_eq!(b, -0.08579, epsilon = 1e-5);
        let c = 2.0 * 0.4f64.sqrt();
        let (a, b) = p_prime_zero(c, 0.6).unwrap();
        assert_abs_diff_eq!(a, -c / 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(b, -c / 2.0, epsilon = 1e-7);
        assert!(matches!(
            p_prime_zero(1.0, 0.5),
            Err(ConjectureError::ComplexRoots { .. })
        ));
        assert!(p_prime_zero(2.0, 1.0).is_err());
    }

    #[test]
    fn kpp_reduction_has_no_ecm() {
        let sol = integrate_phase_plane(2.5, 3.0, 0.0, Branch::Plus, DEFAULT_N_TOL).unwrap();
        assert!(sol.m_vals.iter().all(|v| *v == 0.0));
        let d = reaction_diagnostics(&sol);
        for v in &d.g_double_prime {
            assert_abs_diff_eq!(*v, -2.0, epsilon = 1e-12);
        }
        assert!(d.h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn h_at_zero_examples() {
        let c = 2.0 * 0.75f64.sqrt();
        let sol = integrate_phase_plane(c, 1.0, 0.25, Branch::Plus, DEFAULT_N_TOL).unwrap();
        assert!(reaction_diagnostics(&sol).h_at_0 < 1.0);
        assert!(h_at_zero(1.0, 10.0, 0.75, Branch::Plus).unwrap() > 1.0);
        // Past the concavity threshold the forward solution turns back at the
        // critical speed.
        assert!(matches!(
            integrate_phase_plane(1.0, 10.0, 0.75, Branch::Plus, DEFAULT_N_TOL),
            Err(ConjectureError::SingularSlope { .. })
        ));
        let cell = scan_cell(10.0, 0.75, 1.0, Branch::Plus, DEFAULT_N_TOL);
        assert_eq!(cell.status, CellStatus::Indeterminate);
        assert_eq!(cell.h0_lt_1(), Some(false));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(integrate_phase_plane(2.0, 0.0, 0.5, Branch::Plus, 1e-6).is_err());
        assert!(integrate_phase_plane(2.0, 1.0, 0.5, Branch::Plus, 0.0).is_err());
        assert!(integrate_phase_plane(0.5, 1.0, 0.5, Branch::Plus, 1e-6).is_err());
        assert!(conjecture_scan(&[], &[0.1], critical_speed, Branch::Plus).is_err());
    }
}
