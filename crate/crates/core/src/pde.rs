//! Method-of-lines solver for the tumour/ECM system
//!
//! ```text
//! N_t = (D(M) N_x)_x + N(1 - N),   D(M) = 1 - M,
//! M_t = -kappa M N,
//! ```
//!
//! on `[0, L]` with zero flux for `N`. Space uses the conservative three-point
//! stencil; time uses TR-BDF2 (an L-stable, stiffly accurate ESDIRK) with an
//! embedded third-order error estimate and Newton on the block-tridiagonal
//! Jacobian.

use crate::model::DomainError;
use crate::model::{self};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct PdeConfig {
    pub length: f64,
    pub num_points: usize,
    pub sigma: f64,
    pub omega: f64,
    pub m_bar: f64,
    pub kappa: f64,
    pub t_final: f64,
    /// Requested snapshot times. Empty means every `output_interval` from 0.
    pub output_times: Vec<f64>,
    pub output_interval: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Test hook: drops both reaction terms.
    pub disable_reactions: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            length: 200.0,
            num_points: 2000,
            sigma: 0.2,
            omega: 0.1,
            m_bar: 0.0,
            kappa: 1.0,
            t_final: 100.0,
            output_times: Vec::new(),
            output_interval: 1.0,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            disable_reactions: false,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |msg: String| Err(DomainError(msg));
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad(format!(
                "domain length must be positive, got {}",
                self.length
            ));
        }
        if !(self.omega > 0.0 && self.omega < self.sigma && self.sigma < self.length) {
            return bad(format!(
                "need 0 < omega < sigma < L, got omega={}, sigma={}, L={}",
                self.omega, self.sigma, self.length
            ));
        }
        if self.num_points < 16 {
            return bad(format!(
                "num_points must be at least 16, got {}",
                self.num_points
            ));
        }
        if !(0.0..=1.0).contains(&self.m_bar) {
            return bad(format!("M_bar must lie in [0, 1], got {}", self.m_bar));
        }
        model::check_kappa(self.kappa)?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.output_times.is_empty() {
            if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
                return bad(format!(
                    "output_interval must be positive, got {}",
                    self.output_interval
                ));
            }
        } else {
            if !self.output_times.windows(2).all(|w| w[1] > w[0]) {
                return bad("output_times must be strictly increasing".into());
            }
            let (a, b) = (self.output_times[0], *self.output_times.last().unwrap());
            if a < 0.0 || b > self.t_final {
                return bad(format!("output_times must lie in [0, {}]", self.t_final));
            }
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.num_points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.num_points)
            .map(|i| {
                if i + 1 == self.num_points {
                    self.length
                } else {
                    i as f64 * dx
                }
            })
            .collect()
    }

    /// Snapshot times actually produced by [`run`].
    pub fn resolved_output_times(&self) -> Vec<f64> {
        if !self.output_times.is_empty() {
            return self.output_times.clone();
        }
        let k = (self.t_final / self.output_interval * (1.0 + 1e-12)).floor() as usize;
        let mut out: Vec<f64> = (0..=k).map(|i| i as f64 * self.output_interval).collect();
        if self.t_final - out.last().unwrap() > 1e-9 * self.t_final {
            out.push(self.t_final);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub t: f64,
    pub n: Vec<f64>,
    pub m: Vec<f64>,
}

impl PdeState {
    /// Trapezoid-weighted integral of `N`.
    pub fn mass(&self, dx: f64) -> f64 {
        trapezoid(&self.n, dx)
    }
}

fn trapezoid(v: &[f64], dx: f64) -> f64 {
    let k = v.len();
    let inner: f64 = v[1..k - 1].iter().sum();
    dx * (inner + 0.5 * (v[0] + v[k - 1]))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("domain error: {0}")]
    Domain(#[from] DomainError),
    #[error("time integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        reason: String,
        partial: Vec<PdeState>,
    },
    #[error("front not found at t = {t}: {crossings} crossings of the level")]
    FrontNotFound { t: f64, crossings: usize },
    #[error("not enough front positions in the fit window")]
    InsufficientData,
}

/// Bump initial data: tumour on `[0, sigma)`, ECM at `M_bar` elsewhere.
pub fn initial_condition(cfg: &PdeConfig) -> Result<PdeState, PdeError> {
    cfg.validate()?;
    let left = cfg.sigma - cfg.omega;
    let mut n = Vec::with_capacity(cfg.num_points);
    let mut m = Vec::with_capacity(cfg.num_points);
    for x in cfg.grid() {
        let nv = if x < left {
            1.0
        } else if x < cfg.sigma {
            let s = (x - left) / cfg.omega;
            let s2 = s * s;
            if s2 >= 1.0 - 1e-14 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - s2)).exp()
            }
        } else {
            0.0
        };
        n.push(nv);
        m.push(cfg.m_bar * (1.0 - nv));
    }
    Ok(PdeState { t: 0.0, n, m })
}

/// Conservative discretisation of `(D(M) N_x)_x` with mirrored ghost points.
pub fn diffusion_divergence(n: &[f64], m: &[f64], dx: f64) -> Result<Vec<f64>, DomainError> {
    if n.len() != m.len() {
        return Err(DomainError(format!(
            "field lengths differ: {} vs {}",
            n.len(),
            m.len()
        )));
    }
    if n.len() < 3 {
        return Err(DomainError("fields need at least three points".into()));
    }
    let mut out = vec![0.0; n.len()];
    divergence_into(n, m, dx, &mut out);
    Ok(out)
}

/// Half-cell flux numerator `(D_r + D_{r+1}) (N_{r+1} - N_r)`.
#[inline]
fn flux(n: &[f64], m: &[f64], r: usize) -> f64 {
    ((1.0 - m[r]) + (1.0 - m[r + 1])) * (n[r + 1] - n[r])
}

fn divergence_into(n: &[f64], m: &[f64], dx: f64, out: &mut [f64]) {
    let k = n.len();
    let s = 1.0 / (2.0 * dx * dx);
    let mut left = flux(n, m, 0);
    out[0] = 2.0 * left * s;
    for (r, o) in out.iter_mut().enumerate().take(k - 1).skip(1) {
        let right = flux(n, m, r);
        *o = (right - left) * s;
        left = right;
    }
    out[k - 1] = -2.0 * left * s;
}

/// `I - g J` for the interleaved system, with the local `M` rows eliminated.
///
/// Each `M` row couples only `dN_r` and `dM_r`, so `dM_r` is substituted into
/// the `N` rows, leaving a scalar tridiagonal system in `dN`.
#[derive(Default)]
struct Factored {
    // Schur-complement tridiagonal: sub, inverse modified pivot, super.
    lo: Vec<f64>,
    piv: Vec<f64>,
    up: Vec<f64>,
    // N-row coefficients on dM_{r-1}, dM_r, dM_{r+1}.
    ql: Vec<f64>,
    qd: Vec<f64>,
    qu: Vec<f64>,
    // M row: a_r dN_r + b_r dM_r.
    a: Vec<f64>,
    binv: Vec<f64>,
    qm: Vec<f64>,
    z: Vec<f64>,
}

impl Factored {
    fn resize(&mut self, k: usize) {
        for v in [
            &mut self.lo,
            &mut self.piv,
            &mut self.up,
            &mut self.ql,
            &mut self.qd,
            &mut self.qu,
            &mut self.a,
            &mut self.binv,
            &mut self.qm,
            &mut self.z,
        ] {
            v.resize(k, 0.0);
        }
    }

    /// Solves in place on an interleaved vector.
    fn solve(&mut self, rhs: &mut [f64]) {
        let k = self.piv.len();
        for r in 0..k {
            self.qm[r] = rhs[2 * r + 1] * self.binv[r];
        }
        for r in 0..k {
            let mut p = rhs[2 * r] - self.qd[r] * self.qm[r];
            if r > 0 {
                p -= self.ql[r] * self.qm[r - 1];
            }
            if r + 1 < k {
                p -= self.qu[r] * self.qm[r + 1];
            }
            if r > 0 {
                p -= self.lo[r] * self.piv[r - 1] * self.z[r - 1];
            }
            self.z[r] = p;
        }
        let mut x = 0.0;
        for r in (0..k).rev() {
            let mut v = self.z[r];
            if r + 1 < k {
                v -= self.up[r] * x;
            }
            x = v * self.piv[r];
            rhs[2 * r] = x;
            rhs[2 * r + 1] = self.qm[r] - self.a[r] * self.binv[r] * x;
        }
    }
}

/// Semi-discrete system on interleaved unknowns `[N_0, M_0, N_1, M_1, ...]`.
struct System {
    k: usize,
    dx: f64,
    kappa: f64,
    reactions: bool,
    n: Vec<f64>,
    m: Vec<f64>,
    div: Vec<f64>,
}

impl System {
    fn new(cfg: &PdeConfig) -> Self {
        let k = cfg.num_points;
        Self {
            k,
            dx: cfg.dx(),
            kappa: cfg.kappa,
            reactions: !cfg.disable_reactions,
            n: vec![0.0; k],
            m: vec![0.0; k],
            div: vec![0.0; k],
        }
    }

    fn unpack(&mut self, y: &[f64]) {
        for r in 0..self.k {
            self.n[r] = y[2 * r];
            self.m[r] = y[2 * r + 1];
        }
    }

    fn rhs(&mut self, y: &[f64], out: &mut [f64]) {
        self.unpack(y);
        divergence_into(&self.n, &self.m, self.dx, &mut self.div);
        for r in 0..self.k {
            let (n, m) = (self.n[r], self.m[r]);
            if self.reactions {
                out[2 * r] = self.div[r] + n * (1.0 - n);
                out[2 * r + 1] = -self.kappa * m * n;
            } else {
                out[2 * r] = self.div[r];
                out[2 * r + 1] = 0.0;
            }
        }
    }

    /// Factors `I - g J(y)` into `fac`; `false` on a vanishing pivot.
    fn factor(&mut self, y: &[f64], g: f64, fac: &mut Factored) -> bool {
        self.unpack(y);
        let k = self.k;
        fac.resize(k);
        let s = 1.0 / (2.0 * self.dx * self.dx);
        let (n, m) = (&self.n, &self.m);
        let d = |r: usize| 1.0 - m[r];
        for r in 0..k {
            // Jacobian of the N row: jl/jd/ju on dN, ml/md/mu on dM.
            let (jl, mut jd, ju, ml, md, mu) = if r == 0 {
                let (dd, dn) = (d(0) + d(1), n[1] - n[0]);
                (
                    0.0,
                    -2.0 * s * dd,
                    2.0 * s * dd,
                    0.0,
                    -2.0 * s * dn,
                    -2.0 * s * dn,
                )
            } else if r == k - 1 {
                let (dd, dn) = (d(r - 1) + d(r), n[r - 1] - n[r]);
                (
                    2.0 * s * dd,
                    -2.0 * s * dd,
                    0.0,
                    -2.0 * s * dn,
                    -2.0 * s * dn,
                    0.0,
                )
            } else {
                let (dl, dr) = (d(r - 1) + d(r), d(r) + d(r + 1));
                let (nl, nr) = (n[r - 1] - n[r], n[r + 1] - n[r]);
                (
                    s * dl,
                    -s * (dl + dr),
                    s * dr,
                    -s * nl,
                    -s * (nl + nr),
                    -s * nr,
                )
            };
            let (mut a, mut b) = (0.0, 1.0);
            if self.reactions {
                jd += 1.0 - 2.0 * n[r];
                a = g * self.kappa * m[r];
                b = 1.0 + g * self.kappa * n[r];
            }
            fac.lo[r] = -g * jl;
            fac.piv[r] = 1.0 - g * jd;
            fac.up[r] = -g * ju;
            fac.ql[r] = -g * ml;
            fac.qd[r] = -g * md;
            fac.qu[r] = -g * mu;
            fac.a[r] = a;
            fac.binv[r] = 1.0 / b;
        }
        // Schur complement, then Thomas elimination storing inverse pivots.
        for r in 0..k {
            let ar = fac.a[r] * fac.binv[r];
            fac.piv[r] -= fac.qd[r] * ar;
            if r > 0 {
                fac.up[r - 1] -= fac.qu[r - 1] * ar;
                fac.lo[r] -= fac.ql[r] * fac.a[r - 1] * fac.binv[r - 1];
            }
        }
        for r in 0..k {
            let mut p = fac.piv[r];
            if r > 0 {
                p -= fac.lo[r] * fac.piv[r - 1] * fac.up[r - 1];
            }
            if !p.is_finite() || p.abs() < 1e-300 {
                return false;
            }
            fac.piv[r] = 1.0 / p;
        }
        true
    }
}

fn pack(state: &PdeState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * state.n.len());
    for (n, m) in state.n.iter().zip(&state.m) {
        y.push(*n);
        y.push(*m);
    }
    y
}

fn unpack_state(t: f64, y: &[f64]) -> PdeState {
    PdeState {
        t,
        n: y.iter().step_by(2).copied().collect(),
        m: y.iter().skip(1).step_by(2).copied().collect(),
    }
}

// TR-BDF2 coefficients.
const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const DIAG: f64 = GAMMA / 2.0;
const W: f64 = std::f64::consts::SQRT_2 / 4.0;
const BHAT: [f64; 3] = [(1.0 - W) / 3.0, (3.0 * W + 1.0) / 3.0, DIAG / 3.0];

const NEWTON_MAX: usize = 8;
const NEWTON_TOL: f64 = 1e-3;
const MAX_STEPS: usize = 2_000_000;

struct Stepper<'a> {
    sys: System,
    cfg: &'a PdeConfig,
    f_tmp: Vec<f64>,
    res: Vec<f64>,
    fac: Factored,
}

impl<'a> Stepper<'a> {
    fn weight(&self, a: f64, b: f64) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * a.abs().max(b.abs())
    }

    /// Solves `Y = base + h*DIAG*f(Y)` from `guess`, returning `Y` and `f(Y)`.
    /// On success `self.fac` holds the last factorisation.
    fn stage(&mut self, base: &[f64], guess: Vec<f64>, h: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let g = h * DIAG;
        let mut y = guess;
        let mut prev = f64::INFINITY;
        for it in 0..NEWTON_MAX {
            if !self.sys.factor(&y, g, &mut self.fac) {
                return None;
            }
            self.sys.rhs(&y, &mut self.f_tmp);
            for i in 0..y.len() {
                self.res[i] = base[i] + g * self.f_tmp[i] - y[i];
            }
            self.fac.solve(&mut self.res);
            let mut norm: f64 = 0.0;
            for (yi, &d) in y.iter_mut().zip(&self.res) {
                let w = self.weight(*yi, *yi + d);
                *yi += d;
                norm += (d / w).powi(2);
            }
            norm = (norm / y.len() as f64).sqrt();
            if !norm.is_finite() || (it >= 2 && norm > prev) {
                return None;
            }
            if norm <= NEWTON_TOL {
                let mut fy = vec![0.0; y.len()];
                self.sys.rhs(&y, &mut fy);
                if fy.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                return Some((y, fy));
            }
            prev = norm;
        }
        None
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Integrates from the bump initial data to `t_final` and returns snapshots at
/// the resolved output times.
pub fn run(cfg: &PdeConfig) -> Result<Vec<PdeState>, PdeError> {
    let init = initial_condition(cfg)?;
    run_from(cfg, &init)
}

/// Same as [`run`] from an arbitrary state given at `t = 0`.
pub fn run_from(cfg: &PdeConfig, init: &PdeState) -> Result<Vec<PdeState>, PdeError> {
    cfg.validate()?;
    if init.n.len() != cfg.num_points || init.m.len() != cfg.num_points {
        return Err(
            DomainError(format!("initial state must have {} points", cfg.num_points)).into(),
        );
    }
    let times = cfg.resolved_output_times();
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] <= 0.0 {
        out.push(PdeState {
            t: times[next],
            ..init.clone()
        });
        next += 1;
    }

    let len = 2 * cfg.num_points;
    let mut st = Stepper {
        sys: System::new(cfg),
        cfg,
        f_tmp: vec![0.0; len],
        res: vec![0.0; len],
        fac: Factored::default(),
    };
    let mut y = pack(init);
    let mut k1 = vec![0.0; len];
    st.sys.rhs(&y, &mut k1);
    let mut t = 0.0;
    let h_max = (cfg.t_final / 10.0).min(1.0);
    let h_min = 1e-12 * cfg.t_final.max(1.0);
    let mut h = 1e-4f64.min(h_max);
    let mut steps = 0usize;
    let fail = |t: f64, reason: &str, out: Vec<PdeState>| PdeError::Integration {
        t,
        reason: reason.to_string(),
        partial: out,
    };

    while t < cfg.t_final {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(fail(t, "step limit exceeded", out));
        }
        let last = t + h >= cfg.t_final * (1.0 - 1e-14);
        if last {
            h = cfg.t_final - t;
        }

        // Stage 2 (trapezoid to t + GAMMA h).
        let base2: Vec<f64> = (0..len).map(|i| y[i] + h * DIAG * k1[i]).collect();
        let guess2: Vec<f64> = (0..len).map(|i| y[i] + h * GAMMA * k1[i]).collect();
        let Some((y2, k2)) = st.stage(&base2, guess2, h) else {
            h *= 0.25;
            if h < h_min {
                return Err(fail(t, "Newton failed at the step-size floor", out));
            }
            continue;
        };
        // Stage 3 (BDF2 to t + h).
        let base3: Vec<f64> = (0..len).map(|i| y[i] + h * W * (k1[i] + k2[i])).collect();
        let guess3: Vec<f64> = (0..len)
            .map(|i| y2[i] + h * (1.0 - GAMMA) * k2[i])
            .collect();
        let Some((y3, k3)) = st.stage(&base3, guess3, h) else {
            h *= 0.25;
            if h < h_min {
                return Err(fail(t, "Newton failed at the step-size floor", out));
            }
            continue;
        };

        let mut err: Vec<f64> = (0..len)
            .map(|i| h * ((W - BHAT[0]) * k1[i] + (W - BHAT[1]) * k2[i] + (DIAG - BHAT[2]) * k3[i]))
            .collect();
        st.fac.solve(&mut err);
        let mut en: f64 = 0.0;
        for i in 0..len {
            en += (err[i] / st.weight(y[i], y3[i])).powi(2);
        }
        en = (en / len as f64).sqrt();
        if !en.is_finite() {
            en = 1e10;
        }

        if en <= 1.0 {
            let t1 = t + h;
            while next < times.len() && times[next] <= t1 * (1.0 + 1e-14) {
                let tq = times[next];
                let v = if (tq - t1).abs() <= 1e-12 * t1.max(1.0) {
                    y3.clone()
                } else {
                    hermite(t, &y, &k1, t1, &y3, &k3, tq)
                };
                out.push(unpack_state(tq, &v));
                next += 1;
            }
            t = if last { cfg.t_final } else { t1 };
            y = y3;
            k1 = k3;
            let fac_h = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
            };
            h = (h * fac_h).min(h_max);
        } else {
            h *= (0.9 * en.powf(-1.0 / 3.0)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(fail(t, "step size underflow", out));
            }
        }
    }
    while next < times.len() {
        out.push(unpack_state(times[next], &y));
        next += 1;
    }
    Ok(out)
}

/// Least-squares line through the front positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the positions from the line.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrack {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub speed_fit: SpeedFit,
}

/// Single downward crossing of `level` by `n`, linearly interpolated.
pub fn front_position(x: &[f64], n: &[f64], level: f64, t: f64) -> Result<f64, PdeError> {
    let mut found = None;
    let mut crossings = 0;
    for i in 0..n.len() - 1 {
        let (a, b) = (n[i] - level, n[i + 1] - level);
        if (a >= 0.0) != (b >= 0.0) {
            crossings += 1;
            let s = a / (a - b);
            found = Some(x[i] + s * (x[i + 1] - x[i]));
        }
    }
    match (crossings, found) {
        (1, Some(p)) => Ok(p),
        _ => Err(PdeError::FrontNotFound { t, crossings }),
    }
}

pub fn fit_line(ts: &[f64], xs: &[f64]) -> Result<SpeedFit, PdeError> {
    let k = ts.len();
    if k < 2 {
        return Err(PdeError::InsufficientData);
    }
    let kf = k as f64;
    let mt = ts.iter().sum::<f64>() / kf;
    let mx = xs.iter().sum::<f64>() / kf;
    let stt: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    if stt <= 0.0 {
        return Err(PdeError::InsufficientData);
    }
    let stx: f64 = ts.iter().zip(xs).map(|(t, x)| (t - mt) * (x - mx)).sum();
    let slope = stx / stt;
    let intercept = mx - slope * mt;
    let ss: f64 = ts
        .iter()
        .zip(xs)
        .map(|(t, x)| (x - intercept - slope * t).powi(2))
        .sum();
    Ok(SpeedFit {
        slope,
        intercept,
        residual: (ss / kf).sqrt(),
    })
}

/// Tracks `N = level` on every state and fits a line over the last half of
/// the time window.
pub fn track_front(states: &[PdeState], x: &[f64], level: f64) -> Result<FrontTrack, PdeError> {
    let cut = fit_cut(states)?;
    track_from(states, x, level, cut)
}

/// Like [`track_front`], but starts after the last state without a single
/// front, so the early transient of a narrow bump is skipped. The fit window
/// is still the last half of the full time span.
pub fn track_front_settled(
    states: &[PdeState],
    x: &[f64],
    level: f64,
) -> Result<FrontTrack, PdeError> {
    let cut = fit_cut(states)?;
    let start = states
        .iter()
        .rposition(|s| front_position(x, &s.n, level, s.t).is_err())
        .map_or(0, |i| i + 1);
    if start == states.len() {
        let s = states.last().unwrap();
        return front_position(x, &s.n, level, s.t).and(Err(PdeError::InsufficientData));
    }
    track_from(&states[start..], x, level, cut)
}

fn fit_cut(states: &[PdeState]) -> Result<f64, PdeError> {
    match (states.first(), states.last()) {
        (Some(a), Some(b)) => Ok(a.t + 0.5 * (b.t - a.t)),
        _ => Err(PdeError::InsufficientData),
    }
}

fn track_from(
    states: &[PdeState],
    x: &[f64],
    level: f64,
    cut: f64,
) -> Result<FrontTrack, PdeError> {
    let mut times = Vec::with_capacity(states.len());
    let mut positions = Vec::with_capacity(states.len());
    for s in states {
        times.push(s.t);
        positions.push(front_position(x, &s.n, level, s.t)?);
    }
    let (ft, fx): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&positions)
        .filter(|(t, _)| **t >= cut)
        .map(|(t, p)| (*t, *p))
        .unzip();
    let speed_fit = fit_line(&ft, &fx)?;
    Ok(FrontTrack {
        times,
        positions,
        speed_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Ok,
    Failed,
}

impl SweepStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SweepStatus::Ok => "ok",
            SweepStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub kappa: f64,
    pub m_bar: f64,
    pub speed: Option<f64>,
    pub fit_residual: Option<f64>,
    pub status: SweepStatus,
}

/// Runs a single configuration and measures the front speed.
pub fn measure_speed(cfg: &PdeConfig) -> Result<FrontTrack, PdeError> {
    let states = run(cfg)?;
    track_front_settled(&states, &cfg.grid(), 0.5)
}

/// One sweep cell; failures are recorded, not propagated.
pub fn sweep_record(kappa: f64, m_bar: f64, template: &PdeConfig) -> SweepRecord {
    let cfg = PdeConfig {
        kappa,
        m_bar,
        ..template.clone()
    };
    match measure_speed(&cfg) {
        Ok(track) => SweepRecord {
            kappa,
            m_bar,
            speed: Some(track.speed_fit.slope),
            fit_residual: Some(track.speed_fit.residual),
            status: SweepStatus::Ok,
        },
        Err(_) => SweepRecord {
            kappa,
            m_bar,
            speed: None,
            fit_residual: None,
            status: SweepStatus::Failed,
        },
    }
}

/// Cartesian product in row-major order: `kappa` outer, `M_bar` inner.
pub fn sweep_cases(kappas: &[f64], m_bars: &[f64]) -> Result<Vec<(f64, f64)>, DomainError> {
    if kappas.is_empty() || m_bars.is_empty() {
        return Err(DomainError("sweep lists must be non-empty".into()));
    }
    Ok(kappas
        .iter()
        .flat_map(|&k| m_bars.iter().map(move |&m| (k, m)))
        .collect())
}

/// Serial sweep over all `(kappa, M_bar)` pairs.
pub fn speed_sweep(
    kappas: &[f64],
    m_bars: &[f64],
    template: &PdeConfig,
) -> Result<Vec<SweepRecord>, DomainError> {
    Ok(sweep_cases(kappas, m_bars)?
        .into_iter()
        .map(|(k, m)| sweep_record(k, m, template))
        .collect())
}
