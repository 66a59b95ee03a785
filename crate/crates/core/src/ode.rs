//! Adaptive Dormand–Prince 5(4) integration with dense output and event location.
//!
//! Dense output on each step is the cubic Hermite interpolant of the step end
//! points plus the quartic correction of the method's continuous extension.
//! Events are located by bisection on that interpolant.

use thiserror::Error;

/// Right-hand side of the desingularised travelling-wave system in `(n, p, m)`.
pub fn rhs_desingularised(s: &[f64; 3], c: f64, kappa: f64) -> [f64; 3] {
    let [n, p, m] = *s;
    [
        p,
        -c * p - (1.0 - n) * n * (1.0 - m),
        kappa / c * m * (1.0 - m) * n,
    ]
}

/// Scalar function of `(t, state)` whose sign changes mark an event.
pub type EventFn<'a, const D: usize> = Box<dyn Fn(f64, &[f64; D]) -> f64 + 'a>;

/// A scalar event function with crossing-direction filter.
pub struct EventSpec<'a, const D: usize> {
    pub id: String,
    pub function: EventFn<'a, D>,
    /// `+1` upward crossings only, `-1` downward only, `0` both.
    pub direction: i8,
    pub terminal: bool,
}

impl<'a, const D: usize> EventSpec<'a, D> {
    pub fn new(
        id: impl Into<String>,
        direction: i8,
        terminal: bool,
        function: impl Fn(f64, &[f64; D]) -> f64 + 'a,
    ) -> Self {
        Self {
            id: id.into(),
            function: Box::new(function),
            direction,
            terminal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<const D: usize> {
    pub id: String,
    pub y: f64,
    pub state: [f64; D],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Horizon,
    TerminalEvent,
    Monitor,
}

/// Accepted samples of an integration together with their dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub ys: Vec<f64>,
    pub states: Vec<[f64; D]>,
    /// Right-hand side at each sample.
    pub derivs: Vec<[f64; D]>,
    /// Quartic correction per step; zero gives the plain cubic Hermite.
    correction: Vec<[f64; D]>,
    /// Every event crossing found, in order of location.
    pub events: Vec<EventHit<D>>,
    pub terminal_event: Option<EventHit<D>>,
    pub stop: StopReason,
    pub rejected_steps: usize,
}

impl<const D: usize> Trajectory<D> {
    fn start(y0: f64, s0: [f64; D], f0: [f64; D]) -> Self {
        Self {
            ys: vec![y0],
            states: vec![s0],
            derivs: vec![f0],
            correction: Vec::new(),
            events: Vec::new(),
            terminal_event: None,
            stop: StopReason::Horizon,
            rejected_steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn first_y(&self) -> f64 {
        self.ys[0]
    }

    pub fn last_y(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    pub fn last_state(&self) -> [f64; D] {
        *self.states.last().unwrap()
    }

    pub fn last_deriv(&self) -> [f64; D] {
        *self.derivs.last().unwrap()
    }

    /// Dense-output value at `y`, or `None` outside the sampled range.
    pub fn interpolate(&self, y: f64) -> Option<[f64; D]> {
        let (y0, y1) = (self.first_y(), self.last_y());
        if !(y >= y0 && y <= y1) {
            return None;
        }
        if self.ys.len() == 1 {
            return Some(self.states[0]);
        }
        let i = match self.ys.partition_point(|&v| v <= y) {
            0 => 0,
            k => (k - 1).min(self.ys.len() - 2),
        };
        Some(self.eval_step(i, y))
    }

    fn eval_step(&self, i: usize, y: f64) -> [f64; D] {
        let h = self.ys[i + 1] - self.ys[i];
        let theta = (y - self.ys[i]) / h;
        dense_eval(
            &self.states[i],
            &self.states[i + 1],
            &self.derivs[i],
            &self.derivs[i + 1],
            &self.correction[i],
            h,
            theta,
        )
    }

    /// Component `k` of every sample.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    /// Appends the samples of `tail`, which must start at this trajectory's last sample.
    pub fn extend_with(&mut self, tail: Trajectory<D>) {
        debug_assert_eq!(tail.first_y(), self.last_y());
        self.ys.extend_from_slice(&tail.ys[1..]);
        self.states.extend_from_slice(&tail.states[1..]);
        self.derivs.extend_from_slice(&tail.derivs[1..]);
        self.correction.extend(tail.correction);
        self.events.extend(tail.events);
        self.terminal_event = tail.terminal_event;
        self.stop = tail.stop;
        self.rejected_steps += tail.rejected_steps;
    }

    /// Keeps the first `len` samples and the steps between them.
    pub fn truncate(&mut self, len: usize) {
        let len = len.max(1);
        self.ys.truncate(len);
        self.states.truncate(len);
        self.derivs.truncate(len);
        self.correction.truncate(len - 1);
        let y_end = self.last_y();
        self.events.retain(|e| e.y <= y_end);
        if self.terminal_event.as_ref().is_some_and(|e| e.y > y_end) {
            self.terminal_event = None;
        }
    }

    /// Applies the componentwise affine map `s -> offset + scale * s` to every
    /// stored sample, event and dense-output coefficient.
    pub fn map_affine(&mut self, scale: [f64; D], offset: [f64; D]) {
        let map = |s: &mut [f64; D]| {
            for k in 0..D {
                s[k] = offset[k] + scale[k] * s[k];
            }
        };
        let lin = |s: &mut [f64; D]| {
            for k in 0..D {
                s[k] *= scale[k];
            }
        };
        self.states.iter_mut().for_each(map);
        self.derivs.iter_mut().for_each(lin);
        self.correction.iter_mut().for_each(lin);
        for e in self.events.iter_mut().chain(self.terminal_event.iter_mut()) {
            map(&mut e.state);
        }
    }

    fn push(&mut self, y: f64, s: [f64; D], f: [f64; D], corr: [f64; D]) {
        self.ys.push(y);
        self.states.push(s);
        self.derivs.push(f);
        self.correction.push(corr);
    }
}

fn dense_eval<const D: usize>(
    s0: &[f64; D],
    s1: &[f64; D],
    f0: &[f64; D],
    f1: &[f64; D],
    corr: &[f64; D],
    h: f64,
    theta: f64,
) -> [f64; D] {
    let t1 = 1.0 - theta;
    let mut out = [0.0; D];
    for k in 0..D {
        let r2 = s1[k] - s0[k];
        let r3 = h * f0[k] - r2;
        let r4 = r2 - h * f1[k] - r3;
        out[k] = s0[k] + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * corr[k])));
    }
    out
}

#[derive(Debug, Error)]
pub enum IntegrationError<const D: usize> {
    #[error("step size underflow at y = {y} (h = {h:e})")]
    StepUnderflow {
        y: f64,
        h: f64,
        partial: Box<Trajectory<D>>,
    },
    #[error("non-finite state at y = {y}")]
    NonFinite { y: f64, partial: Box<Trajectory<D>> },
    #[error("step budget of {max_steps} exhausted at y = {y}")]
    MaxSteps {
        y: f64,
        max_steps: usize,
        partial: Box<Trajectory<D>>,
    },
}

impl<const D: usize> IntegrationError<D> {
    pub fn partial(&self) -> &Trajectory<D> {
        match self {
            IntegrationError::StepUnderflow { partial, .. }
            | IntegrationError::NonFinite { partial, .. }
            | IntegrationError::MaxSteps { partial, .. } => partial,
        }
    }

    pub fn location(&self) -> f64 {
        match self {
            IntegrationError::StepUnderflow { y, .. }
            | IntegrationError::NonFinite { y, .. }
            | IntegrationError::MaxSteps { y, .. } => *y,
        }
    }
}

/// Step-size and tolerance settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Upper bound on the step length.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

/// Outcome of a per-step monitor callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const EVENT_TOL: f64 = 1e-12;

#[inline]
fn axpy<const D: usize>(base: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *base;
    for &(a, k) in terms {
        if a != 0.0 {
            for i in 0..D {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

fn all_finite<const D: usize>(s: &[f64; D]) -> bool {
    s.iter().all(|v| v.is_finite())
}

fn crossed(g0: f64, g1: f64, direction: i8) -> bool {
    let up = g0 < 0.0 && g1 >= 0.0;
    let down = g0 > 0.0 && g1 <= 0.0;
    match direction {
        1 => up,
        -1 => down,
        _ => up || down,
    }
}

impl Integrator {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    fn err_scale(&self, a: f64, b: f64) -> f64 {
        self.abs_tol + self.rel_tol * a.abs().max(b.abs())
    }

    fn initial_step<const D: usize, F>(
        &self,
        rhs: &mut F,
        y0: f64,
        s0: &[f64; D],
        f0: &[f64; D],
        span: f64,
    ) -> f64
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
    {
        let norm = |v: &[f64; D]| {
            let mut acc = 0.0;
            for i in 0..D {
                let sc = self.err_scale(s0[i], s0[i]);
                acc += (v[i] / sc).powi(2);
            }
            (acc / D as f64).sqrt()
        };
        let d0 = norm(s0);
        let d1 = norm(f0);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(span).min(self.h_max);
        let s1 = axpy(s0, h0, &[(1.0, f0)]);
        let f1 = rhs(y0 + h0, &s1);
        let mut diff = [0.0; D];
        for i in 0..D {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }

    /// Integrates from `(y0, state0)` to `y_max`, stopping early at the first terminal event.
    pub fn integrate<const D: usize, F>(
        &self,
        rhs: F,
        y0: f64,
        state0: [f64; D],
        y_max: f64,
        events: &[EventSpec<'_, D>],
    ) -> Result<Trajectory<D>, IntegrationError<D>>
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
    {
        self.integrate_monitored(rhs, y0, state0, y_max, events, |_, _, _| Control::Continue)
    }

    /// As [`Integrator::integrate`], calling `monitor(y, state, deriv)` after every
    /// accepted step; returning [`Control::Stop`] ends the integration there.
    pub fn integrate_monitored<const D: usize, F, M>(
        &self,
        mut rhs: F,
        y0: f64,
        state0: [f64; D],
        y_max: f64,
        events: &[EventSpec<'_, D>],
        mut monitor: M,
    ) -> Result<Trajectory<D>, IntegrationError<D>>
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
        M: FnMut(f64, &[f64; D], &[f64; D]) -> Control,
    {
        assert!(y_max > y0, "integration span must be positive");
        assert!(
            self.rel_tol > 0.0 && self.abs_tol > 0.0,
            "tolerances must be positive"
        );
        let f0 = rhs(y0, &state0);
        let mut traj = Trajectory::start(y0, state0, f0);
        if !all_finite(&state0) || !all_finite(&f0) {
            return Err(IntegrationError::NonFinite {
                y: y0,
                partial: Box::new(traj),
            });
        }
        let mut y = y0;
        let mut s = state0;
        let mut k1 = f0;
        let mut g_prev: Vec<f64> = events.iter().map(|e| (e.function)(y, &s)).collect();
        let mut h = match self.h_init {
            Some(h) => h.min(y_max - y0),
            None => self.initial_step(&mut rhs, y0, &s, &k1, y_max - y0),
        };
        let mut last_rejected = false;
        let mut steps = 0usize;

        loop {
            if steps >= self.max_steps {
                return Err(IntegrationError::MaxSteps {
                    y,
                    max_steps: self.max_steps,
                    partial: Box::new(traj),
                });
            }
            let h_floor = 16.0 * f64::EPSILON * y.abs().max(1.0);
            if h < h_floor {
                return Err(IntegrationError::StepUnderflow {
                    y,
                    h,
                    partial: Box::new(traj),
                });
            }
            let at_end = y + h >= y_max;
            if at_end {
                h = y_max - y;
            }

            let k2 = rhs(y + C2 * h, &axpy(&s, h, &[(A21, &k1)]));
            let k3 = rhs(y + C3 * h, &axpy(&s, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                y + C4 * h,
                &axpy(&s, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                y + C5 * h,
                &axpy(&s, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                y + h,
                &axpy(
                    &s,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let s_new = axpy(
                &s,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let y_new = if at_end { y_max } else { y + h };
            let k7 = rhs(y_new, &s_new);

            let mut err = 0.0;
            for i in 0..D {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err += (e / self.err_scale(s[i], s_new[i])).powi(2);
            }
            let err = (err / D as f64).sqrt();
            steps += 1;

            if !err.is_finite() || !all_finite(&s_new) {
                traj.rejected_steps += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }

            if err > 1.0 {
                traj.rejected_steps += 1;
                let fac = (0.9 * err.powf(-0.2)).max(0.2);
                h *= fac;
                last_rejected = true;
                continue;
            }

            let mut corr = [0.0; D];
            for i in 0..D {
                corr[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }

            // Event scan over the accepted step.
            let g_new: Vec<f64> = events.iter().map(|e| (e.function)(y_new, &s_new)).collect();
            let mut hits: Vec<(usize, f64, [f64; D])> = Vec::new();
            for (j, ev) in events.iter().enumerate() {
                if crossed(g_prev[j], g_new[j], ev.direction) {
                    let (loc, st) = locate(ev, y, y_new, &s, &s_new, &k1, &k7, &corr, g_prev[j]);
                    hits.push((j, loc, st));
                }
            }
            hits.sort_by(|a, b| a.1.total_cmp(&b.1));
            let first_terminal = hits.iter().position(|(j, _, _)| events[*j].terminal);
            if let Some(ti) = first_terminal {
                let (j, loc, st) = hits[ti];
                for &(jj, l, stt) in &hits[..ti] {
                    traj.events.push(EventHit {
                        id: events[jj].id.clone(),
                        y: l,
                        state: stt,
                    });
                }
                let hit = EventHit {
                    id: events[j].id.clone(),
                    y: loc,
                    state: st,
                };
                traj.events.push(hit.clone());
                if loc > y {
                    let f_ev = rhs(loc, &st);
                    traj.push(loc, st, f_ev, [0.0; D]);
                }
                traj.terminal_event = Some(hit);
                traj.stop = StopReason::TerminalEvent;
                return Ok(traj);
            }
            for &(j, l, st) in &hits {
                traj.events.push(EventHit {
                    id: events[j].id.clone(),
                    y: l,
                    state: st,
                });
            }

            traj.push(y_new, s_new, k7, corr);
            y = y_new;
            s = s_new;
            k1 = k7;
            g_prev = g_new;

            if at_end {
                traj.stop = StopReason::Horizon;
                return Ok(traj);
            }
            if monitor(y, &s, &k1) == Control::Stop {
                traj.stop = StopReason::Monitor;
                return Ok(traj);
            }

            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(self.h_max);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn locate<const D: usize>(
    ev: &EventSpec<'_, D>,
    y0: f64,
    y1: f64,
    s0: &[f64; D],
    s1: &[f64; D],
    f0: &[f64; D],
    f1: &[f64; D],
    corr: &[f64; D],
    g0: f64,
) -> (f64, [f64; D]) {
    let h = y1 - y0;
    let at = |y: f64| dense_eval(s0, s1, f0, f1, corr, h, (y - y0) / h);
    let (mut lo, mut hi) = (y0, y1);
    let mut g_lo = g0;
    let tol = EVENT_TOL.max(4.0 * f64::EPSILON * y1.abs());
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = (ev.function)(mid, &at(mid));
        if g_mid == 0.0 {
            return (mid, at(mid));
        }
        if (g_mid > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let loc = if hi == y1 { hi } else { 0.5 * (lo + hi) };
    let st = if loc == y1 { *s1 } else { at(loc) };
    (loc, st)
}

/// Convenience wrapper over [`Integrator::integrate`].
pub fn integrate<const D: usize, F>(
    rhs: F,
    y0: f64,
    state0: [f64; D],
    y_max: f64,
    rel_tol: f64,
    abs_tol: f64,
    events: &[EventSpec<'_, D>],
) -> Result<Trajectory<D>, IntegrationError<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    Integrator::with_tolerances(rel_tol, abs_tol).integrate(rhs, y0, state0, y_max, events)
}
