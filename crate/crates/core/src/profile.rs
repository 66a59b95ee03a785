//! Travelling-wave profiles in the physical moving coordinate.
//!
//! A desingularised trajectory `(n, p, m)(y)` maps back through
//! `d xi / d y = 1 - m`, integrated on the adaptive samples by the trapezoid
//! rule with the derivative end correction. Profiles are translated so that `N = 0.5` at `xi = 0`.

use crate::model::ModelParams;
use crate::ode::Trajectory;
use thiserror::Error;

/// Level used to fix the translation of every profile.
pub const ANCHOR_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Ode,
    Pde,
}

impl ProfileSource {
    pub fn label(&self) -> &'static str {
        match self {
            ProfileSource::Ode => "ODE",
            ProfileSource::Pde => "PDE",
        }
    }
}

/// Sampled wave `(xi, N, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub xi: Vec<f64>,
    pub n_vals: Vec<f64>,
    pub m_vals: Vec<f64>,
    pub speed: f64,
    pub source: ProfileSource,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("m = {m} >= 1 at y = {y}: coordinate map degenerates")]
    DegenerateMap { y: f64, m: f64 },
    #[error("profile never crosses N = {0}")]
    NoAnchor(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

impl WaveProfile {
    pub fn new(
        xi: Vec<f64>,
        n_vals: Vec<f64>,
        m_vals: Vec<f64>,
        speed: f64,
        source: ProfileSource,
    ) -> Result<Self, ProfileError> {
        if xi.len() != n_vals.len() || xi.len() != m_vals.len() {
            return Err(ProfileError::Domain("column lengths differ".into()));
        }
        if xi.len() < 2 {
            return Err(ProfileError::Domain(
                "a profile needs at least two samples".into(),
            ));
        }
        if !xi.windows(2).all(|w| w[1] > w[0]) {
            return Err(ProfileError::Domain(
                "xi must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            xi,
            n_vals,
            m_vals,
            speed,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xi[0], *self.xi.last().unwrap())
    }

    /// Piecewise-linear values `(N, M)` at `x`, `None` outside the range.
    pub fn value_at(&self, x: f64) -> Option<(f64, f64)> {
        let (a, b) = self.range();
        if !(x >= a && x <= b) {
            return None;
        }
        let k = self.xi.partition_point(|&v| v <= x);
        let i = k.saturating_sub(1).min(self.xi.len() - 2);
        let t = (x - self.xi[i]) / (self.xi[i + 1] - self.xi[i]);
        let lerp = |v: &[f64]| v[i] + t * (v[i + 1] - v[i]);
        Some((lerp(&self.n_vals), lerp(&self.m_vals)))
    }

    /// First location where `N` falls through `level`, by linear interpolation.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        level_crossing(&self.xi, &self.n_vals, level)
    }

    /// Copy translated so that `N = level` at `xi = 0`.
    pub fn anchored(&self, level: f64) -> Result<Self, ProfileError> {
        let x0 = self.crossing(level).ok_or(ProfileError::NoAnchor(level))?;
        let mut out = self.clone();
        out.xi.iter_mut().for_each(|v| *v -= x0);
        Ok(out)
    }
}

/// First downward crossing of `level` by `vals` over `xs`.
pub fn level_crossing(xs: &[f64], vals: &[f64], level: f64) -> Option<f64> {
    for i in 0..xs.len().saturating_sub(1) {
        let (a, b) = (vals[i], vals[i + 1]);
        if a >= level && b < level {
            let t = (a - level) / (a - b);
            return Some(xs[i] + t * (xs[i + 1] - xs[i]));
        }
    }
    None
}

/// Cumulative integral of `1 - m` over `ys`, starting from zero.
///
/// `dms` holds `dm/dy` at the samples; the corrected trapezoid
/// `h/2 (f0 + f1) + h^2/12 (f0' - f1')` is fourth order.
pub fn stretched_coordinate(ys: &[f64], ms: &[f64], dms: &[f64]) -> Vec<f64> {
    let mut xi = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    xi.push(0.0);
    for i in 1..ys.len() {
        let h = ys[i] - ys[i - 1];
        acc += 0.5 * h * ((1.0 - ms[i - 1]) + (1.0 - ms[i])) + h * h / 12.0 * (dms[i] - dms[i - 1]);
        xi.push(acc);
    }
    xi
}

/// Maps a desingularised trajectory to a physical profile anchored at `N = 0.5`.
pub fn desingularised_to_physical(
    traj: &Trajectory<3>,
    params: &ModelParams,
) -> Result<WaveProfile, ProfileError> {
    for (y, s) in traj.ys.iter().zip(&traj.states) {
        if s[2] >= 1.0 {
            return Err(ProfileError::DegenerateMap { y: *y, m: s[2] });
        }
    }
    let ms = traj.component(2);
    let ns = traj.component(0);
    let dms: Vec<f64> = traj.derivs.iter().map(|d| d[2]).collect();
    let xi = stretched_coordinate(&traj.ys, &ms, &dms);
    let raw = WaveProfile::new(xi, ns, ms, params.c, ProfileSource::Ode)?;
    raw.anchored(ANCHOR_LEVEL)
}

/// Evenly spaced grid of `count` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "grid needs at least two points");
    let h = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|i| if i == count - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// Piecewise-linear resampling onto `grid`.
pub fn resample_profile(p: &WaveProfile, grid: &[f64]) -> Result<WaveProfile, ProfileError> {
    let (a, b) = p.range();
    let mut n = Vec::with_capacity(grid.len());
    let mut m = Vec::with_capacity(grid.len());
    for &x in grid {
        let (vn, vm) = p
            .value_at(x)
            .ok_or_else(|| ProfileError::Domain(format!("grid point {x} outside [{a}, {b}]")))?;
        n.push(vn);
        m.push(vm);
    }
    WaveProfile::new(grid.to_vec(), n, m, p.speed, p.source)
}

/// Result of aligning two profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileComparison {
    pub sup_norm_n: f64,
    pub sup_norm_m: f64,
    /// `s` minimising `sup |N_a(xi + s) - N_b(xi)|`.
    pub optimal_shift: f64,
}

const SHIFT_TOL: f64 = 1e-3;

/// Sup-norm differences at shift `s`, or `None` when the ranges do not overlap.
fn distance(a: &WaveProfile, b: &WaveProfile, s: f64) -> Option<(f64, f64)> {
    let (a0, a1) = a.range();
    let (lo, hi) = (a0 - s, a1 - s);
    let (b0, b1) = b.range();
    if lo.max(b0) >= hi.min(b1) {
        return None;
    }
    let mut dn: f64 = 0.0;
    let mut dm: f64 = 0.0;
    let mut visit = |x: f64| {
        if let (Some((na, ma)), Some((nb, mb))) = (a.value_at(x + s), b.value_at(x)) {
            dn = dn.max((na - nb).abs());
            dm = dm.max((ma - mb).abs());
        }
    };
    for &x in &b.xi {
        if x >= lo && x <= hi {
            visit(x);
        }
    }
    for &x in &a.xi {
        let xb = x - s;
        if xb >= b0 && xb <= b1 {
            visit(xb);
        }
    }
    Some((dn, dm))
}

/// Aligns `a` onto `b` by a shift and reports the sup-norm differences.
pub fn compare_profiles(
    a: &WaveProfile,
    b: &WaveProfile,
) -> Result<ProfileComparison, ProfileError> {
    let centre = match (a.crossing(ANCHOR_LEVEL), b.crossing(ANCHOR_LEVEL)) {
        (Some(xa), Some(xb)) => xa - xb,
        _ => 0.0,
    };
    let (a0, a1) = a.range();
    let (b0, b1) = b.range();
    let span = (a1 - a0).min(b1 - b0);
    let half = (0.25 * span).clamp(SHIFT_TOL, 10.0);
    let cost = |s: f64| distance(a, b, s).map_or(f64::INFINITY, |d| d.0);

    // Coarse scan, then golden-section refinement around the best cell.
    let cells = 40;
    let h = 2.0 * half / cells as f64;
    let mut best = (centre, cost(centre));
    for i in 0..=cells {
        let s = centre - half + h * i as f64;
        let v = cost(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    if !best.1.is_finite() {
        return Err(ProfileError::Domain("profiles do not overlap".into()));
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while hi - lo > SHIFT_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = cost(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let s = if cost(mid) <= best.1 { mid } else { best.0 };
    let (dn, dm) =
        distance(a, b, s).ok_or_else(|| ProfileError::Domain("profiles do not overlap".into()))?;
    Ok(ProfileComparison {
        sup_norm_n: dn,
        sup_norm_m: dm,
        optimal_shift: s,
    })
}
