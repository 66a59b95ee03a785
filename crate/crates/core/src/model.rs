//! Model parameters, homogeneous steady states, local eigen-structure and the
//! closed-form speed thresholds.
//!
//! The nondimensional system is
//!
//! ```text
//! N_t = (( 1 - M ) N_x)_x + N (1 - N)
//! M_t = -kappa M N
//! ```
//!
//! Travelling waves move with speed `c` into tissue at ECM density `m_bar`.

use thiserror::Error;

/// Raised when an input lies outside the domain where a formula is defined.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T, DomainError> {
    Err(DomainError(msg.into()))
}

/// Dimensional inputs of the invasion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalParams {
    /// Tumour cell diffusivity (length^2 / time).
    pub d_n: f64,
    /// Proliferation rate (1 / time).
    pub rho: f64,
    /// Carrying capacity (cells / volume).
    pub k_cap: f64,
    /// Per-cell ECM degradation rate (volume / cells / time).
    pub k_deg: f64,
    /// Maximal ECM density (mass / volume).
    pub m_max: f64,
}

/// Dimensionless degradation rate `K k / rho`.
pub fn nondimensionalise(p: &DimensionalParams) -> Result<f64, DomainError> {
    let fields = [
        ("D_N", p.d_n),
        ("rho", p.rho),
        ("K", p.k_cap),
        ("k", p.k_deg),
        ("M_max", p.m_max),
    ];
    for (name, v) in fields {
        if !v.is_finite() || v <= 0.0 {
            return domain(format!("{name} must be positive and finite, got {v}"));
        }
    }
    Ok(p.k_cap * p.k_deg / p.rho)
}

/// Nondimensional parameters of a travelling-wave problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub c: f64,
    pub m_bar: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, c: f64, m_bar: f64) -> Result<Self, DomainError> {
        check_kappa(kappa)?;
        check_speed(c)?;
        if !(0.0..=1.0).contains(&m_bar) {
            return domain(format!("m_bar must lie in [0,1], got {m_bar}"));
        }
        Ok(Self { kappa, c, m_bar })
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<(), DomainError> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        domain(format!("kappa must be positive and finite, got {kappa}"))
    }
}

pub(crate) fn check_speed(c: f64) -> Result<(), DomainError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        domain(format!("wave speed must be positive and finite, got {c}"))
    }
}

/// A spatially homogeneous steady state `(N, M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub n: f64,
    pub m: f64,
}

/// Steady states of the PDE: the three corners plus `(0, m_bar)` for each requested density.
pub fn equilibria(m_bar_grid: &[f64]) -> Result<Vec<Equilibrium>, DomainError> {
    let mut out = vec![
        Equilibrium { n: 0.0, m: 0.0 },
        Equilibrium { n: 1.0, m: 0.0 },
        Equilibrium { n: 0.0, m: 1.0 },
    ];
    for &m in m_bar_grid {
        if !(0.0..=1.0).contains(&m) {
            return domain(format!("ECM density must lie in [0,1], got {m}"));
        }
        let e = Equilibrium { n: 0.0, m };
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Ok(out)
}

/// Linearisation of the desingularised system at the invaded state `(1, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub v1: [f64; 3],
    pub v2: [f64; 3],
    pub v3: [f64; 3],
    /// Slowest unstable rate, `min(lambda2, lambda3)`.
    pub mu: f64,
}

pub fn saddle_eigen(c: f64, kappa: f64) -> Result<EigenData, DomainError> {
    check_speed(c)?;
    check_kappa(kappa)?;
    let root = (c * c + 4.0).sqrt();
    let lambda1 = (-c - root) / 2.0;
    // Written without cancellation; equals (-c + root) / 2.
    let lambda2 = 2.0 / (c + root);
    let lambda3 = kappa / c;
    Ok(EigenData {
        lambda1,
        lambda2,
        lambda3,
        v1: [(c - root) / 2.0, 1.0, 0.0],
        v2: [(c + root) / 2.0, 1.0, 0.0],
        v3: [0.0, 0.0, 1.0],
        mu: lambda2.min(lambda3),
    })
}

/// Eigenvalues of the `(n, p)` block at the uninvaded state `(0, 0, m_bar)`.
///
/// For a node both values are real and `nu1 >= nu2`; for a focus they are
/// `re ± i im` with `nu1_im = im > 0` and `nu2_im = -im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEigenData {
    pub nu1_re: f64,
    pub nu1_im: f64,
    pub nu2_re: f64,
    pub nu2_im: f64,
    pub is_node: bool,
}

impl TailEigenData {
    /// Real eigenvalues `(nu1, nu2)` when the state is a node.
    pub fn real_pair(&self) -> Option<(f64, f64)> {
        self.is_node.then_some((self.nu1_re, self.nu2_re))
    }
}

pub fn tail_eigen(c: f64, m_bar: f64) -> Result<TailEigenData, DomainError> {
    check_speed(c)?;
    if !(0.0..1.0).contains(&m_bar) {
        return domain(format!("m_bar must lie in [0,1), got {m_bar}"));
    }
    let disc = c * c - 4.0 * (1.0 - m_bar);
    if disc >= 0.0 {
        let s = disc.sqrt();
        let nu2 = (-c - s) / 2.0;
        // Product of roots is 1 - m_bar; avoids cancellation in -c + s.
        let nu1 = if nu2 != 0.0 { (1.0 - m_bar) / nu2 } else { 0.0 };
        Ok(TailEigenData {
            nu1_re: nu1,
            nu1_im: 0.0,
            nu2_re: nu2,
            nu2_im: 0.0,
            is_node: true,
        })
    } else {
        let im = (-disc).sqrt() / 2.0;
        Ok(TailEigenData {
            nu1_re: -c / 2.0,
            nu1_im: im,
            nu2_re: -c / 2.0,
            nu2_im: -im,
            is_node: false,
        })
    }
}

/// Degradation rate above which the minimal speed is no longer known in closed form.
pub fn kappa_star(m_bar: f64) -> Result<f64, DomainError> {
    if m_bar > 0.0 && m_bar < 1.0 {
        Ok((1.0 - m_bar) / m_bar)
    } else {
        domain(format!("kappa_star needs m_bar in (0,1), got {m_bar}"))
    }
}

/// ECM density threshold `1 / (kappa + 1)`, inverse of [`kappa_star`].
pub fn m_star(kappa: f64) -> Result<f64, DomainError> {
    check_kappa(kappa)?;
    Ok(1.0 / (kappa + 1.0))
}

/// Closed-form knowledge of the minimal wave speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinSpeed {
    Exact(f64),
    Interval { lower: f64, upper: f64 },
}

impl MinSpeed {
    pub fn lower(&self) -> f64 {
        match *self {
            MinSpeed::Exact(v) => v,
            MinSpeed::Interval { lower, .. } => lower,
        }
    }
}

/// Linear-spreading speed `2 sqrt(1 - m_bar)`.
pub fn linear_speed(m_bar: f64) -> f64 {
    2.0 * (1.0 - m_bar).sqrt()
}

pub fn min_wave_speed_formula(kappa: f64, m_bar: f64) -> Result<MinSpeed, DomainError> {
    check_kappa(kappa)?;
    if !(0.0..1.0).contains(&m_bar) {
        return domain(format!("m_bar must lie in [0,1), got {m_bar}"));
    }
    let ms = m_star(kappa)?;
    if m_bar <= ms {
        Ok(MinSpeed::Exact(linear_speed(m_bar)))
    } else {
        Ok(MinSpeed::Interval {
            lower: linear_speed(m_bar),
            upper: linear_speed(ms),
        })
    }
}
