//! JSON run configuration: sections `model`, `pde`, `shoot`, `sweep`.
//!
//! Every field has a default, so `{}` is a complete configuration. Flags
//! given on the command line are applied on top of the file.

use crate::error::CliError;
use degenwave_core::conjecture::{Branch, DEFAULT_N_TOL};
use degenwave_core::pde::PdeConfig;
use degenwave_core::shooting::ShootConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub pde: PdeSection,
    pub shoot: ShootSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kappa: f64,
    pub c: f64,
    pub m_bar: f64,
    pub alpha: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            c: 2.0,
            m_bar: 0.0,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub length: f64,
    pub num_points: usize,
    pub sigma: f64,
    pub omega: f64,
    pub t_final: f64,
    pub output_interval: f64,
    /// Explicit snapshot times; empty means every `output_interval`.
    pub output_times: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub disable_reactions: bool,
}

impl Default for PdeSection {
    fn default() -> Self {
        let d = PdeConfig::default();
        Self {
            length: d.length,
            num_points: d.num_points,
            sigma: d.sigma,
            omega: d.omega,
            t_final: d.t_final,
            output_interval: d.output_interval,
            output_times: d.output_times,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            disable_reactions: d.disable_reactions,
        }
    }
}

impl PdeSection {
    pub fn to_core(&self, kappa: f64, m_bar: f64) -> PdeConfig {
        PdeConfig {
            length: self.length,
            num_points: self.num_points,
            sigma: self.sigma,
            omega: self.omega,
            m_bar,
            kappa,
            t_final: self.t_final,
            output_times: self.output_times.clone(),
            output_interval: self.output_interval,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            disable_reactions: self.disable_reactions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootSection {
    pub seed_epsilon: f64,
    pub y_max: f64,
    pub max_doublings: u32,
    pub conv_tol: f64,
    pub dwell: f64,
    pub exit_tol: f64,
    pub m1_split: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ShootSection {
    fn default() -> Self {
        let d = ShootConfig::default();
        Self {
            seed_epsilon: d.seed_epsilon,
            y_max: d.y_max,
            max_doublings: d.max_doublings,
            conv_tol: d.conv_tol,
            dwell: d.dwell,
            exit_tol: d.exit_tol,
            m1_split: d.m1_split,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
        }
    }
}

impl ShootSection {
    pub fn to_core(&self) -> ShootConfig {
        ShootConfig {
            seed_epsilon: self.seed_epsilon,
            y_max: self.y_max,
            max_doublings: self.max_doublings,
            conv_tol: self.conv_tol,
            dwell: self.dwell,
            exit_tol: self.exit_tol,
            m1_split: self.m1_split,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Minus,
    Plus,
    Both,
}

impl BranchChoice {
    pub fn branches(&self) -> &'static [Branch] {
        match self {
            BranchChoice::Minus => &[Branch::Minus],
            BranchChoice::Plus => &[Branch::Plus],
            BranchChoice::Both => &[Branch::Minus, Branch::Plus],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kappas: Vec<f64>,
    pub m_bars: Vec<f64>,
    /// Slope root at `n = 0` used by the conjecture scan.
    pub branch: BranchChoice,
    pub n_tol: f64,
    /// Fixed test speed for the conjecture scan; `None` uses the linear speed.
    pub speed: Option<f64>,
    /// Multiplier applied to the linear speed when `speed` is unset.
    pub speed_factor: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kappas: vec![1.0],
            m_bars: (1..=7).map(|j| 0.125 * j as f64).collect(),
            branch: BranchChoice::Plus,
            n_tol: DEFAULT_N_TOL,
            speed: None,
            speed_factor: 1.0,
        }
    }
}

/// Parses a configuration document; `source` names it in diagnostics.
pub fn parse_config(text: &str, source: &str) -> Result<Config, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: Config = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let field = if path == "." {
            String::new()
        } else {
            format!(" field `{path}`:")
        };
        CliError::Config(format!(
            "{source}:{}:{}:{field} {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    de.end()
        .map_err(|e| CliError::Config(format!("{source}:{}:{}: {e}", e.line(), e.column())))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}
