//! Command-line grammar. Flags override the matching configuration fields.

use crate::config::{BranchChoice, Config};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "degenwave",
    version,
    about = "Travelling waves with degenerate cross-diffusion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a single shot and write its physical profile.
    Shoot(ShootArgs),
    /// Separatrix amplitude between intermediate and full-ECM limits.
    Alpha1(SearchArgs),
    /// Smallest amplitude whose shot does not exit through n = 0.
    Alpha0(SearchArgs),
    /// Amplitude whose shot ends at the requested far-field ECM density.
    AlphaForMbar(MbarSearchArgs),
    /// Minimal wave speed for a far-field ECM density.
    MinSpeed(MinSpeedArgs),
    /// Simulate the PDE and write snapshots and the front track.
    PdeRun(PdeRunArgs),
    /// Front speeds over a (kappa, M_bar) grid.
    SpeedSweep(SweepArgs),
    /// PDE speed and late profile against the ODE wave at that speed.
    Compare(CompareArgs),
    /// Sign conditions of the effective reaction term over a grid.
    ConjectureScan(ScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Shoot(_) => "shoot",
            Command::Alpha1(_) => "alpha1",
            Command::Alpha0(_) => "alpha0",
            Command::AlphaForMbar(_) => "alpha-for-mbar",
            Command::MinSpeed(_) => "min-speed",
            Command::PdeRun(_) => "pde-run",
            Command::SpeedSweep(_) => "speed-sweep",
            Command::Compare(_) => "compare",
            Command::ConjectureScan(_) => "conjecture-scan",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Shoot(a) => &a.common,
            Command::Alpha1(a) | Command::Alpha0(a) => &a.common,
            Command::AlphaForMbar(a) => &a.common,
            Command::MinSpeed(a) => &a.common,
            Command::PdeRun(a) => &a.common,
            Command::SpeedSweep(a) => &a.common,
            Command::Compare(a) => &a.common,
            Command::ConjectureScan(a) => &a.common,
        }
    }

    /// Applies every flag given on the command line to `cfg`.
    pub fn apply(&self, cfg: &mut Config) {
        match self {
            Command::Shoot(a) => {
                a.kappa.apply(cfg);
                a.speed.apply(cfg);
                set(&mut cfg.model.alpha, a.alpha.map(Some));
                a.shoot.apply(cfg);
            }
            Command::Alpha1(a) | Command::Alpha0(a) => {
                a.kappa.apply(cfg);
                a.speed.apply(cfg);
                a.shoot.apply(cfg);
            }
            Command::AlphaForMbar(a) => {
                a.kappa.apply(cfg);
                a.speed.apply(cfg);
                a.mbar.apply(cfg);
                a.shoot.apply(cfg);
            }
            Command::MinSpeed(a) => {
                a.kappa.apply(cfg);
                a.mbar.apply(cfg);
                a.shoot.apply(cfg);
            }
            Command::PdeRun(a) => {
                a.kappa.apply(cfg);
                a.mbar.apply(cfg);
                a.pde.apply(cfg);
            }
            Command::SpeedSweep(a) => {
                a.grid.apply(cfg);
                a.pde.apply(cfg);
            }
            Command::Compare(a) => {
                a.kappa.apply(cfg);
                a.mbar.apply(cfg);
                a.pde.apply(cfg);
                a.shoot.apply(cfg);
            }
            Command::ConjectureScan(a) => {
                a.grid.apply(cfg);
                set(&mut cfg.sweep.branch, a.branch);
                set(&mut cfg.sweep.n_tol, a.n_tol);
                set(&mut cfg.sweep.speed, a.speed.map(Some));
                set(&mut cfg.sweep.speed_factor, a.speed_factor);
            }
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file with sections model, pde, shoot, sweep.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "degenwave-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KappaArg {
    /// Dimensionless ECM degradation rate.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
}

impl KappaArg {
    fn apply(&self, cfg: &mut Config) {
        set(&mut cfg.model.kappa, self.kappa);
    }
}

#[derive(Debug, Args)]
pub struct SpeedArg {
    /// Wave speed.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
}

impl SpeedArg {
    fn apply(&self, cfg: &mut Config) {
        set(&mut cfg.model.c, self.c);
    }
}

#[derive(Debug, Args)]
pub struct MbarArg {
    /// Far-field ECM density.
    #[arg(long, allow_hyphen_values = true)]
    pub mbar: Option<f64>,
}

impl MbarArg {
    fn apply(&self, cfg: &mut Config) {
        set(&mut cfg.model.m_bar, self.mbar);
    }
}

#[derive(Debug, Args)]
pub struct ShootFlags {
    /// Initial integration horizon in the desingularised variable.
    #[arg(long)]
    pub y_max: Option<f64>,
    /// Truncation amplitude of the unstable-manifold seed.
    #[arg(long)]
    pub seed_epsilon: Option<f64>,
}

impl ShootFlags {
    fn apply(&self, cfg: &mut Config) {
        set(&mut cfg.shoot.y_max, self.y_max);
        set(&mut cfg.shoot.seed_epsilon, self.seed_epsilon);
    }
}

#[derive(Debug, Args)]
pub struct PdeFlags {
    /// Domain length.
    #[arg(long)]
    pub length: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Initial tumour extent.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Width of the smooth edge of the initial tumour.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Final time.
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Spacing of snapshot times.
    #[arg(long)]
    pub output_interval: Option<f64>,
    /// Explicit snapshot times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub output_times: Option<Vec<f64>>,
    /// Switch off growth and degradation, leaving pure diffusion.
    #[arg(long)]
    pub no_reactions: bool,
}

impl PdeFlags {
    fn apply(&self, cfg: &mut Config) {
        let p = &mut cfg.pde;
        set(&mut p.length, self.length);
        set(&mut p.num_points, self.points);
        set(&mut p.sigma, self.sigma);
        set(&mut p.omega, self.omega);
        set(&mut p.t_final, self.t_final);
        set(&mut p.output_interval, self.output_interval);
        set(&mut p.output_times, self.output_times.clone());
        if self.no_reactions {
            p.disable_reactions = true;
        }
    }
}

#[derive(Debug, Args)]
pub struct GridFlags {
    /// Degradation rates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub kappas: Option<Vec<f64>>,
    /// Far-field ECM densities, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mbars: Option<Vec<f64>>,
}

impl GridFlags {
    fn apply(&self, cfg: &mut Config) {
        set(&mut cfg.sweep.kappas, self.kappas.clone());
        set(&mut cfg.sweep.m_bars, self.mbars.clone());
    }
}

#[derive(Debug, Args)]
pub struct ShootArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub speed: SpeedArg,
    /// Amplitude of the ECM component of the seed.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub shoot: ShootFlags,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub speed: SpeedArg,
    #[command(flatten)]
    pub shoot: ShootFlags,
}

#[derive(Debug, Args)]
pub struct MbarSearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub speed: SpeedArg,
    #[command(flatten)]
    pub mbar: MbarArg,
    #[command(flatten)]
    pub shoot: ShootFlags,
}

#[derive(Debug, Args)]
pub struct MinSpeedArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub mbar: MbarArg,
    /// Bisect numerically even where the closed form applies.
    #[arg(long)]
    pub numeric: bool,
    /// Final bracket width of the numeric bisection.
    #[arg(long, default_value_t = 1e-3)]
    pub width: f64,
    #[command(flatten)]
    pub shoot: ShootFlags,
}

#[derive(Debug, Args)]
pub struct PdeRunArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub mbar: MbarArg,
    #[command(flatten)]
    pub pde: PdeFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub pde: PdeFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub kappa: KappaArg,
    #[command(flatten)]
    pub mbar: MbarArg,
    #[command(flatten)]
    pub pde: PdeFlags,
    #[command(flatten)]
    pub shoot: ShootFlags,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridFlags,
    /// Root of the slope equation at n = 0 to integrate from.
    #[arg(long, value_enum)]
    pub branch: Option<BranchChoice>,
    /// Regularisation distance from the singular end points.
    #[arg(long)]
    pub n_tol: Option<f64>,
    /// Fixed test speed; defaults to the linear speed of each cell.
    #[arg(long)]
    pub speed: Option<f64>,
    /// Multiplier on the linear speed when no fixed speed is given.
    #[arg(long)]
    pub speed_factor: Option<f64>,
}
