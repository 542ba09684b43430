use std::path::{Path, PathBuf};

use asym_core::optimizer::DeviceKind;
use asym_core::profile::reference;
use asym_core::{Ansatz, Error, ProfileFile, RabiProfile, Side};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "asym", version, about = "Asymmetric scattering of two-level atoms off shaped laser fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Symmetry classes of a profile and the devices they allow (JSON).
    #[command(allow_negative_numbers = true)]
    Classify(ClassifyArgs),
    /// Scattering coefficients at one velocity.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Scattering coefficients over a velocity range (CSV).
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Sampled non-local ground-state potential (CSV).
    #[command(allow_negative_numbers = true)]
    Kernel(KernelArgs),
    /// Semiclassical internal-state evolution along the trajectory (CSV).
    #[command(allow_negative_numbers = true)]
    Semiclassical(SemiclassicalArgs),
    /// Gradient ascent on a Gaussian ansatz towards a device.
    #[command(allow_negative_numbers = true)]
    Optimize(OptimizeArgs),
    /// Flux, unitarity-bound and two-solver checks (PASS/FAIL per check).
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceArg {
    Ta,
    Ra,
    TraHalf,
}

impl DeviceArg {
    pub fn kind(self) -> DeviceKind {
        match self {
            DeviceArg::Ta => DeviceKind::TransmitAbsorb,
            DeviceArg::Ra => DeviceKind::ReflectAbsorb,
            DeviceArg::TraHalf => DeviceKind::HalfTransmitReflectAbsorb,
        }
    }

    pub fn profile(self) -> RabiProfile {
        match self {
            DeviceArg::Ta => RabiProfile::transmit_absorb(),
            DeviceArg::Ra => RabiProfile::reflect_absorb(),
            DeviceArg::TraHalf => RabiProfile::half_transmit_reflect_absorb(),
        }
    }

    /// Design velocity of the reference device.
    pub fn velocity(self) -> f64 {
        match self {
            DeviceArg::Ta => reference::transmit_absorb::V_OVER_VD,
            DeviceArg::Ra => reference::reflect_absorb::V_OVER_VD,
            DeviceArg::TraHalf => reference::half_transmit_reflect_absorb::V_OVER_VD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzArg {
    Viii,
    Vi,
    I,
}

impl AnsatzArg {
    pub fn ansatz(self) -> Ansatz {
        match self {
            AnsatzArg::Viii => Ansatz::Viii,
            AnsatzArg::Vi => Ansatz::Vi,
            AnsatzArg::I => Ansatz::I,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Imbedding,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideArg {
    Left,
    Right,
    #[default]
    Both,
}

impl SideArg {
    pub fn sides(self) -> &'static [Side] {
        match self {
            SideArg::Left => &[Side::Left],
            SideArg::Right => &[Side::Right],
            SideArg::Both => &[Side::Left, Side::Right],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    #[default]
    Auto,
    File,
}

/// Either a profile file or one of the reference devices.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ProfileSource {
    /// Profile JSON file.
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Reference device profile.
    #[arg(long, value_enum)]
    pub preset: Option<DeviceArg>,
}

impl ProfileSource {
    pub fn load(&self) -> Result<RabiProfile, Error> {
        match (&self.profile, self.preset) {
            (Some(path), _) => load_profile(path),
            (None, Some(d)) => Ok(d.profile()),
            (None, None) => Err(Error::InvalidInput("one of --profile or --preset is required".into())),
        }
    }

    /// Design velocity when a preset was chosen.
    pub fn default_velocity(&self) -> Option<f64> {
        self.preset.map(DeviceArg::velocity)
    }
}

/// Reads a profile file; errors name the file.
pub fn load_profile(path: &Path) -> Result<RabiProfile, Error> {
    ProfileFile::load(path)
        .and_then(|f| f.into_profile())
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Also decide the energy-dependent classes at this velocity.
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    /// Points of the classification grid on [-1, 1].
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Relative residual below which a symmetry counts as present.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Velocity in units of v_d (default: the preset's design velocity).
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub solver: Solver,
    /// Quadrature points for the non-local solver.
    #[arg(long, default_value_t = asym_core::nonlocal::DEFAULT_LS_GRID)]
    pub grid: usize,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Single velocity instead of a range.
    #[arg(long, conflicts_with_all = ["v_min", "v_max"])]
    pub v_over_vd: Option<f64>,
    /// Range start (default: 0.8 times the preset's design velocity).
    #[arg(long)]
    pub v_min: Option<f64>,
    /// Range end (default: 1.2 times the preset's design velocity).
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long, default_value_t = 81)]
    pub v_steps: usize,
    #[arg(long, value_enum, default_value_t)]
    pub solver: Solver,
    /// Quadrature points for the non-local solver.
    #[arg(long, default_value_t = asym_core::nonlocal::DEFAULT_LS_GRID)]
    pub grid: usize,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Velocity in units of v_d (default: the preset's design velocity).
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    /// Grid points per axis on [-1, 1].
    #[arg(long, default_value_t = asym_core::kernel::DEFAULT_KERNEL_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SemiclassicalArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Velocity in units of v_d (default: the preset's design velocity).
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub side: SideArg,
    #[arg(long, default_value_t = asym_core::semiclassical::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub device: DeviceArg,
    /// Gaussian ansatz (default: the one used by the reference device).
    #[arg(long, value_enum)]
    pub ansatz: Option<AnsatzArg>,
    /// Target velocity (default: the reference device's).
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub init: InitArg,
    /// Starting profile for `--init file`.
    #[arg(long, value_name = "PATH", required_if_eq("init", "file"))]
    pub profile: Option<PathBuf>,
    /// Maximum number of objective evaluations.
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    /// Average the objective over 0.9, 1 and 1.1 times the target velocity.
    #[arg(long)]
    pub robust: bool,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Optimized profile JSON (default: embedded in the stdout summary).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Iteration log.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Format of the iteration log.
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Profile JSON file.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["preset", "seed"])]
    pub profile: Option<PathBuf>,
    /// Reference device profile.
    #[arg(long, value_enum, conflicts_with = "seed")]
    pub preset: Option<DeviceArg>,
    /// Draw a random decay-free profile (and velocity) from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Velocity in units of v_d.
    #[arg(long)]
    pub v_over_vd: Option<f64>,
    /// Initial grid of the non-local solver; refined until converged.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}
