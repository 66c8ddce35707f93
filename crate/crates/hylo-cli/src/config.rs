//! Run configuration: a single TOML file describes one experiment.
//!
//! The schema is strict (unknown keys are rejected) so that a typo in a
//! sweep of dozens of files fails loudly instead of silently running with
//! a default. Relative paths inside a config (output directory, stored
//! solution files, tabulated potentials) are resolved against the
//! directory containing the config file, which keeps a config plus its
//! inputs relocatable as a unit.

use std::path::PathBuf;

use serde::Deserialize;

/// Top-level run description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Which experiment to run.
    pub command: CommandKind,
    /// Seed for every stochastic choice the run makes (perturbation
    /// draws). Identical config + seed reproduces output files byte for
    /// byte, up to the timestamp header line.
    #[serde(default)]
    pub seed: u64,
    /// Directory the run writes its report files into; created if absent.
    pub output_dir: PathBuf,
    /// Periodic box, required by every command that builds fields itself.
    /// A stability run may omit it: the stored solution file carries its
    /// own grid.
    pub grid: Option<GridConfig>,
    /// Equation family, dispersion order, and potential. Required for
    /// evolve/soliton and for diagnostics plateau scans; optional for
    /// stability runs, where it cross-checks the stored solution.
    pub model: Option<ModelConfig>,
    pub evolve: Option<EvolveConfig>,
    pub soliton: Option<SolitonConfig>,
    pub stability: Option<StabilityConfig>,
    pub diagnostics: Option<DiagnosticsConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Evolve,
    Soliton,
    Stability,
    Diagnostics,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            CommandKind::Evolve => "evolve",
            CommandKind::Soliton => "soliton",
            CommandKind::Stability => "stability",
            CommandKind::Diagnostics => "diagnostics",
        };
        write!(f, "{tag}")
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Box length L; the domain is [-L/2, L/2).
    pub length: f64,
    /// Number of nodes, even and at least 8.
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "fkdv" (real unidirectional family) or "fns" (complex dispersive
    /// family). Diagnostics runs are family-independent and may omit it.
    pub family: Option<FamilyKind>,
    /// Fractional dispersion order s.
    pub s: f64,
    /// Potential catalog key: "bo", "kdv", "gpe", "zero",
    /// "power(p, sign)", or "table(path)".
    pub nonlinearity: String,
    /// Optional coefficient c adding c r^2 to the potential (shifts the
    /// quadratic part without touching the genuinely nonlinear part).
    pub quadratic: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Fkdv,
    Fns,
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            FamilyKind::Fkdv => "fkdv",
            FamilyKind::Fns => "fns",
        };
        write!(f, "{tag}")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Sample the conserved quantities and write a snapshot every this
    /// many steps. Default: the stride giving roughly ten samples.
    pub snapshot_stride: Option<usize>,
    /// Apply the 2/3 rule in the real family's nonlinear term.
    #[serde(default = "default_true")]
    pub dealias: bool,
    pub initial: InitialConfig,
}

/// Initial state of an evolution run. Real profiles are promoted to
/// complex automatically when the family is "fns".
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// The zero field.
    Zero,
    /// amplitude * exp(-x^2 / (2 width^2)).
    Gaussian { amplitude: f64, width: f64 },
    /// The explicit algebraic ground-state profile of the "bo" potential
    /// at scale lambda, periodized with the given number of images.
    Soliton {
        lambda: f64,
        #[serde(default = "default_images")]
        images: usize,
    },
    /// The profile stored in a solution file (same grid as the run).
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonConfig {
    /// "gradient_flow", "petviashvili", or "exact_bo". When omitted the
    /// method is inferred: a charge target selects the constrained
    /// descent, a lambda selects the fixed-point iteration.
    pub method: Option<String>,
    /// Charge target for the constrained gradient flow.
    pub charge: Option<f64>,
    /// Multiplier scale for the fixed-point iteration or the explicit
    /// profile.
    pub lambda: Option<f64>,
    /// Convergence threshold override.
    pub tol: Option<f64>,
    /// Iteration budget override.
    pub max_iter: Option<usize>,
    /// Periodization images for the explicit profile.
    #[serde(default = "default_images")]
    pub images: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    /// Solution file produced by a soliton run; carries grid, dispersion
    /// order, potential key, and multiplier.
    pub solution: PathBuf,
    /// Relative perturbation size in [0, 0.1]; zero runs the unperturbed
    /// control.
    pub epsilon: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Distance samples every this many steps. Default: the stride giving
    /// roughly fifty samples.
    pub snapshot_stride: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Plateau radii for the energy-per-charge scan; requires [grid] and
    /// [model].
    pub radii: Option<Vec<f64>>,
    /// Plateau height for the scan (default 1).
    pub s0: Option<f64>,
    /// Interpolation/embedding exponent table over a (p, s) grid.
    pub gn: Option<GnGridConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnGridConfig {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
}

fn default_true() -> bool {
    true
}

fn default_images() -> usize {
    10
}
