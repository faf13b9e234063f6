//! The JSON experiment schema: model, command, parameters, and output
//! destination.
//!
//! A configuration file is a single JSON object with three parts
//! flattened together:
//!
//! ```json
//! {
//!   "model": "frenkel-kontorova", "coupling": 1.0, "amplitude": 2.0,
//!   "command": "transition",
//!   "params": { "epsilon": 0.05, "transitions": 2 },
//!   "output": { "path": "run.json", "format": "json" }
//! }
//! ```
//!
//! The `output` block is optional; `--output` and `--format` flags
//! override it. Command parameters are validated against each
//! operation's preconditions before any numerical work starts.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use twistvar::{Direction, Label, ModelSpec};

/// Primary result file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Pretty-printed JSON, bit-identical across reruns.
    Json,
    /// Comma-separated values with 17-significant-digit floats
    /// (round-trip safe, diffable across reruns).
    Csv,
}

impl Format {
    /// File-extension-style name.
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Output destination from the config file. Both fields are optional
/// because the corresponding flags may supply them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Primary result path; side files (run manifest, per-site CSV)
    /// are written next to it with derived extensions.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Primary result format.
    #[serde(default)]
    pub format: Option<Format>,
}

/// A full experiment description as parsed from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Which generating function to build (tagged by `"model"`).
    #[serde(flatten)]
    pub model: ModelSpec,
    /// Which operation to run (tagged by `"command"`, parameters
    /// under `"params"`).
    #[serde(flatten)]
    pub command: CommandSpec,
    /// Where to write results.
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// One command per process invocation; batch experiments are shell
/// loops over config files, which keeps every run manifest an honest
/// record of exactly one computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum CommandSpec {
    /// Sample the structural hypotheses (periodicity, coercivity,
    /// submodularity, twist, curvature) over a strip grid.
    CheckH {
        /// Grid points per axis.
        #[serde(default = "default_grid")]
        grid: usize,
        /// Strip `[[ξ_lo, ξ_hi], [η_lo, η_hi]]`; default covers one
        /// period with margin.
        #[serde(default)]
        strip: Option<((f64, f64), (f64, f64))>,
    },
    /// Locate the neighboring pair of periodic ground states on the
    /// diagonal.
    Periodic {
        /// Diagonal scan resolution.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Iterate the twist map and verify the orbit/stationarity
    /// correspondence sitewise.
    MapIterate {
        /// Initial position.
        x0: f64,
        /// Initial momentum.
        y0: f64,
        /// Number of output rows `(i, x_i, y_i)`, `i = 0..steps`;
        /// at most 10⁶.
        steps: usize,
    },
    /// Minimize the crossing profile between the two ground states.
    Heteroclinic {
        /// Crossing direction.
        direction: Direction,
        /// Free sites on each side of the crossing.
        #[serde(default = "default_het_half_window")]
        half_window: usize,
        /// Diagonal scan resolution for the ground pair.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Scan constrained crossing minima over a fiber of pinned values
    /// and certify gap intervals.
    Gap {
        /// Pin positions sampled across the pair's width.
        #[serde(default = "default_fiber_samples")]
        fiber_samples: usize,
        /// Minimum half-window of each constrained solve.
        #[serde(default = "default_gap_half_window")]
        half_window: usize,
        /// Diagonal scan resolution for the ground pair.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Bound the least action of loops leaving a δ-collar of the
    /// ground states.
    Phi {
        /// Collar radius.
        delta: f64,
        /// Longest loop length considered by the upper bound.
        #[serde(default = "default_n_max")]
        n_max: usize,
        /// Diagonal scan resolution for the ground pair.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Build an admissible transition schedule from a gap scan and
    /// minimize the renormalized action over it.
    Transition {
        /// Global cap on window radii.
        epsilon: f64,
        /// Number of crossings for the alternating pattern
        /// (exactly one of `transitions` / `labels`).
        #[serde(default)]
        transitions: Option<usize>,
        /// Explicit constrained-site labels
        /// (exactly one of `transitions` / `labels`).
        #[serde(default)]
        labels: Option<Vec<Label>>,
        /// Cap on any single block's spacing.
        #[serde(default)]
        max_block_spacing: Option<i64>,
        /// Gap-scan fiber samples.
        #[serde(default = "default_fiber_samples")]
        fiber_samples: usize,
        /// Gap-scan half window.
        #[serde(default = "default_gap_half_window")]
        half_window: usize,
        /// Diagonal scan resolution for the ground pair.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Minimize the (q, p)-reduced one-step problem on its diagonal
    /// and lift the resulting stationary configuration back to the
    /// full chain.
    Rational {
        /// Period of the rotation number `p/q`.
        q: u32,
        /// Winding of the rotation number `p/q`.
        p: i64,
        /// Reduced-configuration half window, in periods.
        #[serde(default = "default_half_periods")]
        half_periods: usize,
    },
    /// Minimize several sub-schedules of one strictly-spaced base
    /// schedule and measure pairwise separation of the minimizers.
    Distinctness {
        /// Global cap on window radii.
        epsilon: f64,
        /// Number of crossings of the alternating base schedule.
        transitions: usize,
        /// Strictly increasing index sequences selecting constrained
        /// sites of the base schedule.
        sequences: Vec<Vec<usize>>,
        /// Cap on any single block's spacing.
        #[serde(default)]
        max_block_spacing: Option<i64>,
        /// Gap-scan fiber samples.
        #[serde(default = "default_fiber_samples")]
        fiber_samples: usize,
        /// Gap-scan half window.
        #[serde(default = "default_gap_half_window")]
        half_window: usize,
        /// Diagonal scan resolution for the ground pair.
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
}

impl CommandSpec {
    /// The command's wire name, for summaries and file naming.
    pub fn name(&self) -> &'static str {
        match self {
            CommandSpec::CheckH { .. } => "check-h",
            CommandSpec::Periodic { .. } => "periodic",
            CommandSpec::MapIterate { .. } => "map-iterate",
            CommandSpec::Heteroclinic { .. } => "heteroclinic",
            CommandSpec::Gap { .. } => "gap",
            CommandSpec::Phi { .. } => "phi",
            CommandSpec::Transition { .. } => "transition",
            CommandSpec::Rational { .. } => "rational",
            CommandSpec::Distinctness { .. } => "distinctness",
        }
    }

    /// The format used when neither flag nor config chooses one:
    /// orbits are row data, everything else is a structured report.
    pub fn default_format(&self) -> Format {
        match self {
            CommandSpec::MapIterate { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn default_grid() -> usize {
    21
}

fn default_resolution() -> usize {
    257
}

fn default_het_half_window() -> usize {
    32
}

fn default_gap_half_window() -> usize {
    12
}

fn default_fiber_samples() -> usize {
    33
}

fn default_n_max() -> usize {
    2
}

fn default_half_periods() -> usize {
    6
}
