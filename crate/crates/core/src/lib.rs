//! Variational toolkit for exact area-preserving monotone twist maps.
//!
//! A twist map of the annulus is encoded by a generating function
//! `h(ξ, η)` on the universal cover: orbits `(x_i, y_i)` of the map
//! correspond to stationary configurations `(x_i)` of the formal action
//! `Σ h(x_i, x_{i+1})`, with momenta recovered from the partial
//! derivatives of `h`. This crate works entirely on the configuration
//! side:
//!
//! - [`genfn`] defines the [`GeneratingFunction`] trait, the built-in
//!   cosine on-site model ([`FrenkelKontorova`]) and a tabulated-potential
//!   variant, and the induced phase-space map and its inverse.
//! - [`hypotheses`] runs grid checks of the structural assumptions
//!   (periodicity, coercivity, submodularity, uniform twist, curvature
//!   bounds) that the variational arguments rely on.
//! - [`conjunction`] composes generating functions by minimizing over
//!   the shared middle point, and reduces rational rotation numbers to
//!   a one-step problem.
//! - [`config`] is the bi-infinite configuration type: a finite window
//!   of explicit values plus symbolic tails (constant or periodic).
//! - [`action`] evaluates normalized (`I`) and renormalized (`J`)
//!   actions relative to a pair of neighboring periodic states, and the
//!   per-block constants that make multi-transition actions finite.
//! - [`minimize`] holds the constrained chain solver's public entry
//!   points: minimal segments, heteroclinic connections, the gap
//!   detector for constrained minima, and the loop-excursion lower
//!   bound `φ`.
//! - [`transition`] builds admissible transition schedules from a gap
//!   report and minimizes the renormalized action over configurations
//!   with prescribed transition pattern.
//!
//! Everything is deterministic: solvers use fixed grids, fixed sweep
//! orders, and tie-breaking toward lexicographically smallest
//! configurations, so repeated runs produce bit-identical results.

// Validation guards are written `!(x > 0.0)` rather than `x <= 0.0`
// on purpose: the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod chain;
pub mod config;
pub mod conjunction;
pub mod error;
pub mod genfn;
pub mod hypotheses;
pub mod minimize;
pub mod numerics;
pub mod transition;

pub use action::{
    block_constant, compute_i, compute_j, normalized_term, segment_action, stationarity_residuals,
    ActionReport, BlockConstantCache, BlockKind, BlockTerm, BlockTermKind, IValue, Label,
    NeighboringPair, Schedule,
};
pub use config::{Configuration, Tail};
pub use conjunction::{Conjunction, RationalReduction};
pub use error::{Error, ErrorClass};
pub use genfn::{
    iterate_map, twist_map_step, twist_map_step_auto, twist_map_step_inverse, FkModel,
    FrenkelKontorova, GeneratingFunction, ModelSpec, OrbitResult, TabulatedFk,
};
pub use hypotheses::{check_hypotheses, default_strip, HypothesisCheck, HypothesisReport};
pub use minimize::{
    crossing_energies, detect_gap, estimate_phi, find_neighboring_pair, heteroclinic_minimizer,
    heteroclinic_pinned, minimize_segment, Direction, FiberSample, GapInterval, GapOptions,
    GapReport, Heteroclinic, Method, MinimizeOptions, PhiEstimate, Segment,
};
pub use transition::{
    approximate_heteroclinic_window, build_schedule, count_transitions, lift_rational,
    minimize_transition, multi_schedule_distinctness, test_configuration, DistinctnessReport, Lift,
    Pattern, ScheduleBlueprint, ScheduleBuild, TransitionResult,
};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Library version, for run manifests and reproducibility records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
