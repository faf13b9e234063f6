//! Normalized and renormalized action functionals.
//!
//! Fix a pair of *neighboring* periodic ground states `u⁰ < u¹ = u⁰`
//! translates that minimize the diagonal action `t ↦ h(t, t)` with no
//! further minimizer between them, and let `c` be their common level.
//! The **normalized action** of a configuration is
//!
//! ```text
//! I(x) = Σ_i [ h(x_i, x_{i+1}) - c ],
//! ```
//!
//! which converges for configurations approaching the ground states at
//! both ends but diverges as soon as a tail keeps paying a positive
//! per-step premium — in particular for every configuration whose
//! tails wind with nonzero rotation.
//!
//! The **renormalized action** `J` makes multi-transition
//! configurations comparable again: a transition schedule partitions
//! the sites into blocks, and each transition block's contribution is
//! measured against the *constrained block minimum* `c±` (the least
//! action of any block segment crossing between the prescribed
//! boundary windows) instead of against `|block| · c`. Interior blocks
//! and the two infinite tails keep the normalized form. On the
//! admissible set, `J` differs from `I` by the constant
//! `Σ_t (|I_t| c - c_t±)`, so both induce the same minimizers; unlike
//! `I`, `J` stays finite and order-one however many transitions the
//! schedule prescribes.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainProblem, MinimizeOptions};
use crate::config::{Configuration, Tail};
use crate::error::Error;
use crate::genfn::GeneratingFunction;
use crate::numerics;
use crate::Result;

/// Which reference state a schedule constraint pins a site near.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Near the lower state `u⁰`.
    U0,
    /// Near the upper state `u¹`.
    U1,
}

impl Label {
    /// The constant tail corresponding to this label.
    pub fn tail(self) -> Tail {
        match self {
            Label::U0 => Tail::U0,
            Label::U1 => Tail::U1,
        }
    }
}

/// Crossing direction of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// From `u⁰` up to `u¹`.
    Up,
    /// From `u¹` down to `u⁰`.
    Down,
}

/// A pair of neighboring periodic ground states and their common
/// action level `c = h(u⁰, u⁰)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighboringPair {
    /// Lower state.
    pub u0: f64,
    /// Upper state.
    pub u1: f64,
    /// Ground action level used for normalization.
    pub c: f64,
}

/// Stationarity tolerance for ground-state validation.
const PAIR_STATIONARY_TOL: f64 = 1e-10;
/// Tolerance for the two diagonal values to agree.
const PAIR_LEVEL_TOL: f64 = 1e-10;
/// A diagonal sample this far below `c + dip` flags a state between
/// the two, disqualifying the pair as neighbors.
const PAIR_DIP_TOL: f64 = 1e-12;

impl NeighboringPair {
    /// Validates and builds a pair: both states must be stationary on
    /// the diagonal, share the same level, and admit no diagonal
    /// minimizer at or below that level strictly between them
    /// (checked on `resolution` samples).
    pub fn new(h: &dyn GeneratingFunction, u0: f64, u1: f64, resolution: usize) -> Result<Self> {
        if !(u0.is_finite() && u1.is_finite() && u0 < u1) {
            return Err(Error::InvalidParameter(format!(
                "need finite u0 < u1, got ({u0}, {u1})"
            )));
        }
        for (name, u) in [("u0", u0), ("u1", u1)] {
            let r = (h.d1(u, u) + h.d2(u, u)).abs();
            if r > PAIR_STATIONARY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {u} is not diagonal-stationary (residual {r:.3e})"
                )));
            }
        }
        let c0 = h.eval(u0, u0);
        let c1 = h.eval(u1, u1);
        if (c0 - c1).abs() > PAIR_LEVEL_TOL {
            return Err(Error::InvalidParameter(format!(
                "diagonal levels differ: h(u0,u0) = {c0}, h(u1,u1) = {c1}"
            )));
        }
        let n = resolution.max(16);
        let sample = |k: usize| u0 + (u1 - u0) * k as f64 / n as f64;
        for k in 1..n {
            let t = sample(k);
            if h.eval(t, t) <= c0 + PAIR_DIP_TOL {
                return Err(Error::InvalidParameter(format!(
                    "diagonal dips to the ground level at t = {t}; the states are not neighbors"
                )));
            }
        }
        // A dip can hide between samples (the grid rarely lands on a
        // stationary point exactly), so refine every cell where the
        // diagonal derivative swings negative-to-positive and check the
        // refined local minimum against the ground level.
        let slope = |t: f64| h.d1(t, t) + h.d2(t, t);
        let mut prev = slope(sample(1));
        for k in 2..n {
            let cur = slope(sample(k));
            if prev < 0.0 && cur > 0.0 {
                let (t, v) =
                    numerics::golden_min(|t| h.eval(t, t), sample(k - 1), sample(k), 1e-12);
                if v <= c0 + PAIR_DIP_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal dips to the ground level at t = {t}; the states are not \
                         neighbors"
                    )));
                }
            }
            prev = cur;
        }
        Ok(NeighboringPair { u0, u1, c: c0 })
    }

    /// Builds a pair without validation (testing and integrable-chain
    /// experiments).
    pub fn new_unchecked(u0: f64, u1: f64, c: f64) -> Self {
        NeighboringPair { u0, u1, c }
    }

    /// Gap width `u¹ - u⁰`.
    pub fn width(&self) -> f64 {
        self.u1 - self.u0
    }

    /// Reference value selected by a label.
    pub fn label_value(&self, label: Label) -> f64 {
        match label {
            Label::U0 => self.u0,
            Label::U1 => self.u1,
        }
    }
}

/// A transition schedule: constrained sites `k_0 = 0 < k_1 < …`,
/// window radii `ρ_i`, and the labels saying which reference state
/// each constrained site must be near.
///
/// Consecutive equal labels delimit *interior* blocks, label changes
/// delimit *transition* blocks. Isolated interior labels are rejected:
/// a constrained site strictly inside the schedule must have a
/// same-labeled neighbor, so each transition is flanked by sites that
/// genuinely dwell at both states. The two end sites are exempt — the
/// configuration's constant tails extend their labels indefinitely, so
/// `[U0, U1]` is the valid single-transition (heteroclinic) schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Constrained site indices, `k[0] == 0`, strictly increasing.
    pub k: Vec<i64>,
    /// Window radii: site `k[i]` must satisfy `|x - u^{label}| ≤ ρ[i]`.
    pub rho: Vec<f64>,
    /// Reference state per constrained site.
    pub labels: Vec<Label>,
}

/// Role of one block of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Both ends share a label; the block dwells near one state.
    Interior(Label),
    /// Crossing from `u⁰` to `u¹`.
    Up,
    /// Crossing from `u¹` to `u⁰`.
    Down,
}

impl Schedule {
    /// Builds and validates a schedule for the given pair.
    pub fn new(
        k: Vec<i64>,
        rho: Vec<f64>,
        labels: Vec<Label>,
        pair: &NeighboringPair,
    ) -> Result<Self> {
        let s = Schedule { k, rho, labels };
        s.validate(pair)?;
        Ok(s)
    }

    /// Checks the structural invariants listed on the type.
    pub fn validate(&self, pair: &NeighboringPair) -> Result<()> {
        let n = self.k.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "schedule needs at least two constrained sites".into(),
            ));
        }
        if self.rho.len() != n || self.labels.len() != n {
            return Err(Error::InvalidParameter(format!(
                "schedule length mismatch: {} sites, {} radii, {} labels",
                n,
                self.rho.len(),
                self.labels.len()
            )));
        }
        if self.k[0] != 0 {
            return Err(Error::InvalidParameter(format!(
                "schedule must be anchored at k[0] = 0, got {}",
                self.k[0]
            )));
        }
        for i in 1..n {
            if self.k[i] <= self.k[i - 1] {
                return Err(Error::ConstraintViolation {
                    index: i as i64,
                    detail: format!(
                        "constrained sites must increase strictly: k[{}] = {} after {}",
                        i,
                        self.k[i],
                        self.k[i - 1]
                    ),
                });
            }
        }
        let half_width = 0.5 * pair.width();
        for (i, &r) in self.rho.iter().enumerate() {
            if !(r.is_finite() && r > 0.0 && r < half_width) {
                return Err(Error::ConstraintViolation {
                    index: i as i64,
                    detail: format!("window radius must lie in (0, {half_width}), got {r}"),
                });
            }
        }
        for i in 1..n.saturating_sub(1) {
            let left_same = self.labels[i - 1] == self.labels[i];
            let right_same = self.labels[i + 1] == self.labels[i];
            if !left_same && !right_same {
                return Err(Error::ConstraintViolation {
                    index: i as i64,
                    detail:
                        "isolated label: every interior constrained site needs a same-labeled neighbor"
                            .into(),
                });
            }
        }
        Ok(())
    }

    /// Number of constrained sites.
    pub fn len(&self) -> usize {
        self.k.len()
    }

    /// True when the schedule has no constrained sites (never after
    /// validation).
    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Number of blocks (`len() - 1`).
    pub fn n_blocks(&self) -> usize {
        self.k.len().saturating_sub(1)
    }

    /// Sites spanned by block `b`, exclusive of the right constraint.
    pub fn spacing(&self, b: usize) -> i64 {
        self.k[b + 1] - self.k[b]
    }

    /// Role of block `b`.
    pub fn block_kind(&self, b: usize) -> BlockKind {
        match (self.labels[b], self.labels[b + 1]) {
            (a, b2) if a == b2 => BlockKind::Interior(a),
            (Label::U0, Label::U1) => BlockKind::Up,
            (Label::U1, Label::U0) => BlockKind::Down,
            _ => unreachable!(),
        }
    }

    /// Number of transition blocks.
    pub fn n_transitions(&self) -> usize {
        (0..self.n_blocks())
            .filter(|&b| !matches!(self.block_kind(b), BlockKind::Interior(_)))
            .count()
    }
}

/// Value of the normalized action: finite, or divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IValue {
    /// The series converges (tails settle into zero-premium states).
    Finite(f64),
    /// A tail pays a positive per-step premium forever.
    Infinite,
}

impl IValue {
    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            IValue::Finite(v) => Some(v),
            IValue::Infinite => None,
        }
    }
}

/// One normalized step `h(x, y) - c`.
pub fn normalized_term(h: &dyn GeneratingFunction, pair: &NeighboringPair, x: f64, y: f64) -> f64 {
    h.eval(x, y) - pair.c
}

/// Raw action of a finite segment, `Σ h(x_j, x_{j+1})`.
pub fn segment_action(h: &dyn GeneratingFunction, xs: &[f64]) -> f64 {
    let mut a = 0.0;
    for w in xs.windows(2) {
        a += h.eval(w[0], w[1]);
    }
    a
}

/// Per-period normalized premium a tail keeps paying above this is
/// treated as divergent.
const TAIL_PREMIUM_TOL: f64 = 1e-10;

/// Normalized action `I` of a configuration.
///
/// Constant tails contribute only their joining step (their repeated
/// step is the ground step, normalized to zero by the definition of
/// the pair). A periodic tail with nonzero winding, or with a positive
/// per-period normalized premium, makes the series diverge.
pub fn compute_i(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    config: &Configuration,
) -> Result<IValue> {
    config.validate()?;
    for (is_left, tail) in [(true, config.left_tail), (false, config.right_tail)] {
        if let Tail::Periodic(q, p) = tail {
            if p != 0 {
                return Ok(IValue::Infinite);
            }
            // Zero winding: the tail repeats a q-step loop. Its
            // per-period normalized action must vanish for the series
            // to converge; measure it on one period beyond the window.
            let start = if is_left {
                config.lo - q as i64
            } else {
                config.hi()
            };
            let mut s = 0.0;
            for j in 0..q as i64 {
                let i = start + j;
                let a = config.value_at(i, pair);
                let b = config.value_at(i + 1, pair);
                s += normalized_term(h, pair, a, b);
            }
            if s.abs() > TAIL_PREMIUM_TOL {
                return Ok(IValue::Infinite);
            }
        }
    }
    let mut total = 0.0;
    for i in (config.lo - 1)..=config.hi() {
        let a = config.value_at(i, pair);
        let b = config.value_at(i + 1, pair);
        total += normalized_term(h, pair, a, b);
    }
    Ok(IValue::Finite(total))
}

/// Stationarity residuals `|∂₂h(x_{i-1}, x_i) + ∂₁h(x_i, x_{i+1})|`
/// over the explicit window, tails supplying the outside neighbors.
pub fn stationarity_residuals(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    config: &Configuration,
) -> Vec<f64> {
    (config.lo..=config.hi())
        .map(|i| {
            let prev = config.value_at(i - 1, pair);
            let cur = config.value_at(i, pair);
            let next = config.value_at(i + 1, pair);
            (h.d2(prev, cur) + h.d1(cur, next)).abs()
        })
        .collect()
}

/// Cache key for one block: spacing, the two window radii (bit
/// patterns), and crossing direction.
type BlockKey = (i64, u64, u64, Direction);

/// Memoization table for constrained block minima.
///
/// A cache is only meaningful for a fixed model and pair; create one
/// per analysis context and drop it when switching models.
#[derive(Default)]
pub struct BlockConstantCache {
    map: Mutex<HashMap<BlockKey, (f64, Vec<f64>)>>,
}

impl BlockConstantCache {
    /// Creates an empty cache.
    pub fn new() -> Self {
        Self::default()
    }
}

/// Constrained minimum `c±` of one transition block: the least raw
/// action of a segment of `spacing` steps whose first site lies in the
/// departure window and whose last site lies in the arrival window,
/// all sites confined to `[u⁰, u¹]`.
///
/// Returns the minimal action and the minimizing segment
/// (`spacing + 1` sites).
#[allow(clippy::too_many_arguments)]
pub fn block_constant(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    spacing: i64,
    rho_start: f64,
    rho_end: f64,
    direction: Direction,
    opts: &MinimizeOptions,
    cache: Option<&BlockConstantCache>,
) -> Result<(f64, Vec<f64>)> {
    if spacing < 1 {
        return Err(Error::InvalidParameter(format!(
            "block spacing must be >= 1, got {spacing}"
        )));
    }
    let key = (spacing, rho_start.to_bits(), rho_end.to_bits(), direction);
    if let Some(c) = cache {
        if let Some(hit) = c.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
    }
    let n = spacing as usize + 1;
    let mut bounds = vec![(pair.u0, pair.u1); n];
    match direction {
        Direction::Up => {
            bounds[0] = (pair.u0, pair.u0 + rho_start);
            bounds[n - 1] = (pair.u1 - rho_end, pair.u1);
        }
        Direction::Down => {
            bounds[0] = (pair.u1 - rho_start, pair.u1);
            bounds[n - 1] = (pair.u0, pair.u0 + rho_end);
        }
    }
    let problem = ChainProblem {
        h,
        bounds,
        left_anchor: None,
        right_anchor: None,
    };
    // The crossing's position inside the block is a discrete family of
    // near-degenerate basins (one per step), separated by barriers a
    // single-coordinate move cannot cross downhill. A grid seed picks
    // between them by discretization noise, which can exceed the basin
    // gaps when a window is narrower than the crossing's first
    // approach rung. Seed a sharp step at every position instead and
    // keep the best polished result; `solve` clamps each seed into the
    // windows.
    let (depart, arrive) = match direction {
        Direction::Up => (pair.u0, pair.u1),
        Direction::Down => (pair.u1, pair.u0),
    };
    let mut best: Option<chain::ChainSolution> = None;
    let mut seed = vec![depart; n];
    for split in 1..n {
        seed[split - 1] = depart;
        for v in seed[split..].iter_mut() {
            *v = arrive;
        }
        let sol = chain::solve(&problem, Some(&seed), opts);
        if sol.converged && best.as_ref().is_none_or(|b| sol.action < b.action) {
            best = Some(sol);
        }
    }
    let Some(sol) = best else {
        let attempt = chain::solve(&problem, None, opts);
        return Err(Error::NonConvergence {
            what: format!("block constant (spacing {spacing}, {direction:?})"),
            residual: attempt.max_residual,
            iterations: attempt.sweeps,
            best: attempt.x.into_boxed_slice(),
        });
    };
    let out = (sol.action, sol.x);
    if let Some(c) = cache {
        c.map.lock().unwrap().insert(key, out.clone());
    }
    Ok(out)
}

/// One block's contribution to a renormalized action.
#[derive(Debug, Clone, Serialize)]
pub struct BlockTerm {
    /// What the block is: an interior dwell, a crossing, or one of the
    /// two infinite tails.
    pub kind: BlockTermKind,
    /// First step index of the block (step `i` joins sites `i`, `i+1`).
    pub first_step: i64,
    /// Last step index of the block.
    pub last_step: i64,
    /// The block's contribution to the total.
    pub value: f64,
}

/// Role tag for [`BlockTerm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockTermKind {
    /// Steps below the first constrained site.
    LeftTail,
    /// Interior block (normalized sum).
    Interior,
    /// Up transition (measured against `c+`).
    Up,
    /// Down transition (measured against `c-`).
    Down,
    /// Steps above the last constrained site.
    RightTail,
}

/// Renormalized action of a configuration under a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    /// Total renormalized action.
    pub total: f64,
    /// Per-block contributions, left tail first.
    pub per_block: Vec<BlockTerm>,
    /// Stationarity residual per explicit window site.
    pub per_site_residual: Vec<f64>,
    /// Max of the residuals.
    pub max_residual: f64,
}

/// Renormalized action `J` of `config` under `schedule`.
///
/// Preconditions: the configuration's tails are constant and match the
/// schedule's end labels, the explicit window covers all constrained
/// sites with one step to spare, and every constrained site lies in
/// its window (`|x_{k_i} - u^{label_i}| ≤ ρ_i`, with a `1e-12` slack).
pub fn compute_j(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    schedule: &Schedule,
    config: &Configuration,
    opts: &MinimizeOptions,
    cache: Option<&BlockConstantCache>,
) -> Result<ActionReport> {
    schedule.validate(pair)?;
    config.validate()?;
    let first_label = schedule.labels[0];
    let last_label = schedule.labels[schedule.len() - 1];
    if config.left_tail != first_label.tail() || config.right_tail != last_label.tail() {
        return Err(Error::Precondition(format!(
            "tails must be constant at the end labels ({:?}, {:?})",
            first_label, last_label
        )));
    }
    let k_last = *schedule.k.last().expect("validated schedule is nonempty");
    if config.lo > -1 || config.hi() < k_last + 1 {
        return Err(Error::Precondition(format!(
            "window [{}, {}] must cover sites [-1, {}]",
            config.lo,
            config.hi(),
            k_last + 1
        )));
    }
    for (i, (&ki, &rho)) in schedule.k.iter().zip(&schedule.rho).enumerate() {
        let x = config.value_at(ki, pair);
        let target = pair.label_value(schedule.labels[i]);
        if (x - target).abs() > rho + 1e-12 {
            return Err(Error::ConstraintViolation {
                index: ki,
                detail: format!("site {ki} at {x} is outside its window (|x - {target}| ≤ {rho})"),
            });
        }
    }

    let mut per_block = Vec::with_capacity(schedule.n_blocks() + 2);
    let x = |i: i64| config.value_at(i, pair);

    // Left tail: all steps strictly below the first constrained site.
    {
        let mut v = 0.0;
        for i in (config.lo - 1)..0 {
            v += normalized_term(h, pair, x(i), x(i + 1));
        }
        per_block.push(BlockTerm {
            kind: BlockTermKind::LeftTail,
            first_step: config.lo - 1,
            last_step: -1,
            value: v,
        });
    }

    for b in 0..schedule.n_blocks() {
        let (k0, k1) = (schedule.k[b], schedule.k[b + 1]);
        let kind = schedule.block_kind(b);
        let value = match kind {
            BlockKind::Interior(_) => {
                let mut v = 0.0;
                for i in k0..k1 {
                    v += normalized_term(h, pair, x(i), x(i + 1));
                }
                v
            }
            BlockKind::Up | BlockKind::Down => {
                let direction = if kind == BlockKind::Up {
                    Direction::Up
                } else {
                    Direction::Down
                };
                let (c_pm, _) = block_constant(
                    h,
                    pair,
                    k1 - k0,
                    schedule.rho[b],
                    schedule.rho[b + 1],
                    direction,
                    opts,
                    cache,
                )?;
                let mut raw = 0.0;
                for i in k0..k1 {
                    raw += h.eval(x(i), x(i + 1));
                }
                raw - c_pm
            }
        };
        per_block.push(BlockTerm {
            kind: match kind {
                BlockKind::Interior(_) => BlockTermKind::Interior,
                BlockKind::Up => BlockTermKind::Up,
                BlockKind::Down => BlockTermKind::Down,
            },
            first_step: k0,
            last_step: k1 - 1,
            value,
        });
    }

    // Right tail: steps at and above the last constrained site.
    {
        let mut v = 0.0;
        for i in k_last..=config.hi() {
            v += normalized_term(h, pair, x(i), x(i + 1));
        }
        per_block.push(BlockTerm {
            kind: BlockTermKind::RightTail,
            first_step: k_last,
            last_step: config.hi(),
            value: v,
        });
    }

    let per_site_residual = stationarity_residuals(h, pair, config);
    let max_residual = per_site_residual.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(ActionReport {
        total: per_block.iter().map(|b| b.value).sum(),
        per_block,
        per_site_residual,
        max_residual,
    })
}
