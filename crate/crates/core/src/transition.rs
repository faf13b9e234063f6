//! Multi-transition machinery: certified schedule construction,
//! constrained minimization of the renormalized action over a
//! schedule's window space, transition counting, rational lifting, and
//! multi-schedule distinctness.
//!
//! A *schedule* prescribes where a configuration must dwell near each
//! reference state and how far apart those dwells sit. Construction
//! ([`build_schedule`]) derives all constants from measured data: the
//! gap scan supplies certified face offsets and margins, the crossing
//! energies bound the per-block area budget, the loop-cost lower bound
//! `φ̂(δ)` sizes dwell blocks, and the heteroclinic tail bound sizes
//! transition blocks. Every inequality is re-verified numerically on
//! the emitted schedule.
//!
//! Dwell spacings demanded by the `φ̂(δ)` visit argument are often
//! astronomically large (the bound is far from sharp); spacings are
//! therefore capped at [`ScheduleBlueprint::max_block_spacing`], the
//! uncapped formula values are reported alongside, and
//! [`ScheduleBuild::spacings_certified`] records whether the cap bound.
//! Interiority of the resulting minimizers is always verified directly
//! by [`minimize_transition`], which is the check that matters.

use serde::{Deserialize, Serialize};

use crate::action::{
    block_constant, compute_j, ActionReport, BlockConstantCache, BlockKind, Label, NeighboringPair,
    Schedule,
};
use crate::chain::{self, ChainProblem, MinimizeOptions};
use crate::config::{Configuration, Tail};
use crate::conjunction::RationalReduction;
use crate::error::Error;
use crate::genfn::GeneratingFunction;
use crate::minimize::{estimate_phi, heteroclinic_minimizer, Direction, GapReport, Heteroclinic};
use crate::Result;

/// Label pattern of a schedule's constrained sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Dwell pairs alternating between the two states:
    /// `U0 U0 U1 U1 U0 U0 …`.
    Alternating,
    /// Explicit label list, one per constrained site
    /// (`n_blocks + 1` entries).
    Explicit(Vec<Label>),
}

fn default_max_block_spacing() -> i64 {
    384
}

/// Inputs to schedule construction. The derived quantities (radii,
/// deltas, epsilons, margins, spacings) are reported in
/// [`ScheduleBuild`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBlueprint {
    /// Global cap on window radii.
    pub epsilon: f64,
    /// Number of blocks (constrained sites minus one).
    pub n_blocks: usize,
    /// Label pattern.
    pub pattern: Pattern,
    /// Cap on any single block's spacing; the uncapped formula values
    /// are still reported.
    #[serde(default = "default_max_block_spacing")]
    pub max_block_spacing: i64,
    /// Force strictly increasing spacings (`s_b ← max(s_b, s_{b-1}+1)`)
    /// as required of distinctness base schedules.
    #[serde(default)]
    pub strictly_increasing: bool,
}

impl ScheduleBlueprint {
    /// Alternating-pattern blueprint with `n_blocks` blocks.
    pub fn alternating(epsilon: f64, n_blocks: usize) -> Self {
        ScheduleBlueprint {
            epsilon,
            n_blocks,
            pattern: Pattern::Alternating,
            max_block_spacing: default_max_block_spacing(),
            strictly_increasing: false,
        }
    }

    /// Alternating blueprint sized for exactly `transitions` crossings
    /// (`2·transitions + 1` blocks, ending in a dwell).
    pub fn for_transitions(epsilon: f64, transitions: usize) -> Self {
        Self::alternating(epsilon, 2 * transitions + 1)
    }

    /// Blueprint with an explicit label list.
    pub fn explicit(epsilon: f64, labels: Vec<Label>) -> Self {
        ScheduleBlueprint {
            epsilon,
            n_blocks: labels.len().saturating_sub(1),
            pattern: Pattern::Explicit(labels),
            max_block_spacing: default_max_block_spacing(),
            strictly_increasing: false,
        }
    }

    /// The constrained-site labels this blueprint prescribes.
    pub fn labels(&self) -> Result<Vec<Label>> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.n_blocks == 0 {
            return Err(Error::InvalidParameter(
                "blueprint needs at least one block".into(),
            ));
        }
        if self.max_block_spacing < 3 {
            return Err(Error::InvalidParameter(format!(
                "max_block_spacing must be at least 3, got {}",
                self.max_block_spacing
            )));
        }
        match &self.pattern {
            Pattern::Alternating => Ok((0..=self.n_blocks)
                .map(|i| if i % 4 < 2 { Label::U0 } else { Label::U1 })
                .collect()),
            Pattern::Explicit(labels) => {
                if labels.len() != self.n_blocks + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "explicit pattern needs {} labels for {} blocks, got {}",
                        self.n_blocks + 1,
                        self.n_blocks,
                        labels.len()
                    )));
                }
                Ok(labels.clone())
            }
        }
    }
}

/// A constructed schedule together with every derived constant, so the
/// construction can be audited and its inequalities re-checked.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleBuild {
    /// The emitted schedule.
    pub schedule: Schedule,
    /// Certified margin at each constrained site's face offset.
    pub margins: Vec<f64>,
    /// Dwell tolerance `δ_i` per constrained site.
    pub deltas: Vec<f64>,
    /// Action tolerance `ε_t` per transition block.
    pub eps: Vec<f64>,
    /// Certified energy margin `e_t` per transition block (min of its
    /// two face margins).
    pub e_margins: Vec<f64>,
    /// Tail-bound window length per transition block.
    pub het_windows: Vec<usize>,
    /// Uncapped spacing each block's formula demands.
    pub formula_spacings: Vec<i64>,
    /// Loop-cost lower bound `φ̂(δ)` per block (dwell blocks only).
    pub phi_lower: Vec<Option<f64>>,
    /// Up/down crossing energies and their sum.
    pub c0: f64,
    /// Down crossing energy.
    pub c1: f64,
    /// `c* = c0 + c1`.
    pub c_star: f64,
    /// Lipschitz bound used throughout the construction.
    pub lipschitz: f64,
    /// False when any block's spacing was capped below its formula
    /// value; interiority must then be (and is) verified directly.
    pub spacings_certified: bool,
    /// Worst margin of each re-verified inequality family, all
    /// strictly positive on success.
    pub invariant_worst: Vec<(String, f64)>,
}

/// Face candidates on one side of the gap: `(offset from the state,
/// margin)`, ascending by offset.
type FaceCandidates = Vec<(f64, f64)>;

/// Certified face candidates near each state. A position is certified
/// only when *both* families clear their thresholds there; the margin
/// kept is the smaller of the two.
fn certified_faces(gap: &GapReport, pair: &NeighboringPair) -> (FaceCandidates, FaceCandidates) {
    let mid = 0.5 * (pair.u0 + pair.u1);
    let cap = 0.5 * pair.width() * (1.0 - 1e-9);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for s in &gap.samples {
        let m_up = s.m_up - gap.c0;
        let m_down = s.m_down - gap.c1;
        if m_up < gap.threshold_up || m_down < gap.threshold_down {
            continue;
        }
        let margin = m_up.min(m_down);
        if s.x0 <= mid {
            let off = s.x0 - pair.u0;
            if off > 0.0 && off < cap {
                lower.push((off, margin));
            }
        } else {
            let off = pair.u1 - s.x0;
            if off > 0.0 && off < cap {
                upper.push((off, margin));
            }
        }
    }
    lower.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite offsets"));
    upper.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite offsets"));
    (lower, upper)
}

/// Smallest certified offset in `(target/2, target]`; falls back to
/// the smallest certified offset overall when the geometric target has
/// outrun the certified ladder (margins below the sampling floor).
fn snap_face(candidates: &[(f64, f64)], target: f64) -> Option<(f64, f64)> {
    candidates
        .iter()
        .find(|&&(off, _)| off > 0.5 * target && off <= target)
        .or_else(|| candidates.first())
        .copied()
}

/// Builds a transition schedule from measured data, following the
/// constructive recipe: certified window radii (Step 1), dwell
/// tolerances and `φ̂`-based dwell spacings (Step 2), action tolerances
/// and tail-bound transition spacings (Step 3), anchoring at site 0
/// (Step 4).
///
/// All inequalities are enforced during construction and re-verified on
/// the result; a violation is reported as [`Error::Construction`]
/// naming the inequality. An empty gap report fails the gap-condition
/// precondition.
pub fn build_schedule(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    gap: &GapReport,
    blueprint: &ScheduleBlueprint,
    opts: &MinimizeOptions,
) -> Result<ScheduleBuild> {
    let labels = blueprint.labels()?;
    if !gap.has_gap() {
        return Err(Error::Precondition(
            "gap condition fails: the fiber scan certifies no gap interval in at least one \
             direction, so the multi-transition construction has no room to anchor windows"
                .into(),
        ));
    }
    let lip = h.lipschitz_bound();
    let c_star = gap.c0 + gap.c1;
    if !(c_star > 0.0) {
        return Err(Error::Precondition(format!(
            "crossing energies must be positive, got c* = {c_star}"
        )));
    }
    let budget = c_star / (2.0 * lip);
    let n_sites = labels.len();
    let n_blocks = n_sites - 1;
    let (lower, upper) = certified_faces(gap, pair);

    // Step 1: window radii, snapped to certified offsets near the
    // geometric targets ε·2^{-i}.
    let mut rho = Vec::with_capacity(n_sites);
    let mut margins = Vec::with_capacity(n_sites);
    for (i, &label) in labels.iter().enumerate() {
        let target = blueprint.epsilon * f64::powi(0.5, i as i32);
        let side = match label {
            Label::U0 => &lower,
            Label::U1 => &upper,
        };
        let (off, margin) = snap_face(side, target).ok_or_else(|| Error::Construction {
            inequality: "(p1)".into(),
            detail: format!("no certified face offset available for site {i} ({label:?} side)"),
        })?;
        if off >= blueprint.epsilon {
            return Err(Error::Construction {
                inequality: "(p1)".into(),
                detail: format!(
                    "smallest certified offset {off} for site {i} is not below epsilon = {}",
                    blueprint.epsilon
                ),
            });
        }
        rho.push(off);
        margins.push(margin);
    }

    let kinds: Vec<BlockKind> = (0..n_blocks)
        .map(|b| match (labels[b], labels[b + 1]) {
            (a, c) if a == c => BlockKind::Interior(a),
            (Label::U0, Label::U1) => BlockKind::Up,
            _ => BlockKind::Down,
        })
        .collect();

    // (p2): dwell faces must fit the per-block area budget.
    for b in 0..n_blocks {
        if matches!(kinds[b], BlockKind::Interior(_)) && rho[b] + rho[b + 1] >= budget {
            return Err(Error::Construction {
                inequality: "(p2)".into(),
                detail: format!(
                    "dwell block {b}: rho[{b}] + rho[{}] = {} must stay below c*/(2C) = {budget}",
                    b + 1,
                    rho[b] + rho[b + 1]
                ),
            });
        }
    }

    // Per-transition certified energy margins.
    let transition_blocks: Vec<usize> = (0..n_blocks)
        .filter(|&b| !matches!(kinds[b], BlockKind::Interior(_)))
        .collect();
    let e_margins: Vec<f64> = transition_blocks
        .iter()
        .map(|&b| margins[b].min(margins[b + 1]))
        .collect();

    // Step 2: dwell tolerances δ_i, bounded by every adjacent block's
    // requirement: half the remaining area budget for dwell blocks,
    // 3e/(32C) for transition blocks (which makes (e1)/(e2) solvable).
    let mut deltas = Vec::with_capacity(n_sites);
    for i in 0..n_sites {
        let mut bound = f64::INFINITY;
        for b in [i.checked_sub(1), Some(i)].into_iter().flatten() {
            if b >= n_blocks {
                continue;
            }
            match kinds[b] {
                BlockKind::Interior(_) => {
                    bound = bound.min(0.5 * (budget - rho[b] - rho[b + 1]));
                }
                BlockKind::Up | BlockKind::Down => {
                    let t = transition_blocks
                        .iter()
                        .position(|&tb| tb == b)
                        .expect("transition block is indexed");
                    bound = bound.min(3.0 * e_margins[t] / (32.0 * lip));
                }
            }
        }
        if !(bound > 0.0) {
            return Err(Error::Construction {
                inequality: "(d)".into(),
                detail: format!("site {i}: no positive dwell tolerance fits, bound = {bound}"),
            });
        }
        deltas.push(0.9 * bound);
    }

    // Step 3: per-transition action tolerances ε_t.
    let mut eps = Vec::with_capacity(transition_blocks.len());
    for (t, &b) in transition_blocks.iter().enumerate() {
        let dmin = deltas[b].min(deltas[b + 1]);
        let e_t = (e_margins[t] / 8.0).min(0.9 * 2.0 * lip * dmin);
        eps.push(e_t);
    }

    // Spacings: φ̂(δ)-formula for dwell blocks, heteroclinic tail bound
    // for transition blocks, both capped.
    let cap = blueprint.max_block_spacing;
    let mut spacings = Vec::with_capacity(n_blocks);
    let mut formula_spacings = Vec::with_capacity(n_blocks);
    let mut phi_lower = Vec::with_capacity(n_blocks);
    let mut het_windows = Vec::new();
    let mut certified = true;
    for b in 0..n_blocks {
        match kinds[b] {
            BlockKind::Interior(_) => {
                let delta = deltas[b].min(deltas[b + 1]);
                let phi = estimate_phi(h, pair, delta, 2, opts)?;
                let needed = if phi.lower > 0.0 {
                    ((0.5 * c_star + lip * (rho[b] + rho[b + 1])) / phi.lower).ceil()
                } else {
                    f64::INFINITY
                };
                let formula = needed.min(1e15) as i64;
                let actual = formula.min(cap).max(1);
                if actual < formula {
                    certified = false;
                }
                phi_lower.push(Some(phi.lower));
                formula_spacings.push(formula);
                spacings.push(actual);
            }
            BlockKind::Up | BlockKind::Down => {
                let t = transition_blocks
                    .iter()
                    .position(|&tb| tb == b)
                    .expect("transition block is indexed");
                let (n0, _) = approximate_heteroclinic_window(h, pair, eps[t], opts)?;
                let formula = n0 as i64 + 2;
                let actual = formula.min(cap).max(1);
                if actual < formula {
                    certified = false;
                }
                het_windows.push(n0);
                phi_lower.push(None);
                formula_spacings.push(formula);
                spacings.push(actual);
            }
        }
    }
    if blueprint.strictly_increasing {
        for b in 1..n_blocks {
            if spacings[b] <= spacings[b - 1] {
                spacings[b] = spacings[b - 1] + 1;
            }
        }
    }

    // Step 4: anchor at 0 and emit.
    let mut k = Vec::with_capacity(n_sites);
    let mut pos = 0i64;
    k.push(pos);
    for &s in &spacings {
        pos += s;
        k.push(pos);
    }
    let schedule = Schedule::new(k, rho, labels, pair)?;

    // Re-verify every inequality family on the emitted schedule and
    // record the worst margin of each.
    let mut worst_p2 = f64::INFINITY;
    let mut worst_d = f64::INFINITY;
    let mut worst_e1 = f64::INFINITY;
    let mut worst_e2 = f64::INFINITY;
    for b in 0..n_blocks {
        if matches!(kinds[b], BlockKind::Interior(_)) {
            let sum = schedule.rho[b] + schedule.rho[b + 1];
            worst_p2 = worst_p2.min(budget - sum);
            worst_d = worst_d.min(budget - sum - 2.0 * deltas[b].max(deltas[b + 1]));
        }
    }
    for (t, &b) in transition_blocks.iter().enumerate() {
        worst_e1 =
            worst_e1.min(0.5 * e_margins[t] - eps[t] - 2.0 * lip * (deltas[b] + deltas[b + 1]));
        worst_e2 = worst_e2.min(deltas[b].min(deltas[b + 1]) - eps[t] / (2.0 * lip));
    }
    let invariant_worst: Vec<(String, f64)> = [
        ("p2", worst_p2),
        ("d", worst_d),
        ("e1", worst_e1),
        ("e2", worst_e2),
    ]
    .into_iter()
    .map(|(n, v)| (n.to_string(), v))
    .collect();
    for (name, margin) in &invariant_worst {
        if margin.is_finite() && *margin <= 0.0 {
            return Err(Error::Construction {
                inequality: format!("({name})"),
                detail: format!("post-construction check failed with margin {margin}"),
            });
        }
    }

    Ok(ScheduleBuild {
        schedule,
        margins,
        deltas,
        eps,
        e_margins,
        het_windows,
        formula_spacings,
        phi_lower,
        c0: gap.c0,
        c1: gap.c1,
        c_star,
        lipschitz: lip,
        spacings_certified: certified,
        invariant_worst,
    })
}

/// Window-growth cap for [`approximate_heteroclinic_window`].
const MAX_HET_WINDOW: usize = 2048;

/// Finds the smallest window length `n0` such that the heteroclinic
/// minimizer's partial action over any centered window of at least
/// `n0` steps lies within `epsilon` of the crossing energy, using the
/// Lipschitz tail bound `C·((x_{-m} - u0) + (u1 - x_m)) < ε` plus a
/// direct evaluation of the windowed sum.
pub fn approximate_heteroclinic_window(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    epsilon: f64,
    opts: &MinimizeOptions,
) -> Result<(usize, Heteroclinic)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let lip = h.lipschitz_bound();
    let mut half = 8usize;
    loop {
        let het = heteroclinic_minimizer(h, pair, Direction::Up, half, opts)?;
        let x = |i: i64| het.config.value_at(i, pair);
        for m in 1..=(half as i64) {
            let tail = lip * ((x(-m) - pair.u0) + (pair.u1 - x(m)));
            if tail >= epsilon {
                continue;
            }
            let mut partial = 0.0;
            for i in -m..m {
                partial += h.eval(x(i), x(i + 1)) - pair.c;
            }
            if (partial - het.action).abs() < epsilon {
                return Ok((2 * m as usize, het));
            }
        }
        if half >= MAX_HET_WINDOW {
            return Err(Error::NonConvergence {
                what: format!(
                    "heteroclinic window growth: tail bound never reached epsilon = {epsilon}"
                ),
                residual: lip * ((x(-(half as i64)) - pair.u0) + (pair.u1 - x(half as i64))),
                iterations: half,
                best: het.config.values.into_boxed_slice(),
            });
        }
        half *= 2;
    }
}

/// Builds the explicit *test configuration* of a schedule on the
/// window `[lo, hi]`: exact dwell plateaus at the label values, and
/// each transition block replaced by its constrained block minimizer.
/// Its transition-block contributions to the renormalized action
/// vanish identically, making it both the canonical upper-bound
/// competitor and the solver seed.
pub fn test_configuration(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    schedule: &Schedule,
    lo: i64,
    hi: i64,
    opts: &MinimizeOptions,
    cache: Option<&BlockConstantCache>,
) -> Result<Configuration> {
    schedule.validate(pair)?;
    let k_last = *schedule.k.last().expect("nonempty schedule");
    if lo > 0 || hi < k_last {
        return Err(Error::Precondition(format!(
            "window [{lo}, {hi}] must cover the constrained range [0, {k_last}]"
        )));
    }
    let n = (hi - lo + 1) as usize;
    let mut values = vec![0.0; n];
    let idx = |site: i64| (site - lo) as usize;
    for site in lo..=hi {
        // Dwell label of the region containing this site.
        let label = if site <= 0 {
            schedule.labels[0]
        } else if site >= k_last {
            schedule.labels[schedule.len() - 1]
        } else {
            let b = (0..schedule.n_blocks())
                .find(|&b| site >= schedule.k[b] && site < schedule.k[b + 1])
                .expect("site inside constrained range");
            schedule.labels[b]
        };
        values[idx(site)] = pair.label_value(label);
    }
    for b in 0..schedule.n_blocks() {
        let direction = match schedule.block_kind(b) {
            BlockKind::Interior(_) => continue,
            BlockKind::Up => Direction::Up,
            BlockKind::Down => Direction::Down,
        };
        let (_, segment) = block_constant(
            h,
            pair,
            schedule.spacing(b),
            schedule.rho[b],
            schedule.rho[b + 1],
            direction,
            opts,
            cache,
        )?;
        for (j, &v) in segment.iter().enumerate() {
            values[idx(schedule.k[b] + j as i64)] = v;
        }
    }
    let first = schedule.labels[0].tail();
    let last = schedule.labels[schedule.len() - 1].tail();
    Configuration::new(lo, values, first, last)
}

/// Result of a constrained multi-transition minimization.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionResult {
    /// The schedule that was minimized.
    pub schedule: Schedule,
    /// The minimizer, tails constant at the end labels.
    pub config: Configuration,
    /// Renormalized-action report (total, per-block terms, residuals).
    pub report: ActionReport,
    /// Transitions realized with clearance `min ρ_i`.
    pub transitions: usize,
    /// True when every constrained site sits strictly inside its
    /// window.
    pub interior: bool,
    /// Constrained sites found on (or within `1e-12` of) their window
    /// boundary.
    pub boundary_contacts: Vec<i64>,
    /// Per-transition-block monotonicity in the designed direction:
    /// true when no step inside the block moves against the
    /// transition by more than solver noise (`1e-10`). The minimizer
    /// is strictly monotone mathematically, but deep-tail increments
    /// decay geometrically below what `f64` resolves, so strictness is
    /// not assertable site by site.
    pub block_monotone: Vec<bool>,
    /// When interiority fails: the least action change achievable by
    /// pushing one contacting site fully inside its window (negative
    /// values demonstrate the contact is not minimal).
    pub surgery_diagnostic: Option<f64>,
}

impl TransitionResult {
    /// Total renormalized action.
    pub fn action_value(&self) -> f64 {
        self.report.total
    }

    /// Max stationarity residual over the explicit window.
    pub fn max_residual(&self) -> f64 {
        self.report.max_residual
    }

    /// Plot-ready CSV: `site,value,constrained,label` per window site.
    pub fn to_csv(&self, pair: &NeighboringPair) -> String {
        let mut out = String::from("site,value,constrained,label\n");
        for i in self.config.lo..=self.config.hi() {
            let v = self.config.value_at(i, pair);
            match self.schedule.k.iter().position(|&k| k == i) {
                Some(j) => {
                    let label = match self.schedule.labels[j] {
                        Label::U0 => "u0",
                        Label::U1 => "u1",
                    };
                    out.push_str(&format!("{i},{v:.16e},true,{label}\n"));
                }
                None => out.push_str(&format!("{i},{v:.16e},false,\n")),
            }
        }
        out
    }
}

/// Slack inside the window radius below which a constrained site
/// counts as touching its boundary.
const CONTACT_TOL: f64 = 1e-12;

/// Minimizes the renormalized action over the schedule's constrained
/// configuration space, truncated to the window
/// `[-M, k_last + M]` with `M` the largest block spacing: box
/// constraints `[u⁰, u¹]` everywhere, window constraints at the
/// constrained sites, constant tails at the end labels.
///
/// Interiority (no window contact), realized transition count, and
/// per-block monotonicity are verified directly on the minimizer.
/// Boundary contact is reported, not an error; a surgery diagnostic
/// accompanies it.
pub fn minimize_transition(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    schedule: &Schedule,
    opts: &MinimizeOptions,
    cache: Option<&BlockConstantCache>,
) -> Result<TransitionResult> {
    schedule.validate(pair)?;
    let k_last = *schedule.k.last().expect("nonempty schedule");
    let pad = (0..schedule.n_blocks())
        .map(|b| schedule.spacing(b))
        .max()
        .expect("schedule has at least one block");
    let lo = -pad;
    let hi = k_last + pad;
    let seed_cfg = test_configuration(h, pair, schedule, lo, hi, opts, cache)?;

    let n = (hi - lo + 1) as usize;
    let mut bounds = vec![(pair.u0, pair.u1); n];
    for (i, (&ki, &r)) in schedule.k.iter().zip(&schedule.rho).enumerate() {
        let target = pair.label_value(schedule.labels[i]);
        let (wlo, whi) = ((target - r).max(pair.u0), (target + r).min(pair.u1));
        bounds[(ki - lo) as usize] = (wlo, whi);
    }
    let first = pair.label_value(schedule.labels[0]);
    let last = pair.label_value(schedule.labels[schedule.len() - 1]);
    let problem = ChainProblem {
        h,
        bounds,
        left_anchor: Some(first),
        right_anchor: Some(last),
    };
    let sol = chain::solve(&problem, Some(&seed_cfg.values), opts);
    if !sol.converged {
        return Err(Error::NonConvergence {
            what: format!(
                "transition minimization ({} blocks, window [{lo}, {hi}])",
                schedule.n_blocks()
            ),
            residual: sol.max_residual,
            iterations: sol.sweeps,
            best: sol.x.into_boxed_slice(),
        });
    }
    let config = Configuration::new(
        lo,
        sol.x,
        schedule.labels[0].tail(),
        schedule.labels[schedule.len() - 1].tail(),
    )?;
    let report = compute_j(h, pair, schedule, &config, opts, cache)?;

    let mut boundary_contacts = Vec::new();
    for (i, (&ki, &r)) in schedule.k.iter().zip(&schedule.rho).enumerate() {
        let target = pair.label_value(schedule.labels[i]);
        let x = config.value_at(ki, pair);
        if (x - target).abs() >= r - CONTACT_TOL {
            boundary_contacts.push(ki);
        }
    }
    let interior = boundary_contacts.is_empty();

    let clearance = schedule.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let transitions = count_transitions(&config, pair, clearance)?;

    let mut block_monotone = Vec::new();
    for b in 0..schedule.n_blocks() {
        let sign = match schedule.block_kind(b) {
            BlockKind::Interior(_) => continue,
            BlockKind::Up => 1.0,
            BlockKind::Down => -1.0,
        };
        let monotone = (schedule.k[b]..schedule.k[b + 1])
            .all(|i| sign * (config.value_at(i + 1, pair) - config.value_at(i, pair)) >= -1e-10);
        block_monotone.push(monotone);
    }

    // Surgery diagnostic: push each contacting site fully inside and
    // re-measure. A negative change shows the contact is not minimal.
    let surgery_diagnostic = if interior {
        None
    } else {
        let mut best = f64::INFINITY;
        for &ki in &boundary_contacts {
            let j = schedule
                .k
                .iter()
                .position(|&k| k == ki)
                .expect("contact is constrained");
            let mut pushed = config.clone();
            pushed.values[(ki - lo) as usize] = pair.label_value(schedule.labels[j]);
            let alt = compute_j(h, pair, schedule, &pushed, opts, cache)?;
            best = best.min(alt.total - report.total);
        }
        Some(best)
    };

    Ok(TransitionResult {
        schedule: schedule.clone(),
        config,
        report,
        transitions,
        interior,
        boundary_contacts,
        block_monotone,
        surgery_diagnostic,
    })
}

/// Counts transitions of a configuration: direction changes between
/// visits to the clearance-collars of the two states, scanning the
/// window with tails included.
pub fn count_transitions(
    config: &Configuration,
    pair: &NeighboringPair,
    clearance: f64,
) -> Result<usize> {
    if !(clearance > 0.0 && clearance < 0.5 * pair.width()) {
        return Err(Error::InvalidParameter(format!(
            "clearance must lie in (0, {}), got {clearance}",
            0.5 * pair.width()
        )));
    }
    let mut count = 0usize;
    let mut state: Option<Label> = None;
    for i in (config.lo - 1)..=(config.hi() + 1) {
        let x = config.value_at(i, pair);
        let here = if (x - pair.u0).abs() <= clearance {
            Some(Label::U0)
        } else if (x - pair.u1).abs() <= clearance {
            Some(Label::U1)
        } else {
            None
        };
        if let Some(l) = here {
            if let Some(prev) = state {
                if prev != l {
                    count += 1;
                }
            }
            state = Some(l);
        }
    }
    Ok(count)
}

/// A lifted rational configuration and its residuals.
#[derive(Debug, Clone, Serialize)]
pub struct Lift {
    /// The lifted configuration, periodic tails `(q·q_y, p_y + q_y·p)`.
    pub config: Configuration,
    /// Max stationarity residual over all window sites.
    pub max_residual: f64,
    /// Max residual over the seam sites `i·q` alone.
    pub seam_max_residual: f64,
}

/// Expands a configuration of the `(q, p)`-reduced generating function
/// into a configuration of `h`: seam sites `x_{iq} = y_i + i·p`, the
/// sites between filled with the reduction's minimal interior points.
///
/// The input must have periodic tails (the reduced system has no
/// reference pair to pin constant tails to). Stationarity of the lift
/// at the seams certifies that the reduced configuration was genuinely
/// stationary for the reduced function; a seam residual above `tol`
/// is reported as a construction error.
pub fn lift_rational(
    h: &dyn GeneratingFunction,
    q: u32,
    p: i64,
    y: &Configuration,
    tol: f64,
) -> Result<Lift> {
    y.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (qy_l, py_l) = match y.left_tail {
        Tail::Periodic(qt, pt) => (qt, pt),
        _ => {
            return Err(Error::InvalidParameter(
                "lift input needs periodic tails (constant tails reference a pair the \
                 reduced system does not have)"
                    .into(),
            ))
        }
    };
    let (qy_r, py_r) = match y.right_tail {
        Tail::Periodic(qt, pt) => (qt, pt),
        _ => {
            return Err(Error::InvalidParameter(
                "lift input needs periodic tails".into(),
            ))
        }
    };
    if y.len() < 2 {
        return Err(Error::InvalidParameter(
            "lift input needs at least two sites".into(),
        ));
    }
    let red = RationalReduction::new(h, q, p)?;
    let mut values = Vec::with_capacity((y.len() - 1) * q as usize + 1);
    for j in 0..(y.len() - 1) {
        let i = y.lo + j as i64;
        let winding = (i * p) as f64;
        let yi = y.values[j];
        let yn = y.values[j + 1];
        values.push(yi + winding);
        let (_, interior) = red.eval_with_interior(yi, yn);
        for v in interior {
            values.push(v + winding);
        }
    }
    let last_i = y.hi();
    values.push(*y.values.last().expect("nonempty") + (last_i * p) as f64);

    let lift_tail = |qt: u32, pt: i64| -> Result<Tail> {
        let qq = qt
            .checked_mul(q)
            .ok_or_else(|| Error::InvalidParameter("tail period overflows".into()))?;
        Ok(Tail::Periodic(qq, pt + qt as i64 * p))
    };
    let config = Configuration::new(
        y.lo * q as i64,
        values,
        lift_tail(qy_l, py_l)?,
        lift_tail(qy_r, py_r)?,
    )?;

    let x = |i: i64| -> f64 {
        config
            .value_at_with(i, None)
            .expect("periodic tails need no pair")
    };
    let mut max_residual = 0.0f64;
    let mut seam_max = 0.0f64;
    for i in config.lo..=config.hi() {
        let r = (h.d2(x(i - 1), x(i)) + h.d1(x(i), x(i + 1))).abs();
        max_residual = max_residual.max(r);
        if i.rem_euclid(q as i64) == config.lo.rem_euclid(q as i64) {
            seam_max = seam_max.max(r);
        }
    }
    if seam_max > tol {
        return Err(Error::Construction {
            inequality: "seam-stationarity".into(),
            detail: format!(
                "lifted seam residual {seam_max:.3e} exceeds {tol:.3e}: the reduced \
                 configuration was not stationary to lift tolerance"
            ),
        });
    }
    Ok(Lift {
        config,
        max_residual,
        seam_max_residual: seam_max,
    })
}

/// Results of minimizing several sub-schedules of one base schedule,
/// with pairwise separation measurements.
#[derive(Debug, Clone, Serialize)]
pub struct DistinctnessReport {
    /// One result per index sequence, in input order.
    pub results: Vec<TransitionResult>,
    /// Absolute anchor shift applied to each sub-schedule
    /// (`base.k[j_0]`).
    pub shifts: Vec<i64>,
    /// Separation required to call two minimizers distinct
    /// (`min ρ_i / 2` over the base schedule).
    pub clearance: f64,
    /// `(a, b, sup-difference over both schedules' constrained sites)`
    /// for every pair `a < b`.
    pub pairwise_sup: Vec<(usize, usize, f64)>,
    /// True when every pair separates by more than the clearance.
    pub all_distinct: bool,
}

/// Minimizes the renormalized action over the sub-schedules of
/// `base` selected by each strictly increasing index sequence, then
/// measures pairwise sup-differences at the union of constrained sites
/// (in absolute base coordinates).
///
/// The base schedule must have strictly increasing block spacings —
/// that is what makes distinct selections produce geometrically
/// distinct windows. Independent minimizations may run on `threads`
/// workers; results merge in input order, so the output is
/// thread-count independent.
pub fn multi_schedule_distinctness(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    base: &Schedule,
    sequences: &[Vec<usize>],
    opts: &MinimizeOptions,
    threads: usize,
    cache: Option<&BlockConstantCache>,
) -> Result<DistinctnessReport> {
    base.validate(pair)?;
    for b in 1..base.n_blocks() {
        if base.spacing(b) <= base.spacing(b - 1) {
            return Err(Error::Precondition(format!(
                "base schedule spacings must increase strictly, but spacing({b}) = {} after {}",
                base.spacing(b),
                base.spacing(b - 1)
            )));
        }
    }
    if sequences.is_empty() {
        return Err(Error::InvalidParameter("no index sequences given".into()));
    }
    let mut subs = Vec::with_capacity(sequences.len());
    let mut shifts = Vec::with_capacity(sequences.len());
    for (s, seq) in sequences.iter().enumerate() {
        if seq.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "sequence {s} needs at least two indices"
            )));
        }
        for w in seq.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(format!(
                    "sequence {s} must increase strictly"
                )));
            }
        }
        if *seq.last().expect("nonempty") >= base.len() {
            return Err(Error::InvalidParameter(format!(
                "sequence {s} indexes past the base schedule ({} sites)",
                base.len()
            )));
        }
        let shift = base.k[seq[0]];
        let k: Vec<i64> = seq.iter().map(|&j| base.k[j] - shift).collect();
        let rho: Vec<f64> = seq.iter().map(|&j| base.rho[j]).collect();
        let labels: Vec<Label> = seq.iter().map(|&j| base.labels[j]).collect();
        subs.push(Schedule::new(k, rho, labels, pair)?);
        shifts.push(shift);
    }

    let solve = |sub: &Schedule| minimize_transition(h, pair, sub, opts, cache);
    let results: Vec<TransitionResult> = if threads > 1 && subs.len() > 1 {
        let workers = threads.min(subs.len());
        let chunk = subs.len().div_ceil(workers);
        let mut slots: Vec<Option<Result<TransitionResult>>> = Vec::new();
        slots.resize_with(subs.len(), || None);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (ci, chunk_subs) in subs.chunks(chunk).enumerate() {
                handles.push((
                    ci,
                    scope.spawn(move || chunk_subs.iter().map(solve).collect::<Vec<_>>()),
                ));
            }
            for (ci, handle) in handles {
                for (j, r) in handle
                    .join()
                    .expect("distinctness worker")
                    .into_iter()
                    .enumerate()
                {
                    slots[ci * chunk + j] = Some(r);
                }
            }
        });
        slots
            .into_iter()
            .map(|r| r.expect("all slots filled"))
            .collect::<Result<Vec<_>>>()?
    } else {
        subs.iter().map(solve).collect::<Result<Vec<_>>>()?
    };

    let clearance = 0.5 * base.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut pairwise_sup = Vec::new();
    let mut all_distinct = true;
    for a in 0..results.len() {
        for b in (a + 1)..results.len() {
            let mut sites: Vec<i64> = results[a]
                .schedule
                .k
                .iter()
                .map(|&k| k + shifts[a])
                .chain(results[b].schedule.k.iter().map(|&k| k + shifts[b]))
                .collect();
            sites.sort_unstable();
            sites.dedup();
            let sup = sites
                .iter()
                .map(|&s| {
                    (results[a].config.value_at(s - shifts[a], pair)
                        - results[b].config.value_at(s - shifts[b], pair))
                    .abs()
                })
                .fold(0.0f64, f64::max);
            if sup <= clearance {
                all_distinct = false;
            }
            pairwise_sup.push((a, b, sup));
        }
    }

    Ok(DistinctnessReport {
        results,
        shifts,
        clearance,
        pairwise_sup,
        all_distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfn::FrenkelKontorova;
    use crate::minimize::{detect_gap, GapOptions};

    fn fk(c: f64, a: f64) -> FrenkelKontorova {
        FrenkelKontorova::new(c, a).unwrap()
    }

    fn strong_pair() -> (FrenkelKontorova, NeighboringPair) {
        let h = fk(1.0, 2.0);
        let pair = NeighboringPair::new(&h, 0.0, 1.0, 257).unwrap();
        (h, pair)
    }

    fn strong_gap(h: &FrenkelKontorova, pair: &NeighboringPair) -> GapReport {
        detect_gap(
            h,
            pair,
            33,
            12,
            &MinimizeOptions::default(),
            &GapOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn alternating_labels_pair_up() {
        let bp = ScheduleBlueprint::for_transitions(0.05, 2);
        assert_eq!(bp.n_blocks, 5);
        let labels = bp.labels().unwrap();
        assert_eq!(
            labels,
            vec![
                Label::U0,
                Label::U0,
                Label::U1,
                Label::U1,
                Label::U0,
                Label::U0
            ]
        );
    }

    #[test]
    fn blueprint_rejects_bad_inputs() {
        assert!(ScheduleBlueprint::alternating(0.0, 3).labels().is_err());
        assert!(ScheduleBlueprint::alternating(0.1, 0).labels().is_err());
        let short = ScheduleBlueprint {
            epsilon: 0.1,
            n_blocks: 3,
            pattern: Pattern::Explicit(vec![Label::U0, Label::U1]),
            max_block_spacing: 384,
            strictly_increasing: false,
        };
        assert!(short.labels().is_err());
    }

    #[test]
    fn count_transitions_matches_shape() {
        let pair = NeighboringPair::new_unchecked(0.0, 1.0, 0.0);
        let flat = Configuration::constant(0.0, Tail::U0, Tail::U0).unwrap();
        assert_eq!(count_transitions(&flat, &pair, 0.1).unwrap(), 0);
        let kink = Configuration::new(0, vec![0.01, 0.3, 0.7, 0.99], Tail::U0, Tail::U1).unwrap();
        assert_eq!(count_transitions(&kink, &pair, 0.05).unwrap(), 1);
        let bump = Configuration::new(
            0,
            vec![0.01, 0.5, 0.99, 0.99, 0.5, 0.01],
            Tail::U0,
            Tail::U0,
        )
        .unwrap();
        assert_eq!(count_transitions(&bump, &pair, 0.05).unwrap(), 2);
        assert!(count_transitions(&flat, &pair, 0.6).is_err());
    }

    #[test]
    fn schedule_construction_is_certifiable_end_to_end() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let opts = MinimizeOptions::default();
        let bp = ScheduleBlueprint::for_transitions(0.05, 1);
        let build = build_schedule(&h, &pair, &gap, &bp, &opts).unwrap();
        assert_eq!(build.schedule.n_blocks(), 3);
        assert_eq!(build.schedule.n_transitions(), 1);
        // Every re-verified inequality holds with positive margin.
        for (name, margin) in &build.invariant_worst {
            assert!(
                !margin.is_finite() || *margin > 0.0,
                "{name} margin = {margin}"
            );
        }
        // All radii below the cap and certified.
        for (&r, &m) in build.schedule.rho.iter().zip(&build.margins) {
            assert!(r > 0.0 && r < 0.05);
            assert!(m > 0.0);
        }
        // The dwell-spacing formula is astronomically larger than the
        // cap here; the cap must bind and be reported.
        assert!(!build.spacings_certified);
        let dwell_formula = build.formula_spacings[0];
        assert!(dwell_formula > build.schedule.spacing(0), "{dwell_formula}");
    }

    #[test]
    fn empty_gap_fails_the_precondition() {
        let h = fk(1.0, 0.01);
        let pair = NeighboringPair::new(&h, 0.0, 1.0, 257).unwrap();
        let gap = detect_gap(
            &h,
            &pair,
            17,
            8,
            &MinimizeOptions::default(),
            &GapOptions::default(),
        )
        .unwrap();
        let bp = ScheduleBlueprint::for_transitions(0.05, 1);
        match build_schedule(&h, &pair, &gap, &bp, &MinimizeOptions::default()) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("gap condition")),
            other => panic!("expected gap precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn oversized_epsilon_fails_construction() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let bp = ScheduleBlueprint::for_transitions(0.45, 1);
        match build_schedule(&h, &pair, &gap, &bp, &MinimizeOptions::default()) {
            Err(Error::Construction { inequality, .. }) => {
                assert!(inequality == "(p1)" || inequality == "(p2)", "{inequality}");
            }
            other => panic!("expected construction error, got {other:?}"),
        }
    }

    #[test]
    fn test_configuration_zeroes_transition_terms() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let opts = MinimizeOptions::default();
        let cache = BlockConstantCache::new();
        let build = build_schedule(
            &h,
            &pair,
            &gap,
            &ScheduleBlueprint::for_transitions(0.05, 1),
            &opts,
        )
        .unwrap();
        let schedule = &build.schedule;
        let k_last = *schedule.k.last().unwrap();
        let cfg =
            test_configuration(&h, &pair, schedule, -4, k_last + 4, &opts, Some(&cache)).unwrap();
        let report = compute_j(&h, &pair, schedule, &cfg, &opts, Some(&cache)).unwrap();
        use crate::action::BlockTermKind;
        for term in &report.per_block {
            if matches!(term.kind, BlockTermKind::Up | BlockTermKind::Down) {
                assert!(
                    term.value.abs() < 1e-12,
                    "transition term should vanish, got {}",
                    term.value
                );
            }
        }
        // The test configuration's action is the canonical upper bound
        // C·Σρ.
        let bound: f64 = h.lipschitz_bound() * schedule.rho.iter().sum::<f64>();
        assert!(report.total <= bound + 1e-9, "{} vs {bound}", report.total);
    }

    #[test]
    fn single_transition_schedule_is_interior_and_monotone() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let opts = MinimizeOptions::default();
        let cache = BlockConstantCache::new();
        let build = build_schedule(
            &h,
            &pair,
            &gap,
            &ScheduleBlueprint::for_transitions(0.05, 1),
            &opts,
        )
        .unwrap();
        let result = minimize_transition(&h, &pair, &build.schedule, &opts, Some(&cache)).unwrap();
        assert!(result.interior, "contacts: {:?}", result.boundary_contacts);
        assert_eq!(result.transitions, 1);
        assert!(result.block_monotone.iter().all(|&m| m));
        assert!(result.max_residual() < 1e-8, "{}", result.max_residual());
        assert!(result.surgery_diagnostic.is_none());
        // CSV shape: header + one row per window site, constrained
        // rows labeled.
        let csv = result.to_csv(&pair);
        assert_eq!(csv.lines().count(), result.config.len() + 1);
        assert!(csv.lines().any(|l| l.ends_with(",true,u0")));
    }

    #[test]
    fn explicit_heteroclinic_schedule_has_one_transition_block() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let opts = MinimizeOptions::default();
        let bp = ScheduleBlueprint::explicit(0.05, vec![Label::U0, Label::U1]);
        let build = build_schedule(&h, &pair, &gap, &bp, &opts).unwrap();
        assert_eq!(build.schedule.n_blocks(), 1);
        assert_eq!(build.schedule.n_transitions(), 1);
        let result = minimize_transition(&h, &pair, &build.schedule, &opts, None).unwrap();
        assert!(result.interior);
        assert_eq!(result.transitions, 1);
    }

    #[test]
    fn fiber_anchored_radii_break_interiority() {
        // Window radii placed exactly at a heteroclinic fiber value
        // with cramped spacings: the constrained minimizer is forced
        // onto its window boundary.
        let (h, pair) = strong_pair();
        let opts = MinimizeOptions::default();
        let het = heteroclinic_minimizer(&h, &pair, Direction::Up, 12, &opts).unwrap();
        let v1 = het.config.value_at(-10, &pair) - pair.u0;
        assert!(v1 > 0.0 && v1 < 0.05);
        let schedule = Schedule::new(
            vec![0, 2, 4, 6],
            vec![v1, v1, v1, v1],
            vec![Label::U0, Label::U0, Label::U1, Label::U1],
            &pair,
        )
        .unwrap();
        let result = minimize_transition(&h, &pair, &schedule, &opts, None).unwrap();
        assert!(!result.interior);
        assert!(!result.boundary_contacts.is_empty());
        assert!(result.surgery_diagnostic.is_some());
    }

    #[test]
    fn window_length_shrinks_with_looser_tolerance() {
        let h = fk(1.0, 1.0);
        let pair = NeighboringPair::new(&h, 0.0, 1.0, 257).unwrap();
        let opts = MinimizeOptions::default();
        let (_, _, c_star) = crate::minimize::crossing_energies(&h, &pair, 8, &opts).unwrap();
        let loose = approximate_heteroclinic_window(&h, &pair, c_star, &opts).unwrap();
        let tight = approximate_heteroclinic_window(&h, &pair, 1e-6, &opts).unwrap();
        assert!(loose.0 <= 8, "loose n0 = {}", loose.0);
        assert!(tight.0 >= loose.0);
        // Direct evaluation: the reported window's partial action is
        // within epsilon of the crossing energy.
        let het = &tight.1;
        let m = (tight.0 / 2) as i64;
        let mut partial = 0.0;
        for i in -m..m {
            partial += h.eval(
                het.config.value_at(i, &pair),
                het.config.value_at(i + 1, &pair),
            ) - pair.c;
        }
        assert!((partial - het.action).abs() < 1e-6);
    }

    #[test]
    fn lift_is_identity_for_trivial_reduction() {
        let h = fk(1.0, 1.0);
        let y = Configuration::new(
            0,
            vec![0.0, 0.0, 0.0],
            Tail::Periodic(1, 0),
            Tail::Periodic(1, 0),
        )
        .unwrap();
        let lift = lift_rational(&h, 1, 0, &y, 1e-8).unwrap();
        assert_eq!(lift.config.values, y.values);
        assert!(lift.max_residual < 1e-12);
    }

    #[test]
    fn lift_of_diagonal_minimizer_is_periodic_and_stationary() {
        let h = fk(1.0, 0.3);
        let red = RationalReduction::new(&h, 2, 1).unwrap();
        let (t, _, seam) = red.diagonal_argmin();
        assert!(seam < 1e-10);
        let y = Configuration::new(
            0,
            vec![t, t, t, t],
            Tail::Periodic(1, 0),
            Tail::Periodic(1, 0),
        )
        .unwrap();
        let lift = lift_rational(&h, 2, 1, &y, 1e-8).unwrap();
        assert!(lift.max_residual < 1e-8, "{}", lift.max_residual);
        // Rotation number of the lifted tails is p/q = 1/2.
        let (back, fwd) = lift.config.rotation_number();
        assert!((back - 0.5).abs() < 1e-12);
        assert!((fwd - 0.5).abs() < 1e-12);
        // Seam values are the reduced values plus winding.
        assert!(
            (lift
                .config
                .value_at(2, &NeighboringPair::new_unchecked(0.0, 1.0, 0.0))
                - (t + 1.0))
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn lift_rejects_non_stationary_input() {
        let h = fk(1.0, 0.3);
        let y = Configuration::new(
            0,
            vec![0.37, 0.37, 0.37],
            Tail::Periodic(1, 0),
            Tail::Periodic(1, 0),
        )
        .unwrap();
        match lift_rational(&h, 2, 1, &y, 1e-8) {
            Err(Error::Construction { inequality, .. }) => {
                assert_eq!(inequality, "seam-stationarity")
            }
            other => panic!("expected seam error, got {other:?}"),
        }
    }

    #[test]
    fn distinct_selections_separate_and_identical_ones_agree_bitwise() {
        let (h, pair) = strong_pair();
        let gap = strong_gap(&h, &pair);
        let opts = MinimizeOptions::default();
        let cache = BlockConstantCache::new();
        let mut bp = ScheduleBlueprint::for_transitions(0.05, 2);
        bp.max_block_spacing = 24;
        bp.strictly_increasing = true;
        let build = build_schedule(&h, &pair, &gap, &bp, &opts).unwrap();
        let base = &build.schedule;
        let sequences = vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3, 4, 5], vec![0, 1, 2, 3]];
        let report =
            multi_schedule_distinctness(&h, &pair, base, &sequences, &opts, 2, Some(&cache))
                .unwrap();
        assert_eq!(report.results.len(), 3);
        // Sequences 0 and 2 are identical: bit-identical minimizers.
        let (a, c) = (&report.results[0], &report.results[2]);
        assert_eq!(a.config.values.len(), c.config.values.len());
        for (x, y) in a.config.values.iter().zip(&c.config.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let sup_02 = report
            .pairwise_sup
            .iter()
            .find(|&&(x, y, _)| (x, y) == (0, 2))
            .unwrap()
            .2;
        assert_eq!(sup_02, 0.0);
        // The 1-transition and 2-transition selections genuinely
        // differ.
        let sup_01 = report
            .pairwise_sup
            .iter()
            .find(|&&(x, y, _)| (x, y) == (0, 1))
            .unwrap()
            .2;
        assert!(
            sup_01 > report.clearance,
            "{sup_01} vs {}",
            report.clearance
        );
        assert!(!report.all_distinct);
    }
}
