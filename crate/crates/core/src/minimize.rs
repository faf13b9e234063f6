//! Public minimization entry points: minimal segments between fixed
//! ends, heteroclinic connections between the two reference states,
//! the gap detector for constrained fiber minima, and the
//! loop-excursion lower bound `φ`.
//!
//! All of these drive the constrained chain solver of [`crate::chain`]
//! with problem-specific boxes, pins, and seeds, and report results in
//! normalized-action units relative to a [`NeighboringPair`].

use serde::Serialize;

use crate::action::{compute_i, NeighboringPair};
use crate::chain::{self, ChainProblem};
use crate::config::{Configuration, Tail};
use crate::error::Error;
use crate::genfn::GeneratingFunction;
use crate::numerics;
use crate::Result;

pub use crate::action::Direction;
pub use crate::chain::{Method, MinimizeOptions};

/// A minimal segment between two pinned endpoint values.
#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    /// Values including both pinned endpoints.
    pub values: Vec<f64>,
    /// Raw action `Σ h` over the segment's steps.
    pub action: f64,
    /// Max Karush–Kuhn–Tucker residual at the free sites.
    pub max_residual: f64,
}

/// Minimizes a segment of `n_interior` free sites between pinned
/// values `left` and `right`, all sites confined to `box_bounds`.
///
/// With `n_interior == 0` the segment is the single step
/// `(left, right)` and no solving happens.
pub fn minimize_segment(
    h: &dyn GeneratingFunction,
    left: f64,
    right: f64,
    n_interior: usize,
    box_bounds: (f64, f64),
    opts: &MinimizeOptions,
) -> Result<Segment> {
    let (blo, bhi) = box_bounds;
    if !(blo.is_finite() && bhi.is_finite() && blo <= bhi) {
        return Err(Error::InvalidParameter(format!(
            "segment box must be a finite interval, got [{blo}, {bhi}]"
        )));
    }
    for (name, v) in [("left", left), ("right", right)] {
        if !(blo..=bhi).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} endpoint {v} lies outside the box [{blo}, {bhi}]"
            )));
        }
    }
    if n_interior == 0 {
        return Ok(Segment {
            values: vec![left, right],
            action: h.eval(left, right),
            max_residual: 0.0,
        });
    }
    let n = n_interior + 2;
    let mut bounds = vec![(blo, bhi); n];
    bounds[0] = (left, left);
    bounds[n - 1] = (right, right);
    let problem = ChainProblem {
        h,
        bounds,
        left_anchor: None,
        right_anchor: None,
    };
    let sol = chain::solve(&problem, None, opts);
    if !sol.converged {
        return Err(Error::NonConvergence {
            what: format!("segment minimization ({n_interior} interior sites)"),
            residual: sol.max_residual,
            iterations: sol.sweeps,
            best: sol.x.into_boxed_slice(),
        });
    }
    Ok(Segment {
        action: sol.action,
        max_residual: sol.max_residual,
        values: sol.x,
    })
}

/// Fraction of diagonal samples allowed at the ground level before the
/// model is declared degenerate (a flat valley of ground states).
const FLAT_FRACTION: f64 = 0.10;

/// Locates a pair of neighboring periodic ground states by scanning
/// the diagonal action `t ↦ h(t, t)` over one period.
///
/// With a single ground minimizer `u` per period the pair is
/// `(u, u + 1)`; with several, the two smallest are returned. A flat
/// valley at the ground level (at least a tenth of all samples) means
/// the minimizers foliate the cylinder and no isolated pair exists:
/// that is reported as [`Error::DegenerateFoliation`].
pub fn find_neighboring_pair(
    h: &dyn GeneratingFunction,
    resolution: usize,
) -> Result<NeighboringPair> {
    let n = resolution.max(64);
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            h.eval(t, t)
        })
        .collect();
    let min_phi = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = phi.iter().filter(|&&v| v <= min_phi + 1e-8).count();
    if flat as f64 >= FLAT_FRACTION * n as f64 {
        return Err(Error::DegenerateFoliation(format!(
            "{flat} of {n} diagonal samples sit at the ground level"
        )));
    }
    // Refine every cyclic local minimum of the sampled diagonal.
    let step = 1.0 / n as f64;
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let prev = phi[(i + n - 1) % n];
        let next = phi[(i + 1) % n];
        if phi[i] <= prev && phi[i] <= next {
            let t0 = i as f64 * step;
            let (mut t, _) = numerics::golden_min(|t| h.eval(t, t), t0 - step, t0 + step, 1e-13);
            // Newton polish on the diagonal derivative.
            for _ in 0..40 {
                let s = h.d1(t, t) + h.d2(t, t);
                let sp = h.d11(t, t) + 2.0 * h.d12(t, t) + h.d22(t, t);
                if s.abs() < 1e-15 || sp.abs() < 1e-9 {
                    break;
                }
                let tn = t - s / sp;
                if (tn - t).abs() > step {
                    break;
                }
                t = tn;
            }
            candidates.push((t, h.eval(t, t)));
        }
    }
    let best = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut mins: Vec<f64> = candidates
        .into_iter()
        .filter(|&(_, v)| v <= best + 1e-8)
        .map(|(t, _)| t)
        .collect();
    mins.sort_by(|a, b| a.partial_cmp(b).expect("finite minimizers"));
    mins.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    match mins.len() {
        0 => Err(Error::DegenerateFoliation(
            "no diagonal minimizer found".into(),
        )),
        1 => NeighboringPair::new(h, mins[0], mins[0] + 1.0, n),
        _ => NeighboringPair::new(h, mins[0], mins[1], n),
    }
}

/// A heteroclinic (single-crossing) minimizer between the two states.
#[derive(Debug, Clone, Serialize)]
pub struct Heteroclinic {
    /// The minimizer on the window `[-N, N]`, tails constant at the
    /// departure and arrival states.
    pub config: Configuration,
    /// Normalized action `I` (the crossing energy).
    pub action: f64,
    /// Max stationarity residual over the free window sites.
    pub max_residual: f64,
    /// Whether consecutive differences are monotone in the crossing
    /// direction, up to a `1e-10` slack.
    pub monotone: bool,
    /// Whether every non-pinned window site is strictly between the
    /// two states.
    pub strictly_interior: bool,
}

/// Smooth crossing profile used to seed heteroclinic solves: value at
/// (real-valued) site `z` of an up-crossing centered at `center`.
fn kink_profile(pair: &NeighboringPair, direction: Direction, z: f64, center: f64) -> f64 {
    let s = 1.2;
    let sigma = 0.5 * (1.0 + ((z - center) * s).tanh());
    match direction {
        Direction::Up => pair.u0 + pair.width() * sigma,
        Direction::Down => pair.u1 - pair.width() * sigma,
    }
}

/// Minimizes the normalized action over single-crossing configurations
/// on the window `[-N, N]` (`N = half_window ≥ 4`): the ends are
/// pinned at the two states (which one first depends on `direction`),
/// all sites confined to `[u⁰, u¹]`, and the exterior handled exactly
/// by constant tails.
///
/// The solve is seeded with a centered smooth crossing rather than the
/// dynamic-programming phase, so the returned kink is the
/// bond-centered registration rather than an arbitrary translate.
pub fn heteroclinic_minimizer(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    direction: Direction,
    half_window: usize,
    opts: &MinimizeOptions,
) -> Result<Heteroclinic> {
    heteroclinic_pinned(h, pair, direction, half_window, None, opts)
}

/// As [`heteroclinic_minimizer`], with site 0 optionally pinned to a
/// prescribed value (the fiber constraint used by the gap detector).
pub fn heteroclinic_pinned(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    direction: Direction,
    half_window: usize,
    pin: Option<f64>,
    opts: &MinimizeOptions,
) -> Result<Heteroclinic> {
    if half_window < 4 {
        return Err(Error::InvalidParameter(format!(
            "half window must be at least 4, got {half_window}"
        )));
    }
    let n_half = half_window as i64;
    let n = 2 * half_window + 1;
    let (first, last) = match direction {
        Direction::Up => (pair.u0, pair.u1),
        Direction::Down => (pair.u1, pair.u0),
    };
    let mut bounds = vec![(pair.u0, pair.u1); n];
    bounds[0] = (first, first);
    bounds[n - 1] = (last, last);
    // Center the seed so its value at site 0 matches the pin (or sits
    // at the mid-crossing for the free problem).
    let center = match pin {
        None => -0.5,
        Some(t) => {
            let tau =
                (((t - pair.u0) / pair.width()).clamp(1e-9, 1.0 - 1e-9) * 2.0 - 1.0).atanh() / 1.2;
            match direction {
                Direction::Up => -tau,
                Direction::Down => tau,
            }
        }
    };
    if let Some(t) = pin {
        if !(pair.u0..=pair.u1).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "pinned value {t} outside [{}, {}]",
                pair.u0, pair.u1
            )));
        }
        bounds[half_window] = (t, t);
    }
    let seed: Vec<f64> = (0..n)
        .map(|j| kink_profile(pair, direction, j as i64 as f64 - n_half as f64, center))
        .collect();
    let problem = ChainProblem {
        h,
        bounds,
        left_anchor: Some(first),
        right_anchor: Some(last),
    };
    let sol = chain::solve(&problem, Some(&seed), opts);
    if !sol.converged {
        return Err(Error::NonConvergence {
            what: format!("heteroclinic minimization ({direction:?}, N = {half_window})"),
            residual: sol.max_residual,
            iterations: sol.sweeps,
            best: sol.x.into_boxed_slice(),
        });
    }
    let (left_tail, right_tail) = match direction {
        Direction::Up => (Tail::U0, Tail::U1),
        Direction::Down => (Tail::U1, Tail::U0),
    };
    let config = Configuration::new(-n_half, sol.x, left_tail, right_tail)?;
    let action = compute_i(h, pair, &config)?
        .finite()
        .expect("constant tails give a finite normalized action");
    // Monotonicity in the crossing direction, window plus joining steps.
    let sign = match direction {
        Direction::Up => 1.0,
        Direction::Down => -1.0,
    };
    let mut monotone = true;
    for i in (-n_half - 1)..=n_half {
        let d = config.value_at(i + 1, pair) - config.value_at(i, pair);
        if sign * d < -1e-10 {
            monotone = false;
            break;
        }
    }
    let strictly_interior = config
        .values
        .iter()
        .skip(1)
        .take(n - 2)
        .all(|&v| v > pair.u0 && v < pair.u1);
    Ok(Heteroclinic {
        action,
        max_residual: sol.max_residual,
        monotone,
        strictly_interior,
        config,
    })
}

/// Crossing energies `(c₀, c₁, c* = c₀ + c₁)` of the up and down
/// heteroclinic minimizers at the given window size.
pub fn crossing_energies(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    half_window: usize,
    opts: &MinimizeOptions,
) -> Result<(f64, f64, f64)> {
    let up = heteroclinic_minimizer(h, pair, Direction::Up, half_window, opts)?;
    let down = heteroclinic_minimizer(h, pair, Direction::Down, half_window, opts)?;
    Ok((up.action, down.action, up.action + down.action))
}

/// Two-sided estimate of the loop-excursion cost `φ(δ)`: the least
/// normalized action of a closed loop whose base point keeps distance
/// `δ` from both reference states.
#[derive(Debug, Clone, Serialize)]
pub struct PhiEstimate {
    /// Distance from the reference states.
    pub delta: f64,
    /// Longest loop length considered by the upper bound.
    pub n_max: usize,
    /// Least loop action found (an upper bound for `φ(δ)`).
    pub upper: f64,
    /// Single-step lower bound `g(δ) = min { h(ξ, η) - c }` over
    /// `ξ` δ-far from both states.
    pub lower: f64,
    /// Validity notes for both bounds.
    pub caveat: String,
}

/// Estimates `φ(δ)` for `0 ≤ δ < width/2`.
///
/// Upper bound: minimize over loops `x_0 = x_n = v` of length
/// `n ≤ n_max`, with the base point `v` scanned across
/// `[u⁰+δ, u¹-δ]` and refined around the best cell (by cyclic
/// symmetry the base point of a minimal loop may be taken as the
/// pinned site). Lower bound: the cheapest single step leaving the
/// δ-interior, valid because every normalized step cost is
/// nonnegative for a symmetric generating function (spot-checked on a
/// grid, with a caveat if violated).
pub fn estimate_phi(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    delta: f64,
    n_max: usize,
    opts: &MinimizeOptions,
) -> Result<PhiEstimate> {
    let w = pair.width();
    if !(delta.is_finite() && (0.0..=w / 2.0).contains(&delta)) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in [0, {}], got {delta}",
            w / 2.0
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let (vlo, vhi) = (pair.u0 + delta, pair.u1 - delta);
    // Loops may excurse beyond the gap; give them one width of slack.
    let loop_box = (pair.u0 - w, pair.u1 + w);

    let loop_min = |n: usize, v: f64| -> f64 {
        if n == 1 {
            return h.eval(v, v) - pair.c;
        }
        let mut bounds = vec![loop_box; n + 1];
        bounds[0] = (v, v);
        bounds[n] = (v, v);
        let problem = ChainProblem {
            h,
            bounds,
            left_anchor: None,
            right_anchor: None,
        };
        let sol = chain::solve(&problem, None, opts);
        sol.action - n as f64 * pair.c
    };

    let grid = 65;
    let mut upper = f64::INFINITY;
    let mut best: Option<(usize, f64)> = None;
    for n in 1..=n_max {
        for k in 0..grid {
            let v = vlo + (vhi - vlo) * k as f64 / (grid - 1) as f64;
            let a = loop_min(n, v);
            if a < upper {
                upper = a;
                best = Some((n, v));
            }
        }
    }
    if let Some((n_star, v_star)) = best {
        let cell = (vhi - vlo) / (grid - 1) as f64;
        let (v_ref, a_ref) = numerics::golden_min(
            |v| loop_min(n_star, v),
            (v_star - cell).max(vlo),
            (v_star + cell).min(vhi),
            1e-8,
        );
        let _ = v_ref;
        if a_ref < upper {
            upper = a_ref;
        }
    }

    // Lower bound: 2-D grid over (ξ, η) with ξ δ-far, refined by
    // alternating golden sections in each coordinate.
    let a2 = |xi: f64, eta: f64| h.eval(xi, eta) - pair.c;
    let g2 = 201;
    let mut lower = f64::INFINITY;
    let mut arg = (vlo, pair.u0);
    for i in 0..g2 {
        let xi = vlo + (vhi - vlo) * i as f64 / (g2 - 1) as f64;
        for j in 0..g2 {
            let eta = loop_box.0 + (loop_box.1 - loop_box.0) * j as f64 / (g2 - 1) as f64;
            let v = a2(xi, eta);
            if v < lower {
                lower = v;
                arg = (xi, eta);
            }
        }
    }
    let (mut xi, mut eta) = arg;
    for _ in 0..4 {
        let cell_x = (vhi - vlo) / (g2 - 1) as f64;
        let cell_y = (loop_box.1 - loop_box.0) / (g2 - 1) as f64;
        let (nx, _) = numerics::golden_min(
            |t| a2(t, eta),
            (xi - cell_x).max(vlo),
            (xi + cell_x).min(vhi),
            1e-12,
        );
        xi = nx;
        let (ny, _) = numerics::golden_min(
            |t| a2(xi, t),
            (eta - cell_y).max(loop_box.0),
            (eta + cell_y).min(loop_box.1),
            1e-12,
        );
        eta = ny;
    }
    lower = lower.min(a2(xi, eta));

    // The single-step argument needs h - c ≥ 0 everywhere; spot-check.
    let mut negative = 0.0f64;
    for i in 0..101 {
        for j in 0..101 {
            let x = loop_box.0 + (loop_box.1 - loop_box.0) * i as f64 / 100.0;
            let y = loop_box.0 + (loop_box.1 - loop_box.0) * j as f64 / 100.0;
            negative = negative.min(a2(x, y));
        }
    }
    let caveat = if negative < -1e-9 {
        format!(
            "upper bound: cheapest pinned loop with at most {n_max} steps; \
             LOWER BOUND INVALID: h - c reaches {negative:.3e} < 0 on the grid"
        )
    } else {
        format!(
            "upper bound: cheapest pinned loop with at most {n_max} steps; \
             lower bound: cheapest single step leaving the delta-interior, \
             valid since h - c >= 0 (grid-checked)"
        )
    };
    Ok(PhiEstimate {
        delta,
        n_max,
        upper,
        lower,
        caveat,
    })
}

/// Options for the gap detector.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapOptions {
    /// Absolute floor for the certification threshold.
    pub margin_floor: f64,
    /// Relative factor: threshold is
    /// `max(margin_floor, margin_rel · max margin)` per family.
    pub margin_rel: f64,
    /// Levels of dyadic endpoint refinement: extra samples at offsets
    /// `width · 2^{-3}, …, width · 2^{-(2 + levels)}` from each state.
    pub refine_levels: usize,
    /// Worker threads for the independent fiber solves (results are
    /// merged in index order, so the output is thread-count
    /// independent).
    pub threads: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            margin_floor: 1e-5,
            margin_rel: 1e-4,
            refine_levels: 12,
            threads: 1,
        }
    }
}

/// One fiber sample of the gap scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FiberSample {
    /// The pinned value at site 0.
    pub x0: f64,
    /// Constrained minimum of the up family at this pin.
    pub m_up: f64,
    /// Constrained minimum of the down family at this pin.
    pub m_down: f64,
}

/// A maximal run of samples whose margin clears the threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapInterval {
    /// First certified sample.
    pub lo: f64,
    /// Last certified sample.
    pub hi: f64,
    /// Least margin over the run.
    pub margin: f64,
}

/// Result of the gap scan: where the heteroclinic fibers leave
/// uncovered intervals, and with how much energy margin.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// Up-crossing energy (unconstrained).
    pub c0: f64,
    /// Down-crossing energy (unconstrained).
    pub c1: f64,
    /// All fiber samples, ascending in `x0`.
    pub samples: Vec<FiberSample>,
    /// Certified gap intervals of the up family.
    pub intervals_up: Vec<GapInterval>,
    /// Certified gap intervals of the down family.
    pub intervals_down: Vec<GapInterval>,
    /// Largest certified up-family margin (0 when none).
    pub e0: f64,
    /// Largest certified down-family margin (0 when none).
    pub e1: f64,
    /// Threshold used for the up family.
    pub threshold_up: f64,
    /// Threshold used for the down family.
    pub threshold_down: f64,
    /// Effective half-window after tail-adequacy growth.
    pub half_window: usize,
}

impl GapReport {
    /// True when both families certify at least one interval.
    pub fn has_gap(&self) -> bool {
        !self.intervals_up.is_empty() && !self.intervals_down.is_empty()
    }

    /// Two-column CSV of the up-family scan, `x0, constrained_min`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0,constrained_min\n");
        for s in &self.samples {
            out.push_str(&format!("{:.16e},{:.16e}\n", s.x0, s.m_up));
        }
        out
    }

    /// Certified offsets (distance from the labeled state) of one
    /// family, paired with their margins, ascending by offset.
    pub fn certified_offsets(&self, direction: Direction) -> Vec<(f64, f64)> {
        let (threshold, pick): (f64, fn(&FiberSample) -> f64) = match direction {
            Direction::Up => (self.threshold_up, |s| s.m_up),
            Direction::Down => (self.threshold_down, |s| s.m_down),
        };
        let c_fam = match direction {
            Direction::Up => self.c0,
            Direction::Down => self.c1,
        };
        let mut out: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter_map(|s| {
                let margin = pick(s) - c_fam;
                (margin >= threshold).then_some((s.x0, margin))
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite offsets"));
        out
    }
}

/// Cap on the tail-adequacy growth of the gap scan's half-window.
const MAX_GAP_WINDOW: usize = 256;

/// Scans constrained fiber minima of both heteroclinic families over
/// pinned values of site 0.
///
/// Sample positions are `fiber_samples` uniform interior points plus
/// dyadically refined offsets near each state. For each sample the
/// constrained minimum is a full heteroclinic solve with site 0 pinned;
/// the margin is measured against the corresponding unconstrained
/// crossing energy. Maximal sample runs whose margin clears the
/// family threshold become certified gap intervals.
pub fn detect_gap(
    h: &dyn GeneratingFunction,
    pair: &NeighboringPair,
    fiber_samples: usize,
    half_window: usize,
    opts: &MinimizeOptions,
    gap_opts: &GapOptions,
) -> Result<GapReport> {
    if fiber_samples < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 fiber samples".into(),
        ));
    }
    // The requested half-window is a minimum. Certification compares
    // margins against the threshold floor, so the window must be long
    // enough that end-truncation effects stay far below that floor —
    // otherwise wide kinks (weak pinning) fake margins out of kink
    // compression energy. The window ends themselves are pinned
    // exactly, so probe one site inside each end and double until the
    // Lipschitz bound of that approach gap is below a tenth of the
    // floor.
    let lip = h.lipschitz_bound();
    let mut half_window = half_window.max(4);
    let mut up = heteroclinic_minimizer(h, pair, Direction::Up, half_window, opts)?;
    loop {
        let n = half_window as i64;
        let tail = (up.config.value_at(-n + 1, pair) - pair.u0)
            + (pair.u1 - up.config.value_at(n - 1, pair));
        if lip * tail < 0.1 * gap_opts.margin_floor || half_window >= MAX_GAP_WINDOW {
            break;
        }
        half_window *= 2;
        up = heteroclinic_minimizer(h, pair, Direction::Up, half_window, opts)?;
    }
    let down = heteroclinic_minimizer(h, pair, Direction::Down, half_window, opts)?;
    let (c0, c1) = (up.action, down.action);
    let w = pair.width();

    let mut positions: Vec<f64> = (1..=fiber_samples)
        .map(|j| pair.u0 + w * j as f64 / (fiber_samples + 1) as f64)
        .collect();
    for level in 0..gap_opts.refine_levels {
        let off = w * f64::powi(0.5, level as i32 + 3);
        positions.push(pair.u0 + off);
        positions.push(pair.u1 - off);
    }
    positions.retain(|&t| t > pair.u0 + 1e-9 && t < pair.u1 - 1e-9);
    positions.sort_by(|a, b| a.partial_cmp(b).expect("finite positions"));
    positions.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    // Independent pinned solves; parallel chunks merge in index order.
    let solve_at = |t: f64| -> Result<(f64, f64)> {
        let m_up = heteroclinic_pinned(h, pair, Direction::Up, half_window, Some(t), opts)?;
        let m_down = heteroclinic_pinned(h, pair, Direction::Down, half_window, Some(t), opts)?;
        Ok((m_up.action, m_down.action))
    };
    let results: Vec<Result<(f64, f64)>> = if gap_opts.threads > 1 {
        let threads = gap_opts.threads.min(positions.len().max(1));
        let chunk = positions.len().div_ceil(threads);
        let mut out: Vec<Option<Result<(f64, f64)>>> = Vec::new();
        out.resize_with(positions.len(), || None);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (ci, chunk_positions) in positions.chunks(chunk).enumerate() {
                handles.push((
                    ci,
                    scope.spawn(move || {
                        chunk_positions
                            .iter()
                            .map(|&t| solve_at(t))
                            .collect::<Vec<_>>()
                    }),
                ));
            }
            for (ci, handle) in handles {
                for (j, r) in handle.join().expect("fiber worker").into_iter().enumerate() {
                    out[ci * chunk + j] = Some(r);
                }
            }
        });
        out.into_iter()
            .map(|r| r.expect("all chunks filled"))
            .collect()
    } else {
        positions.iter().map(|&t| solve_at(t)).collect()
    };

    let mut samples = Vec::with_capacity(positions.len());
    for (t, r) in positions.iter().zip(results) {
        let (m_up, m_down) = r?;
        samples.push(FiberSample {
            x0: *t,
            m_up,
            m_down,
        });
    }

    let build = |margins: Vec<f64>, threshold: f64| -> (Vec<GapInterval>, f64) {
        let mut intervals = Vec::new();
        let mut run_start: Option<usize> = None;
        let mut e: f64 = 0.0;
        for i in 0..=margins.len() {
            let in_run = i < margins.len() && margins[i] >= threshold;
            match (run_start, in_run) {
                (None, true) => run_start = Some(i),
                (Some(s), false) => {
                    let run_margin = margins[s..i].iter().cloned().fold(f64::INFINITY, f64::min);
                    intervals.push(GapInterval {
                        lo: samples[s].x0,
                        hi: samples[i - 1].x0,
                        margin: run_margin,
                    });
                    e = e.max(run_margin);
                    run_start = None;
                }
                _ => {}
            }
        }
        (intervals, e)
    };

    let margins_up: Vec<f64> = samples.iter().map(|s| s.m_up - c0).collect();
    let margins_down: Vec<f64> = samples.iter().map(|s| s.m_down - c1).collect();
    let max_up = margins_up.iter().cloned().fold(0.0f64, f64::max);
    let max_down = margins_down.iter().cloned().fold(0.0f64, f64::max);
    let threshold_up = gap_opts.margin_floor.max(gap_opts.margin_rel * max_up);
    let threshold_down = gap_opts.margin_floor.max(gap_opts.margin_rel * max_down);
    let (intervals_up, e0) = build(margins_up, threshold_up);
    let (intervals_down, e1) = build(margins_down, threshold_down);

    Ok(GapReport {
        c0,
        c1,
        samples,
        intervals_up,
        intervals_down,
        e0,
        e1,
        threshold_up,
        threshold_down,
        half_window,
    })
}
