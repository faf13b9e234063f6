//! End-to-end acceptance suite for the variational pipeline.
//!
//! Thirteen criteria, each a separate test that prints exactly one
//! verdict line (`[acceptance] criterion NN (<name>): PASS/FAIL — …`)
//! before asserting. Every tolerance is pinned as a named constant
//! next to the check it guards. The suite exercises only the public
//! API, with independent oracles (exhaustive grids, finite
//! differences, closed-form bounds) wherever the library's own output
//! could otherwise mark its own homework.

// As in the library: `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twistvar::{
    build_schedule, check_hypotheses, default_strip, detect_gap, estimate_phi,
    heteroclinic_minimizer, iterate_map, lift_rational, minimize_segment, minimize_transition,
    multi_schedule_distinctness, normalized_term, segment_action, twist_map_step_auto,
    BlockConstantCache, BlockTermKind, Configuration, Direction, FrenkelKontorova, GapOptions,
    GapReport, GeneratingFunction, Label, MinimizeOptions, NeighboringPair, RationalReduction,
    Schedule, ScheduleBlueprint, Tail, TransitionResult,
};

fn fk(coupling: f64, amplitude: f64) -> FrenkelKontorova {
    FrenkelKontorova::new(coupling, amplitude).expect("valid model parameters")
}

fn unit_pair(h: &FrenkelKontorova) -> NeighboringPair {
    NeighboringPair::new(h, 0.0, 1.0, 257).expect("unit ground pair")
}

/// Prints the criterion's single verdict line, then asserts.
fn verdict(number: u32, name: &str, failures: &[String], detail: &str) {
    let ok = failures.is_empty();
    let note = if ok {
        detail.to_string()
    } else {
        failures.join("; ")
    };
    println!(
        "[acceptance] criterion {number:02} ({name}): {} — {note}",
        if ok { "PASS" } else { "FAIL" },
    );
    assert!(ok, "criterion {number:02} ({name}): {note}");
}

/// Visits every `n`-tuple over `0..base` in odometer order.
fn for_each_tuple(n: usize, base: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; n];
    loop {
        f(&idx);
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < base {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == n {
                return;
            }
        }
    }
}

#[test]
fn criterion_01_structural_hypotheses_hold() {
    const TIME_BUDGET: Duration = Duration::from_secs(1);
    let h = fk(1.0, 1.0);
    let t0 = Instant::now();
    let report = check_hypotheses(&h, default_strip(), 21);
    let elapsed = t0.elapsed();

    let mut failures = Vec::new();
    for c in &report.checks {
        if !c.passed {
            failures.push(format!(
                "{} violated at {:?} (worst margin {:.3e})",
                c.name, c.witness, c.worst_margin
            ));
        }
    }
    if elapsed > TIME_BUDGET {
        failures.push(format!("took {elapsed:?}, budget {TIME_BUDGET:?}"));
    }
    let margins = report
        .checks
        .iter()
        .map(|c| format!("{} {:+.2e}", c.name, c.worst_margin))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        1,
        "structural hypotheses on the built-in model",
        &failures,
        &format!("21×21 strip grid clean in {elapsed:?}; margins: {margins}"),
    );
}

#[test]
fn criterion_02_segment_minimizer_matches_grid_oracle() {
    /// One cell of the oracle's 41-point grid.
    const ARGMIN_TOL: f64 = 0.025;
    const ACTION_TOL: f64 = 1e-3;
    const TIME_BUDGET: Duration = Duration::from_secs(30);
    const GRID_N: usize = 41;
    const COUPLING: f64 = 1.0;
    const AMPLITUDE: f64 = 0.5;

    let h = fk(COUPLING, AMPLITUDE);
    // The exhaustive oracle only samples the continuum: its minimum
    // overshoots the true one by at most ½·Λ·(cell/2)² per coordinate,
    // where Λ = 2C + λ(2π)² bounds the per-site curvature of the chain
    // action. The solver is allowed the full tolerance above the
    // oracle and tolerance-plus-bias below it.
    let cell = 1.0 / (GRID_N - 1) as f64;
    let curvature = 2.0 * COUPLING + AMPLITUDE * (2.0 * std::f64::consts::PI).powi(2);
    let bias_per_site = 0.5 * curvature * (cell / 2.0) * (cell / 2.0);
    // Seed the solver on a finer net than the oracle so it can never
    // be trapped in a worse basin than the grid search finds.
    let opts = MinimizeOptions {
        grid_seed_points: 65,
        ..MinimizeOptions::default()
    };
    let grid: Vec<f64> = (0..GRID_N)
        .map(|k| k as f64 / (GRID_N - 1) as f64)
        .collect();
    let ends: Vec<f64> = (0..5).map(|k| k as f64 / 4.0).collect();

    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut worst_arg = 0.0f64;
    let mut worst_act = 0.0f64;
    let mut cases = 0usize;

    for &left in &ends {
        for &right in &ends {
            for n in 1..=3usize {
                cases += 1;
                let mut xs = vec![0.0f64; n + 2];
                xs[0] = left;
                xs[n + 1] = right;

                let mut oracle_min = f64::INFINITY;
                for_each_tuple(n, GRID_N, |idx| {
                    for (slot, &gi) in xs[1..=n].iter_mut().zip(idx) {
                        *slot = grid[gi];
                    }
                    let a = segment_action(&h, &xs);
                    if a < oracle_min {
                        oracle_min = a;
                    }
                });

                let seg =
                    minimize_segment(&h, left, right, n, (0.0, 1.0), &opts).expect("segment solve");
                let sol = &seg.values[1..=n];

                // Distance to the near-minimal grid set, not to a single
                // argmin: symmetric endpoints tie two basins exactly, and
                // either is a correct answer.
                let mut best_dist = f64::INFINITY;
                for_each_tuple(n, GRID_N, |idx| {
                    for (slot, &gi) in xs[1..=n].iter_mut().zip(idx) {
                        *slot = grid[gi];
                    }
                    let a = segment_action(&h, &xs);
                    if a <= oracle_min + ACTION_TOL {
                        let d = idx
                            .iter()
                            .zip(sol)
                            .map(|(&gi, &x)| (grid[gi] - x).abs())
                            .fold(0.0f64, f64::max);
                        if d < best_dist {
                            best_dist = d;
                        }
                    }
                });

                let above = seg.action - oracle_min;
                let below = oracle_min - seg.action;
                worst_arg = worst_arg.max(best_dist);
                worst_act = worst_act.max(above.max(below - n as f64 * bias_per_site));
                if best_dist > ARGMIN_TOL {
                    failures.push(format!(
                        "({left},{right}) n={n}: argmin off by {best_dist:.4}"
                    ));
                }
                if above > ACTION_TOL {
                    failures.push(format!(
                        "({left},{right}) n={n}: action {above:.2e} above the oracle"
                    ));
                }
                if below > n as f64 * bias_per_site + ACTION_TOL {
                    failures.push(format!(
                        "({left},{right}) n={n}: action {below:.2e} below the oracle, \
                         past the sampling bias {:.2e}",
                        n as f64 * bias_per_site
                    ));
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    if elapsed > TIME_BUDGET {
        failures.push(format!("took {elapsed:?}, budget {TIME_BUDGET:?}"));
    }
    verdict(
        2,
        "segment minimizer against the exhaustive grid oracle",
        &failures,
        &format!(
            "{cases} cases; worst argmin gap {worst_arg:.2e} (tol {ARGMIN_TOL}), \
             worst bias-adjusted action gap {worst_act:.2e} (tol {ACTION_TOL}, \
             bias {bias_per_site:.2e}/site); {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_03_map_preserves_area() {
    const DET_TOL: f64 = 1e-6;
    /// Finite-difference step; the determinant is extrapolated from
    /// the pair (STEP, STEP/2), cancelling the leading O(s²) error.
    const STEP: f64 = 1e-4;
    const POINTS: usize = 100;

    let h = fk(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let map = |x: f64, y: f64| twist_map_step_auto(&h, x, y).expect("twist step");
    let det_at = |x: f64, y: f64, s: f64| {
        let (xr, yr) = map(x + s, y);
        let (xl, yl) = map(x - s, y);
        let (xu, yu) = map(x, y + s);
        let (xd, yd) = map(x, y - s);
        let a = (xr - xl) / (2.0 * s);
        let b = (xu - xd) / (2.0 * s);
        let c = (yr - yl) / (2.0 * s);
        let d = (yu - yd) / (2.0 * s);
        a * d - b * c
    };

    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let x = rng.gen_range(0.0..1.0);
        let y = rng.gen_range(-1.0..1.0);
        let det = (4.0 * det_at(x, y, STEP / 2.0) - det_at(x, y, STEP)) / 3.0;
        let err = (det - 1.0).abs();
        worst = worst.max(err);
        if err > DET_TOL {
            failures.push(format!("det = {det:.9} at ({x:.4}, {y:.4})"));
        }
    }
    verdict(
        3,
        "unit Jacobian of the forward map",
        &failures,
        &format!("{POINTS} random points, worst |det − 1| = {worst:.2e} (tol {DET_TOL:.0e})"),
    );
}

#[test]
fn criterion_04_orbits_are_stationary_configurations() {
    const RES_TOL: f64 = 1e-8;
    const STEPS: usize = 1000;

    let h = fk(1.0, 1.0);
    let orbit = iterate_map(&h, 0.2, 0.7, STEPS).expect("map orbit");
    let mut failures = Vec::new();
    if orbit.points.len() != STEPS + 1 {
        failures.push(format!(
            "orbit length {} ≠ {}",
            orbit.points.len(),
            STEPS + 1
        ));
    }
    if orbit.max_residual > RES_TOL {
        failures.push(format!(
            "stationarity residual {:.2e} exceeds {RES_TOL:.0e}",
            orbit.max_residual
        ));
    }
    verdict(
        4,
        "map orbits solve the discrete Euler–Lagrange equations",
        &failures,
        &format!(
            "{STEPS}-step orbit, max residual {:.2e} (tol {RES_TOL:.0e})",
            orbit.max_residual
        ),
    );
}

#[test]
fn criterion_05_heteroclinic_minimizers() {
    /// Window whose seed stays strictly interior in f64, so strict
    /// sitewise monotonicity is representable end to end.
    const STRICT_WINDOW: usize = 8;
    const CAUCHY_WINDOW: usize = 200;
    const ENERGY_SPLIT_TOL: f64 = 1e-8;
    const CSTAR_FLOOR: f64 = 1e-6;
    const CAUCHY_TOL: f64 = 1e-6;

    let h = fk(1.0, 1.0);
    let pair = unit_pair(&h);
    let opts = MinimizeOptions::default();
    let mut failures = Vec::new();

    let up = heteroclinic_minimizer(&h, &pair, Direction::Up, STRICT_WINDOW, &opts)
        .expect("up crossing");
    let down = heteroclinic_minimizer(&h, &pair, Direction::Down, STRICT_WINDOW, &opts)
        .expect("down crossing");
    for (name, het, sign) in [("up", &up, 1.0), ("down", &down, -1.0)] {
        if !het.monotone {
            failures.push(format!("{name} crossing not monotone"));
        }
        if !het.strictly_interior {
            failures.push(format!("{name} crossing touches a state inside the window"));
        }
        let cfg = &het.config;
        for i in cfg.lo..cfg.hi() {
            let step = sign * (cfg.value_at(i + 1, &pair) - cfg.value_at(i, &pair));
            if step <= 0.0 {
                failures.push(format!("{name} crossing not strictly monotone at site {i}"));
                break;
            }
        }
    }

    let up_n =
        heteroclinic_minimizer(&h, &pair, Direction::Up, CAUCHY_WINDOW, &opts).expect("up at N");
    let up_2n = heteroclinic_minimizer(&h, &pair, Direction::Up, 2 * CAUCHY_WINDOW, &opts)
        .expect("up at 2N");
    let down_n = heteroclinic_minimizer(&h, &pair, Direction::Down, CAUCHY_WINDOW, &opts)
        .expect("down at N");
    let down_2n = heteroclinic_minimizer(&h, &pair, Direction::Down, 2 * CAUCHY_WINDOW, &opts)
        .expect("down at 2N");

    let c0 = up_2n.action;
    let c1 = down_2n.action;
    let c_star = c0 + c1;
    if (c0 - c1).abs() > ENERGY_SPLIT_TOL {
        failures.push(format!(
            "crossing energies split: |c0 − c1| = {:.2e}",
            (c0 - c1).abs()
        ));
    }
    if c_star <= CSTAR_FLOOR {
        failures.push(format!(
            "total crossing energy {c_star:.2e} not above {CSTAR_FLOOR:.0e}"
        ));
    }
    let cauchy_up = (up_n.action - up_2n.action).abs();
    let cauchy_down = (down_n.action - down_2n.action).abs();
    if cauchy_up > CAUCHY_TOL || cauchy_down > CAUCHY_TOL {
        failures.push(format!(
            "window truncation not Cauchy: |I_N − I_2N| = {cauchy_up:.2e} (up) / \
             {cauchy_down:.2e} (down)"
        ));
    }
    verdict(
        5,
        "heteroclinic crossings: shape, energies, truncation",
        &failures,
        &format!(
            "strict monotone interior at ±{STRICT_WINDOW}; c0 = {c0:.8}, c1 = {c1:.8}, \
             c* = {c_star:.8}; Cauchy gaps {cauchy_up:.1e}/{cauchy_down:.1e} at N = {CAUCHY_WINDOW}"
        ),
    );
}

#[test]
fn criterion_06_random_segments_obey_action_bounds() {
    const SLACK: f64 = 1e-8;
    const DELTA: f64 = 0.25;
    const CASES: usize = 1000;

    let h = fk(1.0, 1.0);
    let pair = unit_pair(&h);
    let lip = h.lipschitz_bound();
    let phi =
        estimate_phi(&h, &pair, DELTA, 2, &MinimizeOptions::default()).expect("loop-cost estimate");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut worst_disp = f64::INFINITY;
    let mut worst_loop = f64::INFINITY;

    // Displacement bound: any box-constrained segment's normalized
    // action is at least −lip·|x_n − x_0|.
    for case in 0..CASES {
        let steps = rng.gen_range(2..=8usize);
        let xs: Vec<f64> = (0..=steps).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let total: f64 = xs
            .windows(2)
            .map(|w| normalized_term(&h, &pair, w[0], w[1]))
            .sum();
        let bound = -lip * (xs[steps] - xs[0]).abs();
        worst_disp = worst_disp.min(total - bound);
        if total < bound - SLACK {
            failures.push(format!(
                "segment case {case}: action {total:.3e} under bound {bound:.3e}"
            ));
        }
    }

    // Excursion bound: a loop staying δ-far from both states pays at
    // least the single-step floor per step.
    for case in 0..CASES {
        let steps = rng.gen_range(2..=8usize);
        let mut xs: Vec<f64> = (0..steps)
            .map(|_| rng.gen_range(DELTA..=(1.0 - DELTA)))
            .collect();
        xs.push(xs[0]);
        let total: f64 = xs
            .windows(2)
            .map(|w| normalized_term(&h, &pair, w[0], w[1]))
            .sum();
        let bound = steps as f64 * phi.lower;
        worst_loop = worst_loop.min(total - bound);
        if total < bound - SLACK {
            failures.push(format!(
                "loop case {case}: action {total:.3e} under bound {bound:.3e}"
            ));
        }
    }
    verdict(
        6,
        "normalized-action lower bounds on random segments and loops",
        &failures,
        &format!(
            "{CASES}+{CASES} cases; slimmest displacement margin {worst_disp:.3e}, \
             slimmest loop margin {worst_loop:.3e} (loop floor {:.4} per step)",
            phi.lower
        ),
    );
}

#[test]
fn criterion_07_diagonal_carries_the_ground_states() {
    const GRID_N: usize = 201;

    let h = fk(1.0, 1.0);
    let ((xlo, xhi), (ylo, yhi)) = default_strip();
    let spacing = (xhi - xlo) / (GRID_N - 1) as f64;
    let mut best = f64::INFINITY;
    let mut arg = (0.0, 0.0);
    for i in 0..GRID_N {
        let x = xlo + spacing * i as f64;
        for j in 0..GRID_N {
            let y = ylo + (yhi - ylo) / (GRID_N - 1) as f64 * j as f64;
            let v = h.eval(x, y);
            if v < best {
                best = v;
                arg = (x, y);
            }
        }
    }
    let off_diagonal = (arg.0 - arg.1).abs();
    let mut failures = Vec::new();
    if off_diagonal > spacing + 1e-12 {
        failures.push(format!(
            "grid minimum at ({:.4}, {:.4}) sits {off_diagonal:.4} off the diagonal \
             (resolution {spacing:.4})",
            arg.0, arg.1
        ));
    }
    verdict(
        7,
        "strip-wide grid minimum lies on the diagonal",
        &failures,
        &format!(
            "{GRID_N}×{GRID_N} strip scan: minimum {best:.6} at ({:.3}, {:.3}), \
             |ξ − η| = {off_diagonal:.1e} ≤ {spacing:.3}",
            arg.0, arg.1
        ),
    );
}

#[test]
fn criterion_08_rational_reduction_lifts_stationary_configurations() {
    const RES_TOL: f64 = 1e-8;
    /// Periods of the reduced chain kept on each side of the origin.
    const HALF_PERIODS: i64 = 6;

    let h = fk(1.0, 0.3);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (q, p) in [(2u32, 1i64), (3, 1)] {
        let red = RationalReduction::new(&h, q, p).expect("reduction");
        let (t_raw, _, seam) = red.diagonal_argmin();
        // The diagonal argmin is defined modulo the integer period;
        // take the representative nearest zero so the windowed
        // rotation estimate is not polluted by the base offset.
        let t = t_raw - t_raw.round();
        let len = (2 * HALF_PERIODS + 1) as usize;
        let y = Configuration::new(
            -HALF_PERIODS,
            vec![t; len],
            Tail::Periodic(1, 0),
            Tail::Periodic(1, 0),
        )
        .expect("reduced configuration");
        let lift = match lift_rational(&h, q, p, &y, RES_TOL) {
            Ok(l) => l,
            Err(e) => {
                failures.push(format!("({q},{p}): lift failed: {e}"));
                continue;
            }
        };
        if lift.max_residual > RES_TOL {
            failures.push(format!(
                "({q},{p}): lifted residual {:.2e} exceeds {RES_TOL:.0e}",
                lift.max_residual
            ));
        }
        let target = p as f64 / q as f64;
        let cfg = &lift.config;
        let (left, right) = cfg.window_rotation_estimate();
        for (side, est, window) in [
            ("left", left, cfg.lo.unsigned_abs() as f64),
            ("right", right, cfg.hi().unsigned_abs() as f64),
        ] {
            match est {
                Some(r) if (r - target).abs() <= 1.0 / window => {}
                Some(r) => failures.push(format!(
                    "({q},{p}): {side} rotation estimate {r:.6} off {target:.6} by more \
                     than 1/{window}"
                )),
                None => failures.push(format!("({q},{p}): {side} rotation estimate missing")),
            }
        }
        notes.push(format!(
            "({q},{p}): residual {:.1e}, seam {seam:.1e}, rotation → {target:.4}",
            lift.max_residual
        ));
    }
    verdict(
        8,
        "rational reductions lift to stationary configurations",
        &failures,
        &notes.join("; "),
    );
}

/// Shared gap scan for the strongly pinned model used by criteria
/// 9–13.
fn strong_gap(h: &FrenkelKontorova, pair: &NeighboringPair, opts: &MinimizeOptions) -> GapReport {
    detect_gap(h, pair, 33, 12, opts, &GapOptions::default()).expect("gap scan")
}

#[test]
fn criterion_09_gap_detection_certifies_both_families() {
    /// Jump bound factor: the pinned-fiber profile is Lipschitz with
    /// constant at most 2·lip (the pin enters two action terms), so 10
    /// leaves a wide, sound margin.
    const JUMP_FACTOR: f64 = 10.0;

    let h = fk(1.0, 2.0);
    let pair = unit_pair(&h);
    let opts = MinimizeOptions::default();
    let gap = strong_gap(&h, &pair, &opts);
    let lip = h.lipschitz_bound();

    let mut failures = Vec::new();
    if gap.intervals_up.is_empty() || gap.intervals_down.is_empty() {
        failures.push("a family certifies no gap interval".to_string());
    }
    if !(gap.e0 > 0.0) {
        failures.push(format!("up-family margin e0 = {:.2e} not positive", gap.e0));
    }
    if !(gap.e1 > 0.0) {
        failures.push(format!(
            "down-family margin e1 = {:.2e} not positive",
            gap.e1
        ));
    }
    let mut worst_ratio = 0.0f64;
    for w in gap.samples.windows(2) {
        let dx = w[1].x0 - w[0].x0;
        for (fam, a, b) in [
            ("up", w[0].m_up, w[1].m_up),
            ("down", w[0].m_down, w[1].m_down),
        ] {
            let jump = (b - a).abs();
            worst_ratio = worst_ratio.max(jump / (lip * dx));
            if jump > JUMP_FACTOR * lip * dx + 1e-12 {
                failures.push(format!(
                    "{fam} profile jumps {jump:.3e} over spacing {dx:.3e} near x0 = {:.4}",
                    w[0].x0
                ));
            }
        }
    }
    verdict(
        9,
        "constrained-fiber gap certification",
        &failures,
        &format!(
            "e0 = {:.3e}, e1 = {:.3e}, {} samples at half-window {}, \
             steepest profile slope {worst_ratio:.2} · lip (bound {JUMP_FACTOR})",
            gap.e0,
            gap.e1,
            gap.samples.len(),
            gap.half_window
        ),
    );
}

/// Builds and minimizes an alternating schedule with `s` transitions
/// on the strongly pinned model. Shared by criteria 10 and 11.
fn run_alternating(s: usize) -> (f64, Schedule, TransitionResult) {
    const EPSILON: f64 = 0.05;
    let h = fk(1.0, 2.0);
    let pair = unit_pair(&h);
    let opts = MinimizeOptions::default();
    let gap = strong_gap(&h, &pair, &opts);
    let blueprint = ScheduleBlueprint::for_transitions(EPSILON, s);
    let build = build_schedule(&h, &pair, &gap, &blueprint, &opts).expect("schedule build");
    let cache = BlockConstantCache::new();
    let result = minimize_transition(&h, &pair, &build.schedule, &opts, Some(&cache))
        .expect("transition solve");
    (h.lipschitz_bound(), build.schedule, result)
}

#[test]
fn criterion_10_multi_transition_minimizers() {
    const RES_TOL: f64 = 1e-6;
    const TERM_FLOOR: f64 = -1e-8;
    const TIME_BUDGET: Duration = Duration::from_secs(120);

    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for s in 1..=3usize {
        let t0 = Instant::now();
        let (lip, schedule, result) = run_alternating(s);
        let elapsed = t0.elapsed();
        if !result.interior {
            failures.push(format!(
                "{s}-transition minimizer touches window boundaries at {:?}",
                result.boundary_contacts
            ));
        }
        if result.transitions != s {
            failures.push(format!(
                "{s}-transition schedule realized {} transitions",
                result.transitions
            ));
        }
        if result.report.max_residual > RES_TOL {
            failures.push(format!(
                "{s}-transition residual {:.2e} exceeds {RES_TOL:.0e}",
                result.report.max_residual
            ));
        }
        let rho_sum: f64 = schedule.rho.iter().sum();
        let budget = lip * rho_sum;
        if result.report.total > budget + 1e-9 {
            failures.push(format!(
                "{s}-transition action {:.3e} exceeds the window budget {budget:.3e}",
                result.report.total
            ));
        }
        let mut min_term = f64::INFINITY;
        for term in &result.report.per_block {
            if matches!(term.kind, BlockTermKind::Up | BlockTermKind::Down) {
                min_term = min_term.min(term.value);
                if term.value < TERM_FLOOR {
                    failures.push(format!(
                        "{s}-transition crossing term {:.2e} under {TERM_FLOOR:.0e}",
                        term.value
                    ));
                }
            }
        }
        if elapsed > TIME_BUDGET {
            failures.push(format!("{s}-transition run took {elapsed:?}"));
        }
        notes.push(format!(
            "#S={s}: J = {:.6}, residual {:.1e}, min crossing term {:+.1e}, {elapsed:?}",
            result.report.total, result.report.max_residual, min_term
        ));
    }
    verdict(
        10,
        "alternating multi-transition minimizers",
        &failures,
        &notes.join("; "),
    );
}

#[test]
fn criterion_11_transition_blocks_are_monotone() {
    let (_, _, result) = run_alternating(2);
    let mut failures = Vec::new();
    if !result.interior {
        failures.push("two-transition minimizer not interior".to_string());
    }
    // Monotone here means no counter-directional step beyond 1e-10:
    // deep-tail increments contract below f64 resolution, so exact
    // strictness is not representable across a long block.
    for (b, ok) in result.block_monotone.iter().enumerate() {
        if !ok {
            failures.push(format!("transition block {b} not monotone"));
        }
    }
    verdict(
        11,
        "crossing blocks traverse monotonically",
        &failures,
        &format!(
            "{} transition blocks monotone within solver slack",
            result.block_monotone.len()
        ),
    );
}

#[test]
fn criterion_12_index_selections_give_distinct_minimizers() {
    const EPSILON: f64 = 0.05;

    let h = fk(1.0, 2.0);
    let pair = unit_pair(&h);
    let opts = MinimizeOptions::default();
    let gap = strong_gap(&h, &pair, &opts);
    let mut blueprint = ScheduleBlueprint::for_transitions(EPSILON, 2);
    blueprint.max_block_spacing = 24;
    blueprint.strictly_increasing = true;
    let build = build_schedule(&h, &pair, &gap, &blueprint, &opts).expect("schedule build");
    let cache = BlockConstantCache::new();

    let mut failures = Vec::new();

    let distinct = vec![vec![0, 1, 2, 3], vec![2, 3, 4, 5], vec![0, 1, 4, 5]];
    let report = multi_schedule_distinctness(
        &h,
        &pair,
        &build.schedule,
        &distinct,
        &opts,
        1,
        Some(&cache),
    )
    .expect("distinctness solve");
    if !report.all_distinct {
        failures.push("three distinct selections were not pairwise separated".to_string());
    }
    for &(a, b, sup) in &report.pairwise_sup {
        if sup <= report.clearance {
            failures.push(format!(
                "selections {a} and {b} separate by only {sup:.3e} (clearance {:.3e})",
                report.clearance
            ));
        }
    }

    let repeated = vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]];
    let rerun = multi_schedule_distinctness(
        &h,
        &pair,
        &build.schedule,
        &repeated,
        &opts,
        1,
        Some(&cache),
    )
    .expect("repeat solve");
    let (xa, xb) = (
        &rerun.results[0].config.values,
        &rerun.results[1].config.values,
    );
    let bitwise =
        xa.len() == xb.len() && xa.iter().zip(xb).all(|(u, v)| u.to_bits() == v.to_bits());
    if !bitwise {
        failures.push("identical selections did not reproduce bit-identical minimizers".into());
    }
    if rerun.pairwise_sup[0].2 != 0.0 {
        failures.push(format!(
            "identical selections report sup-difference {:.3e}",
            rerun.pairwise_sup[0].2
        ));
    }
    let sups = report
        .pairwise_sup
        .iter()
        .map(|(a, b, s)| format!("({a},{b}) {s:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        12,
        "schedule selections: distinctness and reproducibility",
        &failures,
        &format!(
            "pairwise sups {sups} above clearance {:.3e}; repeat run bit-identical",
            report.clearance
        ),
    );
}

#[test]
fn criterion_13_misplaced_windows_are_detected() {
    let h = fk(1.0, 2.0);
    let pair = unit_pair(&h);
    let opts = MinimizeOptions::default();
    // Negative control: anchor every window face exactly on a
    // heteroclinic fiber value — the uncertified edge of the gap
    // interval — with cramped spacings. The constrained minimizer must
    // press against its windows, and the interiority check must say so.
    let het = heteroclinic_minimizer(&h, &pair, Direction::Up, 12, &opts).expect("crossing");
    let rho = het.config.value_at(-10, &pair) - pair.u0;
    assert!(
        rho > 0.0 && rho < 0.05,
        "fiber offset {rho:.2e} unusable as a radius"
    );
    let schedule = Schedule::new(
        vec![0, 2, 4, 6],
        vec![rho; 4],
        vec![Label::U0, Label::U0, Label::U1, Label::U1],
        &pair,
    )
    .expect("schedule");
    let result = minimize_transition(&h, &pair, &schedule, &opts, None).expect("transition solve");

    let mut failures = Vec::new();
    if result.interior {
        failures.push("fiber-anchored windows were reported interior".to_string());
    }
    if result.boundary_contacts.is_empty() {
        failures.push("no boundary contacts reported".to_string());
    }
    verdict(
        13,
        "negative control: uncertified window placement fails interiority",
        &failures,
        &format!(
            "radius {rho:.3e} on the crossing fiber → boundary contacts at {:?}, \
             surgery diagnostic {:?}",
            result.boundary_contacts,
            result.surgery_diagnostic.map(|d| format!("{d:.2e}"))
        ),
    );
}
