//! Constrained minimization of finite action chains.
//!
//! This is the computational core of the crate: minimize
//!
//! ```text
//! A(x) = Σ_{i=0}^{n-2} h(x_i, x_{i+1})  (+ anchor terms)
//! ```
//!
//! over per-site boxes `x_i ∈ [lo_i, hi_i]`, where optional anchors fix
//! external neighbor values and add the coupling steps `h(a_L, x_0)`
//! and `h(x_{n-1}, a_R)` to the objective. Degenerate boxes
//! (`lo == hi`) pin sites exactly, which is how callers express fixed
//! endpoints and pinned interior sites.
//!
//! The default method layers three phases:
//!
//! 1. **Grid dynamic programming** over a per-site product grid. On
//!    the grid this is an exact global minimization (the objective
//!    couples only neighboring sites), so it replaces multistart
//!    seeding with a deterministic equivalent and lands in the correct
//!    valley even when the energy landscape has many local minima.
//! 2. **Projected coordinate sweeps**: each site in turn is moved to
//!    the global minimizer of its one-dimensional section over its
//!    box (scan plus golden refinement), so escaping shallow local
//!    traps does not rely on curvature information.
//! 3. **Projected Newton polish**: the free sites (those not pinned
//!    against an active bound) form independent tridiagonal blocks;
//!    a regularized tridiagonal solve plus a backtracking line search
//!    drives the Karush–Kuhn–Tucker residual to tolerance.
//!
//! Ties in the discrete phases break toward smaller grid indices, so
//! results are deterministic across runs.

use serde::{Deserialize, Serialize};

use crate::genfn::GeneratingFunction;
use crate::numerics;

/// Update scheme for the chain solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dynamic-programming seed, coordinate sweeps, Newton polish.
    #[default]
    CoordinateNewton,
    /// Dynamic-programming seed, then projected gradient descent with
    /// backtracking. Slower; useful as a cross-check.
    ProjectedGradient,
}

/// Options shared by all chain-based minimizations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Convergence threshold for the max Karush–Kuhn–Tucker residual.
    pub tol_grad: f64,
    /// Budget of coordinate sweeps (or gradient iterations).
    pub max_sweeps: usize,
    /// Update scheme.
    pub method: Method,
    /// Grid points per site for the dynamic-programming seed and the
    /// per-site scans.
    pub grid_seed_points: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol_grad: 1e-10,
            max_sweeps: 500,
            method: Method::CoordinateNewton,
            grid_seed_points: 33,
        }
    }
}

/// A finite chain minimization problem.
pub struct ChainProblem<'a> {
    /// Generating function defining the step costs.
    pub h: &'a dyn GeneratingFunction,
    /// Inclusive per-site boxes; `lo == hi` pins a site.
    pub bounds: Vec<(f64, f64)>,
    /// Fixed external neighbor below site 0, adding `h(a, x_0)`.
    pub left_anchor: Option<f64>,
    /// Fixed external neighbor above the last site, adding `h(x_last, a)`.
    pub right_anchor: Option<f64>,
}

/// Output of a chain solve.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    /// Minimizing positions, one per site.
    pub x: Vec<f64>,
    /// Total objective, anchor terms included.
    pub action: f64,
    /// Karush–Kuhn–Tucker residual per site: the gradient magnitude at
    /// interior points, the inward-gradient violation at active bounds,
    /// and zero at pinned sites.
    pub residuals: Vec<f64>,
    /// Max of `residuals`.
    pub max_residual: f64,
    /// Whether `max_residual ≤ tol_grad` was reached.
    pub converged: bool,
    /// Coordinate sweeps (or gradient iterations) performed.
    pub sweeps: usize,
    /// Newton iterations performed.
    pub newton_iters: usize,
}

/// Sites this close to a bound count as sitting on it.
const BOUND_EPS: f64 = 1e-12;
/// Coordinate moves below this end a sweep phase.
const SWEEP_STALL: f64 = 1e-13;

impl ChainProblem<'_> {
    fn n(&self) -> usize {
        self.bounds.len()
    }

    /// Total objective including anchor coupling terms.
    pub fn action(&self, x: &[f64]) -> f64 {
        let mut a = 0.0;
        if let Some(al) = self.left_anchor {
            a += self.h.eval(al, x[0]);
        }
        for i in 0..x.len() - 1 {
            a += self.h.eval(x[i], x[i + 1]);
        }
        if let Some(ar) = self.right_anchor {
            a += self.h.eval(x[x.len() - 1], ar);
        }
        a
    }

    /// Gradient of the objective with respect to site `i`; neighbors
    /// outside the chain contribute only through anchors.
    fn grad_at(&self, x: &[f64], i: usize) -> f64 {
        let mut g = 0.0;
        if i > 0 {
            g += self.h.d2(x[i - 1], x[i]);
        } else if let Some(al) = self.left_anchor {
            g += self.h.d2(al, x[i]);
        }
        if i + 1 < x.len() {
            g += self.h.d1(x[i], x[i + 1]);
        } else if let Some(ar) = self.right_anchor {
            g += self.h.d1(x[i], ar);
        }
        g
    }

    /// Karush–Kuhn–Tucker residuals: interior sites must have zero
    /// gradient; sites on a bound must not want to move inward.
    pub fn kkt_residuals(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let (lo, hi) = self.bounds[i];
                if hi - lo <= BOUND_EPS {
                    return 0.0;
                }
                let g = self.grad_at(x, i);
                let at_lo = x[i] - lo <= BOUND_EPS;
                let at_hi = hi - x[i] <= BOUND_EPS;
                if at_lo {
                    (-g).max(0.0)
                } else if at_hi {
                    g.max(0.0)
                } else {
                    g.abs()
                }
            })
            .collect()
    }

    /// One-dimensional section through site `i` at the current `x`.
    fn site_objective(&self, x: &[f64], i: usize, t: f64) -> f64 {
        let mut v = 0.0;
        if i > 0 {
            v += self.h.eval(x[i - 1], t);
        } else if let Some(al) = self.left_anchor {
            v += self.h.eval(al, t);
        }
        if i + 1 < x.len() {
            v += self.h.eval(t, x[i + 1]);
        } else if let Some(ar) = self.right_anchor {
            v += self.h.eval(t, ar);
        }
        v
    }

    /// Exact global minimization over the per-site product grid by
    /// dynamic programming. Ties break toward smaller grid indices.
    fn dp_seed(&self, grid_points: usize) -> Vec<f64> {
        let n = self.n();
        let g = grid_points.max(2);
        let grids: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                if hi - lo <= BOUND_EPS {
                    vec![lo]
                } else {
                    (0..g)
                        .map(|k| lo + (hi - lo) * k as f64 / (g - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut cost: Vec<f64> = grids[0]
            .iter()
            .map(|&v| match self.left_anchor {
                Some(al) => self.h.eval(al, v),
                None => 0.0,
            })
            .collect();
        let mut back: Vec<Vec<u32>> = Vec::with_capacity(n);
        back.push(Vec::new());
        for i in 1..n {
            let mut next = vec![f64::INFINITY; grids[i].len()];
            let mut arg = vec![0u32; grids[i].len()];
            for (a, &va) in grids[i].iter().enumerate() {
                let mut best = f64::INFINITY;
                let mut best_b = 0u32;
                for (b, &vb) in grids[i - 1].iter().enumerate() {
                    let c = cost[b] + self.h.eval(vb, va);
                    // Strict improvement keeps the smallest predecessor
                    // index on ties.
                    if c < best {
                        best = c;
                        best_b = b as u32;
                    }
                }
                next[a] = best;
                arg[a] = best_b;
            }
            cost = next;
            back.push(arg);
        }
        if let Some(ar) = self.right_anchor {
            for (a, &va) in grids[n - 1].iter().enumerate() {
                cost[a] += self.h.eval(va, ar);
            }
        }
        let mut best_a = 0usize;
        let mut best = f64::INFINITY;
        for (a, &c) in cost.iter().enumerate() {
            if c < best {
                best = c;
                best_a = a;
            }
        }
        let mut idx = vec![0usize; n];
        idx[n - 1] = best_a;
        for i in (1..n).rev() {
            idx[i - 1] = back[i][idx[i]] as usize;
        }
        (0..n).map(|i| grids[i][idx[i]]).collect()
    }

    /// One pass of exact per-site minimizations; returns the largest
    /// single-site move.
    fn coordinate_sweep(&self, x: &mut [f64], grid_points: usize) -> f64 {
        let mut max_move: f64 = 0.0;
        for i in 0..x.len() {
            let (lo, hi) = self.bounds[i];
            if hi - lo <= BOUND_EPS {
                continue;
            }
            let cur = self.site_objective(x, i, x[i]);
            let (t, v) = numerics::grid_refine_min(
                |t| self.site_objective(x, i, t),
                lo,
                hi,
                grid_points,
                1e-12,
            );
            if v < cur {
                max_move = max_move.max((t - x[i]).abs());
                x[i] = t;
            }
        }
        max_move
    }

    /// Projected Newton iterations until the residual target `tol` is
    /// met or `max_iter` is exhausted. Returns iterations used.
    fn newton_polish(&self, x: &mut [f64], tol: f64, max_iter: usize) -> usize {
        let n = self.n();
        let mut iters = 0;
        for _ in 0..max_iter {
            let res = self.kkt_residuals(x);
            let max_res = res.iter().fold(0.0f64, |m, &r| m.max(r));
            if max_res <= tol {
                break;
            }
            iters += 1;
            // Free sites: not pinned, and not held on a bound by an
            // outward gradient.
            let mut free = vec![false; n];
            for i in 0..n {
                let (lo, hi) = self.bounds[i];
                if hi - lo <= BOUND_EPS {
                    continue;
                }
                let g = self.grad_at(x, i);
                let at_lo = x[i] - lo <= BOUND_EPS;
                let at_hi = hi - x[i] <= BOUND_EPS;
                // A site on a bound is freed only when the gradient
                // points inward (so the constraint is inactive).
                free[i] = !(at_lo && g >= 0.0) && !(at_hi && g <= 0.0);
            }
            let mut dx = vec![0.0; n];
            let mut any = false;
            let mut i = 0;
            while i < n {
                if !free[i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < n && free[i] {
                    i += 1;
                }
                let len = i - start;
                // Assemble the tridiagonal Hessian block of this free run.
                let mut diag = vec![0.0; len];
                let mut off = vec![0.0; len.saturating_sub(1)];
                let mut rhs = vec![0.0; len];
                for k in 0..len {
                    let s = start + k;
                    let mut d = 0.0;
                    if s > 0 {
                        d += self.h.d22(x[s - 1], x[s]);
                    } else if let Some(al) = self.left_anchor {
                        d += self.h.d22(al, x[s]);
                    }
                    if s + 1 < n {
                        d += self.h.d11(x[s], x[s + 1]);
                    } else if let Some(ar) = self.right_anchor {
                        d += self.h.d11(x[s], ar);
                    }
                    diag[k] = d;
                    if k + 1 < len {
                        off[k] = self.h.d12(x[s], x[s + 1]);
                    }
                    rhs[k] = -self.grad_at(x, s);
                }
                // Levenberg regularization: grow a diagonal shift until
                // the factorization succeeds.
                let scale = diag.iter().fold(1.0f64, |m, &d| m.max(d.abs()));
                let mut shift = 0.0;
                for attempt in 0..8 {
                    let mut d2 = diag.clone();
                    let mut o2 = off.clone();
                    let mut r2 = rhs.clone();
                    if shift > 0.0 {
                        for d in d2.iter_mut() {
                            *d += shift;
                        }
                    }
                    if numerics::tridiag_solve_sym(&mut d2, &mut o2, &mut r2, 1e-12 * scale) {
                        dx[start..start + len].copy_from_slice(&r2[..len]);
                        any = true;
                        break;
                    }
                    shift = if attempt == 0 {
                        1e-8 * scale
                    } else {
                        shift * 10.0
                    };
                }
            }
            if !any {
                break;
            }
            // Backtracking line search on the projected step.
            let a0 = self.action(x);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = (0..n)
                    .map(|k| {
                        let (lo, hi) = self.bounds[k];
                        (x[k] + t * dx[k]).clamp(lo, hi)
                    })
                    .collect();
                let a1 = self.action(&trial);
                if a1 <= a0 + 1e-15 * (1.0 + a0.abs()) {
                    let moved = trial
                        .iter()
                        .zip(x.iter())
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    x.copy_from_slice(&trial);
                    accepted = true;
                    if moved < 1e-16 {
                        return iters;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        iters
    }

    /// Projected gradient descent with backtracking.
    fn projected_gradient(&self, x: &mut [f64], tol: f64, max_iter: usize) -> usize {
        let n = self.n();
        let mut iters = 0;
        let mut step = 1.0;
        for _ in 0..max_iter {
            let res = self.kkt_residuals(x);
            if res.iter().fold(0.0f64, |m, &r| m.max(r)) <= tol {
                break;
            }
            iters += 1;
            let g: Vec<f64> = (0..n).map(|i| self.grad_at(x, i)).collect();
            let a0 = self.action(x);
            let mut t = step;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..n)
                    .map(|k| {
                        let (lo, hi) = self.bounds[k];
                        (x[k] - t * g[k]).clamp(lo, hi)
                    })
                    .collect();
                if self.action(&trial) < a0 {
                    x.copy_from_slice(&trial);
                    accepted = true;
                    // Gentle step growth keeps the search adaptive.
                    step = (t * 2.0).min(1.0);
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        iters
    }
}

/// Minimizes a chain problem. `seed` (clamped into the boxes) replaces
/// the dynamic-programming phase when provided, which is how callers
/// express warm starts and hand-shaped initial profiles.
///
/// Never errors on non-convergence: the best iterate is returned with
/// `converged == false` and callers decide how to surface it.
pub fn solve(
    problem: &ChainProblem<'_>,
    seed: Option<&[f64]>,
    opts: &MinimizeOptions,
) -> ChainSolution {
    let n = problem.n();
    assert!(n > 0, "chain problem must have at least one site");
    for &(lo, hi) in &problem.bounds {
        assert!(
            lo.is_finite() && hi.is_finite() && lo <= hi,
            "chain bounds must be finite ordered intervals"
        );
    }
    let mut x: Vec<f64> = match seed {
        Some(s) => {
            assert_eq!(s.len(), n, "seed length must match bounds");
            s.iter()
                .zip(&problem.bounds)
                .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
                .collect()
        }
        None => problem.dp_seed(opts.grid_seed_points),
    };

    let mut sweeps = 0;
    let mut newton_iters = 0;
    match opts.method {
        Method::CoordinateNewton => {
            // Alternate sweep bursts and Newton polish until converged
            // or out of budget. Sweeps provide global moves; Newton
            // provides the final accuracy.
            loop {
                let res = problem.kkt_residuals(&x);
                if res.iter().fold(0.0f64, |m, &r| m.max(r)) <= opts.tol_grad {
                    break;
                }
                let mut stalled = false;
                for _ in 0..10 {
                    if sweeps >= opts.max_sweeps {
                        stalled = true;
                        break;
                    }
                    sweeps += 1;
                    let moved = problem.coordinate_sweep(&mut x, opts.grid_seed_points);
                    if moved < SWEEP_STALL {
                        stalled = true;
                        break;
                    }
                }
                newton_iters += problem.newton_polish(&mut x, opts.tol_grad, 60);
                let res = problem.kkt_residuals(&x);
                if res.iter().fold(0.0f64, |m, &r| m.max(r)) <= opts.tol_grad {
                    break;
                }
                if stalled || sweeps >= opts.max_sweeps {
                    break;
                }
            }
        }
        Method::ProjectedGradient => {
            newton_iters = 0;
            sweeps = problem.projected_gradient(&mut x, opts.tol_grad, opts.max_sweeps * 100);
        }
    }

    let residuals = problem.kkt_residuals(&x);
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    ChainSolution {
        action: problem.action(&x),
        converged: max_residual <= opts.tol_grad,
        x,
        residuals,
        max_residual,
        sweeps,
        newton_iters,
    }
}
