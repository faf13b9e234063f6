//! Composition of generating functions by inf-convolution over the
//! shared middle point, and the reduction of rational rotation numbers
//! to a one-step problem.
//!
//! For two generating functions the conjunction
//!
//! ```text
//! (h₁ ∗ h₂)(ξ, η) = min_m [ h₁(ξ, m) + h₂(m, η) ]
//! ```
//!
//! is again a generating function (periodicity, coercivity, and the
//! twist bound survive, the latter with harmonically combined
//! constants). Iterating it `q` times and shifting the last argument
//! by an integer `p` produces [`RationalReduction`]: a one-step
//! function whose diagonal stationary points correspond to periodic
//! configurations of type `(q, p)` for the original model.
//!
//! Envelope minimizers are sought on an automatically expanded window:
//! coercivity pushes minimizers inward, so a result hugging the window
//! edge triggers a wider retry rather than silent truncation.

use crate::chain::{self, ChainProblem, MinimizeOptions};
use crate::error::Error;
use crate::genfn::GeneratingFunction;
use crate::numerics;
use crate::Result;

/// Grid points for envelope scans over the middle variable.
const ENVELOPE_GRID: usize = 513;
/// Abscissa tolerance for envelope refinements.
const ENVELOPE_TOL: f64 = 1e-10;
/// Window-expansion attempts before giving up on a runaway minimizer.
const MAX_EXPAND: usize = 6;

/// Inf-convolution of two generating functions over the middle point.
pub struct Conjunction<'a> {
    left: &'a dyn GeneratingFunction,
    right: &'a dyn GeneratingFunction,
    /// Initial half-padding of the search window beyond `[min, max]`
    /// of the outer arguments.
    pad: f64,
}

impl<'a> Conjunction<'a> {
    /// Composes `left` and `right`.
    pub fn new(left: &'a dyn GeneratingFunction, right: &'a dyn GeneratingFunction) -> Self {
        Conjunction {
            left,
            right,
            pad: 1.0,
        }
    }

    /// Value and inner minimizer of the conjunction at `(ξ, η)`.
    ///
    /// The middle point is located by a dense scan plus golden-section
    /// refinement on `[min(ξ,η) - pad, max(ξ,η) + pad]`; if the
    /// minimizer lands within one grid cell of the window edge the
    /// window doubles and the search repeats.
    pub fn eval(&self, xi: f64, eta: f64) -> (f64, f64) {
        let mut pad = self.pad;
        let mut best = (f64::INFINITY, xi);
        for _ in 0..MAX_EXPAND {
            let lo = xi.min(eta) - pad;
            let hi = xi.max(eta) + pad;
            let cell = (hi - lo) / (ENVELOPE_GRID - 1) as f64;
            let (m, v) = numerics::grid_refine_min(
                |m| self.left.eval(xi, m) + self.right.eval(m, eta),
                lo,
                hi,
                ENVELOPE_GRID,
                ENVELOPE_TOL,
            );
            best = (v, m);
            if m - lo > cell && hi - m > cell {
                break;
            }
            pad *= 2.0;
        }
        (best.0, best.1)
    }
}

impl GeneratingFunction for Conjunction<'_> {
    fn eval(&self, xi: f64, eta: f64) -> f64 {
        Conjunction::eval(self, xi, eta).0
    }

    // Envelope theorem: at the inner minimizer m the partial
    // derivatives of the conjunction are those of the outer steps.
    fn d1(&self, xi: f64, eta: f64) -> f64 {
        let (_, m) = Conjunction::eval(self, xi, eta);
        self.left.d1(xi, m)
    }

    fn d2(&self, xi: f64, eta: f64) -> f64 {
        let (_, m) = Conjunction::eval(self, xi, eta);
        self.right.d2(m, eta)
    }

    // Implicit differentiation of the stationarity of m gives the
    // second derivatives in terms of the pieces, with
    // D = ∂₂₂h₁(ξ,m) + ∂₁₁h₂(m,η) > 0 at a nondegenerate minimizer.
    fn d11(&self, xi: f64, eta: f64) -> f64 {
        let (_, m) = Conjunction::eval(self, xi, eta);
        let d = self.left.d22(xi, m) + self.right.d11(m, eta);
        let c = self.left.d12(xi, m);
        self.left.d11(xi, m) - c * c / d
    }

    fn d22(&self, xi: f64, eta: f64) -> f64 {
        let (_, m) = Conjunction::eval(self, xi, eta);
        let d = self.left.d22(xi, m) + self.right.d11(m, eta);
        let c = self.right.d12(m, eta);
        self.right.d22(m, eta) - c * c / d
    }

    fn d12(&self, xi: f64, eta: f64) -> f64 {
        let (_, m) = Conjunction::eval(self, xi, eta);
        let d = self.left.d22(xi, m) + self.right.d11(m, eta);
        -self.left.d12(xi, m) * self.right.d12(m, eta) / d
    }

    fn lipschitz_bound(&self) -> f64 {
        self.left
            .lipschitz_bound()
            .max(self.right.lipschitz_bound())
    }

    fn twist_lower_bound(&self) -> f64 {
        // Twist constants compose harmonically under conjunction.
        let a = self.left.twist_lower_bound();
        let b = self.right.twist_lower_bound();
        a * b / (a + b)
    }
}

/// The `q`-fold reduced one-step function for rotation `p/q`:
///
/// ```text
/// H(ξ, η) = min { Σ_{i=0}^{q-1} h(x_i, x_{i+1}) : x_0 = ξ, x_q = η + p }.
/// ```
///
/// Periodic configurations of type `(q, p)` of `h` correspond to
/// diagonal stationary points of `H`.
pub struct RationalReduction<'a> {
    h: &'a dyn GeneratingFunction,
    q: u32,
    p: i64,
    opts: MinimizeOptions,
}

impl<'a> RationalReduction<'a> {
    /// Builds the reduction; requires `q ≥ 1`.
    pub fn new(h: &'a dyn GeneratingFunction, q: u32, p: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter(
                "rational reduction needs period q >= 1".into(),
            ));
        }
        Ok(RationalReduction {
            h,
            q,
            p,
            opts: MinimizeOptions::default(),
        })
    }

    /// Period `q`.
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Winding `p`.
    pub fn p(&self) -> i64 {
        self.p
    }

    /// Value of `H(ξ, η)` together with the interior minimizers
    /// `x_1, …, x_{q-1}` (empty when `q == 1`).
    pub fn eval_with_interior(&self, xi: f64, eta: f64) -> (f64, Vec<f64>) {
        let target = eta + self.p as f64;
        if self.q == 1 {
            return (self.h.eval(xi, target), Vec::new());
        }
        let n = (self.q - 1) as usize;
        let mut pad = 1.0;
        loop {
            let lo = xi.min(target) - pad;
            let hi = xi.max(target) + pad;
            let problem = ChainProblem {
                h: self.h,
                bounds: vec![(lo, hi); n],
                left_anchor: Some(xi),
                right_anchor: Some(target),
            };
            let sol = chain::solve(&problem, None, &self.opts);
            let margin = 0.02 * (hi - lo);
            let edge_hugging = sol.x.iter().any(|&v| v - lo < margin || hi - v < margin);
            if !edge_hugging || pad > 2.0f64.powi(MAX_EXPAND as i32) {
                return (sol.action, sol.x);
            }
            pad *= 2.0;
        }
    }

    /// Diagonal seam derivative `s(t) = ∂₁H(t,t) + ∂₂H(t,t)`; zero at
    /// configurations that close up into stationary periodic orbits.
    pub fn seam_derivative(&self, t: f64) -> f64 {
        self.d1(t, t) + self.d2(t, t)
    }

    /// Minimizes `t ↦ H(t, t)` over one period and polishes the seam
    /// derivative to near zero when a sign change brackets it.
    ///
    /// Returns `(t*, H(t*, t*), |s(t*)|)`.
    pub fn diagonal_argmin(&self) -> (f64, f64, f64) {
        let (mut t, mut v) =
            numerics::grid_refine_min(|t| self.eval_with_interior(t, t).0, 0.0, 1.0, 257, 1e-9);
        // Seam polish by bisection: expand a bracket around t* until
        // the seam derivative changes sign, then bisect. A flat seam
        // (integrable chain) never brackets and keeps the scan result.
        let mut w = 1e-6;
        let mut bracket = None;
        while w <= 0.2 {
            let (a, b) = (t - w, t + w);
            let (sa, sb) = (self.seam_derivative(a), self.seam_derivative(b));
            if sa < 0.0 && sb > 0.0 {
                bracket = Some((a, b));
                break;
            }
            w *= 2.0;
        }
        if let Some((mut a, mut b)) = bracket {
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                let s = self.seam_derivative(mid);
                if s.abs() <= 1e-12 || (b - a) < 1e-15 {
                    break;
                }
                if s < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let mid = 0.5 * (a + b);
            let vm = self.eval_with_interior(mid, mid).0;
            if vm <= v + 1e-12 {
                t = mid;
                v = vm;
            }
        }
        (t, v, self.seam_derivative(t).abs())
    }
}

impl GeneratingFunction for RationalReduction<'_> {
    fn eval(&self, xi: f64, eta: f64) -> f64 {
        self.eval_with_interior(xi, eta).0
    }

    fn d1(&self, xi: f64, eta: f64) -> f64 {
        let (_, interior) = self.eval_with_interior(xi, eta);
        let next = interior.first().copied().unwrap_or(eta + self.p as f64);
        self.h.d1(xi, next)
    }

    fn d2(&self, xi: f64, eta: f64) -> f64 {
        let (_, interior) = self.eval_with_interior(xi, eta);
        let prev = interior.last().copied().unwrap_or(xi);
        self.h.d2(prev, eta + self.p as f64)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.h.lipschitz_bound()
    }

    fn twist_lower_bound(&self) -> f64 {
        // q conjunctions in series: harmonic composition gives δ/q.
        self.h.twist_lower_bound() / self.q as f64
    }
}
