//! Small shared numeric kernels: bracketed one-dimensional
//! minimization, safeguarded root finding, finite differences,
//! tridiagonal solves, and a periodic cubic spline.
//!
//! Everything here is deterministic and allocation-light; the chain
//! solvers in [`crate::chain`] and the model code in [`crate::genfn`]
//! are built on these primitives.

use crate::error::Error;
use crate::Result;

/// 1/φ, the golden-section step ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Step size for centered finite differences at base point `x`.
///
/// Scales with the magnitude of `x` so the relative truncation and
/// rounding errors stay balanced near `1e-6`.
pub fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Step size for second differences at base point `x`.
///
/// Second differences divide the rounding noise by the step squared,
/// so their optimal step is near the fourth root of machine epsilon —
/// far wider than the first-difference step.
pub fn fd_step2(x: f64) -> f64 {
    3e-4 * x.abs().max(1.0)
}

/// Centered first difference of `f` at `x`.
pub fn central_d1(mut f: impl FnMut(f64) -> f64, x: f64) -> f64 {
    let s = fd_step(x);
    (f(x + s) - f(x - s)) / (2.0 * s)
}

/// Golden-section minimization of `f` on `[a, b]`.
///
/// Shrinks the bracket until its width drops below `tol` (absolute)
/// and returns the best sampled point. `f` is assumed unimodal on the
/// bracket; on non-unimodal inputs this still returns a local
/// minimizer inside `[a, b]`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    debug_assert!(a <= b);
    if b - a <= tol {
        let mid = 0.5 * (a + b);
        return (mid, f(mid));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // Each iteration shrinks the bracket by 1/φ; bail out well before
    // floating-point stagnation can stall the loop.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Global scan of `f` on `[a, b]` with `n` grid points, followed by a
/// golden-section refinement around the best cell.
///
/// Ties on the grid resolve toward the smallest abscissa. Returns the
/// better of the refined point and the raw grid minimum, so the result
/// never exceeds the best grid sample.
pub fn grid_refine_min(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(a <= b);
    debug_assert!(n >= 2);
    if b - a <= 0.0 {
        return (a, f(a));
    }
    let step = (b - a) / (n - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let x = a + step * i as f64;
        let v = f(x);
        vals.push(v);
        // Strict comparison keeps the leftmost grid point on ties.
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = a + step * (best_i + 1).min(n - 1) as f64;
    let (xr, fr) = golden_min(&mut f, lo, hi, tol);
    if fr < best_v {
        (xr, fr)
    } else {
        (a + step * best_i as f64, best_v)
    }
}

/// Root of a strictly decreasing function on a bracket, by safeguarded
/// Newton iteration.
///
/// `g` returns the value and its derivative. Requires
/// `g(lo) >= 0 >= g(hi)` up to `tol_f`; otherwise a bracket error is
/// returned. Newton steps that leave the bracket, or whose derivative
/// is too flat, fall back to bisection, so the iteration always
/// converges on a continuous strictly decreasing function.
pub fn decreasing_root(
    mut g: impl FnMut(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    tol_f: f64,
) -> Result<f64> {
    let (glo, _) = g(lo);
    let (ghi, _) = g(hi);
    if glo.abs() <= tol_f {
        return Ok(lo);
    }
    if ghi.abs() <= tol_f {
        return Ok(hi);
    }
    if glo < 0.0 || ghi > 0.0 {
        return Err(Error::Bracket { lo, hi, glo, ghi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (v, d) = g(x);
        if v.abs() <= tol_f {
            return Ok(x);
        }
        if v > 0.0 {
            a = x;
        } else {
            b = x;
        }
        // Newton candidate; accept only if it stays safely inside the
        // current bracket, otherwise bisect.
        let newton_ok = d < 0.0 && d.is_finite();
        let mut next = if newton_ok { x - v / d } else { f64::NAN };
        if !next.is_finite() || next <= a || next >= b {
            next = 0.5 * (a + b);
        }
        if (b - a) < f64::EPSILON * (a.abs() + b.abs() + 1.0) {
            return Ok(0.5 * (a + b));
        }
        x = next;
    }
    let (v, _) = g(x);
    Err(Error::NonConvergence {
        what: "bracketed root solve".into(),
        residual: v.abs(),
        iterations: 200,
        best: vec![x].into_boxed_slice(),
    })
}

/// Solves a symmetric tridiagonal system `A x = rhs` in place via LDLᵀ.
///
/// `diag` holds the diagonal (length n), `off` the sub/super-diagonal
/// (length n-1); both are destroyed. Returns `false` if a pivot falls
/// at or below `pivot_min`, in which case `rhs` is left partially
/// transformed and must be discarded.
pub fn tridiag_solve_sym(
    diag: &mut [f64],
    off: &mut [f64],
    rhs: &mut [f64],
    pivot_min: f64,
) -> bool {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    if n == 0 {
        return true;
    }
    // Factor: d_i = D_i, off_i overwritten by L_{i+1,i}.
    for i in 0..n {
        if !(diag[i] > pivot_min) {
            return false;
        }
        if i + 1 < n {
            let l = off[i] / diag[i];
            diag[i + 1] -= l * off[i];
            off[i] = l;
        }
    }
    // Forward substitution (L y = rhs), then D, then Lᵀ.
    for i in 1..n {
        rhs[i] -= off[i - 1] * rhs[i - 1];
    }
    for i in 0..n {
        rhs[i] /= diag[i];
    }
    for i in (0..n.saturating_sub(1)).rev() {
        rhs[i] -= off[i] * rhs[i + 1];
    }
    true
}

/// Solves a general tridiagonal system by the Thomas algorithm.
///
/// `sub` is the subdiagonal (length n-1, `sub[i]` multiplies `x[i]` in
/// row `i+1`), `diag` the diagonal, `sup` the superdiagonal. Returns
/// `None` on a vanishing pivot.
fn tridiag_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return None;
    }
    c[0] = sup.first().copied().unwrap_or(0.0) / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i - 1] * c[i - 1];
        if piv.abs() < 1e-300 {
            return None;
        }
        c[i] = if i + 1 < n { sup[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Natural cubic spline through `n` uniform samples of a 1-periodic
/// function, with periodic (C²) boundary conditions.
///
/// Sample `i` sits at `x = i/n`; evaluation wraps its argument into
/// `[0, 1)` first, so `eval(x + 1) == eval(x)` exactly whenever
/// `x + 1` is exact in floating point.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
    /// Knot spacing, `1/n`.
    h: f64,
}

impl PeriodicSpline {
    /// Builds the spline. Requires at least 4 samples so the cyclic
    /// system's corner entries stay off the tridiagonal band.
    pub fn new(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 4 {
            return Err(Error::InvalidParameter(format!(
                "periodic spline needs at least 4 samples, got {n}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "periodic spline samples must be finite".into(),
            ));
        }
        let h = 1.0 / n as f64;
        // Second-derivative (moment) equations: m_{i-1} + 4 m_i + m_{i+1}
        // = 6 (y_{i-1} - 2 y_i + y_{i+1}) / h², indices mod n. The cyclic
        // corner entries are folded in by the Sherman–Morrison trick.
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let ym = samples[(i + n - 1) % n];
                let yp = samples[(i + 1) % n];
                6.0 * (ym - 2.0 * samples[i] + yp) / (h * h)
            })
            .collect();
        let sub = vec![1.0; n - 1];
        let sup = vec![1.0; n - 1];
        // A = T + u vᵀ with u = (γ, 0, …, 0, 1), v = (1, 0, …, 0, 1/γ).
        let gamma = -4.0;
        let mut diag = vec![4.0; n];
        diag[0] = 4.0 - gamma;
        diag[n - 1] = 4.0 - 1.0 / gamma;
        let x1 = tridiag_solve(&sub, &diag, &sup, &rhs).ok_or_else(|| Error::NonConvergence {
            what: "periodic spline factorization".into(),
            residual: f64::INFINITY,
            iterations: 0,
            best: Box::new([]),
        })?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = 1.0;
        let x2 = tridiag_solve(&sub, &diag, &sup, &u).ok_or_else(|| Error::NonConvergence {
            what: "periodic spline factorization".into(),
            residual: f64::INFINITY,
            iterations: 0,
            best: Box::new([]),
        })?;
        let vx1 = x1[0] + x1[n - 1] / gamma;
        let vx2 = x2[0] + x2[n - 1] / gamma;
        let factor = vx1 / (1.0 + vx2);
        let m: Vec<f64> = (0..n).map(|i| x1[i] - factor * x2[i]).collect();
        Ok(PeriodicSpline {
            y: samples.to_vec(),
            m,
            h,
        })
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// True if the spline has no knots (never holds for a constructed one).
    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Locates `x` in its knot interval: returns `(i, t)` with
    /// `t ∈ [0, 1)` the normalized offset inside segment `i`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let u = x.rem_euclid(1.0);
        let scaled = u * n as f64;
        let mut i = scaled.floor() as usize;
        if i >= n {
            i = n - 1;
        }
        (i, scaled - i as f64)
    }

    /// Spline value at `x` (argument wrapped into one period).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let (i, t) = self.locate(x);
        let j = (i + 1) % n;
        let s = 1.0 - t;
        self.y[i] * s
            + self.y[j] * t
            + self.h * self.h / 6.0 * ((s * s * s - s) * self.m[i] + (t * t * t - t) * self.m[j])
    }

    /// First derivative at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.y.len();
        let (i, t) = self.locate(x);
        let j = (i + 1) % n;
        let s = 1.0 - t;
        (self.y[j] - self.y[i]) / self.h
            + self.h / 6.0 * ((1.0 - 3.0 * s * s) * self.m[i] + (3.0 * t * t - 1.0) * self.m[j])
    }

    /// Second derivative at `x`.
    pub fn second_deriv(&self, x: f64) -> f64 {
        let n = self.y.len();
        let (i, t) = self.locate(x);
        let j = (i + 1) % n;
        (1.0 - t) * self.m[i] + t * self.m[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn golden_finds_parabola_minimum() {
        // Function-value comparison localizes a quadratic minimum to
        // about sqrt(machine epsilon), not to the bracket tolerance.
        let (x, v) = golden_min(|t| (t - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 5e-8, "x = {x}");
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_refine_handles_multiple_wells() {
        // Double well tilted right-to-left; the global minimum sits at
        // the root of 4t(t^2 - 1) + 0.1 near t = -1.0125.
        let f = |t: f64| (t * t - 1.0).powi(2) + 0.1 * t;
        let (x, _) = grid_refine_min(f, -2.0, 2.0, 101, 1e-12);
        assert!((x + 1.0125).abs() < 1e-3, "x = {x}");
    }

    #[test]
    fn grid_refine_ties_break_left() {
        // Constant function: every grid point ties; expect the left end.
        let (x, v) = grid_refine_min(|_| 2.5, 0.0, 1.0, 11, 1e-12);
        assert_eq!(v, 2.5);
        assert!(x <= 0.5);
    }

    #[test]
    fn decreasing_root_solves_and_detects_bad_bracket() {
        let g = |x: f64| (1.0 - x * x * x, -3.0 * x * x);
        let r = decreasing_root(g, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        let bad = decreasing_root(g, 2.0, 3.0, 1e-14);
        assert!(matches!(bad, Err(Error::Bracket { .. })));
    }

    #[test]
    fn tridiag_sym_matches_dense_solve() {
        // A = [[2,-1,0],[-1,2,-1],[0,-1,2]], x = (1,2,3) → b = (0,0,4).
        let mut diag = vec![2.0, 2.0, 2.0];
        let mut off = vec![-1.0, -1.0];
        let mut rhs = vec![0.0, 0.0, 4.0];
        assert!(tridiag_solve_sym(&mut diag, &mut off, &mut rhs, 1e-12));
        for (got, want) in rhs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiag_sym_rejects_indefinite_pivot() {
        let mut diag = vec![1.0, 0.0];
        let mut off = vec![0.0];
        let mut rhs = vec![1.0, 1.0];
        assert!(!tridiag_solve_sym(&mut diag, &mut off, &mut rhs, 1e-12));
    }

    #[test]
    fn spline_reproduces_cosine() {
        let n = 64;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        let sp = PeriodicSpline::new(&samples).unwrap();
        for k in 0..200 {
            let x = k as f64 / 200.0;
            assert!((sp.eval(x) - (2.0 * PI * x).cos()).abs() < 1e-5, "x={x}");
            assert!(
                (sp.deriv(x) + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-3,
                "x={x}"
            );
        }
        // Periodicity is exact because evaluation wraps the argument.
        assert_eq!(sp.eval(0.25), sp.eval(1.25));
    }

    #[test]
    fn spline_rejects_short_input() {
        assert!(PeriodicSpline::new(&[1.0, 2.0, 3.0]).is_err());
    }
}
