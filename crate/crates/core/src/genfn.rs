//! Generating functions of exact monotone twist maps, and the maps
//! they induce.
//!
//! A generating function `h(ξ, η)` determines an area-preserving twist
//! map `F(x, y) = (X, Y)` implicitly through
//!
//! ```text
//! y = -∂₁h(x, X),    Y = ∂₂h(x, X).
//! ```
//!
//! The uniform twist bound `∂₁₂h ≤ -δ < 0` makes `X ↦ ∂₁h(x, X)`
//! strictly decreasing, so the first equation has a unique root and the
//! map is well defined. [`twist_map_step`] solves it on a caller
//! bracket; [`twist_map_step_auto`] derives a guaranteed bracket from
//! the twist bound.
//!
//! The built-in model is the classical chain with convex nearest-
//! neighbor coupling and an on-site cosine potential
//! ([`FrenkelKontorova`]); [`TabulatedFk`] swaps the cosine for a
//! periodic spline through user samples, exercising every code path
//! that must not silently assume analyticity.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::Error;
use crate::numerics::{self, PeriodicSpline};
use crate::Result;

/// Absolute tolerance for the implicit twist-step root solve.
const ROOT_TOL: f64 = 1e-12;

/// A generating function `h(ξ, η)` with the periodicity
/// `h(ξ+1, η+1) = h(ξ, η)` and a uniform twist bound.
///
/// Implementors must provide `eval` and the two global bounds; all
/// derivatives default to centered finite differences, so a model
/// defined by values alone is usable everywhere (at reduced accuracy).
/// Analytic implementations should override the derivative methods.
pub trait GeneratingFunction: Sync {
    /// `h(ξ, η)`.
    fn eval(&self, xi: f64, eta: f64) -> f64;

    /// `∂₁h`, defaulting to a centered difference of `eval`.
    fn d1(&self, xi: f64, eta: f64) -> f64 {
        numerics::central_d1(|t| self.eval(t, eta), xi)
    }

    /// `∂₂h`, defaulting to a centered difference of `eval`.
    fn d2(&self, xi: f64, eta: f64) -> f64 {
        numerics::central_d1(|t| self.eval(xi, t), eta)
    }

    /// `∂₁₂h`, defaulting to a cross second difference of `eval` (a
    /// wider step than `d1`'s: second differences amplify rounding by
    /// the step squared).
    fn d12(&self, xi: f64, eta: f64) -> f64 {
        let s = numerics::fd_step2(xi.abs().max(eta.abs()));
        (self.eval(xi + s, eta + s) - self.eval(xi + s, eta - s) - self.eval(xi - s, eta + s)
            + self.eval(xi - s, eta - s))
            / (4.0 * s * s)
    }

    /// `∂₁₁h`, defaulting to a centered second difference of `eval`.
    fn d11(&self, xi: f64, eta: f64) -> f64 {
        let s = numerics::fd_step2(xi);
        (self.eval(xi + s, eta) - 2.0 * self.eval(xi, eta) + self.eval(xi - s, eta)) / (s * s)
    }

    /// `∂₂₂h`, defaulting to a centered second difference of `eval`.
    fn d22(&self, xi: f64, eta: f64) -> f64 {
        let s = numerics::fd_step2(eta);
        (self.eval(xi, eta + s) - 2.0 * self.eval(xi, eta) + self.eval(xi, eta - s)) / (s * s)
    }

    /// A Lipschitz constant for `h` on the working strip (one period
    /// of states, padded by one unit on each side).
    fn lipschitz_bound(&self) -> f64;

    /// A positive lower bound `δ` with `∂₁₂h ≤ -δ` everywhere.
    fn twist_lower_bound(&self) -> f64;
}

/// Nearest-neighbor chain with harmonic coupling and a cosine on-site
/// potential:
///
/// ```text
/// h(ξ, η) = ½ [ C (ξ - η)² + V(ξ) + V(η) ],   V(x) = λ (1 - cos 2πx).
/// ```
///
/// Splitting the on-site term symmetrically keeps `h` symmetric in its
/// arguments, which several bounds in [`crate::minimize`] exploit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrenkelKontorova {
    coupling: f64,
    amplitude: f64,
}

impl FrenkelKontorova {
    /// Creates the model. `coupling` must be positive and finite;
    /// `amplitude` must be nonnegative and finite (zero is allowed and
    /// gives the integrable chain, which has no isolated ground pair).
    pub fn new(coupling: f64, amplitude: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive and finite, got {coupling}"
            )));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be nonnegative and finite, got {amplitude}"
            )));
        }
        Ok(FrenkelKontorova {
            coupling,
            amplitude,
        })
    }

    /// Coupling constant `C`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// On-site amplitude `λ`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// On-site potential `V(x) = λ (1 - cos 2πx)`.
    pub fn potential(&self, x: f64) -> f64 {
        self.amplitude * (1.0 - (2.0 * PI * x).cos())
    }

    fn potential_d(&self, x: f64) -> f64 {
        2.0 * PI * self.amplitude * (2.0 * PI * x).sin()
    }

    fn potential_dd(&self, x: f64) -> f64 {
        4.0 * PI * PI * self.amplitude * (2.0 * PI * x).cos()
    }
}

impl GeneratingFunction for FrenkelKontorova {
    fn eval(&self, xi: f64, eta: f64) -> f64 {
        let d = xi - eta;
        0.5 * (self.coupling * d * d + self.potential(xi) + self.potential(eta))
    }

    fn d1(&self, xi: f64, eta: f64) -> f64 {
        self.coupling * (xi - eta) + 0.5 * self.potential_d(xi)
    }

    fn d2(&self, xi: f64, eta: f64) -> f64 {
        self.coupling * (eta - xi) + 0.5 * self.potential_d(eta)
    }

    fn d12(&self, _xi: f64, _eta: f64) -> f64 {
        -self.coupling
    }

    fn d11(&self, xi: f64, _eta: f64) -> f64 {
        self.coupling + 0.5 * self.potential_dd(xi)
    }

    fn d22(&self, _xi: f64, eta: f64) -> f64 {
        self.coupling + 0.5 * self.potential_dd(eta)
    }

    fn lipschitz_bound(&self) -> f64 {
        // |∂₁h| ≤ C |ξ-η| + πλ ≤ 3C + πλ on the padded strip, where
        // |ξ-η| ≤ 3 (one period plus one unit of padding each side).
        3.0 * self.coupling + PI * self.amplitude
    }

    fn twist_lower_bound(&self) -> f64 {
        self.coupling
    }
}

/// Same chain as [`FrenkelKontorova`], but with the on-site potential
/// given by a periodic cubic spline through uniform samples.
///
/// Derivatives of the potential come from the spline, so only
/// `∂₁₂h = -C` is exact; curvature terms carry spline error. The
/// Lipschitz constant is measured on a dense grid and padded.
#[derive(Debug, Clone)]
pub struct TabulatedFk {
    coupling: f64,
    potential: PeriodicSpline,
    lipschitz: f64,
}

impl TabulatedFk {
    /// Builds the model from `samples` of the on-site potential at
    /// `x = i / samples.len()`. Requires positive finite `coupling`
    /// and at least 4 samples.
    pub fn new(coupling: f64, samples: &[f64]) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive and finite, got {coupling}"
            )));
        }
        let potential = PeriodicSpline::new(samples)?;
        // Measure max |V'| on a grid 8× finer than the knots, then pad
        // by 5% to absorb between-sample wiggle.
        let fine = samples.len() * 8;
        let mut max_dv: f64 = 0.0;
        for i in 0..fine {
            let x = i as f64 / fine as f64;
            max_dv = max_dv.max(potential.deriv(x).abs());
        }
        let lipschitz = 3.0 * coupling + 0.5 * max_dv * 1.05;
        Ok(TabulatedFk {
            coupling,
            potential,
            lipschitz,
        })
    }

    /// Coupling constant `C`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
}

impl GeneratingFunction for TabulatedFk {
    fn eval(&self, xi: f64, eta: f64) -> f64 {
        let d = xi - eta;
        0.5 * (self.coupling * d * d + self.potential.eval(xi) + self.potential.eval(eta))
    }

    fn d1(&self, xi: f64, eta: f64) -> f64 {
        self.coupling * (xi - eta) + 0.5 * self.potential.deriv(xi)
    }

    fn d2(&self, xi: f64, eta: f64) -> f64 {
        self.coupling * (eta - xi) + 0.5 * self.potential.deriv(eta)
    }

    fn d12(&self, _xi: f64, _eta: f64) -> f64 {
        -self.coupling
    }

    fn d11(&self, xi: f64, _eta: f64) -> f64 {
        self.coupling + 0.5 * self.potential.second_deriv(xi)
    }

    fn d22(&self, _xi: f64, eta: f64) -> f64 {
        self.coupling + 0.5 * self.potential.second_deriv(eta)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    fn twist_lower_bound(&self) -> f64 {
        self.coupling
    }
}

/// Serializable model description, as accepted in run configuration
/// files.
///
/// ```json
/// {"model": "frenkel-kontorova", "coupling": 1.0, "amplitude": 2.0}
/// {"model": "fk-tabulated", "coupling": 1.0, "samples": [0.0, …]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model")]
pub enum ModelSpec {
    /// Cosine on-site potential.
    #[serde(rename = "frenkel-kontorova")]
    FrenkelKontorova { coupling: f64, amplitude: f64 },
    /// Spline on-site potential through uniform samples.
    #[serde(rename = "fk-tabulated")]
    FkTabulated { coupling: f64, samples: Vec<f64> },
}

/// A constructed model, dispatching to the concrete implementation.
#[derive(Debug, Clone)]
pub enum FkModel {
    /// Cosine on-site potential.
    Cosine(FrenkelKontorova),
    /// Tabulated on-site potential.
    Tabulated(TabulatedFk),
}

impl ModelSpec {
    /// Validates parameters and builds the model.
    pub fn build(&self) -> Result<FkModel> {
        match self {
            ModelSpec::FrenkelKontorova {
                coupling,
                amplitude,
            } => Ok(FkModel::Cosine(FrenkelKontorova::new(
                *coupling, *amplitude,
            )?)),
            ModelSpec::FkTabulated { coupling, samples } => {
                Ok(FkModel::Tabulated(TabulatedFk::new(*coupling, samples)?))
            }
        }
    }
}

impl GeneratingFunction for FkModel {
    fn eval(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.eval(xi, eta),
            FkModel::Tabulated(m) => m.eval(xi, eta),
        }
    }
    fn d1(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.d1(xi, eta),
            FkModel::Tabulated(m) => m.d1(xi, eta),
        }
    }
    fn d2(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.d2(xi, eta),
            FkModel::Tabulated(m) => m.d2(xi, eta),
        }
    }
    fn d12(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.d12(xi, eta),
            FkModel::Tabulated(m) => m.d12(xi, eta),
        }
    }
    fn d11(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.d11(xi, eta),
            FkModel::Tabulated(m) => m.d11(xi, eta),
        }
    }
    fn d22(&self, xi: f64, eta: f64) -> f64 {
        match self {
            FkModel::Cosine(m) => m.d22(xi, eta),
            FkModel::Tabulated(m) => m.d22(xi, eta),
        }
    }
    fn lipschitz_bound(&self) -> f64 {
        match self {
            FkModel::Cosine(m) => m.lipschitz_bound(),
            FkModel::Tabulated(m) => m.lipschitz_bound(),
        }
    }
    fn twist_lower_bound(&self) -> f64 {
        match self {
            FkModel::Cosine(m) => m.twist_lower_bound(),
            FkModel::Tabulated(m) => m.twist_lower_bound(),
        }
    }
}

/// One step of the twist map on a caller-supplied bracket for the new
/// position: solves `∂₁h(x, X) = -y` for `X ∈ [bracket.0, bracket.1]`,
/// then returns `(X, Y)` with `Y = ∂₂h(x, X)`.
///
/// Errors with [`Error::Bracket`] if the bracket does not straddle the
/// root.
pub fn twist_map_step(
    h: &dyn GeneratingFunction,
    x: f64,
    y: f64,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let g = |cap_x: f64| (h.d1(x, cap_x) + y, h.d12(x, cap_x));
    let root = numerics::decreasing_root(g, bracket.0, bracket.1, ROOT_TOL)?;
    Ok((root, h.d2(x, root)))
}

/// One step of the twist map with an automatic bracket.
///
/// With `g(X) = ∂₁h(x, X) + y` and twist bound `δ`, the radius
/// `T = |g(x)|/δ + 1` guarantees `g(x - T) ≥ δ > 0 > -δ ≥ g(x + T)`,
/// so the bracket `[x - T, x + T]` always straddles the root.
pub fn twist_map_step_auto(h: &dyn GeneratingFunction, x: f64, y: f64) -> Result<(f64, f64)> {
    let delta = h.twist_lower_bound();
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(
            "twist lower bound must be positive".into(),
        ));
    }
    let radius = (h.d1(x, x) + y).abs() / delta + 1.0;
    twist_map_step(h, x, y, (x - radius, x + radius))
}

/// One step of the inverse twist map: given `(X, Y)`, solves
/// `∂₂h(x, X) = Y` for the previous position `x`, then returns
/// `(x, y)` with `y = -∂₁h(x, X)`.
pub fn twist_map_step_inverse(
    h: &dyn GeneratingFunction,
    cap_x: f64,
    cap_y: f64,
) -> Result<(f64, f64)> {
    let delta = h.twist_lower_bound();
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(
            "twist lower bound must be positive".into(),
        ));
    }
    // g(x) = ∂₂h(x, X) - Y has derivative ∂₁₂h ≤ -δ, so it is strictly
    // decreasing in x and the same bracket logic applies.
    let radius = (h.d2(cap_x, cap_x) - cap_y).abs() / delta + 1.0;
    let g = |x: f64| (h.d2(x, cap_x) - cap_y, h.d12(x, cap_x));
    let root = numerics::decreasing_root(g, cap_x - radius, cap_x + radius, ROOT_TOL)?;
    Ok((root, -h.d1(root, cap_x)))
}

/// A forward orbit of the twist map together with a stationarity
/// diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitResult {
    /// `(x_i, y_i)` for `i = 0..=steps`.
    pub points: Vec<(f64, f64)>,
    /// Max over interior orbit points of
    /// `|∂₂h(x_{i-1}, x_i) + ∂₁h(x_i, x_{i+1})|`; near zero when the
    /// positions form a stationary configuration of the action.
    pub max_residual: f64,
}

/// Iterates the twist map `steps` times from `(x0, y0)` using
/// automatic brackets, and reports the discrete stationarity residual
/// of the resulting position sequence.
pub fn iterate_map(
    h: &dyn GeneratingFunction,
    x0: f64,
    y0: f64,
    steps: usize,
) -> Result<OrbitResult> {
    let mut points = Vec::with_capacity(steps + 1);
    points.push((x0, y0));
    let (mut x, mut y) = (x0, y0);
    for _ in 0..steps {
        let (nx, ny) = twist_map_step_auto(h, x, y)?;
        points.push((nx, ny));
        x = nx;
        y = ny;
    }
    let mut max_residual: f64 = 0.0;
    for i in 1..points.len().saturating_sub(1) {
        let r = h.d2(points[i - 1].0, points[i].0) + h.d1(points[i].0, points[i + 1].0);
        max_residual = max_residual.max(r.abs());
    }
    Ok(OrbitResult {
        points,
        max_residual,
    })
}
