//! Grid verification of the structural hypotheses behind the
//! variational theory.
//!
//! The solvers in this crate are only meaningful when the generating
//! function satisfies, on the working strip:
//!
//! 1. **periodicity** — `h(ξ+1, η+1) = h(ξ, η)`;
//! 2. **coercivity** — `h(ξ, ξ+η) → ∞` as `|η| → ∞`, uniformly in `ξ`;
//! 3. **submodularity** — crossing two steps never beats aligning
//!    them, quantitatively: for `ξ < ξ̄`, `η < η̄`,
//!    `h(ξ, η̄) + h(ξ̄, η) - h(ξ, η) - h(ξ̄, η̄) ≥ δ (ξ̄-ξ)(η̄-η)`;
//! 4. **uniform twist** — `∂₁₂h ≤ -δ < 0`;
//! 5. **bounded curvature** — second differences in each argument are
//!    dominated by a finite constant `θ`.
//!
//! [`check_hypotheses`] samples each condition on a finite grid and
//! reports the worst margin plus a witness point for failures. A grid
//! check cannot prove the hypotheses, but it reliably catches models
//! that break them, and the margins quantify how robustly they hold.

use serde::Serialize;

use crate::genfn::GeneratingFunction;

/// Result of one hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    /// Short identifier: `"periodicity"`, `"coercivity"`,
    /// `"submodularity"`, `"twist"`, or `"curvature"`.
    pub name: &'static str,
    /// Whether the condition held at every sampled point.
    pub passed: bool,
    /// Worst margin observed; the condition's inequality holds with
    /// this much slack (negative means violated).
    pub worst_margin: f64,
    /// Sample point realizing the worst margin, as up to four
    /// coordinates `[ξ, η, ξ̄, η̄]` (unused entries are zero).
    pub witness: [f64; 4],
    /// Human-readable description of what was tested.
    pub detail: String,
}

/// Outcome of the full hypothesis battery on a strip.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Strip that was sampled, as `((ξ_lo, ξ_hi), (η_lo, η_hi))`.
    pub strip: ((f64, f64), (f64, f64)),
    /// Grid points per axis.
    pub grid_n: usize,
    /// The model's declared twist lower bound `δ`.
    pub twist_lower_bound: f64,
    /// Individual check results.
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Names of the failed checks.
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

/// Tolerance for the exact-equality checks (periodicity).
const TOL_EQ: f64 = 1e-12;
/// Slack granted to inequality checks to absorb rounding.
const TOL_INEQ: f64 = 1e-9;

/// Runs all hypothesis checks for `h` on the strip with `grid_n`
/// points per axis.
///
/// The submodularity check is quartic in `grid_n`; 21 points (the
/// default used by the battery's callers) keeps it around 10⁵
/// evaluations.
pub fn check_hypotheses(
    h: &dyn GeneratingFunction,
    strip: ((f64, f64), (f64, f64)),
    grid_n: usize,
) -> HypothesisReport {
    let n = grid_n.max(3);
    let ((xlo, xhi), (ylo, yhi)) = strip;
    let xs: Vec<f64> = (0..n)
        .map(|i| xlo + (xhi - xlo) * i as f64 / (n - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| ylo + (yhi - ylo) * i as f64 / (n - 1) as f64)
        .collect();
    let delta = h.twist_lower_bound();

    let mut checks = Vec::new();

    // Periodicity: h(ξ+1, η+1) = h(ξ, η).
    {
        let mut worst = f64::INFINITY;
        let mut witness = [0.0; 4];
        for &xi in &xs {
            for &eta in &ys {
                let margin = TOL_EQ - (h.eval(xi + 1.0, eta + 1.0) - h.eval(xi, eta)).abs();
                if margin < worst {
                    worst = margin;
                    witness = [xi, eta, 0.0, 0.0];
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "periodicity",
            passed: worst >= 0.0,
            worst_margin: worst,
            witness,
            detail: format!("|h(ξ+1,η+1) - h(ξ,η)| ≤ {TOL_EQ:.0e} on the grid"),
        });
    }

    // Coercivity: along doubling gaps η = 2^k, the diagonal sections
    // ξ ↦ h(ξ, ξ±η) must increase strictly and by a bounded-below
    // total amount.
    {
        let mut worst = f64::INFINITY;
        let mut witness = [0.0; 4];
        for &xi in &xs {
            for sign in [-1.0, 1.0] {
                let vals: Vec<f64> = (0..7)
                    .map(|k| h.eval(xi, xi + sign * f64::powi(2.0, k)))
                    .collect();
                for k in 0..vals.len() - 1 {
                    let growth = vals[k + 1] - vals[k];
                    if growth < worst {
                        worst = growth;
                        witness = [xi, xi + sign * f64::powi(2.0, k as i32), 0.0, 0.0];
                    }
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "coercivity",
            passed: worst > 0.0,
            worst_margin: worst,
            witness,
            detail: "h(ξ, ξ±2^{k+1}) > h(ξ, ξ±2^k) for k = 0..6".into(),
        });
    }

    // Submodularity with the twist constant: for ξ < ξ̄ and η < η̄,
    // crossing minus aligning is at least δ (ξ̄-ξ)(η̄-η).
    {
        let mut worst = f64::INFINITY;
        let mut witness = [0.0; 4];
        for i in 0..n {
            for ib in (i + 1)..n {
                for j in 0..n {
                    for jb in (j + 1)..n {
                        let (xi, xib) = (xs[i], xs[ib]);
                        let (eta, etab) = (ys[j], ys[jb]);
                        let crossed = h.eval(xi, etab) + h.eval(xib, eta);
                        let aligned = h.eval(xi, eta) + h.eval(xib, etab);
                        let margin =
                            crossed - aligned - delta * (xib - xi) * (etab - eta) + TOL_INEQ;
                        if margin < worst {
                            worst = margin;
                            witness = [xi, eta, xib, etab];
                        }
                    }
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "submodularity",
            passed: worst >= 0.0,
            worst_margin: worst,
            witness,
            detail: format!("h(ξ,η̄)+h(ξ̄,η)-h(ξ,η)-h(ξ̄,η̄) ≥ δ(ξ̄-ξ)(η̄-η) with δ = {delta}"),
        });
    }

    // Uniform twist: ∂₁₂h ≤ -δ pointwise.
    {
        let mut worst = f64::INFINITY;
        let mut witness = [0.0; 4];
        for &xi in &xs {
            for &eta in &ys {
                let margin = -delta - h.d12(xi, eta) + TOL_INEQ;
                if margin < worst {
                    worst = margin;
                    witness = [xi, eta, 0.0, 0.0];
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "twist",
            passed: worst >= 0.0,
            worst_margin: worst,
            witness,
            detail: format!("∂₁₂h ≤ -δ with declared δ = {delta}"),
        });
    }

    // Bounded curvature: second differences in each argument are
    // dominated by θ s² for θ = 1 + max sampled |∂₁₁h|, |∂₂₂h|.
    {
        let mut theta: f64 = 0.0;
        for &xi in &xs {
            for &eta in &ys {
                theta = theta.max(h.d11(xi, eta).abs()).max(h.d22(xi, eta).abs());
            }
        }
        theta += 1.0;
        let sx = (xhi - xlo) / (n - 1) as f64;
        let sy = (yhi - ylo) / (n - 1) as f64;
        let mut worst = f64::INFINITY;
        let mut witness = [0.0; 4];
        for &xi in &xs {
            for &eta in &ys {
                let dxx = h.eval(xi - sx, eta) - 2.0 * h.eval(xi, eta) + h.eval(xi + sx, eta);
                let dyy = h.eval(xi, eta - sy) - 2.0 * h.eval(xi, eta) + h.eval(xi, eta + sy);
                let m1 = theta * sx * sx - dxx.abs() + TOL_INEQ;
                let m2 = theta * sy * sy - dyy.abs() + TOL_INEQ;
                let m = m1.min(m2);
                if m < worst {
                    worst = m;
                    witness = [xi, eta, 0.0, 0.0];
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "curvature",
            passed: worst >= 0.0,
            worst_margin: worst,
            witness,
            detail: format!("second differences bounded by θ s² with θ = {theta:.6}"),
        });
    }

    HypothesisReport {
        strip,
        grid_n: n,
        twist_lower_bound: delta,
        checks,
    }
}

/// Default strip for the battery: one period of states padded by half
/// a unit on each side.
pub fn default_strip() -> ((f64, f64), (f64, f64)) {
    ((-0.5, 1.5), (-0.5, 1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfn::FrenkelKontorova;

    #[test]
    fn cosine_model_passes_all_checks() {
        let h = FrenkelKontorova::new(1.0, 1.0).unwrap();
        let report = check_hypotheses(&h, default_strip(), 21);
        assert!(report.all_passed(), "failed: {:?}", report.failed());
        // The twist check should hold with essentially zero slack for
        // this model, because ∂₁₂h ≡ -C = -δ exactly.
        let twist = report.checks.iter().find(|c| c.name == "twist").unwrap();
        assert!(twist.worst_margin <= 2.0 * TOL_INEQ);
    }

    #[test]
    fn integrable_chain_passes() {
        let h = FrenkelKontorova::new(2.0, 0.0).unwrap();
        let report = check_hypotheses(&h, default_strip(), 15);
        assert!(report.all_passed(), "failed: {:?}", report.failed());
    }

    #[test]
    fn anti_twist_model_fails_submodularity_with_witness() {
        // h(ξ,η) = +½(ξ+η)² has ∂₁₂h = +1: the crossing inequality and
        // the twist bound both fail.
        struct AntiTwist;
        impl GeneratingFunction for AntiTwist {
            fn eval(&self, xi: f64, eta: f64) -> f64 {
                0.5 * (xi + eta) * (xi + eta)
            }
            fn lipschitz_bound(&self) -> f64 {
                6.0
            }
            fn twist_lower_bound(&self) -> f64 {
                1.0
            }
        }
        let report = check_hypotheses(&AntiTwist, default_strip(), 9);
        assert!(!report.all_passed());
        let failed = report.failed();
        assert!(failed.contains(&"submodularity"));
        assert!(failed.contains(&"twist"));
        let sub = report
            .checks
            .iter()
            .find(|c| c.name == "submodularity")
            .unwrap();
        assert!(sub.worst_margin < 0.0);
        // The witness must be an actual violating quadruple.
        let [xi, eta, xib, etab] = sub.witness;
        assert!(xi < xib && eta < etab);
    }

    #[test]
    fn report_serializes() {
        let h = FrenkelKontorova::new(1.0, 0.5).unwrap();
        let report = check_hypotheses(&h, default_strip(), 9);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("submodularity"));
        assert!(json.contains("worst_margin"));
    }
}
