//! Bi-infinite configurations with finite explicit windows.
//!
//! A configuration assigns a real position `x_i` to every integer site
//! `i`. Numerically we store a finite window of values plus a symbolic
//! description of each tail: constant at one of the two reference
//! states, or periodic with a rational rotation (`x_{i+q} = x_i + p`).
//! All action evaluation and solver code reads sites through
//! [`Configuration::value_at`], so tails participate exactly, never by
//! truncation.

use serde::{Deserialize, Serialize};

use crate::action::NeighboringPair;
use crate::error::Error;
use crate::Result;

/// Symbolic tail of a configuration outside its explicit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Constant at the lower reference state `u⁰`.
    U0,
    /// Constant at the upper reference state `u¹`.
    U1,
    /// Periodic continuation `x_{i±q} = x_i ± p` of the window edge.
    Periodic(u32, i64),
}

/// A bi-infinite configuration: explicit values on a window plus tails.
///
/// `values[j]` is the position at site `lo + j`. The JSON form is
///
/// ```json
/// {"lo": -2, "values": [0.1, 0.5, 0.9],
///  "left_tail": "u0", "right_tail": {"periodic": [2, 1]}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Site index of the first explicit value.
    pub lo: i64,
    /// Explicit positions on the window.
    pub values: Vec<f64>,
    /// Tail for sites below `lo`.
    pub left_tail: Tail,
    /// Tail for sites above `lo + values.len() - 1`.
    pub right_tail: Tail,
}

impl Configuration {
    /// Builds and validates a configuration.
    pub fn new(lo: i64, values: Vec<f64>, left_tail: Tail, right_tail: Tail) -> Result<Self> {
        let c = Configuration {
            lo,
            values,
            left_tail,
            right_tail,
        };
        c.validate()?;
        Ok(c)
    }

    /// Constant configuration on a single site.
    pub fn constant(value: f64, left_tail: Tail, right_tail: Tail) -> Result<Self> {
        Configuration::new(0, vec![value], left_tail, right_tail)
    }

    /// Site index of the last explicit value.
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    /// Number of explicit values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the window is empty (never holds after validation).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks structural invariants: nonempty finite window, and each
    /// periodic tail period no longer than the window (so the periodic
    /// continuation is determined by stored values).
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter(
                "configuration window must be nonempty".into(),
            ));
        }
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ConstraintViolation {
                index: self.lo + j as i64,
                detail: "non-finite value".into(),
            });
        }
        for (side, tail) in [("left", self.left_tail), ("right", self.right_tail)] {
            if let Tail::Periodic(q, _) = tail {
                if q == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "{side} tail period must be positive"
                    )));
                }
                if q as usize > self.values.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{side} tail period {q} exceeds window length {}",
                        self.values.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Position at an arbitrary site, extending by the tails.
    ///
    /// `pair` supplies the reference values for constant tails; sites
    /// inside the window never consult it.
    pub fn value_at(&self, i: i64, pair: &NeighboringPair) -> f64 {
        self.value_at_with(i, Some(pair))
            .expect("constant tails resolved via the supplied pair")
    }

    /// Position at an arbitrary site; returns `None` when a constant
    /// tail is hit and no reference pair is available.
    pub fn value_at_with(&self, i: i64, pair: Option<&NeighboringPair>) -> Option<f64> {
        let hi = self.hi();
        if i >= self.lo && i <= hi {
            return Some(self.values[(i - self.lo) as usize]);
        }
        let (tail, edge) = if i < self.lo {
            (self.left_tail, self.lo)
        } else {
            (self.right_tail, hi)
        };
        match tail {
            Tail::U0 => pair.map(|p| p.u0),
            Tail::U1 => pair.map(|p| p.u1),
            Tail::Periodic(q, p_shift) => {
                let q = q as i64;
                // Map i into the window by whole periods; each period of
                // q sites shifts the position by p_shift. Validation
                // guarantees q ≤ window length, so the mapped site lands
                // inside the window.
                let periods = if i < self.lo {
                    -(self.lo - i + q - 1).div_euclid(q)
                } else {
                    (i - edge + q - 1).div_euclid(q)
                };
                let k = i - periods * q;
                debug_assert!(k >= self.lo && k <= hi);
                Some(self.values[(k - self.lo) as usize] + (periods * p_shift) as f64)
            }
        }
    }

    /// Forward and backward rotation numbers implied by the tails,
    /// as `(backward, forward)`: constant tails rotate at 0, periodic
    /// tails at `p/q`.
    pub fn rotation_number(&self) -> (f64, f64) {
        let rate = |tail: Tail| match tail {
            Tail::U0 | Tail::U1 => 0.0,
            Tail::Periodic(q, p) => p as f64 / q as f64,
        };
        (rate(self.left_tail), rate(self.right_tail))
    }

    /// Finite-window rotation estimate `(x_lo / lo, x_hi / hi)`,
    /// skipping an endpoint when its site index is zero.
    pub fn window_rotation_estimate(&self) -> (Option<f64>, Option<f64>) {
        let hi = self.hi();
        let left = (self.lo != 0).then(|| self.values[0] / self.lo as f64);
        let right = (hi != 0).then(|| self.values[self.values.len() - 1] / hi as f64);
        (left, right)
    }
}
