//! Outcome of a single numerical inequality check.
//!
//! Every check is normalized to the direction `lhs <= rhs`; a lower bound
//! `a >= b` is reported with `lhs = b` and `rhs = a`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative when the inequality is violated before tolerance.
    pub margin: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl CheckReport {
    /// Report for `lhs <= rhs + tolerance`.
    pub fn le(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        let holds = lhs <= rhs + tolerance;
        Self {
            lhs,
            rhs,
            margin,
            tolerance,
            holds,
        }
    }

    /// Report for `big >= small - tolerance`, stored as `small <= big`.
    pub fn ge(big: f64, small: f64, tolerance: f64) -> Self {
        Self::le(small, big, tolerance)
    }

    /// Report for `|a - b| <= tolerance`; `lhs` is the deviation, `rhs` zero.
    pub fn close(a: f64, b: f64, tolerance: f64) -> Self {
        Self::le((a - b).abs(), 0.0, tolerance)
    }

    /// Combine two reports; the result holds only if both do and carries the tighter margin.
    pub fn and(self, other: CheckReport) -> CheckReport {
        let worst = if other.margin + other.tolerance < self.margin + self.tolerance {
            other
        } else {
            self
        };
        CheckReport {
            holds: self.holds && other.holds,
            ..worst
        }
    }
}
