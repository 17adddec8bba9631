use std::fmt;

use serde::{Deserialize, Serialize};

/// Relaxation sequence `k ↦ s_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "c", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `s_k = c`
    Constant(f64),
    /// `s_k = c + 1/(k+2)`
    ConstantPlusInverse(f64),
    /// `s_k = c − 1/(k+2)`
    ConstantMinusInverse(f64),
    /// `s_k = 1 − 1/(k+2)`
    HalpernLieder,
}

impl StepSchedule {
    pub fn value(&self, k: usize) -> f64 {
        let inv = 1.0 / (k as f64 + 2.0);
        match *self {
            StepSchedule::Constant(c) => c,
            StepSchedule::ConstantPlusInverse(c) => c + inv,
            StepSchedule::ConstantMinusInverse(c) => c - inv,
            StepSchedule::HalpernLieder => 1.0 - inv,
        }
    }

    /// `(min, max)` of `s_k` over `0 ≤ k ≤ kmax`. Every preset is monotone in
    /// `k`, so the endpoints suffice.
    pub fn range(&self, kmax: usize) -> (f64, f64) {
        let a = self.value(0);
        let b = self.value(kmax);
        (a.min(b), a.max(b))
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Constant(c) => write!(f, "s_k = {c}"),
            StepSchedule::ConstantPlusInverse(c) => write!(f, "s_k = {c} + 1/(k+2)"),
            StepSchedule::ConstantMinusInverse(c) => write!(f, "s_k = {c} - 1/(k+2)"),
            StepSchedule::HalpernLieder => f.write_str("s_k = 1 - 1/(k+2)"),
        }
    }
}
