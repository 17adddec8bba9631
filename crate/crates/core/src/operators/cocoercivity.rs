//! Sampled check of `<x−y, Fx−Fy> ≥ (1/(2θ)) ||Fx−Fy||²` for `F = Id − T`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{AveragedOperator, Vector};
use crate::error::{Error, Result};

/// Relative tolerance on the cocoercivity margin.
pub const COCOERCIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocoercivityReport {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest raw margin seen over all pairs.
    pub worst_margin: f64,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    Vector::from_fn(dim, |_| StandardNormal.sample(rng))
}

/// Samples `num_pairs` standard-normal pairs and counts margins below
/// `−1e−9 · max(1, ||x−y||²)`.
pub fn check_cocoercivity(
    op: &AveragedOperator,
    num_pairs: usize,
    rng_seed: u64,
) -> Result<CocoercivityReport> {
    if num_pairs == 0 {
        return Err(Error::invalid("num_pairs violates num_pairs ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let coef = 1.0 / (2.0 * op.theta());
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..num_pairs {
        let x = gaussian(&mut rng, op.dim());
        let y = gaussian(&mut rng, op.dim());
        let dr = &op.residual_map(&x)? - &op.residual_map(&y)?;
        let dx = &x - &y;
        let margin = dx.inner(&dr) - coef * dr.norm_sq();
        let scale = dx.norm_sq().max(1.0);
        if margin < -COCOERCIVITY_TOL * scale {
            violations += 1;
        }
        worst = worst.min(margin);
    }
    Ok(CocoercivityReport {
        pairs: num_pairs,
        violations,
        worst_margin: worst,
    })
}

/// Largest `||S(x) − T(x)||` over `samples` standard-normal points.
pub fn max_pointwise_gap(
    lhs: &AveragedOperator,
    rhs: &AveragedOperator,
    samples: usize,
    rng_seed: u64,
) -> Result<f64> {
    if lhs.dim() != rhs.dim() {
        return Err(Error::DimensionMismatch {
            expected: lhs.dim(),
            found: rhs.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut gap: f64 = 0.0;
    for _ in 0..samples {
        let x = gaussian(&mut rng, lhs.dim());
        gap = gap.max(lhs.evaluate(&x)?.distance(&rhs.evaluate(&x)?));
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_margins() {
        let op = AveragedOperator::new(3, 0.5, |x: &Vector| x.clone()).unwrap();
        let report = check_cocoercivity(&op, 50, 1).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.worst_margin, 0.0);
    }

    #[test]
    fn misdeclared_negation_is_caught() {
        // x = 1, y = 0: margin = 2 − 4 < 0.
        let op = AveragedOperator::new(1, 0.5, |x: &Vector| x.scale(-1.0)).unwrap();
        let report = check_cocoercivity(&op, 100, 9).unwrap();
        assert!(report.violations > 0);
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn zero_pairs_rejected() {
        let op = AveragedOperator::new(1, 0.5, |x: &Vector| x.clone()).unwrap();
        assert!(check_cocoercivity(&op, 0, 1).is_err());
    }
}
