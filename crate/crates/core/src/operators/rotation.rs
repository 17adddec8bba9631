//! The skew linear map `A = (1/(M−1)) [[0, I], [−I, 0]]` on `R^{2n}` and its
//! resolvent.

use super::{AveragedOperator, Vector};
use crate::error::{Error, Result};

/// Maximally monotone skew map on `R^{2n}` coupling coordinates `i` and
/// `n + i` with strength `a = 1/(M−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationGenerator {
    half_dim: usize,
    m_const: f64,
}

impl RotationGenerator {
    pub fn new(half_dim: usize, m_const: f64) -> Result<Self> {
        if half_dim == 0 {
            return Err(Error::invalid("n violates n ≥ 1"));
        }
        if !(m_const > 1.0 && m_const.is_finite()) {
            return Err(Error::invalid(format!("M = {m_const} violates M > 1")));
        }
        Ok(Self { half_dim, m_const })
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    pub fn coupling(&self) -> f64 {
        1.0 / (self.m_const - 1.0)
    }

    /// `A x`
    pub fn apply(&self, x: &Vector) -> Vector {
        let n = self.half_dim;
        let a = self.coupling();
        Vector::from_fn(2 * n, |j| if j < n { a * x[n + j] } else { -a * x[j - n] })
    }

    /// `(Id + A)^{-1} x`, solved pairwise in closed form.
    pub fn resolve(&self, x: &Vector) -> Vector {
        let n = self.half_dim;
        let a = self.coupling();
        let det = 1.0 + a * a;
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let (p, q) = (x[i], x[n + i]);
            out[i] = (p - a * q) / det;
            out[n + i] = (a * p + q) / det;
        }
        Vector::from_raw(out)
    }

    /// `J_A` as a ½-averaged operator with fixed point 0.
    pub fn resolvent_operator(&self) -> Result<AveragedOperator> {
        let gen = *self;
        let op = AveragedOperator::new(self.dim(), 0.5, move |x: &Vector| gen.resolve(x))?
            .with_label("rotation-resolvent")
            .with_fixed_point(Vector::zeros(self.dim()))?;
        Ok(op)
    }
}

pub fn make_rotation_resolvent(n: usize, m_const: f64) -> Result<AveragedOperator> {
    RotationGenerator::new(n, m_const)?.resolvent_operator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::check_cocoercivity;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn resolvent_of_unit_vector_with_unit_coupling() {
        // (I + A) = [[1, 1], [-1, 1]], inverse ½[[1, -1], [1, 1]].
        let op = make_rotation_resolvent(1, 2.0).unwrap();
        let y = op.evaluate(&Vector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 0.5, epsilon = 1e-14);
        let r = op
            .residual_map(&Vector::new(vec![1.0, 0.0]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(r[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn origin_is_fixed_exactly() {
        for (n, m) in [(1, 2.0), (7, 1.5), (40, 100.0)] {
            let op = make_rotation_resolvent(n, m).unwrap();
            assert_eq!(
                op.evaluate(&Vector::zeros(2 * n)).unwrap(),
                Vector::zeros(2 * n)
            );
            assert_eq!(op.known_fixed_point(), Some(&Vector::zeros(2 * n)));
        }
    }

    #[test]
    fn large_m_approaches_identity() {
        let op = make_rotation_resolvent(1, 1e9).unwrap();
        let y = op.evaluate(&Vector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_rotation_resolvent(1, 1.0).is_err());
        assert!(make_rotation_resolvent(1, 0.5).is_err());
        assert!(make_rotation_resolvent(0, 2.0).is_err());
    }

    #[test]
    fn cocoercive_on_seeded_pairs() {
        let op = make_rotation_resolvent(1, 2.0).unwrap();
        let report = check_cocoercivity(&op, 1000, 7).unwrap();
        assert_eq!(report.violations, 0);
    }

    proptest! {
        #[test]
        fn resolvent_inverts_id_plus_a_and_a_is_skew(
            coords in prop::collection::vec(-100.0f64..100.0, 6),
            m in 1.01f64..50.0,
        ) {
            let gen = RotationGenerator::new(3, m).unwrap();
            let x = Vector::new(coords).unwrap();
            let ax = gen.apply(&x);
            prop_assert!(ax.inner(&x).abs() <= 1e-12 * x.norm_sq().max(1.0));
            let y = gen.resolve(&x);
            let back = &y + &gen.apply(&y);
            prop_assert!(back.distance(&x) <= 1e-12 * x.norm().max(1.0));
            prop_assert!(y.norm() <= x.norm() * (1.0 + 1e-15));
        }
    }
}
