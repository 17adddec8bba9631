//! Single-step updates of each scheme.
//!
//! The `*_update` functions are pure arithmetic on already-evaluated operator
//! values, which is what [`super::run`] uses so that every `T` evaluation is
//! shared between the update and the trace. The `step_*` functions evaluate
//! the operator themselves.

use crate::error::Result;
use crate::operators::{AveragedOperator, Vector};

/// `x_{k+1} = T(x_k)`
pub fn step_banach_picard(op: &AveragedOperator, x: &Vector) -> Result<Vector> {
    op.evaluate(x)
}

/// `x_{k+1} = (1 − s_k) x_k + s_k T(x_k)`
pub fn step_km(op: &AveragedOperator, x: &Vector, s_k: f64) -> Result<Vector> {
    Ok(km_update(x, &op.evaluate(x)?, s_k))
}

pub fn km_update(x: &Vector, t_x: &Vector, s_k: f64) -> Vector {
    Vector::combine(&[(1.0 - s_k, x), (s_k, t_x)])
}

/// `x_{k+1} = (1 − s_k) x_0 + s_k T(x_k)`
pub fn step_halpern(
    op: &AveragedOperator,
    anchor: &Vector,
    x: &Vector,
    s_k: f64,
) -> Result<Vector> {
    Ok(halpern_update(anchor, &op.evaluate(x)?, s_k))
}

pub fn halpern_update(anchor: &Vector, t_x: &Vector, s_k: f64) -> Vector {
    Vector::combine(&[(1.0 - s_k, anchor), (s_k, t_x)])
}

/// Accelerated proximal point state at index `k ≥ 1`: `x_k`, `x_{k−1}`, `y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppmState {
    pub k: usize,
    pub x: Vector,
    pub x_prev: Vector,
    pub y: Vector,
}

impl AppmState {
    /// `y_1 = x_0 = x_1`.
    pub fn start(x0: &Vector) -> Self {
        Self {
            k: 1,
            x: x0.clone(),
            x_prev: x0.clone(),
            y: x0.clone(),
        }
    }
}

/// `y_{k+1} = J(x_k)`,
/// `x_{k+1} = y_{k+1} + k/(k+2) (y_{k+1} − y_k) − k/(k+2) (y_k − x_{k−1})`.
pub fn step_appm(resolvent: &AveragedOperator, state: &AppmState) -> Result<AppmState> {
    let y_next = resolvent.evaluate(&state.x)?;
    let x_next = appm_update(state.k, &state.x_prev, &state.y, &y_next);
    Ok(AppmState {
        k: state.k + 1,
        x_prev: state.x.clone(),
        x: x_next,
        y: y_next,
    })
}

pub fn appm_update(k: usize, x_prev: &Vector, y: &Vector, y_next: &Vector) -> Vector {
    let w = k as f64 / (k as f64 + 2.0);
    // y' + w (y' − y) − w (y − x_{k−1})
    Vector::combine(&[(1.0 + w, y_next), (-2.0 * w, y), (w, x_prev)])
}

/// Scalar weights of the Fast KM recurrence at step `k` on
/// `x_k`, `x_k − x_{k−1}`, `T(x_k)` and `T(x_k) − T(x_{k−1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastKmWeights {
    pub iterate: f64,
    pub momentum: f64,
    pub operator: f64,
    pub correction: f64,
}

impl FastKmWeights {
    pub fn at(alpha: f64, s: f64, k: usize) -> Self {
        let k = k as f64;
        let denom = k + alpha;
        let operator = s * alpha / (2.0 * denom);
        let w = Self {
            iterate: 1.0 - operator,
            momentum: (1.0 - s) * k / denom,
            operator,
            correction: s * k / denom,
        };
        debug_assert!((w.iterate + w.operator - 1.0).abs() <= 4.0 * f64::EPSILON);
        w
    }
}

/// One Fast KM step from `x_k`, `x_{k−1}` and the cached `T(x_k)`,
/// `T(x_{k−1})`.
pub fn step_fast_km(
    alpha: f64,
    s: f64,
    k: usize,
    x: &Vector,
    x_prev: &Vector,
    t_x: &Vector,
    t_x_prev: &Vector,
) -> Vector {
    let w = FastKmWeights::at(alpha, s, k);
    let dx = x - x_prev;
    let dt = t_x - t_x_prev;
    Vector::combine(&[
        (w.iterate, x),
        (w.momentum, &dx),
        (w.operator, t_x),
        (w.correction, &dt),
    ])
}

/// Fast OGDA state at index `k ≥ 1`: `x_k`, `x_{k−1}`, and
/// `g_{k−1} = (Id − T)(y_{k−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct OgdaState {
    pub k: usize,
    pub x: Vector,
    pub x_prev: Vector,
    pub g_prev: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgdaStep {
    pub next: OgdaState,
    /// `y_k`
    pub y: Vector,
}

impl OgdaState {
    pub fn start(op: &AveragedOperator, x0: &Vector, x1: &Vector, y0: &Vector) -> Result<Self> {
        Ok(Self {
            k: 1,
            x: x1.clone(),
            x_prev: x0.clone(),
            g_prev: op.residual_map(y0)?,
        })
    }
}

/// `y_k = x_k + (1 − α/(k+α))(x_k − x_{k−1}) − (αs/(2(k+α))) g_{k−1}`,
/// `x_{k+1} = y_k − (s/2)(1 + k/(k+α))(g_k − g_{k−1})`.
pub fn step_fast_ogda(
    op: &AveragedOperator,
    alpha: f64,
    s: f64,
    state: &OgdaState,
) -> Result<OgdaStep> {
    let k = state.k as f64;
    let denom = k + alpha;
    let dx = &state.x - &state.x_prev;
    let y = Vector::combine(&[
        (1.0, &state.x),
        (1.0 - alpha / denom, &dx),
        (-alpha * s / (2.0 * denom), &state.g_prev),
    ]);
    let g = op.residual_map(&y)?;
    let dg = &g - &state.g_prev;
    let x_next = y.add_scaled(-0.5 * s * (1.0 + k / denom), &dg);
    Ok(OgdaStep {
        next: OgdaState {
            k: state.k + 1,
            x_prev: state.x.clone(),
            x: x_next,
            g_prev: g,
        },
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::make_rotation_resolvent;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn id(dim: usize) -> AveragedOperator {
        AveragedOperator::new(dim, 1.0, |x: &Vector| x.clone()).unwrap()
    }

    fn neg_id(dim: usize) -> AveragedOperator {
        AveragedOperator::new(dim, 1.0, |x: &Vector| x.scale(-1.0)).unwrap()
    }

    #[test]
    fn banach_picard_examples() {
        let x = v(&[2.0, -1.0]);
        assert_eq!(step_banach_picard(&id(2), &x).unwrap(), x);
        // −Id oscillates.
        let mut x = v(&[1.0]);
        for k in 0..6 {
            x = step_banach_picard(&neg_id(1), &x).unwrap();
            assert_eq!(x[0], if k % 2 == 0 { -1.0 } else { 1.0 });
        }
        let y =
            step_banach_picard(&make_rotation_resolvent(1, 2.0).unwrap(), &v(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn km_examples() {
        assert_eq!(step_km(&neg_id(1), &v(&[4.0]), 0.5).unwrap(), v(&[0.0]));
        let op = make_rotation_resolvent(2, 3.0).unwrap();
        let x = v(&[1.0, 2.0, -3.0, 0.5]);
        assert_eq!(
            step_km(&op, &x, 1.0).unwrap(),
            step_banach_picard(&op, &x).unwrap()
        );
        assert!(step_km(&id(4), &x, 0.3).unwrap().distance(&x) <= 1e-15);
    }

    #[test]
    fn halpern_examples() {
        let x0 = v(&[2.0]);
        assert_eq!(step_halpern(&id(1), &x0, &x0, 0.7).unwrap(), x0);
        let op = make_rotation_resolvent(1, 2.0).unwrap();
        let x = v(&[0.3, -0.2]);
        assert_eq!(
            step_halpern(&op, &x0_2(), &x, 1.0).unwrap(),
            op.evaluate(&x).unwrap()
        );
        // Lieder schedule at k = 0 is 1/2.
        assert_eq!(step_halpern(&neg_id(1), &x0, &x0, 0.5).unwrap(), v(&[0.0]));
    }

    fn x0_2() -> Vector {
        v(&[5.0, 5.0])
    }

    #[test]
    fn appm_identity_is_stationary() {
        let x0 = v(&[1.0, -4.0]);
        let mut st = AppmState::start(&x0);
        for _ in 0..5 {
            st = step_appm(&id(2), &st).unwrap();
            assert!(st.x.distance(&x0) <= 1e-14);
        }
    }

    #[test]
    fn appm_rotation_hand_evaluation() {
        let op = make_rotation_resolvent(1, 2.0).unwrap();
        let st = step_appm(&op, &AppmState::start(&v(&[1.0, 0.0]))).unwrap();
        assert_eq!(st.k, 2);
        assert_abs_diff_eq!(st.y[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(st.y[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(st.x[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.x[1], 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn appm_at_fixed_point_stays_zero() {
        let op = make_rotation_resolvent(3, 2.0).unwrap();
        let mut st = AppmState::start(&Vector::zeros(6));
        for _ in 0..10 {
            st = step_appm(&op, &st).unwrap();
        }
        assert_eq!(st.x, Vector::zeros(6));
    }

    #[test]
    fn fast_km_identity_is_stationary() {
        let x = v(&[1.5, -2.0]);
        for k in 1..50 {
            assert!(step_fast_km(3.0, 1.0, k, &x, &x, &x, &x).distance(&x) <= 1e-15);
        }
    }

    #[test]
    fn fast_km_rotation_hand_evaluation() {
        let x = v(&[1.0, 0.0]);
        let t = v(&[0.5, 0.5]);
        let next = step_fast_km(3.0, 1.0, 1, &x, &x, &t, &t);
        assert_abs_diff_eq!(next[0], 0.8125, epsilon = 1e-14);
        assert_abs_diff_eq!(next[1], 0.1875, epsilon = 1e-14);
        let w = FastKmWeights::at(3.0, 1.0, 1);
        assert_eq!(w.operator, 3.0 / 8.0);
        assert_eq!(w.correction, 0.25);
    }

    /// Closed form of the unit-step recurrence, written independently of
    /// `FastKmWeights`.
    fn unit_step_closed_form(
        alpha: f64,
        k: usize,
        x: &Vector,
        t: &Vector,
        t_prev: &Vector,
    ) -> Vector {
        let k = k as f64;
        let a = alpha / (2.0 * (k + alpha));
        let b = k / (k + alpha);
        Vector::from_fn(x.dim(), |i| {
            (1.0 - a) * x[i] + a * t[i] + b * (t[i] - t_prev[i])
        })
    }

    proptest! {
        #[test]
        fn fast_km_unit_step_matches_closed_form(
            alpha in 2.01f64..50.0,
            k in 1usize..10_000,
            data in prop::collection::vec(-10.0f64..10.0, 16),
        ) {
            let x = Vector::new(data[0..4].to_vec()).unwrap();
            let xp = Vector::new(data[4..8].to_vec()).unwrap();
            let t = Vector::new(data[8..12].to_vec()).unwrap();
            let tp = Vector::new(data[12..16].to_vec()).unwrap();
            let a = step_fast_km(alpha, 1.0, k, &x, &xp, &t, &tp);
            let b = unit_step_closed_form(alpha, k, &x, &t, &tp);
            let scale = data.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            prop_assert!(a.distance(&b) <= 1e-15 * 8.0 * scale);
        }

        #[test]
        fn fast_km_weights_sum_to_one(alpha in 2.0001f64..1e3, s in 1e-3f64..2.0, k in 1usize..1_000_000) {
            let w = FastKmWeights::at(alpha, s, k);
            prop_assert!((w.iterate + w.operator - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn fast_ogda_identity_is_stationary() {
        let x = v(&[0.5, 2.0]);
        let op = id(2);
        let mut st = OgdaState::start(&op, &x, &x, &x).unwrap();
        for _ in 0..10 {
            st = step_fast_ogda(&op, 3.0, 0.2, &st).unwrap().next;
            assert_eq!(st.x, x);
        }
    }

    #[test]
    fn fast_ogda_rotation_hand_evaluation() {
        let op = make_rotation_resolvent(1, 2.0).unwrap();
        let x = v(&[1.0, 0.0]);
        let st = OgdaState::start(&op, &x, &x, &x).unwrap();
        assert_abs_diff_eq!(st.g_prev[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(st.g_prev[1], -0.5, epsilon = 1e-15);
        let step = step_fast_ogda(&op, 3.0, 0.4, &st).unwrap();
        assert_abs_diff_eq!(step.y[0], 0.925, epsilon = 1e-14);
        assert_abs_diff_eq!(step.y[1], 0.075, epsilon = 1e-14);
        assert_abs_diff_eq!(step.next.g_prev[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(step.next.g_prev[1], -0.425, epsilon = 1e-14);
        assert_abs_diff_eq!(step.next.x[0], 0.925, epsilon = 1e-14);
        assert_abs_diff_eq!(step.next.x[1], 0.05625, epsilon = 1e-14);
    }

    #[test]
    fn fast_ogda_at_fixed_point_stays_zero() {
        let op = make_rotation_resolvent(2, 2.0).unwrap();
        let z = Vector::zeros(4);
        let mut st = OgdaState::start(&op, &z, &z, &z).unwrap();
        for _ in 0..10 {
            st = step_fast_ogda(&op, 3.0, 0.4, &st).unwrap().next;
        }
        assert_eq!(st.x, z);
    }
}
