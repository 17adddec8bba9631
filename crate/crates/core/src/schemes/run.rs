use super::steps::{
    appm_update, halpern_update, km_update, step_fast_km, step_fast_ogda, OgdaState,
};
use super::{Method, Recording, SchemeConfig, StopRule, Trace, TraceRecord};
use crate::error::{Error, Result};
use crate::operators::{AveragedOperator, Vector};

struct Recorder<'a> {
    config: &'a SchemeConfig,
    records: Vec<TraceRecord>,
    iterates: Option<Vec<Vector>>,
    residual_vectors: Option<Vec<Vector>>,
    previous: Option<Vector>,
    terminated_at: Option<usize>,
    evaluations: usize,
}

impl<'a> Recorder<'a> {
    fn new(config: &'a SchemeConfig) -> Self {
        let full = config.recording == Recording::Full;
        Self {
            config,
            records: Vec::with_capacity(config.kmax.min(1 << 20) + 1),
            iterates: full.then(Vec::new),
            residual_vectors: full.then(Vec::new),
            previous: None,
            terminated_at: None,
            evaluations: 0,
        }
    }

    /// Evaluates `T(x)` and maps a non-finite result to divergence at `k`.
    fn eval(&mut self, op: &AveragedOperator, x: &Vector, k: usize) -> Result<Vector> {
        self.evaluations += 1;
        op.evaluate(x).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Diverged {
                last_valid_k: k.saturating_sub(1),
            },
            other => other,
        })
    }

    /// Records `x_k` with its residual vector. Returns `true` when the stop
    /// rule fires.
    fn push(&mut self, k: usize, x: &Vector, residual_vec: Vector) -> Result<bool> {
        if !x.is_finite() {
            return Err(Error::Diverged {
                last_valid_k: k.saturating_sub(1),
            });
        }
        let residual = residual_vec.norm();
        let velocity = self.previous.as_ref().map_or(0.0, |p| x.distance(p));
        self.records.push(TraceRecord {
            k,
            residual,
            velocity,
            k_times_residual: k as f64 * residual,
        });
        if let Some(xs) = self.iterates.as_mut() {
            xs.push(x.clone());
        }
        if let Some(rs) = self.residual_vectors.as_mut() {
            rs.push(residual_vec);
        }
        self.previous = Some(x.clone());
        let stop = match &self.config.stop_rule {
            StopRule::None => false,
            StopRule::ResidualNorm => residual <= self.config.stop_tol,
            StopRule::FeasibilityShadow(plane) => plane.shadow_distance(x)? <= self.config.stop_tol,
        };
        if stop {
            self.terminated_at = Some(k);
        }
        Ok(stop)
    }

    fn finish(self, method: Method, final_iterate: Vector) -> Trace {
        let wall_iterations = self.records.last().map_or(0, |r| r.k);
        Trace {
            method,
            records: self.records,
            iterates: self.iterates,
            residual_vectors: self.residual_vectors,
            final_iterate,
            terminated_at: self.terminated_at,
            wall_iterations,
            evaluations: self.evaluations,
        }
    }
}

/// Runs one scheme from `x0` (and `x1` for the two-point methods, default
/// `x1 = x0`) until `kmax` or the stop rule fires.
///
/// Each recorded residual reuses the operator value the scheme itself
/// needed at that index, except for Fast OGDA whose updates evaluate `T` at
/// the auxiliary points `y_k`; there the trace pays one extra evaluation per
/// step.
pub fn run(
    op: &AveragedOperator,
    config: &SchemeConfig,
    x0: &Vector,
    x1: Option<&Vector>,
) -> Result<Trace> {
    let params = config.validate(op.theta())?;
    x0.check_dim(op.dim())?;
    if let Some(x1) = x1 {
        x1.check_dim(op.dim())?;
    }
    if !x0.is_finite() || !x1.is_none_or(Vector::is_finite) {
        return Err(Error::NonFinite {
            context: "starting point".into(),
        });
    }
    let mut rec = Recorder::new(config);
    let kmax = config.kmax;

    match config.method {
        Method::BanachPicard | Method::Km | Method::Halpern => {
            let schedule = params.schedule;
            let mut x = x0.clone();
            let mut tx = rec.eval(op, &x, 0)?;
            if rec.push(0, &x, &x - &tx)? {
                return Ok(rec.finish(config.method, x));
            }
            for k in 0..kmax {
                let next = match (config.method, schedule) {
                    (Method::BanachPicard, _) => tx.clone(),
                    (Method::Km, Some(s)) => km_update(&x, &tx, s.value(k)),
                    (Method::Halpern, Some(s)) => halpern_update(x0, &tx, s.value(k)),
                    _ => unreachable!("schedule resolved by validate"),
                };
                if !next.is_finite() {
                    return Err(Error::Diverged { last_valid_k: k });
                }
                tx = rec.eval(op, &next, k + 1)?;
                x = next;
                if rec.push(k + 1, &x, &x - &tx)? {
                    break;
                }
            }
            Ok(rec.finish(config.method, x))
        }
        Method::Appm => {
            if x1.is_some_and(|x1| x1 != x0) {
                return Err(Error::invalid("APPM starts from y₁ = x₀ = x₁"));
            }
            let mut y = x0.clone();
            let mut jx = rec.eval(op, x0, 0)?;
            if rec.push(0, x0, x0 - &jx)? || kmax == 0 {
                return Ok(rec.finish(config.method, x0.clone()));
            }
            // x₁ = x₀, so J(x₁) is the value already computed.
            let mut x_prev = x0.clone();
            let mut x = x0.clone();
            if rec.push(1, &x, &x - &jx)? {
                return Ok(rec.finish(config.method, x));
            }
            for k in 1..kmax {
                let y_next = jx;
                let next = appm_update(k, &x_prev, &y, &y_next);
                if !next.is_finite() {
                    return Err(Error::Diverged { last_valid_k: k });
                }
                jx = rec.eval(op, &next, k + 1)?;
                y = y_next;
                x_prev = std::mem::replace(&mut x, next);
                if rec.push(k + 1, &x, &x - &jx)? {
                    break;
                }
            }
            Ok(rec.finish(config.method, x))
        }
        Method::FastKm => {
            let (alpha, s) = (params.alpha, params.step);
            let t0 = rec.eval(op, x0, 0)?;
            if rec.push(0, x0, x0 - &t0)? || kmax == 0 {
                return Ok(rec.finish(config.method, x0.clone()));
            }
            let mut x_prev = x0.clone();
            let mut t_prev = t0;
            let mut x = x1.unwrap_or(x0).clone();
            let mut tx = rec.eval(op, &x, 1)?;
            if rec.push(1, &x, &x - &tx)? {
                return Ok(rec.finish(config.method, x));
            }
            for k in 1..kmax {
                let next = step_fast_km(alpha, s, k, &x, &x_prev, &tx, &t_prev);
                if !next.is_finite() {
                    return Err(Error::Diverged { last_valid_k: k });
                }
                let t_next = rec.eval(op, &next, k + 1)?;
                x_prev = std::mem::replace(&mut x, next);
                t_prev = std::mem::replace(&mut tx, t_next);
                if rec.push(k + 1, &x, &x - &tx)? {
                    break;
                }
            }
            Ok(rec.finish(config.method, x))
        }
        Method::FastOgda => {
            let (alpha, s) = (params.alpha, params.step);
            let t0 = rec.eval(op, x0, 0)?;
            let g0 = x0 - &t0;
            if rec.push(0, x0, g0.clone())? || kmax == 0 {
                return Ok(rec.finish(config.method, x0.clone()));
            }
            let x1 = x1.unwrap_or(x0).clone();
            let t1 = rec.eval(op, &x1, 1)?;
            if rec.push(1, &x1, &x1 - &t1)? {
                return Ok(rec.finish(config.method, x1));
            }
            // y₀ = x₀, so g₀ is the residual already at hand.
            let mut state = OgdaState {
                k: 1,
                x: x1,
                x_prev: x0.clone(),
                g_prev: g0,
            };
            for k in 1..kmax {
                rec.evaluations += 1;
                let step = step_fast_ogda(op, alpha, s, &state).map_err(|e| match e {
                    Error::NonFinite { .. } => Error::Diverged { last_valid_k: k },
                    other => other,
                })?;
                state = step.next;
                if !state.x.is_finite() {
                    return Err(Error::Diverged { last_valid_k: k });
                }
                let t = rec.eval(op, &state.x, k + 1)?;
                if rec.push(k + 1, &state.x, &state.x - &t)? {
                    break;
                }
            }
            Ok(rec.finish(config.method, state.x))
        }
    }
}
