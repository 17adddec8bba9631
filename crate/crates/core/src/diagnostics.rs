//! Lyapunov-energy diagnostics for Fast KM traces.
//!
//! Nothing here evaluates the operator. Residual vectors `x_k − T(x_k)` come
//! from a [`Trace`] recorded with [`crate::schemes::Recording::Full`], so the
//! evaluation count of a run stays attributable to the solver.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operators::Vector;
use crate::schemes::Trace;

/// Absolute tolerance on energy nonnegativity, scaled by `max(1, E_1)`.
pub const ENERGY_NONNEG_TOL: f64 = 1e-10;
/// Absolute tolerance on the descent inequality, scaled by `max(1, E_1)`.
pub const DESCENT_TOL: f64 = 1e-9;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 2.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("α = {alpha} violates α > 2")))
    }
}

/// Parameters of the discrete energy `E_{λ,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    pub x_star: Vector,
    pub lambda: f64,
    pub alpha: f64,
    pub s: f64,
}

impl EnergyParams {
    pub fn new(x_star: Vector, lambda: f64, alpha: f64, s: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(0.0..=alpha - 1.0).contains(&lambda) {
            return Err(Error::invalid(format!(
                "λ = {lambda} violates 0 ≤ λ ≤ α − 1 = {}",
                alpha - 1.0
            )));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("s = {s} violates s > 0")));
        }
        Ok(Self {
            x_star,
            lambda,
            alpha,
            s,
        })
    }

    /// Whether `λ ≤ 3α/4 − 1/2`, the range where the energy is nonnegative.
    pub fn guarantees_nonnegativity(&self) -> bool {
        self.lambda <= 0.75 * self.alpha - 0.5
    }
}

/// `E_{λ,k}` from `x_k`, `x_{k−1}` and `res_{k−1} = (Id − T)(x_{k−1})`.
pub fn energy(
    params: &EnergyParams,
    k: usize,
    x: &Vector,
    x_prev: &Vector,
    res_prev: &Vector,
) -> Result<f64> {
    let dim = params.x_star.dim();
    for v in [x, x_prev, res_prev] {
        v.check_dim(dim)?;
    }
    let EnergyParams {
        lambda, alpha, s, ..
    } = *params;
    let kf = k as f64;
    let d = x - &params.x_star;
    let dx = x - x_prev;
    let c_res = (3.0 * alpha - 2.0) / (2.0 * (alpha - 1.0));
    let anchor = Vector::combine(&[
        (2.0 * lambda, &d),
        (2.0 * kf, &dx),
        (c_res * s * kf, res_prev),
    ]);
    Ok(0.5 * anchor.norm_sq()
        + 2.0 * lambda * (alpha - 1.0 - lambda) * d.norm_sq()
        + (alpha - 2.0) / (alpha - 1.0) * lambda * s * kf * d.inner(res_prev)
        + (alpha - 2.0) * (3.0 * alpha - 2.0) / (8.0 * (alpha - 1.0).powi(2))
            * s
            * s
            * kf
            * kf
            * res_prev.norm_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaConstants {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

/// The four coefficients of the energy-difference bound.
pub fn omega_constants(alpha: f64, lambda: f64) -> Result<OmegaConstants> {
    check_alpha(alpha)?;
    if !(0.0..=alpha - 1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "λ = {lambda} violates 0 ≤ λ ≤ α − 1 = {}",
            alpha - 1.0
        )));
    }
    let xi = lambda + 1.0 - alpha;
    let am1 = alpha - 1.0;
    Ok(OmegaConstants {
        w1: 4.0 * xi,
        w2: (4.0 * am1 * xi + alpha * (2.0 - alpha)) / am1,
        w3: (2.0 * alpha * am1 * xi + alpha - 2.0 * am1 * am1 + 2.0 * (2.0 - alpha) * am1) / am1,
        w4: (2.0 - alpha) * (3.0 * alpha - 2.0) / (2.0 * am1),
    })
}

/// The open interval `(λ̲(α), λ̄(α))` of admissible energy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaWindow {
    pub lower: f64,
    pub upper: f64,
}

impl LambdaWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower < lambda && lambda < self.upper
    }
}

pub fn lambda_window(alpha: f64) -> Result<LambdaWindow> {
    check_alpha(alpha)?;
    let am1 = alpha - 1.0;
    let centre = alpha * alpha / (8.0 * am1) + am1 / 2.0;
    let spread = (alpha - 2.0) / (8.0 * am1) * ((alpha - 2.0) * (5.0 * alpha - 2.0)).sqrt();
    Ok(LambdaWindow {
        lower: centre - spread,
        upper: (0.75 * alpha - 0.5).min(centre + spread),
    })
}

/// `√((5α−2)/(2(3α−2)))`, the weight splitting the quadratic terms of `R_k`.
pub fn rk_weight(alpha: f64) -> f64 {
    ((5.0 * alpha - 2.0) / (2.0 * (3.0 * alpha - 2.0))).sqrt()
}

/// Coefficients `(a, b, c)` of `Δ_k / s² = a k² + b k + c`, the discriminant
/// of the quadratic form `R_k`.
pub fn threshold_quadratic(alpha: f64, lambda: f64) -> Result<(f64, f64, f64)> {
    let w = omega_constants(alpha, lambda)?;
    let cross = 2.0 * (5.0 * alpha - 2.0) / (3.0 * alpha - 2.0);
    Ok((
        w.w2 * w.w2 - cross * w.w1 * w.w4,
        2.0 * w.w2 * w.w3,
        w.w3 * w.w3,
    ))
}

/// Smallest `k ≥ 1` from which `Δ_k ≤ 0`, hence `R_k ≤ 0`. Independent of `s`.
pub fn threshold_index(alpha: f64, lambda: f64) -> Result<usize> {
    let window = lambda_window(alpha)?;
    if !window.contains(lambda) {
        return Err(Error::invalid(format!(
            "λ = {lambda} violates λ̲ < λ < λ̄ with window ({}, {})",
            window.lower, window.upper
        )));
    }
    let (a, b, c) = threshold_quadratic(alpha, lambda)?;
    if !(a < 0.0) {
        return Err(Error::invalid(format!(
            "leading coefficient {a} of Δ_k is not negative for λ = {lambda}"
        )));
    }
    // a < 0 and c ≥ 0, so the roots are real with the smaller one ≤ 0.
    let root = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    Ok((root.ceil().max(1.0)) as usize)
}

/// `R_k` for `dx = x_{k+1} − x_k` and `res_k = (Id − T)(x_k)`.
pub fn evaluate_rk(
    alpha: f64,
    lambda: f64,
    s: f64,
    k: usize,
    dx: &Vector,
    res: &Vector,
) -> Result<f64> {
    res.check_dim(dx.dim())?;
    let w = omega_constants(alpha, lambda)?;
    let c = rk_weight(alpha);
    let kf = k as f64;
    Ok(c * w.w1 * kf * dx.norm_sq()
        + s * (w.w2 * kf + w.w3) * dx.inner(res)
        + c * w.w4 * s * s * kf * res.norm_sq())
}

fn full_trace(trace: &Trace) -> Result<(&[Vector], &[Vector])> {
    match (&trace.iterates, &trace.residual_vectors) {
        (Some(x), Some(r)) => Ok((x, r)),
        _ => Err(Error::Diagnostics(
            "trace lacks iterates; record it with Recording::Full".into(),
        )),
    }
}

/// `E_{λ,k}` for `k = 1..=K`; entry `i` holds `E_{λ,i+1}`.
pub fn energy_profile(trace: &Trace, params: &EnergyParams) -> Result<Vec<f64>> {
    let (xs, rs) = full_trace(trace)?;
    (1..xs.len())
        .map(|k| energy(params, k, &xs[k], &xs[k - 1], &rs[k - 1]))
        .collect()
}

/// `R_k` for `k = 1..K−1`; entry `i` holds `R_{i+1}`.
pub fn rk_profile(trace: &Trace, params: &EnergyParams) -> Result<Vec<f64>> {
    let (xs, rs) = full_trace(trace)?;
    (1..xs.len().saturating_sub(1))
        .map(|k| {
            evaluate_rk(
                params.alpha,
                params.lambda,
                params.s,
                k,
                &(&xs[k + 1] - &xs[k]),
                &rs[k],
            )
        })
        .collect()
}

/// Outcome of the eventual-descent check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `(E_{k+1} − E_k) − bound_k` seen, before tolerance.
    pub worst_excess: f64,
}

/// Checks, for `k ≥ from_k`,
/// `E_{k+1} − E_k ≤ 2(2−α)λs<x_k − x*, res_k> + (1 − c)(ω₁k||Δx||² + ω₄s²k||res_k||²)
///  + ((α−2)/(α−1))(s − 1/θ)s k²||res_k − res_{k−1}||² + 1e−9·max(1, E_1)`.
pub fn check_descent(
    trace: &Trace,
    params: &EnergyParams,
    theta: f64,
    from_k: usize,
) -> Result<DescentCheck> {
    let (xs, rs) = full_trace(trace)?;
    let energies = energy_profile(trace, params)?;
    let w = omega_constants(params.alpha, params.lambda)?;
    let c = rk_weight(params.alpha);
    let EnergyParams {
        lambda, alpha, s, ..
    } = *params;
    let scale = energies.first().copied().unwrap_or(0.0).max(1.0);
    let mut out = DescentCheck {
        checked: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
    };
    for k in from_k.max(1)..xs.len().saturating_sub(1) {
        let kf = k as f64;
        let lhs = energies[k] - energies[k - 1];
        let dx = &xs[k + 1] - &xs[k];
        let d = &xs[k] - &params.x_star;
        let dres = &rs[k] - &rs[k - 1];
        let bound = 2.0 * (2.0 - alpha) * lambda * s * d.inner(&rs[k])
            + (1.0 - c) * (w.w1 * kf * dx.norm_sq() + w.w4 * s * s * kf * rs[k].norm_sq())
            + (alpha - 2.0) / (alpha - 1.0) * (s - 1.0 / theta) * s * kf * kf * dres.norm_sq();
        let excess = lhs - bound;
        out.checked += 1;
        out.worst_excess = out.worst_excess.max(excess);
        if excess > DESCENT_TOL * scale {
            out.violations += 1;
        }
    }
    Ok(out)
}

/// Tail-to-total ratios of the four summability series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauRatios {
    pub s1: f64,
    pub s2: f64,
    /// Omitted when `s = 1/θ`, where the weighted series carries no claim.
    pub s3: Option<f64>,
    /// Omitted without a known fixed point.
    pub s4: Option<f64>,
}

/// Partial sums of `k||x_{k+1} − x_k||²`, `k||res_k||²`,
/// `k²||res_k − res_{k−1}||²` and `<x_k − x*, res_k>` over `k ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
    pub s4: Option<Vec<f64>>,
    pub plateau: PlateauRatios,
}

fn cumulative(terms: impl Iterator<Item = f64>) -> Vec<f64> {
    terms
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect()
}

/// `(sum over the last 20% of indices) / total`, zero for an all-zero series.
pub fn plateau_ratio(partial_sums: &[f64]) -> f64 {
    let Some(&total) = partial_sums.last() else {
        return 0.0;
    };
    if total == 0.0 {
        return 0.0;
    }
    let n = partial_sums.len();
    let tail_len = (n as f64 * 0.2).ceil() as usize;
    let before = if tail_len >= n {
        0.0
    } else {
        partial_sums[n - tail_len - 1]
    };
    (total - before) / total
}

pub fn summability_report(
    trace: &Trace,
    x_star: Option<&Vector>,
    theta: f64,
    s: f64,
) -> Result<SummabilityReport> {
    let (xs, rs) = full_trace(trace)?;
    let last = xs.len().saturating_sub(1);
    let s1 = cumulative((1..last).map(|k| k as f64 * xs[k + 1].distance(&xs[k]).powi(2)));
    let s2 = cumulative((1..=last).map(|k| k as f64 * rs[k].norm_sq()));
    let s3 = cumulative((1..=last).map(|k| (k * k) as f64 * rs[k].distance(&rs[k - 1]).powi(2)));
    let s4 = match x_star {
        Some(p) => {
            p.check_dim(xs[0].dim())?;
            Some(cumulative((1..=last).map(|k| (&xs[k] - p).inner(&rs[k]))))
        }
        None => None,
    };
    let plateau = PlateauRatios {
        s1: plateau_ratio(&s1),
        s2: plateau_ratio(&s2),
        s3: ((1.0 / theta - s).abs() >= 1e-12).then(|| plateau_ratio(&s3)),
        s4: s4.as_deref().map(plateau_ratio),
    };
    Ok(SummabilityReport {
        s1,
        s2,
        s3,
        s4,
        plateau,
    })
}

/// Least-squares slope of `log residual` against `log k`, or `Converged`
/// when the tail holds fewer than two positive residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogLogSlope {
    Fitted(f64),
    Converged,
}

impl LogLogSlope {
    pub fn value(&self) -> Option<f64> {
        match self {
            LogLogSlope::Fitted(v) => Some(*v),
            LogLogSlope::Converged => None,
        }
    }
}

impl Serialize for LogLogSlope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LogLogSlope::Fitted(v) => serializer.serialize_f64(*v),
            LogLogSlope::Converged => serializer.serialize_str("converged"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// `max_{k ≥ burn_in} k · residual[k]`
    pub sup_tail_k_res: f64,
    pub loglog_slope: LogLogSlope,
}

/// Rate fit over `residuals[k]` for `k ≥ max(burn_in, 1)`.
pub fn rate_fit_residuals(residuals: &[f64], burn_in: usize) -> Result<RateFit> {
    if residuals.len() <= 2 * burn_in {
        return Err(Error::Diagnostics(format!(
            "trace length {} must exceed 2·burn_in = {}",
            residuals.len(),
            2 * burn_in
        )));
    }
    let start = burn_in.max(1);
    let sup = (start..residuals.len())
        .map(|k| k as f64 * residuals[k])
        .fold(0.0, f64::max);
    let points: Vec<(f64, f64)> = (start..residuals.len())
        .filter(|&k| residuals[k] > 0.0)
        .map(|k| ((k as f64).ln(), residuals[k].ln()))
        .collect();
    let slope = if points.len() < 2 {
        LogLogSlope::Converged
    } else {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        LogLogSlope::Fitted(sxy / sxx)
    };
    Ok(RateFit {
        sup_tail_k_res: sup,
        loglog_slope: slope,
    })
}

pub fn rate_fit(trace: &Trace, burn_in: usize) -> Result<RateFit> {
    rate_fit_residuals(&trace.residuals(), burn_in)
}

/// Default burn-in: a fifth of the trace.
pub fn default_burn_in(kmax: usize) -> usize {
    kmax / 5
}

/// Machine-readable summary written by the `diagnose` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub alpha: f64,
    pub lambda: f64,
    pub lambda_window: LambdaWindow,
    pub k_lambda: Option<usize>,
    pub sup_tail_k_res: Option<f64>,
    pub loglog_slope: Option<LogLogSlope>,
    pub plateau_ratios: Option<PlateauRatios>,
    pub energy_min: Option<f64>,
    pub descent_violations: Option<usize>,
    pub rk_max_from_threshold: Option<f64>,
}

impl DiagnosticsReport {
    /// Window, threshold and λ only, with no trace attached.
    pub fn parameters_only(alpha: f64, lambda: Option<f64>) -> Result<Self> {
        let window = lambda_window(alpha)?;
        let lambda = lambda.unwrap_or_else(|| window.midpoint());
        Ok(Self {
            alpha,
            lambda,
            lambda_window: window,
            k_lambda: Some(threshold_index(alpha, lambda)?),
            sup_tail_k_res: None,
            loglog_slope: None,
            plateau_ratios: None,
            energy_min: None,
            descent_violations: None,
            rk_max_from_threshold: None,
        })
    }

    pub fn with_rate_fit(mut self, fit: RateFit) -> Self {
        self.sup_tail_k_res = Some(fit.sup_tail_k_res);
        self.loglog_slope = Some(fit.loglog_slope);
        self
    }
}

/// Settings for [`diagnose`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSettings {
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub s: f64,
    pub theta: f64,
    pub burn_in: usize,
}

/// Full report over a Fast KM trace with a known fixed point.
pub fn diagnose(
    trace: &Trace,
    x_star: &Vector,
    settings: &DiagnoseSettings,
) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::parameters_only(settings.alpha, settings.lambda)?
        .with_rate_fit(rate_fit(trace, settings.burn_in)?);
    let k_lambda = report.k_lambda.unwrap_or(1);
    let params = EnergyParams::new(x_star.clone(), report.lambda, settings.alpha, settings.s)?;
    let energies = energy_profile(trace, &params)?;
    report.energy_min = energies.iter().copied().reduce(f64::min);
    report.descent_violations =
        Some(check_descent(trace, &params, settings.theta, k_lambda)?.violations);
    let rks = rk_profile(trace, &params)?;
    report.rk_max_from_threshold = rks
        .iter()
        .enumerate()
        .filter(|(i, _)| i + 1 >= k_lambda)
        .map(|(_, r)| *r)
        .reduce(f64::max);
    report.plateau_ratios =
        Some(summability_report(trace, Some(x_star), settings.theta, settings.s)?.plateau);
    Ok(report)
}
