//! Fixed-point iteration schemes: Banach-Picard, Krasnosel'skiĭ-Mann,
//! Halpern, the accelerated proximal point method, Fast KM and Fast OGDA.

mod run;
mod schedule;
mod steps;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use run::run;
pub use schedule::StepSchedule;
pub use steps::{
    appm_update, halpern_update, km_update, step_appm, step_banach_picard, step_fast_km,
    step_fast_ogda, step_halpern, step_km, AppmState, FastKmWeights, OgdaState, OgdaStep,
};
pub use trace::{Trace, TraceRecord, COORDINATE_COLUMNS_MAX_DIM};

use crate::error::{Error, Result};
use crate::operators::{Hyperplane, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BanachPicard,
    Km,
    Halpern,
    Appm,
    FastKm,
    FastOgda,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::BanachPicard,
        Method::Km,
        Method::Halpern,
        Method::Appm,
        Method::FastKm,
        Method::FastOgda,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::BanachPicard => "bp",
            Method::Km => "km",
            Method::Halpern => "halpern",
            Method::Appm => "appm",
            Method::FastKm => "fast-km",
            Method::FastOgda => "fast-ogda",
        }
    }

    pub fn uses_momentum(&self) -> bool {
        matches!(self, Method::FastKm | Method::FastOgda)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| {
                m.name() == s
                    || (s == "fast_km" && *m == Method::FastKm)
                    || (s == "fast_ogda" && *m == Method::FastOgda)
            })
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// When a run stops before `kmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    None,
    /// `||x_k − T(x_k)|| ≤ tol`
    ResidualNorm,
    /// `||Proj_H(x_k) − Proj_+(Proj_H(x_k))|| ≤ tol`
    FeasibilityShadow(Hyperplane),
}

/// How much of each iterate a [`Trace`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recording {
    /// Scalar columns and the final iterate only.
    #[default]
    Summary,
    /// Also every iterate `x_k` and residual vector `x_k − T(x_k)`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub method: Method,
    /// Momentum parameter α (Fast KM, Fast OGDA).
    pub alpha: f64,
    /// Step size `s` (Fast KM, Fast OGDA). `None` picks the largest
    /// admissible value, see [`default_step`].
    pub step: Option<f64>,
    /// Relaxation sequence (KM, Halpern).
    pub schedule: Option<StepSchedule>,
    /// Upper limit for KM relaxation values; defaults to `1/θ`.
    pub relaxation_limit: Option<f64>,
    pub kmax: usize,
    pub stop_tol: f64,
    pub stop_rule: StopRule,
    pub recording: Recording,
}

impl SchemeConfig {
    pub fn new(method: Method, kmax: usize) -> Self {
        Self {
            method,
            alpha: 3.0,
            step: None,
            schedule: None,
            relaxation_limit: None,
            kmax,
            stop_tol: 0.0,
            stop_rule: StopRule::None,
            recording: Recording::Summary,
        }
    }

    pub fn fast_km(alpha: f64, step: f64, kmax: usize) -> Self {
        Self {
            alpha,
            step: Some(step),
            ..Self::new(Method::FastKm, kmax)
        }
    }

    pub fn km(schedule: StepSchedule, kmax: usize) -> Self {
        Self {
            schedule: Some(schedule),
            ..Self::new(Method::Km, kmax)
        }
    }

    pub fn with_recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn with_stop(mut self, rule: StopRule, tol: f64) -> Self {
        self.stop_rule = rule;
        self.stop_tol = tol;
        self
    }

    pub fn effective_schedule(&self) -> Option<StepSchedule> {
        match self.method {
            Method::Km => Some(self.schedule.unwrap_or(StepSchedule::Constant(0.5))),
            Method::Halpern => Some(self.schedule.unwrap_or(StepSchedule::HalpernLieder)),
            _ => None,
        }
    }

    /// Checks every parameter inequality against the operator's θ and
    /// resolves defaults.
    pub fn validate(&self, theta: f64) -> Result<ResolvedParams> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!("θ = {theta} violates 0 < θ ≤ 1")));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::invalid(format!(
                "stop tolerance {} violates tol ≥ 0",
                self.stop_tol
            )));
        }
        let mut params = ResolvedParams {
            alpha: self.alpha,
            step: 0.0,
            schedule: self.effective_schedule(),
        };
        if self.method.uses_momentum() {
            if !(self.alpha > 2.0 && self.alpha.is_finite()) {
                return Err(Error::invalid(format!("α = {} violates α > 2", self.alpha)));
            }
            let s = self
                .step
                .unwrap_or_else(|| default_step(self.method, theta));
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("step size s = {s} violates s > 0")));
            }
            match self.method {
                Method::FastKm => {
                    let bound = max_step_fast_km(theta)?;
                    if s > bound * (1.0 + 1e-12) {
                        return Err(Error::invalid(format!(
                            "step size s = {s} violates s ≤ 1/θ = {bound}"
                        )));
                    }
                }
                Method::FastOgda => {
                    let bound = max_step_fast_ogda(theta)?;
                    if s >= bound {
                        return Err(Error::invalid(format!(
                            "step size s = {s} violates s < max{{1/(4θ), (1−θ)/(2θ)}} = {bound}"
                        )));
                    }
                }
                _ => unreachable!(),
            }
            params.step = s;
        }
        if let Some(schedule) = params.schedule {
            let (lo, hi) = schedule.range(self.kmax);
            let (limit, label) = match self.method {
                Method::Halpern => (1.0, "1".to_string()),
                _ => match self.relaxation_limit {
                    Some(l) => (l, format!("{l}")),
                    None => (1.0 / theta, format!("1/θ = {}", 1.0 / theta)),
                },
            };
            if !(lo > 0.0) || !(hi <= limit * (1.0 + 1e-12)) || !hi.is_finite() {
                return Err(Error::invalid(format!(
                    "relaxation {schedule} leaves (0, {label}] for some k ≤ {}",
                    self.kmax
                )));
            }
        }
        Ok(params)
    }
}

/// Parameters after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub alpha: f64,
    pub step: f64,
    pub schedule: Option<StepSchedule>,
}

/// Largest Fast KM step, `1/θ` (inclusive).
pub fn max_step_fast_km(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(1.0 / theta)
}

/// Strict Fast OGDA step bound `max{1/(4θ), (1−θ)/(2θ)}`, the reciprocal of
/// twice the Lipschitz constant of `Id − T`.
pub fn max_step_fast_ogda(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((1.0 / (4.0 * theta)).max((1.0 - theta) / (2.0 * theta)))
}

/// Step used when none is given: `1/θ` for Fast KM, 99% of the strict bound
/// for Fast OGDA, and 1 otherwise.
pub fn default_step(method: Method, theta: f64) -> f64 {
    match method {
        Method::FastKm => 1.0 / theta,
        Method::FastOgda => 0.99 * (1.0 / (4.0 * theta)).max((1.0 - theta) / (2.0 * theta)),
        _ => 1.0,
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("θ = {theta} violates 0 < θ ≤ 1")))
    }
}

/// The default starting point of the rotation experiment: `(1_n; 0_n)`.
pub fn ones_then_zeros(n: usize) -> Vector {
    Vector::from_fn(2 * n, |i| if i < n { 1.0 } else { 0.0 })
}
