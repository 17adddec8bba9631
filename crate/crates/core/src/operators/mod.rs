//! Vectors, averaged operators, projections and splitting constructors.
//!
//! Every operator here is an immutable value: the evaluation rule is held
//! behind an `Arc` and never mutated, so clones share it freely across
//! threads.

mod cocoercivity;
mod rotation;
mod vector;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cocoercivity::{
    check_cocoercivity, max_pointwise_gap, CocoercivityReport, COCOERCIVITY_TOL,
};
pub use rotation::{make_rotation_resolvent, RotationGenerator};
pub use vector::{dot, Vector};

use crate::error::{Error, Result};

/// A single-valued map on `R^dim`, typically a resolvent or a projection.
pub type Mapping = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Wraps a closure as a [`Mapping`].
pub fn mapping<F>(f: F) -> Mapping
where
    F: Fn(&Vector) -> Vector + Send + Sync + 'static,
{
    Arc::new(f)
}

pub fn identity_mapping() -> Mapping {
    mapping(|x: &Vector| x.clone())
}

/// A θ-averaged operator `T` on `R^dim`.
///
/// θ is declared by the constructor, not verified; [`check_cocoercivity`]
/// samples the implied inequality.
#[derive(Clone)]
pub struct AveragedOperator {
    dim: usize,
    theta: f64,
    map: Mapping,
    known_fixed_point: Option<Vector>,
    label: String,
}

impl fmt::Debug for AveragedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AveragedOperator")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("theta", &self.theta)
            .field("known_fixed_point", &self.known_fixed_point.is_some())
            .finish()
    }
}

impl AveragedOperator {
    pub fn new<F>(dim: usize, theta: f64, f: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self::from_mapping(dim, theta, mapping(f))
    }

    pub fn from_mapping(dim: usize, theta: f64, map: Mapping) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!(
                "averagedness constant θ = {theta} violates 0 < θ ≤ 1"
            )));
        }
        probe(&map, dim)?;
        Ok(Self {
            dim,
            theta,
            map,
            known_fixed_point: None,
            label: String::from("operator"),
        })
    }

    /// Attaches a known fixed point, checked to `1e-12 * max(1, ||p||)`.
    pub fn with_fixed_point(mut self, p: Vector) -> Result<Self> {
        p.check_dim(self.dim)?;
        let gap = self.evaluate(&p)?.distance(&p);
        let tol = 1e-12 * p.norm().max(1.0);
        if gap > tol {
            return Err(Error::invalid(format!(
                "claimed fixed point has ||T(p) - p|| = {gap:e} > {tol:e}"
            )));
        }
        self.known_fixed_point = Some(p);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn known_fixed_point(&self) -> Option<&Vector> {
        self.known_fixed_point.as_ref()
    }

    pub fn mapping(&self) -> Mapping {
        Arc::clone(&self.map)
    }

    /// `T(x)`.
    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim)?;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                context: format!("input to {}", self.label),
            });
        }
        let y = (self.map)(x);
        y.check_dim(self.dim)?;
        if !y.is_finite() {
            return Err(Error::NonFinite {
                context: format!("output of {}", self.label),
            });
        }
        Ok(y)
    }

    /// `x - T(x)`.
    pub fn residual_map(&self, x: &Vector) -> Result<Vector> {
        Ok(x - &self.evaluate(x)?)
    }
}

fn probe(map: &Mapping, dim: usize) -> Result<()> {
    let out = map(&Vector::zeros(dim));
    out.check_dim(dim)
}

/// Cocoercive forward term of a splitting.
///
/// `None` stands for `C ≡ 0`, the β = +∞ case.
#[derive(Clone)]
pub enum ForwardTerm {
    None,
    Cocoercive { map: Mapping, beta: f64 },
}

impl fmt::Debug for ForwardTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardTerm::None => f.write_str("ForwardTerm::None"),
            ForwardTerm::Cocoercive { beta, .. } => f
                .debug_struct("ForwardTerm::Cocoercive")
                .field("beta", beta)
                .finish(),
        }
    }
}

impl ForwardTerm {
    /// Averagedness of the splitting operator for step `gamma`:
    /// `2β/(4β − γ)`, or 1/2 without a forward term.
    pub fn splitting_theta(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("γ = {gamma} violates γ > 0")));
        }
        match self {
            ForwardTerm::None => Ok(0.5),
            ForwardTerm::Cocoercive { beta, .. } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid(format!("β = {beta} violates β > 0")));
                }
                if gamma > 2.0 * beta {
                    return Err(Error::invalid(format!(
                        "γ = {gamma} violates γ ≤ 2β = {}",
                        2.0 * beta
                    )));
                }
                Ok(2.0 * beta / (4.0 * beta - gamma))
            }
        }
    }

    fn forward_step(&self, gamma: f64, x: &Vector) -> Vector {
        match self {
            ForwardTerm::None => x.clone(),
            ForwardTerm::Cocoercive { map, .. } => x.add_scaled(-gamma, &map(x)),
        }
    }

    fn correction(&self, gamma: f64, x: &Vector) -> Option<Vector> {
        match self {
            ForwardTerm::None => None,
            ForwardTerm::Cocoercive { map, .. } => Some(map(x).scale(gamma)),
        }
    }
}

/// `T_DR = J_A ∘ (2 J_B − Id) + Id − J_B`, ½-averaged.
pub fn make_douglas_rachford(
    resolvent_a: Mapping,
    resolvent_b: Mapping,
    dim: usize,
) -> Result<AveragedOperator> {
    probe(&resolvent_a, dim)?;
    probe(&resolvent_b, dim)?;
    let op = AveragedOperator::new(dim, 0.5, move |x: &Vector| {
        let jb = resolvent_b(x);
        let reflected = Vector::combine(&[(2.0, &jb), (-1.0, x)]);
        let ja = resolvent_a(&reflected);
        Vector::combine(&[(1.0, &ja), (1.0, x), (-1.0, &jb)])
    })?;
    Ok(op.with_label("douglas-rachford"))
}

/// `T_FB = J_{γA} ∘ (Id − γC)`, `2β/(4β−γ)`-averaged.
///
/// The resolvent is passed already scaled by γ; `gamma` enters only the
/// forward step and the averagedness constant.
pub fn make_forward_backward(
    resolvent_a: Mapping,
    forward: ForwardTerm,
    gamma: f64,
    dim: usize,
) -> Result<AveragedOperator> {
    let theta = forward.splitting_theta(gamma)?;
    probe(&resolvent_a, dim)?;
    if let ForwardTerm::Cocoercive { map, .. } = &forward {
        probe(map, dim)?;
    }
    let op = AveragedOperator::new(dim, theta, move |x: &Vector| {
        resolvent_a(&forward.forward_step(gamma, x))
    })?;
    Ok(op.with_label("forward-backward"))
}

/// Three-operator splitting
/// `T_DY = J_{γA} ∘ (2 J_{γB} − Id − γ C ∘ J_{γB}) + Id − J_{γB}`.
pub fn make_davis_yin(
    resolvent_a: Mapping,
    resolvent_b: Mapping,
    forward: ForwardTerm,
    gamma: f64,
    dim: usize,
) -> Result<AveragedOperator> {
    let theta = forward.splitting_theta(gamma)?;
    probe(&resolvent_a, dim)?;
    probe(&resolvent_b, dim)?;
    if let ForwardTerm::Cocoercive { map, .. } = &forward {
        probe(map, dim)?;
    }
    let op = AveragedOperator::new(dim, theta, move |x: &Vector| {
        let jb = resolvent_b(x);
        let mut inner = Vector::combine(&[(2.0, &jb), (-1.0, x)]);
        if let Some(c) = forward.correction(gamma, &jb) {
            inner = &inner - &c;
        }
        let ja = resolvent_a(&inner);
        Vector::combine(&[(1.0, &ja), (1.0, x), (-1.0, &jb)])
    })?;
    Ok(op.with_label("davis-yin"))
}

/// Coordinatewise `max(x_i, 0)`: the projection onto the nonnegative orthant.
pub fn project_nonnegative(x: &Vector) -> Vector {
    x.map(|c| c.max(0.0))
}

/// The hyperplane `{x : <x, u> = ν}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vector,
    offset: f64,
    normal_norm_sq: f64,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let normal_norm_sq = normal.norm_sq();
        if normal_norm_sq == 0.0 {
            return Err(Error::invalid("hyperplane normal u must be nonzero"));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite {
                context: "hyperplane offset".into(),
            });
        }
        Ok(Self {
            normal,
            offset,
            normal_norm_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `x − ((<x,u> − ν)/||u||²) u`
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim())?;
        Ok(self.project_unchecked(x))
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        let excess = x.inner(&self.normal) - self.offset;
        x.add_scaled(-excess / self.normal_norm_sq, &self.normal)
    }

    /// Distance from the shadow point `Proj_H(x)` to the nonnegative orthant.
    pub fn shadow_distance(&self, x: &Vector) -> Result<f64> {
        let shadow = self.project(x)?;
        Ok(shadow.distance(&project_nonnegative(&shadow)))
    }

    pub fn projection_mapping(&self) -> Mapping {
        let plane = self.clone();
        mapping(move |x: &Vector| plane.project_unchecked(x))
    }
}

/// Projection onto `{x : <x, u> = ν}`.
pub fn project_hyperplane(u: &Vector, nu: f64, x: &Vector) -> Result<Vector> {
    Hyperplane::new(u.clone(), nu)?.project(x)
}

/// Douglas-Rachford operator for `R_+^d ∩ H`, with `J_A = Proj_+` and
/// `J_B = Proj_H`.
pub fn make_feasibility_operator(plane: &Hyperplane) -> Result<AveragedOperator> {
    let op = make_douglas_rachford(
        mapping(project_nonnegative),
        plane.projection_mapping(),
        plane.dim(),
    )?;
    Ok(op.with_label("dr-feasibility"))
}
