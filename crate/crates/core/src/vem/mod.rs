//! Element-level objects of the lowest-order (k = 1) virtual element method
//! for isotropic linear elasticity.

mod element;
mod local;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use element::{Edge, ElementGeometry};
pub use local::{
    local_matrices, monomial_integrals, polynomial_mass, polynomial_stiffness, projector,
    LocalOperators, Projection, POLY_DIM,
};

#[derive(Debug, Error, PartialEq)]
pub enum VemError {
    #[error("Poisson ratio {0} is outside [0, 0.5)")]
    PoissonRatio(f64),
    #[error("Young modulus must be positive (got {0})")]
    YoungModulus(f64),
    #[error("invalid material: {0}")]
    Material(String),
    #[error("element has non-positive area {0:e}")]
    Degenerate(f64),
    #[error("projector system is singular")]
    SingularProjector,
    #[error("stabilization multiplier must be positive (got {0})")]
    Beta(f64),
    #[error("unknown stabilization scheme `{0}`")]
    UnknownScheme(String),
}

/// Isotropic material: Lamé coefficients and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub lambda_s: f64,
    pub mu_s: f64,
    pub rho: f64,
}

impl Material {
    pub fn new(lambda_s: f64, mu_s: f64, rho: f64) -> Result<Self, VemError> {
        if !(mu_s > 0.0) || !mu_s.is_finite() {
            return Err(VemError::Material(format!("mu_s must be positive (got {mu_s})")));
        }
        if !(lambda_s >= 0.0) || !lambda_s.is_finite() {
            return Err(VemError::Material(format!(
                "lambda_s must be non-negative (got {lambda_s})"
            )));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(VemError::Material(format!("rho must be positive (got {rho})")));
        }
        Ok(Material {
            lambda_s,
            mu_s,
            rho,
        })
    }

    pub fn from_young_poisson(young: f64, poisson: f64, rho: f64) -> Result<Self, VemError> {
        let (mu, lambda) = lame_from_young_poisson(young, poisson)?;
        Material::new(lambda, mu, rho)
    }
}

/// `(mu_S, lambda_S)` from Young's modulus and Poisson's ratio.
pub fn lame_from_young_poisson(young: f64, poisson: f64) -> Result<(f64, f64), VemError> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(VemError::YoungModulus(young));
    }
    if !(0.0..0.5).contains(&poisson) {
        return Err(VemError::PoissonRatio(poisson));
    }
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Ok((mu, lambda))
}

/// Stabilization recipe applied to the non-polynomial part of the DOFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stabilization {
    /// Euclidean inner product of vertex values.
    #[serde(rename = "dofi", alias = "dofi_dofi")]
    DofiDofi,
    /// `h_E` times the boundary inner product of tangential derivatives.
    Trace,
}

impl Stabilization {
    pub fn name(self) -> &'static str {
        match self {
            Stabilization::DofiDofi => "dofi",
            Stabilization::Trace => "trace",
        }
    }
}

impl fmt::Display for Stabilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stabilization {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dofi" | "dofi_dofi" | "dofi-dofi" => Ok(Stabilization::DofiDofi),
            "trace" => Ok(Stabilization::Trace),
            other => Err(VemError::UnknownScheme(other.to_string())),
        }
    }
}
