use serde::{Deserialize, Serialize};

use super::{GridDensity, GridDensity2};
use crate::error::{Error, Result};
use crate::numerics::trapezoid;

/// Dominant eigenvalue with its direct and adjoint eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTriplet {
    pub lambda: f64,
    pub direct: GridDensity,
    /// Adjoint eigenvector on the grid of `direct`.
    pub adjoint: Vec<f64>,
    pub multiplicity: u8,
    /// Set when the dominant eigenvalue is not unique (mitosis with exponential growth).
    pub oscillatory: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Quadrature weights of the solver grid; empty means trapezoid weights.
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl EigenTriplet {
    /// `int N phi`
    pub fn pairing(&self) -> f64 {
        if self.weights.len() == self.direct.len() {
            return self
                .weights
                .iter()
                .zip(self.direct.values.iter().zip(&self.adjoint))
                .map(|(w, (n, p))| w * n * p)
                .sum();
        }
        let prod: Vec<f64> = self.direct.values.iter().zip(&self.adjoint).map(|(n, p)| n * p).collect();
        trapezoid(&self.direct.x, &prod)
    }

    /// `int N`, with the solver weights when present.
    pub fn mass(&self) -> f64 {
        if self.weights.len() == self.direct.len() {
            return self.weights.iter().zip(&self.direct.values).map(|(w, n)| w * n).sum();
        }
        self.direct.integral()
    }

    /// Check `int N = 1`, `int N phi = 1`, positivity and `lambda = 0` when `k = 1`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let mass = self.mass();
        let pair = self.pairing();
        if (mass - 1.0).abs() > tol || (pair - 1.0).abs() > tol {
            return Err(Error::numerical(
                "eigen normalization",
                format!("int N = {mass}, int N phi = {pair}"),
            ));
        }
        if self.direct.values.iter().any(|v| *v < 0.0) || self.adjoint.iter().any(|v| *v < 0.0) {
            return Err(Error::numerical("eigen normalization", "negative eigenvector entries"));
        }
        if self.multiplicity == 1 && self.lambda.abs() > tol {
            return Err(Error::numerical(
                "eigen normalization",
                format!("conservative case returned lambda = {}", self.lambda),
            ));
        }
        Ok(())
    }

    /// Adjoint eigenvector interpolated at `x`.
    pub fn adjoint_at(&self, x: f64) -> f64 {
        crate::numerics::interp_clamped(&self.direct.x, &self.adjoint, x)
    }
}

/// Steady profile of a two-dimensional model, indexed by (increment or age, size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTriplet2 {
    pub lambda: f64,
    pub direct: GridDensity2,
    pub multiplicity: u8,
    pub iterations: usize,
    pub residual: f64,
}

/// Output of every division-rate estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: GridDensity,
    pub bandwidth: f64,
    pub spectral_cutoff: Option<f64>,
    pub threshold: Option<f64>,
    /// One flag per grid point: the denominator floor was hit or the value was clipped.
    pub flags: Vec<bool>,
    pub effective_sample_size: f64,
    pub lambda: Option<f64>,
    pub notes: Vec<String>,
}

impl EstimationResult {
    pub fn new(estimate: GridDensity, bandwidth: f64, flags: Vec<bool>, effective_sample_size: f64) -> Self {
        EstimationResult {
            estimate,
            bandwidth,
            spectral_cutoff: None,
            threshold: None,
            flags,
            effective_sample_size,
            lambda: None,
            notes: Vec::new(),
        }
    }

    pub fn floor_hits(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.estimate.eval(x)
    }

    pub fn grid(&self) -> &[f64] {
        &self.estimate.x
    }

    pub fn values(&self) -> &[f64] {
        &self.estimate.values
    }
}
