//! Division-rate estimators for the age, size and increment models.

mod age;
mod bandwidth;
mod dispatch;
mod increment;
mod size;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridDensity, KernelSpec};

pub use age::{
    compute_biased_hazard, estimate_b_age_genealogical, estimate_b_age_pointdata, estimate_b_age_population,
    estimate_lambda, estimate_lambda_from_divisions, population_bandwidth, LambdaEstimate,
};
pub use bandwidth::{noise_bandwidth, regularize_noisy_density, select_bandwidth, BandwidthMethod};
pub use dispatch::{run_estimator, sample_growth_rate, sample_lambda, EstimatorKind, EstimatorSettings};
pub use increment::{
    estimate_b_increment_from_size_marginal, estimate_b_increment_genealogical, estimate_b_increment_population,
    MarginalDeconvolution,
};
pub use size::{
    debiased_size_densities, estimate_b_size_dynamics, estimate_b_size_genealogical, estimate_b_size_pointdata,
    SizePointData,
};

/// Kernel, bandwidth and optional left edge of the support for boundary correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub kernel: KernelSpec,
    pub bandwidth: f64,
    pub boundary: Option<f64>,
}

impl Smoothing {
    pub fn new(kernel: KernelSpec, bandwidth: f64) -> Self {
        Smoothing {
            kernel,
            bandwidth,
            boundary: None,
        }
    }

    /// Biweight smoothing with boundary correction at zero.
    pub fn half_line(bandwidth: f64) -> Self {
        Smoothing {
            kernel: KernelSpec::biweight(),
            bandwidth,
            boundary: Some(0.0),
        }
    }

    pub fn with_boundary(mut self, boundary: Option<f64>) -> Self {
        self.boundary = boundary;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        Ok(())
    }
}

/// Point observations of a stationary profile: raw draws or a tabulated, possibly noisy, density.
#[derive(Debug, Clone, Copy)]
pub enum PointData<'a> {
    Sample(&'a [f64]),
    Grid(&'a GridDensity),
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("evaluation grid must be nonempty and strictly increasing"));
    }
    Ok(())
}

/// Derivative of tabulated values by second-order differences on a nonuniform grid.
fn grid_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 3 {
        return vec![if n == 2 { (y[1] - y[0]) / (x[1] - x[0]) } else { 0.0 }; n];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1] + ((h1 - h0) / (h0 * h1)) * y[i] + (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1] - h0 / (h1 * (h0 + h1)) * y[2];
    let (h0, h1) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = h1 / (h0 * (h0 + h1)) * y[n - 3] - (h0 + h1) / (h0 * h1) * y[n - 2] + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[n - 1];
    d
}

/// Clip negative values to zero, flagging them, and keep non-finite values out.
fn clip_negative(values: &mut [f64], flags: &mut [bool]) {
    for (v, f) in values.iter_mut().zip(flags.iter_mut()) {
        if !v.is_finite() || *v < 0.0 {
            *v = 0.0;
            *f = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let x: Vec<f64> = (0..20).map(|i| 0.1 * 1.1f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = grid_derivative(&x, &y);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - 2.0 * xi).abs() < 1e-10);
        }
    }
}
