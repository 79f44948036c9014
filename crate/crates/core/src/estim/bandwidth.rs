use serde::{Deserialize, Serialize};

use super::Smoothing;
use crate::error::{Error, Result};
use crate::model::{uniform_grid, GridDensity, KernelSpec};
use crate::numerics::{std_dev, trapezoid};
use crate::smoothing::{rule_of_thumb, SortedSample};

/// Bandwidth selection rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BandwidthMethod {
    /// `sigma n^{-1/(2 order + 1)}`
    RuleOfThumb,
    /// Least-squares cross-validation with `folds` folds.
    CrossValidation { folds: usize },
    /// Pairwise comparison of estimates against a variance majorant.
    Comparison,
}

const CANDIDATES: usize = 17;
const QUAD_POINTS: usize = 512;

/// Candidate bandwidths `sigma 2^{-j/2}`, `j = 0..CANDIDATES`.
fn candidates(sigma: f64) -> Vec<f64> {
    (0..CANDIDATES).map(|j| sigma * 2f64.powf(-(j as f64) / 2.0)).collect()
}

fn quad_grid(data: &[f64], h: f64, boundary: Option<f64>) -> Vec<f64> {
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min) - h;
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + h;
    let lo = boundary.map_or(lo, |b| lo.max(b));
    uniform_grid(lo, hi, QUAD_POINTS)
}

fn cv_score(data: &[f64], kernel: &KernelSpec, h: f64, folds: usize, boundary: Option<f64>) -> Result<f64> {
    let grid = quad_grid(data, h, boundary);
    let mut total = 0.0;
    for v in 0..folds {
        let train: Vec<f64> = data.iter().enumerate().filter(|(i, _)| i % folds != v).map(|p| *p.1).collect();
        let test: Vec<f64> = data.iter().enumerate().filter(|(i, _)| i % folds == v).map(|p| *p.1).collect();
        if train.is_empty() || test.is_empty() {
            continue;
        }
        let s = SortedSample::new(&train)?;
        let f = s.density_on(kernel, h, &grid, boundary);
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        let fit: f64 = test.iter().map(|&x| s.density(kernel, h, x, boundary)).sum::<f64>() / test.len() as f64;
        total += trapezoid(&grid, &sq) - 2.0 * fit;
    }
    Ok(total / folds as f64)
}

fn comparison_choice(data: &[f64], kernel: &KernelSpec, hs: &[f64], boundary: Option<f64>) -> Result<f64> {
    let s = SortedSample::new(data)?;
    let n = data.len() as f64;
    let grid = quad_grid(data, hs[0], boundary);
    let estimates: Vec<Vec<f64>> = hs.iter().map(|&h| s.density_on(kernel, h, &grid, boundary)).collect();
    let roughness = kernel.roughness();
    let majorant: Vec<f64> = hs.iter().map(|h| 1.2 * roughness / (n * h)).collect();
    let mut best = (f64::INFINITY, hs[0]);
    for (i, &h) in hs.iter().enumerate() {
        let mut bias = 0.0f64;
        for j in i + 1..hs.len() {
            let diff: Vec<f64> = estimates[i].iter().zip(&estimates[j]).map(|(a, b)| (a - b).powi(2)).collect();
            bias = bias.max(trapezoid(&grid, &diff) - majorant[j]);
        }
        let score = bias + majorant[i];
        if score < best.0 {
            best = (score, h);
        }
    }
    Ok(best.1)
}

/// Bandwidth for a kernel density estimate of `data`.
pub fn select_bandwidth(
    data: &[f64],
    kernel: &KernelSpec,
    method: BandwidthMethod,
    boundary: Option<f64>,
) -> Result<f64> {
    let sigma = std_dev(data);
    if data.len() < 2 || !(sigma > 0.0) {
        return Err(Error::invalid("degenerate sample with zero variance"));
    }
    match method {
        BandwidthMethod::RuleOfThumb => rule_of_thumb(data, kernel.order),
        BandwidthMethod::CrossValidation { folds } => {
            if data.len() < 50 {
                return Err(Error::invalid("cross-validation needs at least 50 observations"));
            }
            if folds < 2 {
                return Err(Error::invalid("cross-validation needs at least 2 folds"));
            }
            let mut best = (f64::INFINITY, sigma);
            for h in candidates(sigma) {
                let score = cv_score(data, kernel, h, folds, boundary)?;
                if score < best.0 {
                    best = (score, h);
                }
            }
            Ok(best.1)
        }
        BandwidthMethod::Comparison => {
            if data.len() < 50 {
                return Err(Error::invalid("comparison of estimates needs at least 50 observations"));
            }
            comparison_choice(data, kernel, &candidates(sigma), boundary)
        }
    }
}

/// Bandwidth balancing a noise term `eps / h^theta` against the kernel bias `h^order`.
pub fn noise_bandwidth(eps: f64, theta: f64, order: usize) -> f64 {
    eps.powf(1.0 / (order as f64 + theta))
}

/// `K_h * f` on the grid of `f`, scattering each node's mass so the trapezoid integral is kept.
pub fn regularize_noisy_density(f: &GridDensity, smoothing: &Smoothing) -> Result<GridDensity> {
    smoothing.validate()?;
    let x = &f.x;
    let n = x.len();
    let w = crate::solver::trapezoid_weights(x);
    let h = smoothing.bandwidth;
    let mut out = vec![0.0; n];
    let mut column = Vec::new();
    for i in 0..n {
        let lo = x.partition_point(|&v| v < x[i] - h);
        let hi = x.partition_point(|&v| v <= x[i] + h);
        column.clear();
        let mut mass = 0.0;
        for j in lo..hi {
            let k = smoothing.kernel.scaled(x[j] - x[i], h);
            column.push(k);
            mass += w[j] * k;
        }
        if mass <= 0.0 {
            out[i] += f.values[i];
            continue;
        }
        let source = w[i] * f.values[i] / mass;
        for (j, k) in (lo..hi).zip(&column) {
            if w[j] > 0.0 {
                out[j] += source * k;
            }
        }
    }
    GridDensity::new(x.clone(), out)
}
