use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estim::{regularize_noisy_density, Smoothing};
use crate::model::{uniform_grid, GridDensity, KernelSpec};
use crate::numerics::{cumulative_trapezoid, trapezoid};
use crate::smoothing::SortedSample;

/// Distance between two distributions on the half line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Metric {
    /// Integral of the absolute difference of the distribution functions.
    Wasserstein1,
    /// L2 norm of the difference after smoothing both with the biweight kernel at `bandwidth`.
    L2Regularized { bandwidth: f64 },
}

impl Default for Metric {
    fn default() -> Self {
        Metric::Wasserstein1
    }
}

impl Metric {
    fn validate(&self) -> Result<()> {
        if let Metric::L2Regularized { bandwidth } = self {
            if !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
            }
        }
        Ok(())
    }
}

fn merged_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().chain(b).copied().collect();
    x.sort_by(|p, q| p.total_cmp(q));
    x.dedup();
    let mut fine = Vec::with_capacity(2 * x.len());
    for w in x.windows(2) {
        fine.push(w[0]);
        fine.push(0.5 * (w[0] + w[1]));
    }
    fine.extend(x.last());
    fine
}

fn normalized_on(d: &GridDensity, x: &[f64]) -> Result<Vec<f64>> {
    let mass = d.integral();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid(format!("density has no positive finite mass ({mass})")));
    }
    Ok(x.iter().map(|&t| d.eval(t) / mass).collect())
}

/// Distance between two tabulated densities, each normalised to unit mass first.
pub fn distance(d1: &GridDensity, d2: &GridDensity, metric: Metric) -> Result<f64> {
    metric.validate()?;
    match metric {
        Metric::Wasserstein1 => {
            let x = merged_grid(&d1.x, &d2.x);
            let f1 = cumulative_trapezoid(&x, &normalized_on(d1, &x)?);
            let f2 = cumulative_trapezoid(&x, &normalized_on(d2, &x)?);
            let gap: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| (a - b).abs()).collect();
            Ok(trapezoid(&x, &gap))
        }
        Metric::L2Regularized { bandwidth } => {
            let smoothing = Smoothing::new(KernelSpec::biweight(), bandwidth);
            let s1 = regularize_noisy_density(&d1.normalized()?, &smoothing)?;
            let s2 = regularize_noisy_density(&d2.normalized()?, &smoothing)?;
            let x = merged_grid(&s1.x, &s2.x);
            let sq: Vec<f64> = x.iter().map(|&t| (s1.eval(t) - s2.eval(t)).powi(2)).collect();
            Ok(trapezoid(&x, &sq).max(0.0).sqrt())
        }
    }
}

/// Distance between two samples: exact for W1, kernel estimates on a common grid for L2.
pub fn sample_distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    metric.validate()?;
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be nonempty and finite"));
    }
    match metric {
        Metric::Wasserstein1 => Ok(wasserstein1_samples(a, b)),
        Metric::L2Regularized { bandwidth } => {
            let k = KernelSpec::biweight();
            let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min) - bandwidth;
            let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max) + bandwidth;
            let x = uniform_grid(lo, hi, 2048);
            let fa = SortedSample::new(a)?.density_on(&k, bandwidth, &x, None);
            let fb = SortedSample::new(b)?.density_on(&k, bandwidth, &x, None);
            let sq: Vec<f64> = fa.iter().zip(&fb).map(|(p, q)| (p - q).powi(2)).collect();
            Ok(trapezoid(&x, &sq).sqrt())
        }
    }
}

/// W1 between the empirical distributions of two samples.
pub fn wasserstein1_samples(a: &[f64], b: &[f64]) -> f64 {
    let sort = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|p, q| p.total_cmp(q));
        v
    };
    let (a, b) = (sort(a), sort(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut last = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - last);
        last = next;
        while i < a.len() && a[i] <= next {
            i += 1;
        }
        while j < b.len() && b[j] <= next {
            j += 1;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_masses_one_apart() {
        assert_eq!(wasserstein1_samples(&[0.0], &[1.0]), 1.0);
        assert!((wasserstein1_samples(&[0.0, 1.0], &[0.5, 1.5]) - 0.5).abs() < 1e-15);
    }
}
