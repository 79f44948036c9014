//! Weighted kernel smoothing of samples with an optional left boundary.

use crate::error::{Error, Result};
use crate::model::KernelSpec;
use crate::numerics::std_dev;

/// A weighted sample sorted by value, with prefix sums of the weights.
#[derive(Debug, Clone)]
pub struct SortedSample {
    x: Vec<f64>,
    w: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedSample {
    pub fn new(data: &[f64]) -> Result<Self> {
        Self::weighted(data, None)
    }

    pub fn weighted(data: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        if let Some(w) = weights {
            if w.len() != data.len() {
                return Err(Error::invalid("weights and data differ in length"));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("weights must be finite and nonnegative"));
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        let mut pairs: Vec<(f64, f64)> = data
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, weights.map_or(1.0, |w| w[i])))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut prefix = Vec::with_capacity(w.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &w {
            acc += v;
            prefix.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::invalid("sample has zero total weight"));
        }
        Ok(SortedSample { x, w, prefix })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn total_weight(&self) -> f64 {
        self.prefix[self.x.len()]
    }

    /// Kish effective sample size.
    pub fn effective_size(&self) -> f64 {
        let s2: f64 = self.w.iter().map(|v| v * v).sum();
        self.total_weight().powi(2) / s2
    }

    /// Weight of observations `>= a`.
    pub fn weight_at_or_above(&self, a: f64) -> f64 {
        let i = self.x.partition_point(|&v| v < a);
        self.total_weight() - self.prefix[i]
    }

    /// Weight of observations `<= a`.
    pub fn weight_at_or_below(&self, a: f64) -> f64 {
        let i = self.x.partition_point(|&v| v <= a);
        self.prefix[i]
    }

    /// `sum_i w_i K_h(at - X_i)` with local-linear correction when `at` is within `h` of `boundary`.
    pub fn kernel_sum(&self, kernel: &KernelSpec, h: f64, at: f64, boundary: Option<f64>) -> f64 {
        let lo = self.x.partition_point(|&v| v < at - h);
        let hi = self.x.partition_point(|&v| v <= at + h);
        let (c0, c1) = match boundary {
            Some(b) if at - h < b => {
                if at < b {
                    return 0.0;
                }
                kernel.boundary_coefficients(-1.0, (at - b) / h)
            }
            _ => (1.0, 0.0),
        };
        let mut acc = 0.0;
        for i in lo..hi {
            let u = (at - self.x[i]) / h;
            acc += self.w[i] * (c0 + c1 * u) * kernel.eval(u);
        }
        acc / h
    }

    /// Weighted kernel density normalized by the total weight.
    pub fn density(&self, kernel: &KernelSpec, h: f64, at: f64, boundary: Option<f64>) -> f64 {
        self.kernel_sum(kernel, h, at, boundary) / self.total_weight()
    }

    /// Derivative of [`Self::density`] by central differences with step `h / 20`.
    pub fn density_derivative(&self, kernel: &KernelSpec, h: f64, at: f64, boundary: Option<f64>) -> f64 {
        let d = h / 20.0;
        match boundary {
            Some(b) if at - d < b => {
                let f0 = self.density(kernel, h, at, boundary);
                let f1 = self.density(kernel, h, at + d, boundary);
                let f2 = self.density(kernel, h, at + 2.0 * d, boundary);
                (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * d)
            }
            _ => {
                (self.density(kernel, h, at + d, boundary) - self.density(kernel, h, at - d, boundary))
                    / (2.0 * d)
            }
        }
    }

    pub fn density_on(&self, kernel: &KernelSpec, h: f64, grid: &[f64], boundary: Option<f64>) -> Vec<f64> {
        grid.iter().map(|&x| self.density(kernel, h, x, boundary)).collect()
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.x)
    }
}

/// `sigma * n^{-1/(2 order + 1)}`
pub fn rule_of_thumb(data: &[f64], order: usize) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::invalid("rule-of-thumb bandwidth needs two observations"));
    }
    let sigma = std_dev(data);
    if !(sigma > 0.0) {
        return Err(Error::invalid("degenerate sample with zero variance"));
    }
    Ok(sigma * (data.len() as f64).powf(-1.0 / (2.0 * order as f64 + 1.0)))
}
