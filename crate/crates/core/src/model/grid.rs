use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{interp, trapezoid};

/// Spacing of a one-dimensional grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spacing {
    Uniform { step: f64 },
    Geometric { ratio: f64 },
    Irregular,
}

/// A function tabulated on a 1D grid, with its trapezoid integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub spacing: Spacing,
    pub normalization: f64,
}

impl GridDensity {
    pub fn new(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != values.len() {
            return Err(Error::invalid("grid and values must be nonempty and of equal length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid abscissae must be strictly increasing"));
        }
        let spacing = detect_spacing(&x);
        let normalization = trapezoid(&x, &values);
        Ok(GridDensity {
            x,
            values,
            spacing,
            normalization,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(x: Vec<f64>, f: F) -> Result<Self> {
        let values = x.iter().map(|&t| f(t)).collect();
        Self::new(x, values)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Recomputed trapezoid integral.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.x, &self.values)
    }

    /// Check the stored normalization against a fresh integral.
    pub fn check_normalization(&self) -> bool {
        let fresh = self.integral();
        (fresh - self.normalization).abs() <= 1e-12 * fresh.abs().max(1e-300)
    }

    /// Copy scaled to unit integral.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.integral();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::numerical("normalize", format!("integral is {total}")));
        }
        let values = self.values.iter().map(|v| v / total).collect();
        Self::new(self.x.clone(), values)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn eval(&self, at: f64) -> f64 {
        interp(&self.x, &self.values, at, 0.0)
    }

    pub fn resample(&self, x: &[f64]) -> Result<Self> {
        Self::from_fn(x.to_vec(), |t| self.eval(t))
    }

    pub fn map_values<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Self> {
        let values = self.x.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self::new(self.x.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn detect_spacing(x: &[f64]) -> Spacing {
    if x.len() < 3 {
        return Spacing::Irregular;
    }
    let step = x[1] - x[0];
    if x.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(x[x.len() - 1].abs() * 1e-6)) {
        return Spacing::Uniform { step };
    }
    if x[0] > 0.0 {
        let ratio = x[1] / x[0];
        if x.windows(2).all(|w| (w[1] / w[0] - ratio).abs() <= 1e-9 * ratio) {
            return Spacing::Geometric { ratio };
        }
    }
    Spacing::Irregular
}

/// A function on a tensor grid, row-major in the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity2 {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: f64,
}

impl GridDensity2 {
    pub fn new(first: Vec<f64>, second: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if first.is_empty() || second.is_empty() || values.len() != first.len() * second.len() {
            return Err(Error::invalid("2D grid dimensions do not match the value count"));
        }
        let mut g = GridDensity2 {
            first,
            second,
            values,
            normalization: 0.0,
        };
        g.normalization = g.integral();
        Ok(g)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.second.len() + j]
    }

    pub fn integral(&self) -> f64 {
        let m = self.marginal_first();
        trapezoid(&self.first, &m.values)
    }

    /// Integral over the second coordinate, as a function of the first.
    pub fn marginal_first(&self) -> GridDensity {
        let ny = self.second.len();
        let values: Vec<f64> = (0..self.first.len())
            .map(|i| {
                if ny == 1 {
                    self.values[i]
                } else {
                    trapezoid(&self.second, &self.values[i * ny..(i + 1) * ny])
                }
            })
            .collect();
        GridDensity::new(self.first.clone(), values).expect("grid already validated")
    }

    /// Integral over the first coordinate, as a function of the second.
    pub fn marginal_second(&self) -> GridDensity {
        let ny = self.second.len();
        let col: Vec<f64> = (0..ny)
            .map(|j| {
                let column: Vec<f64> = (0..self.first.len()).map(|i| self.values[i * ny + j]).collect();
                if self.first.len() == 1 {
                    column[0]
                } else {
                    trapezoid(&self.first, &column)
                }
            })
            .collect();
        GridDensity::new(self.second.clone(), col).expect("grid already validated")
    }
}

/// `n` uniform points from `start` to `end` inclusive.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Geometric grid with ratio `2^{1/per_doubling}` covering `[x_min, x_max]`.
pub fn geometric_grid(x_min: f64, x_max: f64, per_doubling: usize) -> Vec<f64> {
    let ratio_ln = std::f64::consts::LN_2 / per_doubling as f64;
    let n = ((x_max / x_min).ln() / ratio_ln).ceil() as usize + 1;
    (0..n).map(|i| x_min * (i as f64 * ratio_ln).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_detection() {
        let g = GridDensity::new(uniform_grid(0.0, 1.0, 11), vec![1.0; 11]).unwrap();
        assert!(matches!(g.spacing, Spacing::Uniform { .. }));
        assert!((g.normalization - 1.0).abs() < 1e-14);
        let geo = geometric_grid(0.01, 10.0, 8);
        let d = GridDensity::new(geo.clone(), vec![0.0; geo.len()]).unwrap();
        assert!(matches!(d.spacing, Spacing::Geometric { .. }));
    }

    #[test]
    fn marginals_integrate_to_total() {
        let a = uniform_grid(0.0, 1.0, 21);
        let b = uniform_grid(0.0, 2.0, 41);
        let vals: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect();
        let g = GridDensity2::new(a, b, vals).unwrap();
        assert!((g.marginal_first().integral() - g.marginal_second().integral()).abs() < 1e-12);
        assert!((g.integral() - 3.0).abs() < 1e-12);
    }
}
