use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect;

/// Individual growth speed `dx/dt = tau(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthLaw {
    /// `tau(x) = rate * x`
    Exponential { rate: f64 },
    /// Piecewise linear `tau`, constant beyond both ends of the table.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl GrowthLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!("growth rate must be positive, got {rate}")));
        }
        Ok(GrowthLaw::Exponential { rate })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let law = GrowthLaw::Tabulated { grid, values };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthLaw::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid(format!("growth rate must be positive, got {rate}")));
                }
            }
            GrowthLaw::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(Error::invalid(
                        "tabulated growth needs at least two points and matching values",
                    ));
                }
                if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("growth abscissae must be nonnegative and increasing"));
                }
                let n = values.len();
                if values[1..n - 1].iter().any(|v| !(*v > 0.0 && v.is_finite()))
                    || values.iter().any(|v| !(*v >= 0.0 && v.is_finite()))
                    || values[n - 1] <= 0.0
                {
                    return Err(Error::invalid(
                        "growth speed must be positive on the interior of the size domain",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The exponential rate when growth is exponential.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            GrowthLaw::Exponential { rate } => Some(*rate),
            GrowthLaw::Tabulated { .. } => None,
        }
    }

    /// Growth speed `tau(x)`.
    pub fn speed(&self, x: f64) -> f64 {
        match self {
            GrowthLaw::Exponential { rate } => rate * x,
            GrowthLaw::Tabulated { grid, values } => {
                let n = grid.len();
                if x <= grid[0] {
                    return values[0];
                }
                if x >= grid[n - 1] {
                    return values[n - 1];
                }
                let i = grid.partition_point(|&g| g <= x) - 1;
                let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Multiply the speed by `factor`, used for per-cell growth variability.
    pub fn scaled(&self, factor: f64) -> GrowthLaw {
        match self {
            GrowthLaw::Exponential { rate } => GrowthLaw::Exponential { rate: rate * factor },
            GrowthLaw::Tabulated { grid, values } => GrowthLaw::Tabulated {
                grid: grid.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Time to grow from `x0` to `x1 >= x0`, i.e. `int_{x0}^{x1} dy / tau(y)`.
    pub fn flow_time(&self, x0: f64, x1: f64) -> f64 {
        if x1 <= x0 {
            return 0.0;
        }
        match self {
            GrowthLaw::Exponential { rate } => (x1 / x0).ln() / rate,
            GrowthLaw::Tabulated { grid, values } => {
                let n = grid.len();
                let mut total = 0.0;
                let seg = |a: f64, b: f64, ta: f64, tb: f64| -> f64 {
                    if b <= a {
                        return 0.0;
                    }
                    let slope = (tb - ta) / (b - a);
                    if slope.abs() * (b - a) < 1e-12 * ta.max(tb) {
                        (b - a) / ta
                    } else {
                        (tb / ta).ln() / slope
                    }
                };
                if x0 < grid[0] {
                    total += (x1.min(grid[0]) - x0) / values[0];
                }
                for i in 0..n - 1 {
                    let a = x0.max(grid[i]);
                    let b = x1.min(grid[i + 1]);
                    if b > a {
                        total += seg(a, b, self.speed(a), self.speed(b));
                    }
                }
                if x1 > grid[n - 1] {
                    total += (x1 - x0.max(grid[n - 1])) / values[n - 1];
                }
                total
            }
        }
    }

    /// Characteristic curve: size after growing for time `t` from `x`.
    pub fn flow(&self, t: f64, x: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(x);
        }
        match self {
            GrowthLaw::Exponential { rate } => Ok(x * (rate * t).exp()),
            GrowthLaw::Tabulated { .. } => {
                let mut hi = x.max(1e-12) * 2.0 + 1.0;
                let mut tries = 0;
                while self.flow_time(x, hi) < t {
                    hi *= 2.0;
                    tries += 1;
                    if tries > 200 {
                        return Err(Error::numerical("flow", "characteristic left every bracket"));
                    }
                }
                bisect(|y| self.flow_time(x, y) - t, x, hi, 1e-13 * hi)
            }
        }
    }
}

/// Independent per-birth growth-rate multiplier with mean one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthVariability {
    /// Coefficient of variation of the multiplier.
    pub cv: f64,
}

impl GrowthVariability {
    pub fn new(cv: f64) -> Result<Self> {
        if !(cv >= 0.0 && cv.is_finite()) {
            return Err(Error::invalid(format!("growth-rate CV must be >= 0, got {cv}")));
        }
        Ok(GrowthVariability { cv })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_flow_and_time_invert() {
        let g = GrowthLaw::exponential(1.0).unwrap();
        assert!((g.flow_time(1.0, 2.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g.flow(std::f64::consts::LN_2, 1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_linear_matches_exponential() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let tab = GrowthLaw::tabulated(grid.clone(), grid.iter().map(|x| 0.5 * x).collect()).unwrap();
        let exp = GrowthLaw::exponential(0.5).unwrap();
        assert!((tab.flow_time(1.5, 7.25) - exp.flow_time(1.5, 7.25)).abs() < 1e-12);
        let x = tab.flow(1.3, 2.0).unwrap();
        assert!((x - exp.flow(1.3, 2.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn constant_speed_flow() {
        let tab = GrowthLaw::tabulated(vec![0.0, 1.0], vec![2.0, 2.0]).unwrap();
        assert!((tab.flow(1.5, 1.0).unwrap() - 4.0).abs() < 1e-10);
    }
}
