use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::geometric_grid;

/// Spatial grid of the growth-fragmentation solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    /// Nodes `0, dx, ..., x_max`.
    Uniform { x_max: f64, points: usize },
    /// Nodes `x_min * 2^{i / per_doubling}` up to `x_max`.
    Geometric { x_min: f64, x_max: f64, per_doubling: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverGrid {
    pub kind: GridKind,
    pub nodes: Vec<f64>,
    /// Cell measures; integrals on the grid are `sum w_i v_i`.
    pub weights: Vec<f64>,
}

impl SolverGrid {
    pub fn new(kind: GridKind) -> Result<Self> {
        match kind {
            GridKind::Uniform { x_max, points } => {
                if !(x_max > 0.0) || points < 4 {
                    return Err(Error::invalid("uniform grid needs x_max > 0 and at least 4 points"));
                }
                let dx = x_max / (points - 1) as f64;
                Ok(SolverGrid {
                    kind,
                    nodes: (0..points).map(|i| i as f64 * dx).collect(),
                    weights: vec![dx; points],
                })
            }
            GridKind::Geometric {
                x_min,
                x_max,
                per_doubling,
            } => {
                if !(x_min > 0.0 && x_max > 2.0 * x_min) || per_doubling == 0 {
                    return Err(Error::invalid(
                        "geometric grid needs 0 < 2 x_min < x_max and per_doubling >= 1",
                    ));
                }
                let nodes = geometric_grid(x_min, x_max, per_doubling);
                let r = (std::f64::consts::LN_2 / per_doubling as f64).exp();
                let c = 0.5 * (r - 1.0 / r);
                let weights = nodes.iter().map(|x| x * c).collect();
                Ok(SolverGrid { kind, nodes, weights })
            }
        }
    }

    pub fn uniform(x_max: f64, points: usize) -> Result<Self> {
        Self::new(GridKind::Uniform { x_max, points })
    }

    pub fn geometric(x_min: f64, x_max: f64, per_doubling: usize) -> Result<Self> {
        Self::new(GridKind::Geometric {
            x_min,
            x_max,
            per_doubling,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes per doubling of size on a geometric grid.
    pub fn per_doubling(&self) -> Option<usize> {
        match self.kind {
            GridKind::Geometric { per_doubling, .. } => Some(per_doubling),
            GridKind::Uniform { .. } => None,
        }
    }

    pub fn log_ratio(&self) -> Option<f64> {
        self.per_doubling().map(|m| std::f64::consts::LN_2 / m as f64)
    }

    pub fn integral(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, x)| w * x).sum()
    }

    pub fn moment(&self, v: &[f64], power: i32) -> f64 {
        self.weights
            .iter()
            .zip(v)
            .zip(&self.nodes)
            .map(|((w, y), x)| w * y * x.powi(power))
            .sum()
    }
}

/// Trapezoid weights of a sorted grid.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Fourth-order Gregory weights on a uniform grid of at least 8 points.
pub fn gregory_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n < 8 {
        return trapezoid_weights(&(0..n).map(|i| i as f64 * h).collect::<Vec<_>>());
    }
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (i, c) in ends.iter().enumerate() {
        w[i] = c * h;
        w[n - 1 - i] = c * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_ratio_is_exact_root_of_two() {
        let g = SolverGrid::geometric(0.01, 10.0, 16).unwrap();
        let x = &g.nodes;
        assert!((x[16] / x[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gregory_integrates_cubics() {
        let n = 41;
        let h = 0.05;
        let w = gregory_weights(n, h);
        let s: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(3)).sum();
        assert!((s - 1.0 / 4.0 * 2f64.powi(4)).abs() < 1e-12);
    }
}
