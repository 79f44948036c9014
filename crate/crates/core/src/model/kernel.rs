use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::trapezoid;

/// Law of the daughter-to-mother size ratio at division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FragmentationKernel {
    /// Point mass at 1/2.
    EqualMitosis,
    /// Uniform ratio on (0, 1).
    Uniform,
    /// Piecewise linear symmetric density on [0, 1].
    Tabulated { grid: Vec<f64>, density: Vec<f64> },
}

const SHAPE_TOL: f64 = 1e-8;

impl FragmentationKernel {
    /// Tabulated density, renormalized to unit mass and checked for symmetry and mean 1/2.
    pub fn tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 3 || grid.len() != density.len() {
            return Err(Error::invalid(
                "fragmentation density needs at least three points and matching values",
            ));
        }
        if grid[0] < 0.0 || grid[grid.len() - 1] > 1.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "fragmentation abscissae must be increasing inside [0, 1]",
            ));
        }
        if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("fragmentation density must be finite and nonnegative"));
        }
        let mass = trapezoid(&grid, &density);
        if !(mass > 0.0) {
            return Err(Error::invalid("fragmentation density has zero mass"));
        }
        let density: Vec<f64> = density.iter().map(|v| v / mass).collect();
        let kernel = FragmentationKernel::Tabulated { grid, density };
        kernel.validate()?;
        Ok(kernel)
    }

    /// Symmetric Beta(a, a) density tabulated on `points` nodes.
    pub fn symmetric_beta(shape: f64, points: usize) -> Result<Self> {
        if !(shape >= 1.0) || points < 3 {
            return Err(Error::invalid(
                "symmetric beta kernel needs shape >= 1 and at least three nodes",
            ));
        }
        let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        let density = grid
            .iter()
            .map(|&z| (z * (1.0 - z)).powf(shape - 1.0))
            .collect();
        Self::tabulated(grid, density)
    }

    /// Symmetric beta kernel whose ratio has the requested coefficient of variation.
    pub fn with_ratio_cv(cv: f64, points: usize) -> Result<Self> {
        if cv == 0.0 {
            return Ok(FragmentationKernel::EqualMitosis);
        }
        if !(cv > 0.0 && cv <= 1.0 / 3f64.sqrt()) {
            return Err(Error::invalid(format!(
                "ratio CV {cv} outside the range reachable by symmetric beta laws"
            )));
        }
        Self::symmetric_beta(0.5 * (1.0 / (cv * cv) - 1.0), points)
    }

    pub fn is_mitosis(&self) -> bool {
        matches!(self, FragmentationKernel::EqualMitosis)
    }

    pub fn validate(&self) -> Result<()> {
        if let FragmentationKernel::Tabulated { grid, density } = self {
            let mass = trapezoid(grid, density);
            if (mass - 1.0).abs() > SHAPE_TOL {
                return Err(Error::invalid(format!("fragmentation density mass {mass} != 1")));
            }
            let zd: Vec<f64> = grid.iter().zip(density).map(|(z, d)| z * d).collect();
            let mean = trapezoid(grid, &zd);
            if (mean - 0.5).abs() > SHAPE_TOL {
                return Err(Error::invalid(format!("fragmentation density mean {mean} != 1/2")));
            }
            let scale = density.iter().cloned().fold(0.0, f64::max);
            for (&z, &d) in grid.iter().zip(density) {
                let mirrored = self.density(1.0 - z);
                if (mirrored - d).abs() > SHAPE_TOL * scale.max(1.0) {
                    return Err(Error::invalid(format!(
                        "fragmentation density is not symmetric at z = {z}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Density at `z`; zero for the point-mass kernel.
    pub fn density(&self, z: f64) -> f64 {
        match self {
            FragmentationKernel::EqualMitosis => 0.0,
            FragmentationKernel::Uniform => {
                if (0.0..=1.0).contains(&z) {
                    1.0
                } else {
                    0.0
                }
            }
            FragmentationKernel::Tabulated { grid, density } => {
                crate::numerics::interp(grid, density, z, 0.0)
            }
        }
    }

    /// Draw a ratio in (0, 1).
    pub fn sample_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FragmentationKernel::EqualMitosis => 0.5,
            FragmentationKernel::Uniform => rng.random::<f64>(),
            FragmentationKernel::Tabulated { grid, density } => {
                let u: f64 = rng.random();
                inverse_cdf_linear(grid, density, u)
            }
        }
    }

    /// `int_0^1 z^{s-1} b0(z) dz` for `Re(s) > 0`.
    pub fn mellin(&self, s: Complex64) -> Complex64 {
        match self {
            FragmentationKernel::EqualMitosis => (Complex64::new(0.5f64.ln(), 0.0) * (s - 1.0)).exp(),
            FragmentationKernel::Uniform => Complex64::new(1.0, 0.0) / s,
            FragmentationKernel::Tabulated { grid, density } => {
                let pow = |z: f64, p: Complex64| -> Complex64 {
                    if z <= 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (p * z.ln()).exp()
                    }
                };
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..grid.len() - 1 {
                    let (z0, z1) = (grid[i], grid[i + 1]);
                    let slope = (density[i + 1] - density[i]) / (z1 - z0);
                    let c0 = density[i] - slope * z0;
                    let s1 = s + 1.0;
                    acc += c0 * (pow(z1, s) - pow(z0, s)) / s + slope * (pow(z1, s1) - pow(z0, s1)) / s1;
                }
                acc
            }
        }
    }

    /// Symmetric quadrature `(z, weight)` of the ratio law with `nodes` points per half.
    /// Weights sum to one and the mean is exactly one half.
    pub fn quadrature(&self, nodes: usize) -> Vec<(f64, f64)> {
        match self {
            FragmentationKernel::EqualMitosis => vec![(0.5, 1.0)],
            _ => {
                let n = nodes.max(1);
                let mut out = Vec::with_capacity(2 * n);
                let dz = 0.5 / n as f64;
                let mut half = Vec::with_capacity(n);
                for j in 0..n {
                    let a = j as f64 * dz;
                    let b = a + dz;
                    let mass = self.mass_between(a, b);
                    half.push((0.5 * (a + b), mass));
                }
                let total: f64 = half.iter().map(|p| p.1).sum::<f64>() * 2.0;
                for &(z, w) in &half {
                    out.push((z, w / total));
                    out.push((1.0 - z, w / total));
                }
                out
            }
        }
    }

    fn mass_between(&self, a: f64, b: f64) -> f64 {
        match self {
            FragmentationKernel::EqualMitosis => {
                if a <= 0.5 && 0.5 < b {
                    1.0
                } else {
                    0.0
                }
            }
            FragmentationKernel::Uniform => (b.min(1.0) - a.max(0.0)).max(0.0),
            FragmentationKernel::Tabulated { .. } => {
                let m = 16;
                let h = (b - a) / m as f64;
                (0..=m)
                    .map(|i| {
                        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                        w * self.density(a + i as f64 * h)
                    })
                    .sum::<f64>()
                    * h
            }
        }
    }
}

fn inverse_cdf_linear(grid: &[f64], density: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.len() - 1 {
        let d = grid[i + 1] - grid[i];
        let (p0, p1) = (density[i], density[i + 1]);
        let seg = 0.5 * d * (p0 + p1);
        if acc + seg >= u || i == grid.len() - 2 {
            let m = (u - acc).clamp(0.0, seg);
            let a = 0.5 * (p1 - p0) / d;
            let delta = if a.abs() < 1e-300 {
                if p0 > 0.0 {
                    m / p0
                } else {
                    0.0
                }
            } else {
                let disc = (p0 * p0 + 4.0 * a * m).max(0.0);
                let den = p0 + disc.sqrt();
                if den > 0.0 {
                    2.0 * m / den
                } else {
                    0.0
                }
            };
            return (grid[i] + delta.min(d)).clamp(0.0, 1.0);
        }
        acc += seg;
    }
    grid[grid.len() - 1]
}
