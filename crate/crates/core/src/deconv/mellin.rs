use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FragmentationKernel, GridDensity};

const LINE_TOL: f64 = 1e-6;

/// Uniform grid in `u = ln x` carrying the Mellin transform as a Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub points: usize,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for LogGrid {
    fn default() -> Self {
        LogGrid {
            points: 1 << 14,
            u_min: -12.0,
            u_max: 12.0,
        }
    }
}

impl LogGrid {
    fn validate(&self) -> Result<()> {
        if self.points < 16 || !(self.u_max > self.u_min) {
            return Err(Error::invalid("log grid needs at least 16 points and u_max > u_min"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.u_max - self.u_min) / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let du = self.step();
        (0..self.points).map(|i| self.u_min + i as f64 * du).collect()
    }

    /// Angular frequencies in transform order, matching `sum_n g_n e^{i w u_n}`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points as isize;
        let scale = 2.0 * std::f64::consts::PI / (self.points as f64 * self.step());
        (0..n)
            .map(|j| {
                let f = if j < n / 2 { j } else { j - n };
                -(f as f64) * scale
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MellinSolution {
    /// Solution on the nodes of the right-hand side lying inside the log grid.
    pub solution: GridDensity,
    /// Real part of the integration line.
    pub line: f64,
    /// Frequencies where the denominator modulus was raised to the floor.
    pub flagged: usize,
}

fn forward(values: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(values.len()).process(values);
}

fn inverse(values: &mut [Complex64]) {
    FftPlanner::new().plan_fft_inverse(values.len()).process(values);
    let n = values.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
}

/// Samples of `e^{c u} f(e^u)` with `c = (q + 1) / 2`.
fn weighted_samples<F: Fn(f64) -> f64>(f: F, q: f64, grid: &LogGrid) -> Vec<Complex64> {
    let c = 0.5 * (q + 1.0);
    grid.nodes()
        .iter()
        .map(|&u| Complex64::new((c * u).exp() * f(u.exp()), 0.0))
        .collect()
}

/// Mellin transform of `f` on the line `Re s = (q + 1) / 2`, as
/// `(Im s, M[f](s))` pairs in transform order.
pub fn mellin_on_line<F: Fn(f64) -> f64>(f: F, q: f64, grid: &LogGrid) -> Result<(Vec<f64>, Vec<Complex64>)> {
    grid.validate()?;
    let mut g = weighted_samples(f, q, grid);
    forward(&mut g);
    let du = grid.step();
    let omega = grid.frequencies();
    let values = omega
        .iter()
        .zip(&g)
        .map(|(&w, v)| v * du * Complex64::new(0.0, w * grid.u_min).exp())
        .collect();
    Ok((omega, values))
}

/// Linear interpolation in `ln x`, constant below the grid and zero above it.
fn eval_log(f: &GridDensity, x: f64) -> f64 {
    let n = f.len();
    if x <= f.x[0] {
        return f.values[0];
    }
    if x > f.x[n - 1] {
        return 0.0;
    }
    let i = f.x.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let t = (x.ln() - f.x[i].ln()) / (f.x[i + 1].ln() - f.x[i].ln());
    f.values[i] + t * (f.values[i + 1] - f.values[i])
}

/// Solve `k int_0^1 H(x/z) b0(z) dz / z - H(x) = L(x)` in `L2(x^q dx)` on the default log grid.
pub fn mellin_dilation_solve(
    rhs: &GridDensity,
    kernel: &FragmentationKernel,
    k: u8,
    q: f64,
) -> Result<GridDensity> {
    Ok(mellin_dilation_solve_with(rhs, kernel, k, q, &LogGrid::default(), 1e-8)?.solution)
}

pub fn mellin_dilation_solve_with(
    rhs: &GridDensity,
    kernel: &FragmentationKernel,
    k: u8,
    q: f64,
    grid: &LogGrid,
    floor: f64,
) -> Result<MellinSolution> {
    grid.validate()?;
    if k != 1 && k != 2 {
        return Err(Error::invalid(format!("multiplicity must be 1 or 2, got {k}")));
    }
    if rhs.x[0] <= 0.0 {
        return Err(Error::invalid("Mellin inversion needs a grid of positive abscissae"));
    }
    let line = 0.5 * (q + 1.0);
    if !(line > 0.0) {
        return Err(Error::invalid(format!("weight exponent q = {q} must exceed -1")));
    }
    let kf = k as f64;
    if (q + 1.0 - 2.0 * kf).abs() < LINE_TOL {
        return Err(Error::invalid(format!(
            "integration line Re s = {line} passes through the zero s = {k}; shift q away from {}",
            2 * k - 1
        )));
    }
    let mut g = weighted_samples(|x| eval_log(rhs, x), q, grid);
    forward(&mut g);
    let mut flagged = 0;
    for (v, &w) in g.iter_mut().zip(&grid.frequencies()) {
        let mut den = kf * kernel.mellin(Complex64::new(line, w)) - 1.0;
        let modulus = den.norm();
        if modulus < floor {
            flagged += 1;
            den = if modulus > 0.0 {
                den * (floor / modulus)
            } else {
                Complex64::new(floor, 0.0)
            };
        }
        *v /= den;
    }
    inverse(&mut g);
    let du = grid.step();
    let mut x = Vec::new();
    let mut values = Vec::new();
    for &xi in &rhs.x {
        let u = xi.ln();
        let pos = (u - grid.u_min) / du;
        if pos < 0.0 || pos > (grid.points - 1) as f64 {
            continue;
        }
        let i = (pos.floor() as usize).min(grid.points - 2);
        let t = pos - i as f64;
        let gu = g[i].re + t * (g[i + 1].re - g[i].re);
        x.push(xi);
        values.push(gu * (-line * u).exp());
    }
    if x.is_empty() {
        return Err(Error::invalid("no grid node lies inside the log grid"));
    }
    Ok(MellinSolution {
        solution: GridDensity::new(x, values)?,
        line,
        flagged,
    })
}
