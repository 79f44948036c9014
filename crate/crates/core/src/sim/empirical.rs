use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{uniform_grid, GridDensity, GridDensity2, KernelSpec, SampleSet};
use super::RngStream;
use crate::smoothing::SortedSample;

/// One-dimensional observable of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Lifetimes,
    BirthSizes,
    DivisionSizes,
    Increments,
    AgesAtSnapshot,
    SizesAtSnapshot,
}

impl Observable {
    pub fn values(&self, s: &SampleSet) -> Vec<f64> {
        match self {
            Observable::Lifetimes => s.lifetimes(),
            Observable::BirthSizes => s.birth_sizes(),
            Observable::DivisionSizes => s.division_sizes(),
            Observable::Increments => s.increments(),
            Observable::AgesAtSnapshot => s.ages_at_snapshot(),
            Observable::SizesAtSnapshot => s.sizes_at_snapshot(),
        }
    }

    /// Ages and increments live on the half line starting at zero.
    pub fn boundary(&self) -> Option<f64> {
        match self {
            Observable::Lifetimes | Observable::Increments | Observable::AgesAtSnapshot => Some(0.0),
            _ => None,
        }
    }

    fn needs_sizes(&self) -> bool {
        !matches!(self, Observable::Lifetimes | Observable::AgesAtSnapshot)
    }
}

/// Pairs of observables for joint densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointObservable {
    /// Age and size at the snapshot, or lifetime and division size for complete records.
    AgeSize,
    /// Increment and size, likewise.
    IncrementSize,
}

const DEFAULT_POINTS: usize = 256;

fn default_grid(values: &[f64], h: f64, boundary: Option<f64>) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - h;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + h;
    let lo = boundary.map_or(lo, |b| lo.max(b));
    uniform_grid(lo, hi, DEFAULT_POINTS)
}

/// Kernel density of an observable normalized to unit mass; `h = 0` gives a histogram.
pub fn empirical_density(
    s: &SampleSet,
    which: Observable,
    kernel: &KernelSpec,
    h: f64,
    grid: Option<&[f64]>,
) -> Result<GridDensity> {
    if which.needs_sizes() {
        s.require_sizes("size density")?;
    }
    let values = which.values(s);
    if values.is_empty() {
        return Err(Error::invalid(format!("no observations for {which:?}")));
    }
    if h == 0.0 {
        return histogram(&values);
    }
    if !(h > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be >= 0, got {h}")));
    }
    let boundary = which.boundary();
    let grid = grid.map_or_else(|| default_grid(&values, h, boundary), |g| g.to_vec());
    let sorted = SortedSample::new(&values)?;
    let dens = sorted.density_on(kernel, h, &grid, boundary);
    GridDensity::new(grid, dens.iter().map(|v| v.max(0.0)).collect())?.normalized()
}

/// Independent draws from a nonnegative tabulated density, read as piecewise linear.
pub fn draw_from_density(density: &GridDensity, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let x = &density.x;
    let y = &density.values;
    if x.len() < 2 || y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("draws need a nonnegative density on at least two nodes"));
    }
    let mut cdf = Vec::with_capacity(x.len());
    cdf.push(0.0);
    for i in 1..x.len() {
        cdf.push(cdf[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
    }
    let total = cdf[x.len() - 1];
    if !(total > 0.0) {
        return Err(Error::invalid("density has no mass"));
    }
    let draw = |u: f64| {
        let target = u * total;
        let i = (cdf.partition_point(|&c| c < target).max(1) - 1).min(x.len() - 2);
        let dx = x[i + 1] - x[i];
        let (a, b) = (y[i], y[i + 1]);
        let r = target - cdf[i];
        // solve a t + (b - a) t^2 / (2 dx) = r for t in [0, dx]
        let slope = (b - a) / dx;
        let t = if slope.abs() < 1e-14 * (a + b).max(f64::MIN_POSITIVE) / dx {
            if a > 0.0 { r / a } else { 0.5 * dx }
        } else {
            2.0 * r / (a + (a * a + 2.0 * slope * r).max(0.0).sqrt())
        };
        x[i] + t.clamp(0.0, dx)
    };
    Ok((0..n).map(|_| draw(rng.open_uniform())).collect())
}

/// Histogram with `ceil(sqrt(n))` bins, tabulated at bin centers.
pub fn histogram(values: &[f64]) -> Result<GridDensity> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return GridDensity::new(vec![lo - 0.5, lo + 0.5], vec![1.0, 1.0]);
    }
    let bins = ((values.len() as f64).sqrt().ceil() as usize).max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    let n = values.len() as f64;
    if bins == 1 {
        return GridDensity::new(vec![lo, hi], vec![1.0 / width; 2]);
    }
    let centers: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    GridDensity::new(centers, counts.iter().map(|c| c / (n * width)).collect())?.normalized()
}

/// Product-kernel density of a pair of observables on the given grids.
pub fn empirical_joint_density(
    s: &SampleSet,
    which: JointObservable,
    kernel: &KernelSpec,
    bandwidths: (f64, f64),
    first_grid: &[f64],
    second_grid: &[f64],
) -> Result<GridDensity2> {
    s.require_sizes("joint density")?;
    let pairs: Vec<(f64, f64)> = if !s.snapshot.is_empty() {
        s.snapshot
            .iter()
            .map(|r| match which {
                JointObservable::AgeSize => (r.age, r.size),
                JointObservable::IncrementSize => (r.size - r.size_birth, r.size),
            })
            .collect()
    } else {
        s.records
            .iter()
            .map(|r| match which {
                JointObservable::AgeSize => (r.lifetime, r.size_division),
                JointObservable::IncrementSize => (r.increment, r.size_division),
            })
            .collect()
    };
    if pairs.is_empty() {
        return Err(Error::invalid("no observations for the joint density"));
    }
    let (h1, h2) = bandwidths;
    if !(h1 > 0.0 && h2 > 0.0) {
        return Err(Error::invalid("joint density needs positive bandwidths"));
    }
    let ny = second_grid.len();
    let mut values = vec![0.0; first_grid.len() * ny];
    let norm = 1.0 / (pairs.len() as f64 * h1 * h2);
    for &(a, b) in &pairs {
        let i0 = first_grid.partition_point(|&g| g < a - h1);
        let i1 = first_grid.partition_point(|&g| g <= a + h1);
        let j0 = second_grid.partition_point(|&g| g < b - h2);
        let j1 = second_grid.partition_point(|&g| g <= b + h2);
        for i in i0..i1 {
            let ka = kernel.eval((first_grid[i] - a) / h1);
            if ka == 0.0 {
                continue;
            }
            for j in j0..j1 {
                values[i * ny + j] += norm * ka * kernel.eval((second_grid[j] - b) / h2);
            }
        }
    }
    GridDensity2::new(first_grid.to_vec(), second_grid.to_vec(), values)
}
