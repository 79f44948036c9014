use serde::{Deserialize, Serialize};

use super::{check_grid, clip_negative, estimate_b_age_genealogical, grid_derivative, PointData, Smoothing};
use crate::deconv::{dilation_solve, fourier_deconvolve, DilationBranch, DilationProblem};
use crate::error::{Error, Result};
use crate::model::{geometric_grid, uniform_grid, EstimationResult, GridDensity};
use crate::numerics::{interp, pearson, tail_trapezoid, trapezoid};
use crate::smoothing::SortedSample;

/// Increments along a lineage form a renewal sequence, so the age estimator applies as is.
/// With birth sizes given, their correlation with the increments is added to the notes.
pub fn estimate_b_increment_genealogical(
    increments: &[f64],
    birth_sizes: Option<&[f64]>,
    smoothing: &Smoothing,
    grid: &[f64],
) -> Result<EstimationResult> {
    let mut r = estimate_b_age_genealogical(increments, smoothing, grid)?;
    if let Some(sizes) = birth_sizes {
        if sizes.len() == increments.len() {
            if let Some(c) = pearson(sizes, increments) {
                r.notes.push(format!("corr(birth size, increment) = {c:.4}"));
            }
        }
    }
    Ok(r)
}

/// Population estimator from `(increment, division size)` pairs: each pair is weighted by
/// its division size, which removes the selection bias under exponential growth.
pub fn estimate_b_increment_population(
    pairs: &[(f64, f64)],
    smoothing: &Smoothing,
    grid: &[f64],
) -> Result<EstimationResult> {
    if pairs.len() < 2 {
        return Err(Error::invalid("the increment estimator needs at least two records"));
    }
    smoothing.validate()?;
    check_grid(grid)?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let s = SortedSample::weighted(&a, Some(&w))?;
    let h = smoothing.bandwidth;
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&z, flag)| {
            let at_risk = s.weight_at_or_above(z);
            if at_risk <= 0.0 {
                *flag = true;
                return 0.0;
            }
            s.kernel_sum(&smoothing.kernel, h, z, smoothing.boundary) / at_risk
        })
        .collect();
    clip_negative(&mut values, &mut flags);
    Ok(EstimationResult::new(
        GridDensity::new(grid.to_vec(), values)?,
        h,
        flags,
        s.effective_size(),
    ))
}

/// Tuning of the size-marginal increment estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalDeconvolution {
    /// Angular frequency cutoff; chosen from the noise level when `None`.
    pub cutoff: Option<f64>,
    /// Relative floor on the denominator transform.
    pub floor: f64,
    /// Points of the uniform grid used for the Fourier step.
    pub points: usize,
    /// Nodes per doubling of the working grid for the dilation step.
    pub per_doubling: usize,
}

impl Default for MarginalDeconvolution {
    fn default() -> Self {
        MarginalDeconvolution {
            cutoff: None,
            floor: 1e-8,
            points: 1 << 14,
            per_doubling: 128,
        }
    }
}

/// Increment density recovered from a size profile, with the cutoff used.
fn recover_increment_density(
    data: PointData<'_>,
    kappa: f64,
    multiplicity: u8,
    smoothing: &Smoothing,
    opts: &MarginalDeconvolution,
) -> Result<(GridDensity, f64, f64)> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("growth rate must be positive"));
    }
    if multiplicity != 1 && multiplicity != 2 {
        return Err(Error::invalid("multiplicity must be 1 or 2"));
    }
    let power = multiplicity as i32 - 1;
    let h = smoothing.bandwidth;
    let (work, profile, slope, n, mean_size) = match data {
        PointData::Sample(sizes) => {
            if sizes.len() < 2 {
                return Err(Error::invalid("need at least two sizes"));
            }
            let w: Vec<f64> = sizes.iter().map(|x| x.powi(power)).collect();
            let s = SortedSample::weighted(sizes, Some(&w))?;
            let lo = s.values()[0].max(f64::MIN_POSITIVE) * 0.25;
            let hi = (s.values()[s.len() - 1] + h) * 2.0;
            let work = geometric_grid(lo, hi, opts.per_doubling);
            let k = &smoothing.kernel;
            let prof: Vec<f64> = work.iter().map(|&x| s.density(k, h, x, smoothing.boundary)).collect();
            let d: Vec<f64> = work.iter().map(|&x| s.density_derivative(k, h, x, smoothing.boundary)).collect();
            let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
            (work, prof, d, s.effective_size(), mean)
        }
        PointData::Grid(f) => {
            let weighted: Vec<f64> = f.x.iter().zip(&f.values).map(|(x, v)| x.powi(power) * v).collect();
            let d = grid_derivative(&f.x, &weighted);
            let lo = match f.x.iter().find(|&&x| x > 0.0) {
                Some(&x) if x < f.x[f.len() - 1] => x,
                _ => return Err(Error::invalid("size profile needs at least two positive nodes")),
            };
            let work = geometric_grid(lo, f.x[f.len() - 1], opts.per_doubling);
            let prof = work.iter().map(|&x| interp(&f.x, &weighted, x, 0.0)).collect();
            let d = work.iter().map(|&x| interp(&f.x, &d, x, 0.0)).collect();
            let mean = trapezoid(&f.x, &f.x.iter().zip(&f.values).map(|(x, v)| x * v).collect::<Vec<_>>())
                / trapezoid(&f.x, &f.values);
            (work, prof, d, f64::INFINITY, mean)
        }
    };
    let rhs: Vec<f64> = work
        .iter()
        .zip(profile.iter().zip(&slope))
        .map(|(&x, (p, d))| kappa * (p + x * d))
        .collect();
    let flux = dilation_solve(&DilationProblem::new(GridDensity::new(work.clone(), rhs)?, 1, DilationBranch::H0))?;
    let top = work[work.len() - 1];
    let z = uniform_grid(0.0, top, opts.points);
    let dz = z[1] - z[0];
    let num: Vec<f64> = z.iter().map(|&t| flux.eval(t)).collect();
    let den: Vec<f64> = z.iter().map(|&t| 2.0 * flux.eval(2.0 * t)).collect();
    let cutoff = match opts.cutoff {
        Some(c) => c,
        None => {
            let noise = if n.is_finite() { 1.0 / n.sqrt() } else { GRID_NOISE };
            default_cutoff(&den, dz, noise, mean_size)
        }
    };
    let raw = fourier_deconvolve(&num, &den, dz, cutoff, opts.floor)?;
    Ok((GridDensity::new(z, raw.values)?, cutoff, n))
}

fn transform(v: &[f64], dz: f64, w: f64) -> num_complex::Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (j, x) in v.iter().enumerate() {
        let (s, c) = (w * j as f64 * dz).sin_cos();
        re += x * c;
        im += x * s;
    }
    num_complex::Complex64::new(re, im) * dz
}

const GRID_NOISE: f64 = 1e-7;

/// First angular frequency where the denominator transform, relative to its value at zero,
/// falls below ten times the noise floor `noise * (1 + w * scale)`. The growth in `w`
/// accounts for the differentiation of the size profile.
fn default_cutoff(den: &[f64], dz: f64, noise: f64, scale: f64) -> f64 {
    let zero = transform(den, dz, 0.0).norm();
    let omega_max = std::f64::consts::PI / dz;
    let step = 0.05;
    let mut w = step;
    while w < omega_max {
        if transform(den, dz, w).norm() < 10.0 * noise * (1.0 + w * scale) * zero {
            return w;
        }
        w += step;
    }
    omega_max
}

/// Increment rate from the stationary size profile under exponential growth and mitosis.
///
/// The flux of divisions solves a dilation equation driven by `(kappa x^k N)'`; it is the
/// convolution of the increment density with the rescaled flux, which is undone in Fourier
/// space. Returns the rate and the normalised increment density.
pub fn estimate_b_increment_from_size_marginal(
    data: PointData<'_>,
    kappa: f64,
    multiplicity: u8,
    smoothing: &Smoothing,
    opts: &MarginalDeconvolution,
    grid: &[f64],
) -> Result<(EstimationResult, GridDensity)> {
    smoothing.validate()?;
    check_grid(grid)?;
    let (raw, cutoff, n) = recover_increment_density(data, kappa, multiplicity, smoothing, opts)?;
    let n = if n.is_finite() { n } else { f64::NAN };
    let mut clipped_flags = vec![false; raw.len()];
    let mut values = raw.values.clone();
    clip_negative(&mut values, &mut clipped_flags);
    let mass = trapezoid(&raw.x, &values);
    if !(mass > 0.0) {
        return Err(Error::numerical("increment deconvolution", "recovered density has no positive mass"));
    }
    values.iter_mut().for_each(|v| *v /= mass);
    let density = GridDensity::new(raw.x.clone(), values)?;
    let survival = tail_trapezoid(&density.x, &density.values);
    let floor = if n.is_finite() { 1.0 / n } else { 1e-10 };
    let clipped_mask: Vec<f64> = clipped_flags.iter().map(|c| if *c { 1.0 } else { 0.0 }).collect();
    let mut flags = vec![false; grid.len()];
    let mut rate: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&t, flag)| {
            let s = interp(&density.x, &survival, t, 0.0);
            let f = density.eval(t);
            let clipped = interp(&density.x, &clipped_mask, t, 0.0) > 0.0;
            if s <= floor {
                *flag = true;
                0.0
            } else {
                *flag = clipped;
                f / s
            }
        })
        .collect();
    clip_negative(&mut rate, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), rate)?, smoothing.bandwidth, flags, n);
    r.spectral_cutoff = Some(cutoff);
    r.threshold = Some(floor);
    Ok((r, density))
}
