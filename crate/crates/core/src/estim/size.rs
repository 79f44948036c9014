use super::{check_grid, clip_negative, grid_derivative, regularize_noisy_density, PointData, Smoothing};
use crate::deconv::{
    dilation_solve, mellin_dilation_solve_with, DilationBranch, DilationProblem, LogGrid, UpperTail,
};
use crate::error::{Error, Result};
use crate::model::{geometric_grid, EstimationResult, FragmentationKernel, GridDensity, GrowthLaw, SampleSet};
use crate::numerics::{interp, tail_trapezoid};
use crate::smoothing::SortedSample;

/// `f_d(x) / int_x^inf (f_d - f_b)` from division- and birth-size densities of one sample.
///
/// Lineage samples are used as they are; population samples must first be reweighted with
/// [`debiased_size_densities`]. The tail integral is accumulated from the top of the grid.
pub fn estimate_b_size_dynamics(
    division: &GridDensity,
    birth: &GridDensity,
    floor: f64,
    grid: &[f64],
) -> Result<EstimationResult> {
    check_grid(grid)?;
    let x = &division.x;
    let birth_on = birth.resample(x)?;
    let diff: Vec<f64> = division.values.iter().zip(&birth_on.values).map(|(d, b)| d - b).collect();
    let tail = tail_trapezoid(x, &diff);
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&y, flag)| {
            let den = interp(x, &tail, y, 0.0);
            if den <= floor {
                *flag = true;
                0.0
            } else {
                division.eval(y) / den
            }
        })
        .collect();
    clip_negative(&mut values, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), values)?, 0.0, flags, f64::NAN);
    r.threshold = Some(floor);
    Ok(r)
}

/// Division- and birth-size densities of a sample, each record weighted by
/// `exp(lambda * lifetime)` with the lifetime read off the growth law. With `lambda = 0`
/// this is the plain pair of densities of a lineage sample.
pub fn debiased_size_densities(
    s: &SampleSet,
    lambda: f64,
    growth: &GrowthLaw,
    smoothing: &Smoothing,
    grid: &[f64],
) -> Result<(GridDensity, GridDensity)> {
    s.require_sizes("size-dynamics estimator")?;
    smoothing.validate()?;
    check_grid(grid)?;
    let births = s.birth_sizes();
    let divisions = s.division_sizes();
    let weights: Vec<f64> = births
        .iter()
        .zip(&divisions)
        .map(|(b, d)| (lambda * growth.flow_time(*b, *d)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let h = smoothing.bandwidth;
    let dens = |values: &[f64]| -> Result<GridDensity> {
        let sorted = SortedSample::weighted(values, Some(&weights))?;
        let v = grid
            .iter()
            .map(|&x| sorted.kernel_sum(&smoothing.kernel, h, x, smoothing.boundary) / total)
            .collect();
        GridDensity::new(grid.to_vec(), v)
    };
    Ok((dens(&divisions)?, dens(&births)?))
}

/// Chain estimator `nu(y/2) / (2 max(P(parent birth <= y, child birth >= y/2), floor))`.
pub fn estimate_b_size_genealogical(
    pairs: &[(f64, f64)],
    smoothing: &Smoothing,
    floor: Option<f64>,
    grid: &[f64],
) -> Result<EstimationResult> {
    if pairs.len() < 2 {
        return Err(Error::invalid("the chain estimator needs at least two parent-child pairs"));
    }
    smoothing.validate()?;
    check_grid(grid)?;
    let n = pairs.len() as f64;
    let floor = floor.unwrap_or(1.0 / n);
    let children: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let s = SortedSample::new(&children)?;
    let h = smoothing.bandwidth;
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&y, flag)| {
            let at_risk = pairs.iter().filter(|(p, c)| *p <= y && *c >= 0.5 * y).count() as f64 / n;
            if at_risk < floor {
                *flag = true;
            }
            0.5 * s.density(&smoothing.kernel, h, 0.5 * y, smoothing.boundary) / at_risk.max(floor)
        })
        .collect();
    clip_negative(&mut values, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), values)?, h, flags, n);
    r.threshold = Some(floor);
    Ok(r)
}

/// Known quantities and tuning of the point-data size estimator.
#[derive(Debug, Clone)]
pub struct SizePointData<'a> {
    pub growth: &'a GrowthLaw,
    pub lambda: f64,
    pub kernel: &'a FragmentationKernel,
    pub multiplicity: u8,
    pub smoothing: Smoothing,
    /// Relative floor on `tau N`; defaults to `1/n`.
    pub floor: Option<f64>,
    /// Switch point from the `H0` to the `Hinf` branch for mitosis; automatic when `None`.
    pub gluing: Option<f64>,
    /// Nodes per doubling of the working grid.
    pub per_doubling: usize,
}

impl<'a> SizePointData<'a> {
    pub fn new(
        growth: &'a GrowthLaw,
        lambda: f64,
        kernel: &'a FragmentationKernel,
        multiplicity: u8,
        smoothing: Smoothing,
    ) -> Self {
        SizePointData {
            growth,
            lambda,
            kernel,
            multiplicity,
            smoothing,
            floor: None,
            gluing: None,
            per_doubling: 64,
        }
    }
}

fn speed_derivative(growth: &GrowthLaw, x: f64) -> f64 {
    if let Some(rate) = growth.exponential_rate() {
        return rate;
    }
    let d = 1e-6 * x.max(1e-6);
    (growth.speed(x + d) - growth.speed((x - d).max(0.0))) / (x + d - (x - d).max(0.0))
}

/// `H / (tau N)` with `H` solving the fragmentation balance `G_k(H) = (tau N)' + lambda N`.
pub fn estimate_b_size_pointdata(
    data: PointData<'_>,
    p: &SizePointData<'_>,
    grid: &[f64],
) -> Result<EstimationResult> {
    p.smoothing.validate()?;
    check_grid(grid)?;
    if p.per_doubling < 2 {
        return Err(Error::invalid("working grid needs at least 2 nodes per doubling"));
    }
    let h = p.smoothing.bandwidth;
    let (work, profile, slope, n) = match data {
        PointData::Sample(sizes) => {
            if sizes.len() < 2 {
                return Err(Error::invalid("the size estimator needs at least two sizes"));
            }
            let s = SortedSample::new(sizes)?;
            let lo = s.values()[0].min(grid[0]).max(f64::MIN_POSITIVE) * 0.25;
            let hi = (s.values()[s.len() - 1] + h).max(grid[grid.len() - 1]) * 2.0;
            let work = geometric_grid(lo, hi, p.per_doubling);
            let k = &p.smoothing.kernel;
            let b = p.smoothing.boundary;
            let prof: Vec<f64> = work.iter().map(|&x| s.density(k, h, x, b)).collect();
            let d: Vec<f64> = work.iter().map(|&x| s.density_derivative(k, h, x, b)).collect();
            (work, prof, d, sizes.len() as f64)
        }
        PointData::Grid(f) => {
            let smooth = regularize_noisy_density(f, &p.smoothing)?;
            let lo = f.x[0].max(grid[0] * 0.25).max(f64::MIN_POSITIVE);
            let hi = f.x[f.len() - 1].max(grid[grid.len() - 1]);
            let work = geometric_grid(lo, hi, p.per_doubling);
            let d = grid_derivative(&smooth.x, &smooth.values);
            let prof = work.iter().map(|&x| smooth.eval(x)).collect();
            let d = work.iter().map(|&x| interp(&smooth.x, &d, x, 0.0)).collect();
            (work, prof, d, f.len() as f64)
        }
    };
    let rhs: Vec<f64> = work
        .iter()
        .zip(profile.iter().zip(&slope))
        .map(|(&x, (nv, dv))| speed_derivative(p.growth, x) * nv + p.growth.speed(x) * dv + p.lambda * nv)
        .collect();
    let rhs = GridDensity::new(work.clone(), rhs)?;
    let flux = if p.kernel.is_mitosis() {
        let mut problem = DilationProblem::new(rhs, p.multiplicity, DilationBranch::Glued { at: p.gluing });
        problem.tail = UpperTail::Zero;
        dilation_solve(&problem)?
    } else {
        let q = 2.0 * p.multiplicity as f64 - 2.0;
        let log_grid = LogGrid {
            points: 1 << 14,
            u_min: work[0].ln() - 8.0,
            u_max: work[work.len() - 1].ln() + 4.0,
        };
        mellin_dilation_solve_with(&rhs, p.kernel, p.multiplicity, q, &log_grid, 1e-8)?.solution
    };
    let tau_n: Vec<f64> = work.iter().zip(&profile).map(|(&x, nv)| p.growth.speed(x) * nv).collect();
    let peak = tau_n.iter().cloned().fold(0.0, f64::max);
    let floor = p.floor.unwrap_or(1.0 / n) * peak;
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&y, flag)| {
            let den = interp(&work, &tau_n, y, 0.0);
            if den <= floor {
                *flag = true;
                0.0
            } else {
                flux.eval(y) / den
            }
        })
        .collect();
    clip_negative(&mut values, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), values)?, h, flags, n);
    r.threshold = Some(floor);
    r.lambda = Some(p.lambda);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::uniform_grid;

    #[test]
    fn equal_densities_flag_everything() {
        let x = uniform_grid(0.1, 4.0, 200);
        let f = GridDensity::from_fn(x.clone(), |t| (-t).exp()).unwrap();
        let r = estimate_b_size_dynamics(&f, &f, 1e-12, &x).unwrap();
        assert_eq!(r.floor_hits(), x.len());
        assert!(r.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn large_threshold_kills_the_chain_estimate() {
        let pairs: Vec<(f64, f64)> = (0..100).map(|i| (1.0 + 0.01 * i as f64, 0.9 + 0.01 * i as f64)).collect();
        let r = estimate_b_size_genealogical(&pairs, &Smoothing::new(crate::model::KernelSpec::biweight(), 0.2), Some(1e12), &[1.0, 1.5])
            .unwrap();
        assert!(r.values().iter().all(|v| *v < 1e-10));
    }
}
