use serde::{Deserialize, Serialize};

use super::{check_grid, clip_negative, grid_derivative, regularize_noisy_density, PointData, Smoothing};
use crate::error::{Error, Result};
use crate::model::{EstimationResult, GridDensity, RateFunction, SampleSet, Tail};
use crate::numerics::{interp, linear_fit, tail_trapezoid};
use crate::smoothing::SortedSample;
use crate::solver::malthus_renewal;

/// `sum K_h(a - zeta_i) / #{zeta_i >= a}`, zero where no lifetime reaches `a`.
pub fn estimate_b_age_genealogical(lifetimes: &[f64], smoothing: &Smoothing, grid: &[f64]) -> Result<EstimationResult> {
    if lifetimes.len() < 2 {
        return Err(Error::invalid("the age estimator needs at least two lifetimes"));
    }
    smoothing.validate()?;
    check_grid(grid)?;
    let s = SortedSample::new(lifetimes)?;
    let h = smoothing.bandwidth;
    let mut flags = vec![false; grid.len()];
    let values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&a, flag)| {
            let at_risk = s.weight_at_or_above(a);
            if at_risk <= 0.0 {
                *flag = true;
                return 0.0;
            }
            s.kernel_sum(&smoothing.kernel, h, a, smoothing.boundary) / at_risk
        })
        .collect();
    let mut values = values;
    clip_negative(&mut values, &mut flags);
    Ok(EstimationResult::new(
        GridDensity::new(grid.to_vec(), values)?,
        h,
        flags,
        lifetimes.len() as f64,
    ))
}

/// `exp(-lambda T / (2 s + 1))`
pub fn population_bandwidth(lambda: f64, horizon: f64, smoothness: f64) -> f64 {
    (-lambda * horizon / (2.0 * smoothness + 1.0)).exp()
}

/// Estimator for lifetimes of every cell that divided in a growing population.
///
/// Each lifetime is weighted by `e^{lambda zeta} / 2`, which turns the population lifetime
/// density into the lineage one; the denominator is one minus the weighted empirical CDF.
pub fn estimate_b_age_population(
    lifetimes: &[f64],
    lambda: f64,
    smoothing: &Smoothing,
    floor: Option<f64>,
    grid: &[f64],
) -> Result<EstimationResult> {
    if lifetimes.len() < 2 {
        return Err(Error::invalid("the age estimator needs at least two lifetimes"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("population age estimator needs a positive Malthus parameter"));
    }
    smoothing.validate()?;
    check_grid(grid)?;
    let n = lifetimes.len() as f64;
    let floor = floor.unwrap_or(1.0 / n);
    let weights: Vec<f64> = lifetimes.iter().map(|z| 0.5 * (lambda * z).exp()).collect();
    let s = SortedSample::weighted(lifetimes, Some(&weights))?;
    let h = smoothing.bandwidth;
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = grid
        .iter()
        .zip(flags.iter_mut())
        .map(|(&a, flag)| {
            let survival = 1.0 - s.weight_at_or_below(a) / n;
            if survival <= floor {
                *flag = true;
                return 0.0;
            }
            s.kernel_sum(&smoothing.kernel, h, a, smoothing.boundary) / n / survival
        })
        .collect();
    if flags.iter().all(|f| *f) {
        return Err(Error::numerical(
            "population age estimator",
            "denominator below the floor on the whole grid",
        ));
    }
    clip_negative(&mut values, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), values)?, h, flags, s.effective_size());
    r.threshold = Some(floor);
    r.lambda = Some(lambda);
    Ok(r)
}

/// Hazard `f(x) / int_x^inf f` of a density, tabulated on its grid and truncated where
/// the survival drops below `floor`.
///
/// Survival is accumulated from the right end; mass past the last node is closed with an
/// exponential fitted to the last two values, or with the missing unit mass when the
/// density does not decay there.
pub fn compute_biased_hazard(f: &GridDensity, floor: f64) -> Result<RateFunction> {
    let tail = tail_trapezoid(&f.x, &f.values);
    let beyond = beyond_grid_mass(f, tail[0]);
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for i in 0..f.len() {
        let survival = tail[i] + beyond;
        if survival <= floor {
            break;
        }
        grid.push(f.x[i]);
        values.push((f.values[i] / survival).max(0.0));
    }
    if grid.len() < 2 {
        return Err(Error::numerical("biased hazard", "survival below the floor from the start"));
    }
    RateFunction::tabulated(grid, values, Tail::ConstantLast)
}

fn beyond_grid_mass(f: &GridDensity, total: f64) -> f64 {
    let n = f.len();
    let (y0, y1) = (f.values[n - 2], f.values[n - 1]);
    if y1 > 0.0 && y0 > y1 {
        let decay = (y0 / y1).ln() / (f.x[n - 1] - f.x[n - 2]);
        y1 / decay
    } else {
        (1.0 - total).max(0.0)
    }
}

/// Malthus parameter with the matching doubling time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub doubling_time: f64,
}

impl LambdaEstimate {
    fn new(lambda: f64) -> Self {
        LambdaEstimate {
            lambda,
            doubling_time: std::f64::consts::LN_2 / lambda,
        }
    }

    /// Root of the renewal equation for an estimated age rate.
    pub fn from_rate(rate: &RateFunction, multiplicity: u8) -> Result<Self> {
        if multiplicity != 2 {
            return Err(Error::invalid("a Malthus parameter needs the whole population"));
        }
        Ok(Self::new(malthus_renewal(rate)?))
    }
}

/// Least-squares slope of `ln(count)` against time.
pub fn estimate_lambda(counts: &[(f64, f64)]) -> Result<LambdaEstimate> {
    if counts.len() < 3 {
        return Err(Error::invalid("need at least three time points"));
    }
    if counts.iter().any(|(_, c)| !(*c > 0.0)) {
        return Err(Error::invalid("population counts must be positive"));
    }
    let t: Vec<f64> = counts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = counts.iter().map(|p| p.1.ln()).collect();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi - lo < std::f64::consts::LN_2 - 1e-12 {
        return Err(Error::invalid("counts span less than one doubling"));
    }
    let (slope, _) = linear_fit(&t, &y);
    if !(slope > 0.0) {
        return Err(Error::numerical("estimate_lambda", format!("series is not growing (slope {slope})")));
    }
    Ok(LambdaEstimate::new(slope))
}

/// Slope of the log cumulative number of divisions at `points` times in `[from, to]`.
pub fn estimate_lambda_from_divisions(s: &SampleSet, from: f64, to: f64, points: usize) -> Result<LambdaEstimate> {
    if !(to > from) || points < 3 {
        return Err(Error::invalid("need from < to and at least three time points"));
    }
    let mut times: Vec<f64> = s.records.iter().map(|r| r.division_time()).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let counts: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let t = from + (to - from) * i as f64 / (points - 1) as f64;
            (t, times.partition_point(|&d| d <= t) as f64)
        })
        .filter(|p| p.1 > 0.0)
        .collect();
    estimate_lambda(&counts)
}

/// `max(0, -lambda - N'/N)` from snapshot ages or a tabulated age profile.
pub fn estimate_b_age_pointdata(
    data: PointData<'_>,
    lambda: f64,
    smoothing: &Smoothing,
    floor: Option<f64>,
    grid: &[f64],
) -> Result<EstimationResult> {
    smoothing.validate()?;
    check_grid(grid)?;
    let h = smoothing.bandwidth;
    let (profile, slope, n): (Vec<f64>, Vec<f64>, f64) = match data {
        PointData::Sample(ages) => {
            if ages.len() < 2 {
                return Err(Error::invalid("the age estimator needs at least two ages"));
            }
            let s = SortedSample::new(ages)?;
            let k = &smoothing.kernel;
            let p = grid.iter().map(|&a| s.density(k, h, a, smoothing.boundary)).collect();
            let d = grid
                .iter()
                .map(|&a| s.density_derivative(k, h, a, smoothing.boundary))
                .collect();
            (p, d, ages.len() as f64)
        }
        PointData::Grid(f) => {
            let smooth = regularize_noisy_density(f, smoothing)?;
            let d = grid_derivative(&smooth.x, &smooth.values);
            let p = grid.iter().map(|&a| smooth.eval(a)).collect();
            let d = grid.iter().map(|&a| interp(&smooth.x, &d, a, 0.0)).collect();
            (p, d, f.len() as f64)
        }
    };
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let floor = floor.unwrap_or(1.0 / n) * peak;
    let mut flags = vec![false; grid.len()];
    let mut values: Vec<f64> = profile
        .iter()
        .zip(&slope)
        .zip(flags.iter_mut())
        .map(|((p, d), flag)| {
            if *p <= floor {
                *flag = true;
                0.0
            } else {
                (-lambda - d / p).max(0.0)
            }
        })
        .collect();
    if flags.iter().all(|f| *f) {
        return Err(Error::numerical("point-data age estimator", "profile below the floor everywhere"));
    }
    clip_negative(&mut values, &mut flags);
    let mut r = EstimationResult::new(GridDensity::new(grid.to_vec(), values)?, h, flags, n);
    r.threshold = Some(floor);
    r.lambda = Some(lambda);
    Ok(r)
}
