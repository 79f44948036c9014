use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estim::{run_estimator, EstimatorKind, EstimatorSettings};
use crate::model::{EstimationResult, RateFunction, SampleSet, Tail, Trigger};
use crate::solver::{lattice_steady, LatticeProblem, LatticeSteady, SolverGrid};

/// A division rate fitted to data together with the estimate it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub trigger: Trigger,
    pub estimator: EstimatorKind,
    pub rate: RateFunction,
    pub estimate: EstimationResult,
}

/// Fit the division rate of a timer, sizer or adder model with the estimator matching
/// the sample's observation scheme.
///
/// The rate is tabulated up to the last grid node with a positive, unflagged estimate and
/// held constant beyond it.
pub fn calibrate(data: &SampleSet, trigger: Trigger, settings: &EstimatorSettings) -> Result<Calibration> {
    let estimator = EstimatorKind::for_scheme(trigger, &data.scheme);
    let estimate = run_estimator(estimator, data, settings)?;
    let grid = estimate.grid();
    let values = estimate.values();
    let last = (0..grid.len())
        .rev()
        .find(|&i| values[i] > 0.0 && !estimate.flags[i])
        .ok_or_else(|| {
            Error::numerical(
                "calibration",
                format!("{} produced no positive unflagged value", estimator.name()),
            )
        })?;
    if last < 1 {
        return Err(Error::numerical("calibration", "fitted rate is supported on a single node"));
    }
    let rate = RateFunction::tabulated(grid[..=last].to_vec(), values[..=last].to_vec(), Tail::ConstantLast)?;
    Ok(Calibration {
        trigger,
        estimator,
        rate,
        estimate,
    })
}

/// Steady profile of a calibrated model with exponential growth and equal mitosis, in
/// (increment or age, size), with its size marginal. A profile drifting off the grid is
/// reported as an error, which is the fate of a timer under exponential growth.
pub fn simulate_to_steady(
    rate: &RateFunction,
    trigger: Trigger,
    kappa: f64,
    multiplicity: u8,
    grid: &SolverGrid,
) -> Result<LatticeSteady> {
    let problem = LatticeProblem::new(trigger, rate.clone(), kappa, multiplicity)?;
    lattice_steady(&problem, grid, 256)
}
