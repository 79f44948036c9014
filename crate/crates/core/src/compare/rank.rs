use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrate, correlation_table, homeostasis_slope, sample_distance, simulate_to_steady};
use super::{Calibration, CorrelationRow, Metric};
use crate::error::{Error, Result};
use crate::estim::{sample_growth_rate, EstimatorSettings};
use crate::model::{FragmentationKernel, GrowthLaw, GrowthVariability, ModelSpec, SampleSet, Scheme, Trigger};
use crate::numerics::mean;
use crate::sim::{simulate_tree, RngStream, RootSpec, DEFAULT_CELL_CAP};
use crate::solver::{GridKind, LatticeSteady, SolverGrid};

/// Log-log slope of division on birth size at or above which a sample shows no size control.
pub const HOMEOSTASIS_LIMIT: f64 = 0.9;

/// Candidates within this many twin distances of the best are tied on the primary metric.
pub const TIE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareOptions {
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub settings: EstimatorSettings,
    #[serde(default)]
    pub seed: u64,
    /// Coefficient of variation of single-cell growth rates in the re-simulations.
    #[serde(default)]
    pub growth_cv: Option<f64>,
    /// Also solve for the steady profile of every candidate on this grid.
    #[serde(default)]
    pub steady_grid: Option<GridKind>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            metric: Metric::Wasserstein1,
            settings: EstimatorSettings::default(),
            seed: 0,
            growth_cv: None,
            steady_grid: None,
        }
    }
}

/// Everything measured for one candidate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub trigger: Trigger,
    pub calibration: Option<Calibration>,
    pub correlations: Option<CorrelationRow>,
    pub homeostasis_slope: Option<f64>,
    /// Primary distance between data and re-simulation on the size marginal.
    pub distance: Option<f64>,
    /// Same distance between two independent re-simulations.
    pub twin_distance: Option<f64>,
    /// Mean absolute deviation of the correlation row from the data's.
    pub correlation_deviation: Option<f64>,
    pub steady: Option<LatticeSteady>,
    /// Why the candidate cannot be ranked on its merits.
    pub degenerate: Option<String>,
    pub notes: Vec<String>,
}

impl ModelFit {
    fn failed(trigger: Trigger, reason: String) -> Self {
        ModelFit {
            trigger,
            calibration: None,
            correlations: None,
            homeostasis_slope: None,
            distance: None,
            twin_distance: None,
            correlation_deviation: None,
            steady: None,
            degenerate: Some(reason),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: Metric,
    pub data_correlations: CorrelationRow,
    pub data_homeostasis_slope: f64,
    /// False when the data show no size control, in which case the size marginal has no
    /// steady law and candidates are ranked by their correlation rows alone.
    pub primary_defined: bool,
    /// Candidates in declaration order.
    pub models: Vec<ModelFit>,
    pub ranking: Vec<Trigger>,
}

impl ComparisonReport {
    pub fn fit(&self, trigger: Trigger) -> Option<&ModelFit> {
        self.models.iter().find(|m| m.trigger == trigger)
    }

    /// Correlation table as CSV: one row for the data, then one per candidate.
    pub fn correlation_csv(&self) -> String {
        let fmt = |row: Option<&CorrelationRow>| -> String {
            (0..6)
                .map(|i| match row.and_then(|r| r.0[i]) {
                    Some(v) => crate::io::fmt17(v),
                    None => String::new(),
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = format!("source,{}\n", super::CORRELATION_COLUMNS.join(","));
        out.push_str(&format!("data,{}\n", fmt(Some(&self.data_correlations))));
        for m in &self.models {
            out.push_str(&format!("{},{}\n", model_name(m.trigger), fmt(m.correlations.as_ref())));
        }
        out
    }
}

pub fn model_name(trigger: Trigger) -> &'static str {
    match trigger {
        Trigger::Age => "timer",
        Trigger::Size => "sizer",
        Trigger::Increment => "adder",
    }
}

fn size_marginal(s: &SampleSet) -> Vec<f64> {
    match s.scheme {
        Scheme::Vt { .. } => s.sizes_at_snapshot(),
        _ => s.division_sizes(),
    }
}

/// Simulate a calibrated model under the scheme of `data`, started from its mean birth size.
pub fn resimulate(
    calibration: &Calibration,
    data: &SampleSet,
    kappa: f64,
    growth_cv: Option<f64>,
    rng: &mut RngStream,
) -> Result<SampleSet> {
    let spec = ModelSpec::new(
        calibration.trigger,
        calibration.rate.clone(),
        GrowthLaw::exponential(kappa)?,
        FragmentationKernel::EqualMitosis,
    )?
    .with_variability(growth_cv.map(GrowthVariability::new).transpose()?);
    let births: Vec<f64> = data.birth_sizes().into_iter().chain(data.snapshot.iter().map(|r| r.size_birth)).collect();
    let start = if births.is_empty() { 1.0 } else { mean(&births) };
    let root = RootSpec::warm(start, 20);
    simulate_tree(&spec, data.scheme, &root, rng, DEFAULT_CELL_CAP)
}

fn evaluate(
    data: &SampleSet,
    trigger: Trigger,
    index: usize,
    kappa: f64,
    data_slope: f64,
    data_row: &CorrelationRow,
    opts: &CompareOptions,
) -> ModelFit {
    let calibration = match calibrate(data, trigger, &opts.settings) {
        Ok(c) => c,
        Err(e) => return ModelFit::failed(trigger, format!("calibration failed: {e}")),
    };
    let mut rng = RngStream::new(opts.seed, 2 * index as u64);
    let mut twin_rng = RngStream::new(opts.seed, 2 * index as u64 + 1);
    let sims = resimulate(&calibration, data, kappa, opts.growth_cv, &mut rng)
        .and_then(|a| Ok((a, resimulate(&calibration, data, kappa, opts.growth_cv, &mut twin_rng)?)));
    let (sim, twin) = match sims {
        Ok(p) => p,
        Err(e) => {
            let mut f = ModelFit::failed(trigger, format!("re-simulation failed: {e}"));
            f.calibration = Some(calibration);
            return f;
        }
    };
    let mut fit = ModelFit::failed(trigger, String::new());
    fit.degenerate = None;
    fit.calibration = Some(calibration.clone());
    if let Scheme::Vt { .. } = data.scheme {
        fit.notes.push("snapshot data carry no division records; correlations unavailable".to_string());
    } else {
        fit.correlations = correlation_table(&sim).ok();
        fit.homeostasis_slope = homeostasis_slope(&sim).ok();
        fit.correlation_deviation = fit.correlations.and_then(|r| r.mean_abs_deviation(data_row));
    }
    let (observed, simulated, repeat) = (size_marginal(data), size_marginal(&sim), size_marginal(&twin));
    if !observed.is_empty() && !simulated.is_empty() && !repeat.is_empty() {
        fit.distance = sample_distance(&observed, &simulated, opts.metric).ok();
        fit.twin_distance = sample_distance(&simulated, &repeat, opts.metric).ok();
    }
    if data_slope < HOMEOSTASIS_LIMIT {
        if let Some(slope) = fit.homeostasis_slope.filter(|s| *s >= HOMEOSTASIS_LIMIT) {
            fit.degenerate = Some(format!(
                "no size control in the re-simulation (log-log slope {slope:.3}), no steady size profile"
            ));
        }
    }
    if let Some(kind) = opts.steady_grid {
        let steady = SolverGrid::new(kind)
            .and_then(|grid| simulate_to_steady(&calibration.rate, trigger, kappa, data.scheme.multiplicity(), &grid));
        match steady {
            Ok(s) => fit.steady = Some(s),
            Err(e) => fit.notes.push(format!("steady state: {e}")),
        }
    }
    fit
}

/// Order of the candidates: degenerate ones last; among the others, those whose primary
/// distance lies within `TIE_FACTOR` twin distances of the best are ordered by correlation
/// deviation, the rest by primary distance. Remaining ties keep declaration order.
fn ranking(models: &[ModelFit], primary_defined: bool) -> Vec<Trigger> {
    let usable = |m: &ModelFit| m.degenerate.is_none() && (!primary_defined || m.distance.is_some());
    let best = models
        .iter()
        .filter(|m| usable(m))
        .filter_map(|m| m.distance)
        .fold(f64::INFINITY, f64::min);
    let key = |m: &ModelFit| -> (u8, f64, f64) {
        let deviation = m.correlation_deviation.unwrap_or(f64::INFINITY);
        if !usable(m) {
            return (2, 0.0, 0.0);
        }
        if !primary_defined {
            return (0, deviation, 0.0);
        }
        let d = m.distance.unwrap_or(f64::INFINITY);
        let band = TIE_FACTOR * m.twin_distance.unwrap_or(0.0);
        if d <= best + band {
            (0, deviation, d)
        } else {
            (1, d, deviation)
        }
    };
    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&models[a]), key(&models[b]));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
    });
    order.into_iter().map(|i| models[i].trigger).collect()
}

/// Calibrate every candidate on `data`, re-simulate it under the same scheme and rank the
/// candidates by their distance to the data on the size marginal, then by correlations.
pub fn rank_models(data: &SampleSet, candidates: &[Trigger], opts: &CompareOptions) -> Result<ComparisonReport> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate models to compare"));
    }
    let data_row = correlation_table(data)?;
    let data_slope = homeostasis_slope(data)?;
    let kappa = match opts.settings.growth_rate {
        Some(g) => g,
        None => sample_growth_rate(data)?,
    };
    let models: Vec<ModelFit> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, &t)| evaluate(data, t, i, kappa, data_slope, &data_row, opts))
        .collect();
    let primary_defined = data_slope < HOMEOSTASIS_LIMIT;
    let ranking = ranking(&models, primary_defined);
    Ok(ComparisonReport {
        metric: opts.metric,
        data_correlations: data_row,
        data_homeostasis_slope: data_slope,
        primary_defined,
        models,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(trigger: Trigger, distance: f64, twin: f64, deviation: f64) -> ModelFit {
        let mut f = ModelFit::failed(trigger, String::new());
        f.degenerate = None;
        f.distance = Some(distance);
        f.twin_distance = Some(twin);
        f.correlation_deviation = Some(deviation);
        f
    }

    #[test]
    fn identical_candidates_keep_declaration_order() {
        let models = vec![fit(Trigger::Size, 0.1, 0.01, 0.2), fit(Trigger::Increment, 0.1, 0.01, 0.2)];
        assert_eq!(ranking(&models, true), vec![Trigger::Size, Trigger::Increment]);
    }

    #[test]
    fn ties_broken_by_correlations_and_degenerate_last() {
        let mut timer = fit(Trigger::Age, 0.01, 0.01, 0.0);
        timer.degenerate = Some("drift".into());
        let models = vec![timer, fit(Trigger::Size, 0.10, 0.02, 0.3), fit(Trigger::Increment, 0.11, 0.02, 0.05)];
        assert_eq!(ranking(&models, true), vec![Trigger::Increment, Trigger::Size, Trigger::Age]);
    }
}
