use serde::{Deserialize, Serialize};

use super::{
    debiased_size_densities, estimate_b_age_genealogical, estimate_b_age_pointdata, estimate_b_age_population,
    estimate_b_increment_from_size_marginal, estimate_b_increment_genealogical, estimate_b_increment_population,
    estimate_b_size_dynamics, estimate_b_size_genealogical, estimate_b_size_pointdata, estimate_lambda_from_divisions,
    select_bandwidth, BandwidthMethod, MarginalDeconvolution, PointData, SizePointData, Smoothing,
};
use crate::error::{Error, Result};
use crate::model::{
    uniform_grid, EstimationResult, FragmentationKernel, GrowthLaw, KernelSpec, SampleSet, Scheme, Trigger,
};
use crate::numerics::{mean, quantile};

/// Every estimator reachable from a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    AgeGenealogical,
    AgePopulation,
    AgePointData,
    SizeGenealogical,
    SizeDynamics,
    SizePointData,
    IncrementGenealogical,
    IncrementPopulation,
    IncrementMarginal,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 9] = [
        EstimatorKind::AgeGenealogical,
        EstimatorKind::AgePopulation,
        EstimatorKind::AgePointData,
        EstimatorKind::SizeGenealogical,
        EstimatorKind::SizeDynamics,
        EstimatorKind::SizePointData,
        EstimatorKind::IncrementGenealogical,
        EstimatorKind::IncrementPopulation,
        EstimatorKind::IncrementMarginal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::AgeGenealogical => "age-genealogical",
            EstimatorKind::AgePopulation => "age-population",
            EstimatorKind::AgePointData => "age-point-data",
            EstimatorKind::SizeGenealogical => "size-genealogical",
            EstimatorKind::SizeDynamics => "size-dynamics",
            EstimatorKind::SizePointData => "size-point-data",
            EstimatorKind::IncrementGenealogical => "increment-genealogical",
            EstimatorKind::IncrementPopulation => "increment-population",
            EstimatorKind::IncrementMarginal => "increment-marginal",
        }
    }

    pub fn trigger(&self) -> Trigger {
        match self {
            EstimatorKind::AgeGenealogical | EstimatorKind::AgePopulation | EstimatorKind::AgePointData => Trigger::Age,
            EstimatorKind::SizeGenealogical | EstimatorKind::SizeDynamics | EstimatorKind::SizePointData => {
                Trigger::Size
            }
            _ => Trigger::Increment,
        }
    }

    /// The estimator matching a trigger variable and an observation scheme.
    pub fn for_scheme(trigger: Trigger, scheme: &Scheme) -> Self {
        match (trigger, scheme) {
            (Trigger::Age, Scheme::U1 { .. }) => EstimatorKind::AgeGenealogical,
            (Trigger::Age, Scheme::U2 { .. }) => EstimatorKind::AgePopulation,
            (Trigger::Age, Scheme::Vt { .. }) => EstimatorKind::AgePointData,
            (Trigger::Size, Scheme::U1 { .. }) => EstimatorKind::SizeGenealogical,
            (Trigger::Size, Scheme::U2 { .. }) => EstimatorKind::SizeDynamics,
            (Trigger::Size, Scheme::Vt { .. }) => EstimatorKind::SizePointData,
            (Trigger::Increment, Scheme::U1 { .. }) => EstimatorKind::IncrementGenealogical,
            (Trigger::Increment, Scheme::U2 { .. }) => EstimatorKind::IncrementPopulation,
            (Trigger::Increment, Scheme::Vt { .. }) => EstimatorKind::IncrementMarginal,
        }
    }

    fn point_data(&self) -> bool {
        matches!(
            self,
            EstimatorKind::AgePointData | EstimatorKind::SizePointData | EstimatorKind::IncrementMarginal
        )
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator '{s}'")))
    }
}

/// Tuning shared by all estimators; unset fields are derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSettings {
    #[serde(default = "default_order")]
    pub kernel_order: usize,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_method")]
    pub bandwidth_method: BandwidthMethod,
    /// Malthus parameter of the population; estimated from division times when possible.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Exponential growth rate; defaults to the mean recorded growth rate.
    #[serde(default)]
    pub growth_rate: Option<f64>,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    /// Evaluation range; defaults to the bulk of the relevant observable.
    #[serde(default)]
    pub grid_range: Option<(f64, f64)>,
    #[serde(default)]
    pub spectral_cutoff: Option<f64>,
}

fn default_order() -> usize {
    2
}

fn default_method() -> BandwidthMethod {
    BandwidthMethod::RuleOfThumb
}

fn default_points() -> usize {
    201
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings {
            kernel_order: default_order(),
            bandwidth: None,
            bandwidth_method: default_method(),
            lambda: None,
            growth_rate: None,
            floor: None,
            grid_points: default_points(),
            grid_range: None,
            spectral_cutoff: None,
        }
    }
}

fn records_needed(data: &SampleSet, kind: EstimatorKind) -> Result<()> {
    let missing = if kind.point_data() {
        data.snapshot.len() < 2
    } else {
        data.records.len() < 2
    };
    if missing {
        let what = if kind.point_data() { "snapshot cells (age, size)" } else { "complete cell records" };
        return Err(Error::MissingObservables {
            what: kind.name().to_string(),
            missing: what.to_string(),
        });
    }
    if kind.trigger() != Trigger::Age {
        data.require_sizes(kind.name())?;
    }
    Ok(())
}

/// Mean recorded growth rate of a sample.
pub fn sample_growth_rate(data: &SampleSet) -> Result<f64> {
    let rates: Vec<f64> = data
        .records
        .iter()
        .map(|r| r.growth_rate)
        .chain(data.snapshot.iter().map(|r| r.growth_rate))
        .filter(|g| g.is_finite() && *g > 0.0)
        .collect();
    if rates.is_empty() {
        return Err(Error::MissingObservables {
            what: "growth rate".to_string(),
            missing: "growth_rate column or estimator setting growth_rate".to_string(),
        });
    }
    Ok(mean(&rates))
}

/// Malthus parameter from the settings or, for U2 samples, from the division counts.
pub fn sample_lambda(data: &SampleSet, settings: &EstimatorSettings, what: &str) -> Result<f64> {
    if let Some(l) = settings.lambda {
        return Ok(l);
    }
    match data.scheme {
        Scheme::U2 { horizon } if data.records.len() >= 3 => {
            let first = data.records.iter().map(|r| r.division_time()).fold(f64::INFINITY, f64::min);
            let from = first.max(0.5 * horizon);
            Ok(estimate_lambda_from_divisions(data, from, horizon, 16)?.lambda)
        }
        _ => Err(Error::MissingObservables {
            what: what.to_string(),
            missing: "the Malthus parameter: set lambda or supply U2 division times".to_string(),
        }),
    }
}

fn sorted(v: Vec<f64>) -> Vec<f64> {
    let mut v = v;
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Observable whose density drives the estimator, and whether it lives on the half line.
fn driving_sample(data: &SampleSet, kind: EstimatorKind) -> (Vec<f64>, bool) {
    match kind {
        EstimatorKind::AgeGenealogical | EstimatorKind::AgePopulation => (data.lifetimes(), true),
        EstimatorKind::AgePointData => (data.ages_at_snapshot(), true),
        EstimatorKind::SizeGenealogical => (data.birth_sizes(), false),
        EstimatorKind::SizeDynamics => (data.division_sizes(), false),
        EstimatorKind::SizePointData | EstimatorKind::IncrementMarginal => (data.sizes_at_snapshot(), false),
        EstimatorKind::IncrementGenealogical | EstimatorKind::IncrementPopulation => (data.increments(), true),
    }
}

fn default_range(data: &SampleSet, kind: EstimatorKind) -> (f64, f64) {
    match kind.trigger() {
        Trigger::Size => {
            let (births, divisions) = if kind == EstimatorKind::SizePointData {
                let s = sorted(data.sizes_at_snapshot());
                (s.clone(), s)
            } else {
                (sorted(data.birth_sizes()), sorted(data.division_sizes()))
            };
            (quantile(&births, 0.005), quantile(&divisions, 0.995))
        }
        _ => {
            let v = if kind == EstimatorKind::IncrementMarginal {
                let s = sorted(data.sizes_at_snapshot());
                vec![0.0, quantile(&s, 0.9)]
            } else {
                sorted(driving_sample(data, kind).0)
            };
            (0.0, quantile(&v, 0.99))
        }
    }
}

/// Run `kind` on `data` with bandwidth, grid and known quantities resolved from `settings`.
pub fn run_estimator(kind: EstimatorKind, data: &SampleSet, settings: &EstimatorSettings) -> Result<EstimationResult> {
    records_needed(data, kind)?;
    let kernel = KernelSpec::by_order(settings.kernel_order)?;
    let (sample, half_line) = driving_sample(data, kind);
    let boundary = if half_line { Some(0.0) } else { None };
    let n = sample.len() as f64;
    let h = match settings.bandwidth {
        Some(h) => h,
        None => {
            let h = select_bandwidth(&sample, &kernel, settings.bandwidth_method, boundary)?;
            if kind.point_data() && settings.bandwidth_method == BandwidthMethod::RuleOfThumb {
                let s = kernel.order as f64;
                2.0 * h * n.powf(1.0 / (2.0 * s + 1.0) - 1.0 / (2.0 * s + 3.0))
            } else {
                h
            }
        }
    };
    let smoothing = Smoothing::new(kernel, h).with_boundary(boundary);
    let (lo, hi) = settings.grid_range.unwrap_or_else(|| default_range(data, kind));
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty evaluation range [{lo}, {hi}]")));
    }
    let grid = uniform_grid(lo, hi, settings.grid_points.max(2));
    let growth = || -> Result<GrowthLaw> {
        GrowthLaw::exponential(match settings.growth_rate {
            Some(g) => g,
            None => sample_growth_rate(data)?,
        })
    };
    let mut result = match kind {
        EstimatorKind::AgeGenealogical => estimate_b_age_genealogical(&sample, &smoothing, &grid)?,
        EstimatorKind::AgePopulation => {
            let lambda = sample_lambda(data, settings, kind.name())?;
            estimate_b_age_population(&sample, lambda, &smoothing, settings.floor, &grid)?
        }
        EstimatorKind::AgePointData => {
            let lambda = sample_lambda(data, settings, kind.name())?;
            let mut r = estimate_b_age_pointdata(PointData::Sample(&sample), lambda, &smoothing, settings.floor, &grid)?;
            r.lambda = Some(lambda);
            r
        }
        EstimatorKind::SizeGenealogical => {
            let pairs = data.birth_size_pairs();
            if pairs.len() < 2 {
                return Err(Error::MissingObservables {
                    what: kind.name().to_string(),
                    missing: "parent links between consecutive cells".to_string(),
                });
            }
            estimate_b_size_genealogical(&pairs, &smoothing, settings.floor, &grid)?
        }
        EstimatorKind::SizeDynamics => {
            let lambda = if data.scheme.multiplicity() == 1 {
                0.0
            } else {
                sample_lambda(data, settings, kind.name())?
            };
            let top = sample.iter().cloned().fold(hi, f64::max) + 4.0 * h;
            let fine = uniform_grid(0.0, top, 2048);
            let (fd, fb) = debiased_size_densities(data, lambda, &growth()?, &smoothing, &fine)?;
            let floor = settings.floor.unwrap_or(1.0 / n);
            let mut r = estimate_b_size_dynamics(&fd, &fb, floor, &grid)?;
            r.bandwidth = h;
            r.effective_sample_size = n;
            if lambda > 0.0 {
                r.lambda = Some(lambda);
            }
            r
        }
        EstimatorKind::SizePointData => {
            let lambda = sample_lambda(data, settings, kind.name())?;
            let growth = growth()?;
            let frag = FragmentationKernel::EqualMitosis;
            let mut opts = SizePointData::new(&growth, lambda, &frag, data.scheme.multiplicity(), smoothing);
            opts.floor = settings.floor;
            let mut r = estimate_b_size_pointdata(PointData::Sample(&sample), &opts, &grid)?;
            r.lambda = Some(lambda);
            r
        }
        EstimatorKind::IncrementGenealogical => {
            let births = data.birth_sizes();
            estimate_b_increment_genealogical(&sample, Some(&births), &smoothing, &grid)?
        }
        EstimatorKind::IncrementPopulation => {
            let pairs: Vec<(f64, f64)> = data.records.iter().map(|r| (r.increment, r.size_division)).collect();
            estimate_b_increment_population(&pairs, &smoothing, &grid)?
        }
        EstimatorKind::IncrementMarginal => {
            let kappa = match settings.growth_rate {
                Some(g) => g,
                None => sample_growth_rate(data)?,
            };
            let opts = MarginalDeconvolution {
                cutoff: settings.spectral_cutoff,
                ..MarginalDeconvolution::default()
            };
            estimate_b_increment_from_size_marginal(
                PointData::Sample(&sample),
                kappa,
                data.scheme.multiplicity(),
                &smoothing,
                &opts,
                &grid,
            )?
            .0
        }
    };
    result.notes.push(format!("estimator {}", kind.name()));
    Ok(result)
}
