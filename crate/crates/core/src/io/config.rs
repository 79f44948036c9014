use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compare::CompareOptions;
use crate::error::{Error, Result};
use crate::estim::{EstimatorKind, EstimatorSettings};
use crate::model::{FragmentationKernel, GrowthLaw, GrowthVariability, ModelSpec, RateFunction, Scheme, Trigger};
use crate::sim::{RootSpec, DEFAULT_CELL_CAP};
use crate::solver::GridKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Eigen,
    Estimate,
    Compare,
}

/// One run: the command, its inputs and where outputs go.
///
/// Values given on the command line replace those read from the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub trigger: Trigger,
    pub rate: RateFunction,
    #[serde(default = "default_growth")]
    pub growth: GrowthLaw,
    #[serde(default = "default_kernel")]
    pub kernel: FragmentationKernel,
    /// Coefficient of variation of per-cell growth rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_cv: Option<f64>,
}

fn default_growth() -> GrowthLaw {
    GrowthLaw::Exponential { rate: 1.0 }
}

fn default_kernel() -> FragmentationKernel {
    FragmentationKernel::EqualMitosis
}

impl ModelBlock {
    pub fn spec(&self) -> Result<ModelSpec> {
        let variability = self.growth_cv.map(GrowthVariability::new).transpose()?;
        Ok(ModelSpec::new(self.trigger, self.rate.clone(), self.growth.clone(), self.kernel.clone())?
            .with_variability(variability))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    /// `U1(generations)`, `U2(horizon)` or `VT(time)`.
    pub tag: String,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "unit")]
    pub root_size: f64,
    #[serde(default)]
    pub warm_start: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_cap() -> usize {
    DEFAULT_CELL_CAP
}

impl SchemeBlock {
    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::parse_tag(&self.tag)
    }

    pub fn root(&self) -> RootSpec {
        RootSpec::warm(self.root_size, self.warm_start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenBlock {
    #[serde(default = "two")]
    pub multiplicity: u8,
    /// Size grid; a geometric grid from 1/64 to 64 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridKind>,
}

fn two() -> u8 {
    2
}

impl Default for EigenBlock {
    fn default() -> Self {
        EigenBlock {
            multiplicity: 2,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBlock {
    pub estimator: EstimatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub settings: EstimatorSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default = "all_models")]
    pub candidates: Vec<Trigger>,
    #[serde(default)]
    pub options: CompareOptions,
}

fn all_models() -> Vec<Trigger> {
    vec![Trigger::Age, Trigger::Size, Trigger::Increment]
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("cannot serialise config: {e}")))
    }

    /// Checks that need more than the file syntax.
    pub fn validate(&self) -> Result<()> {
        let ctx = |key: &str, e: Error| Error::Validation(format!("config key {key}: {e}"));
        if let Some(m) = &self.model {
            m.spec().map_err(|e| ctx("model", e))?;
        }
        if let Some(s) = &self.scheme {
            s.scheme().map_err(|e| ctx("scheme.tag", e))?;
            if s.replicates == 0 {
                return Err(Error::Validation("config key scheme.replicates: must be at least 1".into()));
            }
            if !(s.root_size > 0.0) {
                return Err(Error::Validation("config key scheme.root_size: must be positive".into()));
            }
        }
        if let Some(e) = &self.eigen {
            if e.multiplicity != 1 && e.multiplicity != 2 {
                return Err(Error::Validation("config key eigen.multiplicity: must be 1 or 2".into()));
            }
        }
        if let Some(c) = &self.compare {
            if c.candidates.is_empty() {
                return Err(Error::Validation("config key compare.candidates: must not be empty".into()));
            }
        }
        Ok(())
    }

    /// Block required by `command`, or a validation error naming it.
    pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("config: missing [{name}] section")))
    }
}
