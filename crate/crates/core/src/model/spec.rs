use serde::{Deserialize, Serialize};

use super::{FragmentationKernel, GrowthLaw, GrowthVariability, RateFunction};
use crate::error::{Error, Result};

/// Structuring variable whose value drives division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    /// Division hazard `B(a) dt`.
    #[serde(alias = "timer")]
    Age,
    /// Division hazard `tau(x) B(x) dt`.
    #[serde(alias = "sizer")]
    Size,
    /// Division hazard `tau(xi + z) B(z) dt` with `z` the size added since birth.
    #[serde(alias = "adder")]
    Increment,
}

impl Trigger {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trigger::Age => "age",
            Trigger::Size => "size",
            Trigger::Increment => "increment",
        }
    }
}

impl std::str::FromStr for Trigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "age" | "timer" => Ok(Trigger::Age),
            "size" | "sizer" => Ok(Trigger::Size),
            "increment" | "adder" => Ok(Trigger::Increment),
            other => Err(Error::invalid(format!("unknown trigger '{other}'"))),
        }
    }
}

/// Full generative description of a growing and dividing population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub trigger: Trigger,
    pub rate: RateFunction,
    pub growth: GrowthLaw,
    pub kernel: FragmentationKernel,
    pub growth_variability: Option<GrowthVariability>,
}

impl ModelSpec {
    pub fn new(
        trigger: Trigger,
        rate: RateFunction,
        growth: GrowthLaw,
        kernel: FragmentationKernel,
    ) -> Result<Self> {
        growth.validate()?;
        kernel.validate()?;
        Ok(ModelSpec {
            trigger,
            rate,
            growth,
            kernel,
            growth_variability: None,
        })
    }

    pub fn with_variability(mut self, variability: Option<GrowthVariability>) -> Self {
        self.growth_variability = variability.filter(|v| v.cv > 0.0);
        self
    }

    /// Age model with exponential growth and equal mitosis, the common test setting.
    pub fn age(rate: RateFunction, growth_rate: f64) -> Result<Self> {
        Self::new(
            Trigger::Age,
            rate,
            GrowthLaw::exponential(growth_rate)?,
            FragmentationKernel::EqualMitosis,
        )
    }

    pub fn size(rate: RateFunction, growth_rate: f64) -> Result<Self> {
        Self::new(
            Trigger::Size,
            rate,
            GrowthLaw::exponential(growth_rate)?,
            FragmentationKernel::EqualMitosis,
        )
    }

    pub fn increment(rate: RateFunction, growth_rate: f64) -> Result<Self> {
        Self::new(
            Trigger::Increment,
            rate,
            GrowthLaw::exponential(growth_rate)?,
            FragmentationKernel::EqualMitosis,
        )
    }
}
