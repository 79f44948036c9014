use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SampleSet;
use crate::numerics::{linear_fit, pearson};

/// Column labels of the correlation table: age at division, size at birth, size at
/// division and increment at division, taken pairwise.
pub const CORRELATION_COLUMNS: [&str; 6] = ["AD/SB", "AD/SD", "AD/ID", "SB/SD", "SB/ID", "SD/ID"];

/// Pearson coefficients in the order of [`CORRELATION_COLUMNS`]; `None` marks a pair
/// with a degenerate variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow(pub [Option<f64>; 6]);

impl CorrelationRow {
    /// Mean absolute difference over the entries defined in both rows.
    pub fn mean_abs_deviation(&self, other: &CorrelationRow) -> Option<f64> {
        let d: Vec<f64> = self
            .0
            .iter()
            .zip(&other.0)
            .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
            .collect();
        if d.is_empty() {
            None
        } else {
            Some(d.iter().sum::<f64>() / d.len() as f64)
        }
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        CORRELATION_COLUMNS.iter().position(|c| *c == column).and_then(|i| self.0[i])
    }
}

fn observables(data: &SampleSet) -> Result<[Vec<f64>; 4]> {
    if data.records.len() < 3 {
        return Err(Error::invalid("correlations need at least three complete cell records"));
    }
    data.require_sizes("the correlation table")?;
    Ok([data.lifetimes(), data.birth_sizes(), data.division_sizes(), data.increments()])
}

pub fn correlation_table(data: &SampleSet) -> Result<CorrelationRow> {
    let [ad, sb, sd, id] = observables(data)?;
    Ok(CorrelationRow([
        pearson(&ad, &sb),
        pearson(&ad, &sd),
        pearson(&ad, &id),
        pearson(&sb, &sd),
        pearson(&sb, &id),
        pearson(&sd, &id),
    ]))
}

/// Least-squares slope of log division size on log birth size: 0 for a perfect sizer,
/// about 1/2 for an adder and 1 when nothing controls size.
pub fn homeostasis_slope(data: &SampleSet) -> Result<f64> {
    let [_, sb, sd, _] = observables(data)?;
    let lb: Vec<f64> = sb.iter().map(|v| v.ln()).collect();
    let ld: Vec<f64> = sd.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&lb, &ld);
    if slope.is_finite() {
        Ok(slope)
    } else {
        Err(Error::numerical("homeostasis slope", "birth sizes have no spread"))
    }
}
