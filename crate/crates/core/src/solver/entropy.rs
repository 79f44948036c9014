use serde::{Deserialize, Serialize};

use super::grid::trapezoid_weights;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::model::{EigenTriplet, GridDensity};

/// Convex profile of the relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyProfile {
    /// `u^2`
    Square,
    /// `|u - 1|`
    Abs,
    /// `u ln u`
    XLogX,
}

impl EntropyProfile {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            EntropyProfile::Square => u * u,
            EntropyProfile::Abs => (u - 1.0).abs(),
            EntropyProfile::XLogX => {
                if u > 0.0 {
                    u * u.ln()
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for EntropyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(EntropyProfile::Square),
            "abs" => Ok(EntropyProfile::Abs),
            "xlogx" => Ok(EntropyProfile::XLogX),
            other => Err(Error::invalid(format!("unknown entropy profile '{other}'"))),
        }
    }
}

/// Relative entropy value and the mass of `n` where the reference profile vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub excluded_mass: f64,
}

fn reference_weights(reference: &EigenTriplet) -> Vec<f64> {
    if reference.weights.len() == reference.direct.len() {
        reference.weights.clone()
    } else {
        trapezoid_weights(&reference.direct.x)
    }
}

/// `int phi N H(n e^{-lambda t} / N)` on the grid of the reference eigenvector.
pub fn gre_entropy(n: &GridDensity, reference: &EigenTriplet, profile: EntropyProfile, t: f64) -> Result<EntropyValue> {
    let grid = &reference.direct.x;
    let values = if n.x == *grid {
        n.values.clone()
    } else {
        n.resample(grid)?.values
    };
    Ok(entropy_on(&values, reference, &reference_weights(reference), profile, t))
}

fn entropy_on(values: &[f64], reference: &EigenTriplet, w: &[f64], profile: EntropyProfile, t: f64) -> EntropyValue {
    let decay = (-reference.lambda * t).exp();
    let mut value = 0.0;
    let mut excluded = 0.0;
    for i in 0..values.len() {
        let big_n = reference.direct.values[i];
        if big_n <= f64::MIN_POSITIVE {
            excluded += w[i] * values[i].abs();
            continue;
        }
        value += w[i] * reference.adjoint[i] * big_n * profile.eval(values[i] * decay / big_n);
    }
    EntropyValue {
        value,
        excluded_mass: excluded,
    }
}

/// Entropy along a trajectory with finite-difference dissipation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `-(H(t_{i+1}) - H(t_i)) / (t_{i+1} - t_i)`, one fewer than `values`.
    pub dissipation: Vec<f64>,
    pub excluded_mass: f64,
}

impl EntropyTrace {
    /// Largest increase between consecutive records.
    pub fn max_increase(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn entropy_trace(traj: &Trajectory, reference: &EigenTriplet, profile: EntropyProfile) -> Result<EntropyTrace> {
    if traj.grid != reference.direct.x {
        return Err(Error::invalid("trajectory and reference eigenvector live on different grids"));
    }
    let w = reference_weights(reference);
    let mut values = Vec::with_capacity(traj.len());
    let mut excluded = 0.0f64;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let e = entropy_on(state, reference, &w, profile, *t);
        values.push(e.value);
        excluded = excluded.max(e.excluded_mass);
    }
    let dissipation = values
        .windows(2)
        .zip(traj.times.windows(2))
        .map(|(v, t)| -(v[1] - v[0]) / (t[1] - t[0]))
        .collect();
    Ok(EntropyTrace {
        times: traj.times.clone(),
        values,
        dissipation,
        excluded_mass: excluded,
    })
}
