use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::newton_bracketed;

/// Extrapolation of a tabulated rate outside its abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tail {
    /// Keep the first value below the grid and the last value above it.
    ConstantLast,
    /// `last * (x / x_last)^exponent` above the grid.
    PowerLaw { exponent: f64 },
    /// Zero below the first abscissa, last value above the grid.
    ZeroBeforeStart,
}

/// Analytic rates used for test cases and configuration shortcuts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedForm {
    Constant { value: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `level` for `x >= onset`, zero before.
    Step { level: f64, onset: f64 },
}

/// A nonnegative division rate on the half line, per unit of its trigger variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "RateRepr")]
pub struct RateFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    node_hazard: Vec<f64>,
    tail: Tail,
    closed_form: Option<ClosedForm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateRepr {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    values: Vec<f64>,
    #[serde(default = "default_tail")]
    tail: Tail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    closed_form: Option<ClosedForm>,
}

fn default_tail() -> Tail {
    Tail::ConstantLast
}

impl TryFrom<RateRepr> for RateFunction {
    type Error = Error;

    fn try_from(r: RateRepr) -> Result<Self> {
        match r.closed_form {
            Some(form) => RateFunction::closed(form),
            None => RateFunction::tabulated(r.grid, r.values, r.tail),
        }
    }
}

impl From<RateFunction> for RateRepr {
    fn from(r: RateFunction) -> Self {
        RateRepr {
            grid: r.grid,
            values: r.values,
            tail: r.tail,
            closed_form: r.closed_form,
        }
    }
}

impl RateFunction {
    pub fn constant(value: f64) -> Result<Self> {
        Self::closed(ClosedForm::Constant { value })
    }

    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        Self::closed(ClosedForm::Power { coeff, exponent })
    }

    pub fn step(level: f64, onset: f64) -> Result<Self> {
        Self::closed(ClosedForm::Step { level, onset })
    }

    pub fn closed(form: ClosedForm) -> Result<Self> {
        match form {
            ClosedForm::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(Error::invalid(
                    "constant rate must be positive for the hazard to diverge",
                ))
            }
            ClosedForm::Power { coeff, exponent }
                if !(coeff > 0.0 && coeff.is_finite() && exponent >= 0.0 && exponent.is_finite()) =>
            {
                return Err(Error::invalid(
                    "power rate needs a positive coefficient and a nonnegative exponent",
                ))
            }
            ClosedForm::Step { level, onset }
                if !(level > 0.0 && level.is_finite() && onset >= 0.0 && onset.is_finite()) =>
            {
                return Err(Error::invalid(
                    "step rate needs a positive level and a nonnegative onset",
                ))
            }
            _ => {}
        }
        Ok(RateFunction {
            grid: Vec::new(),
            values: Vec::new(),
            node_hazard: Vec::new(),
            tail: Tail::ConstantLast,
            closed_form: Some(form),
        })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::invalid(
                "tabulated rate needs at least two abscissae and matching values",
            ));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "rate abscissae must be nonnegative and strictly increasing",
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("rate values must be finite and nonnegative"));
        }
        let last = *values.last().expect("length checked");
        if last <= 0.0 {
            return Err(Error::invalid(
                "the last tabulated rate value must be positive so that every cell divides",
            ));
        }
        if let Tail::PowerLaw { exponent } = tail {
            if !(exponent >= 0.0 && exponent.is_finite()) {
                return Err(Error::invalid("power-law tail exponent must be nonnegative"));
            }
        }
        let mut node_hazard = Vec::with_capacity(grid.len());
        let first = match tail {
            Tail::ZeroBeforeStart => 0.0,
            _ => values[0] * grid[0],
        };
        node_hazard.push(first);
        for i in 1..grid.len() {
            let prev = node_hazard[i - 1];
            node_hazard.push(prev + 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]));
        }
        Ok(RateFunction {
            grid,
            values,
            node_hazard,
            tail,
            closed_form: None,
        })
    }

    /// Tabulate any rate on a grid, keeping `tail` for extrapolation.
    pub fn tabulate_from(other: &RateFunction, grid: Vec<f64>, tail: Tail) -> Result<Self> {
        let values = grid.iter().map(|&x| other.eval(x)).collect();
        Self::tabulated(grid, values, tail)
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Rate at `x >= 0`; negative arguments are treated as zero.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        if let Some(form) = self.closed_form {
            return match form {
                ClosedForm::Constant { value } => value,
                ClosedForm::Power { coeff, exponent } => {
                    if exponent == 0.0 {
                        coeff
                    } else {
                        coeff * x.powf(exponent)
                    }
                }
                ClosedForm::Step { level, onset } => {
                    if x >= onset {
                        level
                    } else {
                        0.0
                    }
                }
            };
        }
        let n = self.grid.len();
        if x < self.grid[0] {
            return match self.tail {
                Tail::ZeroBeforeStart => 0.0,
                _ => self.values[0],
            };
        }
        if x >= self.grid[n - 1] {
            let last = self.values[n - 1];
            return match self.tail {
                Tail::PowerLaw { exponent } => last * (x / self.grid[n - 1]).powf(exponent),
                _ => last,
            };
        }
        let idx = self.grid.partition_point(|&g| g <= x) - 1;
        let t = (x - self.grid[idx]) / (self.grid[idx + 1] - self.grid[idx]);
        self.values[idx] + t * (self.values[idx + 1] - self.values[idx])
    }

    /// Antiderivative `int_0^x B`, exact for every representation.
    pub fn hazard(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        if let Some(form) = self.closed_form {
            return match form {
                ClosedForm::Constant { value } => value * x,
                ClosedForm::Power { coeff, exponent } => {
                    coeff * x.powf(exponent + 1.0) / (exponent + 1.0)
                }
                ClosedForm::Step { level, onset } => level * (x - onset).max(0.0),
            };
        }
        let n = self.grid.len();
        if x < self.grid[0] {
            return match self.tail {
                Tail::ZeroBeforeStart => 0.0,
                _ => self.values[0] * x,
            };
        }
        if x >= self.grid[n - 1] {
            let xl = self.grid[n - 1];
            let last = self.values[n - 1];
            let extra = match self.tail {
                Tail::PowerLaw { exponent } => {
                    let c = last / xl.powf(exponent);
                    c * (x.powf(exponent + 1.0) - xl.powf(exponent + 1.0)) / (exponent + 1.0)
                }
                _ => last * (x - xl),
            };
            return self.node_hazard[n - 1] + extra;
        }
        let idx = self.grid.partition_point(|&g| g <= x) - 1;
        let x0 = self.grid[idx];
        let v0 = self.values[idx];
        let vx = self.eval(x);
        self.node_hazard[idx] + 0.5 * (x - x0) * (v0 + vx)
    }

    /// `int_{x0}^{x1} B` for `0 <= x0 <= x1`.
    pub fn cumulative_hazard(&self, x0: f64, x1: f64) -> Result<f64> {
        if !(x0 >= 0.0 && x1 >= x0) {
            return Err(Error::invalid(format!(
                "cumulative hazard needs 0 <= x0 <= x1, got [{x0}, {x1}]"
            )));
        }
        if x0 == x1 {
            return Ok(0.0);
        }
        let v = (self.hazard(x1) - self.hazard(x0)).max(0.0);
        if !v.is_finite() {
            return Err(Error::numerical(
                "cumulative_hazard",
                format!("divergent integral on [{x0}, {x1}]"),
            ));
        }
        Ok(v)
    }

    /// Smallest `x >= x0` with `int_{x0}^x B = level`, by bracketed Newton iteration.
    pub fn invert_hazard(&self, x0: f64, level: f64) -> Result<f64> {
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::invalid(format!("hazard level {level} must be finite and >= 0")));
        }
        if level == 0.0 {
            return Ok(x0);
        }
        let base = self.hazard(x0);
        let target = base + level;
        if let Some(form) = self.closed_form {
            return Ok(match form {
                ClosedForm::Constant { value } => x0 + level / value,
                ClosedForm::Power { coeff, exponent } => {
                    (target * (exponent + 1.0) / coeff).powf(1.0 / (exponent + 1.0)).max(x0)
                }
                ClosedForm::Step { level: c, onset } => x0.max(onset) + level / c,
            });
        }
        let f = |x: f64| self.hazard(x) - target;
        let r = self.eval(x0);
        let mut step = if r > 0.0 { (level / r).min(1e6) } else { 1.0 }.max(1e-12);
        let mut hi = x0 + step;
        let mut tries = 0;
        while f(hi) < 0.0 {
            step *= 2.0;
            hi = x0 + step;
            tries += 1;
            if tries > 200 || !hi.is_finite() {
                return Err(Error::numerical(
                    "invert_hazard",
                    "root not bracketed within the tail policy",
                ));
            }
        }
        newton_bracketed(f, |x| self.eval(x), x0, hi, 1e-13)
    }

    /// Largest abscissa where tabulated data are available (infinity for closed forms).
    pub fn support_end(&self) -> f64 {
        self.grid.last().copied().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(RateFunction::constant(1.0).unwrap().eval(7.3), 1.0);
        assert_eq!(RateFunction::power(1.0, 1.0).unwrap().eval(2.0), 2.0);
        let t = RateFunction::tabulated(vec![0.0, 1.0], vec![0.0, 2.0], Tail::ConstantLast).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
    }

    #[test]
    fn hazard_examples() {
        let one = RateFunction::constant(1.0).unwrap();
        assert!((one.cumulative_hazard(0.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(one.cumulative_hazard(2.0, 2.0).unwrap(), 0.0);
        let lin = RateFunction::power(2.0, 1.0).unwrap();
        assert!((lin.cumulative_hazard(0.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_hazard_matches_closed() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let lin = RateFunction::power(1.0, 1.0).unwrap();
        let tab = RateFunction::tabulate_from(&lin, grid, Tail::PowerLaw { exponent: 1.0 }).unwrap();
        for &x in &[0.3, 2.7, 5.0, 9.0] {
            assert!((tab.hazard(x) - lin.hazard(x)).abs() < 1e-3, "{x}");
        }
    }

    #[test]
    fn inversion_round_trip() {
        let r = RateFunction::step(2.0, 0.5).unwrap();
        let x = r.invert_hazard(0.0, 1.0).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_inversion_matches_closed() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let lin = RateFunction::power(1.0, 1.0).unwrap();
        let tab = RateFunction::tabulate_from(&lin, grid, Tail::PowerLaw { exponent: 1.0 }).unwrap();
        let a = tab.invert_hazard(0.7, 1.3).unwrap();
        let b = lin.invert_hazard(0.7, 1.3).unwrap();
        assert!((a - b).abs() < 1e-3);
        assert!((tab.hazard(a) - tab.hazard(0.7) - 1.3).abs() < 1e-11);
    }

    #[test]
    fn rejects_vanishing_tail() {
        assert!(RateFunction::tabulated(vec![0.0, 1.0], vec![1.0, 0.0], Tail::ConstantLast).is_err());
        assert!(RateFunction::constant(0.0).is_err());
    }
}
