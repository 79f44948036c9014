use serde::{Deserialize, Serialize};

use super::grid::gregory_weights;
use super::power::{power_iterate, LinearStep, PowerOptions};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::model::{uniform_grid, ClosedForm, EigenTriplet, GridDensity, RateFunction};
use crate::numerics::{bisect, integrate, integrate_to_infinity};

/// Default number of age nodes.
pub const DEFAULT_AGE_POINTS: usize = 1 << 12;

/// Cumulative hazard at which the age grid is truncated.
const HAZARD_CUTOFF: f64 = 40.0;

fn check_multiplicity(k: u8) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("multiplicity must be 1 or 2, got {k}")))
    }
}

/// `int_0^inf B(a) e^{-lambda a - H(a)} da`
fn birth_transform(rate: &RateFunction, lambda: f64) -> Result<f64> {
    if let Some(ClosedForm::Constant { value }) = rate.closed_form() {
        return Ok(value / (lambda + value));
    }
    integrate_to_infinity(|a| rate.eval(a) * (-lambda * a - rate.hazard(a)).exp(), 0.0, 1e-13)
}

/// `int_0^inf e^{-lambda a - H(a)} da`
fn survival_transform(rate: &RateFunction, lambda: f64) -> Result<f64> {
    let v = integrate_to_infinity(|a| (-lambda * a - rate.hazard(a)).exp(), 0.0, 1e-13)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::numerical("renewal eigen", "survival function is not integrable"));
    }
    Ok(v)
}

/// Malthusian parameter of the whole-population renewal model: the root of
/// `2 int B e^{-lambda a - H} = 1`.
pub fn malthus_renewal(rate: &RateFunction) -> Result<f64> {
    let f = |lambda: f64| 2.0 * birth_transform(rate, lambda).unwrap_or(f64::NAN) - 1.0;
    let mut hi = 1.0;
    let mut tries = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::numerical("malthus_renewal", "no sign change found"));
        }
    }
    bisect(f, 0.0, hi, 1e-12)
}

/// Growth rate for multiplicity `k`: zero for a single lineage.
pub fn renewal_lambda(rate: &RateFunction, k: u8) -> Result<f64> {
    check_multiplicity(k)?;
    if k == 1 {
        Ok(0.0)
    } else {
        malthus_renewal(rate)
    }
}

/// Uniform age grid ending where the cumulative hazard reaches 40.
pub fn age_grid(rate: &RateFunction, points: usize) -> Result<Vec<f64>> {
    if points < 8 {
        return Err(Error::invalid("age grid needs at least 8 points"));
    }
    let a_max = rate.invert_hazard(0.0, HAZARD_CUTOFF)?;
    Ok(uniform_grid(0.0, a_max, points))
}

/// Eigenelements of the renewal model by quadrature on the default age grid.
pub fn renewal_eigen(rate: &RateFunction, k: u8) -> Result<EigenTriplet> {
    let ages = age_grid(rate, DEFAULT_AGE_POINTS)?;
    renewal_eigen_on(rate, k, &ages)
}

/// Eigenelements evaluated at `ages`, normalised by `int N = int N phi = 1` in the continuum.
pub fn renewal_eigen_on(rate: &RateFunction, k: u8, ages: &[f64]) -> Result<EigenTriplet> {
    let lambda = renewal_lambda(rate, k)?;
    let survival = survival_transform(rate, lambda)?;
    let n0 = 1.0 / survival;
    let direct: Vec<f64> = ages
        .iter()
        .map(|&a| n0 * (-lambda * a - rate.hazard(a)).exp())
        .collect();
    let adjoint = if k == 1 {
        vec![1.0; ages.len()]
    } else {
        let mean_age =
            integrate_to_infinity(|s| s * rate.eval(s) * (-lambda * s - rate.hazard(s)).exp(), 0.0, 1e-13)?;
        let phi0 = survival / (k as f64 * mean_age);
        // tail integral psi(a) = int_a^inf B(s) e^{-lambda (s - a) - (H(s) - H(a))} ds, built backwards
        let n = ages.len();
        let last = ages[n - 1];
        let h_last = rate.hazard(last);
        let mut psi = vec![0.0; n];
        psi[n - 1] = integrate_to_infinity(
            |s| rate.eval(s) * (-lambda * (s - last) - (rate.hazard(s) - h_last)).exp(),
            last,
            1e-13,
        )?;
        for i in (0..n - 1).rev() {
            let (a0, a1) = (ages[i], ages[i + 1]);
            let h0 = rate.hazard(a0);
            let piece = integrate(
                |s| rate.eval(s) * (-lambda * (s - a0) - (rate.hazard(s) - h0)).exp(),
                a0,
                a1,
                1e-13,
            )?;
            let carry = (-lambda * (a1 - a0) - (rate.hazard(a1) - h0)).exp();
            psi[i] = piece + carry * psi[i + 1];
        }
        let phi: Vec<f64> = psi.iter().map(|p| k as f64 * phi0 * p).collect();
        let sup = phi.iter().fold(0.0f64, |m, v| m.max(*v));
        if sup > 2.0 * phi0 * (1.0 + 1e-9) {
            return Err(Error::numerical(
                "renewal eigen",
                format!("adjoint bound violated: sup phi = {sup}, 2 phi(0) = {}", 2.0 * phi0),
            ));
        }
        phi
    };
    Ok(EigenTriplet {
        lambda,
        direct: GridDensity::new(ages.to_vec(), direct)?,
        adjoint,
        multiplicity: k,
        oscillatory: false,
        iterations: 0,
        residual: 0.0,
        weights: Vec::new(),
    })
}

/// One time step of the renewal equation with step equal to the age spacing.
///
/// The state holds the density at each age node followed by the mass that has aged past
/// the grid. Transport is an exact shift with survival factors; the birth boundary uses
/// fourth-order Gregory quadrature, solved implicitly for the newborn node.
#[derive(Debug, Clone)]
pub struct RenewalStepper {
    ages: Vec<f64>,
    step: f64,
    k: f64,
    survival: Vec<f64>,
    tail_survival: f64,
    tail_rate: f64,
    birth_weights: Vec<f64>,
    newborn_gain: f64,
}

impl RenewalStepper {
    pub fn new(rate: &RateFunction, k: u8, ages: &[f64]) -> Result<Self> {
        check_multiplicity(k)?;
        let n = ages.len();
        if n < 8 {
            return Err(Error::invalid("renewal solver needs at least 8 age nodes"));
        }
        let step = ages[1] - ages[0];
        if ages[0] != 0.0 || ages.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
            return Err(Error::invalid("renewal solver needs a uniform age grid starting at 0"));
        }
        let hazard: Vec<f64> = ages.iter().map(|&a| rate.hazard(a)).collect();
        let mut survival = vec![0.0; n];
        for i in 1..n {
            survival[i] = (-(hazard[i] - hazard[i - 1])).exp();
        }
        let last = ages[n - 1];
        let tail_survival = (-(rate.hazard(last + step) - hazard[n - 1])).exp();
        let tail_rate = rate.eval(last);
        let q = gregory_weights(n, step);
        let birth_weights: Vec<f64> = q.iter().zip(ages).map(|(w, &a)| w * rate.eval(a)).collect();
        let kf = k as f64;
        let denom = 1.0 - kf * birth_weights[0];
        if !(denom > 0.0) {
            return Err(Error::invalid("age step too coarse for the implicit birth update"));
        }
        Ok(RenewalStepper {
            ages: ages.to_vec(),
            step,
            k: kf,
            survival,
            tail_survival,
            tail_rate,
            birth_weights,
            newborn_gain: kf / denom,
        })
    }

    pub fn ages(&self) -> &[f64] {
        &self.ages
    }

    pub fn multiplicity(&self) -> u8 {
        self.k as u8
    }

    /// Integration weights of the state, the last entry being the remainder mass.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = gregory_weights(self.ages.len(), self.step);
        w.push(1.0);
        w
    }

    pub fn state_from(&self, density: &[f64]) -> Vec<f64> {
        let mut v = density.to_vec();
        v.push(0.0);
        v
    }
}

impl LinearStep for RenewalStepper {
    fn len(&self) -> usize {
        self.ages.len() + 1
    }

    fn dt(&self) -> f64 {
        self.step
    }

    fn apply(&self, v: &mut [f64]) {
        let n = self.ages.len();
        let leaving = v[n - 1];
        v[n] = self.tail_survival * v[n] + self.tail_survival * self.step * leaving;
        for i in (1..n).rev() {
            v[i] = self.survival[i] * v[i - 1];
        }
        let births: f64 = (1..n).map(|i| self.birth_weights[i] * v[i]).sum::<f64>() + self.tail_rate * v[n];
        v[0] = self.newborn_gain * births;
    }

    fn apply_adjoint(&self, y: &mut [f64]) {
        let n = self.ages.len();
        let y0 = y[0];
        for i in 1..n {
            y[i] += self.newborn_gain * self.birth_weights[i] * y0;
        }
        y[n] += self.newborn_gain * self.tail_rate * y0;
        let tail = y[n];
        for i in 0..n - 1 {
            y[i] = self.survival[i + 1] * y[i + 1];
        }
        y[n - 1] = self.tail_survival * self.step * tail;
        y[n] = self.tail_survival * tail;
    }
}

/// Renewal problem on a fixed age grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenewalProblem {
    pub rate: RateFunction,
    pub multiplicity: u8,
    pub points: usize,
}

impl RenewalProblem {
    pub fn new(rate: RateFunction, multiplicity: u8) -> Self {
        RenewalProblem {
            rate,
            multiplicity,
            points: DEFAULT_AGE_POINTS,
        }
    }

    pub fn ages(&self) -> Result<Vec<f64>> {
        age_grid(&self.rate, self.points)
    }

    pub fn stepper(&self) -> Result<RenewalStepper> {
        RenewalStepper::new(&self.rate, self.multiplicity, &self.ages()?)
    }
}

/// Eigenpair of the discrete renewal step, normalised like [`renewal_eigen`] with the
/// adjoint scaled to the quadrature weights.
pub fn renewal_eigen_discrete(stepper: &RenewalStepper, k: u8) -> Result<EigenTriplet> {
    let w = stepper.weights();
    let n = stepper.ages().len();
    let opts = PowerOptions::default();
    let init: Vec<f64> = (0..=n).map(|i| if i < n { (-stepper.ages()[i]).exp() } else { 0.0 }).collect();
    let direct = power_iterate(stepper, init, &w, None, false, opts)?;
    let adjoint = power_iterate(stepper, vec![1.0; n + 1], &vec![1.0; n + 1], Some(&direct.vector), true, opts)?;
    let factor = direct.factor;
    let lambda = if k == 1 { 0.0 } else { factor.ln() / stepper.dt() };
    let mass: f64 = direct.vector.iter().zip(&w).map(|(v, w)| v * w).sum();
    let nvec: Vec<f64> = direct.vector.iter().map(|v| v / mass).collect();
    let pair: f64 = nvec.iter().zip(&adjoint.vector).map(|(a, b)| a * b).sum();
    let phi: Vec<f64> = (0..n).map(|i| adjoint.vector[i] / pair / w[i]).collect();
    Ok(EigenTriplet {
        lambda,
        direct: GridDensity::new(stepper.ages().to_vec(), nvec[..n].to_vec())?,
        adjoint: phi,
        multiplicity: k,
        oscillatory: false,
        iterations: direct.steps + adjoint.steps,
        residual: direct.residual.max(adjoint.residual),
        weights: w[..n].to_vec(),
    })
}

/// Integrate the renewal equation from `initial` to `horizon`, recording every `record_every` time units.
pub fn solve_renewal(
    initial: &GridDensity,
    rate: &RateFunction,
    k: u8,
    horizon: f64,
    record_every: f64,
) -> Result<Trajectory> {
    let problem = RenewalProblem::new(rate.clone(), k);
    let stepper = problem.stepper()?;
    solve_renewal_with(&stepper, initial, horizon, record_every)
}

pub fn solve_renewal_with(
    stepper: &RenewalStepper,
    initial: &GridDensity,
    horizon: f64,
    record_every: f64,
) -> Result<Trajectory> {
    if initial.values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("initial density must be finite and nonnegative"));
    }
    let ages = stepper.ages().to_vec();
    let start = initial.resample(&ages)?;
    let mut v = stepper.state_from(&start.values);
    let mut traj = Trajectory::new(ages.clone());
    let steps = (horizon / stepper.dt()).round() as usize;
    let every = ((record_every / stepper.dt()).round() as usize).max(1);
    let n = ages.len();
    traj.push(0.0, v[..n].to_vec(), v[n]);
    for s in 1..=steps {
        stepper.apply(&mut v);
        if s % every == 0 || s == steps {
            traj.push(s as f64 * stepper.dt(), v[..n].to_vec(), v[n]);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rate_malthus() {
        for b in [0.5, 1.0, 2.0] {
            let r = RateFunction::constant(b).unwrap();
            assert!((malthus_renewal(&r).unwrap() - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tabulated_constant_rate_malthus() {
        let r = RateFunction::tabulated(vec![0.0, 1.0, 5.0], vec![1.0, 1.0, 1.0], crate::model::Tail::ConstantLast)
            .unwrap();
        assert!((malthus_renewal(&r).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_rate_eigenvector() {
        let b = 2.0;
        let e = renewal_eigen(&RateFunction::constant(b).unwrap(), 2).unwrap();
        let err = e
            .direct
            .x
            .iter()
            .zip(&e.direct.values)
            .map(|(a, v)| (v - 2.0 * b * (-2.0 * b * a).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let phi0 = e.adjoint[0];
        assert!(e.adjoint.iter().all(|p| *p <= 2.0 * phi0));
    }

    #[test]
    fn lineage_adjoint_is_one() {
        let e = renewal_eigen(&RateFunction::power(1.0, 1.0).unwrap(), 1).unwrap();
        assert_eq!(e.lambda, 0.0);
        assert!(e.adjoint.iter().all(|p| *p == 1.0));
    }

    #[test]
    fn adjoint_transpose_identity() {
        let r = RateFunction::power(1.0, 1.0).unwrap();
        let ages = age_grid(&r, 64).unwrap();
        let s = RenewalStepper::new(&r, 2, &ages).unwrap();
        let n = s.len();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64).sin().abs()).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 3 % 5) as f64 + 0.5).cos().abs()).collect();
        let mut mv = v.clone();
        s.apply(&mut mv);
        let mut mty = y.clone();
        s.apply_adjoint(&mut mty);
        let lhs: f64 = y.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let rhs: f64 = mty.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
    }
}
