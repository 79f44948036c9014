use serde::{Deserialize, Serialize};

use super::grid::SolverGrid;
use super::power::{power_iterate, LinearStep, PowerOptions};
use super::trajectory::Trajectory2;
use crate::error::{Error, Result};
use crate::model::{uniform_grid, EigenTriplet2, GridDensity, GridDensity2, RateFunction, Trigger};

/// Two-variable model with exponential growth at rate `kappa`, equal mitosis, and a
/// division hazard depending on age, size or increment. The state is the density in
/// (birth size, size) on a geometric lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeProblem {
    pub trigger: Trigger,
    pub rate: RateFunction,
    pub kappa: f64,
    pub multiplicity: u8,
}

impl LatticeProblem {
    pub fn new(trigger: Trigger, rate: RateFunction, kappa: f64, multiplicity: u8) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("growth rate must be positive, got {kappa}")));
        }
        if multiplicity != 1 && multiplicity != 2 {
            return Err(Error::invalid(format!("multiplicity must be 1 or 2, got {multiplicity}")));
        }
        Ok(LatticeProblem {
            trigger,
            rate,
            kappa,
            multiplicity,
        })
    }

    pub fn adder(rate: RateFunction, kappa: f64, multiplicity: u8) -> Result<Self> {
        Self::new(Trigger::Increment, rate, kappa, multiplicity)
    }

    /// Division hazard per unit time for a cell born at `birth` with current size `x`.
    pub fn hazard(&self, birth: f64, x: f64) -> f64 {
        match self.trigger {
            Trigger::Increment => self.kappa * x * self.rate.eval((x - birth).max(0.0)),
            Trigger::Size => self.kappa * x * self.rate.eval(x),
            Trigger::Age => self.rate.eval((x / birth).ln().max(0.0) / self.kappa),
        }
    }
}

/// Strang-split step on the lattice: exact shift in size, exponential loss with
/// cascading of daughters onto the diagonal.
#[derive(Debug, Clone)]
pub struct LatticeStepper {
    problem: LatticeProblem,
    grid: SolverGrid,
    per_doubling: usize,
    offsets: Vec<usize>,
    dt: f64,
    keep: Vec<f64>,
    keep_arrivals: Vec<f64>,
    /// Daughter diagonal index and density gain per state.
    targets: Vec<(usize, f64)>,
}

impl LatticeStepper {
    pub fn new(problem: &LatticeProblem, grid: &SolverGrid) -> Result<Self> {
        let m = grid
            .per_doubling()
            .ok_or_else(|| Error::invalid("the two-variable solver needs a geometric grid"))?;
        let n = grid.len();
        if n <= m {
            return Err(Error::invalid("the grid must span more than one doubling"));
        }
        let dt = std::f64::consts::LN_2 / m as f64 / problem.kappa;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for ib in 0..n {
            offsets.push(acc);
            acc += n - ib;
        }
        offsets.push(acc);
        let x = &grid.nodes;
        let w = &grid.weights;
        let s = 0.5 * dt;
        let k = problem.multiplicity as f64;
        let mut keep = vec![0.0; acc];
        let mut keep_arrivals = vec![0.0; acc];
        let mut targets = vec![(0, 0.0); acc];
        for ib in 0..n {
            for ix in ib..n {
                let idx = offsets[ib] + ix - ib;
                let d = problem.hazard(x[ib], x[ix]) * s;
                keep[idx] = (-d).exp();
                keep_arrivals[idx] = if d < 1e-6 { 1.0 - d / 2.0 } else { -(-d).exp_m1() / d };
                let (t, frac) = if ix >= m { (ix - m, 1.0) } else { (0, 0.5 * x[ix] / x[0]) };
                targets[idx] = (t, k * frac * w[ib] * w[ix] / (w[t] * w[t]));
            }
        }
        Ok(LatticeStepper {
            problem: problem.clone(),
            grid: grid.clone(),
            per_doubling: m,
            offsets,
            dt,
            keep,
            keep_arrivals,
            targets,
        })
    }

    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    pub fn problem(&self) -> &LatticeProblem {
        &self.problem
    }

    pub fn index(&self, birth: usize, size: usize) -> usize {
        self.offsets[birth] + size - birth
    }

    /// Area weight of each lattice state.
    pub fn weights(&self) -> Vec<f64> {
        let w = &self.grid.weights;
        let n = self.grid.len();
        let mut out = Vec::with_capacity(self.offsets[n]);
        for ib in 0..n {
            for ix in ib..n {
                out.push(w[ib] * w[ix]);
            }
        }
        out
    }

    /// Weights of the mass functional `int x n`.
    pub fn mass_weights(&self) -> Vec<f64> {
        let x = &self.grid.nodes;
        let n = self.grid.len();
        let w = self.weights();
        let mut out = Vec::with_capacity(w.len());
        for ib in 0..n {
            for ix in ib..n {
                out.push(w[self.index(ib, ix)] * x[ix]);
            }
        }
        out
    }

    fn divide(&self, v: &mut [f64], diag: &mut [f64]) {
        let n = self.grid.len();
        diag.iter_mut().for_each(|d| *d = 0.0);
        for ix in (0..n).rev() {
            for ib in 0..=ix {
                let idx = self.index(ib, ix);
                let arrivals = if ib == ix { diag[ix] } else { 0.0 };
                let (e, g) = (self.keep[idx], self.keep_arrivals[idx]);
                let lost = (1.0 - e) * v[idx] + (1.0 - g) * arrivals;
                v[idx] = e * v[idx] + g * arrivals;
                let (t, c) = self.targets[idx];
                if t == ix {
                    v[idx] += c * lost;
                } else {
                    diag[t] += c * lost;
                }
            }
        }
    }

    fn divide_adjoint(&self, y: &mut [f64], diag: &mut [f64]) {
        let n = self.grid.len();
        for ix in 0..n {
            let diag_idx = self.index(ix, ix);
            let y_diag = y[diag_idx];
            for ib in 0..=ix {
                let idx = self.index(ib, ix);
                let (t, c) = self.targets[idx];
                let lost = c * if t == ix { y_diag } else { diag[t] };
                let (e, g) = (self.keep[idx], self.keep_arrivals[idx]);
                if ib == ix {
                    diag[ix] = g * y[idx] + (1.0 - g) * lost;
                }
                y[idx] = e * y[idx] + (1.0 - e) * lost;
            }
        }
    }

    fn shift(&self, v: &mut [f64]) {
        let n = self.grid.len();
        let r = (std::f64::consts::LN_2 / self.per_doubling as f64).exp();
        for ib in 0..n {
            let row = &mut v[self.offsets[ib]..self.offsets[ib + 1]];
            for j in (1..row.len()).rev() {
                row[j] = row[j - 1] / r;
            }
            row[0] = 0.0;
        }
    }

    fn shift_adjoint(&self, y: &mut [f64]) {
        let n = self.grid.len();
        let r = (std::f64::consts::LN_2 / self.per_doubling as f64).exp();
        for ib in 0..n {
            let row = &mut y[self.offsets[ib]..self.offsets[ib + 1]];
            let len = row.len();
            for j in 0..len - 1 {
                row[j] = row[j + 1] / r;
            }
            row[len - 1] = 0.0;
        }
    }

    /// Lattice state from a density in (trigger variable, size) coordinates.
    pub fn state_from(&self, density: &GridDensity2) -> Vec<f64> {
        let x = &self.grid.nodes;
        let n = x.len();
        let mut v = vec![0.0; self.offsets[n]];
        for ib in 0..n {
            for ix in ib..n {
                let (u, jac) = self.coordinate(x[ib], x[ix]);
                v[self.index(ib, ix)] = bilinear(density, u, x[ix]) * jac;
            }
        }
        v
    }

    /// First output coordinate of a lattice state and the Jacobian `|du / d birth|`.
    fn coordinate(&self, birth: f64, x: f64) -> (f64, f64) {
        match self.problem.trigger {
            Trigger::Age => ((x / birth).ln() / self.problem.kappa, 1.0 / (self.problem.kappa * birth)),
            _ => (x - birth, 1.0),
        }
    }

    /// Resample a lattice state onto `(first, size)` with `first` the increment, or the age
    /// for an age-triggered model.
    pub fn to_density(&self, v: &[f64], first: &[f64]) -> Result<GridDensity2> {
        let x = &self.grid.nodes;
        let n = x.len();
        let mut values = vec![0.0; first.len() * n];
        for ix in 0..n {
            // lattice row at fixed size, ordered by increasing first coordinate
            let mut us = Vec::with_capacity(ix + 1);
            let mut vals = Vec::with_capacity(ix + 1);
            for ib in (0..=ix).rev() {
                let (u, jac) = self.coordinate(x[ib], x[ix]);
                us.push(u);
                vals.push(v[self.index(ib, ix)] / jac);
            }
            for (iu, &u) in first.iter().enumerate() {
                let val = if us.len() == 1 {
                    if u == us[0] {
                        vals[0]
                    } else {
                        0.0
                    }
                } else {
                    crate::numerics::interp(&us, &vals, u, 0.0)
                };
                values[iu * n + ix] = val;
            }
        }
        GridDensity2::new(first.to_vec(), x.clone(), values)
    }

    /// Default grid for the first output coordinate.
    pub fn default_first_grid(&self, points: usize) -> Vec<f64> {
        let x = &self.grid.nodes;
        let top = match self.problem.trigger {
            Trigger::Age => (x[x.len() - 1] / x[0]).ln() / self.problem.kappa,
            _ => x[x.len() - 1] - x[0],
        };
        uniform_grid(0.0, top, points)
    }

    /// Size marginal `int n d(birth)` on the grid nodes.
    pub fn size_marginal(&self, v: &[f64]) -> Result<GridDensity> {
        let n = self.grid.len();
        let w = &self.grid.weights;
        let values = (0..n)
            .map(|ix| (0..=ix).map(|ib| w[ib] * v[self.index(ib, ix)]).sum())
            .collect();
        GridDensity::new(self.grid.nodes.clone(), values)
    }
}

fn bilinear(d: &GridDensity2, u: f64, x: f64) -> f64 {
    let (a, b) = (&d.first, &d.second);
    if a.len() < 2 || b.len() < 2 || u < a[0] || u > a[a.len() - 1] || x < b[0] || x > b[b.len() - 1] {
        return 0.0;
    }
    let i = (a.partition_point(|&v| v <= u).max(1) - 1).min(a.len() - 2);
    let j = (b.partition_point(|&v| v <= x).max(1) - 1).min(b.len() - 2);
    let tu = (u - a[i]) / (a[i + 1] - a[i]);
    let tx = (x - b[j]) / (b[j + 1] - b[j]);
    let f = |p: usize, q: usize| d.values[p * b.len() + q];
    (1.0 - tu) * ((1.0 - tx) * f(i, j) + tx * f(i, j + 1)) + tu * ((1.0 - tx) * f(i + 1, j) + tx * f(i + 1, j + 1))
}

impl LinearStep for LatticeStepper {
    fn len(&self) -> usize {
        self.offsets[self.grid.len()]
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn apply(&self, v: &mut [f64]) {
        let mut diag = vec![0.0; self.grid.len()];
        self.divide(v, &mut diag);
        self.shift(v);
        self.divide(v, &mut diag);
    }

    fn apply_adjoint(&self, y: &mut [f64]) {
        let mut diag = vec![0.0; self.grid.len()];
        self.divide_adjoint(y, &mut diag);
        self.shift_adjoint(y);
        self.divide_adjoint(y, &mut diag);
    }
}

/// Steady profile of the two-variable model together with stationarity diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSteady {
    pub eigen: EigenTriplet2,
    pub size_marginal: GridDensity,
    /// Fraction of the steady mass within one doubling of either grid end.
    pub edge_mass: f64,
}

/// Edge mass above which a profile is declared non-stationary in size.
const EDGE_MASS_LIMIT: f64 = 1e-4;

/// Dominant profile of the lattice model by period-averaged power iteration with
/// renormalisation every step. Fails when the size marginal runs into the grid edges,
/// which is how the absence of a steady size profile shows up.
pub fn lattice_steady(problem: &LatticeProblem, grid: &SolverGrid, first_points: usize) -> Result<LatticeSteady> {
    let stepper = LatticeStepper::new(problem, grid)?;
    let w = stepper.weights();
    let probe = if problem.multiplicity == 1 { w.clone() } else { stepper.mass_weights() };
    let x = &grid.nodes;
    let n = x.len();
    let mut init = vec![0.0; stepper.len()];
    let centre = (x[0] * x[n - 1]).sqrt();
    for ib in 0..n {
        for ix in ib..n {
            let lb = (x[ib] / centre).ln();
            let lx = (x[ix] / x[ib]).ln();
            init[stepper.index(ib, ix)] = (-2.0 * lb * lb).exp() * (-2.0 * lx).exp();
        }
    }
    let opts = PowerOptions {
        tol: 1e-10,
        max_steps: 20_000,
        period: Some(stepper.per_doubling),
    };
    let result = power_iterate(&stepper, init, &w, Some(&probe), false, opts);
    let result = match result {
        Ok(r) => r,
        Err(Error::NotConverged { residual, .. }) => {
            return Err(Error::numerical(
                "lattice steady state",
                format!("no steady profile: the iteration kept drifting (last residual {residual:e})"),
            ))
        }
        Err(e) => return Err(e),
    };
    let marginal = stepper.size_marginal(&result.vector)?;
    let total: f64 = marginal.values.iter().zip(&grid.weights).map(|(v, w)| v * w).sum();
    let m = stepper.per_doubling;
    let edge: f64 = (0..n)
        .filter(|&i| i < m || i + m >= n)
        .map(|i| marginal.values[i] * grid.weights[i])
        .sum::<f64>()
        / total;
    if edge > EDGE_MASS_LIMIT {
        return Err(Error::numerical(
            "lattice steady state",
            format!("no steady size profile: {edge:.3e} of the mass sits at the grid edges"),
        ));
    }
    let first = stepper.default_first_grid(first_points);
    let mut direct = stepper.to_density(&result.vector, &first)?;
    let norm = direct.integral();
    direct.values.iter_mut().for_each(|v| *v /= norm);
    direct.normalization = 1.0;
    let lambda = result.factor.ln() / stepper.dt();
    let size_marginal = GridDensity::new(marginal.x.clone(), marginal.values.iter().map(|v| v / total).collect())?;
    Ok(LatticeSteady {
        eigen: EigenTriplet2 {
            lambda,
            direct,
            multiplicity: problem.multiplicity,
            iterations: result.steps,
            residual: result.residual,
        },
        size_marginal,
        edge_mass: edge,
    })
}

/// Steady increment-size profile of the adder model.
pub fn adder_steady(rate: &RateFunction, kappa: f64, k: u8, grid: &SolverGrid) -> Result<EigenTriplet2> {
    let problem = LatticeProblem::adder(rate.clone(), kappa, k)?;
    Ok(lattice_steady(&problem, grid, 2048)?.eigen)
}

/// Integrate the two-variable model from a density in (increment or age, size).
pub fn solve_lattice(
    initial: &GridDensity2,
    problem: &LatticeProblem,
    grid: &SolverGrid,
    horizon: f64,
    record_every: f64,
) -> Result<Trajectory2> {
    if initial.values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("initial density must be finite and nonnegative"));
    }
    let stepper = LatticeStepper::new(problem, grid)?;
    let mut v = stepper.state_from(initial);
    let first = initial.first.clone();
    let steps = (horizon / stepper.dt()).round() as usize;
    let every = ((record_every / stepper.dt()).round() as usize).max(1);
    let mut traj = Trajectory2::new();
    traj.push(0.0, stepper.to_density(&v, &first)?);
    for s in 1..=steps {
        stepper.apply(&mut v);
        if s % every == 0 || s == steps {
            traj.push(s as f64 * stepper.dt(), stepper.to_density(&v, &first)?);
        }
    }
    Ok(traj)
}

/// Adder model in (increment, size).
pub fn solve_adder_2d(
    initial: &GridDensity2,
    rate: &RateFunction,
    kappa: f64,
    k: u8,
    horizon: f64,
    grid: &SolverGrid,
) -> Result<Trajectory2> {
    let problem = LatticeProblem::adder(rate.clone(), kappa, k)?;
    solve_lattice(initial, &problem, grid, horizon, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_is_exact() {
        let grid = SolverGrid::geometric(0.125, 8.0, 6).unwrap();
        for trigger in [Trigger::Increment, Trigger::Size, Trigger::Age] {
            let p = LatticeProblem::new(trigger, RateFunction::power(1.0, 1.0).unwrap(), 1.0, 2).unwrap();
            let s = LatticeStepper::new(&p, &grid).unwrap();
            let n = s.len();
            let v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7 % 11) as f64).sin()).collect();
            let y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 3 % 5) as f64).cos()).collect();
            let mut mv = v.clone();
            s.apply(&mut mv);
            let mut mty = y.clone();
            s.apply_adjoint(&mut mty);
            let lhs: f64 = y.iter().zip(&mv).map(|(a, b)| a * b).sum();
            let rhs: f64 = mty.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-11 * lhs.abs(), "{trigger:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn adder_lambda_is_kappa() {
        let grid = SolverGrid::geometric(1.0 / 16.0, 16.0, 16).unwrap();
        let e = adder_steady(&RateFunction::power(1.0, 1.0).unwrap(), 1.0, 2, &grid).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-8, "{}", e.lambda);
        assert!((e.direct.integral() - 1.0).abs() < 1e-12);
    }
}
