use serde::{Deserialize, Serialize};

use super::grid::{GridKind, SolverGrid};
use super::power::{power_iterate, LinearStep, PowerOptions};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::model::{EigenTriplet, FragmentationKernel, GridDensity, GrowthLaw, ModelSpec, RateFunction, Trigger};

/// Size-structured growth-fragmentation model. The division hazard per unit time is
/// `tau(x) B(x)` with `B` the rate per unit of size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFragProblem {
    pub rate: RateFunction,
    pub growth: GrowthLaw,
    pub kernel: FragmentationKernel,
    pub multiplicity: u8,
}

impl GrowthFragProblem {
    pub fn new(rate: RateFunction, growth: GrowthLaw, kernel: FragmentationKernel, multiplicity: u8) -> Result<Self> {
        if multiplicity != 1 && multiplicity != 2 {
            return Err(Error::invalid(format!("multiplicity must be 1 or 2, got {multiplicity}")));
        }
        growth.validate()?;
        kernel.validate()?;
        Ok(GrowthFragProblem {
            rate,
            growth,
            kernel,
            multiplicity,
        })
    }

    pub fn from_spec(spec: &ModelSpec, multiplicity: u8) -> Result<Self> {
        if spec.trigger != Trigger::Size {
            return Err(Error::invalid("the growth-fragmentation solver needs a size-triggered model"));
        }
        Self::new(spec.rate.clone(), spec.growth.clone(), spec.kernel.clone(), multiplicity)
    }

    /// Equal mitosis with exponential growth has a non-isolated dominant eigenvalue.
    pub fn is_oscillatory(&self) -> bool {
        self.kernel.is_mitosis() && self.growth.exponential_rate().is_some()
    }

    /// Division hazard per unit time at `x`.
    pub fn division_rate(&self, x: f64) -> f64 {
        self.growth.speed(x) * self.rate.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperOptions {
    /// Time step; ignored for exponential growth on a geometric grid where it is `ln r / kappa`.
    pub dt: f64,
    /// Sub-cycles of each half division step.
    pub division_substeps: usize,
    /// Quadrature nodes per half of the ratio law for non-mitotic kernels.
    pub kernel_nodes: usize,
    pub cfl: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            dt: 0.01,
            division_substeps: 2,
            kernel_nodes: 16,
            cfl: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
enum Transport {
    /// `n_i <- n_{i-1} / r`.
    Shift { ratio: f64 },
    /// Upwind flux form with interface speeds.
    Upwind { speeds: Vec<f64>, substeps: usize, sigma: f64 },
}

/// Division over a fixed duration: exact exponential loss, daughters cascaded to smaller nodes.
#[derive(Debug, Clone)]
struct DivisionStep {
    keep: Vec<f64>,
    keep_arrivals: Vec<f64>,
    targets: Vec<Vec<(usize, f64)>>,
    cycles: usize,
}

fn mean_exposure(z: f64) -> f64 {
    if z < 1e-6 {
        1.0 - z / 2.0 + z * z / 6.0
    } else {
        -(-z).exp_m1() / z
    }
}

impl DivisionStep {
    fn new(problem: &GrowthFragProblem, grid: &SolverGrid, duration: f64, cycles: usize, nodes: usize) -> Self {
        let s = duration / cycles as f64;
        let x = &grid.nodes;
        let w = &grid.weights;
        let rates: Vec<f64> = x.iter().map(|&v| problem.division_rate(v)).collect();
        let keep = rates.iter().map(|d| (-d * s).exp()).collect();
        let keep_arrivals = rates.iter().map(|d| mean_exposure(d * s)).collect();
        let k = problem.multiplicity as f64;
        let quad = problem.kernel.quadrature(nodes);
        let exact_shift = match (grid.per_doubling(), problem.kernel.is_mitosis()) {
            (Some(m), true) => Some(m),
            _ => None,
        };
        let targets = (0..x.len())
            .map(|j| {
                let mut out: Vec<(usize, f64)> = Vec::new();
                let mut add = |t: usize, frac: f64| {
                    if frac <= 0.0 {
                        return;
                    }
                    let c = k * w[j] * frac / w[t];
                    match out.iter_mut().find(|e| e.0 == t) {
                        Some(e) => e.1 += c,
                        None => out.push((t, c)),
                    }
                };
                if let Some(m) = exact_shift {
                    add(j.saturating_sub(m), 1.0);
                    return out;
                }
                for &(z, omega) in &quad {
                    let p = z * x[j];
                    if p <= x[0] {
                        // keep the daughter mass, not its count, below the grid
                        add(0, if x[0] > 0.0 { omega * p / x[0] } else { omega });
                        continue;
                    }
                    let a = x.partition_point(|&v| v <= p) - 1;
                    let a = a.min(j);
                    if a == j || (p - x[a]).abs() <= 1e-12 * p {
                        add(a, omega);
                        continue;
                    }
                    let theta = (p - x[a]) / (x[a + 1] - x[a]);
                    add(a, omega * (1.0 - theta));
                    add(a + 1, omega * theta);
                }
                out
            })
            .collect();
        DivisionStep {
            keep,
            keep_arrivals,
            targets,
            cycles,
        }
    }

    fn apply(&self, v: &mut [f64], arrivals: &mut [f64]) {
        for _ in 0..self.cycles {
            arrivals.iter_mut().for_each(|a| *a = 0.0);
            for i in (0..v.len()).rev() {
                let (e, g) = (self.keep[i], self.keep_arrivals[i]);
                let lost = (1.0 - e) * v[i] + (1.0 - g) * arrivals[i];
                v[i] = e * v[i] + g * arrivals[i];
                for &(t, c) in &self.targets[i] {
                    if t == i {
                        v[i] += c * lost;
                    } else {
                        arrivals[t] += c * lost;
                    }
                }
            }
        }
    }

    fn apply_adjoint(&self, y: &mut [f64], arrivals: &mut [f64]) {
        for _ in 0..self.cycles {
            for i in 0..y.len() {
                let mut lost = 0.0;
                for &(t, c) in &self.targets[i] {
                    lost += c * if t == i { y[i] } else { arrivals[t] };
                }
                let (e, g) = (self.keep[i], self.keep_arrivals[i]);
                arrivals[i] = g * y[i] + (1.0 - g) * lost;
                y[i] = e * y[i] + (1.0 - e) * lost;
            }
        }
    }
}

/// Strang-split step `D(dt/2) T(dt) D(dt/2)` of the growth-fragmentation equation.
#[derive(Debug, Clone)]
pub struct GrowthFragStepper {
    problem: GrowthFragProblem,
    grid: SolverGrid,
    dt: f64,
    transport: Transport,
    division: DivisionStep,
}

impl GrowthFragStepper {
    pub fn new(problem: &GrowthFragProblem, grid: &SolverGrid, opts: StepperOptions) -> Result<Self> {
        if opts.division_substeps == 0 || !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
            return Err(Error::invalid("division sub-steps must be >= 1 and 0 < cfl <= 1"));
        }
        let (dt, transport) = match (grid.kind, problem.growth.exponential_rate()) {
            (GridKind::Geometric { per_doubling, .. }, Some(kappa)) => {
                let ln_r = std::f64::consts::LN_2 / per_doubling as f64;
                (ln_r / kappa, Transport::Shift { ratio: ln_r.exp() })
            }
            _ => {
                if !(opts.dt > 0.0) {
                    return Err(Error::invalid("time step must be positive"));
                }
                let x = &grid.nodes;
                let n = x.len();
                let speeds: Vec<f64> = (0..n)
                    .map(|i| {
                        let edge = if i + 1 < n { 0.5 * (x[i] + x[i + 1]) } else { x[i] + 0.5 * (x[i] - x[i - 1]) };
                        problem.growth.speed(edge)
                    })
                    .collect();
                let worst = speeds
                    .iter()
                    .zip(&grid.weights)
                    .map(|(v, w)| v / w)
                    .fold(0.0f64, f64::max);
                let substeps = ((opts.dt * worst / opts.cfl).ceil() as usize).max(1);
                (
                    opts.dt,
                    Transport::Upwind {
                        speeds,
                        substeps,
                        sigma: opts.dt / substeps as f64,
                    },
                )
            }
        };
        let division = DivisionStep::new(problem, grid, 0.5 * dt, opts.division_substeps, opts.kernel_nodes);
        Ok(GrowthFragStepper {
            problem: problem.clone(),
            grid: grid.clone(),
            dt,
            transport,
            division,
        })
    }

    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    pub fn problem(&self) -> &GrowthFragProblem {
        &self.problem
    }

    /// True when transport is the exact index shift.
    pub fn is_exact_shift(&self) -> bool {
        matches!(self.transport, Transport::Shift { .. })
    }

    fn transport(&self, v: &mut [f64]) {
        match &self.transport {
            Transport::Shift { ratio } => {
                for i in (1..v.len()).rev() {
                    v[i] = v[i - 1] / ratio;
                }
                v[0] = 0.0;
            }
            Transport::Upwind { speeds, substeps, sigma } => {
                let w = &self.grid.weights;
                for _ in 0..*substeps {
                    for i in (0..v.len()).rev() {
                        let inflow = if i > 0 { v[i - 1] * sigma * speeds[i - 1] / w[i] } else { 0.0 };
                        v[i] = v[i] * (1.0 - sigma * speeds[i] / w[i]) + inflow;
                    }
                }
            }
        }
    }

    fn transport_adjoint(&self, y: &mut [f64]) {
        let n = y.len();
        match &self.transport {
            Transport::Shift { ratio } => {
                for j in 0..n - 1 {
                    y[j] = y[j + 1] / ratio;
                }
                y[n - 1] = 0.0;
            }
            Transport::Upwind { speeds, substeps, sigma } => {
                let w = &self.grid.weights;
                for _ in 0..*substeps {
                    for j in 0..n {
                        let next = if j + 1 < n { y[j + 1] * sigma * speeds[j] / w[j + 1] } else { 0.0 };
                        y[j] = y[j] * (1.0 - sigma * speeds[j] / w[j]) + next;
                    }
                }
            }
        }
    }
}

impl LinearStep for GrowthFragStepper {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn apply(&self, v: &mut [f64]) {
        let mut scratch = vec![0.0; v.len()];
        self.division.apply(v, &mut scratch);
        self.transport(v);
        self.division.apply(v, &mut scratch);
    }

    fn apply_adjoint(&self, y: &mut [f64]) {
        let mut scratch = vec![0.0; y.len()];
        self.division.apply_adjoint(y, &mut scratch);
        self.transport_adjoint(y);
        self.division.apply_adjoint(y, &mut scratch);
    }
}

fn initial_guess(grid: &SolverGrid) -> Vec<f64> {
    grid.nodes.iter().map(|&x| x / (1.0 + x * x * x)).collect()
}

/// Dominant eigenelements on `grid` with default stepping options.
pub fn gf_eigen(problem: &GrowthFragProblem, grid: &SolverGrid) -> Result<EigenTriplet> {
    let stepper = GrowthFragStepper::new(problem, grid, StepperOptions::default())?;
    gf_eigen_with(&stepper, PowerOptions::default())
}

/// Power iteration on the discrete step and its transpose.
///
/// When the dominant eigenvalue is not isolated the iterates are averaged over one
/// period of the index cycle and `oscillatory` is set on the result.
pub fn gf_eigen_with(stepper: &GrowthFragStepper, mut opts: PowerOptions) -> Result<EigenTriplet> {
    let problem = stepper.problem();
    let grid = stepper.grid();
    let w = &grid.weights;
    let oscillatory = problem.is_oscillatory();
    let k = problem.multiplicity;
    let invariant: Vec<f64> = if k == 1 {
        w.clone()
    } else {
        w.iter().zip(&grid.nodes).map(|(w, x)| w * x).collect()
    };
    let probe = if oscillatory && stepper.is_exact_shift() {
        opts.period = grid.per_doubling();
        Some(invariant.as_slice())
    } else {
        None
    };
    let direct = power_iterate(stepper, initial_guess(grid), w, probe, false, opts)?;
    let adjoint = power_iterate(
        stepper,
        vec![1.0; grid.len()],
        &direct.vector,
        Some(&direct.vector),
        true,
        opts,
    )?;
    let lambda = direct.factor.ln() / stepper.dt();
    let phi: Vec<f64> = adjoint.vector.iter().zip(w).map(|(y, w)| y / w).collect();
    Ok(EigenTriplet {
        lambda,
        direct: GridDensity::new(grid.nodes.clone(), direct.vector)?,
        adjoint: phi,
        multiplicity: k,
        oscillatory,
        iterations: direct.steps + adjoint.steps,
        residual: direct.residual.max(adjoint.residual),
        weights: w.clone(),
    })
}

/// Integrate from `initial` to `horizon`, recording roughly every `record_every` time units.
pub fn solve_growth_frag(
    initial: &GridDensity,
    problem: &GrowthFragProblem,
    grid: &SolverGrid,
    horizon: f64,
    record_every: f64,
) -> Result<Trajectory> {
    let stepper = GrowthFragStepper::new(problem, grid, StepperOptions::default())?;
    solve_growth_frag_with(&stepper, initial, horizon, record_every)
}

pub fn solve_growth_frag_with(
    stepper: &GrowthFragStepper,
    initial: &GridDensity,
    horizon: f64,
    record_every: f64,
) -> Result<Trajectory> {
    if initial.values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("initial density must be finite and nonnegative"));
    }
    let grid = stepper.grid();
    let mut v = initial.resample(&grid.nodes)?.values;
    let mut traj = Trajectory::new(grid.nodes.clone());
    let steps = (horizon / stepper.dt()).round() as usize;
    let every = ((record_every / stepper.dt()).round() as usize).max(1);
    traj.push(0.0, v.clone(), 0.0);
    for s in 1..=steps {
        stepper.apply(&mut v);
        if s % every == 0 || s == steps {
            traj.push(s as f64 * stepper.dt(), v.clone(), 0.0);
        }
    }
    Ok(traj)
}

/// Residuals of the number and mass balance laws over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResiduals {
    /// `|int n(T) - int n(0) - int_0^T (k - 1) int tau B n| / (T max int n)`
    pub count: f64,
    /// Same for `int x n` against `int tau n + (k/2 - 1) int x tau B n`.
    pub mass: f64,
    pub horizon: f64,
}

/// Compare the discrete change of the first two moments with the time-integrated
/// right-hand sides of the balance laws (trapezoid rule in time).
pub fn moment_residuals(stepper: &GrowthFragStepper, initial: &[f64], horizon: f64) -> Result<MomentResiduals> {
    let grid = stepper.grid();
    let problem = stepper.problem();
    let k = problem.multiplicity as f64;
    let x = &grid.nodes;
    let w = &grid.weights;
    let speed: Vec<f64> = x.iter().map(|&v| problem.growth.speed(v)).collect();
    let hazard: Vec<f64> = x.iter().map(|&v| problem.division_rate(v)).collect();
    let moments = |v: &[f64]| -> (f64, f64, f64, f64) {
        let mut c = 0.0;
        let mut m = 0.0;
        let mut rc = 0.0;
        let mut rm = 0.0;
        for i in 0..v.len() {
            let wn = w[i] * v[i];
            c += wn;
            m += wn * x[i];
            rc += (k - 1.0) * wn * hazard[i];
            rm += wn * speed[i] + (0.5 * k - 1.0) * wn * x[i] * hazard[i];
        }
        (c, m, rc, rm)
    };
    let mut v = initial.to_vec();
    let steps = ((horizon / stepper.dt()).round() as usize).max(1);
    let dt = stepper.dt();
    let (c0, m0, mut rc, mut rm) = moments(&v);
    let (mut int_c, mut int_m) = (0.0, 0.0);
    let (mut max_c, mut max_m) = (c0, m0);
    let (mut c1, mut m1) = (c0, m0);
    for _ in 0..steps {
        stepper.apply(&mut v);
        let (c, m, rc_new, rm_new) = moments(&v);
        int_c += 0.5 * dt * (rc + rc_new);
        int_m += 0.5 * dt * (rm + rm_new);
        rc = rc_new;
        rm = rm_new;
        max_c = max_c.max(c);
        max_m = max_m.max(m);
        c1 = c;
        m1 = m;
    }
    let t = steps as f64 * dt;
    Ok(MomentResiduals {
        count: (c1 - c0 - int_c).abs() / (t * max_c),
        mass: (m1 - m0 - int_m).abs() / (t * max_m),
        horizon: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(k: u8, kernel: FragmentationKernel) -> GrowthFragProblem {
        GrowthFragProblem::new(
            RateFunction::power(1.0, 1.0).unwrap(),
            GrowthLaw::exponential(1.0).unwrap(),
            kernel,
            k,
        )
        .unwrap()
    }

    fn check_transpose(stepper: &GrowthFragStepper) {
        let n = stepper.len();
        let v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7 % 11) as f64).sin()).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 3 % 5) as f64).cos()).collect();
        let mut mv = v.clone();
        stepper.apply(&mut mv);
        let mut mty = y.clone();
        stepper.apply_adjoint(&mut mty);
        let lhs: f64 = y.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let rhs: f64 = mty.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn transposes_are_exact() {
        let geo = SolverGrid::geometric(1.0 / 64.0, 16.0, 8).unwrap();
        let uni = SolverGrid::uniform(8.0, 200).unwrap();
        for kernel in [FragmentationKernel::EqualMitosis, FragmentationKernel::Uniform] {
            for grid in [&geo, &uni] {
                let s = GrowthFragStepper::new(&problem(2, kernel.clone()), grid, StepperOptions::default()).unwrap();
                check_transpose(&s);
            }
        }
    }

    #[test]
    fn exponential_growth_gives_lambda_kappa() {
        let grid = SolverGrid::geometric(1.0 / 64.0, 16.0, 16).unwrap();
        let e = gf_eigen(&problem(2, FragmentationKernel::Uniform), &grid).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-8, "{}", e.lambda);
    }

    #[test]
    fn mitosis_adjoint_is_linear() {
        let grid = SolverGrid::geometric(1.0 / 64.0, 16.0, 16).unwrap();
        let e = gf_eigen(&problem(2, FragmentationKernel::EqualMitosis), &grid).unwrap();
        assert!(e.oscillatory);
        assert!((e.lambda - 1.0).abs() < 1e-8);
        let i = grid.nodes.partition_point(|&x| x < 1.0);
        let c = e.adjoint[i] / grid.nodes[i];
        for j in (i - 40)..(i + 40) {
            let rel = (e.adjoint[j] / grid.nodes[j] / c - 1.0).abs();
            assert!(rel < 1e-6, "{j}: {rel}");
        }
    }
}
