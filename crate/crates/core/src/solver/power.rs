use crate::error::{Error, Result};

/// A positive linear time step `v -> M v` and its transpose for the plain pairing `sum y_i v_i`.
pub trait LinearStep: Sync {
    fn len(&self) -> usize;
    fn dt(&self) -> f64;
    fn apply(&self, v: &mut [f64]);
    fn apply_adjoint(&self, y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_steps: usize,
    /// Average over this many steps when the dominant eigenvalue is not isolated.
    pub period: Option<usize>,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-10,
            max_steps: 100_000,
            period: None,
        }
    }
}

/// Dominant eigenvector found by iterating the step.
#[derive(Debug, Clone)]
pub struct PowerResult {
    /// Growth factor per step.
    pub factor: f64,
    pub vector: Vec<f64>,
    pub steps: usize,
    pub residual: f64,
}

fn weighted_sum(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn weighted_l1(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y).abs()).sum()
}

fn normalize(w: &[f64], v: &mut [f64]) -> Result<f64> {
    let s = weighted_sum(w, v);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::numerical("power iteration", format!("iterate mass is {s}")));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(s)
}

/// Power iteration on `step` (or its adjoint).
///
/// Iterates are normalised by the functional `probe` (defaults to `w`), and the growth
/// factor is the geometric mean of the per-step growth of `probe`. With `period` set the
/// returned vector is the average of the normalised iterates over one period, which picks
/// out the eigenvector when the peripheral spectrum is a cyclic group and `probe` is an
/// exact left eigenvector. Convergence compares `w`-normalised vectors one block apart, a
/// block being `period` steps or roughly one unit of time.
pub fn power_iterate<S: LinearStep + ?Sized>(
    step: &S,
    init: Vec<f64>,
    w: &[f64],
    probe: Option<&[f64]>,
    adjoint: bool,
    opts: PowerOptions,
) -> Result<PowerResult> {
    let probe = probe.unwrap_or(w);
    let mut v = init;
    normalize(probe, &mut v)?;
    let block = opts
        .period
        .unwrap_or_else(|| ((1.0 / step.dt()).round() as usize).clamp(1, 10_000));
    let mut steps = 0;
    let mut previous: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    while steps < opts.max_steps {
        let mut average = vec![0.0; v.len()];
        let mut log_growth = 0.0;
        for _ in 0..block {
            if opts.period.is_some() {
                average.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
            }
            if adjoint {
                step.apply_adjoint(&mut v);
            } else {
                step.apply(&mut v);
            }
            log_growth += normalize(probe, &mut v)?.ln();
            steps += 1;
        }
        let factor = (log_growth / block as f64).exp();
        let mut current = if opts.period.is_some() { average } else { v.clone() };
        normalize(w, &mut current)?;
        if let Some(prev) = &previous {
            residual = weighted_l1(w, prev, &current);
            if residual < opts.tol {
                return Ok(PowerResult {
                    factor,
                    vector: current,
                    steps,
                    residual,
                });
            }
        }
        previous = Some(current);
    }
    Err(Error::NotConverged {
        op: "power iteration",
        iterations: steps,
        residual,
    })
}
