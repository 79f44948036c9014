use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_with_abs};

/// Polynomial smoothing kernel supported on [-1, 1].
///
/// A kernel of order `l` integrates to one and has vanishing moments `1..l-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    pub order: usize,
    /// Coefficients of the profile in increasing powers of `u`.
    pub coefficients: Vec<f64>,
}

impl KernelSpec {
    /// `(15/16)(1 - u^2)^2`
    pub fn biweight() -> Self {
        let c = 15.0 / 16.0;
        KernelSpec {
            name: "biweight".into(),
            order: 2,
            coefficients: vec![c, 0.0, -2.0 * c, 0.0, c],
        }
    }

    /// `(105/64)(1 - u^2)^2 (1 - 3u^2)`, the biweight corrected by a second Legendre term.
    pub fn fourth_order() -> Self {
        let c = 105.0 / 64.0;
        KernelSpec {
            name: "fourth-order".into(),
            order: 4,
            coefficients: vec![c, 0.0, -5.0 * c, 0.0, 7.0 * c, 0.0, -3.0 * c],
        }
    }

    /// Uniform kernel 1/2 on [-1, 1].
    pub fn boxcar() -> Self {
        KernelSpec {
            name: "box".into(),
            order: 2,
            coefficients: vec![0.5],
        }
    }

    pub fn by_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::biweight()),
            4 => Ok(Self::fourth_order()),
            other => Err(Error::invalid(format!(
                "no shipped kernel of order {other}; use 2 or 4"
            ))),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "biweight" => Ok(Self::biweight()),
            "fourth-order" => Ok(Self::fourth_order()),
            "box" => Ok(Self::boxcar()),
            other => Err(Error::invalid(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.coefficients.len() > 1
    }

    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * u + i as f64 * c)
    }

    /// `K_h(a) = K(a / h) / h`
    pub fn scaled(&self, a: f64, h: f64) -> f64 {
        self.eval(a / h) / h
    }

    /// Exact `int_lo^hi u^j K(u) du` with limits clipped to the support.
    pub fn partial_moment(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let lo = lo.clamp(-1.0, 1.0);
        let hi = hi.clamp(-1.0, 1.0);
        if hi <= lo {
            return 0.0;
        }
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = (i + j + 1) as i32;
                c * (hi.powi(p) - lo.powi(p)) / p as f64
            })
            .sum()
    }

    /// `int K^2`
    pub fn roughness(&self) -> f64 {
        integrate(|u| self.eval(u).powi(2), -1.0, 1.0, 1e-12).unwrap_or(f64::NAN)
    }

    /// Coefficients `(c0, c1)` of the local-linear equivalent kernel `(c0 + c1 u) K(u)`
    /// on the truncated support `[lo, hi]`.
    pub fn boundary_coefficients(&self, lo: f64, hi: f64) -> (f64, f64) {
        if lo <= -1.0 && hi >= 1.0 {
            return (1.0, 0.0);
        }
        let a0 = self.partial_moment(0, lo, hi);
        let a1 = self.partial_moment(1, lo, hi);
        let a2 = self.partial_moment(2, lo, hi);
        let det = a0 * a2 - a1 * a1;
        if det.abs() < 1e-14 {
            return (if a0 > 0.0 { 1.0 / a0 } else { 0.0 }, 0.0);
        }
        (a2 / det, -a1 / det)
    }

    /// Verify the moment conditions by adaptive quadrature.
    pub fn check_moments(&self, tol: f64) -> Result<()> {
        for j in 0..self.order {
            let m = integrate_with_abs(|u| u.powi(j as i32) * self.eval(u), -1.0, 1.0, 1e-13, 1e-15)?;
            let target = if j == 0 { 1.0 } else { 0.0 };
            if (m - target).abs() > tol {
                return Err(Error::invalid(format!(
                    "kernel {} moment {j} is {m}, expected {target}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}
