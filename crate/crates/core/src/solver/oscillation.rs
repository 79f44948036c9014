use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

/// `<n, x^s> e^{-kappa s t}` with `s = k - 1 + 2 i pi m / ln 2`, computed with the
/// quadrature weights `weights` of the grid `x`.
pub fn oscillation_projection(x: &[f64], weights: &[f64], values: &[f64], mode: i32, kappa: f64, k: u8, t: f64) -> Complex64 {
    let s = Complex64::new(k as f64 - 1.0, 2.0 * PI * mode as f64 / LN_2);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..x.len() {
        if x[i] > 0.0 {
            acc += weights[i] * values[i] * (s * x[i].ln()).exp();
        }
    }
    acc * (-kappa * s * t).exp()
}
