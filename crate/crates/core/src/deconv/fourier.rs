use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Output of [`fourier_deconvolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDeconvolution {
    pub values: Vec<f64>,
    /// Largest imaginary part left after the inverse transform, relative to the largest real part.
    pub imaginary_residual: f64,
    /// Frequencies inside the cutoff.
    pub retained: usize,
    /// Retained frequencies whose denominator modulus was raised to the floor.
    pub floored: usize,
}

/// Solve `numerator = denominator * w` (continuous convolution on a uniform grid of step `dx`)
/// for `w`, keeping angular frequencies `|xi| <= cutoff`.
///
/// Both inputs start at the same abscissa and are zero padded before transforming. The floor
/// is relative to the largest modulus of the denominator transform.
pub fn fourier_deconvolve(
    numerator: &[f64],
    denominator: &[f64],
    dx: f64,
    cutoff: f64,
    floor: f64,
) -> Result<FourierDeconvolution> {
    let n = numerator.len();
    if n == 0 || denominator.len() != n {
        return Err(Error::invalid("numerator and denominator must share a nonempty grid"));
    }
    if !(dx > 0.0 && cutoff > 0.0 && floor >= 0.0) {
        return Err(Error::invalid("need dx > 0, cutoff > 0 and floor >= 0"));
    }
    let size = (2 * n).next_power_of_two();
    let pad = |v: &[f64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); size];
        out.iter_mut().zip(v).for_each(|(o, &x)| o.re = x);
        out
    };
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let mut num = pad(numerator);
    let mut den = pad(denominator);
    fwd.process(&mut num);
    fwd.process(&mut den);
    let peak = den.iter().fold(0.0f64, |m, v| m.max(v.norm())) * dx;
    if !(peak > 0.0) {
        return Err(Error::numerical("fourier deconvolution", "denominator transform vanishes"));
    }
    let threshold = floor * peak;
    let scale = 2.0 * std::f64::consts::PI / (size as f64 * dx);
    let mut retained = 0;
    let mut floored = 0;
    for j in 0..size {
        let f = if j < size / 2 { j as f64 } else { j as f64 - size as f64 };
        if (f * scale).abs() > cutoff {
            num[j] = Complex64::new(0.0, 0.0);
            continue;
        }
        retained += 1;
        let mut d = den[j] * dx;
        let modulus = d.norm();
        if modulus < threshold {
            floored += 1;
            d = if modulus > 0.0 {
                d * (threshold / modulus)
            } else {
                Complex64::new(threshold, 0.0)
            };
        }
        num[j] /= d;
    }
    if 2 * floored > retained {
        return Err(Error::numerical(
            "fourier deconvolution",
            format!("floor hit on {floored} of {retained} retained frequencies"),
        ));
    }
    planner.plan_fft_inverse(size).process(&mut num);
    let norm = size as f64;
    let values: Vec<f64> = num[..n].iter().map(|v| v.re / norm).collect();
    let re_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let im_max = num[..n].iter().fold(0.0f64, |m, v| m.max((v.im / norm).abs()));
    Ok(FourierDeconvolution {
        values,
        imaginary_residual: if re_max > 0.0 { im_max / re_max } else { im_max },
        retained,
        floored,
    })
}
