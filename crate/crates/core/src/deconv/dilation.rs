use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridDensity, Spacing};

const MAX_TERMS: usize = 200;
const TERM_TOL: f64 = 1e-12;
const STALL_TERMS: usize = 10;

/// Extension of a grid function above its last node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpperTail {
    #[default]
    Zero,
    ConstantLast,
}

/// Which series solution of `2k H(2x) - H(x) = L(x)` to build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DilationBranch {
    /// `sum_{j>=1} (2k)^{-j} L(2^{-j} x)`, summable toward zero.
    H0,
    /// `-sum_{j>=0} (2k)^j L(2^j x)`, needs fast decay of `L` at infinity.
    Hinf,
    /// `H0` below `at` and `Hinf` from `at` on; `None` picks the point automatically.
    Glued { at: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationProblem {
    pub rhs: GridDensity,
    pub multiplicity: u8,
    pub branch: DilationBranch,
    pub tail: UpperTail,
}

impl DilationProblem {
    pub fn new(rhs: GridDensity, multiplicity: u8, branch: DilationBranch) -> Self {
        DilationProblem {
            rhs,
            multiplicity,
            branch,
            tail: UpperTail::Zero,
        }
    }
}

/// Nodes per doubling of a geometric grid whose ratio is an exact root of two.
fn nodes_per_doubling(f: &GridDensity) -> Result<usize> {
    let Spacing::Geometric { ratio } = f.spacing else {
        return Err(Error::invalid("dilation needs a geometric grid"));
    };
    let m = (std::f64::consts::LN_2 / ratio.ln()).round();
    if !(m >= 1.0) || (2f64.powf(1.0 / m) - ratio).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!("grid ratio {ratio} is not a root of two")));
    }
    Ok(m as usize)
}

fn check_multiplicity(k: u8) -> Result<f64> {
    match k {
        1 | 2 => Ok(k as f64),
        _ => Err(Error::invalid(format!("multiplicity must be 1 or 2, got {k}"))),
    }
}

/// Value at node `i + shift`, extended below the grid by the first value.
fn shifted(values: &[f64], i: usize, shift: isize, tail: UpperTail) -> f64 {
    let j = i as isize + shift;
    let n = values.len() as isize;
    if j < 0 {
        values[0]
    } else if j >= n {
        match tail {
            UpperTail::Zero => 0.0,
            UpperTail::ConstantLast => values[values.len() - 1],
        }
    } else {
        values[j as usize]
    }
}

/// `2k f(2x) - f(x)` on the grid of `f`.
pub fn dilation_apply(f: &GridDensity, k: u8, tail: UpperTail) -> Result<GridDensity> {
    let m = nodes_per_doubling(f)? as isize;
    let k = check_multiplicity(k)?;
    let values = (0..f.len())
        .map(|i| 2.0 * k * shifted(&f.values, i, m, tail) - f.values[i])
        .collect();
    GridDensity::new(f.x.clone(), values)
}

/// `L2(x^q dx)` norm by the trapezoid rule.
fn weighted_norm(x: &[f64], v: &[f64], q: f64) -> f64 {
    x.windows(2)
        .zip(v.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (x[0].powf(q) * v[0] * v[0] + x[1].powf(q) * v[1] * v[1]))
        .sum::<f64>()
        .sqrt()
}

fn series(
    rhs: &GridDensity,
    k: f64,
    m: isize,
    downward: bool,
    tail: UpperTail,
    op: &'static str,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut sum = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    // terms shrink geometrically in L2(x^q) one unit either side of the pivot 2k - 1
    let (first, ratio, sign, dir, q) = if downward {
        (1, 1.0 / (2.0 * k), 1.0, -1, 2.0 * k - 2.0)
    } else {
        (0, 2.0 * k, -1.0, 1, 2.0 * k)
    };
    let mut coeff = sign * ratio.powi(first as i32);
    for j in first..first + MAX_TERMS {
        let shift = dir * m * j as isize;
        let term: Vec<f64> = (0..n).map(|i| coeff * shifted(&rhs.values, i, shift, tail)).collect();
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        let size = weighted_norm(&rhs.x, &term, q);
        if !size.is_finite() {
            return Err(Error::numerical(op, "series term is not finite"));
        }
        if size < TERM_TOL {
            return Ok(sum);
        }
        if size < best {
            best = size;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_TERMS {
                return Err(Error::numerical(
                    op,
                    format!("series terms stopped decreasing at j = {j} (norm {size:e})"),
                ));
            }
        }
        coeff *= ratio;
    }
    Ok(sum)
}

/// Abscissa where the estimated truncation errors of the two branches balance.
///
/// The error of `H0` at a node is the tail of the series past the bottom of the grid,
/// the error of `Hinf` the tail past the top; both are floored at rounding level. Among
/// equally good nodes the largest is taken, since `H0` damps noise in `L` and `Hinf`
/// amplifies it.
pub fn gluing_point(rhs: &GridDensity, k: u8, tail: UpperTail) -> Result<f64> {
    let m = nodes_per_doubling(rhs)?;
    let k = check_multiplicity(k)?;
    let n = rhs.len();
    let scale = rhs.max_abs().max(f64::MIN_POSITIVE);
    let low = rhs.values[0].abs();
    let high = match tail {
        UpperTail::Zero => 0.0,
        UpperTail::ConstantLast => rhs.values[n - 1].abs(),
    };
    let err = |i: usize| {
        let below = (i / m + 1) as i32;
        let above = ((n - 1 - i) / m + 1) as i32;
        let e0 = low * (2.0 * k).powi(-below) + f64::EPSILON * scale;
        let e_inf = high * (2.0 * k).powi(above) + f64::EPSILON * scale;
        e0.max(e_inf)
    };
    let errs: Vec<f64> = (0..n).map(err).collect();
    let least = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    let i = (0..n).rev().find(|&i| errs[i] <= least * (1.0 + 1e-9)).unwrap_or(n - 1);
    Ok(rhs.x[i])
}

/// Series solution of `2k H(2x) - H(x) = L(x)` on the grid of `L`.
pub fn dilation_solve(p: &DilationProblem) -> Result<GridDensity> {
    let m = nodes_per_doubling(&p.rhs)? as isize;
    let k = check_multiplicity(p.multiplicity)?;
    let values = match p.branch {
        DilationBranch::H0 => series(&p.rhs, k, m, true, p.tail, "dilation series H0")?,
        DilationBranch::Hinf => series(&p.rhs, k, m, false, p.tail, "dilation series Hinf")?,
        DilationBranch::Glued { at } => {
            let at = match at {
                Some(a) => a,
                None => gluing_point(&p.rhs, p.multiplicity, p.tail)?,
            };
            let low = series(&p.rhs, k, m, true, p.tail, "dilation series H0")?;
            let high = series(&p.rhs, k, m, false, p.tail, "dilation series Hinf")?;
            p.rhs
                .x
                .iter()
                .enumerate()
                .map(|(i, &x)| if x < at { low[i] } else { high[i] })
                .collect()
        }
    };
    GridDensity::new(p.rhs.x.clone(), values)
}
