use divrate::deconv::*;
use divrate::model::{geometric_grid, FragmentationKernel, GridDensity};

fn telescoping(x_min: f64, per_doubling: usize) -> GridDensity {
    GridDensity::from_fn(geometric_grid(x_min, 64.0, per_doubling), |x| 2.0 * (-2.0 * x).exp() - (-x).exp()).unwrap()
}

fn sup_error_on<F: Fn(f64) -> f64>(h: &GridDensity, lo: f64, hi: f64, truth: F) -> f64 {
    h.x.iter()
        .zip(&h.values)
        .filter(|(x, _)| (lo..=hi).contains(*x))
        .map(|(x, v)| (v - truth(*x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn zero_rhs_gives_zero() {
    let rhs = GridDensity::new(geometric_grid(0.01, 10.0, 16), vec![0.0; geometric_grid(0.01, 10.0, 16).len()]).unwrap();
    for branch in [DilationBranch::H0, DilationBranch::Hinf, DilationBranch::Glued { at: None }] {
        let h = dilation_solve(&DilationProblem::new(rhs.clone(), 2, branch)).unwrap();
        assert!(h.values.iter().all(|v| *v == 0.0));
    }
    let back = dilation_apply(&rhs, 1, UpperTail::Zero).unwrap();
    assert!(back.values.iter().all(|v| *v == 0.0));
}

#[test]
fn apply_on_exponential() {
    let f = GridDensity::from_fn(geometric_grid(0.01, 64.0, 32), |x| (-x).exp()).unwrap();
    let g = dilation_apply(&f, 1, UpperTail::Zero).unwrap();
    let err = sup_error_on(&g, 0.01, 32.0, |x| 2.0 * (-2.0 * x).exp() - (-x).exp());
    assert!(err < 1e-14, "{err}");
}

#[test]
fn telescoping_series_recovers_exponential() {
    let rhs = telescoping(2f64.powi(-30), 64);
    let h = dilation_solve(&DilationProblem::new(rhs, 1, DilationBranch::H0)).unwrap();
    let err = sup_error_on(&h, 0.05, 20.0, |x| (-x).exp());
    assert!(err < 1e-8, "{err}");
}

#[test]
fn branches_agree_on_synthetic_truth() {
    let rhs = telescoping(2f64.powi(-30), 64);
    let at = gluing_point(&rhs, 1, UpperTail::Zero).unwrap();
    let low = dilation_solve(&DilationProblem::new(rhs.clone(), 1, DilationBranch::H0)).unwrap();
    let high = dilation_solve(&DilationProblem::new(rhs, 1, DilationBranch::Hinf)).unwrap();
    let gap = low
        .x
        .iter()
        .zip(low.values.iter().zip(&high.values))
        .filter(|(x, _)| (0.5 * at..=2.0 * at).contains(*x))
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "gap {gap} around {at}");
}

#[test]
fn solve_then_apply_is_identity_inside() {
    let rhs = telescoping(2f64.powi(-30), 32);
    for k in [1u8, 2] {
        let h = dilation_solve(&DilationProblem::new(rhs.clone(), k, DilationBranch::H0)).unwrap();
        let back = dilation_apply(&h, k, UpperTail::Zero).unwrap();
        let err = (0..rhs.len() - 32).map(|i| (back.values[i] - rhs.values[i]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "k = {k}: {err}");
    }
}

#[test]
fn mellin_agrees_with_the_series() {
    let rhs = telescoping(1e-4, 256);
    let series = dilation_solve(&DilationProblem::new(rhs.clone(), 1, DilationBranch::H0)).unwrap();
    let grid = LogGrid {
        points: 1 << 15,
        u_min: -30.0,
        u_max: 12.0,
    };
    let mellin = mellin_dilation_solve_with(&rhs, &FragmentationKernel::EqualMitosis, 1, 0.0, &grid, 1e-8).unwrap();
    let gap = series
        .x
        .iter()
        .zip(&series.values)
        .filter(|(x, _)| (0.1..=10.0).contains(*x))
        .map(|(x, v)| (v - mellin.solution.eval(*x)).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn mellin_inverts_the_uniform_kernel() {
    // 2 int_x^inf H(y) dy / y - H(x) with H(x) = x e^{-x}
    let rhs = GridDensity::from_fn(geometric_grid(1e-4, 64.0, 128), |x| (2.0 - x) * (-x).exp()).unwrap();
    let h = mellin_dilation_solve(&rhs, &FragmentationKernel::Uniform, 2, 0.0).unwrap();
    let err = sup_error_on(&h, 0.1, 10.0, |x| x * (-x).exp());
    assert!(err < 1e-3, "{err}");
}

#[test]
fn mellin_line_through_the_zero_is_rejected() {
    let rhs = telescoping(0.01, 8);
    for (k, q) in [(1u8, 1.0), (2, 3.0)] {
        let e = mellin_dilation_solve(&rhs, &FragmentationKernel::EqualMitosis, k, q).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}

#[test]
fn fourier_self_ratio_is_a_band() {
    let dx = 0.01;
    let v: Vec<f64> = (0..1024).map(|i| (-(i as f64) * dx).exp()).collect();
    let r = fourier_deconvolve(&v, &v, dx, 1e6, 1e-12).unwrap();
    assert!((r.values[0] * dx - 1.0).abs() < 1e-8);
    assert!(r.values[1..].iter().all(|v| v.abs() < 1e-8));
    assert!(r.imaginary_residual < 1e-8);
}

#[test]
fn fourier_floor_everywhere_is_an_error() {
    let v: Vec<f64> = (0..256).map(|i| (-(i as f64) * 0.05).exp()).collect();
    let zero = vec![0.0; 256];
    assert!(fourier_deconvolve(&v, &zero, 0.05, 10.0, 1e-8).is_err());
}
