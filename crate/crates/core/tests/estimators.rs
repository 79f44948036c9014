use divrate::estim::*;
use divrate::model::{
    uniform_grid, EstimationResult, FragmentationKernel, GridDensity, GrowthLaw, KernelSpec, ModelSpec,
    RateFunction, SampleSet, Scheme,
};
use divrate::sim::{draw_from_density, simulate_lineage, simulate_replicates, RngStream, RootSpec};
use divrate::smoothing::SortedSample;
use divrate::solver::{gf_eigen, GrowthFragProblem, SolverGrid};

fn constant(b: f64) -> RateFunction {
    RateFunction::constant(b).unwrap()
}

fn sup_error(r: &EstimationResult, lo: f64, hi: f64, truth: impl Fn(f64) -> f64) -> f64 {
    r.estimate
        .x
        .iter()
        .zip(&r.estimate.values)
        .filter(|(x, _)| (lo..=hi).contains(*x))
        .map(|(x, v)| (v - truth(*x)).abs())
        .fold(0.0, f64::max)
}

fn relative_l2(r: &EstimationResult, lo: f64, hi: f64, truth: impl Fn(f64) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, v) in r.estimate.x.iter().zip(&r.estimate.values) {
        if (lo..=hi).contains(x) {
            num += (v - truth(*x)).powi(2);
            den += truth(*x).powi(2);
        }
    }
    (num / den).sqrt()
}

fn assert_admissible(r: &EstimationResult) {
    assert!(r.values().iter().all(|v| v.is_finite() && *v >= 0.0));
}

fn exponential_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..n).map(|_| rng.exponential()).collect()
}

fn merged(parts: Vec<SampleSet>) -> SampleSet {
    SampleSet::merge(parts).unwrap()
}

#[test]
fn age_lineage_round_trip() {
    let spec = ModelSpec::age(constant(1.0), 1.0).unwrap();
    let n = 100_000;
    let s = simulate_lineage(&spec, n - 1, &RootSpec::default(), &mut RngStream::new(3, 0)).unwrap();
    let h = (n as f64).powf(-0.2);
    let grid = uniform_grid(0.0, 2.0, 41);
    let r = estimate_b_age_genealogical(&s.lifetimes(), &Smoothing::half_line(h), &grid).unwrap();
    assert_admissible(&r);
    let err = sup_error(&r, 0.0, 2.0, |_| 1.0);
    assert!(err < 0.1, "{err}");
}

fn population_lifetimes(horizon: f64, replicates: usize, seed: u64) -> Vec<f64> {
    let spec = ModelSpec::age(constant(1.0), 1.0).unwrap();
    let parts = simulate_replicates(&spec, Scheme::U2 { horizon }, &RootSpec::default(), seed, replicates, 1 << 22).unwrap();
    merged(parts).lifetimes()
}

#[test]
fn age_population_round_trip_and_naive_bias() {
    let horizon = 8.0;
    let lifetimes = population_lifetimes(horizon, 20, 5);
    let h = population_bandwidth(1.0, horizon, 2.0);
    let grid = uniform_grid(0.0, 1.5, 31);
    let r = estimate_b_age_population(&lifetimes, 1.0, &Smoothing::half_line(h), None, &grid).unwrap();
    assert_admissible(&r);
    let err = sup_error(&r, 0.0, 1.5, |_| 1.0);
    assert!(err < 0.15, "{err}");

    let naive = estimate_b_age_genealogical(&lifetimes, &Smoothing::half_line(h), &grid).unwrap();
    let inside: Vec<f64> = grid.iter().zip(naive.values()).filter(|(a, _)| **a <= 1.0).map(|p| *p.1 - 1.0).collect();
    let bias = inside.iter().sum::<f64>() / inside.len() as f64;
    assert!(bias > 0.1, "naive bias {bias}");
}

#[test]
fn population_estimator_needs_positive_lambda() {
    let e = estimate_b_age_population(&[0.5, 1.0, 1.5], 0.0, &Smoothing::half_line(0.3), None, &[0.5]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn biased_hazard_of_the_population_lifetime_density() {
    // B = 1 gives f1 = e^{-a} and lambda = 1, so f2 = 2 e^{-a} f1
    let f2 = GridDensity::from_fn(uniform_grid(0.0, 12.0, 12_001), |a| 2.0 * (-2.0 * a).exp()).unwrap();
    let hazard = compute_biased_hazard(&f2, 1e-6).unwrap();
    for a in [0.0, 0.5, 1.0, 3.0] {
        assert!((hazard.eval(a) - 2.0).abs() < 1e-3, "{a}: {}", hazard.eval(a));
    }
}

#[test]
fn lambda_from_simulated_divisions() {
    let spec = ModelSpec::age(constant(1.0), 1.0).unwrap();
    let s = merged(simulate_replicates(&spec, Scheme::U2 { horizon: 8.0 }, &RootSpec::default(), 9, 4, 1 << 20).unwrap());
    let est = estimate_lambda_from_divisions(&s, 2.0, 8.0, 25).unwrap();
    assert!((est.lambda - 1.0).abs() < 0.05, "{}", est.lambda);
    assert!((est.doubling_time - std::f64::consts::LN_2 / est.lambda).abs() < 1e-12);
}

fn snapshot_ages(n: usize, seed: u64) -> Vec<f64> {
    let profile = GridDensity::from_fn(uniform_grid(0.0, 12.0, 4001), |a| 2.0 * (-2.0 * a).exp()).unwrap();
    draw_from_density(&profile, n, &mut RngStream::new(seed, 1)).unwrap()
}

#[test]
fn age_point_data_round_trip() {
    let n = 100_000;
    let ages = snapshot_ages(n, 2);
    let h = (n as f64).powf(-1.0 / 7.0);
    let grid = uniform_grid(0.0, 1.0, 21);
    let r = estimate_b_age_pointdata(PointData::Sample(&ages), 1.0, &Smoothing::half_line(h), None, &grid).unwrap();
    assert_admissible(&r);
    let err = sup_error(&r, 0.0, 1.0, |_| 1.0);
    assert!(err < 0.2, "{err}");
}

#[test]
fn age_point_data_plug_in_converges() {
    let errors: Vec<f64> = [201, 401]
        .iter()
        .map(|&m| {
            let x = uniform_grid(0.0, 10.0, m);
            let dx = x[1] - x[0];
            let exact = GridDensity::from_fn(x, |a| 2.0 * (-2.0 * a).exp()).unwrap();
            let grid = uniform_grid(0.5, 3.0, 26);
            let r = estimate_b_age_pointdata(PointData::Grid(&exact), 1.0, &Smoothing::half_line(2.0 * dx), Some(1e-12), &grid)
                .unwrap();
            sup_error(&r, 0.5, 3.0, |_| 1.0)
        })
        .collect();
    let order = (errors[0] / errors[1]).log2();
    assert!(errors[1] < 1e-2, "{errors:?}");
    assert!(order >= 1.0, "{errors:?}");
}

#[test]
fn point_data_is_more_ill_posed_than_lineage_data() {
    let n = 2000;
    let grid = uniform_grid(0.0, 1.0, 21);
    let wins = (0..20u64)
        .filter(|&seed| {
            let lifetimes = exponential_draws(n, 100 + seed);
            let lineage = estimate_b_age_genealogical(&lifetimes, &Smoothing::half_line((n as f64).powf(-0.2)), &grid).unwrap();
            let ages = snapshot_ages(n, 200 + seed);
            let h = (n as f64).powf(-1.0 / 7.0);
            let point = estimate_b_age_pointdata(PointData::Sample(&ages), 1.0, &Smoothing::half_line(h), None, &grid).unwrap();
            sup_error(&point, 0.0, 1.0, |_| 1.0) >= sup_error(&lineage, 0.0, 1.0, |_| 1.0)
        })
        .count();
    assert!(wins >= 16, "{wins}/20");
}

fn size_eigen(k: u8) -> (GridDensity, f64) {
    let grid = SolverGrid::geometric(1.0 / 64.0, 64.0, 64).unwrap();
    let problem = GrowthFragProblem::new(
        RateFunction::power(1.0, 1.0).unwrap(),
        GrowthLaw::exponential(1.0).unwrap(),
        FragmentationKernel::EqualMitosis,
        k,
    )
    .unwrap();
    let e = gf_eigen(&problem, &grid).unwrap();
    (e.direct, e.lambda)
}

#[test]
fn size_dynamics_plug_in_on_the_lineage_profile() {
    // division flux B tau N1, births at half the division size
    let (n1, _) = size_eigen(1);
    let x = uniform_grid(0.01, 12.0, 1 << 12);
    let flux = GridDensity::from_fn(x.clone(), |y| y * y * n1.eval(y)).unwrap().normalized().unwrap();
    let birth = GridDensity::from_fn(x.clone(), |y| 2.0 * flux.eval(2.0 * y)).unwrap();
    let grid = uniform_grid(0.5, 2.0, 61);
    let r = estimate_b_size_dynamics(&flux, &birth, 1e-12, &grid).unwrap();
    let err = relative_l2(&r, 0.5, 2.0, |y| y);
    assert!(err < 5e-3, "{err}");
}

fn chain_pairs(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let spec = ModelSpec::size(RateFunction::power(1.0, 1.0).unwrap(), 1.0).unwrap();
    let s = simulate_lineage(&spec, n, &RootSpec::warm(1.0, 20), &mut RngStream::new(seed, 0)).unwrap();
    s.birth_size_pairs()
}

fn chain_error(n: usize, seed: u64) -> f64 {
    let pairs = chain_pairs(n, seed);
    let children: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let kernel = KernelSpec::biweight();
    let h = select_bandwidth(&children, &kernel, BandwidthMethod::RuleOfThumb, None).unwrap();
    let grid = uniform_grid(0.5, 2.0, 31);
    let r = estimate_b_size_genealogical(&pairs, &Smoothing::new(kernel, h), None, &grid).unwrap();
    assert_admissible(&r);
    relative_l2(&r, 0.5, 2.0, |y| y)
}

#[test]
fn size_chain_round_trip() {
    let small: Vec<f64> = (0..5).map(|s| chain_error(1 << 10, 40 + s)).collect();
    let large: Vec<f64> = (0..5).map(|s| chain_error(1 << 14, 50 + s)).collect();
    assert!(small.iter().all(|e| *e < 0.25), "{small:?}");
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&large) < mean(&small), "{small:?} {large:?}");
}

#[test]
fn size_point_data_plug_in() {
    let (n2, lambda) = size_eigen(2);
    let growth = GrowthLaw::exponential(1.0).unwrap();
    let kernel = FragmentationKernel::EqualMitosis;
    let mut p = SizePointData::new(&growth, lambda, &kernel, 2, Smoothing::new(KernelSpec::biweight(), 1e-3));
    p.floor = Some(1e-10);
    let grid = uniform_grid(0.5, 2.0, 61);
    let r = estimate_b_size_pointdata(PointData::Grid(&n2), &p, &grid).unwrap();
    let err = relative_l2(&r, 0.5, 2.0, |y| y);
    assert!(err < 1e-2, "{err}");
}

#[test]
fn size_point_data_round_trip_and_lambda_sensitivity() {
    let (n2, lambda) = size_eigen(2);
    let n = 100_000;
    let sizes = draw_from_density(&n2, n, &mut RngStream::new(8, 0)).unwrap();
    let kernel = KernelSpec::biweight();
    let sigma = select_bandwidth(&sizes, &kernel, BandwidthMethod::RuleOfThumb, None).unwrap() * (n as f64).powf(0.2);
    let h = sigma * (n as f64).powf(-1.0 / 7.0);
    let growth = GrowthLaw::exponential(1.0).unwrap();
    let mitosis = FragmentationKernel::EqualMitosis;
    let grid = uniform_grid(0.5, 2.0, 61);
    let run = |l: f64| {
        let p = SizePointData::new(&growth, l, &mitosis, 2, Smoothing::new(kernel.clone(), h));
        estimate_b_size_pointdata(PointData::Sample(&sizes), &p, &grid).unwrap()
    };
    let base = run(lambda);
    assert_admissible(&base);
    let err = relative_l2(&base, 0.5, 2.0, |y| y);
    assert!(err < 0.3, "{err}");

    let gap = |eps: f64| {
        let r = run(lambda + eps);
        r.values().iter().zip(base.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let (one, two) = (gap(0.01), gap(0.02));
    assert!(one > 0.0);
    assert!(two <= 2.5 * one, "{one} {two}");
}

#[test]
fn increment_lineage_round_trip_delegates_to_the_age_estimator() {
    let spec = ModelSpec::increment(constant(1.0), 1.0).unwrap();
    let n = 100_000;
    let s = simulate_lineage(&spec, n - 1, &RootSpec::warm(1.0, 20), &mut RngStream::new(4, 0)).unwrap();
    let smoothing = Smoothing::half_line((n as f64).powf(-0.2));
    let grid = uniform_grid(0.0, 1.5, 31);
    let increments = s.increments();
    let r = estimate_b_increment_genealogical(&increments, Some(&s.birth_sizes()), &smoothing, &grid).unwrap();
    let err = sup_error(&r, 0.0, 1.5, |_| 1.0);
    assert!(err < 0.1, "{err}");
    assert!(r.notes.iter().any(|n| n.starts_with("corr(birth size, increment)")));
    let age = estimate_b_age_genealogical(&increments, &smoothing, &grid).unwrap();
    assert_eq!(age.values(), r.values());
}

#[test]
fn increment_population_round_trip_and_unweighted_bias() {
    let spec = ModelSpec::increment(constant(1.0), 1.0).unwrap();
    let parts = simulate_replicates(&spec, Scheme::U2 { horizon: 8.5 }, &RootSpec::warm(1.0, 20), 6, 20, 1 << 22).unwrap();
    let s = merged(parts);
    let pairs: Vec<(f64, f64)> = s.records.iter().map(|r| (r.increment, r.size_division)).collect();
    assert!(pairs.len() > 50_000, "{}", pairs.len());
    let smoothing = Smoothing::half_line((pairs.len() as f64).powf(-0.2));
    let grid = uniform_grid(0.0, 1.5, 31);
    let r = estimate_b_increment_population(&pairs, &smoothing, &grid).unwrap();
    assert_admissible(&r);
    let err = sup_error(&r, 0.0, 1.5, |_| 1.0);
    assert!(err < 0.15, "{err}");

    let plain = estimate_b_increment_genealogical(&s.increments(), None, &smoothing, &grid).unwrap();
    let inside: Vec<f64> = grid.iter().zip(plain.values()).filter(|(a, _)| **a <= 1.0).map(|p| (*p.1 - 1.0).abs()).collect();
    let dev = inside.iter().sum::<f64>() / inside.len() as f64;
    assert!(dev > 0.05, "{dev}");
}

#[test]
fn equal_weights_reduce_to_the_unweighted_estimator() {
    let a = exponential_draws(500, 1);
    let pairs: Vec<(f64, f64)> = a.iter().map(|v| (*v, 2.5)).collect();
    let smoothing = Smoothing::half_line(0.3);
    let grid = uniform_grid(0.0, 2.0, 21);
    let weighted = estimate_b_increment_population(&pairs, &smoothing, &grid).unwrap();
    let plain = estimate_b_increment_genealogical(&a, None, &smoothing, &grid).unwrap();
    for (u, v) in weighted.values().iter().zip(plain.values()) {
        assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
    }
}

/// Lineage size profile of the adder with unit increment rate and unit growth rate.
///
/// The division size is `sum_j 2^{-j} E_j` with `E_j` standard exponentials, a
/// hypoexponential law with rates `2^j`; the birth size is half of it and the time spent at
/// size `x` is `dx / x`, so the profile is `(H(2x) - H(x)) / x` with `H` the division CDF.
fn adder_lineage_profile(x: Vec<f64>) -> GridDensity {
    let rates: Vec<f64> = (0..48).map(|j| 2f64.powi(j)).collect();
    let coeffs: Vec<f64> = (0..rates.len())
        .map(|j| {
            rates
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != j)
                .map(|(_, r)| r / (r - rates[j]))
                .product()
        })
        .collect();
    let cdf = |t: f64| 1.0 - coeffs.iter().zip(&rates).map(|(c, r)| c * (-r * t).exp()).sum::<f64>();
    GridDensity::from_fn(x, |t| if t > 0.0 { ((cdf(2.0 * t) - cdf(t)) / t).max(0.0) } else { 0.0 })
        .unwrap()
        .normalized()
        .unwrap()
}

fn l1_against_exponential(f: &GridDensity, lo: f64, hi: f64) -> (f64, f64) {
    let (mut err, mut mass) = (0.0, 0.0);
    let dz = f.x[1] - f.x[0];
    for (z, v) in f.x.iter().zip(&f.values) {
        if (lo..=hi).contains(z) {
            err += (v - (-z).exp()).abs() * dz;
            mass += (-z).exp() * dz;
        }
    }
    (err, err / mass)
}

#[test]
fn increment_from_the_exact_size_marginal() {
    let profile = adder_lineage_profile(uniform_grid(0.0, 40.0, 1 << 14));
    let grid = uniform_grid(0.0, 1.5, 31);
    let (r, density) = estimate_b_increment_from_size_marginal(
        PointData::Grid(&profile),
        1.0,
        1,
        &Smoothing::new(KernelSpec::biweight(), 0.01),
        &MarginalDeconvolution::default(),
        &grid,
    )
    .unwrap();
    let (l1, _) = l1_against_exponential(&density, 0.0, f64::INFINITY);
    assert!(l1 < 0.05, "{l1}");
    assert!(r.spectral_cutoff.is_some());
    assert_admissible(&r);
}

#[test]
fn increment_from_sampled_sizes() {
    let profile = adder_lineage_profile(uniform_grid(0.0, 40.0, 1 << 14));
    let sizes = draw_from_density(&profile, 100_000, &mut RngStream::new(12, 0)).unwrap();
    let grid = uniform_grid(0.0, 1.5, 31);
    let (_, density) = estimate_b_increment_from_size_marginal(
        PointData::Sample(&sizes),
        1.0,
        1,
        &Smoothing::new(KernelSpec::biweight(), 0.05),
        &MarginalDeconvolution::default(),
        &grid,
    )
    .unwrap();
    let (_, relative) = l1_against_exponential(&density, 2f64.ln() - 0.75f64.ln(), 4f64.ln());
    assert!(relative < 0.3, "{relative}");
}

#[test]
fn regularization_keeps_mass_and_is_nearly_the_identity() {
    let x = uniform_grid(-6.0, 6.0, 1201);
    let f = GridDensity::from_fn(x, |t| (-t * t / 2.0).exp()).unwrap();
    let mut previous = f64::INFINITY;
    for h in [0.4, 0.2, 0.1] {
        let g = regularize_noisy_density(&f, &Smoothing::new(KernelSpec::biweight(), h)).unwrap();
        assert!((g.integral() - f.integral()).abs() < 1e-10);
        let err = g.values.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < previous / 3.0, "{h}: {err}");
        previous = err;
    }
}

fn ise(sample: &SortedSample, h: f64, grid: &[f64]) -> f64 {
    let est = sample.density_on(&KernelSpec::biweight(), h, grid, Some(0.0));
    let sq: Vec<f64> = grid.iter().zip(&est).map(|(a, v)| (v - (-a).exp()).powi(2)).collect();
    divrate::numerics::trapezoid(grid, &sq)
}

#[test]
fn cross_validated_bandwidth_is_close_to_the_oracle() {
    let kernel = KernelSpec::biweight();
    let quad = uniform_grid(0.0, 12.0, 1201);
    let candidates: Vec<f64> = (0..14).map(|j| 2f64.powf(-(j as f64) / 2.0)).collect();
    let mut cv_total = 0.0;
    let mut per_h = vec![0.0; candidates.len()];
    for seed in 0..20 {
        let data = exponential_draws(1000, 300 + seed);
        let sorted = SortedSample::new(&data).unwrap();
        let h = select_bandwidth(&data, &kernel, BandwidthMethod::CrossValidation { folds: 5 }, Some(0.0)).unwrap();
        cv_total += ise(&sorted, h, &quad);
        for (acc, &c) in per_h.iter_mut().zip(&candidates) {
            *acc += ise(&sorted, c, &quad);
        }
    }
    let oracle = per_h.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(cv_total <= 2.0 * oracle, "cv {cv_total} oracle {oracle}");
}

#[test]
fn rule_of_thumb_bandwidth_shrinks_with_n() {
    let kernel = KernelSpec::biweight();
    let small = exponential_draws(1000, 1);
    let large: Vec<f64> = (0..4).flat_map(|_| small.iter().cloned()).collect();
    let h1 = select_bandwidth(&small, &kernel, BandwidthMethod::RuleOfThumb, None).unwrap();
    let h4 = select_bandwidth(&large, &kernel, BandwidthMethod::RuleOfThumb, None).unwrap();
    assert!(h4 <= h1);
    let e = select_bandwidth(&[1.0; 100], &kernel, BandwidthMethod::RuleOfThumb, None).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}
