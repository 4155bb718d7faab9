use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use wave3d_core::analysis::*;
use wave3d_core::noise::{Basis, BrownianTableau, LocalizationParams, NoiseModel};
use wave3d_core::solver::*;
use wave3d_core::{Error, TorusGrid};

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        })
        .collect()
}

fn small_solver(coeffs: Coefficients) -> Solver {
    // dx = 1, dt = 1/16
    let grid = TorusGrid::new(8.0, 8, 1.0, 16).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let basis = Basis::full(&model);
    Solver::new(model, basis, coeffs, SolverOptions::default()).unwrap()
}

fn small_window(policy: PairPolicy) -> HolderWindow {
    HolderWindow {
        rho: 0.4,
        t0: 11.0 / 16.0,
        region: GridBox { origin: [1, 1, 1], shape: [6, 6, 6] },
        policy,
        time_stride: 1,
    }
}

fn random_samples(seed: u64, times: usize, shape: [usize; 3], dx: f64) -> WindowSamples {
    let len = times * shape.iter().product::<usize>();
    WindowSamples {
        times: (0..times).map(|i| 0.5 + 0.05 * i as f64).collect(),
        shape,
        dx,
        values: normals(seed, len),
        realization: None,
    }
}

#[test]
fn dyadic_pairs_track_the_exhaustive_supremum() {
    let s = small_solver(Coefficients::linear_noise(Nonlinearity::Constant { value: 1.0 }, Nonlinearity::Zero));
    for seed in 0..3 {
        let traj = s.solve_seeded(&DriveSpec::stochastic(), seed, &SaveGrid::all(s.grid())).unwrap();
        let dyadic = small_window(PairPolicy::default());
        let samples = WindowSamples::from_trajectory(&traj, &dyadic).unwrap();
        assert_eq!(samples.times.len(), 6);
        let fast = holder_norm(&samples, &dyadic).unwrap();
        let full = holder_norm(&samples, &small_window(PairPolicy::Exhaustive)).unwrap();
        assert!(fast <= full && fast >= 0.9 * full, "dyadic {fast} vs exhaustive {full}");
        // pure function of its inputs
        assert_eq!(fast.to_bits(), holder_norm(&samples, &dyadic).unwrap().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holder_norm_is_a_norm(seed in any::<u64>(), a in -4.0f64..4.0, rho in 0.05f64..0.95) {
        let w = HolderWindow { rho, ..small_window(PairPolicy::Exhaustive) };
        let f = random_samples(seed, 3, [3, 2, 2], 0.2);
        let g = random_samples(seed ^ 0x5555, 3, [3, 2, 2], 0.2);
        let nf = holder_norm(&f, &w).unwrap();
        let ng = holder_norm(&g, &w).unwrap();
        let scaled = WindowSamples { values: f.values.iter().map(|v| a * v).collect(), ..f.clone() };
        prop_assert!((holder_norm(&scaled, &w).unwrap() - a.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
        let sum = WindowSamples { values: f.values.iter().zip(&g.values).map(|(x, y)| x + y).collect(), ..f.clone() };
        prop_assert!(holder_norm(&sum, &w).unwrap() <= nf + ng + 1e-12);
    }

    #[test]
    fn holder_norm_grows_with_rho_below_unit_separation(seed in any::<u64>(), r1 in 0.05f64..0.9, gap in 0.0f64..0.09) {
        // every |dt| + |dx| <= 0.1 + 0.05 sqrt(3) < 1
        let s = random_samples(seed, 3, [2, 2, 2], 0.05);
        let lo = holder_norm(&s, &HolderWindow { rho: r1, ..small_window(PairPolicy::Exhaustive) }).unwrap();
        let hi = holder_norm(&s, &HolderWindow { rho: r1 + gap, ..small_window(PairPolicy::Exhaustive) }).unwrap();
        prop_assert!(lo <= hi);
    }
}

#[test]
fn normal_moments() {
    let xs = normals(11, 10_000);
    let m2 = lp_moment(&xs, 2.0, "N(0,1)").unwrap();
    assert!((m2.estimate - 1.0).abs() < 3.0 * m2.stderr, "{m2:?}");
    let m4 = lp_moment(&xs, 4.0, "N(0,1)").unwrap();
    assert!((m4.estimate - 3.0).abs() < 3.0 * m4.stderr, "{m4:?}");
    assert!(m2.stderr > 0.0 && m2.replicas == 10_000);
}

#[test]
fn ks_test_is_calibrated_and_sensitive() {
    let passes = (0..100u64)
        .filter(|&r| {
            let a = normals(2 * r, 1000);
            let b = normals(2 * r + 1, 1000);
            translation_invariance_test([0; 3], &a, &[[1, 0, 0]], &[b]).unwrap().rows[0].pass
        })
        .count();
    assert!(passes >= 95, "{passes} of 100");

    let a = normals(7, 1000);
    let b: Vec<f64> = normals(8, 1000).iter().map(|x| x + 0.5).collect();
    assert!(!translation_invariance_test([0; 3], &a, &[[1, 0, 0]], &[b]).unwrap().rows[0].pass);
    let same = translation_invariance_test([0; 3], &a, &[[0, 0, 0]], std::slice::from_ref(&a)).unwrap();
    assert_eq!(same.rows[0].statistic, 0.0);
    assert!(matches!(
        translation_invariance_test([0; 3], &a[..999], &[[0, 0, 0]], std::slice::from_ref(&a)),
        Err(Error::InsufficientData { .. })
    ));
}

#[test]
fn linear_fields_scale_with_exponent_one() {
    let grid = TorusGrid::new(3.2, 16, 1.0, 64).unwrap();
    let field: Vec<f64> = (0..grid.len()).map(|i| grid.position(i).iter().sum()).collect();
    let mut space = IncrementScaling::new(IncrementMode::Space, 2.0, (1..=8).collect(), grid.dx()).unwrap();
    space.add_field(&field, &grid, 1.0).unwrap();
    let fit = space.fit().unwrap();
    assert!((fit.exponent - 1.0).abs() < 0.02, "{fit:?}");

    let seps: Vec<usize> = vec![1, 2, 4, 8];
    let mut time = IncrementScaling::new(IncrementMode::Time, 3.0, seps.clone(), 0.01).unwrap();
    let at = |t: f64| vec![2.0 * t; 10];
    let reference = at(1.0);
    let lagged: Vec<Vec<f64>> = seps.iter().map(|&s| at(1.0 - 0.01 * s as f64)).collect();
    let views: Vec<&[f64]> = lagged.iter().map(Vec::as_slice).collect();
    time.add_series(&reference, &views, 1.0).unwrap();
    assert!((time.fit().unwrap().exponent - 1.0).abs() < 1e-9);

    assert!(matches!(IncrementScaling::new(IncrementMode::Space, 2.0, vec![0, 1], 0.1), Err(Error::Config { .. })));
}

#[test]
fn translation_sampler_rejects_unsafe_shifts() {
    let grid = TorusGrid::new(3.2, 16, 1.0, 64).unwrap();
    let region = GridBox { origin: [4, 4, 4], shape: [4, 4, 4] };
    assert!(TranslationSampler::new(&grid, &region, [5, 5, 5], vec![[2, 0, 0], [0, -1, 1]]).is_ok());
    assert!(matches!(TranslationSampler::new(&grid, &region, [5, 5, 5], vec![[3, 0, 0]]), Err(Error::Config { .. })));
}

#[test]
fn one_point_laws_are_translation_invariant() {
    let grid = TorusGrid::new(4.0, 8, 0.5, 8).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let basis = Basis::full(&model);
    let coeffs = Coefficients::linear_noise(Nonlinearity::tanh_preset(), Nonlinearity::Zero);
    let s = Solver::new(model, basis, coeffs, SolverOptions::default()).unwrap();
    let region = GridBox { origin: [1, 1, 1], shape: [5, 5, 5] };
    let mut sampler =
        TranslationSampler::new(&grid, &region, [2, 2, 2], vec![[1, 0, 0], [0, 2, 1], [2, 2, 2]]).unwrap();
    for seed in 0..2000 {
        let traj = s.solve_seeded(&DriveSpec::stochastic(), 70_000 + seed, &SaveGrid::endpoints(&grid)).unwrap();
        sampler.record(&traj.final_state().u);
    }
    let report = sampler.report().unwrap();
    for row in &report.rows {
        assert!(row.pass, "{row:?}");
    }
}

#[test]
fn identical_equations_have_zero_distance() {
    // no smoothed-driver term: X_n and X solve the same equation
    let s = small_solver(Coefficients::linear_noise(Nonlinearity::tanh_preset(), Nonlinearity::Zero));
    let levels = [2u32, 3, 4];
    let window = HolderWindow { time_stride: 2, ..small_window(PairPolicy::default()) };
    let mut ens = CoupledEnsemble::new(levels.to_vec()).unwrap();
    for seed in 0..MIN_REPLICAS as u64 {
        let tab = s.sample_tableau(&DriveSpec::wong_zakai(4), seed).unwrap();
        let rep = wz_replica(&s, &levels, &window, &tab, &LocalizationParams::default()).unwrap();
        ens.push(rep.distances, rep.indicators).unwrap();
    }
    let report = wz_convergence(&ens, 2.0, None).unwrap();
    assert!(report.rows.iter().all(|r| r.localized == 0.0 && r.unlocalized == 0.0 && r.exceedance == 0.0));
    assert!(report.moment_slope.is_none());
}

#[test]
fn uncoupled_inputs_are_rejected() {
    let s = small_solver(Coefficients::wong_zakai(Nonlinearity::Constant { value: 1.0 }, Nonlinearity::Zero));
    let window = small_window(PairPolicy::default());
    let a = s.solve_seeded(&DriveSpec::stochastic(), 1, &SaveGrid::all(s.grid())).unwrap();
    let b = s.solve_seeded(&DriveSpec::stochastic(), 2, &SaveGrid::all(s.grid())).unwrap();
    let sa = WindowSamples::from_trajectory(&a, &window).unwrap();
    let sb = WindowSamples::from_trajectory(&b, &window).unwrap();
    assert!(matches!(coupled_distance(&sa, &sb, &window), Err(Error::Config { .. })));
    assert_eq!(coupled_distance(&sa, &sa, &window).unwrap(), 0.0);
}

#[test]
fn wong_zakai_distances_shrink_with_level() {
    // rank-6 noise: the finest level smooths every direction
    let grid = TorusGrid::new(8.0, 8, 1.0, 64).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let basis = Basis::truncated(&model, 6).unwrap();
    let coeffs = Coefficients::wong_zakai(Nonlinearity::tanh_preset(), Nonlinearity::Zero);
    let s = Solver::new(model, basis, coeffs, SolverOptions::default()).unwrap();
    let levels = [4u32, 5, 6];
    let window = HolderWindow { time_stride: 4, ..small_window(PairPolicy::default()) };
    let mut ens = CoupledEnsemble::new(levels.to_vec()).unwrap();
    for seed in 0..40 {
        let tab = s.sample_tableau(&DriveSpec::wong_zakai(6), seed).unwrap();
        let rep = wz_replica(&s, &levels, &window, &tab, &LocalizationParams::default()).unwrap();
        ens.push(rep.distances, rep.indicators).unwrap();
    }
    let report = wz_convergence(&ens, 2.0, None).unwrap();
    let m = report.localized_moments();
    assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
}

#[test]
fn source_free_lag_discrepancy_vanishes() {
    let s = small_solver(Coefficients::default());
    let mut acc = LagDiscrepancy::new(vec![2, 3, 4], vec![0.5, 0.75, 1.0], 2.0).unwrap();
    let tab = BrownianTableau::sample(4, s.basis().len(), 1.0, 5).unwrap();
    lag_replica(&s, &tab, &mut acc).unwrap();
    let rep = acc.report().unwrap();
    assert!(rep.rows.iter().all(|r| r.sup == 0.0));
    assert!(rep.slope.is_none());
}

#[test]
fn lag_discrepancy_decays_with_level() {
    let s = small_solver(Coefficients::linear_noise(Nonlinearity::Constant { value: 1.0 }, Nonlinearity::Zero));
    let mut acc = LagDiscrepancy::new(vec![2, 3, 4], vec![0.5, 0.75, 1.0], 2.0).unwrap();
    for seed in 0..20 {
        let tab = s.sample_tableau(&DriveSpec::stochastic(), seed).unwrap();
        lag_replica(&s, &tab, &mut acc).unwrap();
    }
    let rep = acc.report().unwrap();
    assert!(rep.slope.unwrap() < -0.5, "{rep:?}");
}

#[test]
fn silent_support_problem_has_zero_distances() {
    let grid = TorusGrid::new(8.0, 8, 1.0, 16).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let basis = Basis::truncated(&model, 7).unwrap();
    let h = Control::zero(7, 16).unwrap();
    let setup = SupportSetup::new(
        model,
        basis,
        Nonlinearity::Zero,
        Nonlinearity::Zero,
        h,
        small_window(PairPolicy::default()),
        SolverOptions::default(),
    )
    .unwrap();
    let tab = setup.coupled.sample_tableau(&DriveSpec::wong_zakai(4), 9).unwrap();
    let rep = support_replica(&setup, &[2, 3, 4], &tab).unwrap();
    assert!(rep.smoothed.iter().chain(&rep.shifted).all(|&d| d == 0.0));
}

#[test]
fn linear_skeleton_matches_quadrature() {
    let grid = TorusGrid::new(2.56, 16, 1.0, 128).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let basis = Basis::truncated(&model, 7).unwrap();
    let coeffs = Coefficients::skeleton(Nonlinearity::Constant { value: 1.0 }, Nonlinearity::Zero);
    let s = Solver::new(model.clone(), basis.clone(), coeffs, SolverOptions::default()).unwrap();
    for j in [0usize, 1, 5] {
        let amp = 0.8;
        let h = Control::from_fn(7, &grid, |d, _| if d == j { amp } else { 0.0 }).unwrap();
        let traj = s.solve(&DriveSpec::controlled(h), None, &SaveGrid::dyadic(&grid, 2, &[]).unwrap()).unwrap();
        let el = basis.element(j).unwrap();
        for st in traj.states() {
            for idx in [0, 17, 1000, 4095] {
                let exact = skeleton_mode_oracle(el, &model, amp, st.time, grid.position(idx));
                assert!((st.u[idx] - exact).abs() < 1e-6, "j={j} t={} x={idx}: {} vs {exact}", st.time, st.u[idx]);
            }
        }
    }
}

fn random_band_field(model: &NoiseModel, seed: u64) -> Vec<Complex64> {
    let grid = model.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::default(); grid.len()];
    for idx in 0..grid.len() {
        let k = grid.mode(idx);
        let conj = grid.conjugate_index(idx);
        if k == [0, 0, 0] || k.iter().any(|c| c.abs() > 2) || conj < idx {
            continue;
        }
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let c = if conj == idx { Complex64::new(re, 0.0) } else { Complex64::new(re, im) };
        spec[idx] = c;
        spec[conj] = c.conj();
    }
    spec
}

#[test]
fn ewald_sum_is_independent_of_the_split() {
    let grid = TorusGrid::new(2.0, 8, 1.0, 8).unwrap();
    let model = NoiseModel::new(grid, 1.0).unwrap();
    let field = random_band_field(&model, 3);
    let base = EwaldParams { refine: 8, ..EwaldParams::default() };
    let a = ewald_hnorm_sq(&field, &model, &EwaldParams { eta_side: 3.0, ..base }).unwrap();
    let b = ewald_hnorm_sq(&field, &model, &EwaldParams { eta_side: 5.0, ..base }).unwrap();
    assert!((a - b).abs() < 1e-8 * a, "{a} vs {b}");
}

#[test]
fn spectral_norm_matches_physical_double_integral() {
    for beta in [0.5, 1.0, 1.5] {
        let grid = TorusGrid::new(2.0, 8, 1.0, 8).unwrap();
        let model = NoiseModel::new(grid, beta).unwrap();
        for seed in 0..3 {
            let field = random_band_field(&model, 100 + seed);
            let spectral = wave3d_core::noise::hnorm_sq(&field, &model).unwrap();
            let oracle = ewald_hnorm_sq(&field, &model, &EwaldParams::default()).unwrap();
            assert!((spectral - oracle).abs() < 0.05 * oracle, "beta={beta}: {spectral} vs {oracle}");
        }
    }
}
