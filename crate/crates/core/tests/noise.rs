use num_complex::Complex64;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use wave3d_core::fft::Fft3;
use wave3d_core::noise::*;
use wave3d_core::TorusGrid;

fn model(n: usize, side: f64, beta: f64) -> NoiseModel {
    NoiseModel::new(TorusGrid::new(side, n, 1.0, 8).unwrap(), beta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_on_spanned_fields(
        amps in prop::collection::vec(-3.0f64..3.0, 1..63),
        beta in 0.1f64..1.9,
        side in 0.5f64..4.0,
    ) {
        let m = model(4, side, beta);
        let basis = Basis::full(&m);
        let mut spectral = vec![Complex64::default(); m.grid().len()];
        for (j, &c) in amps.iter().enumerate() {
            for (s, e) in spectral.iter_mut().zip(basis.element_transform(j).unwrap()) {
                *s += c * e;
            }
        }
        let norm = hnorm_sq(&spectral, &m).unwrap();
        let direct: f64 = amps.iter().map(|c| c * c).sum();
        let coeffs = basis.coefficients(&spectral);
        let projected: f64 = coeffs.iter().map(|c| c * c).sum();
        prop_assert!((norm - direct).abs() <= 1e-8 * direct.max(1e-300));
        prop_assert!((norm - projected).abs() <= 1e-8 * direct.max(1e-300));
        for (j, &c) in amps.iter().enumerate() {
            prop_assert!((coeffs[j] - c).abs() < 1e-9);
        }
    }

    #[test]
    fn localization_fails_forever_once_failed(seed in any::<u64>(), level in 1u32..7, alpha in 1.2f64..2.5) {
        let tab = BrownianTableau::sample(level, level as usize, 1.0, seed).unwrap();
        let params = LocalizationParams::new(alpha).unwrap();
        let mut failed = false;
        for i in 0..=64 {
            let ok = localization_indicator(&tab, f64::from(i) / 64.0, &params).unwrap();
            prop_assert!(!(failed && ok));
            failed |= !ok;
        }
    }
}

#[test]
fn tableau_cell_variance() {
    // 12_500 tableaux x 8 cells = 10^5 increments at n = 3, T = 1
    let mut xs = Vec::with_capacity(100_000);
    for seed in 0..12_500u64 {
        xs.extend_from_slice(BrownianTableau::sample(3, 1, 1.0, seed).unwrap().increments());
    }
    let n = xs.len() as f64;
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let mean = sq.iter().sum::<f64>() / n;
    let se = (sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 0.125).abs() < 3.0 * se, "variance {mean} (se {se})");
    let m1 = xs.iter().sum::<f64>() / n;
    assert!(m1.abs() < 3.0 * (0.125 / n).sqrt());
}

#[test]
fn smoothed_driver_norm_is_bounded_on_localization_event() {
    let params = LocalizationParams::default();
    for horizon in [1.0f64, 0.5] {
        for level in 2..=7u32 {
            let n = f64::from(level);
            let bound = params.alpha() * n.powf(1.5) * 2f64.powf(n / 2.0) / horizon.sqrt();
            let mut seen = 0;
            for seed in 0..300 {
                let tab = BrownianTableau::sample(level, level as usize, horizon, seed).unwrap();
                for i in 0..=32 {
                    let t = horizon * f64::from(i) / 32.0;
                    if localization_indicator(&tab, t, &params).unwrap() {
                        seen += 1;
                        assert!(wn_hnorm(&tab, t).unwrap() <= bound);
                    }
                }
            }
            assert!(seen > 0);
        }
    }
}

/// `P(L_n(T)) = (1 - 2 Phi(-alpha sqrt n))^{n (2^n - 1)}` for `T = 1`.
fn localization_probability(level: u32, alpha: f64) -> f64 {
    let n = f64::from(level);
    let tail = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-alpha * n.sqrt());
    (1.0 - tail).powf(n * (2f64.powi(level as i32) - 1.0))
}

#[test]
fn localization_probability_matches_closed_form() {
    let params = LocalizationParams::default();
    let reps = 4000;
    let mut last = 0.0;
    for level in 3..=8u32 {
        let hits = (0..reps)
            .filter(|&s| {
                let tab = BrownianTableau::sample(level, level as usize, 1.0, 40_000 + s as u64).unwrap();
                localization_indicator(&tab, 1.0, &params).unwrap()
            })
            .count();
        let p = hits as f64 / reps as f64;
        let exact = localization_probability(level, params.alpha());
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((p - exact).abs() < 3.5 * se, "n={level}: {p} vs {exact}");
        assert!(exact > last);
        last = exact;
    }
}

/// Empirical covariance of one noise increment against `dt` times the
/// discrete kernel at ten lags.
#[test]
fn noise_increment_covariance() {
    let m = NoiseModel::new(TorusGrid::new(2.0, 16, 1.0, 64).unwrap(), 1.0).unwrap();
    let grid = *m.grid();
    let basis = Basis::full(&m);
    let fft = Fft3::new(16);
    let dt = grid.dt();
    let lags: [[i64; 3]; 10] =
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 2], [1, 1, 0], [2, 1, 0], [3, 0, 1], [2, 2, 2], [4, 0, 0], [8, 8, 8]];
    let samples = 10_000;
    let mut per_sample = vec![Vec::with_capacity(samples); lags.len()];
    let tab_rows = basis.len();
    for s in 0..samples / 64 + 1 {
        let tab = BrownianTableau::sample(6, tab_rows, 1.0, 900 + s as u64).unwrap();
        for cell in 0..64 {
            if per_sample[0].len() == samples {
                break;
            }
            let field = fft.inverse_real(&basis.synthesize(&tab.column(cell)));
            for (l, lag) in lags.iter().enumerate() {
                let mut acc = 0.0;
                for idx in 0..grid.len() {
                    let [a, b, c] = grid.unflat(idx);
                    let shift = |x: usize, d: i64| (x as i64 + d).rem_euclid(16) as usize;
                    acc += field[idx] * field[grid.flat(shift(a, lag[0]), shift(b, lag[1]), shift(c, lag[2]))];
                }
                per_sample[l].push(acc / grid.len() as f64);
            }
        }
    }
    for (l, lag) in lags.iter().enumerate() {
        let xs = &per_sample[l];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let expected = dt * m.discrete_kernel(*lag);
        assert!((mean - expected).abs() < 3.0 * se, "lag {lag:?}: {mean} vs {expected} (se {se})");
    }
}
