use std::f64::consts::PI;

use wave3d_core::analysis::loglog_fit;
use wave3d_core::green::*;
use wave3d_core::noise::NoiseModel;
use wave3d_core::TorusGrid;

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(8);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            x.iter().zip(&w).map(|(xi, wi)| 0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0))).sum::<f64>()
        })
        .sum()
}

/// `4 pi int_lo^hi r^2 r^{beta-3} sin^2(2 pi t r) / (2 pi r)^2 dr`.
fn radial_oracle(t: f64, beta: f64, lo: f64, hi: f64) -> f64 {
    let f = |r: f64| 4.0 * PI * r.powf(beta - 1.0) * (2.0 * PI * t * r).sin().powi(2) / (4.0 * PI * PI * r * r);
    composite(f, lo, hi, 4000)
}

fn model(n: usize, side: f64, beta: f64) -> NoiseModel {
    NoiseModel::new(TorusGrid::new(side, n, 1.0, 8).unwrap(), beta).unwrap()
}

#[test]
fn whole_space_constant_matches_the_integral() {
    assert!((whole_space_constant(1.0) - PI).abs() < 1e-12);
    for beta in [0.5, 1.0, 1.5] {
        // (1/pi) int_0^inf x^{beta-3} sin^2(2 pi x) dx, split at 1 with x = y^2 near the origin
        let near = composite(|y: f64| 2.0 * y.powf(2.0 * beta - 5.0) * (2.0 * PI * y * y).sin().powi(2), 0.0, 1.0, 200);
        let x_max = 400.0;
        let far = composite(|x: f64| x.powf(beta - 3.0) * (2.0 * PI * x).sin().powi(2), 1.0, x_max, 3200);
        let tail = x_max.powf(beta - 2.0) / (2.0 * (2.0 - beta));
        let numeric = (near + far + tail) / PI;
        let c = whole_space_constant(beta);
        assert!((numeric - c).abs() < 1e-4 * c, "beta={beta}: {numeric} vs {c}");
    }
}

#[test]
fn grid_sum_matches_radial_quadrature_over_the_band() {
    let m = model(64, 4.0, 1.0);
    let (lo, hi) = resolved_band(m.grid());
    let t = 0.2;
    let grid_sum = green_hnorm_sq(t, &m).unwrap();
    let oracle = radial_oracle(t, 1.0, lo, hi);
    assert!((grid_sum - oracle).abs() < 0.05 * oracle, "{grid_sum} vs {oracle}");
}

#[test]
fn power_law_holds_inside_the_window() {
    for beta in [0.5, 1.0, 1.5] {
        let m = model(64, 4.0, beta);
        let (t0, t1) = power_law_window(m.grid(), beta).unwrap();
        assert!((t1 / t0 - 10.0).abs() < 1e-12);
        let ts: Vec<f64> = (0..=20).map(|i| t0 * 10f64.powf(f64::from(i) / 20.0)).collect();
        let gs: Vec<f64> = ts.iter().map(|&t| green_hnorm_sq(t, &m).unwrap()).collect();
        let fit = loglog_fit(&ts, &gs).unwrap();
        assert!((fit.slope - (2.0 - beta)).abs() < 0.05, "beta={beta}: slope {}", fit.slope);
    }
}

#[test]
fn window_minimises_the_worst_truncation_error() {
    let grid = TorusGrid::new(4.0, 64, 1.0, 8).unwrap();
    for beta in [0.5, 1.0, 1.5] {
        let (t0, t1) = power_law_window(&grid, beta).unwrap();
        let worst = |a: f64| truncation_error(a, beta, &grid).max(truncation_error(10.0 * a, beta, &grid));
        for shift in [0.5, 0.8, 1.25, 2.0] {
            assert!(worst(t0) <= worst(shift * t0));
        }
        assert!(worst(t0) < 0.35);
        assert!(truncation_error(10.0 * t1, beta, &grid) > truncation_error(t1, beta, &grid));
    }
}
