//! One function per subcommand. Replicas run on the worker pool and come
//! back in replica order, so every reduction is independent of the pool size.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::Value;
use statrs::distribution::{ContinuousCDF, Normal};

use wave3d_core::analysis::{
    lag_replica, loglog_fit, median, skeleton_mode_oracle, support_replica, wz_convergence, wz_replica,
    CoupledEnsemble, EwaldOracle, EwaldParams, IncrementMode, IncrementScaling, LagDiscrepancy, SupportSetup,
    TranslationSampler, MIN_TRANSLATION_REPLICAS,
};
use wave3d_core::fft::Fft3;
use wave3d_core::green::{
    gauss_legendre, green_hnorm_sq, power_law_window, resolved_band, sphere_convolve, SphereQuadrature,
};
use wave3d_core::noise::{hnorm_sq, Basis, BrownianTableau, NoiseModel};
use wave3d_core::solver::{
    picard_reference, step_of, Coefficients, Control, DriveSpec, Nonlinearity, SaveGrid, Solver,
};
use wave3d_core::{Error, Result, TorusGrid};

use crate::config::ExperimentConfig;
use crate::output::{flag, num, Check, Outcome, Table};
use crate::seed::seed_stream;

/// Disjoint index ranges of the seed stream, one per ensemble.
mod stream {
    pub const REPLICAS: u64 = 0;
    pub const LAG: u64 = 1 << 40;
    pub const COVARIANCE: u64 = 2 << 40;
    pub const FIELDS: u64 = 3 << 40;
    pub const LOCALIZATION: u64 = 4 << 40;
    pub const GEOMETRY: u64 = 5 << 40;
    pub const ORACLE: u64 = 6 << 40;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    NoiseCheck,
    GreenCheck,
    Simulate,
    WzConverge,
    Regularity,
    Support,
    Oracle,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::NoiseCheck => "noise-check",
            Subcommand::GreenCheck => "green-check",
            Subcommand::Simulate => "simulate",
            Subcommand::WzConverge => "wz-converge",
            Subcommand::Regularity => "regularity",
            Subcommand::Support => "support",
            Subcommand::Oracle => "oracle",
        }
    }
}

pub struct Context {
    pub config: ExperimentConfig,
    pub workers: usize,
    pool: ThreadPool,
}

impl Context {
    pub fn new(config: ExperimentConfig, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        Ok(Self { config, workers, pool })
    }

    pub fn seed(&self, offset: u64, index: usize) -> u64 {
        seed_stream(self.config.noise.seed, offset + index as u64)
    }

    pub fn seeds(&self, offset: u64, count: usize) -> Vec<u64> {
        (0..count).map(|i| self.seed(offset, i)).collect()
    }

    /// `f(index, seed)` for every replica; results in replica order, the
    /// first failing replica's error otherwise.
    fn replicate<T, F>(&self, offset: u64, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, u64) -> Result<T> + Sync + Send,
    {
        let results: Vec<Result<T>> =
            self.pool.install(|| (0..count).into_par_iter().map(|i| f(i, self.seed(offset, i))).collect());
        results.into_iter().collect()
    }
}

pub fn run(sub: Subcommand, ctx: &Context) -> Result<Outcome> {
    match sub {
        Subcommand::NoiseCheck => noise_check(ctx),
        Subcommand::GreenCheck => green_check(ctx),
        Subcommand::Simulate => simulate(ctx),
        Subcommand::WzConverge => wz_converge(ctx),
        Subcommand::Regularity => regularity(ctx),
        Subcommand::Support => support(ctx),
        Subcommand::Oracle => oracle(ctx),
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn shifted(x: usize, d: i64, n: usize) -> usize {
    (x as i64 + d).rem_euclid(n as i64) as usize
}

fn solver_for(
    cfg: &ExperimentConfig,
    model: &NoiseModel,
    truncation: Option<usize>,
    coeffs: Coefficients,
) -> Result<Solver> {
    Solver::new(model.clone(), cfg.basis(model, truncation)?, coeffs, cfg.solver.options())
}

fn noise_check(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let nc = &cfg.noise_check;
    let mut out = Outcome::default();

    // covariance of one noise increment at fixed lags
    let model = cfg.model()?;
    let grid = *model.grid();
    let basis = Basis::full(&model);
    let fft = Fft3::new(grid.points());
    let level = grid.step_level().max(1);
    let cells = 1usize << level;
    let tableaux = nc.covariance_samples.div_ceil(cells);
    let n = grid.points();
    let per_tableau = ctx.replicate(stream::COVARIANCE, tableaux, |i, seed| {
        let tab = BrownianTableau::sample(level, basis.len(), grid.horizon(), seed)?;
        let take = cells.min(nc.covariance_samples - i * cells);
        Ok((0..take)
            .map(|cell| {
                let field = fft.inverse_real(&basis.synthesize(&tab.column(cell)));
                nc.lags
                    .iter()
                    .map(|lag| {
                        let mut acc = 0.0;
                        for (idx, &x) in field.iter().enumerate() {
                            let [a, b, c] = grid.unflat(idx);
                            acc += x * field
                                [grid.flat(shifted(a, lag[0], n), shifted(b, lag[1], n), shifted(c, lag[2], n))];
                        }
                        acc / grid.len() as f64
                    })
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>())
    })?;
    out.seeds.extend(ctx.seeds(stream::COVARIANCE, tableaux));
    let samples: Vec<&Vec<f64>> = per_tableau.iter().flatten().collect();
    let dt = grid.horizon() / cells as f64;
    let mut table =
        Table::new("covariance", &["lag_x", "lag_y", "lag_z", "empirical", "stderr", "expected", "z", "pass"]);
    let mut all = true;
    for (l, lag) in nc.lags.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s[l]).collect();
        let (mean, se) = mean_stderr(&xs);
        let expected = dt * model.discrete_kernel(*lag);
        let z = (mean - expected) / se;
        let pass = z.abs() <= nc.sigmas;
        all &= pass;
        table.push(vec![
            lag[0].to_string(),
            lag[1].to_string(),
            lag[2].to_string(),
            num(mean),
            num(se),
            num(expected),
            num(z),
            flag(pass),
        ]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "covariance_fidelity",
        all,
        format!("{} samples, every lag within {} standard errors", samples.len(), nc.sigmas),
    ));

    // spectral norm against the physical-space double sum
    let ewald_grid = TorusGrid::new(cfg.grid.side, nc.ewald_points, grid.horizon(), grid.steps())?;
    let ewald_model = NoiseModel::new(ewald_grid, cfg.noise.beta)?;
    let ewald = EwaldOracle::new(&ewald_model, &EwaldParams::default())?;
    let band = nc.ewald_band;
    let rows = ctx.replicate(stream::FIELDS, nc.ewald_fields, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spectral = vec![Complex64::default(); ewald_grid.len()];
        for idx in 0..ewald_grid.len() {
            let k = ewald_grid.mode(idx);
            let conj = ewald_grid.conjugate_index(idx);
            if k == [0, 0, 0] || k.iter().any(|c| c.abs() > band) || conj < idx {
                continue;
            }
            let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            spectral[idx] = c;
            spectral[conj] = c.conj();
        }
        let spectral_value = hnorm_sq(&spectral, &ewald_model)?;
        let oracle = ewald.hnorm_sq(&spectral)?;
        Ok((spectral_value, oracle))
    })?;
    out.seeds.extend(ctx.seeds(stream::FIELDS, nc.ewald_fields));
    let mut table = Table::new("hnorm", &["field", "spectral", "oracle", "relative_error", "pass"]);
    let mut worst: f64 = 0.0;
    for (f, (s, o)) in rows.iter().enumerate() {
        let rel = (s - o).abs() / o.abs();
        worst = worst.max(rel);
        table.push(vec![f.to_string(), num(*s), num(*o), num(rel), flag(rel <= nc.ewald_tolerance)]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "hnorm_identity",
        worst <= nc.ewald_tolerance,
        format!(
            "{} fields on N = {}, worst relative error {worst:.4} (tolerance {})",
            rows.len(),
            nc.ewald_points,
            nc.ewald_tolerance
        ),
    ));
    out.summary.insert("hnorm_worst_relative_error".into(), Value::from(worst));

    // localization probabilities on nested coarsenings of one tableau
    let params = cfg.localization()?;
    let levels = &nc.localization_levels;
    let top = levels.iter().copied().max().ok_or_else(|| Error::config("noise_check.localization_levels", "empty"))?;
    let horizon = grid.horizon();
    let hits = ctx.replicate(stream::LOCALIZATION, nc.localization_tableaux, |_, seed| {
        let tab = BrownianTableau::sample(top, top as usize, horizon, seed)?;
        levels
            .iter()
            .map(|&n| {
                let coarse = tab.coarsen(n)?;
                wave3d_core::noise::localization_indicator(&coarse, horizon, &params)
            })
            .collect::<Result<Vec<bool>>>()
    })?;
    out.seeds.extend(ctx.seeds(stream::LOCALIZATION, nc.localization_tableaux));
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let count = hits.len() as f64;
    let mut table = Table::new("localization", &["level", "hits", "tableaux", "empirical", "stderr", "closed_form"]);
    let mut probabilities = Vec::new();
    for (li, &n) in levels.iter().enumerate() {
        let k = hits.iter().filter(|h| h[li]).count();
        let p = k as f64 / count;
        let se = (p * (1.0 - p) / count).sqrt();
        // each of the n 2^n examined increments has variance T 2^-n
        let nf = f64::from(n);
        let single = 1.0 - 2.0 * normal.cdf(-params.alpha() * (nf / horizon).sqrt());
        let closed = single.powf(nf * 2f64.powi(n as i32));
        probabilities.push(p);
        table.push(vec![n.to_string(), k.to_string(), hits.len().to_string(), num(p), num(se), num(closed)]);
    }
    out.tables.push(table);
    let monotone = probabilities.windows(2).all(|w| w[1] >= w[0]);
    out.checks.push(Check::new(
        "localization_monotone",
        monotone,
        format!("P(L_n) over levels {levels:?}: {probabilities:.4?}"),
    ));
    let last = *probabilities.last().expect("nonempty levels");
    out.checks.push(Check::new(
        "localization_target",
        last >= nc.localization_target,
        format!("P(L_{top}) = {last:.4}, target {}", nc.localization_target),
    ));
    Ok(out)
}

/// Composite Gauss–Legendre rule on `[a, b]`.
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

fn green_check(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let gc = &cfg.green_check;
    let grid = cfg.grid()?;
    let mut out = Outcome::default();
    let quad = SphereQuadrature::product(gc.quadrature[0], gc.quadrature[1])
        .map_err(|e| Error::config("green_check.quadrature", e.to_string()))?;

    let seed = ctx.seed(stream::GEOMETRY, 0);
    out.seeds.push(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = grid.side();
    let point = |rng: &mut ChaCha8Rng| -> [f64; 3] { [0, 1, 2].map(|_| rng.gen_range(0.0..side)) };

    let mut table = Table::new("mass", &["t", "x", "y", "z", "value", "abs_error", "pass"]);
    let mut worst: f64 = 0.0;
    for i in 0..gc.mass_pairs {
        let t = grid.horizon() * (i + 1) as f64 / gc.mass_pairs as f64;
        let x = point(&mut rng);
        let value = sphere_convolve(t, x, |_| 1.0, &quad)?;
        let err = (value - t).abs();
        worst = worst.max(err);
        table.push(vec![num(t), num(x[0]), num(x[1]), num(x[2]), num(value), num(err), flag(err < gc.mass_tolerance)]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "mass_identity",
        worst < gc.mass_tolerance,
        format!("{} pairs, worst absolute error {worst:.3e}", gc.mass_pairs),
    ));

    // [G(t) * psi(. - z)](x + z) = [G(t) * psi](x)
    let mut table = Table::new("equivariance", &["t", "shift_x", "shift_y", "shift_z", "base", "shifted", "abs_error"]);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let t = grid.horizon() * (i + 1) as f64 / 5.0;
        let (x, z, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let psi = |y: [f64; 3]| (-((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2) + (y[2] - c[2]).powi(2))).exp();
        let base = sphere_convolve(t, x, psi, &quad)?;
        let moved = sphere_convolve(
            t,
            [x[0] + z[0], x[1] + z[1], x[2] + z[2]],
            |y| psi([y[0] - z[0], y[1] - z[1], y[2] - z[2]]),
            &quad,
        )?;
        let err = (base - moved).abs();
        worst = worst.max(err);
        table.push(vec![num(t), num(z[0]), num(z[1]), num(z[2]), num(base), num(moved), num(err)]);
    }
    out.tables.push(table);
    out.checks.push(Check::new("equivariance", worst < 1e-12, format!("worst absolute error {worst:.3e}")));

    let spectral_grid = |beta: f64| -> Result<NoiseModel> {
        NoiseModel::new(TorusGrid::new(gc.side, gc.points, grid.horizon(), grid.steps())?, beta)
    };
    let mut table = Table::new("power_law", &["beta", "t_lo", "t_hi", "slope", "target", "abs_error", "pass"]);
    let mut all = true;
    for &beta in &gc.betas {
        let model = spectral_grid(beta)?;
        let (t0, t1) = power_law_window(model.grid(), beta)?;
        let ts: Vec<f64> = (0..=20).map(|i| t0 * (t1 / t0).powf(f64::from(i) / 20.0)).collect();
        let gs = ts.iter().map(|&t| green_hnorm_sq(t, &model)).collect::<Result<Vec<_>>>()?;
        let fit = loglog_fit(&ts, &gs)?;
        let err = (fit.slope - (2.0 - beta)).abs();
        let pass = err <= gc.slope_tolerance;
        all &= pass;
        table.push(vec![num(beta), num(t0), num(t1), num(fit.slope), num(2.0 - beta), num(err), flag(pass)]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "power_law",
        all,
        format!("decade slopes within {} of 2 - beta on N = {}", gc.slope_tolerance, gc.points),
    ));

    let model = spectral_grid(1.0)?;
    let mut table = Table::new("ratio", &["t", "ratio", "target", "relative_error", "pass"]);
    let mut all = true;
    for &t in &gc.ratio_times {
        let ratio = green_hnorm_sq(2.0 * t, &model)? / green_hnorm_sq(t, &model)?;
        let rel = (ratio - 2.0).abs() / 2.0;
        let pass = rel <= gc.ratio_tolerance;
        all &= pass;
        table.push(vec![num(t), num(ratio), num(2.0), num(rel), flag(pass)]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "ratio_example",
        all,
        format!("pointwise G(2t)/G(t) at beta = 1 within {} of 2", gc.ratio_tolerance),
    ));

    let (lo, hi) = resolved_band(model.grid());
    let t = gc.radial_time;
    let grid_sum = green_hnorm_sq(t, &model)?;
    let radial =
        composite(|r: f64| 4.0 * PI * (2.0 * PI * t * r).sin().powi(2) / (4.0 * PI * PI * r * r), lo, hi, 4000);
    let rel = (grid_sum - radial).abs() / radial;
    let mut table = Table::new("radial", &["t", "grid_sum", "radial", "relative_error", "pass"]);
    table.push(vec![num(t), num(grid_sum), num(radial), num(rel), flag(rel <= gc.radial_tolerance)]);
    out.tables.push(table);
    out.checks.push(Check::new(
        "radial_oracle",
        rel <= gc.radial_tolerance,
        format!("grid sum against the radial integral over the resolved band: {rel:.4}"),
    ));
    Ok(out)
}

fn constant_value(n: &Nonlinearity) -> Option<f64> {
    match n {
        Nonlinearity::Zero => Some(0.0),
        Nonlinearity::Constant { value } => Some(*value),
        _ => None,
    }
}

/// `sum_j mu_j int_0^t (sin(w_j s) / w_j)^2 ds` over the basis directions.
fn isometry(basis: &Basis, grid: &TorusGrid, t: f64) -> f64 {
    basis
        .elements()
        .iter()
        .map(|e| {
            let w = 2.0 * PI * grid.wavenumber(e.index);
            e.weight * (0.5 * t - (2.0 * w * t).sin() / (4.0 * w)) / (w * w)
        })
        .sum()
}

fn simulate(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let sc = &cfg.simulate;
    let model = cfg.model()?;
    let grid = *model.grid();
    let coeffs = cfg.solver.coefficients()?;
    let solver = solver_for(cfg, &model, cfg.noise.truncation, coeffs)?;
    let steps = sc.times.iter().map(|&t| step_of(&grid, t)).collect::<Result<Vec<_>>>()?;
    let save = SaveGrid::from_steps(&grid, steps.iter().copied())?;
    let drive = DriveSpec::stochastic();
    let mut out = Outcome::default();

    let sums = ctx.replicate(stream::REPLICAS, cfg.replicas, |_, seed| {
        let tab = solver.sample_tableau(&drive, seed)?;
        let mut values = vec![0.0; steps.len()];
        solver.run(&drive, Some(&tab), &save, |s| {
            for (i, &t) in sc.times.iter().enumerate() {
                if (t - s.time).abs() < 1e-9 {
                    values[i] = s.u.iter().map(|x| x * x).sum::<f64>() / s.u.len() as f64;
                }
            }
            Ok(())
        })?;
        Ok(values)
    })?;
    out.seeds.extend(ctx.seeds(stream::REPLICAS, cfg.replicas));

    // the isometry applies when the noise enters with a constant coefficient and nothing else acts
    let sigma = match (constant_value(&coeffs.noise), constant_value(&coeffs.smoothed), coeffs.drift.is_zero()) {
        (Some(a), Some(b), true) => Some(a + b),
        _ => None,
    };
    let mut table = Table::new("variance", &["t", "empirical", "stderr", "isometry", "z", "pass"]);
    let mut all = true;
    for (i, &t) in sc.times.iter().enumerate() {
        let xs: Vec<f64> = sums.iter().map(|v| v[i]).collect();
        let (mean, se) = mean_stderr(&xs);
        match sigma {
            Some(s) => {
                let expected = s * s * isometry(solver.basis(), &grid, t);
                let z = (mean - expected) / se;
                let pass = z.abs() <= sc.sigmas;
                all &= pass;
                table.push(vec![num(t), num(mean), num(se), num(expected), num(z), flag(pass)]);
            }
            None => table.push(vec![num(t), num(mean), num(se), String::new(), String::new(), String::new()]),
        }
    }
    out.tables.push(table);
    if sigma.is_some() {
        out.checks.push(Check::new(
            "isometry",
            all,
            format!("{} replicas, every time within {} standard errors", cfg.replicas, sc.sigmas),
        ));
    }

    if sc.export {
        let traj = solver.solve_seeded(&drive, ctx.seed(stream::REPLICAS, 0), &SaveGrid::all(&grid))?;
        let stem = cfg.out.join(format!("trajectory_seed{}_beta{}", cfg.noise.seed, cfg.noise.beta));
        std::fs::create_dir_all(&cfg.out)?;
        let (data, header) = traj.with_fingerprint(cfg.fingerprint()).export(&stem)?;
        out.artifacts.push(data);
        out.artifacts.push(header);
    }
    Ok(out)
}

fn wz_converge(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let model = cfg.model()?;
    let coeffs = cfg.solver.coefficients()?;
    let solver = solver_for(cfg, &model, cfg.noise.truncation, coeffs)?;
    let params = cfg.localization()?;
    let levels = cfg.levels.clone();
    let top = *levels.last().expect("validated");
    let mut out = Outcome::default();

    let replicas = ctx.replicate(stream::REPLICAS, cfg.replicas, |_, seed| {
        let tab = solver.sample_tableau(&DriveSpec::wong_zakai(top), seed)?;
        wz_replica(&solver, &levels, &cfg.window, &tab, &params)
    })?;
    out.seeds.extend(ctx.seeds(stream::REPLICAS, cfg.replicas));
    let mut ens = CoupledEnsemble::new(levels.clone())?;
    for r in replicas {
        ens.push(r.distances, r.indicators)?;
    }
    let report = wz_convergence(&ens, cfg.wz.p, cfg.wz.lambda)?;
    let mut table = Table::new(
        "levels",
        &[
            "level",
            "localized",
            "localized_stderr",
            "unlocalized",
            "unlocalized_stderr",
            "exceedance",
            "localized_fraction",
            "median",
        ],
    );
    for r in &report.rows {
        table.push(vec![
            r.level.to_string(),
            num(r.localized),
            num(r.localized_stderr),
            num(r.unlocalized),
            num(r.unlocalized_stderr),
            num(r.exceedance),
            num(r.localized_fraction),
            num(r.median),
        ]);
    }
    out.tables.push(table);
    let moments = report.localized_moments();
    let (first, last) = (moments[0], *moments.last().expect("nonempty"));
    let ratio = last / first;
    let exceed = report.rows.last().expect("nonempty").exceedance;
    out.checks.push(Check::new("moments_decreasing", strictly_decreasing(&moments), sci(&moments)));
    out.checks.push(Check::new(
        "moment_ratio",
        ratio <= cfg.wz.ratio_target,
        format!("final/initial = {ratio:.4}, target {}", cfg.wz.ratio_target),
    ));
    out.checks.push(Check::new(
        "exceedance",
        exceed < cfg.wz.probability_target,
        format!(
            "P(distance > {:.4e}) = {exceed:.4} at level {top}, target {}",
            report.lambda, cfg.wz.probability_target
        ),
    ));
    out.summary.insert("lambda".into(), Value::from(report.lambda));
    out.summary.insert("moment_slope".into(), report.moment_slope.map_or(Value::Null, Value::from));
    out.summary.insert("exceedance_slope".into(), report.exceedance_slope.map_or(Value::Null, Value::from));

    let lag = &cfg.wz.lag;
    if lag.replicas > 0 {
        let lag_solver = solver_for(cfg, &model, lag.truncation, coeffs)?;
        let template = LagDiscrepancy::new(levels.clone(), lag.times.clone(), lag.p)?;
        let parts = ctx.replicate(stream::LAG, lag.replicas, |_, seed| {
            let mut acc = template.clone();
            let tab = lag_solver.sample_tableau(&DriveSpec::stochastic(), seed)?;
            lag_replica(&lag_solver, &tab, &mut acc)?;
            Ok(acc)
        })?;
        out.seeds.extend(ctx.seeds(stream::LAG, lag.replicas));
        let mut acc = template;
        for p in &parts {
            acc.merge(p)?;
        }
        let rep = acc.report()?;
        let mut header = vec!["level".to_string()];
        header.extend(rep.times.iter().map(|t| format!("norm_t{t}")));
        header.push("sup".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut table = Table::new("lag", &header);
        for r in &rep.rows {
            let mut row = vec![r.level.to_string()];
            row.extend(r.norms.iter().map(|x| num(*x)));
            row.push(num(r.sup));
            table.push(row);
        }
        out.tables.push(table);
        let target = -(3.0 - cfg.noise.beta) / 2.0;
        let slope = rep.slope;
        out.checks.push(Check::new(
            "lag_slope",
            slope.is_some_and(|s| (s - target).abs() <= lag.tolerance),
            format!("log2 slope {slope:?}, target {target} +/- {}", lag.tolerance),
        ));
        out.summary.insert("lag_slope".into(), slope.map_or(Value::Null, Value::from));
    }
    Ok(out)
}

fn regularity(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let rc = &cfg.regularity;
    let mut out = Outcome::default();
    let coeffs = cfg.solver.coefficients()?;
    let drive = DriveSpec::stochastic();
    let mut exponents = Table::new("exponents", &["beta", "exponent", "theory", "r_squared"]);
    let mut increments = Table::new("increments", &["beta", "separation", "moment"]);
    let mut translation =
        Table::new("translation", &["beta", "shift_x", "shift_y", "shift_z", "statistic", "critical", "pass"]);
    let mut values = Vec::new();
    let mut translation_pass = true;
    let do_translation = cfg.replicas >= MIN_TRANSLATION_REPLICAS;

    for &beta in &rc.betas {
        let model = NoiseModel::new(cfg.grid()?, beta)?;
        let grid = *model.grid();
        // Hölder regularity is a property of the full noise
        let solver = solver_for(cfg, &model, None, coeffs)?;
        let template = IncrementScaling::new(IncrementMode::Space, rc.p, rc.separations.clone(), grid.dx())?;
        let mut sampler =
            TranslationSampler::new(&grid, &cfg.window.region, rc.translation_point, rc.translation_shifts.clone())?;
        let fields = ctx.replicate(stream::REPLICAS, cfg.replicas, |_, seed| {
            let traj = solver.solve_seeded(&drive, seed, &SaveGrid::endpoints(&grid))?;
            let u = traj.final_state().u.clone();
            let mut acc = template.clone();
            acc.add_field(&u, &grid, 1.0)?;
            Ok((acc, u))
        })?;
        let mut acc = template;
        for (a, u) in &fields {
            acc.merge(a)?;
            sampler.record(u);
        }
        let fit = acc.fit()?;
        values.push((beta, fit.exponent));
        exponents.push(vec![num(beta), num(fit.exponent), num((2.0 - beta) / 2.0), num(fit.fit.r_squared)]);
        for (s, m) in fit.separations.iter().zip(&fit.moments) {
            increments.push(vec![num(beta), num(*s), num(*m)]);
        }
        if do_translation {
            for r in sampler.report()?.rows {
                translation_pass &= r.pass;
                translation.push(vec![
                    num(beta),
                    r.shift[0].to_string(),
                    r.shift[1].to_string(),
                    r.shift[2].to_string(),
                    num(r.statistic),
                    num(r.critical),
                    flag(r.pass),
                ]);
            }
        }
    }
    out.seeds.extend(ctx.seeds(stream::REPLICAS, cfg.replicas));
    out.tables.push(exponents);
    out.tables.push(increments);

    if let Some(&(_, e)) = values.iter().find(|(b, _)| *b == 1.0) {
        out.checks.push(Check::new(
            "exponent_band",
            e >= rc.band[0] && e <= rc.band[1],
            format!("exponent {e:.4} at beta = 1, band {:?}", rc.band),
        ));
    }
    let mut by_beta = values.clone();
    by_beta.sort_by(|a, b| a.0.total_cmp(&b.0));
    let exps: Vec<f64> = by_beta.iter().map(|v| v.1).collect();
    out.checks.push(Check::new(
        "exponent_ordering",
        strictly_decreasing(&exps),
        format!("exponents by increasing beta {exps:.4?}"),
    ));
    if exps.len() >= 2 {
        let gap = exps[0] - exps[exps.len() - 1];
        out.checks.push(Check::new(
            "exponent_gap",
            gap >= rc.min_gap,
            format!("gap {gap:.4} between extreme betas, required {}", rc.min_gap),
        ));
    }
    if do_translation {
        out.tables.push(translation);
        out.checks.push(Check::new("translation_invariance", translation_pass, "two-sample KS at 1% per shift"));
    }
    Ok(out)
}

fn support(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let sc = &cfg.support;
    let model = cfg.model()?;
    let grid = *model.grid();
    let basis = cfg.basis(&model, cfg.noise.truncation)?;
    let levels = cfg.levels.clone();
    let top = *levels.last().expect("validated");
    let dim = basis.len();
    if sc.control_direction >= dim {
        return Err(Error::config("support.control_direction", format!("must be below the truncation {dim}")));
    }
    let constant = |amp: f64| {
        let dir = sc.control_direction;
        Control::from_fn(dim, &grid, move |j, _| if j == dir { amp } else { 0.0 })
    };
    let mut out = Outcome::default();
    let mut table = Table::new("distances", &["sigma", "level", "median_smoothed", "median_shifted"]);
    for (si, sigma) in sc.sigmas.iter().enumerate() {
        let setup = SupportSetup::new(
            model.clone(),
            basis.clone(),
            *sigma,
            cfg.solver.drift,
            constant(sc.control_amplitude)?,
            cfg.window,
            cfg.solver.options(),
        )?;
        let reps = ctx.replicate(stream::REPLICAS, cfg.replicas, |_, seed| {
            let tab = setup.coupled.sample_tableau(&DriveSpec::wong_zakai(top), seed)?;
            support_replica(&setup, &levels, &tab)
        })?;
        let mut smoothed = Vec::new();
        let mut shifted = Vec::new();
        for (li, &n) in levels.iter().enumerate() {
            let a = median(&reps.iter().map(|r| r.smoothed[li]).collect::<Vec<_>>())?;
            let b = median(&reps.iter().map(|r| r.shifted[li]).collect::<Vec<_>>())?;
            smoothed.push(a);
            shifted.push(b);
            table.push(vec![si.to_string(), n.to_string(), num(a), num(b)]);
        }
        out.checks.push(Check::new(
            &format!("smoothed_medians_sigma{si}"),
            strictly_decreasing(&smoothed),
            sci(&smoothed),
        ));
        out.checks.push(Check::new(
            &format!("shifted_medians_sigma{si}"),
            strictly_decreasing(&shifted),
            sci(&shifted),
        ));
    }
    out.seeds.extend(ctx.seeds(stream::REPLICAS, cfg.replicas));
    out.tables.push(table);

    // linear skeleton under a single direction against its closed form
    let skeleton = Solver::new(
        model.clone(),
        basis.clone(),
        Coefficients::skeleton(Nonlinearity::Constant { value: 1.0 }, Nonlinearity::Zero),
        cfg.solver.options(),
    )?;
    let traj =
        skeleton.solve(&DriveSpec::controlled(constant(sc.oracle_amplitude)?), None, &SaveGrid::endpoints(&grid))?;
    let u = &traj.final_state().u;
    let element = basis.element(sc.control_direction)?;
    let worst = (0..grid.len())
        .map(|idx| {
            (u[idx] - skeleton_mode_oracle(element, &model, sc.oracle_amplitude, grid.horizon(), grid.position(idx)))
                .abs()
        })
        .fold(0.0, f64::max);
    let mut table = Table::new("skeleton_oracle", &["direction", "amplitude", "t", "max_abs_error", "pass"]);
    table.push(vec![
        sc.control_direction.to_string(),
        num(sc.oracle_amplitude),
        num(grid.horizon()),
        num(worst),
        flag(worst <= sc.oracle_tolerance),
    ]);
    out.tables.push(table);
    out.checks.push(Check::new(
        "skeleton_oracle",
        worst <= sc.oracle_tolerance,
        format!("max abs error {worst:.3e}, tolerance {}", sc.oracle_tolerance),
    ));
    Ok(out)
}

fn oracle(ctx: &Context) -> Result<Outcome> {
    let cfg = &ctx.config;
    let oc = &cfg.oracle;
    let grid = TorusGrid::new(cfg.grid.side, oc.points, cfg.grid.horizon, oc.steps)
        .map_err(|e| Error::config("oracle", e.to_string()))?;
    let model = NoiseModel::new(grid, cfg.noise.beta)?;
    let solver = Solver::new(
        model.clone(),
        Basis::full(&model),
        Coefficients::linear_noise(oc.sigma, oc.drift),
        cfg.solver.options(),
    )?;
    let drive = DriveSpec::stochastic();
    let rows = ctx.replicate(stream::ORACLE, oc.seeds, |_, seed| {
        let tab = solver.sample_tableau(&drive, seed)?;
        let stepped = solver.solve(&drive, Some(&tab), &SaveGrid::all(&grid))?;
        let picard = picard_reference(&solver, &drive, Some(&tab), oc.iterations)?;
        let (mut diff, mut norm) = (0.0, 0.0);
        for (a, b) in picard.trajectory.states().iter().zip(stepped.states()) {
            for (x, y) in a.u.iter().zip(&b.u) {
                diff += (x - y) * (x - y);
                norm += y * y;
            }
        }
        Ok((seed, picard.distances.len(), picard.converged, (diff / norm).sqrt()))
    })?;
    let mut out = Outcome::default();
    out.seeds.extend(ctx.seeds(stream::ORACLE, oc.seeds));
    let mut table = Table::new("picard", &["replica", "seed", "iterations", "converged", "relative_rms", "pass"]);
    let mut worst: f64 = 0.0;
    for (i, (seed, iters, conv, rel)) in rows.iter().enumerate() {
        worst = worst.max(*rel);
        table.push(vec![
            i.to_string(),
            seed.to_string(),
            iters.to_string(),
            flag(*conv),
            num(*rel),
            flag(*rel <= oc.tolerance),
        ]);
    }
    out.tables.push(table);
    out.checks.push(Check::new(
        "picard_agreement",
        worst <= oc.tolerance && rows.iter().all(|r| r.2),
        format!("{} seeds on N = {}, {} steps, worst relative rms {worst:.3e}", oc.seeds, oc.points, oc.steps),
    ));
    Ok(out)
}
