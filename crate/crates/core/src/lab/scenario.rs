//! Per-scenario Monte Carlo engines.
//!
//! Every scenario couples the approximating solver (driven by the
//! step/residual pair) with the limit solver (driven by the step path and
//! the empirical correction driver built from the same noise), measures the
//! pathwise discrepancy at interpolation nodes, and emits an
//! independent-copy terminal-law distance as the weak-convergence probe.
//! States are compared through their pre-jump values: the step path jumps
//! one cell early by construction, so post-jump states at a shared node
//! differ by one driver increment even in the limit.

use rayon::prelude::*;

use crate::approx::{forward_step_split, SplitPaths};
use crate::drivers::{
    replicate_rng, simulate_markov_driver, simulate_mollified_noise, simulate_qwiener,
    MarkovDriverSpec, MollifiedNoiseSpec, QWienerSpec, StreamKind,
};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hilbert::{hs_norm, HSTensor, HVector};
use crate::path::SamplePath;
use crate::sde::{
    correction_driver, solve_limit, solve_pathwise, CoefficientField, ConstantField,
    LinearField, MixingField, TrigField,
};
use crate::tensor::{
    scalar_covariation, tensor_covariation, tensor_integral_left, total_variation, CellRule,
    TensorPath,
};

use super::config::{DriverKind, FieldKind, KernelKind, ScenarioConfig, ScenarioKind};
use super::report::{
    flatten, ConvergenceReport, CovarianceCheck, LevelStats, MomentBoundRow,
    ScalarIntegralCheck, TensorMeans, UtRow,
};
use super::stats::{
    estimate_rate, ks_statistic, mean_se, partial_rate, quantiles_50_90_99, tensor_mean_se,
};

pub fn run_scenario(config: &ScenarioConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let report = match config.scenario {
        ScenarioKind::ScalarWz | ScenarioKind::HilbertInterpolation => {
            run_interpolation_family(config)?
        }
        ScenarioKind::MollifiedNoise => run_mollified(config)?,
        ScenarioKind::MarkovDriver => run_markov(config)?,
    };
    if let Some(dir) = &config.out_dir {
        report.write_artifacts(dir)?;
    }
    Ok(report)
}

fn build_field(config: &ScenarioConfig, driver_dim: usize) -> Box<dyn CoefficientField + Send> {
    let scale = config.field_scale;
    match config.field {
        FieldKind::Constant => {
            let h = HVector::new(vec![scale / (driver_dim as f64).sqrt(); driver_dim])
                .expect("finite");
            Box::new(ConstantField::new(vec![h]))
        }
        FieldKind::Linear => {
            let dir = HVector::new(vec![1.0 / (driver_dim as f64).sqrt(); driver_dim])
                .expect("finite");
            Box::new(LinearField::new(dir, scale))
        }
        FieldKind::Trig => Box::new(TrigField::new(driver_dim, scale)),
        FieldKind::Mixing => Box::new(MixingField::new(2, driver_dim, scale)),
    }
}

fn initial_state(field: &dyn CoefficientField, x0: f64) -> HVector {
    HVector::new(vec![x0; field.state_dim()]).expect("finite")
}

fn probe(state: &HVector) -> f64 {
    let k = state.dim() as f64;
    state.coeffs().iter().sum::<f64>() / k.sqrt()
}

/// Sup over interpolation nodes of the pre-jump state discrepancy, plus the
/// terminal discrepancy.
fn sup_pre_jump_error(
    a: &SamplePath<HVector>,
    b: &SamplePath<HVector>,
    stride: usize,
) -> f64 {
    let mut sup = a.terminal().sub(b.terminal()).norm();
    let mut m = 0;
    while m < a.len() {
        sup = sup.max(a.left_limit(m).sub(b.left_limit(m)).norm());
        m += stride;
    }
    sup
}

/// Keeps every `factor`-th node of a continuous path.
fn coarsen(path: &SamplePath<HVector>, factor: usize) -> Result<SamplePath<HVector>> {
    if factor == 1 {
        return Ok(path.clone());
    }
    let steps = path.grid().steps();
    debug_assert_eq!(steps % factor, 0);
    let grid = TimeGrid::new(path.grid().horizon(), steps / factor)?;
    let values = (0..=steps / factor)
        .map(|m| path.value(m * factor).clone())
        .collect();
    SamplePath::continuous(grid, values)
}

struct InterpolationPieces {
    split: SplitPaths,
    residual_integral: TensorPath,
    cross_covariation: TensorPath,
    correction: TensorPath,
    step_bracket: TensorPath,
}

fn interpolation_pieces(g_level: &SamplePath<HVector>, n: usize) -> Result<InterpolationPieces> {
    let split = forward_step_split(g_level, n)?;
    let residual_integral =
        tensor_integral_left(&split.residual, &split.residual, CellRule::ExactLinear)?;
    let cross_covariation = tensor_covariation(&split.step, &split.residual)?;
    let correction = correction_driver(&residual_integral, &cross_covariation)?;
    let step_bracket = tensor_covariation(&split.step, &split.step)?;
    Ok(InterpolationPieces {
        split,
        residual_integral,
        cross_covariation,
        correction,
        step_bracket,
    })
}

struct InterpRep {
    sup_err: Vec<f64>,
    aborted: Vec<bool>,
    h_term: Vec<HSTensor>,
    k_term: Vec<HSTensor>,
    theta_term: Vec<HSTensor>,
    bracket_term: Vec<HSTensor>,
    tv_interp: Vec<f64>,
    tv_resint: Vec<f64>,
    scalar_bracket: Vec<f64>,
    terminal_probe: f64,
    half_sq_residual: f64,
    gap: f64,
}

fn run_interpolation_family(config: &ScenarioConfig) -> Result<ConvergenceReport> {
    let levels = config.n_grid.clone();
    let n_max = *levels.last().expect("validated non-empty");
    for n in &levels {
        if !n_max.is_multiple_of(*n) {
            return Err(Error::config(
                "n_grid",
                format!("level {n} must divide the largest level {n_max} (shared noise)"),
            ));
        }
    }
    let cells_max = (config.horizon * n_max as f64).round() as usize;
    let finest_steps = cells_max * config.refine;
    let finest_grid = TimeGrid::new(config.horizon, finest_steps)?;
    let qspec = QWienerSpec::new(config.q_eigenvalues.clone())?;
    let field = build_field(config, config.dim);
    let x0 = initial_state(field.as_ref(), config.x0);
    let scalar_extras = config.scenario == ScenarioKind::ScalarWz && config.dim == 1;

    let deterministic_direction = HVector::new(
        config
            .q_eigenvalues
            .iter()
            .map(|l| l.sqrt())
            .collect::<Vec<_>>(),
    )?;

    let simulate_driver = |kind: StreamKind, rep: usize| -> Result<SamplePath<HVector>> {
        match config.driver {
            DriverKind::QWiener => {
                let mut rng = replicate_rng(config.seed, kind, 0, rep);
                simulate_qwiener(&qspec, &finest_grid, &mut rng)
            }
            DriverKind::Linear => {
                let values = (0..finest_grid.len())
                    .map(|m| deterministic_direction.scale(finest_grid.node(m)))
                    .collect();
                SamplePath::continuous(finest_grid, values)
            }
        }
    };

    let reps: Vec<InterpRep> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<InterpRep> {
            let g_finest = simulate_driver(StreamKind::Driver, rep)?;
            let mut out = InterpRep {
                sup_err: Vec::with_capacity(levels.len()),
                aborted: Vec::with_capacity(levels.len()),
                h_term: Vec::with_capacity(levels.len()),
                k_term: Vec::with_capacity(levels.len()),
                theta_term: Vec::with_capacity(levels.len()),
                bracket_term: Vec::with_capacity(levels.len()),
                tv_interp: Vec::with_capacity(levels.len()),
                tv_resint: Vec::with_capacity(levels.len()),
                scalar_bracket: Vec::with_capacity(levels.len()),
                terminal_probe: f64::NAN,
                half_sq_residual: f64::NAN,
                gap: f64::NAN,
            };
            for &n in &levels {
                let g_level = coarsen(&g_finest, n_max / n)?;
                let pieces = interpolation_pieces(&g_level, n)?;
                out.h_term.push(pieces.residual_integral.terminal().clone());
                out.k_term.push(pieces.cross_covariation.terminal().clone());
                out.theta_term.push(pieces.correction.terminal().clone());
                out.bracket_term.push(pieces.step_bracket.terminal().clone());
                out.tv_interp
                    .push(*total_variation(&pieces.split.interpolant).terminal());
                out.tv_resint
                    .push(*total_variation(&pieces.residual_integral).terminal());
                out.scalar_bracket.push(
                    *scalar_covariation(&pieces.split.step, &pieces.split.step)?.terminal(),
                );

                let approx = solve_pathwise(
                    field.as_ref(),
                    &pieces.split.step,
                    &pieces.split.residual,
                    &x0,
                    config.substeps,
                );
                let limit = solve_limit(
                    field.as_ref(),
                    &pieces.split.step,
                    &pieces.correction,
                    &x0,
                );
                match (approx, limit) {
                    (Ok(a), Ok(l)) => {
                        out.sup_err
                            .push(sup_pre_jump_error(&a, &l, config.refine));
                        out.aborted.push(false);
                        if n == n_max {
                            out.terminal_probe = probe(a.terminal());
                        }
                    }
                    (Err(Error::BlowUp { .. }), _) | (_, Err(Error::BlowUp { .. })) => {
                        out.sup_err.push(f64::NAN);
                        out.aborted.push(true);
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }

                if scalar_extras && n == n_max {
                    let u = &pieces.split.interpolant;
                    let interp_integral =
                        tensor_integral_left(u, u, CellRule::ExactLinear)?;
                    let closed = (u.terminal().coeffs()[0].powi(2)
                        - u.value(0).coeffs()[0].powi(2))
                        / 2.0;
                    let got = interp_integral.terminal().entry(0, 0);
                    out.half_sq_residual = (got - closed).abs() / closed.abs().max(1.0);
                    let ito =
                        tensor_integral_left(&g_finest, &g_finest, CellRule::LeftPoint)?;
                    out.gap = got - ito.terminal().entry(0, 0);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    // independent copies of the limit solution at the final level
    let independent_terminals: Vec<f64> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let g = simulate_driver(StreamKind::IndependentCopy, rep)?;
            let pieces = interpolation_pieces(&g, n_max)?;
            match solve_limit(field.as_ref(), &pieces.split.step, &pieces.correction, &x0) {
                Ok(path) => Ok(probe(path.terminal())),
                Err(Error::BlowUp { .. }) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    // aggregation
    let mut level_rows = Vec::new();
    let mut tensor_rows = Vec::new();
    let mut ut_rows = Vec::new();
    let mut failures = Vec::new();
    let mut flags = Vec::new();
    let mut means_so_far: Vec<usize> = Vec::new();
    let mut errs_so_far: Vec<f64> = Vec::new();
    let mut identity_residual = 0.0_f64;
    let mut level_means: Vec<(f64, f64)> = Vec::new();

    for (li, &n) in levels.iter().enumerate() {
        let errs: Vec<f64> = reps
            .iter()
            .filter(|r| !r.aborted[li])
            .map(|r| r.sup_err[li])
            .collect();
        let aborted = config.replicates - errs.len();
        if aborted * 100 > config.replicates {
            failures.push(format!(
                "level {n}: {aborted} of {} replicates aborted (>1%)",
                config.replicates
            ));
        }
        let (mean, se) = mean_se(&errs);
        level_means.push((mean, se));
        means_so_far.push(n);
        errs_so_far.push(mean);
        level_rows.push(LevelStats {
            level: n,
            mean_sup_error: mean,
            stderr: se,
            rate_cum: partial_rate(&means_so_far, &errs_so_far),
            aborted,
        });

        let h: Vec<HSTensor> = reps.iter().map(|r| r.h_term[li].clone()).collect();
        let k: Vec<HSTensor> = reps.iter().map(|r| r.k_term[li].clone()).collect();
        let theta: Vec<HSTensor> = reps.iter().map(|r| r.theta_term[li].clone()).collect();
        let bracket: Vec<HSTensor> = reps.iter().map(|r| r.bracket_term[li].clone()).collect();
        let (h_mean, h_se) = tensor_mean_se(&h);
        let (k_mean, k_se) = tensor_mean_se(&k);
        let (theta_mean, theta_se) = tensor_mean_se(&theta);
        let (bracket_mean, _) = tensor_mean_se(&bracket);

        // exact identity of the splitting: correction = step bracket / 2
        let gap = theta_mean.sub(&bracket_mean.scale(0.5));
        let scale = hs_norm(&bracket_mean).max(1.0);
        identity_residual = identity_residual.max(hs_norm(&gap) / scale);

        tensor_rows.push(TensorMeans {
            level: n,
            dim: config.dim,
            residual_integral: flatten(&h_mean),
            residual_integral_se: flatten(&h_se),
            cross_covariation: flatten(&k_mean),
            cross_covariation_se: flatten(&k_se),
            correction: flatten(&theta_mean),
            correction_se: flatten(&theta_se),
            step_bracket: flatten(&bracket_mean),
        });

        let tv_u: Vec<f64> = reps.iter().map(|r| r.tv_interp[li]).collect();
        let tv_h: Vec<f64> = reps.iter().map(|r| r.tv_resint[li]).collect();
        let sb: Vec<f64> = reps.iter().map(|r| r.scalar_bracket[li]).collect();
        ut_rows.push(UtRow {
            level: n,
            interpolant_variation: quantiles_50_90_99(&tv_u),
            residual_integral_variation: quantiles_50_90_99(&tv_h),
            step_bracket: quantiles_50_90_99(&sb),
        });
    }

    if identity_residual > 1e-10 {
        failures.push(format!(
            "correction identity residual {identity_residual:e} exceeds 1e-10"
        ));
    }
    monotonicity_flags(&levels, &level_means, &mut flags);

    let terminals: Vec<f64> = reps
        .iter()
        .map(|r| r.terminal_probe)
        .filter(|t| t.is_finite())
        .collect();
    let (terminal_mean, terminal_stderr) = mean_se(&terminals);
    let independent: Vec<f64> = independent_terminals
        .into_iter()
        .filter(|t| t.is_finite())
        .collect();
    let ks = if terminals.is_empty() || independent.is_empty() {
        None
    } else {
        Some(ks_statistic(&terminals, &independent))
    };
    distribution_flag(&flags.clone(), ks, &mut flags);

    let scalar_integral_check = if scalar_extras {
        let residuals: Vec<f64> = reps.iter().map(|r| r.half_sq_residual).collect();
        let gaps: Vec<f64> = reps.iter().map(|r| r.gap).collect();
        let (mean_gap, gap_se) = mean_se(&gaps);
        Some(ScalarIntegralCheck {
            level: n_max,
            max_half_square_residual: residuals.iter().fold(0.0_f64, |m, r| m.max(*r)),
            mean_gap,
            gap_stderr: gap_se,
            expected_gap: qspec.trace() * config.horizon / 2.0,
        })
    } else {
        None
    };

    let rate = estimate_rate(&levels, &errs_so_far).ok();

    Ok(ConvergenceReport {
        scenario: config.scenario.name().to_string(),
        config: config.clone(),
        levels: level_rows,
        rate,
        terminal_law_distance: ks,
        terminal_mean,
        terminal_stderr,
        correction_identity_residual: identity_residual,
        tensor_means: tensor_rows,
        ut: ut_rows,
        moment_bounds: Vec::new(),
        covariance_check: None,
        scalar_integral_check,
        flags,
        failures,
    })
}

struct MarkovRep {
    sup_err: Vec<f64>,
    aborted: Vec<bool>,
    terminal_probe: f64,
    martingale_terminal: HVector,
}

fn run_markov(config: &ScenarioConfig) -> Result<ConvergenceReport> {
    let levels = config.n_grid.clone();
    let n_max = *levels.last().expect("non-empty");
    let states = config.markov_transition.len();
    let embed: Vec<HVector> = (0..states).map(|u| HVector::basis(states, u)).collect();
    let spec = MarkovDriverSpec::new(
        config.markov_transition.clone(),
        embed,
        HSTensor::identity(states),
    )?;
    let field = build_field(config, states);
    let x0 = initial_state(field.as_ref(), config.x0);

    let reps: Vec<MarkovRep> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<MarkovRep> {
            let mut out = MarkovRep {
                sup_err: Vec::with_capacity(levels.len()),
                aborted: Vec::with_capacity(levels.len()),
                terminal_probe: f64::NAN,
                martingale_terminal: HVector::zeros(states),
            };
            for (li, &n) in levels.iter().enumerate() {
                let mut rng = replicate_rng(config.seed, StreamKind::Driver, li, rep);
                let (y, z) = simulate_markov_driver(&spec, n, config.horizon, &mut rng)?;
                let h = tensor_integral_left(&z, &z, CellRule::LeftPoint)?;
                let k = tensor_covariation(&y, &z)?;
                let theta = correction_driver(&h, &k)?;
                let approx = solve_pathwise(field.as_ref(), &y, &z, &x0, config.substeps);
                let limit = solve_limit(field.as_ref(), &y, &theta, &x0);
                match (approx, limit) {
                    (Ok(a), Ok(l)) => {
                        out.sup_err.push(sup_pre_jump_error(&a, &l, 1));
                        out.aborted.push(false);
                        if n == n_max {
                            out.terminal_probe = probe(a.terminal());
                            out.martingale_terminal = y.terminal().clone();
                        }
                    }
                    (Err(Error::BlowUp { .. }), _) | (_, Err(Error::BlowUp { .. })) => {
                        out.sup_err.push(f64::NAN);
                        out.aborted.push(true);
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let independent_terminals: Vec<f64> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = replicate_rng(
                config.seed,
                StreamKind::IndependentCopy,
                levels.len() - 1,
                rep,
            );
            let (y, z) = simulate_markov_driver(&spec, n_max, config.horizon, &mut rng)?;
            let h = tensor_integral_left(&z, &z, CellRule::LeftPoint)?;
            let k = tensor_covariation(&y, &z)?;
            let theta = correction_driver(&h, &k)?;
            match solve_limit(field.as_ref(), &y, &theta, &x0) {
                Ok(path) => Ok(probe(path.terminal())),
                Err(Error::BlowUp { .. }) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut level_rows = Vec::new();
    let mut failures = Vec::new();
    let mut flags = Vec::new();
    let mut ns = Vec::new();
    let mut errs = Vec::new();
    let mut level_means = Vec::new();
    for (li, &n) in levels.iter().enumerate() {
        let es: Vec<f64> = reps
            .iter()
            .filter(|r| !r.aborted[li])
            .map(|r| r.sup_err[li])
            .collect();
        let aborted = config.replicates - es.len();
        if aborted * 100 > config.replicates {
            failures.push(format!(
                "level {n}: {aborted} of {} replicates aborted (>1%)",
                config.replicates
            ));
        }
        let (mean, se) = mean_se(&es);
        level_means.push((mean, se));
        ns.push(n);
        errs.push(mean);
        level_rows.push(LevelStats {
            level: n,
            mean_sup_error: mean,
            stderr: se,
            rate_cum: partial_rate(&ns, &errs),
            aborted,
        });
    }
    monotonicity_flags(&levels, &level_means, &mut flags);

    // exact-covariance check at the final level: E[Y_i(T) Y_j(T)] = T C_ij
    let d = states;
    let mut empirical = vec![0.0; d * d];
    let mut stderr = vec![0.0; d * d];
    let mut exact = vec![0.0; d * d];
    let mut within = true;
    for i in 0..d {
        for j in 0..d {
            let products: Vec<f64> = reps
                .iter()
                .map(|r| {
                    r.martingale_terminal.coeffs()[i] * r.martingale_terminal.coeffs()[j]
                })
                .collect();
            let (m, s) = mean_se(&products);
            let c = markov_limit_covariance_entry(&spec, i, j)? * config.horizon;
            empirical[i * d + j] = m;
            stderr[i * d + j] = s;
            exact[i * d + j] = c;
            if (m - c).abs() > 3.0 * s {
                within = false;
            }
        }
    }
    if !within {
        failures.push("martingale covariance outside 3 SE of the exact double sum".into());
    }

    let terminals: Vec<f64> = reps
        .iter()
        .map(|r| r.terminal_probe)
        .filter(|t| t.is_finite())
        .collect();
    let (terminal_mean, terminal_stderr) = mean_se(&terminals);
    let independent: Vec<f64> = independent_terminals
        .into_iter()
        .filter(|t| t.is_finite())
        .collect();
    let ks = (!terminals.is_empty() && !independent.is_empty())
        .then(|| ks_statistic(&terminals, &independent));
    distribution_flag(&flags.clone(), ks, &mut flags);

    Ok(ConvergenceReport {
        scenario: config.scenario.name().to_string(),
        config: config.clone(),
        levels: level_rows,
        rate: estimate_rate(&ns, &errs).ok(),
        terminal_law_distance: ks,
        terminal_mean,
        terminal_stderr,
        correction_identity_residual: f64::NAN,
        tensor_means: Vec::new(),
        ut: Vec::new(),
        moment_bounds: Vec::new(),
        covariance_check: Some(CovarianceCheck {
            level: n_max,
            dim: d,
            empirical,
            stderr,
            exact,
            within_three_se: within,
        }),
        scalar_integral_check: None,
        flags,
        failures,
    })
}

fn markov_limit_covariance_entry(spec: &MarkovDriverSpec, i: usize, j: usize) -> Result<f64> {
    let d = spec.dim();
    crate::drivers::markov_limit_covariance(spec, &HVector::basis(d, i), &HVector::basis(d, j))
}

struct MollifiedRep {
    sup_err: Vec<f64>,
    aborted: Vec<bool>,
    z_sq: Vec<f64>,
    terminal_probe: f64,
}

fn run_mollified(config: &ScenarioConfig) -> Result<ConvergenceReport> {
    let levels = config.n_grid.clone();
    let n_max = *levels.last().expect("non-empty");
    let m = config.space_points;
    let spec = build_kernel_spec(config)?;
    let field = build_field(config, m);
    let x0 = initial_state(field.as_ref(), config.x0);
    let s_norm = hs_norm(&spec.operator());

    let level_grid = |n: usize| TimeGrid::new(config.horizon, {
        let cells = (config.horizon * n as f64).round() as usize;
        cells * config.refine
    });

    let reps: Vec<MollifiedRep> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<MollifiedRep> {
            let mut out = MollifiedRep {
                sup_err: Vec::with_capacity(levels.len()),
                aborted: Vec::with_capacity(levels.len()),
                z_sq: Vec::with_capacity(levels.len()),
                terminal_probe: f64::NAN,
            };
            for (li, &n) in levels.iter().enumerate() {
                let grid = level_grid(n)?;
                let mut rng = replicate_rng(config.seed, StreamKind::Driver, li, rep);
                let (y, z, _s) = simulate_mollified_noise(&spec, n, &grid, &mut rng)?;
                out.z_sq.push(z.terminal().norm().powi(2));
                let h = tensor_integral_left(&z, &z, CellRule::LeftPoint)?;
                let k = tensor_covariation(&y, &z)?;
                let theta = correction_driver(&h, &k)?;
                let approx = solve_pathwise(field.as_ref(), &y, &z, &x0, config.substeps);
                let limit = solve_limit(field.as_ref(), &y, &theta, &x0);
                match (approx, limit) {
                    (Ok(a), Ok(l)) => {
                        out.sup_err
                            .push(sup_pre_jump_error(&a, &l, config.refine));
                        out.aborted.push(false);
                        if n == n_max {
                            out.terminal_probe = probe(a.terminal());
                        }
                    }
                    (Err(Error::BlowUp { .. }), _) | (_, Err(Error::BlowUp { .. })) => {
                        out.sup_err.push(f64::NAN);
                        out.aborted.push(true);
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let independent_terminals: Vec<f64> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let grid = level_grid(n_max)?;
            let mut rng = replicate_rng(
                config.seed,
                StreamKind::IndependentCopy,
                levels.len() - 1,
                rep,
            );
            let (y, z, _s) = simulate_mollified_noise(&spec, n_max, &grid, &mut rng)?;
            let h = tensor_integral_left(&z, &z, CellRule::LeftPoint)?;
            let k = tensor_covariation(&y, &z)?;
            let theta = correction_driver(&h, &k)?;
            match solve_limit(field.as_ref(), &y, &theta, &x0) {
                Ok(path) => Ok(probe(path.terminal())),
                Err(Error::BlowUp { .. }) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut level_rows = Vec::new();
    let mut moment_rows = Vec::new();
    let mut failures = Vec::new();
    let mut flags = Vec::new();
    let mut ns = Vec::new();
    let mut errs = Vec::new();
    let mut level_means = Vec::new();
    for (li, &n) in levels.iter().enumerate() {
        let es: Vec<f64> = reps
            .iter()
            .filter(|r| !r.aborted[li])
            .map(|r| r.sup_err[li])
            .collect();
        let aborted = config.replicates - es.len();
        if aborted * 100 > config.replicates {
            failures.push(format!(
                "level {n}: {aborted} of {} replicates aborted (>1%)",
                config.replicates
            ));
        }
        let (mean, se) = mean_se(&es);
        level_means.push((mean, se));
        ns.push(n);
        errs.push(mean);
        level_rows.push(LevelStats {
            level: n,
            mean_sup_error: mean,
            stderr: se,
            rate_cum: partial_rate(&ns, &errs),
            aborted,
        });

        let z_sq: Vec<f64> = reps.iter().map(|r| r.z_sq[li]).collect();
        let (mean_sq, se_sq) = mean_se(&z_sq);
        let squared_bound = s_norm.powi(2) / n as f64;
        let unsquared_bound = s_norm / n as f64;
        let satisfies_squared = mean_sq <= squared_bound * 1.1;
        let satisfies_unsquared = mean_sq <= unsquared_bound * 1.1;
        if !satisfies_squared {
            if satisfies_unsquared {
                flags.push(format!(
                    "level {n}: remainder moment satisfies only the unsquared bound reading"
                ));
            }
            failures.push(format!(
                "level {n}: E||Z(T)||^2 = {mean_sq:e} breaches the squared bound {squared_bound:e} (x1.1)"
            ));
        }
        moment_rows.push(MomentBoundRow {
            level: n,
            mean_sq,
            stderr: se_sq,
            squared_bound,
            unsquared_bound,
            satisfies_squared,
            satisfies_unsquared,
        });
    }
    monotonicity_flags(&levels, &level_means, &mut flags);

    let terminals: Vec<f64> = reps
        .iter()
        .map(|r| r.terminal_probe)
        .filter(|t| t.is_finite())
        .collect();
    let (terminal_mean, terminal_stderr) = mean_se(&terminals);
    let independent: Vec<f64> = independent_terminals
        .into_iter()
        .filter(|t| t.is_finite())
        .collect();
    let ks = (!terminals.is_empty() && !independent.is_empty())
        .then(|| ks_statistic(&terminals, &independent));
    distribution_flag(&flags.clone(), ks, &mut flags);

    Ok(ConvergenceReport {
        scenario: config.scenario.name().to_string(),
        config: config.clone(),
        levels: level_rows,
        rate: estimate_rate(&ns, &errs).ok(),
        terminal_law_distance: ks,
        terminal_mean,
        terminal_stderr,
        correction_identity_residual: f64::NAN,
        tensor_means: Vec::new(),
        ut: Vec::new(),
        moment_bounds: moment_rows,
        covariance_check: None,
        scalar_integral_check: None,
        flags,
        failures,
    })
}

fn build_kernel_spec(config: &ScenarioConfig) -> Result<MollifiedNoiseSpec> {
    let m = config.space_points;
    let length = config.box_length;
    let scale = config.kernel_scale;
    match config.kernel {
        KernelKind::Gaussian => {
            let w = config.kernel_width;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::config("kernel_width", "must be positive"));
            }
            MollifiedNoiseSpec::from_kernel_fn(m, length, |x, u| {
                scale * (-(x - u).powi(2) / (2.0 * w * w)).exp()
            })
        }
        KernelKind::Separable => MollifiedNoiseSpec::from_kernel_fn(m, length, |x, u| {
            scale
                * (std::f64::consts::PI * x / length).sin()
                * (std::f64::consts::PI * u / length).cos()
        }),
    }
}

/// Flags non-monotone mean errors beyond two pooled standard errors.
fn monotonicity_flags(levels: &[usize], means: &[(f64, f64)], flags: &mut Vec<String>) {
    for w in means.windows(2).zip(levels.windows(2)) {
        let ((m0, s0), (m1, s1)) = (w.0[0], w.0[1]);
        if m1 > m0 + 2.0 * (s0 * s0 + s1 * s1).sqrt() {
            flags.push(format!(
                "mean sup error rose from level {} ({m0:e}) to level {} ({m1:e})",
                w.1[0], w.1[1]
            ));
        }
    }
}

/// Notes the case where the coupled metric misbehaves while the terminal
/// laws still agree; the weak-convergence statement does not adjudicate
/// pathwise behavior, so this is informational.
fn distribution_flag(current: &[String], ks: Option<f64>, flags: &mut Vec<String>) {
    let coupled_trouble = current.iter().any(|f| f.starts_with("mean sup error rose"));
    if coupled_trouble {
        if let Some(ks) = ks {
            if ks < 0.05 {
                flags.push(
                    "coupled pathwise metric is non-monotone but terminal laws agree \
                     (KS < 0.05); treating as distribution-level convergence"
                        .into(),
                );
            }
        }
    }
}
