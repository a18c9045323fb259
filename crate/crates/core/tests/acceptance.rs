//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `--nocapture`; the test names
//! mirror the criteria).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use wz_core::approx::forward_step_split;
use wz_core::drivers::{replicate_rng, simulate_qwiener, QWienerSpec, StreamKind};
use wz_core::grid::TimeGrid;
use wz_core::lab::stats::mean_se;
use wz_core::lab::{
    run_identity_suite, run_scenario, ConvergenceReport, ScenarioConfig, ScenarioKind,
};
use wz_core::tensor::{tensor_integral_left, CellRule};

fn passline(text: &str) {
    println!("{text}: PASS");
}

fn scalar_report() -> &'static (ConvergenceReport, Duration) {
    static REPORT: OnceLock<(ConvergenceReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let config = ScenarioConfig::preset(ScenarioKind::ScalarWz);
        let start = Instant::now();
        let report = run_scenario(&config).expect("scalar-wz scenario runs");
        (report, start.elapsed())
    })
}

fn hilbert_report() -> &'static (ConvergenceReport, Duration) {
    static REPORT: OnceLock<(ConvergenceReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let config = ScenarioConfig::preset(ScenarioKind::HilbertInterpolation);
        let start = Instant::now();
        let report = run_scenario(&config).expect("hilbert-interpolation scenario runs");
        (report, start.elapsed())
    })
}

/// Criterion 1: the interpolated self-integral collapses to the half-square
/// closed form per path, and its gap against the same-noise left-point
/// integral averages to trace(Q) T / 2 = 0.5.
#[test]
fn criterion_1_scalar_correction() {
    let start = Instant::now();
    let n = 64usize;
    let refine = 8usize;
    let replicates = 10_000usize;
    let grid = TimeGrid::new(1.0, n * refine).unwrap();
    let spec = QWienerSpec::new(vec![1.0]).unwrap();

    let results: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(90_210, StreamKind::Driver, 0, rep);
            let g = simulate_qwiener(&spec, &grid, &mut rng).unwrap();
            let split = forward_step_split(&g, n).unwrap();
            let u = &split.interpolant;
            let interp = tensor_integral_left(u, u, CellRule::ExactLinear)
                .unwrap()
                .terminal()
                .entry(0, 0);
            let closed =
                (u.terminal().coeffs()[0].powi(2) - u.value(0).coeffs()[0].powi(2)) / 2.0;
            let residual = (interp - closed).abs() / closed.abs().max(1.0);
            let ito = tensor_integral_left(&g, &g, CellRule::LeftPoint)
                .unwrap()
                .terminal()
                .entry(0, 0);
            (residual, interp - ito)
        })
        .collect();

    let max_residual = results.iter().map(|r| r.0).fold(0.0_f64, f64::max);
    assert!(
        max_residual <= 1e-10,
        "per-path half-square residual {max_residual:e} exceeds 1e-10"
    );

    let gaps: Vec<f64> = results.iter().map(|r| r.1).collect();
    let (mean, se) = mean_se(&gaps);
    assert!(
        (mean - 0.5).abs() <= 3.0 * se,
        "mean gap {mean} vs 0.5 (se {se:e})"
    );

    let elapsed = start.elapsed();
    assert!(elapsed <= Duration::from_secs(60), "took {elapsed:?}");
    passline(&format!(
        "criterion 1 scalar correction t/2 (max residual {max_residual:.2e}, \
         mean gap {mean:.4} +/- {se:.1e}, {elapsed:.1?})"
    ));
}

/// Criterion 2: the coupled error of the scalar scenario decreases across
/// the level grid, ends at most a third of its first value, and the
/// terminal mean matches the geometric closed form.
#[test]
fn criterion_2_corrected_limit_sde() {
    let (report, _) = scalar_report();
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);

    let levels = &report.levels;
    assert_eq!(levels.len(), 4);
    for w in levels.windows(2) {
        let pooled = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(
            w[1].mean_sup_error < w[0].mean_sup_error + 2.0 * pooled,
            "error rose from n={} ({:e}) to n={} ({:e})",
            w[0].level,
            w[0].mean_sup_error,
            w[1].level,
            w[1].mean_sup_error
        );
    }
    let first = levels.first().unwrap().mean_sup_error;
    let last = levels.last().unwrap().mean_sup_error;
    assert!(
        last <= first / 3.0,
        "final mean {last:e} is not <= a third of the first {first:e}"
    );

    let target = 0.5_f64.exp();
    assert!(
        (report.terminal_mean - target).abs() <= 3.0 * report.terminal_stderr,
        "terminal mean {} vs {target} (se {})",
        report.terminal_mean,
        report.terminal_stderr
    );
    passline(&format!(
        "criterion 2 corrected limit SDE (errors {:.3e} -> {:.3e}, terminal mean {:.4})",
        first, last, report.terminal_mean
    ));
}

/// Criterion 3: tensor limits at n = 64 for Q = diag(1, 1/2, 1/4, 1/8):
/// mean residual integral -> -Q/2 and mean cross covariation -> -Q,
/// entrywise within 3 SE.
#[test]
fn criterion_3_tensor_limit_identities() {
    let (report, elapsed) = hilbert_report();
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);

    let q = [1.0, 0.5, 0.25, 0.125];
    let d = 4usize;
    let final_row = report
        .tensor_means
        .iter()
        .find(|t| t.level == 64)
        .expect("tensor means at n = 64");
    for (i, qi) in q.iter().enumerate() {
        for j in 0..d {
            let target_h = if i == j { -qi / 2.0 } else { 0.0 };
            let target_k = if i == j { -qi } else { 0.0 };
            let at = i * d + j;
            let gap_h = (final_row.residual_integral[at] - target_h).abs();
            let gap_k = (final_row.cross_covariation[at] - target_k).abs();
            assert!(
                gap_h <= 3.0 * final_row.residual_integral_se[at] + 1e-12,
                "residual integral entry ({i},{j}) = {} vs {target_h} (se {:e})",
                final_row.residual_integral[at],
                final_row.residual_integral_se[at]
            );
            assert!(
                gap_k <= 3.0 * final_row.cross_covariation_se[at] + 1e-12,
                "cross covariation entry ({i},{j}) = {} vs {target_k} (se {:e})",
                final_row.cross_covariation[at],
                final_row.cross_covariation_se[at]
            );
        }
    }
    assert!(
        *elapsed <= Duration::from_secs(180),
        "scenario took {elapsed:?}"
    );
    passline(&format!(
        "criterion 3 tensor limits -Q/2 and -Q at n=64 (diag H {:.4?}, {elapsed:.1?})",
        [
            final_row.residual_integral[0],
            final_row.residual_integral[5],
            final_row.residual_integral[10],
            final_row.residual_integral[15]
        ]
    ));
}

/// Criterion 4: the exact discrete lemma suite over 100 randomized seeds,
/// every residual at most 1e-10 relative, in under five seconds.
#[test]
fn criterion_4_exact_discrete_lemmas() {
    let start = Instant::now();
    let rows = run_identity_suite(100).expect("suite runs");
    let elapsed = start.elapsed();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        assert!(
            row.pass,
            "{}: residual {:e} exceeds {:e}",
            row.name, row.max_residual, row.tolerance
        );
    }
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    let worst = rows
        .iter()
        .map(|r| r.max_residual)
        .fold(0.0_f64, f64::max);
    passline(&format!(
        "criterion 4 exact discrete lemma suite (8 identities, worst residual {worst:.2e}, {elapsed:.2?})"
    ));
}

/// Criterion 5: remainder moment bound of the mollified-noise scenario,
/// squared reading with a 1.1 factor, across n in {4, 8, 16}.
#[test]
fn criterion_5_mollified_moment_bound() {
    let config = ScenarioConfig::preset(ScenarioKind::MollifiedNoise);
    let report = run_scenario(&config).expect("mollified-noise scenario runs");
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);
    assert_eq!(report.moment_bounds.len(), 3);
    for row in &report.moment_bounds {
        assert!(
            row.mean_sq <= row.squared_bound * 1.1,
            "n = {}: E||Z||^2 = {:e} vs squared bound {:e}",
            row.level,
            row.mean_sq,
            row.squared_bound
        );
        if !row.satisfies_squared && row.satisfies_unsquared {
            println!(
                "note: n = {} satisfies only the unsquared bound reading",
                row.level
            );
        }
    }
    let ratios: Vec<f64> = report
        .moment_bounds
        .iter()
        .map(|r| r.mean_sq / r.squared_bound)
        .collect();
    passline(&format!(
        "criterion 5 mollified moment bound (ratio to bound {ratios:.3?})"
    ));
}

/// Criterion 6: martingale covariance of the two-state chain at n = 128
/// matches the exact double sum within 3 SE.
#[test]
fn criterion_6_markov_covariance() {
    let config = ScenarioConfig::preset(ScenarioKind::MarkovDriver);
    let report = run_scenario(&config).expect("markov-driver scenario runs");
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);
    let check = report.covariance_check.as_ref().expect("covariance check");
    assert_eq!(check.level, 128);
    assert!(
        check.within_three_se,
        "empirical {:?} vs exact {:?} (se {:?})",
        check.empirical, check.exact, check.stderr
    );
    passline(&format!(
        "criterion 6 markov covariance (empirical {:.4?} vs exact {:.4?})",
        check.empirical, check.exact
    ));
}

/// Criterion 7: the interpolant's total variation grows strictly along the
/// level grid while the residual integral's stays within twice its first
/// value.
#[test]
fn criterion_7_non_ut_witness() {
    let (report, _) = hilbert_report();
    let medians_u: Vec<f64> = report.ut.iter().map(|r| r.interpolant_variation[0]).collect();
    let medians_h: Vec<f64> = report
        .ut
        .iter()
        .map(|r| r.residual_integral_variation[0])
        .collect();
    assert!(
        medians_u.windows(2).all(|w| w[1] > w[0]),
        "interpolant variation medians not strictly increasing: {medians_u:?}"
    );
    let base = medians_h[0];
    for (row, m) in report.ut.iter().zip(&medians_h) {
        assert!(
            *m <= 2.0 * base,
            "residual integral variation median at n = {} is {m}, above 2 x {base}",
            row.level
        );
    }
    passline(&format!(
        "criterion 7 non-UT witness (interpolant medians {medians_u:.2?}, bounded integral medians {medians_h:.3?})"
    ));
}
