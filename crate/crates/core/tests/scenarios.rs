//! Scenario-level integration checks beyond the acceptance criteria.

use wz_core::lab::{run_scenario, DriverKind, FieldKind, ScenarioConfig, ScenarioKind};

/// A deterministic linear driver with a constant coefficient collapses the
/// whole pipeline: the correction never engages and the coupled error sits
/// at float-epsilon scale for every level.
#[test]
fn deterministic_driver_gives_float_epsilon_errors() {
    let mut config = ScenarioConfig::preset(ScenarioKind::HilbertInterpolation);
    config.driver = DriverKind::Linear;
    config.field = FieldKind::Constant;
    config.n_grid = vec![4, 8];
    config.refine = 4;
    config.substeps = 2;
    config.replicates = 100;
    let report = run_scenario(&config).expect("scenario runs");
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for row in &report.levels {
        assert!(
            row.mean_sup_error < 1e-12,
            "n = {}: error {:e}",
            row.level,
            row.mean_sup_error
        );
        assert_eq!(row.aborted, 0);
    }

    // total variation of the interpolant is ||h|| T, constant in the level
    let h_norm: f64 = config.q_eigenvalues.iter().sum::<f64>().sqrt();
    for row in &report.ut {
        let median = row.interpolant_variation[0];
        assert!(
            (median - h_norm * config.horizon).abs() < 1e-10,
            "n = {}: interpolant variation {median} vs {h_norm}",
            row.level
        );
    }
}

/// Brownian interpolant total variation: the median over replicates tracks
/// the mean-increment oracle sqrt(2 n T / pi) and grows with the level.
#[test]
fn interpolant_variation_tracks_the_oracle() {
    let mut config = ScenarioConfig::preset(ScenarioKind::ScalarWz);
    config.n_grid = vec![8, 16, 32];
    config.refine = 4;
    config.substeps = 2;
    config.replicates = 2_000;
    let report = run_scenario(&config).expect("scenario runs");
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    let mut previous = 0.0;
    for row in &report.ut {
        let median = row.interpolant_variation[0];
        let oracle = (2.0 * row.level as f64 * config.horizon / std::f64::consts::PI).sqrt();
        assert!(
            (median / oracle - 1.0).abs() < 0.05,
            "n = {}: median {median} vs oracle {oracle}",
            row.level
        );
        assert!(median > previous, "variation should grow with the level");
        previous = median;
    }
}

/// The aggregated correction mean equals half the aggregated step bracket
/// exactly: the report carries the residual and it is at rounding scale.
#[test]
fn correction_identity_holds_in_the_report() {
    let mut config = ScenarioConfig::preset(ScenarioKind::HilbertInterpolation);
    config.n_grid = vec![4, 8];
    config.refine = 4;
    config.substeps = 2;
    config.replicates = 500;
    let report = run_scenario(&config).expect("scenario runs");
    assert!(report.correction_identity_residual <= 1e-10);

    // and the terminal tensor means satisfy it row by row
    for row in &report.tensor_means {
        for (c, b) in row.correction.iter().zip(&row.step_bracket) {
            assert!((c - b / 2.0).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }
}

/// Levels that do not divide the largest level cannot share noise and are
/// rejected with a field-level message.
#[test]
fn non_nested_levels_are_rejected() {
    let mut config = ScenarioConfig::preset(ScenarioKind::ScalarWz);
    config.n_grid = vec![6, 8];
    config.replicates = 100;
    let err = run_scenario(&config).unwrap_err();
    assert!(err.to_string().contains("n_grid"), "{err}");
}
