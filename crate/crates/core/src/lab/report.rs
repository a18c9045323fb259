//! Report structures and artifact emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::hilbert::HSTensor;

use super::config::ScenarioConfig;

/// Per-level Monte Carlo statistics.
#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub mean_sup_error: f64,
    pub stderr: f64,
    /// Cumulative log-log rate estimate over the levels seen so far
    /// (NaN until two usable levels exist).
    pub rate_cum: f64,
    pub aborted: usize,
}

/// Entrywise means and standard errors of the tensor functionals at the
/// horizon, flattened row-major.
#[derive(Debug, Clone, Serialize)]
pub struct TensorMeans {
    pub level: usize,
    pub dim: usize,
    /// Mean of the residual self-integral `∫ Z ⊗ dZ` at the horizon.
    pub residual_integral: Vec<f64>,
    pub residual_integral_se: Vec<f64>,
    /// Mean of the step/residual cross covariation at the horizon.
    pub cross_covariation: Vec<f64>,
    pub cross_covariation_se: Vec<f64>,
    /// Mean of the correction driver (adjoint of the residual integral
    /// minus the cross covariation) at the horizon.
    pub correction: Vec<f64>,
    pub correction_se: Vec<f64>,
    /// Mean of the step-path tensor bracket at the horizon.
    pub step_bracket: Vec<f64>,
}

/// Empirical tightness diagnostics: 50/90/99% quantiles per level.
#[derive(Debug, Clone, Serialize)]
pub struct UtRow {
    pub level: usize,
    /// Total variation of the interpolant over `[0, T]`; expected to grow
    /// with the level (the raw interpolation is not uniformly tight).
    pub interpolant_variation: [f64; 3],
    /// Total variation of the residual self-integral; expected bounded.
    pub residual_integral_variation: [f64; 3],
    /// Scalar bracket of the step path at the horizon.
    pub step_bracket: [f64; 3],
}

/// Remainder moment bound per level for the mollified-noise scenario; both
/// readings of the bound are reported.
#[derive(Debug, Clone, Serialize)]
pub struct MomentBoundRow {
    pub level: usize,
    pub mean_sq: f64,
    pub stderr: f64,
    /// `||S||_HS^2 / n`.
    pub squared_bound: f64,
    /// `||S||_HS / n`.
    pub unsquared_bound: f64,
    pub satisfies_squared: bool,
    pub satisfies_unsquared: bool,
}

/// Martingale covariance check for the Markov scenario at the final level.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceCheck {
    pub level: usize,
    pub dim: usize,
    /// Empirical `E[Y_i(T) Y_j(T)]`, flattened row-major.
    pub empirical: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Exact double-sum covariance scaled by the horizon.
    pub exact: Vec<f64>,
    pub within_three_se: bool,
}

/// Interpolated-vs-Ito integral check for the scalar scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarIntegralCheck {
    pub level: usize,
    /// Worst relative residual of `∫ U dU = (U(T)^2 - U(0)^2) / 2` per path.
    pub max_half_square_residual: f64,
    /// Mean of `∫ U dU - ∫ G dG` (same noise), with its standard error;
    /// the limit gap is `trace(Q) T / 2`.
    pub mean_gap: f64,
    pub gap_stderr: f64,
    pub expected_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub levels: Vec<LevelStats>,
    /// Log-log rate over the full level grid when at least three usable
    /// levels exist.
    pub rate: Option<f64>,
    /// Kolmogorov-Smirnov distance between the terminal law of the
    /// approximating solution and an independent copy of the limit
    /// solution, at the final level.
    pub terminal_law_distance: Option<f64>,
    /// Terminal mean and standard error of the approximating solution at
    /// the final level (probe pairing for vector states).
    pub terminal_mean: f64,
    pub terminal_stderr: f64,
    /// Worst entrywise gap between the aggregated correction mean and half
    /// the aggregated step bracket, relative to scale (exact identity of
    /// the interpolation splitting; NaN when not applicable).
    pub correction_identity_residual: f64,
    pub tensor_means: Vec<TensorMeans>,
    pub ut: Vec<UtRow>,
    pub moment_bounds: Vec<MomentBoundRow>,
    pub covariance_check: Option<CovarianceCheck>,
    pub scalar_integral_check: Option<ScalarIntegralCheck>,
    /// Soft findings worth attention (monotonicity, distribution-only
    /// convergence, unsquared-only bound); never fatal by themselves.
    pub flags: Vec<String>,
    /// Hard failures (abort fraction, breached bounds); a non-empty list
    /// makes the run exit with the scenario-failure code.
    pub failures: Vec<String>,
}

impl ConvergenceReport {
    /// Writes `report.json`, `errors.csv`, and `tensors.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), json)?;

        let mut csv = Vec::new();
        writeln!(csv, "n,mean_sup_error,stderr,rate_cum,aborted")?;
        for row in &self.levels {
            writeln!(
                csv,
                "{},{},{},{},{}",
                row.level, row.mean_sup_error, row.stderr, row.rate_cum, row.aborted
            )?;
        }
        std::fs::write(dir.join("errors.csv"), csv)?;

        let tensors = serde_json::to_string_pretty(&self.tensor_means)?;
        std::fs::write(dir.join("tensors.json"), tensors)?;
        Ok(())
    }

    /// One-paragraph console summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario {}\n", self.scenario));
        for row in &self.levels {
            out.push_str(&format!(
                "  n = {:>4}: mean sup error {:.6e} (se {:.2e}), rate so far {:.3}, aborted {}\n",
                row.level, row.mean_sup_error, row.stderr, row.rate_cum, row.aborted
            ));
        }
        if let Some(rate) = self.rate {
            out.push_str(&format!("  fitted log-log rate: {rate:.3}\n"));
        }
        if let Some(ks) = self.terminal_law_distance {
            out.push_str(&format!("  terminal-law KS distance: {ks:.4}\n"));
        }
        out.push_str(&format!(
            "  terminal mean: {:.6} (se {:.2e})\n",
            self.terminal_mean, self.terminal_stderr
        ));
        for flag in &self.flags {
            out.push_str(&format!("  flag: {flag}\n"));
        }
        for failure in &self.failures {
            out.push_str(&format!("  FAILURE: {failure}\n"));
        }
        out
    }
}

pub(super) fn flatten(t: &HSTensor) -> Vec<f64> {
    t.entries().to_vec()
}
