//! Scenario definitions, Monte Carlo orchestration, diagnostics, rate
//! estimation, and reporting.

mod config;
mod report;
mod scenario;
pub mod stats;
mod verify;

pub use config::{DriverKind, FieldKind, KernelKind, ScenarioConfig, ScenarioKind};
pub use report::{
    ConvergenceReport, CovarianceCheck, LevelStats, MomentBoundRow, ScalarIntegralCheck,
    TensorMeans, UtRow,
};
pub use scenario::run_scenario;
pub use verify::{refinement_probe, run_identity_suite, IdentityCheck, IDENTITY_TOLERANCE};
