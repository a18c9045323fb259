//! Q-Wiener process paths in the truncation basis.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hilbert::HVector;
use crate::path::{PathBuilder, SamplePath};

/// Diagonal covariance operator in the truncation basis: coordinate `j` of
/// the process is an independent Brownian motion with variance rate
/// `eigenvalues[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QWienerSpec {
    eigenvalues: Vec<f64>,
}

impl QWienerSpec {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (index, &value) in eigenvalues.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: "QWienerSpec eigenvalue",
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeEigenvalue { index, value });
            }
        }
        Ok(QWienerSpec { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `trace(Q) = sum of eigenvalues`.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Karhunen-Loeve realization on the grid: independent Gaussian increments
/// with `Var(dW_j) = eigenvalue_j * dt` per coordinate and step.
pub fn simulate_qwiener(
    spec: &QWienerSpec,
    grid: &TimeGrid,
    rng: &mut impl Rng,
) -> Result<SamplePath<HVector>> {
    let d = spec.dim();
    let sqrt_rates: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|l| (l * grid.dt()).sqrt())
        .collect();
    let mut current = HVector::zeros(d);
    let mut out = PathBuilder::new(*grid, current.clone());
    for _ in 0..grid.steps() {
        for (c, s) in current.coeffs_mut().iter_mut().zip(&sqrt_rates) {
            let z: f64 = rng.sample(StandardNormal);
            *c += s * z;
        }
        out.push(current.clone());
    }
    out.finish()
}
