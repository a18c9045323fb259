//! Uniform time grids.

use crate::error::{Error, Result};

/// Uniform grid `t_k = k * dt` on `[0, horizon]` with `steps` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::GridMisalignment {
                detail: "grid needs at least one step".into(),
            });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::GridMisalignment {
                detail: format!("horizon must be positive and finite, got {horizon}"),
            });
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    /// Number of nodes (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks that this grid refines the level-`n` partition `{k/n}` by an
    /// integer factor, returning that factor.
    pub fn refinement_of(&self, n: usize) -> Result<usize> {
        let cells = self.horizon * n as f64;
        let cells_rounded = cells.round();
        if (cells - cells_rounded).abs() > 1e-9 || cells_rounded < 1.0 {
            return Err(Error::GridMisalignment {
                detail: format!(
                    "horizon {} is not an integer multiple of 1/{n}",
                    self.horizon
                ),
            });
        }
        let cells = cells_rounded as usize;
        if !self.steps.is_multiple_of(cells) {
            return Err(Error::GridMisalignment {
                detail: format!(
                    "{} fine steps cannot be split evenly over {cells} interpolation cells",
                    self.steps
                ),
            });
        }
        Ok(self.steps / cells)
    }
}
