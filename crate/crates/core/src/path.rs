//! Cadlag sample paths on a uniform time grid.
//!
//! `values[k]` is the value at `t_k+` (post-jump). A node is flagged as a
//! jump node by storing the left limit there; at unflagged nodes the path is
//! continuous and the left limit coincides with the stored value. The step
//! from node `k` to `k+1` therefore decomposes into a continuous increment
//! `left_limit(k+1) - value(k)` followed by the jump
//! `value(k+1) - left_limit(k+1)`.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hilbert::{HSTensor, HVector};

/// Value types that can live on a path node.
pub trait Payload: Clone + Send + Sync {
    fn zeros_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn norm(&self) -> f64;
}

impl Payload for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Payload for HVector {
    fn zeros_like(&self) -> Self {
        HVector::zeros(self.dim())
    }
    fn add(&self, rhs: &Self) -> Self {
        HVector::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        HVector::sub(self, rhs)
    }
    fn norm(&self) -> f64 {
        HVector::norm(self)
    }
}

impl Payload for HSTensor {
    fn zeros_like(&self) -> Self {
        HSTensor::zeros(self.dim())
    }
    fn add(&self, rhs: &Self) -> Self {
        HSTensor::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        HSTensor::sub(self, rhs)
    }
    fn norm(&self) -> f64 {
        crate::hilbert::hs_norm(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<P> {
    grid: TimeGrid,
    values: Vec<P>,
    /// `left_limits[k] = Some(v)` marks a jump at `t_k` with left limit `v`.
    left_limits: Vec<Option<P>>,
}

impl<P: Payload> SamplePath<P> {
    pub fn new(grid: TimeGrid, values: Vec<P>, left_limits: Vec<Option<P>>) -> Result<Self> {
        if values.len() != grid.len() || left_limits.len() != grid.len() {
            return Err(Error::GridMisalignment {
                detail: format!(
                    "path with {} values / {} limits on a grid with {} nodes",
                    values.len(),
                    left_limits.len(),
                    grid.len()
                ),
            });
        }
        Ok(SamplePath {
            grid,
            values,
            left_limits,
        })
    }

    /// Continuous path through the given node values (no jump flags).
    pub fn continuous(grid: TimeGrid, values: Vec<P>) -> Result<Self> {
        let n = values.len();
        SamplePath::new(grid, values, vec![None; n])
    }

    pub fn constant(grid: TimeGrid, value: P) -> Self {
        let n = grid.len();
        SamplePath {
            grid,
            values: vec![value; n],
            left_limits: vec![None; n],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `t_k+`.
    pub fn value(&self, k: usize) -> &P {
        &self.values[k]
    }

    pub fn values(&self) -> &[P] {
        &self.values
    }

    pub fn terminal(&self) -> &P {
        self.values.last().expect("non-empty path")
    }

    pub fn has_jump(&self, k: usize) -> bool {
        self.left_limits[k].is_some()
    }

    /// Left limit at `t_k`; equals the stored value at continuity nodes.
    pub fn left_limit(&self, k: usize) -> &P {
        self.left_limits[k].as_ref().unwrap_or(&self.values[k])
    }

    /// Continuous motion over `(t_k, t_{k+1})`: `left_limit(k+1) - value(k)`.
    pub fn continuous_increment(&self, k: usize) -> P {
        self.left_limit(k + 1).sub(&self.values[k])
    }

    /// Jump at `t_{k+1}`: `value(k+1) - left_limit(k+1)`; zero vector at
    /// continuity nodes.
    pub fn jump_increment(&self, k: usize) -> P {
        let next = k + 1;
        match &self.left_limits[next] {
            Some(l) => self.values[next].sub(l),
            None => self.values[next].zeros_like(),
        }
    }

    /// Full node-to-node increment `value(k+1) - value(k)`.
    pub fn increment(&self, k: usize) -> P {
        self.values[k + 1].sub(&self.values[k])
    }

    /// Jump at the time origin, `value(0) - left_limit(0)`; zero unless the
    /// path is flagged as displaced at `t = 0`.
    pub fn origin_jump(&self) -> P {
        match &self.left_limits[0] {
            Some(l) => self.values[0].sub(l),
            None => self.values[0].zeros_like(),
        }
    }

    /// Node-wise sum; jump flags are merged, left limits added.
    pub fn zip_add(&self, other: &SamplePath<P>) -> Result<SamplePath<P>> {
        self.zip_with(other, |a, b| a.add(b))
    }

    /// Node-wise difference; jump flags are merged.
    pub fn zip_sub(&self, other: &SamplePath<P>) -> Result<SamplePath<P>> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    fn zip_with(
        &self,
        other: &SamplePath<P>,
        f: impl Fn(&P, &P) -> P,
    ) -> Result<SamplePath<P>> {
        check_common_grid(self, other)?;
        let values: Vec<P> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect();
        let left_limits: Vec<Option<P>> = (0..self.values.len())
            .map(|k| {
                if self.has_jump(k) || other.has_jump(k) {
                    Some(f(self.left_limit(k), other.left_limit(k)))
                } else {
                    None
                }
            })
            .collect();
        SamplePath::new(self.grid, values, left_limits)
    }

    pub fn map<Q: Payload>(&self, f: impl Fn(&P) -> Q) -> SamplePath<Q> {
        SamplePath {
            grid: self.grid,
            values: self.values.iter().map(&f).collect(),
            left_limits: self
                .left_limits
                .iter()
                .map(|l| l.as_ref().map(&f))
                .collect(),
        }
    }
}

/// Incremental builder used by the integrators and solvers.
pub struct PathBuilder<P> {
    grid: TimeGrid,
    values: Vec<P>,
    left_limits: Vec<Option<P>>,
}

impl<P: Payload> PathBuilder<P> {
    pub fn new(grid: TimeGrid, start: P) -> Self {
        let n = grid.len();
        let mut values = Vec::with_capacity(n);
        values.push(start);
        let mut left_limits = Vec::with_capacity(n);
        left_limits.push(None);
        PathBuilder {
            grid,
            values,
            left_limits,
        }
    }

    pub fn current(&self) -> &P {
        self.values.last().expect("non-empty")
    }

    /// Appends the next node as a continuity node.
    pub fn push(&mut self, value: P) {
        self.values.push(value);
        self.left_limits.push(None);
    }

    /// Appends the next node as a jump node with the given left limit.
    pub fn push_jump(&mut self, left_limit: P, value: P) {
        self.values.push(value);
        self.left_limits.push(Some(left_limit));
    }

    /// Marks node 0 as a jump node (path displaced at the time origin).
    pub fn flag_origin(&mut self, left_limit: P) {
        self.left_limits[0] = Some(left_limit);
    }

    pub fn finish(self) -> Result<SamplePath<P>> {
        SamplePath::new(self.grid, self.values, self.left_limits)
    }
}

pub fn check_common_grid<P: Payload, Q: Payload>(
    a: &SamplePath<P>,
    b: &SamplePath<Q>,
) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}
