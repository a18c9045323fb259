//! Partition-based stochastic tensor integrals, covariations, and variation
//! functionals over sample paths.
//!
//! Every grid step is processed as a continuous motion over the open cell
//! followed by the jump at the right node; a path flagged at the time origin
//! additionally contributes its origin jump to the node-0 value. With
//! left-point weights (integrand value at the left node for the continuous
//! part, left limit at the jump node for the jump part) the Riemann-sum
//! identities
//!
//! ```text
//! X(t)⊗Y(t) - X(0-)⊗Y(0-) = ∫X₋⊗dY + ∫dX⊗Y₋ + [X,Y]^⊗
//! trace([Y,Y]^⊗) = [Y,Y]
//! (∫X₋⊗dY)* = ∫dY⊗X₋
//! ```
//!
//! hold exactly (up to float rounding) on any common grid. The
//! [`CellRule::ExactLinear`] variant replaces the left-point weight of the
//! continuous part by the cell average, which integrates piecewise-linear
//! integrands against piecewise-linear integrators without quadrature error;
//! jumps keep the left-limit weight either way.

use crate::error::Result;
use crate::hilbert::{hs_inner, tensor_product, HSTensor, HVector};
use crate::path::{check_common_grid, PathBuilder, Payload, SamplePath};

/// Quadrature rule for the continuous part of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRule {
    /// Ito convention: weight the continuous motion by the left node value.
    LeftPoint,
    /// Trapezoid-corrected left-point sum: weight the continuous motion by
    /// the average of the left node value and the right left-limit. Exact
    /// for linear integrands on linear cells.
    ExactLinear,
}

pub type TensorPath = SamplePath<HSTensor>;

/// Running sum of `X ⊗ dY`: per cell, the continuous increment of `Y`
/// weighted by `X` at the left node (or the cell average under
/// [`CellRule::ExactLinear`]), plus the jump of `Y` weighted by the left
/// limit of `X` at the jump node.
pub fn tensor_integral_left(
    x: &SamplePath<HVector>,
    y: &SamplePath<HVector>,
    rule: CellRule,
) -> Result<TensorPath> {
    check_common_grid(x, y)?;
    x.value(0).dot(y.value(0))?; // dimension check
    let d = x.value(0).dim();
    let mut acc = HSTensor::zeros(d);
    let mut out = if y.has_jump(0) {
        acc.add_outer(1.0, x.left_limit(0), &y.origin_jump());
        let mut b = PathBuilder::new(*x.grid(), acc.clone());
        b.flag_origin(HSTensor::zeros(d));
        b
    } else {
        PathBuilder::new(*x.grid(), acc.clone())
    };
    for k in 0..x.grid().steps() {
        let dy_cont = y.continuous_increment(k);
        match rule {
            CellRule::LeftPoint => acc.add_outer(1.0, x.value(k), &dy_cont),
            CellRule::ExactLinear => {
                acc.add_outer(0.5, x.value(k), &dy_cont);
                acc.add_outer(0.5, x.left_limit(k + 1), &dy_cont);
            }
        }
        if y.has_jump(k + 1) {
            let left = acc.clone();
            acc.add_outer(1.0, x.left_limit(k + 1), &y.jump_increment(k));
            out.push_jump(left, acc.clone());
        } else {
            out.push(acc.clone());
        }
    }
    out.finish()
}

/// Running sum of `dY ⊗ X` for integrator `Y` and integrand `X`, the
/// adjoint side of [`tensor_integral_left`]:
/// `tensor_integral_right(y, x) = adjoint(tensor_integral_left(x, y))`.
pub fn tensor_integral_right(
    integrator: &SamplePath<HVector>,
    integrand: &SamplePath<HVector>,
    rule: CellRule,
) -> Result<TensorPath> {
    check_common_grid(integrand, integrator)?;
    integrand.value(0).dot(integrator.value(0))?;
    let d = integrand.value(0).dim();
    let mut acc = HSTensor::zeros(d);
    let mut out = if integrator.has_jump(0) {
        acc.add_outer(1.0, &integrator.origin_jump(), integrand.left_limit(0));
        let mut b = PathBuilder::new(*integrand.grid(), acc.clone());
        b.flag_origin(HSTensor::zeros(d));
        b
    } else {
        PathBuilder::new(*integrand.grid(), acc.clone())
    };
    for k in 0..integrand.grid().steps() {
        let dy_cont = integrator.continuous_increment(k);
        match rule {
            CellRule::LeftPoint => acc.add_outer(1.0, &dy_cont, integrand.value(k)),
            CellRule::ExactLinear => {
                acc.add_outer(0.5, &dy_cont, integrand.value(k));
                acc.add_outer(0.5, &dy_cont, integrand.left_limit(k + 1));
            }
        }
        if integrator.has_jump(k + 1) {
            let left = acc.clone();
            acc.add_outer(
                1.0,
                &integrator.jump_increment(k),
                integrand.left_limit(k + 1),
            );
            out.push_jump(left, acc.clone());
        } else {
            out.push(acc.clone());
        }
    }
    out.finish()
}

/// Tensor quadratic covariation: running sum of outer products of matched
/// continuous increments and matched jumps (including a shared origin jump).
pub fn tensor_covariation(
    x: &SamplePath<HVector>,
    y: &SamplePath<HVector>,
) -> Result<TensorPath> {
    check_common_grid(x, y)?;
    x.value(0).dot(y.value(0))?;
    let d = x.value(0).dim();
    let mut acc = HSTensor::zeros(d);
    let mut out = if x.has_jump(0) || y.has_jump(0) {
        acc.add_outer(1.0, &x.origin_jump(), &y.origin_jump());
        let mut b = PathBuilder::new(*x.grid(), acc.clone());
        b.flag_origin(HSTensor::zeros(d));
        b
    } else {
        PathBuilder::new(*x.grid(), acc.clone())
    };
    for k in 0..x.grid().steps() {
        acc.add_outer(1.0, &x.continuous_increment(k), &y.continuous_increment(k));
        if x.has_jump(k + 1) || y.has_jump(k + 1) {
            let left = acc.clone();
            acc.add_outer(1.0, &x.jump_increment(k), &y.jump_increment(k));
            out.push_jump(left, acc.clone());
        } else {
            out.push(acc.clone());
        }
    }
    out.finish()
}

/// Scalar covariation: running sum of inner products of matched increments.
pub fn scalar_covariation(
    x: &SamplePath<HVector>,
    y: &SamplePath<HVector>,
) -> Result<SamplePath<f64>> {
    check_common_grid(x, y)?;
    let mut acc = 0.0;
    let mut out = if x.has_jump(0) || y.has_jump(0) {
        acc += x.origin_jump().dot(&y.origin_jump())?;
        let mut b = PathBuilder::new(*x.grid(), acc);
        b.flag_origin(0.0);
        b
    } else {
        PathBuilder::new(*x.grid(), acc)
    };
    for k in 0..x.grid().steps() {
        acc += x.continuous_increment(k).dot(&y.continuous_increment(k))?;
        if x.has_jump(k + 1) || y.has_jump(k + 1) {
            let left = acc;
            acc += x.jump_increment(k).dot(&y.jump_increment(k))?;
            out.push_jump(left, acc);
        } else {
            out.push(acc);
        }
    }
    out.finish()
}

/// Total variation on the stored grid: running sum of the norms of the
/// continuous increments and of the jumps. For paths stored on their
/// generating grid this is the supremum over partitions.
pub fn total_variation<P: Payload>(path: &SamplePath<P>) -> SamplePath<f64> {
    let mut acc = 0.0;
    let mut out = if path.has_jump(0) {
        acc += path.origin_jump().norm();
        let mut b = PathBuilder::new(*path.grid(), acc);
        b.flag_origin(0.0);
        b
    } else {
        PathBuilder::new(*path.grid(), acc)
    };
    for k in 0..path.grid().steps() {
        acc += path.continuous_increment(k).norm();
        if path.has_jump(k + 1) {
            let left = acc;
            acc += path.jump_increment(k).norm();
            out.push_jump(left, acc);
        } else {
            out.push(acc);
        }
    }
    out.finish().expect("builder lengths match grid")
}

/// Running pairing `sum <J, dTheta>_HS` of a tensor integrand against a
/// tensor-valued integrator.
pub fn contract_integral(
    j: &SamplePath<HSTensor>,
    theta: &SamplePath<HSTensor>,
    rule: CellRule,
) -> Result<SamplePath<f64>> {
    check_common_grid(j, theta)?;
    let mut acc = 0.0;
    let mut out = if theta.has_jump(0) {
        acc += hs_inner(j.left_limit(0), &theta.origin_jump())?;
        let mut b = PathBuilder::new(*j.grid(), acc);
        b.flag_origin(0.0);
        b
    } else {
        PathBuilder::new(*j.grid(), acc)
    };
    for k in 0..j.grid().steps() {
        let dtheta_cont = theta.continuous_increment(k);
        match rule {
            CellRule::LeftPoint => acc += hs_inner(j.value(k), &dtheta_cont)?,
            CellRule::ExactLinear => {
                acc += 0.5 * hs_inner(j.value(k), &dtheta_cont)?;
                acc += 0.5 * hs_inner(j.left_limit(k + 1), &dtheta_cont)?;
            }
        }
        if theta.has_jump(k + 1) {
            let left = acc;
            acc += hs_inner(j.left_limit(k + 1), &theta.jump_increment(k))?;
            out.push_jump(left, acc);
        } else {
            out.push(acc);
        }
    }
    out.finish()
}

/// Real-valued integral `sum <V, dY>` of a vector integrand against a
/// vector integrator.
pub fn scalar_integral_left(
    v: &SamplePath<HVector>,
    y: &SamplePath<HVector>,
    rule: CellRule,
) -> Result<SamplePath<f64>> {
    check_common_grid(v, y)?;
    let mut acc = 0.0;
    let mut out = if y.has_jump(0) {
        acc += v.left_limit(0).dot(&y.origin_jump())?;
        let mut b = PathBuilder::new(*v.grid(), acc);
        b.flag_origin(0.0);
        b
    } else {
        PathBuilder::new(*v.grid(), acc)
    };
    for k in 0..v.grid().steps() {
        let dy_cont = y.continuous_increment(k);
        match rule {
            CellRule::LeftPoint => acc += v.value(k).dot(&dy_cont)?,
            CellRule::ExactLinear => {
                acc += 0.5 * v.value(k).dot(&dy_cont)?;
                acc += 0.5 * v.left_limit(k + 1).dot(&dy_cont)?;
            }
        }
        if y.has_jump(k + 1) {
            let left = acc;
            acc += v.left_limit(k + 1).dot(&y.jump_increment(k))?;
            out.push_jump(left, acc);
        } else {
            out.push(acc);
        }
    }
    out.finish()
}

/// Vector-valued integral `sum J dX` of a vector integrand against a scalar
/// integrator.
pub fn vector_integral_left(
    j: &SamplePath<HVector>,
    x: &SamplePath<f64>,
    rule: CellRule,
) -> Result<SamplePath<HVector>> {
    check_common_grid(j, x)?;
    let dim = j.value(0).dim();
    let mut acc = HVector::zeros(dim);
    let mut out = if x.has_jump(0) {
        acc.axpy(x.origin_jump(), j.left_limit(0));
        let mut b = PathBuilder::new(*j.grid(), acc.clone());
        b.flag_origin(HVector::zeros(dim));
        b
    } else {
        PathBuilder::new(*j.grid(), acc.clone())
    };
    for k in 0..j.grid().steps() {
        let dx_cont = x.continuous_increment(k);
        match rule {
            CellRule::LeftPoint => acc.axpy(dx_cont, j.value(k)),
            CellRule::ExactLinear => {
                acc.axpy(0.5 * dx_cont, j.value(k));
                acc.axpy(0.5 * dx_cont, j.left_limit(k + 1));
            }
        }
        if x.has_jump(k + 1) {
            let left = acc.clone();
            acc.axpy(x.jump_increment(k), j.left_limit(k + 1));
            out.push_jump(left, acc.clone());
        } else {
            out.push(acc.clone());
        }
    }
    out.finish()
}

/// Integration-by-parts residual at every node, for diagnostics:
/// `X⊗Y(t) - X(0-)⊗Y(0-) - ∫X₋⊗dY - ∫dX⊗Y₋ - [X,Y]^⊗`.
pub fn integration_by_parts_residual(
    x: &SamplePath<HVector>,
    y: &SamplePath<HVector>,
) -> Result<f64> {
    let ixy = tensor_integral_left(x, y, CellRule::LeftPoint)?;
    let iyx = tensor_integral_right(x, y, CellRule::LeftPoint)?;
    let cov = tensor_covariation(x, y)?;
    let start = tensor_product(x.left_limit(0), y.left_limit(0))?;
    let mut worst = 0.0_f64;
    for k in 0..x.len() {
        let lhs = tensor_product(x.value(k), y.value(k))?.sub(&start);
        let rhs = ixy.value(k).add(iyx.value(k)).add(cov.value(k));
        let scale = crate::hilbert::hs_norm(&lhs).max(1.0);
        worst = worst.max(crate::hilbert::hs_norm(&lhs.sub(&rhs)) / scale);
    }
    Ok(worst)
}
