//! Piecewise-linear interpolation of a driver and its step/residual
//! splitting.
//!
//! For a driver `G` sampled on a fine grid that refines the level-`n`
//! partition `{k/n}`, the interpolant follows `G` linearly between
//! interpolation nodes, the step path looks one interpolation node ahead
//! (jumping by `ΔG_k = G((k+1)/n) - G(k/n)` at `t = k/n`, including a
//! displacement at the origin), and the residual is their difference. The
//! step path is stopped at the horizon: no jump is placed at `t = T`, so
//! sums of `ΔG_k ⊗ ΔG_k` over `[0, T]` carry exactly `n·T` terms.

use crate::error::Result;
use crate::hilbert::HVector;
use crate::path::{PathBuilder, SamplePath};

/// The interpolant and its splitting on a common fine grid.
#[derive(Debug, Clone)]
pub struct SplitPaths {
    /// Continuous piecewise-linear interpolant of the driver.
    pub interpolant: SamplePath<HVector>,
    /// Right-continuous step path jumping one interpolation cell ahead.
    pub step: SamplePath<HVector>,
    /// `interpolant - step`; left limit zero at every interpolation node.
    pub residual: SamplePath<HVector>,
    /// Interpolation level `n`.
    pub level: usize,
}

/// Piecewise-linear interpolation of `g` through the level-`n` nodes,
/// evaluated on `g`'s own (finer) grid.
pub fn linear_interpolation(
    g: &SamplePath<HVector>,
    n: usize,
) -> Result<SamplePath<HVector>> {
    let refine = g.grid().refinement_of(n)?;
    let steps = g.grid().steps();
    let mut values = Vec::with_capacity(g.len());
    for m in 0..=steps {
        let cell = (m / refine).min(steps / refine - 1);
        let frac = (m - cell * refine) as f64 / refine as f64;
        let lo = g.value(cell * refine);
        let hi = g.value((cell + 1) * refine);
        let mut v = lo.scale(1.0 - frac);
        v.axpy(frac, hi);
        values.push(v);
    }
    SamplePath::continuous(*g.grid(), values)
}

/// Splits the interpolant of `g` into the forward-looking step path and the
/// sawtooth residual.
pub fn forward_step_split(g: &SamplePath<HVector>, n: usize) -> Result<SplitPaths> {
    let refine = g.grid().refinement_of(n)?;
    let steps = g.grid().steps();
    let cells = steps / refine;
    let interpolant = linear_interpolation(g, n)?;

    // step path: on [k/n, (k+1)/n) the value is G((k+1)/n); stopped at T
    let mut step = PathBuilder::new(*g.grid(), g.value(refine).clone());
    step.flag_origin(g.value(0).clone());
    for m in 1..=steps {
        let cell = m / refine;
        if m % refine == 0 && cell < cells {
            // jump at interpolation node k/n, k = cell
            step.push_jump(
                g.value(cell * refine).clone(),
                g.value((cell + 1) * refine).clone(),
            );
        } else {
            let target = ((cell + 1).min(cells)) * refine;
            step.push(g.value(target).clone());
        }
    }
    let step = step.finish()?;
    let residual = interpolant.zip_sub(&step)?;

    Ok(SplitPaths {
        interpolant,
        step,
        residual,
        level: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::hilbert::{hs_norm, tensor_product, HSTensor};
    use crate::tensor::{tensor_covariation, tensor_integral_left, CellRule};

    fn hv(c: &[f64]) -> HVector {
        HVector::new(c.to_vec()).unwrap()
    }

    fn linear_driver(grid: TimeGrid, h: &HVector) -> SamplePath<HVector> {
        let values = (0..grid.len()).map(|m| h.scale(grid.node(m))).collect();
        SamplePath::continuous(grid, values).unwrap()
    }

    fn wavy_driver(grid: TimeGrid, dim: usize) -> SamplePath<HVector> {
        let values = (0..grid.len())
            .map(|m| {
                let t = grid.node(m);
                let coeffs: Vec<f64> = (0..dim)
                    .map(|j| (3.0 * t + j as f64).sin() + 0.5 * t * (j as f64 + 1.0))
                    .collect();
                hv(&coeffs)
            })
            .collect();
        SamplePath::continuous(grid, values).unwrap()
    }

    #[test]
    fn linear_driver_is_fixed_point_of_interpolation() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let h = hv(&[1.0, -2.0]);
        let g = linear_driver(grid, &h);
        let u = linear_interpolation(&g, 4).unwrap();
        for m in 0..g.len() {
            assert!(u.value(m).sub(g.value(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_driver_is_fixed_point() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let g = SamplePath::constant(grid, hv(&[0.7, 0.1]));
        let u = linear_interpolation(&g, 4).unwrap();
        for m in 0..g.len() {
            assert!(u.value(m).sub(g.value(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn interpolant_agrees_with_driver_at_nodes() {
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let g = wavy_driver(grid, 3);
        let n = 8;
        let u = linear_interpolation(&g, n).unwrap();
        let r = grid.refinement_of(n).unwrap();
        for k in 0..=n {
            assert!(u.value(k * r).sub(g.value(k * r)).norm() < 1e-14);
        }
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        let grid = TimeGrid::new(1.0, 30).unwrap();
        let g = wavy_driver(grid, 2);
        assert!(linear_interpolation(&g, 8).is_err());
        assert!(forward_step_split(&g, 8).is_err());
    }

    #[test]
    fn split_reassembles_and_residual_left_limits_vanish() {
        let grid = TimeGrid::new(1.0, 48).unwrap();
        let g = wavy_driver(grid, 2);
        let n = 6;
        let split = forward_step_split(&g, n).unwrap();
        let r = grid.refinement_of(n).unwrap();

        for m in 0..grid.len() {
            let sum = split.step.value(m).add(split.residual.value(m));
            assert!(sum.sub(split.interpolant.value(m)).norm() < 1e-13);
        }
        // residual left limit is zero at every interpolation node
        for k in 0..n {
            assert!(split.residual.has_jump(k * r));
            assert!(split.residual.left_limit(k * r).norm() < 1e-13);
        }
        // step path is stopped at the horizon
        assert!(!split.step.has_jump(grid.steps()));
        assert!(split
            .step
            .terminal()
            .sub(g.terminal())
            .norm()
            < 1e-14);
    }

    #[test]
    fn step_path_sup_distance_for_linear_driver() {
        // G(t) = t*h: the step path leads by exactly one cell, so the sup
        // distance over [0, T] is ||h|| / n.
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let h = hv(&[3.0, 4.0]);
        let g = linear_driver(grid, &h);
        let n = 8;
        let split = forward_step_split(&g, n).unwrap();
        let mut sup = 0.0_f64;
        for m in 0..grid.len() {
            sup = sup.max(split.step.value(m).sub(g.value(m)).norm());
        }
        assert!((sup - h.norm() / n as f64).abs() < 1e-12);
    }

    /// Closed-form checks of the residual self-integral, the cross
    /// covariation, and their combination, all exact on the stored grid.
    #[test]
    fn residual_integral_and_covariation_closed_forms() {
        for refine in [2usize, 4, 8] {
            let n = 5;
            let grid = TimeGrid::new(1.0, n * refine).unwrap();
            let g = wavy_driver(grid, 2);
            let split = forward_step_split(&g, n).unwrap();

            let h = tensor_integral_left(
                &split.residual,
                &split.residual,
                CellRule::ExactLinear,
            )
            .unwrap();
            let k = tensor_covariation(&split.step, &split.residual).unwrap();

            // running closed forms at interpolation nodes, pre-jump
            let mut sum = HSTensor::zeros(2);
            for cell in 0..n {
                let dg = g
                    .value((cell + 1) * refine)
                    .sub(g.value(cell * refine));
                let outer = tensor_product(&dg, &dg).unwrap();

                // just before the jump at node cell/n the sums hold over k < cell
                let node = cell * refine;
                let h_pre = h.left_limit(node);
                let k_pre = k.left_limit(node);
                assert!(hs_norm(&h_pre.sub(&sum.scale(-0.5))) < 1e-12);
                assert!(hs_norm(&k_pre.sub(&sum.scale(-1.0))) < 1e-12);

                sum = sum.add(&outer);
            }
            // terminal values carry all n cells
            assert!(hs_norm(&h.terminal().sub(&sum.scale(-0.5))) < 1e-12);
            assert!(hs_norm(&k.terminal().sub(&sum.scale(-1.0))) < 1e-12);

            // correction driver: adjoint(H) - K = +1/2 sum at the terminal
            let theta = crate::hilbert::adjoint(h.terminal()).sub(k.terminal());
            assert!(hs_norm(&theta.sub(&sum.scale(0.5))) < 1e-12);

            // and equals half the step-path tensor bracket
            let step_bracket =
                tensor_covariation(&split.step, &split.step).unwrap();
            assert!(
                hs_norm(&theta.sub(&step_bracket.terminal().scale(0.5))) < 1e-12
            );
        }
    }
}
