//! Pathwise Euler solvers for the approximating SDE and the corrected limit
//! SDE, together with the correction field they share.
//!
//! A coefficient field maps a `k`-dimensional state to an operator from the
//! `d`-dimensional driver space into state space, represented by its rows:
//! `(f(x) dy)_a = <row_a(x), dy>`. The scalar case of a field `f: R -> H`
//! is `k = 1` with the single row holding the coefficients of `f(x)`.
//!
//! The correction field materializes, per state coordinate `a`, the tensor
//!
//! ```text
//! G_a(x) = sum_b  (∂ row_a / ∂ x_b)(x) ⊗ row_b(x)
//! ```
//!
//! which pairs against increments of the correction driver through the
//! Hilbert-Schmidt inner product. For `k = 1` this is `Df(x) ⊗ f(x)`; for
//! vector states it is the coordinatewise basis expansion of the rearranged
//! operator composition `~(Df(x) f(x))`.

use crate::error::{Error, Result};
use crate::hilbert::{tensor_product, HSTensor, HVector};
use crate::path::{PathBuilder, SamplePath};

/// Norm threshold past which a replicate is aborted.
pub const BLOW_UP_GUARD: f64 = 1e8;

/// State-dependent operator coefficient of the SDE, with analytic first and
/// second derivatives.
pub trait CoefficientField: Sync {
    /// State dimension `k`.
    fn state_dim(&self) -> usize;
    /// Driver dimension `d`.
    fn driver_dim(&self) -> usize;
    /// Rows of `f(x)`: `rows(x)[a]` pairs with driver increments to move
    /// state coordinate `a`.
    fn rows(&self, x: &[f64]) -> Vec<HVector>;
    /// `rows_derivative(x)[a][b] = ∂ row_a / ∂ x_b`.
    fn rows_derivative(&self, x: &[f64]) -> Vec<Vec<HVector>>;
    /// `rows_second_derivative(x)[a][b][c] = ∂² row_a / ∂x_b ∂x_c`; consumed
    /// only by the derivative checker.
    fn rows_second_derivative(&self, x: &[f64]) -> Vec<Vec<Vec<HVector>>>;
    /// Global bound on the Hilbert-Schmidt norm of `f`.
    fn bound(&self) -> f64;

    /// `out[a] += <row_a(x), dy>`; override to avoid allocation in the hot
    /// loop.
    fn accumulate_action(&self, x: &[f64], dy: &HVector, out: &mut [f64]) {
        for (a, row) in self.rows(x).iter().enumerate() {
            out[a] += row.dot(dy).expect("row/driver dims agree");
        }
    }
}

/// Constant field: `f(x) = rows`, so the correction vanishes.
#[derive(Debug, Clone)]
pub struct ConstantField {
    rows: Vec<HVector>,
}

impl ConstantField {
    pub fn new(rows: Vec<HVector>) -> Self {
        assert!(!rows.is_empty());
        ConstantField { rows }
    }
}

impl CoefficientField for ConstantField {
    fn state_dim(&self) -> usize {
        self.rows.len()
    }
    fn driver_dim(&self) -> usize {
        self.rows[0].dim()
    }
    fn rows(&self, _x: &[f64]) -> Vec<HVector> {
        self.rows.clone()
    }
    fn rows_derivative(&self, _x: &[f64]) -> Vec<Vec<HVector>> {
        let zero = HVector::zeros(self.driver_dim());
        vec![vec![zero; self.state_dim()]; self.state_dim()]
    }
    fn rows_second_derivative(&self, _x: &[f64]) -> Vec<Vec<Vec<HVector>>> {
        let zero = HVector::zeros(self.driver_dim());
        vec![vec![vec![zero; self.state_dim()]; self.state_dim()]; self.state_dim()]
    }
    fn bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
    fn accumulate_action(&self, _x: &[f64], dy: &HVector, out: &mut [f64]) {
        for (a, row) in self.rows.iter().enumerate() {
            out[a] += row.dot(dy).expect("row/driver dims agree");
        }
    }
}

/// Scalar state multiplying a fixed direction: `f(x) = scale * x * dir`
/// (geometric coupling; unbounded, relies on the blow-up guard).
#[derive(Debug, Clone)]
pub struct LinearField {
    direction: HVector,
    scale: f64,
}

impl LinearField {
    pub fn new(direction: HVector, scale: f64) -> Self {
        LinearField { direction, scale }
    }
}

impl CoefficientField for LinearField {
    fn state_dim(&self) -> usize {
        1
    }
    fn driver_dim(&self) -> usize {
        self.direction.dim()
    }
    fn rows(&self, x: &[f64]) -> Vec<HVector> {
        vec![self.direction.scale(self.scale * x[0])]
    }
    fn rows_derivative(&self, _x: &[f64]) -> Vec<Vec<HVector>> {
        vec![vec![self.direction.scale(self.scale)]]
    }
    fn rows_second_derivative(&self, _x: &[f64]) -> Vec<Vec<Vec<HVector>>> {
        vec![vec![vec![HVector::zeros(self.driver_dim())]]]
    }
    fn bound(&self) -> f64 {
        f64::INFINITY
    }
    fn accumulate_action(&self, x: &[f64], dy: &HVector, out: &mut [f64]) {
        let pairing = self.direction.dot(dy).expect("row/driver dims agree");
        out[0] += self.scale * x[0] * pairing;
    }
}

/// Bounded scalar-state field with a genuinely d-dimensional range:
/// `f_j(x) = amp * sin(x + j + 1) / sqrt(d)`.
#[derive(Debug, Clone)]
pub struct TrigField {
    driver_dim: usize,
    amp: f64,
}

impl TrigField {
    pub fn new(driver_dim: usize, amp: f64) -> Self {
        TrigField { driver_dim, amp }
    }

    fn profile(&self, x: f64, shift: impl Fn(f64) -> f64) -> HVector {
        let norm = self.amp / (self.driver_dim as f64).sqrt();
        HVector::new(
            (0..self.driver_dim)
                .map(|j| norm * shift(x + (j + 1) as f64))
                .collect(),
        )
        .expect("finite trig values")
    }
}

impl CoefficientField for TrigField {
    fn state_dim(&self) -> usize {
        1
    }
    fn driver_dim(&self) -> usize {
        self.driver_dim
    }
    fn rows(&self, x: &[f64]) -> Vec<HVector> {
        vec![self.profile(x[0], f64::sin)]
    }
    fn rows_derivative(&self, x: &[f64]) -> Vec<Vec<HVector>> {
        vec![vec![self.profile(x[0], f64::cos)]]
    }
    fn rows_second_derivative(&self, x: &[f64]) -> Vec<Vec<Vec<HVector>>> {
        vec![vec![vec![self.profile(x[0], |t| -t.sin())]]]
    }
    fn bound(&self) -> f64 {
        self.amp
    }
}

/// Bounded vector-state field: coordinate `a` responds to driver direction
/// `j` through `amp * sin(x_a + j + a + 1) / sqrt(d)`, so the derivative is
/// diagonal in the state index and the correction mixes coordinates.
#[derive(Debug, Clone)]
pub struct MixingField {
    state_dim: usize,
    driver_dim: usize,
    amp: f64,
}

impl MixingField {
    pub fn new(state_dim: usize, driver_dim: usize, amp: f64) -> Self {
        MixingField {
            state_dim,
            driver_dim,
            amp,
        }
    }

    fn row(&self, a: usize, xa: f64, shift: impl Fn(f64) -> f64) -> HVector {
        let norm = self.amp / (self.driver_dim as f64).sqrt();
        HVector::new(
            (0..self.driver_dim)
                .map(|j| norm * shift(xa + (j + a + 1) as f64))
                .collect(),
        )
        .expect("finite trig values")
    }
}

impl CoefficientField for MixingField {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn driver_dim(&self) -> usize {
        self.driver_dim
    }
    fn rows(&self, x: &[f64]) -> Vec<HVector> {
        (0..self.state_dim)
            .map(|a| self.row(a, x[a], f64::sin))
            .collect()
    }
    fn rows_derivative(&self, x: &[f64]) -> Vec<Vec<HVector>> {
        (0..self.state_dim)
            .map(|a| {
                (0..self.state_dim)
                    .map(|b| {
                        if a == b {
                            self.row(a, x[a], f64::cos)
                        } else {
                            HVector::zeros(self.driver_dim)
                        }
                    })
                    .collect()
            })
            .collect()
    }
    fn rows_second_derivative(&self, x: &[f64]) -> Vec<Vec<Vec<HVector>>> {
        (0..self.state_dim)
            .map(|a| {
                (0..self.state_dim)
                    .map(|b| {
                        (0..self.state_dim)
                            .map(|c| {
                                if a == b && b == c {
                                    self.row(a, x[a], |t| -t.sin())
                                } else {
                                    HVector::zeros(self.driver_dim)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
    fn bound(&self) -> f64 {
        self.amp * (self.state_dim as f64).sqrt()
    }
}

/// Correction driver `adjoint(H) - K` as a path, from the residual
/// self-integral and the step/residual cross covariation; for the
/// interpolation splitting it equals half the step-path tensor bracket at
/// pre-jump node times.
pub fn correction_driver(
    h: &SamplePath<HSTensor>,
    k: &SamplePath<HSTensor>,
) -> Result<SamplePath<HSTensor>> {
    h.map(crate::hilbert::adjoint).zip_sub(k)
}

/// The tensors that pair against increments of the correction driver, one
/// per state coordinate: `G_a(x) = sum_b (∂_b row_a) ⊗ row_b`.
pub fn correction_field(f: &dyn CoefficientField, x: &[f64]) -> Result<Vec<HSTensor>> {
    let rows = f.rows(x);
    let deriv = f.rows_derivative(x);
    let d = f.driver_dim();
    let mut out = Vec::with_capacity(f.state_dim());
    for deriv_a in &deriv {
        let mut g = HSTensor::zeros(d);
        for (da, row_b) in deriv_a.iter().zip(&rows) {
            if da.norm() == 0.0 {
                continue;
            }
            g = g.add(&tensor_product(da, row_b)?);
        }
        out.push(g);
    }
    Ok(out)
}

fn state_guard(x: &[f64], node: usize) -> Result<()> {
    let norm_sq: f64 = x.iter().map(|c| c * c).sum();
    if !norm_sq.is_finite() || norm_sq > BLOW_UP_GUARD * BLOW_UP_GUARD {
        return Err(Error::BlowUp {
            node,
            guard: BLOW_UP_GUARD,
        });
    }
    Ok(())
}

fn check_solver_inputs(
    f: &dyn CoefficientField,
    driver_dim: usize,
    x0: &HVector,
) -> Result<()> {
    if f.driver_dim() != driver_dim {
        return Err(Error::DimensionMismatch {
            expected: f.driver_dim(),
            got: driver_dim,
        });
    }
    if f.state_dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.state_dim(),
            got: x0.dim(),
        });
    }
    Ok(())
}

/// Left-point Euler recursion for the approximating equation
/// `dX = f(X) dY + f(X) dZ`. Continuous cell increments are subdivided into
/// `substeps` Euler substeps; jump increments are applied atomically at
/// flagged nodes (a shared jump of `Y` and `Z` cancels before touching the
/// state).
pub fn solve_pathwise(
    f: &dyn CoefficientField,
    y: &SamplePath<HVector>,
    z: &SamplePath<HVector>,
    x0: &HVector,
    substeps: usize,
) -> Result<SamplePath<HVector>> {
    crate::path::check_common_grid(y, z)?;
    check_solver_inputs(f, y.value(0).dim(), x0)?;
    let substeps = substeps.max(1);
    let k = f.state_dim();
    let mut x = x0.clone();

    let apply_jump = |x: &mut HVector, dy: &HVector, node: usize| -> Result<()> {
        let mut delta = vec![0.0; k];
        f.accumulate_action(x.coeffs(), dy, &mut delta);
        for (c, d) in x.coeffs_mut().iter_mut().zip(&delta) {
            *c += d;
        }
        state_guard(x.coeffs(), node)
    };

    let mut out = if y.has_jump(0) || z.has_jump(0) {
        let left = x.clone();
        let jump = y.origin_jump().add(&z.origin_jump());
        apply_jump(&mut x, &jump, 0)?;
        let mut b = PathBuilder::new(*y.grid(), x.clone());
        b.flag_origin(left);
        b
    } else {
        PathBuilder::new(*y.grid(), x.clone())
    };

    for kk in 0..y.grid().steps() {
        let du = y.continuous_increment(kk).add(&z.continuous_increment(kk));
        let frac = du.scale(1.0 / substeps as f64);
        let mut delta = vec![0.0; k];
        for _ in 0..substeps {
            delta.iter_mut().for_each(|d| *d = 0.0);
            f.accumulate_action(x.coeffs(), &frac, &mut delta);
            for (c, d) in x.coeffs_mut().iter_mut().zip(&delta) {
                *c += d;
            }
        }
        state_guard(x.coeffs(), kk + 1)?;
        if y.has_jump(kk + 1) || z.has_jump(kk + 1) {
            let left = x.clone();
            let jump = y.jump_increment(kk).add(&z.jump_increment(kk));
            apply_jump(&mut x, &jump, kk + 1)?;
            out.push_jump(left, x.clone());
        } else {
            out.push(x.clone());
        }
    }
    out.finish()
}

/// Euler recursion for the corrected limit equation
/// `dX = f(X) dY + <G(X), dTheta>`; the correction pairs the tensors from
/// [`correction_field`] against increments of the correction driver.
pub fn solve_limit(
    f: &dyn CoefficientField,
    y: &SamplePath<HVector>,
    theta: &SamplePath<HSTensor>,
    x0: &HVector,
) -> Result<SamplePath<HVector>> {
    crate::path::check_common_grid(y, theta)?;
    check_solver_inputs(f, y.value(0).dim(), x0)?;
    let k = f.state_dim();
    let mut x = x0.clone();

    let apply_update =
        |x: &mut HVector, dy: &HVector, dtheta: &HSTensor, node: usize| -> Result<()> {
            let mut delta = vec![0.0; k];
            f.accumulate_action(x.coeffs(), dy, &mut delta);
            let correction = correction_field(f, x.coeffs())?;
            for (a, g) in correction.iter().enumerate() {
                delta[a] += crate::hilbert::hs_inner(g, dtheta)?;
            }
            for (c, d) in x.coeffs_mut().iter_mut().zip(&delta) {
                *c += d;
            }
            state_guard(x.coeffs(), node)
        };

    let mut out = if y.has_jump(0) || theta.has_jump(0) {
        let left = x.clone();
        apply_update(&mut x, &y.origin_jump(), &theta.origin_jump(), 0)?;
        let mut b = PathBuilder::new(*y.grid(), x.clone());
        b.flag_origin(left);
        b
    } else {
        PathBuilder::new(*y.grid(), x.clone())
    };

    for kk in 0..y.grid().steps() {
        apply_update(
            &mut x,
            &y.continuous_increment(kk),
            &theta.continuous_increment(kk),
            kk + 1,
        )?;
        if y.has_jump(kk + 1) || theta.has_jump(kk + 1) {
            let left = x.clone();
            apply_update(
                &mut x,
                &y.jump_increment(kk),
                &theta.jump_increment(kk),
                kk + 1,
            )?;
            out.push_jump(left, x.clone());
        } else {
            out.push(x.clone());
        }
    }
    out.finish()
}

/// Finite-difference validation of the analytic derivatives.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub max_first_deviation: f64,
    pub max_second_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `rows_derivative` against central differences of `rows` and
/// `rows_second_derivative` against second differences, at the given probe
/// states. The step is `h` scaled by the probe magnitude; when the plain
/// central difference misses the tolerance a Richardson-extrapolated
/// difference is tried before failing.
pub fn check_derivatives(
    f: &dyn CoefficientField,
    probes: &[HVector],
    h: f64,
) -> DerivativeReport {
    let tolerance = 1e-4;
    let k = f.state_dim();
    let mut max_first = 0.0_f64;
    let mut max_second = 0.0_f64;

    for probe in probes {
        let x = probe.coeffs();
        let scale = x.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let step = h * scale;
        let deriv = f.rows_derivative(x);
        let second = f.rows_second_derivative(x);

        for b in 0..k {
            let diff_at = |hh: f64| -> (Vec<HVector>, Vec<HVector>) {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[b] += hh;
                xm[b] -= hh;
                (f.rows(&xp), f.rows(&xm))
            };

            let dev_first = |hh: f64| -> f64 {
                let (rp, rm) = diff_at(hh);
                let mut worst = 0.0_f64;
                for a in 0..k {
                    let fd = rp[a].sub(&rm[a]).scale(1.0 / (2.0 * hh));
                    let denom = deriv[a][b].norm().max(1.0);
                    worst = worst.max(fd.sub(&deriv[a][b]).norm() / denom);
                }
                worst
            };
            let mut first = dev_first(step);
            if first > tolerance {
                // Richardson: (4 D_{h/2} - D_h) / 3 cancels the h^2 term
                let (rp1, rm1) = diff_at(step);
                let (rp2, rm2) = diff_at(step / 2.0);
                let mut worst = 0.0_f64;
                for a in 0..k {
                    let d1 = rp1[a].sub(&rm1[a]).scale(1.0 / (2.0 * step));
                    let d2 = rp2[a].sub(&rm2[a]).scale(1.0 / step);
                    let richardson = d2.scale(4.0 / 3.0).sub(&d1.scale(1.0 / 3.0));
                    let denom = deriv[a][b].norm().max(1.0);
                    worst = worst.max(richardson.sub(&deriv[a][b]).norm() / denom);
                }
                first = first.min(worst);
            }
            max_first = max_first.max(first);

            // second differences along coordinate b, larger step to keep
            // the roundoff term h^-2 eps in check
            let h2 = (step * 10.0).max(1e-3 * scale);
            let (rp, rm) = diff_at(h2);
            let r0 = f.rows(x);
            for a in 0..k {
                let fd = rp[a]
                    .add(&rm[a])
                    .sub(&r0[a].scale(2.0))
                    .scale(1.0 / (h2 * h2));
                let denom = second[a][b][b].norm().max(1.0);
                max_second = max_second.max(fd.sub(&second[a][b][b]).norm() / denom);
            }
        }
    }

    DerivativeReport {
        max_first_deviation: max_first,
        max_second_deviation: max_second,
        tolerance,
        pass: max_first <= tolerance && max_second <= tolerance,
    }
}
