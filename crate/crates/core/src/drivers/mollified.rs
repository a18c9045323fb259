//! Space-discretized mollified space-time white noise.
//!
//! White noise on `[0, L] x [0, T]` is realized against the orthonormal
//! basis of normalized cell indicators of a uniform `M`-point space grid:
//! the basis coordinates of the noise are independent standard Brownian
//! motions (equivalently, i.i.d. `N(0, cellVolume * dt)` cell increments).
//! The kernel operator `S` becomes the matrix `A_ij = γ(x_i, x_j) * v`,
//! spatial mollification at width `1/n` the symmetric stencil matrix `A_n`
//! with unit mass, and the time mollifier a causal moving-average window of
//! width `1/n`. The driver splits into the martingale part
//! `Y_n(h, t) = W(S_n S h, t)` and the window remainder `Z_n = W_n - Y_n`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hilbert::{HSTensor, HVector};
use crate::path::{PathBuilder, SamplePath};

/// Smooth even bump `c (1 - x^2)^3` on `[-1, 1]` with unit mass
/// (`c = 35/32`); the time profile is the same bump shifted to `(-1, 0)`.
fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (35.0 / 32.0) * (1.0 - x * x).powi(3)
    }
}

#[derive(Debug, Clone)]
pub struct MollifiedNoiseSpec {
    space_points: usize,
    box_length: f64,
    /// Kernel values `γ(x_i, x_j)` on the grid, row-major `M x M`.
    kernel: Vec<f64>,
}

impl MollifiedNoiseSpec {
    pub fn new(space_points: usize, box_length: f64, kernel: Vec<f64>) -> Result<Self> {
        if space_points == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Config {
                field: "box_length".into(),
                message: format!("must be positive and finite, got {box_length}"),
            });
        }
        if kernel.len() != space_points * space_points {
            return Err(Error::DimensionMismatch {
                expected: space_points * space_points,
                got: kernel.len(),
            });
        }
        if !kernel.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite {
                context: "mollified-noise kernel",
            });
        }
        Ok(MollifiedNoiseSpec {
            space_points,
            box_length,
            kernel,
        })
    }

    /// Builds the kernel by evaluating `gamma` at cell-center pairs.
    pub fn from_kernel_fn(
        space_points: usize,
        box_length: f64,
        gamma: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let v = box_length / space_points as f64;
        let center = |i: usize| (i as f64 + 0.5) * v;
        let mut kernel = Vec::with_capacity(space_points * space_points);
        for i in 0..space_points {
            for j in 0..space_points {
                kernel.push(gamma(center(i), center(j)));
            }
        }
        MollifiedNoiseSpec::new(space_points, box_length, kernel)
    }

    pub fn space_points(&self) -> usize {
        self.space_points
    }

    pub fn cell_volume(&self) -> f64 {
        self.box_length / self.space_points as f64
    }

    /// The kernel operator in the indicator basis: `A_ij = γ(x_i, x_j) v`.
    pub fn operator(&self) -> HSTensor {
        let v = self.cell_volume();
        let entries = self.kernel.iter().map(|g| g * v).collect();
        HSTensor::new(self.space_points, entries).expect("validated kernel")
    }

    /// Discrete spatial mollification at width `1/n`: a symmetric
    /// convolution stencil from the polynomial bump, normalized to unit
    /// mass on the full stencil (boundary rows lose mass, keeping the
    /// operator a contraction).
    pub fn spatial_mollifier(&self, n: usize) -> Result<HSTensor> {
        let v = self.cell_volume();
        if v > 1.0 / n as f64 + 1e-12 {
            return Err(Error::GridTooCoarse {
                level: n,
                detail: format!(
                    "space cell {v} does not resolve the mollifier width {}",
                    1.0 / n as f64
                ),
            });
        }
        let half = (1.0 / (n as f64 * v)).ceil() as isize;
        let weights: Vec<f64> = (-half..=half)
            .map(|q| bump(q as f64 * v * n as f64))
            .collect();
        let total: f64 = weights.iter().sum();
        let m = self.space_points as isize;
        let mut a = HSTensor::zeros(self.space_points);
        for i in 0..m {
            for (qi, w) in weights.iter().enumerate() {
                let c = i + qi as isize - half;
                if c >= 0 && c < m && *w > 0.0 {
                    a.set_entry(i as usize, c as usize, w / total);
                }
            }
        }
        Ok(a)
    }

    /// Normalized time-window masses of the mollifier at width `1/n` on a
    /// grid with step `dt`: `masses[q]` is the mass of the window covering
    /// ages in `(q dt, (q+1) dt]`.
    fn window_masses(&self, n: usize, dt: f64) -> Vec<f64> {
        let window = (1.0 / (n as f64 * dt)).ceil() as usize;
        let raw: Vec<f64> = (0..window)
            .map(|q| {
                let age = (q as f64 + 0.5) * dt;
                // time profile: bump shifted to (-1, 0), rescaled to width 1/n
                bump(2.0 * age * n as f64 - 1.0)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    }
}

/// Simulates the martingale part `Y_n`, the window remainder `Z_n`, and
/// returns the kernel operator. Both paths are continuous-model paths (no
/// jump flags) on the given grid; the grid must satisfy `dt <= 1/(4n)`.
pub fn simulate_mollified_noise(
    spec: &MollifiedNoiseSpec,
    n: usize,
    grid: &TimeGrid,
    rng: &mut impl Rng,
) -> Result<(SamplePath<HVector>, SamplePath<HVector>, HSTensor)> {
    let dt = grid.dt();
    if dt > 1.0 / (4.0 * n as f64) + 1e-12 {
        return Err(Error::GridTooCoarse {
            level: n,
            detail: format!("dt = {dt} exceeds a quarter of the mollifier width"),
        });
    }
    let a = spec.operator();
    let an = spec.spatial_mollifier(n)?;
    let smoothed = an.compose(&a); // matrix of S_n S
    let m = spec.space_points;

    let masses = spec.window_masses(n, dt);
    let window = masses.len();
    // weight of an increment that is j steps old: 1 - (mass already seen)
    let mut weights = Vec::with_capacity(window);
    let mut seen = 0.0;
    for mass in &masses {
        seen += *mass;
        weights.push(1.0 - seen);
    }

    let sqrt_dt = dt.sqrt();
    let mut beta = HVector::zeros(m);
    let mut recent: Vec<HVector> = Vec::with_capacity(window); // newest first
    let mut y_path = PathBuilder::new(*grid, HVector::zeros(m));
    let mut z_path = PathBuilder::new(*grid, HVector::zeros(m));
    let mut buf = HVector::zeros(m);
    for _ in 0..grid.steps() {
        let mut dbeta = HVector::zeros(m);
        for c in dbeta.coeffs_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c = sqrt_dt * z;
        }
        beta = beta.add(&dbeta);
        recent.insert(0, dbeta);
        recent.truncate(window);

        // Y = (S_n S)^T beta
        apply_transposed(&smoothed, &beta, &mut buf);
        y_path.push(buf.clone());

        // Z = -(S_n S)^T sum_j weight_j * dbeta[j steps old]
        let mut pending = HVector::zeros(m);
        for (j, inc) in recent.iter().enumerate() {
            if weights[j] != 0.0 {
                pending.axpy(weights[j], inc);
            }
        }
        apply_transposed(&smoothed, &pending, &mut buf);
        z_path.push(buf.scale(-1.0));
    }
    Ok((y_path.finish()?, z_path.finish()?, a))
}

/// `out = B^T x` for the coefficient pairing `Y(e_j) = sum_i B_ij beta_i`.
fn apply_transposed(b: &HSTensor, x: &HVector, out: &mut HVector) {
    let d = b.dim();
    for c in out.coeffs_mut() {
        *c = 0.0;
    }
    for i in 0..d {
        let xi = x.coeffs()[i];
        if xi == 0.0 {
            continue;
        }
        let row = &b.entries()[i * d..(i + 1) * d];
        for (o, e) in out.coeffs_mut().iter_mut().zip(row) {
            *o += xi * e;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{replicate_rng, StreamKind};
    use crate::hilbert::{hs_norm, op_norm, tensor_product};

    fn gaussian_kernel_spec(points: usize) -> MollifiedNoiseSpec {
        MollifiedNoiseSpec::from_kernel_fn(points, 1.0, |x, u| {
            (-(x - u).powi(2) / 0.08).exp()
        })
        .unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero_everything() {
        let spec = MollifiedNoiseSpec::new(8, 1.0, vec![0.0; 64]).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let mut rng = replicate_rng(5, StreamKind::Driver, 0, 0);
        let (y, z, s) = simulate_mollified_noise(&spec, 4, &grid, &mut rng).unwrap();
        assert_eq!(hs_norm(&s), 0.0);
        for k in 0..y.len() {
            assert_eq!(y.value(k).norm(), 0.0);
            assert_eq!(z.value(k).norm(), 0.0);
        }
    }

    #[test]
    fn separable_kernel_yields_rank_one_operator() {
        let m = 12;
        let length = 2.0;
        let phi = |x: f64| (1.5 * x).sin() + 2.0;
        let psi = |u: f64| 0.5 * u - 0.2;
        let spec =
            MollifiedNoiseSpec::from_kernel_fn(m, length, |x, u| phi(x) * psi(u)).unwrap();
        let v = spec.cell_volume();
        // quadrature oracle: coefficients of phi and psi against the
        // indicator basis are sqrt(v) * (values at centers)
        let centers: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * v).collect();
        let u = HVector::new(centers.iter().map(|x| phi(*x) * v.sqrt()).collect()).unwrap();
        let w = HVector::new(centers.iter().map(|x| psi(*x) * v.sqrt()).collect()).unwrap();
        let expected = tensor_product(&u, &w).unwrap();
        assert!(hs_norm(&spec.operator().sub(&expected)) < 1e-12);
    }

    #[test]
    fn spatial_mollifier_is_a_contraction() {
        let spec = gaussian_kernel_spec(16);
        for n in [4usize, 8, 16] {
            let an = spec.spatial_mollifier(n).unwrap();
            assert!(op_norm(&an).unwrap() <= 1.0 + 1e-9, "n = {n}");
        }
    }

    #[test]
    fn rejects_grids_that_do_not_resolve_the_mollifier() {
        let spec = gaussian_kernel_spec(16);
        let coarse = TimeGrid::new(1.0, 16).unwrap(); // dt = 1/16 > 1/(4*8)
        let mut rng = replicate_rng(1, StreamKind::Driver, 0, 0);
        assert!(matches!(
            simulate_mollified_noise(&spec, 8, &coarse, &mut rng),
            Err(Error::GridTooCoarse { .. })
        ));
        // space side: 8 cells of width 1/8 cannot resolve width 1/16
        let small = gaussian_kernel_spec(8);
        let fine = TimeGrid::new(1.0, 256).unwrap();
        assert!(matches!(
            simulate_mollified_noise(&small, 16, &fine, &mut rng),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn deterministic_in_stream() {
        let spec = gaussian_kernel_spec(8);
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let (y1, z1, _) = simulate_mollified_noise(
            &spec,
            4,
            &grid,
            &mut replicate_rng(3, StreamKind::Driver, 1, 2),
        )
        .unwrap();
        let (y2, z2, _) = simulate_mollified_noise(
            &spec,
            4,
            &grid,
            &mut replicate_rng(3, StreamKind::Driver, 1, 2),
        )
        .unwrap();
        assert_eq!(y1, y2);
        assert_eq!(z1, z2);
    }

    /// Martingale-part variance: Var Y_n(e_j, t) = t ||S_n S e_j||^2, and
    /// the remainder obeys E||Z_n(t)||^2 <= ||S_n S||_HS^2 / n.
    #[test]
    fn moment_checks() {
        let spec = gaussian_kernel_spec(8);
        let n = 4;
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let reps = 4000usize;

        let smoothed = spec.spatial_mollifier(n).unwrap().compose(&spec.operator());
        let probe = 3usize;
        let col_sq: f64 = (0..8).map(|i| smoothed.entry(i, probe).powi(2)).sum();

        let mut y_sq = Vec::with_capacity(reps);
        let mut z_sq = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = replicate_rng(17, StreamKind::Driver, 0, rep);
            let (y, z, _) = simulate_mollified_noise(&spec, n, &grid, &mut rng).unwrap();
            y_sq.push(y.terminal().coeffs()[probe].powi(2));
            z_sq.push(z.terminal().norm().powi(2));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                / (v.len() as f64 * (v.len() - 1) as f64))
                .sqrt()
        };
        assert!(
            (mean(&y_sq) - col_sq).abs() <= 3.0 * se(&y_sq),
            "Var Y = {} vs {col_sq}",
            mean(&y_sq)
        );
        let bound = hs_norm(&smoothed).powi(2) / n as f64;
        assert!(
            mean(&z_sq) <= bound * 1.05,
            "E||Z||^2 = {} vs bound {bound}",
            mean(&z_sq)
        );
    }
}
