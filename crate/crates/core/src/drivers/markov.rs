//! Markov-chain drivers and their scaled martingale/telescope splitting.
//!
//! A stationary ergodic chain `ξ_0, ξ_1, ...` on a finite state space
//! induces, for a Hilbert-Schmidt smoothing operator `S`, the pair of
//! `H`-valued step paths
//!
//! ```text
//! Y_n: jump (PSh(ξ_{k-1}) - Sh(ξ_k)) / sqrt(n)  at t = k/n  (martingale)
//! Z_n(t) = (PSh(ξ_{[nt]}) - PSh(ξ_0)) / sqrt(n)             (telescope)
//! ```
//!
//! evaluated coordinatewise over the basis embedding `h = e_1, ..., e_d`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hilbert::{adjoint, apply, HSTensor, HVector};
use crate::path::{PathBuilder, SamplePath};

const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MarkovDriverSpec {
    states: usize,
    /// Row-stochastic transition matrix, row-major.
    transition: Vec<f64>,
    /// Stationary distribution of `transition`.
    stationary: Vec<f64>,
    /// Basis functions evaluated at each state: `embed[u][k] = e_k(u)`.
    embed: Vec<HVector>,
    /// Hilbert-Schmidt smoothing operator in the truncation basis.
    operator: HSTensor,
}

impl MarkovDriverSpec {
    /// Builds a spec, computing the stationary distribution by power
    /// iteration and validating all invariants.
    pub fn new(transition: Vec<Vec<f64>>, embed: Vec<HVector>, operator: HSTensor) -> Result<Self> {
        let states = transition.len();
        if states == 0 || embed.len() != states {
            return Err(Error::DimensionMismatch {
                expected: states.max(1),
                got: embed.len(),
            });
        }
        let mut flat = Vec::with_capacity(states * states);
        for (row, r) in transition.iter().enumerate() {
            if r.len() != states {
                return Err(Error::DimensionMismatch {
                    expected: states,
                    got: r.len(),
                });
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > STATIONARY_TOL || r.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::NonStochastic { row, sum });
            }
            flat.extend_from_slice(r);
        }
        let d = operator.dim();
        for e in &embed {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
        }

        let stationary = stationary_distribution(states, &flat)?;
        Ok(MarkovDriverSpec {
            states,
            transition: flat,
            stationary,
            embed,
            operator,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.transition[x * self.states + y]
    }

    pub fn operator(&self) -> &HSTensor {
        &self.operator
    }

    /// Values of the function `S h` at every state, for `h` given by its
    /// coefficient vector.
    fn smoothed_function(&self, h: &HVector) -> Result<Vec<f64>> {
        let sh = apply(&self.operator, h)?;
        self.embed.iter().map(|e| sh.dot(e)).collect()
    }

    /// One-step averaged values `P f` of a function given at every state.
    fn step_average(&self, f: &[f64]) -> Vec<f64> {
        (0..self.states)
            .map(|x| {
                (0..self.states)
                    .map(|y| self.transition(x, y) * f[y])
                    .sum()
            })
            .collect()
    }

    /// Coordinate vectors `(S e_1(u), ..., S e_d(u))` per state and their
    /// one-step averages; the building blocks of both paths.
    fn coordinate_tables(&self) -> Result<(Vec<HVector>, Vec<HVector>)> {
        let st = adjoint(&self.operator);
        let sfun: Vec<HVector> = self
            .embed
            .iter()
            .map(|e| apply(&st, e))
            .collect::<Result<_>>()?;
        let psfun: Vec<HVector> = (0..self.states)
            .map(|x| {
                let mut acc = HVector::zeros(self.dim());
                for (y, f) in sfun.iter().enumerate() {
                    acc.axpy(self.transition(x, y), f);
                }
                acc
            })
            .collect();
        Ok((sfun, psfun))
    }

    fn sample_stationary(&self, rng: &mut impl Rng) -> usize {
        sample_categorical(&self.stationary, rng)
    }

    fn sample_step(&self, from: usize, rng: &mut impl Rng) -> usize {
        let row = &self.transition[from * self.states..(from + 1) * self.states];
        sample_categorical(row, rng)
    }
}

fn sample_categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn stationary_distribution(states: usize, flat: &[f64]) -> Result<Vec<f64>> {
    // power iteration on the lazy chain (P + I)/2, which shares the
    // stationary vector but converges even for periodic chains
    let mut pi = vec![1.0 / states as f64; states];
    for _ in 0..20_000 {
        let mut next = vec![0.0; states];
        for x in 0..states {
            next[x] += 0.5 * pi[x];
            for y in 0..states {
                next[y] += 0.5 * pi[x] * flat[x * states + y];
            }
        }
        let total: f64 = next.iter().sum();
        for v in &mut next {
            *v /= total;
        }
        let moved = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        if moved < 1e-15 {
            break;
        }
    }
    // validate against the original chain
    let mut image = vec![0.0; states];
    for x in 0..states {
        for y in 0..states {
            image[y] += pi[x] * flat[x * states + y];
        }
    }
    let residual = pi
        .iter()
        .zip(&image)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    Ok(pi)
}

/// Simulates the martingale part and the telescoping part of the scaled
/// chain driver at level `n` over `[0, horizon]`. Both are step paths with
/// jumps at the chain transition times `k/n`; the chain starts from the
/// stationary distribution.
pub fn simulate_markov_driver(
    spec: &MarkovDriverSpec,
    n: usize,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<(SamplePath<HVector>, SamplePath<HVector>)> {
    let cells = horizon * n as f64;
    if (cells - cells.round()).abs() > 1e-9 || cells.round() < 1.0 {
        return Err(Error::GridMisalignment {
            detail: format!("horizon {horizon} is not an integer multiple of 1/{n}"),
        });
    }
    let steps = cells.round() as usize;
    let grid = TimeGrid::new(horizon, steps)?;
    let scale = 1.0 / (n as f64).sqrt();
    let (sfun, psfun) = spec.coordinate_tables()?;

    let d = spec.dim();
    let mut state = spec.sample_stationary(rng);
    let first_state = state;
    let mut y = HVector::zeros(d);
    let mut y_path = PathBuilder::new(grid, y.clone());
    let mut z_path = PathBuilder::new(grid, HVector::zeros(d));
    for _ in 0..steps {
        let prev = state;
        state = spec.sample_step(prev, rng);
        let y_left = y.clone();
        y.axpy(scale, &psfun[prev]);
        y.axpy(-scale, &sfun[state]);
        y_path.push_jump(y_left, y.clone());

        let z = psfun[state].sub(&psfun[first_state]).scale(scale);
        let z_left = psfun[prev].sub(&psfun[first_state]).scale(scale);
        z_path.push_jump(z_left, z);
    }
    Ok((y_path.finish()?, z_path.finish()?))
}

/// Exact limiting covariance of the martingale part:
/// `sum_x pi(x) sum_y P(x,y) (PSh_i(x) - Sh_i(y)) (PSh_j(x) - Sh_j(y))`.
pub fn markov_limit_covariance(
    spec: &MarkovDriverSpec,
    h_i: &HVector,
    h_j: &HVector,
) -> Result<f64> {
    let f_i = spec.smoothed_function(h_i)?;
    let f_j = spec.smoothed_function(h_j)?;
    let pf_i = spec.step_average(&f_i);
    let pf_j = spec.step_average(&f_j);
    let mut c = 0.0;
    for x in 0..spec.states() {
        for y in 0..spec.states() {
            c += spec.stationary[x]
                * spec.transition(x, y)
                * (pf_i[x] - f_i[y])
                * (pf_j[x] - f_j[y]);
        }
    }
    Ok(c)
}
