//! Finite-truncation linear algebra for a separable Hilbert space.
//!
//! All state lives in the span of a fixed orthonormal basis `e_1, ..., e_d`.
//! [`HVector`] stores the coefficient vector of an element of the space,
//! [`HSTensor`] the `d x d` coefficient array of an element of the
//! Hilbert-Schmidt tensor square (equivalently, a Hilbert-Schmidt operator
//! acting as `(u ⊗ v)(y) = <v, y> u`). Types are value-semantic and
//! immutable from the outside; everything is plain dense `f64` storage.

use crate::error::{Error, Result};

/// Dimension of the truncated orthonormal basis shared by a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    dim: usize,
}

impl TruncationSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(TruncationSpec { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Wraps coefficients, enforcing this truncation's dimension.
    pub fn vector(&self, coeffs: Vec<f64>) -> Result<HVector> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coeffs.len(),
            });
        }
        HVector::new(coeffs)
    }

    pub fn zero_vector(&self) -> HVector {
        HVector::zeros(self.dim)
    }

    pub fn basis_vector(&self, j: usize) -> HVector {
        HVector::basis(self.dim, j)
    }

    /// Wraps a row-major entry array, enforcing this truncation's
    /// dimension.
    pub fn tensor(&self, entries: Vec<f64>) -> Result<HSTensor> {
        HSTensor::new(self.dim, entries)
    }

    pub fn zero_tensor(&self) -> HSTensor {
        HSTensor::zeros(self.dim)
    }
}

/// Coefficient vector of a Hilbert-space element in the truncation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HVector {
    coeffs: Vec<f64>,
}

impl HVector {
    /// Wraps a coefficient vector, rejecting NaN/infinite entries.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite { context: "HVector" });
        }
        Ok(HVector { coeffs })
    }

    pub fn zeros(dim: usize) -> Self {
        HVector {
            coeffs: vec![0.0; dim],
        }
    }

    /// The j-th basis vector `e_j` (0-indexed).
    pub fn basis(dim: usize, j: usize) -> Self {
        assert!(j < dim, "basis index out of range");
        let mut coeffs = vec![0.0; dim];
        coeffs[j] = 1.0;
        HVector { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn dot(&self, other: &HVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &HVector) -> HVector {
        debug_assert_eq!(self.dim(), other.dim());
        HVector {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &HVector) -> HVector {
        debug_assert_eq!(self.dim(), other.dim());
        HVector {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> HVector {
        HVector {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &HVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
    }
}

/// `d x d` coefficient array of an element of the Hilbert-Schmidt tensor
/// square; entry `(i, j)` is the coefficient of `e_i ⊗ e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSTensor {
    dim: usize,
    entries: Vec<f64>, // row-major
}

impl HSTensor {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::NonFinite { context: "HSTensor" });
        }
        Ok(HSTensor { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        HSTensor {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = HSTensor::zeros(dim);
        for i in 0..dim {
            t.entries[i * dim + i] = 1.0;
        }
        t
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut t = HSTensor::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            t.entries[i * diag.len() + i] = *v;
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn add(&self, other: &HSTensor) -> HSTensor {
        debug_assert_eq!(self.dim, other.dim);
        HSTensor {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &HSTensor) -> HSTensor {
        debug_assert_eq!(self.dim, other.dim);
        HSTensor {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> HSTensor {
        HSTensor {
            dim: self.dim,
            entries: self.entries.iter().map(|e| a * e).collect(),
        }
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &HSTensor) {
        debug_assert_eq!(self.dim, other.dim);
        for (s, o) in self.entries.iter_mut().zip(&other.entries) {
            *s += a * o;
        }
    }

    /// Rank-one update `self += a * (u ⊗ v)` without allocating the tensor.
    pub fn add_outer(&mut self, a: f64, u: &HVector, v: &HVector) {
        debug_assert_eq!(self.dim, u.dim());
        debug_assert_eq!(self.dim, v.dim());
        let d = self.dim;
        for i in 0..d {
            let ui = a * u.coeffs()[i];
            let row = &mut self.entries[i * d..(i + 1) * d];
            for (e, vj) in row.iter_mut().zip(v.coeffs()) {
                *e += ui * vj;
            }
        }
    }

    /// Matrix product `self * other` (operator composition).
    pub fn compose(&self, other: &HSTensor) -> HSTensor {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = HSTensor::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.entries[i * d + j] += a * other.entries[k * d + j];
                }
            }
        }
        out
    }
}

/// `u ⊗ v`, the rank-one tensor with entries `u_i * v_j`.
pub fn tensor_product(u: &HVector, v: &HVector) -> Result<HSTensor> {
    check_dim(u.dim(), v.dim())?;
    let mut t = HSTensor::zeros(u.dim());
    t.add_outer(1.0, u, v);
    Ok(t)
}

/// Action of a tensor as an operator: `(A y)_i = sum_j A_ij y_j`, so that
/// `(u ⊗ v)(y) = <v, y> u`.
pub fn apply(a: &HSTensor, y: &HVector) -> Result<HVector> {
    check_dim(a.dim(), y.dim())?;
    let d = a.dim();
    let mut out = HVector::zeros(d);
    for i in 0..d {
        let row = &a.entries()[i * d..(i + 1) * d];
        out.coeffs_mut()[i] = row.iter().zip(y.coeffs()).map(|(e, c)| e * c).sum();
    }
    Ok(out)
}

/// Operator adjoint; on coefficients this is the transpose, so
/// `adjoint(u ⊗ v) = v ⊗ u`.
pub fn adjoint(a: &HSTensor) -> HSTensor {
    let d = a.dim();
    let mut out = HSTensor::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out.set_entry(j, i, a.entry(i, j));
        }
    }
    out
}

pub fn trace(a: &HSTensor) -> Result<f64> {
    let d = a.dim();
    let t: f64 = (0..d).map(|i| a.entry(i, i)).sum();
    if !t.is_finite() {
        return Err(Error::NonFinite { context: "trace" });
    }
    Ok(t)
}

/// Entrywise inner product on the tensor square.
pub fn hs_inner(a: &HSTensor, b: &HSTensor) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let s: f64 = a
        .entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x * y)
        .sum();
    if !s.is_finite() {
        return Err(Error::NonFinite { context: "hs_inner" });
    }
    Ok(s)
}

pub fn hs_norm(a: &HSTensor) -> f64 {
    a.entries().iter().map(|e| e * e).sum::<f64>().sqrt()
}

const OP_NORM_TOL: f64 = 1e-8;

/// Largest singular value, via power iteration on `A* A` with a
/// deterministic all-ones start vector; at most `10 * d` iterations,
/// relative tolerance 1e-8.
pub fn op_norm(a: &HSTensor) -> Result<f64> {
    if !a.entries().iter().all(|e| e.is_finite()) {
        return Err(Error::NonFinite { context: "op_norm" });
    }
    let d = a.dim();
    let at = adjoint(a);
    let mut v = HVector::new(vec![1.0 / (d as f64).sqrt(); d]).expect("finite");
    let mut sigma = 0.0_f64;
    for _ in 0..10 * d {
        // w = A* A v, one singular-power step
        let av = apply(a, &v)?;
        let w = apply(&at, &av)?;
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = norm.sqrt();
        let done = (next - sigma).abs() <= OP_NORM_TOL * next.max(1.0);
        sigma = next;
        v = w.scale(1.0 / norm);
        if done {
            break;
        }
    }
    Ok(sigma)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hv(c: &[f64]) -> HVector {
        HVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn truncation_spec_enforces_shared_dimension() {
        assert!(TruncationSpec::new(0).is_err());
        let spec = TruncationSpec::new(3).unwrap();
        assert_eq!(spec.dim(), 3);
        assert!(spec.vector(vec![1.0, 2.0]).is_err());
        let v = spec.vector(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.dim(), 3);
        assert_eq!(spec.basis_vector(1).coeffs(), &[0.0, 1.0, 0.0]);
        assert!(spec.tensor(vec![0.0; 4]).is_err());
        assert_eq!(spec.zero_tensor().dim(), 3);
        assert_eq!(spec.zero_vector().dim(), 3);
    }

    #[test]
    fn tensor_product_on_basis_vectors() {
        let u = hv(&[1.0, 0.0]);
        let v = hv(&[0.0, 1.0]);
        let t = tensor_product(&u, &v).unwrap();
        assert_eq!(t.entries(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn tensor_product_with_zero_is_zero() {
        let u = hv(&[2.0, -1.0, 0.5]);
        let z = HVector::zeros(3);
        let t = tensor_product(&u, &z).unwrap();
        assert!(t.entries().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn trace_of_outer_product_is_inner_product() {
        let u = hv(&[1.0, 2.0]);
        let v = hv(&[3.0, 4.0]);
        let t = tensor_product(&u, &v).unwrap();
        // independent oracle: direct dot product
        let dot = 1.0 * 3.0 + 2.0 * 4.0;
        assert_eq!(dot, 11.0);
        assert!((trace(&t).unwrap() - dot).abs() < 1e-12);
    }

    #[test]
    fn tensor_product_dimension_mismatch() {
        let u = hv(&[1.0, 2.0]);
        let v = hv(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            tensor_product(&u, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_action_formula() {
        // (e1 ⊗ e2)([0, 2]) = <e2, [0,2]> e1 = [2, 0]
        let t = tensor_product(&HVector::basis(2, 0), &HVector::basis(2, 1)).unwrap();
        let y = hv(&[0.0, 2.0]);
        let out = apply(&t, &y).unwrap();
        assert_eq!(out.coeffs(), &[2.0, 0.0]);
    }

    #[test]
    fn apply_identity_and_zero() {
        let y = hv(&[1.5, -2.0, 3.0]);
        let id = HSTensor::identity(3);
        assert_eq!(apply(&id, &y).unwrap(), y);
        let z = HSTensor::zeros(3);
        assert_eq!(apply(&z, &y).unwrap(), HVector::zeros(3));
    }

    #[test]
    fn adjoint_swaps_outer_product_and_is_involutive() {
        let u = hv(&[1.0, -2.0, 0.25]);
        let v = hv(&[0.5, 3.0, -1.0]);
        let t = tensor_product(&u, &v).unwrap();
        assert_eq!(adjoint(&t), tensor_product(&v, &u).unwrap());
        assert_eq!(adjoint(&adjoint(&t)), t);
    }

    #[test]
    fn adjoint_of_symmetric_is_identity_map() {
        let mut s = HSTensor::zeros(2);
        s.set_entry(0, 0, 1.0);
        s.set_entry(0, 1, 2.0);
        s.set_entry(1, 0, 2.0);
        s.set_entry(1, 1, -3.0);
        assert_eq!(adjoint(&s), s);
    }

    #[test]
    fn trace_of_identity() {
        assert_eq!(trace(&HSTensor::identity(3)).unwrap(), 3.0);
    }

    #[test]
    fn hs_norm_of_outer_product() {
        // entrywise-sum oracle: ||u ⊗ v||^2 = sum_{ij} u_i^2 v_j^2 = ||u||^2 ||v||^2
        let u = hv(&[3.0, 0.0]);
        let v = hv(&[0.0, 4.0]);
        let t = tensor_product(&u, &v).unwrap();
        let direct: f64 = t.entries().iter().map(|e| e * e).sum::<f64>().sqrt();
        assert!((direct - 12.0).abs() < 1e-12);
        assert!((hs_norm(&t) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let t = HSTensor::from_diagonal(&[2.0, 1.0]);
        assert!((op_norm(&t).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn op_norm_rejects_non_finite() {
        let t = HSTensor {
            dim: 2,
            entries: vec![1.0, f64::NAN, 0.0, 1.0],
        };
        assert!(matches!(op_norm(&t), Err(Error::NonFinite { .. })));
    }

    proptest! {
        #[test]
        fn trace_outer_equals_dot(u in proptest::collection::vec(-10.0..10.0f64, 1..8)) {
            let v: Vec<f64> = u.iter().map(|x| x * 0.7 - 1.0).collect();
            let uv = hv(&u);
            let vv = hv(&v);
            let t = tensor_product(&uv, &vv).unwrap();
            let dot = uv.dot(&vv).unwrap();
            let scale = dot.abs().max(1.0);
            prop_assert!((trace(&t).unwrap() - dot).abs() <= 1e-12 * scale);
        }

        #[test]
        fn op_norm_bounded_by_hs_norm(entries in proptest::collection::vec(-5.0..5.0f64, 9..=9)) {
            let t = HSTensor::new(3, entries).unwrap();
            prop_assert!(op_norm(&t).unwrap() <= hs_norm(&t) + 1e-8);
        }

        #[test]
        fn apply_outer_is_scaled_copy(
            u in proptest::collection::vec(-3.0..3.0f64, 4..=4),
            v in proptest::collection::vec(-3.0..3.0f64, 4..=4),
            y in proptest::collection::vec(-3.0..3.0f64, 4..=4),
        ) {
            let (u, v, y) = (hv(&u), hv(&v), hv(&y));
            let t = tensor_product(&u, &v).unwrap();
            let lhs = apply(&t, &y).unwrap();
            let rhs = u.scale(v.dot(&y).unwrap());
            for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn adjoint_is_hs_isometry(entries in proptest::collection::vec(-5.0..5.0f64, 16..=16)) {
            let t = HSTensor::new(4, entries).unwrap();
            prop_assert!((hs_norm(&adjoint(&t)) - hs_norm(&t)).abs() < 1e-12);
        }
    }
}
