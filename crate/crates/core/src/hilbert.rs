//! The Hilbert space `K^n` and its bounded operators.
//!
//! Scalars are always stored as complex numbers; a [`Field`] tag records
//! whether a context is real, in which case every imaginary part must vanish.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A vector of `K^n`.
pub type Vector = DVector<C64>;

/// Scalar field of a context, ordered so that `Real < Complex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

impl Field {
    pub fn admits_scalar(self, z: C64) -> bool {
        match self {
            Field::Real => z.im == 0.0,
            Field::Complex => true,
        }
    }

    pub fn admits(self, v: &Vector) -> bool {
        v.iter().all(|z| self.admits_scalar(*z))
    }

    pub(crate) fn check(self, v: &Vector, what: &str) -> Result<()> {
        if self.admits(v) {
            Ok(())
        } else {
            Err(Error::FieldMismatch(format!(
                "{what} has complex entries in a real context"
            )))
        }
    }

    pub(crate) fn check_same(self, other: Field) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FieldMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Builds a vector from real coordinates.
pub fn real_vector(xs: &[f64]) -> Vector {
    Vector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn zero_vector(n: usize) -> Vector {
    Vector::zeros(n)
}

/// `(x, y) = Σ x_i · conj(y_i)`: linear in `x`, conjugate-linear in `y`.
pub fn scalar_product(x: &Vector, y: &Vector) -> Result<C64> {
    check_dim(x.len(), y.len())?;
    Ok(x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum())
}

pub(crate) fn dot(x: &Vector, y: &Vector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Euclidean norm.
pub fn norm(x: &Vector) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// An element of `L(K^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    m: DMatrix<C64>,
}

impl MatrixOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "operator must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(Self { m })
    }

    /// Row-major complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("operator rows must form a square matrix".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Row-major real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// `a · I`.
    pub fn scalar(n: usize, a: C64) -> Self {
        Self {
            m: DMatrix::identity(n, n) * a,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.m * x)
    }

    /// Unchecked application for internal loops where dimensions were
    /// validated at construction.
    pub(crate) fn mul_vec(&self, x: &Vector) -> Vector {
        &self.m * x
    }

    pub fn compose(&self, other: &MatrixOperator) -> Result<MatrixOperator> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    pub fn scale(&self, a: C64) -> MatrixOperator {
        Self { m: &self.m * a }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> MatrixOperator {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.m
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &MatrixOperator) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `exp(tA)` by scaling and squaring of the truncated Taylor series.
    ///
    /// The argument is scaled so that `‖tA‖_F / 2^k ≤ 1/2`, twenty series
    /// terms are summed, and the result is squared `k` times.
    pub fn matrix_exp(&self, t: f64) -> MatrixOperator {
        const TERMS: usize = 20;
        let n = self.dim();
        let scaled = &self.m * C64::new(t, 0.0);
        let size = scaled.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut squarings = 0u32;
        let mut s = size;
        while s > 0.5 {
            s *= 0.5;
            squarings += 1;
        }
        let b = scaled * C64::new(0.5f64.powi(squarings as i32), 0.0);

        // Horner form of Σ_{k≤TERMS} B^k / k!
        let eye = DMatrix::<C64>::identity(n, n);
        let mut acc = eye.clone();
        for k in (1..=TERMS).rev() {
            acc = &eye + (&b * acc) * C64::new(1.0 / k as f64, 0.0);
        }
        for _ in 0..squarings {
            acc = &acc * &acc;
        }
        MatrixOperator { m: acc }
    }
}

impl Add for &MatrixOperator {
    type Output = MatrixOperator;

    fn add(self, rhs: &MatrixOperator) -> MatrixOperator {
        MatrixOperator { m: &self.m + &rhs.m }
    }
}

impl Sub for &MatrixOperator {
    type Output = MatrixOperator;

    fn sub(self, rhs: &MatrixOperator) -> MatrixOperator {
        MatrixOperator { m: &self.m - &rhs.m }
    }
}

impl Mul for &MatrixOperator {
    type Output = MatrixOperator;

    fn mul(self, rhs: &MatrixOperator) -> MatrixOperator {
        MatrixOperator { m: &self.m * &rhs.m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p1() -> MatrixOperator {
        MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap()
    }

    #[test]
    fn scalar_product_examples() {
        let e1 = real_vector(&[1.0, 0.0]);
        let e2 = real_vector(&[0.0, 1.0]);
        assert_eq!(scalar_product(&e1, &e2).unwrap(), c(0.0, 0.0));
        let ones = real_vector(&[1.0, 1.0]);
        assert_eq!(scalar_product(&ones, &ones).unwrap(), c(2.0, 0.0));
        let x = Vector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0)]);
        let y = Vector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(scalar_product(&x, &y).unwrap(), c(0.0, 1.0));
        // conjugation lands on the second slot
        assert_eq!(scalar_product(&y, &x).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn scalar_product_dimension_mismatch() {
        let err = scalar_product(&real_vector(&[1.0]), &real_vector(&[1.0, 2.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norm_of_p1() {
        let expected = 1.0 + 2f64.sqrt();
        assert!((p1().operator_norm() - expected).abs() <= 1e-12 * expected);
        let p2 = MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
        assert!((p2.operator_norm() - expected).abs() <= 1e-12 * expected);
        assert!((MatrixOperator::identity(3).operator_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let sym = MatrixOperator::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(sym.adjoint(), sym);
        let expected = MatrixOperator::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p1().adjoint(), expected);
        let r = MatrixOperator::from_rows(&[vec![c(1.0, 2.0), c(0.5, -1.0)], vec![c(-3.0, 0.25), c(0.0, 1.0)]])
            .unwrap();
        let x = Vector::from_vec(vec![c(0.3, -0.7), c(1.1, 0.2)]);
        let y = Vector::from_vec(vec![c(-0.4, 0.9), c(0.6, 0.6)]);
        let lhs = scalar_product(&r.apply(&x).unwrap(), &y).unwrap();
        let rhs = scalar_product(&x, &r.adjoint().apply(&y).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-14);
    }

    #[test]
    fn exp_examples() {
        let a = p1();
        assert!(a.matrix_exp(0.0).max_abs_diff(&MatrixOperator::identity(2)) == 0.0);

        let minus_i = MatrixOperator::scalar(2, c(-1.0, 0.0));
        for t in [0.0, 0.5, 1.0, 3.0] {
            let e = minus_i.matrix_exp(t);
            let expected = MatrixOperator::scalar(2, c((-t).exp(), 0.0));
            assert!(e.max_abs_diff(&expected) <= 1e-12 * (-t).exp());
            assert!((e.operator_norm() - (-t).exp()).abs() <= 1e-12 * (-t).exp());
        }

        let nil = MatrixOperator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let expected = MatrixOperator::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(nil.matrix_exp(1.0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn exp_of_rotation_generator() {
        // exp(t[[0,-1],[1,0]]) is the rotation by t
        let g = MatrixOperator::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let t = 2.5f64;
        let r = g.matrix_exp(t);
        let expected =
            MatrixOperator::from_real_rows(&[vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]).unwrap();
        assert!(r.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn rejects_non_square() {
        assert!(MatrixOperator::from_real_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(MatrixOperator::from_real_rows(&[]).is_err());
    }

    #[test]
    fn field_tags() {
        assert!(Field::Real.admits(&real_vector(&[1.0, 2.0])));
        assert!(!Field::Real.admits(&Vector::from_vec(vec![c(0.0, 1.0)])));
        assert!(Field::Complex.admits(&Vector::from_vec(vec![c(0.0, 1.0)])));
    }
}
