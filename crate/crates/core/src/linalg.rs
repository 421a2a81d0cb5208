//! Small dense linear algebra over exact and floating scalars.
//!
//! The matrices here are tiny (a few dozen rows at most), so plain
//! `Vec<Vec<T>>` storage and Gaussian elimination are enough.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A field we can run elimination over.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    /// Size used for pivot selection.
    fn magnitude(&self) -> f64;
    fn is_zero(&self) -> bool {
        self.magnitude() == 0.0
    }
    fn to_c64(&self) -> Complex64;
    /// Whether zero tests are exact rather than up to roundoff.
    const EXACT: bool = false;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl Field for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(self), 0.0)
    }
}

/// Rational from an integer.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational `p/q`.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Dense row-major matrix.
pub type Mat<T> = Vec<Vec<T>>;

pub fn zeros<T: Field>(rows: usize, cols: usize) -> Mat<T> {
    vec![vec![T::zero(); cols]; rows]
}

pub fn identity<T: Field>(n: usize) -> Mat<T> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_mul<T: Field>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out: Mat<T> = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = out[i][j].clone() + a[i][l].clone() * b[l][j].clone();
            }
        }
    }
    out
}

pub fn mat_vec<T: Field>(a: &Mat<T>, x: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(T::zero(), |acc, (r, v)| acc + r.clone() * v.clone())
        })
        .collect()
}

pub fn mat_add<T: Field>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.clone() + y.clone()).collect())
        .collect()
}

pub fn mat_sub<T: Field>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.clone() - y.clone()).collect())
        .collect()
}

pub fn mat_scale<T: Field>(a: &Mat<T>, s: &T) -> Mat<T> {
    a.iter()
        .map(|r| r.iter().map(|x| x.clone() * s.clone()).collect())
        .collect()
}

pub fn transpose<T: Field>(a: &Mat<T>) -> Mat<T> {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Solves `a x = b` for a matrix right-hand side with partial pivoting.
pub fn solve_mat<T: Field>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    let n = a.len();
    let m = if b.is_empty() { 0 } else { b[0].len() };
    let mut aug: Mat<T> = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().chain(rb.iter()).cloned().collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                aug[i][col]
                    .magnitude()
                    .partial_cmp(&aug[j][col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or(Error::Singular(col))?;
        if aug[piv][col].is_zero() {
            return Err(Error::Singular(col));
        }
        aug.swap(col, piv);
        let p = aug[col][col].clone();
        for j in col..n + m {
            aug[col][j] = aug[col][j].clone() / p.clone();
        }
        for i in 0..n {
            if i == col || aug[i][col].is_zero() {
                continue;
            }
            let f = aug[i][col].clone();
            for j in col..n + m {
                aug[i][j] = aug[i][j].clone() - f.clone() * aug[col][j].clone();
            }
        }
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn solve_vec<T: Field>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let bm: Mat<T> = b.iter().map(|x| vec![x.clone()]).collect();
    Ok(solve_mat(a, &bm)?.into_iter().map(|r| r[0].clone()).collect())
}

pub fn inverse<T: Field>(a: &Mat<T>) -> Result<Mat<T>> {
    solve_mat(a, &identity(a.len()))
}

pub fn to_nalgebra(a: &Mat<f64>) -> nalgebra::DMatrix<f64> {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    nalgebra::DMatrix::from_fn(n, m, |i, j| a[i][j])
}

pub fn to_nalgebra_c(a: &Mat<Complex64>) -> nalgebra::DMatrix<Complex64> {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    nalgebra::DMatrix::from_fn(n, m, |i, j| a[i][j])
}

/// Frobenius norm of a floating matrix.
pub fn frob_norm(a: &Mat<f64>) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rat_mat_to_f64(a: &Mat<BigRational>) -> Mat<f64> {
    a.iter().map(|r| r.iter().map(rat_to_f64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_round_trip() {
        let a = vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(inverse(&a), Err(Error::Singular(1))));
    }
}
