//! Multivariate polynomials with rational coefficients.
//!
//! Equivariant parameters enter as variables `h_1, ..., h_r` with
//! `h_j = α∨_j(h)`. Exponent vectors are ordered lexicographically,
//! so `h_1` is the leading variable.

use crate::error::{Error, Result};
use crate::linalg::{rat, rat_to_f64};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, BigRational::one())
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, BigRational::one());
        p
    }

    /// The linear form `Σ c_j h_j`.
    pub fn linear(coeffs: &[i64]) -> Self {
        let n = coeffs.len();
        let mut p = Poly::zero(n);
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                let mut e = vec![0; n];
                e[j] = 1;
                p.terms.insert(e, rat(c));
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Whether every term has total degree `d`.
    pub fn is_homogeneous_of(&self, d: u32) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() == d)
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&vec![0; self.nvars])
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.terms.keys().all(|e| e.iter().all(|&x| x == 0)) {
            Some(self.constant_term())
        } else {
            None
        }
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    fn leading(&self) -> Option<(&Vec<u32>, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Exact division; fails when the remainder is nonzero.
    pub fn div_exact(&self, d: &Poly) -> Result<Poly> {
        let (lde, ldc) = d.leading().ok_or(Error::InexactDivision)?;
        let (lde, ldc) = (lde.clone(), ldc.clone());
        let mut rem = self.clone();
        let mut quo = Poly::zero(self.nvars);
        while let Some((e, c)) = rem.leading() {
            if !e.iter().zip(&lde).all(|(a, b)| a >= b) {
                return Err(Error::InexactDivision);
            }
            let qe: Vec<u32> = e.iter().zip(&lde).map(|(a, b)| a - b).collect();
            let qc = c / &ldc;
            let mut t = Poly::zero(self.nvars);
            t.terms.insert(qe.clone(), qc.clone());
            rem = &rem - &(&t * d);
            quo.add_term(qe, qc);
        }
        Ok(quo)
    }

    pub fn eval_rat(&self, h: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in h.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, h: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                rat_to_f64(c)
                    * h.iter()
                        .zip(e)
                        .map(|(x, &k)| x.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn eval_c64(&self, h: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = Complex64::new(rat_to_f64(c), 0.0);
                for (x, &k) in h.iter().zip(e) {
                    t *= x.powi(k as i32);
                }
                t
            })
            .sum()
    }

    /// Substitutes `h = 0`.
    pub fn at_zero(&self) -> BigRational {
        self.constant_term()
    }
}

impl<'a> std::ops::Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl<'a> std::ops::Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }
}

impl<'a> std::ops::Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut p = Poly::zero(self.nvars.max(o.nvars));
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&rat(-1))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*h{}", j + 1)?,
                    _ => write!(f, "*h{}^{}", j + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

/// Product of linear forms, each given by integer coefficients.
pub fn product_of_linear(forms: &[Vec<i64>], nvars: usize) -> Poly {
    forms
        .iter()
        .fold(Poly::one(nvars), |acc, f| &acc * &Poly::linear(f))
}
