//! The Rietsch mirror in the type A matrix realization.
//!
//! `G = PGL_{r+1}`: matrices are representatives modulo scalars, with
//! `x_i(a) = 1 + aE_{i,i+1}`, `y_i(a) = 1 + aE_{i+1,i}` and
//! `α∨_i(a) = diag(…, a, a⁻¹, …)` at positions `i, i+1`. Torus elements are
//! stored as diagonals and read through `α_i(t) = t_i / t_{i+1}`.

use crate::error::{Error, Result};
use crate::flatsections::{mir_inverse_on_c1_span, FlatSection, Provenance};
use crate::gammaclass::{gamma, linear_value};
use crate::linalg::{identity, inverse, mat_mul, rat, rat_to_f64, solve_vec, to_nalgebra, transpose, zeros, Field, Mat};
use crate::lie::RootSystem;
use crate::qh::QConnection;
use crate::schubert::FlagVariety;
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

/// Relative pivot size below which a floating decomposition is rejected.
pub const PIVOT_TOL: f64 = 1e-13;

/// Largest `ℓ` for which the Laurent form of the chart is reconstructed.
pub const LAURENT_MAX_ELL: usize = 4;

/// A group element as a matrix representative.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<T: Field> {
    pub m: Mat<T>,
}

impl<T: Field> GroupElement<T> {
    pub fn identity(n: usize) -> Self {
        GroupElement { m: identity(n) }
    }

    pub fn size(&self) -> usize {
        self.m.len()
    }

    pub fn mul(&self, o: &Self) -> Self {
        GroupElement { m: mat_mul(&self.m, &o.m) }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(GroupElement { m: inverse(&self.m)? })
    }

    /// `x_i(a)`.
    pub fn x(n: usize, i: usize, a: T) -> Self {
        let mut m = identity(n);
        m[i][i + 1] = a;
        GroupElement { m }
    }

    /// `y_i(a)`.
    pub fn y(n: usize, i: usize, a: T) -> Self {
        let mut m = identity(n);
        m[i + 1][i] = a;
        GroupElement { m }
    }

    /// `α∨_i(a)`.
    pub fn coroot(n: usize, i: usize, a: T) -> Self {
        let mut m = identity(n);
        m[i + 1][i + 1] = T::one() / a.clone();
        m[i][i] = a;
        GroupElement { m }
    }

    pub fn torus(diag: &[T]) -> Self {
        let mut m = zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[i][i] = d.clone();
        }
        GroupElement { m }
    }

    /// `s̄_i = x_i(−1) y_i(1) x_i(−1)`.
    pub fn sbar(n: usize, i: usize) -> Self {
        let xm = Self::x(n, i, T::from_i64(-1));
        xm.mul(&Self::y(n, i, T::one())).mul(&xm)
    }

    /// `w̄ = s̄_{i1} ⋯ s̄_{im}` along a word.
    pub fn wbar(n: usize, word: &[usize]) -> Self {
        word.iter().fold(Self::identity(n), |acc, &i| acc.mul(&Self::sbar(n, i)))
    }

    /// `ŵ = s̄_{i1}⁻¹ ⋯ s̄_{im}⁻¹`, the lift with `ι(ŵ⁻¹) = w̄`.
    pub fn wbar_hat(n: usize, word: &[usize]) -> Self {
        word.iter().fold(Self::identity(n), |acc, &i| acc.mul(&GroupElement { m: transpose(&Self::sbar(n, i).m) }))
    }

    /// The anti-automorphism `ι`: `g ↦ D g⁻¹ D` with `D = diag(1, −1, 1, …)`.
    pub fn iota(&self) -> Result<Self> {
        let mut m = inverse(&self.m)?;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if (i + j) % 2 == 1 {
                    *v = -v.clone();
                }
            }
        }
        Ok(GroupElement { m })
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.size()).map(|i| self.m[i][i].clone()).collect()
    }

    /// The representative with positive leading diagonal entry.
    pub fn sign_normalized(&self) -> Self {
        let lead = self.m.iter().enumerate().map(|(i, r)| r[i].to_c64().re).find(|v| *v != 0.0);
        if lead.is_some_and(|v| v < 0.0) {
            GroupElement { m: self.m.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect() }
        } else {
            self.clone()
        }
    }
}

impl GroupElement<f64> {
    /// Equality in the adjoint group: `self = c·o` for a scalar `c`.
    pub fn eq_mod_scalar(&self, o: &Self, tol: f64) -> bool {
        let (mut best, mut p) = (0.0, (0, 0));
        for (i, r) in o.m.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    p = (i, j);
                }
            }
        }
        if best == 0.0 {
            return false;
        }
        let c = self.m[p.0][p.1] / o.m[p.0][p.1];
        let scale = self.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        self.m.iter().flatten().zip(o.m.iter().flatten()).all(|(a, b)| (a - c * b).abs() <= tol * scale)
    }

    /// Largest entry of `self − c·o` relative to the size of `self`, for the best scalar `c`.
    pub fn distance_mod_scalar(&self, o: &Self) -> f64 {
        let dot: f64 = self.m.iter().flatten().zip(o.m.iter().flatten()).map(|(a, b)| a * b).sum();
        let nn: f64 = o.m.iter().flatten().map(|b| b * b).sum();
        let c = dot / nn;
        let scale = self.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        self.m.iter().flatten().zip(o.m.iter().flatten()).fold(0.0f64, |a, (x, y)| a.max((x - c * y).abs())) / scale
    }

    /// The determinant-one representative, when the determinant is positive or `n` is odd.
    pub fn det_normalized(&self) -> Result<Self> {
        let n = self.size();
        let d = to_nalgebra(&self.m).determinant();
        if d == 0.0 || (d < 0.0 && n % 2 == 0) {
            return Err(Error::Domain(format!("determinant {d} has no real {n}-th root")));
        }
        let c = d.signum() * d.abs().powf(-1.0 / n as f64);
        Ok(GroupElement { m: self.m.iter().map(|r| r.iter().map(|v| v * c).collect()).collect() })
    }

    pub fn from_exact(g: &GroupElement<BigRational>) -> Self {
        GroupElement { m: g.m.iter().map(|r| r.iter().map(rat_to_f64).collect()).collect() }
    }
}

fn pivot_ok<T: Field>(p: &T, scale: f64) -> bool {
    if T::EXACT {
        !p.is_zero()
    } else {
        p.magnitude() > PIVOT_TOL * scale
    }
}

/// `g = L·diag(d)·U` with `L` unipotent lower and `U` unipotent upper.
pub fn ldu<T: Field>(g: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let n = g.len();
    let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.magnitude())).max(f64::MIN_POSITIVE);
    let mut a = g.clone();
    let mut l: Mat<T> = identity(n);
    let mut u: Mat<T> = identity(n);
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        let p = a[k][k].clone();
        if !pivot_ok(&p, scale) {
            return Err(Error::NotInCell(format!("leading principal minor of size {} vanishes", k + 1)));
        }
        for i in k + 1..n {
            l[i][k] = a[i][k].clone() / p.clone();
            u[k][i] = a[k][i].clone() / p.clone();
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = a[i][j].clone() - l[i][k].clone() * a[k][j].clone();
            }
        }
        d.push(p);
    }
    Ok((l, d, u))
}

fn flip<T: Field>(m: &Mat<T>) -> Mat<T> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[n - 1 - i][n - 1 - j].clone()).collect()).collect()
}

/// `g = u₊·t·u₋` with `u₊ ∈ U`, `t ∈ T`, `u₋ ∈ U⁻`.
pub fn gauss_decompose<T: Field>(g: &GroupElement<T>) -> Result<(GroupElement<T>, Vec<T>, GroupElement<T>)> {
    let (l, mut d, u) = ldu(&flip(&g.m))?;
    d.reverse();
    Ok((GroupElement { m: flip(&l) }, d, GroupElement { m: flip(&u) }))
}

/// `x = u₁·t·w̄_P·u₂`.
#[derive(Clone, Debug)]
pub struct CrystalDecomposition<T: Field> {
    pub u1: GroupElement<T>,
    /// Diagonal of `t = π(x)`.
    pub t: Vec<T>,
    pub u2: GroupElement<T>,
}

/// A point of the crystal with cached `π` and `γ` diagonals.
#[derive(Clone, Debug)]
pub struct CrystalPoint {
    pub x: GroupElement<f64>,
    pub t: Vec<f64>,
    pub t0: Vec<f64>,
}

/// Chart coordinates `(t, a)` of `Θ_i`.
#[derive(Clone, Debug, Serialize)]
pub struct ChartPoint {
    /// `α_i(t)` for `i ∈ I∖I_P`.
    pub q: Vec<f64>,
    pub a: Vec<f64>,
    /// Reduced word of `w_P`, 0-based.
    pub word: Vec<usize>,
}

/// `χ(u) = Σ_i u_{i,i+1}`.
pub fn chi<T: Field>(u: &GroupElement<T>) -> T {
    (0..u.size() - 1).fold(T::zero(), |acc, i| acc + u.m[i][i + 1].clone())
}

/// `α_i` of a diagonal.
pub fn alpha<T: Field>(diag: &[T], i: usize) -> T {
    diag[i].clone() / diag[i + 1].clone()
}

/// A Laurent polynomial with rational coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentPoly {
    pub nvars: usize,
    /// `(exponents, coefficient)` with coefficients as `p/q` strings for reports.
    #[serde(serialize_with = "ser_terms")]
    pub terms: Vec<(Vec<i32>, BigRational)>,
}

fn ser_terms<S: serde::Serializer>(t: &[(Vec<i32>, BigRational)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (e, c) in t {
        seq.serialize_element(&(e, c.to_string()))?;
    }
    seq.end()
}

impl LaurentPoly {
    pub fn eval(&self, a: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rat_to_f64(c) * e.iter().zip(a).map(|(&k, x)| x.powi(k)).product::<f64>())
            .sum()
    }

    pub fn eval_rat(&self, a: &[BigRational]) -> BigRational {
        self.terms.iter().fold(<BigRational as Zero>::zero(), |acc, (e, c)| {
            acc + e.iter().zip(a).fold(c.clone(), |m, (&k, x)| m * pow_rat(x, k))
        })
    }

    pub fn all_coefficients_positive(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_positive())
    }

    /// Human-readable form in `a1, a2, …`.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k != 0)
                    .map(|(i, &k)| if k == 1 { format!("a{}", i + 1) } else { format!("a{}^{}", i + 1, k) })
                    .collect();
                match (c == &rat(1), mono.is_empty()) {
                    (_, true) => c.to_string(),
                    (true, false) => mono.join("*"),
                    (false, false) => format!("{}*{}", c, mono.join("*")),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

fn pow_rat(x: &BigRational, k: i32) -> BigRational {
    let b = (0..k.unsigned_abs()).fold(rat(1), |acc, _| acc * x);
    if k < 0 {
        rat(1) / b
    } else {
        b
    }
}

/// The chart superpotential `Σ c_m e^{m·x}` in log coordinates at fixed `t`.
#[derive(Clone, Debug)]
pub struct ChartPotential {
    pub exps: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
}

impl ChartPotential {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.exps.iter().zip(&self.coeffs).map(|(m, c)| c * dot(m, x).exp()).sum()
    }

    /// Value, gradient and Hessian in log coordinates.
    pub fn derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, Mat<f64>) {
        let l = x.len();
        let mut v = 0.0;
        let mut g = vec![0.0; l];
        let mut hmat = vec![vec![0.0; l]; l];
        for (m, c) in self.exps.iter().zip(&self.coeffs) {
            let term = c * dot(m, x).exp();
            v += term;
            for i in 0..l {
                g[i] += term * m[i];
                for j in 0..l {
                    hmat[i][j] += term * m[i] * m[j];
                }
            }
        }
        (v, g, hmat)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Lusztig coordinates: `x = y_{i1}(a_1) ⋯ y_{iℓ}(a_ℓ) · diag(t)`.
#[derive(Clone, Debug, Serialize)]
pub struct YCoords {
    pub word: Vec<usize>,
    pub a: Vec<f64>,
    pub t: Vec<f64>,
}

impl YCoords {
    pub fn to_matrix(&self) -> GroupElement<f64> {
        let n = self.t.len();
        self.word
            .iter()
            .zip(&self.a)
            .fold(GroupElement::identity(n), |acc, (&i, &a)| acc.mul(&GroupElement::y(n, i, a)))
            .mul(&GroupElement::torus(&self.t))
    }

    /// `φ_i = Σ_{k: i_k = i} a_k`.
    pub fn phi(&self, i: usize) -> f64 {
        self.word.iter().zip(&self.a).filter(|(&j, _)| j == i).map(|(_, a)| a).sum()
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.phi(i) * alpha(&self.t, i)
    }

    /// `e_i^c` by the positive coordinate formulas.
    pub fn e_c(&self, i: usize, c: f64) -> Result<YCoords> {
        let ki: Vec<usize> = (0..self.word.len()).filter(|&k| self.word[k] == i).collect();
        if ki.is_empty() {
            return Err(Error::Domain(format!("φ_{} vanishes on this word", i + 1)));
        }
        if !(c > 0.0) {
            return Err(Error::Domain("c must be positive".into()));
        }
        let total: f64 = ki.iter().map(|&k| self.a[k]).sum();
        let n = self.t.len();
        let mut acc = vec![1.0; n];
        let mut below = 0.0;
        let mut a = Vec::with_capacity(self.a.len());
        for (k, (&j, &ak)) in self.word.iter().zip(&self.a).enumerate() {
            let mut ak2 = ak;
            let mut b = 1.0;
            if j == i {
                let (lt, ge) = (below, total - below);
                let (le, gt) = (below + ak, total - below - ak);
                ak2 = ak * (c * lt + ge) / (c * le + gt);
                b = (c * le + gt) / (c * lt + ge);
                below += ak;
            }
            let _ = k;
            // Move the accumulated torus factor to the right of y_j.
            a.push(ak2 / alpha(&acc, j));
            if j == i {
                acc[i] *= b;
                acc[i + 1] /= b;
            }
        }
        let t = acc.iter().zip(&self.t).map(|(x, y)| x * y).collect();
        Ok(YCoords { word: self.word.clone(), a, t })
    }

    /// `s_i = e_i^{1/α_i(γ)}`.
    pub fn s(&self, i: usize) -> Result<YCoords> {
        self.e_c(i, 1.0 / alpha(&self.t, i))
    }
}

/// `φ_i` of a matrix point: the `y_i` coordinate of `x·γ(x)⁻¹`.
pub fn phi_matrix(x: &GroupElement<f64>, i: usize) -> f64 {
    x.m[i + 1][i] / x.m[i][i]
}

pub fn eps_matrix(x: &GroupElement<f64>, i: usize) -> f64 {
    x.m[i + 1][i] / x.m[i + 1][i + 1]
}

/// `e_i^c(x) = x_i((c−1)/φ_i) · x · x_i((c⁻¹−1)/ε_i)`.
pub fn e_c_matrix(x: &GroupElement<f64>, i: usize, c: f64) -> Result<GroupElement<f64>> {
    let phi = phi_matrix(x, i);
    if phi == 0.0 || !phi.is_finite() {
        return Err(Error::Domain(format!("φ_{} vanishes", i + 1)));
    }
    let eps = eps_matrix(x, i);
    let n = x.size();
    Ok(GroupElement::x(n, i, (c - 1.0) / phi).mul(x).mul(&GroupElement::x(n, i, (1.0 / c - 1.0) / eps)))
}

pub fn s_matrix(x: &GroupElement<f64>, i: usize) -> Result<GroupElement<f64>> {
    let d = x.diagonal();
    e_c_matrix(x, i, 1.0 / alpha(&d, i))
}

/// All minors nonnegative up to `tol` relative to the entry scale.
pub fn is_totally_nonnegative(x: &GroupElement<f64>, tol: f64) -> bool {
    let g = x.sign_normalized();
    let n = g.size();
    let scale = g.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for k in 1..=n {
        let subsets = subsets_of(n, k);
        for rows in &subsets {
            for cols in &subsets {
                let sub = nalgebra::DMatrix::from_fn(k, k, |i, j| g.m[rows[i]][cols[j]] / scale);
                if sub.determinant() < -tol {
                    return false;
                }
            }
        }
    }
    true
}

fn subsets_of(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets_of(n - 1, k);
    for mut s in subsets_of(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Lusztig coordinate change on `x_{i1}(a_1)⋯x_{iℓ}(a_ℓ)` between reduced words (type A).
pub fn chart_transition(from: &[usize], to: &[usize], a: &[f64]) -> Result<Vec<f64>> {
    if from.len() != to.len() || a.len() != from.len() {
        return Err(Error::InvalidInput("word and coordinate lengths differ".into()));
    }
    // Breadth-first search over commutation and braid moves.
    let mut prev: HashMap<Vec<usize>, (Vec<usize>, usize, bool)> = HashMap::new();
    let mut queue = VecDeque::from([from.to_vec()]);
    prev.insert(from.to_vec(), (vec![], 0, false));
    while let Some(w) = queue.pop_front() {
        if w == to {
            break;
        }
        for p in 0..w.len().saturating_sub(1) {
            let (i, j) = (w[p], w[p + 1]);
            if i.abs_diff(j) > 1 {
                let mut v = w.clone();
                v.swap(p, p + 1);
                if !prev.contains_key(&v) {
                    prev.insert(v.clone(), (w.clone(), p, false));
                    queue.push_back(v);
                }
            }
            if p + 2 < w.len() && i.abs_diff(j) == 1 && w[p + 2] == i {
                let mut v = w.clone();
                v[p] = j;
                v[p + 1] = i;
                v[p + 2] = j;
                if !prev.contains_key(&v) {
                    prev.insert(v.clone(), (w.clone(), p, true));
                    queue.push_back(v);
                }
            }
        }
    }
    if !prev.contains_key(to) {
        return Err(Error::InvalidInput("words do not spell the same element".into()));
    }
    let mut path = vec![];
    let mut cur = to.to_vec();
    while cur != from {
        let (p, pos, braid) = prev[&cur].clone();
        path.push((pos, braid));
        cur = p;
    }
    let mut c = a.to_vec();
    for (pos, braid) in path.into_iter().rev() {
        if braid {
            let (x, y, z) = (c[pos], c[pos + 1], c[pos + 2]);
            c[pos] = y * z / (x + z);
            c[pos + 1] = x + z;
            c[pos + 2] = x * y / (x + z);
        } else {
            c.swap(pos, pos + 1);
        }
    }
    Ok(c)
}

/// Quadrature settings for `I^B`.
#[derive(Clone, Debug, Serialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub nodes: usize,
    pub max_nodes: usize,
    /// Half-width of the box in the `sinh`-stretched variable.
    pub width: f64,
    pub max_width: f64,
    pub max_points: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            nodes: 24,
            max_nodes: 384,
            width: 3.0,
            max_width: 7.0,
            max_points: 8_000_000,
            mc_samples: 400_000,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadStatus {
    Converged,
    ToleranceNotReached,
    MonteCarlo,
}

/// Moments `∫ f^k e^{−f/ℏ} γ^{h/ℏ} ω`, `k = 0..=kmax`, as `exp(log_scale)·mantissa`.
#[derive(Clone, Debug, Serialize)]
pub struct IbValue {
    pub hbar: f64,
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub log_scale: f64,
    pub mantissas: Vec<f64>,
    /// Absolute error estimates in mantissa units.
    pub errors: Vec<f64>,
    pub nodes: usize,
    pub width: f64,
    pub status: QuadStatus,
}

impl IbValue {
    pub fn value(&self, k: usize) -> f64 {
        self.mantissas[k] * self.log_scale.exp()
    }

    pub fn rel_error(&self, k: usize) -> f64 {
        self.errors[k] / self.mantissas[k].abs()
    }

    /// `Σ_k c_k I_k` with its error.
    pub fn combine(&self, c: &[f64]) -> (f64, f64) {
        let m: f64 = c.iter().zip(&self.mantissas).map(|(a, b)| a * b).sum();
        let e: f64 = c.iter().zip(&self.errors).map(|(a, b)| (a * b).abs()).sum();
        let s = self.log_scale.exp();
        (m * s, e * s)
    }
}

/// The unique totally positive critical point of `f_t`.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub q: Vec<f64>,
    pub a_star: Vec<f64>,
    pub f_star: f64,
    /// Hessian in the log coordinates `x_k = log a_k`.
    pub hessian: Mat<f64>,
    pub hessian_det: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// `s^{−λ(h)/ℏ} I^B(ℏ, h, t_λ(s), [ω])` as `s → 0⁺`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub hbar: f64,
    pub h: Vec<f64>,
    pub lambda: Vec<f64>,
    pub s_values: Vec<f64>,
    pub scaled: Vec<f64>,
    pub extrapolated: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// Laplace-method check of `e^{E/ℏ} I^B(ℏ, 0, t, [ω])`.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryPhaseReport {
    pub e: f64,
    pub f_star: f64,
    /// `(2π)^{ℓ/2} / √det Hess` in log coordinates.
    pub predicted: f64,
    pub hbar_grid: Vec<f64>,
    /// `e^{E/ℏ} I^B / (predicted·ℏ^{ℓ/2})`.
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub coefficient: f64,
    pub fit_residual: f64,
    pub max_rel_dev_small_hbar: f64,
    pub passes: bool,
}

/// Threshold on `ℏ` for the stationary phase tolerance.
pub const SPA_HBAR: f64 = 0.05;
pub const SPA_TOL: f64 = 0.02;

/// The Rietsch mirror of a type A flag variety.
#[derive(Debug)]
pub struct Mirror {
    pub label: String,
    pub rs: RootSystem,
    /// Matrix size `r + 1`.
    pub n: usize,
    pub ip: Vec<usize>,
    pub divisors: Vec<usize>,
    /// The pinned reduced word `i₀` of `w_P`.
    pub word: Vec<usize>,
    /// `β∨_k` along the pinned word.
    pub betas: Vec<Vec<i64>>,
    pub ell: usize,
    /// `ω∨_i` in simple-coroot coordinates.
    pub coweights: Vec<Vec<f64>>,
    /// `P_i` for `i ∈ I∖I_P` when `ℓ ≤ LAURENT_MAX_ELL`.
    pub laurent: Option<Vec<LaurentPoly>>,
}

impl Mirror {
    pub fn new(x: &FlagVariety) -> Result<Self> {
        let rs = x.rs.clone();
        if rs.datum.type_letter != 'A' {
            return Err(Error::Unsupported(format!(
                "the mirror matrix realization is type A only; got {}",
                rs.datum.name()
            )));
        }
        let ip = x.par.ip.clone();
        let wp = rs.w_p(&ip)?;
        let word = wp.word.clone();
        let betas = rs.beta_sequence(&word)?;
        let r = rs.rank();
        let divisors: Vec<usize> = (0..r).filter(|i| !ip.contains(i)).collect();
        let coweights = (0..r).map(|i| rs.fundamental_coweight(i).iter().map(rat_to_f64).collect()).collect();
        let mut m = Mirror {
            label: x.label.clone(),
            rs,
            n: r + 1,
            ip,
            divisors,
            ell: word.len(),
            word,
            betas,
            coweights,
            laurent: None,
        };
        if m.ell <= LAURENT_MAX_ELL {
            m.laurent = Some(m.interpolate_laurent()?);
        }
        Ok(m)
    }

    pub fn rank(&self) -> usize {
        self.n - 1
    }

    /// `ω∨_i(h)` from `h_j = α∨_j(h)`.
    pub fn coweight_value(&self, i: usize, h: &[f64]) -> f64 {
        dot(&self.coweights[i], h)
    }

    /// `⟨h, log t⟩` for `α_i(t) = q_i`.
    pub fn log_torus_pairing(&self, h: &[f64], q: &[f64]) -> f64 {
        self.divisors.iter().zip(q).map(|(&i, qi)| self.coweight_value(i, h) * qi.ln()).sum()
    }

    fn check_word(&self, word: &[usize]) -> Result<()> {
        let w = self.rs.element(word)?;
        if w.length() != word.len() || w != self.rs.w_p(&self.ip)? {
            return Err(Error::InvalidInput(format!("{word:?} is not a reduced word of w_P")));
        }
        Ok(())
    }

    /// Diagonal of `t ∈ Z(L_P)` with `α_i(t) = q_i` on divisors and `1` on `I_P`.
    pub fn torus_from_q<T: Field>(&self, q: &[T]) -> Vec<T> {
        let mut alphas = vec![T::one(); self.rank()];
        for (&i, qi) in self.divisors.iter().zip(q) {
            alphas[i] = qi.clone();
        }
        let mut d = vec![T::one()];
        for a in alphas {
            let last = d.last().cloned().unwrap_or_else(T::one);
            d.push(last / a);
        }
        d
    }

    pub fn wbar<T: Field>(&self) -> GroupElement<T> {
        GroupElement::wbar(self.n, &self.word)
    }

    /// `η^{w_P}`: factor `u·ŵ_P⁻¹ = b·u'` and return `ι(b)`, which lies in `U w̄_P U`.
    pub fn twist_map<T: Field>(&self, u: &GroupElement<T>) -> Result<GroupElement<T>> {
        let winv = GroupElement { m: transpose(&GroupElement::<T>::wbar_hat(self.n, &self.word).m) };
        let (l, d, _) = ldu(&u.mul(&winv).m)?;
        let b = GroupElement { m: l }.mul(&GroupElement::torus(&d));
        Ok(b.iota()?.sign_normalized())
    }

    /// `Θ_i(t, a) = t · η(x_{i1}(a_1) ⋯ x_{iℓ}(a_ℓ))`.
    pub fn chart<T: Field>(&self, q: &[T], a: &[T], word: &[usize]) -> Result<GroupElement<T>> {
        self.check_word(word)?;
        self.check_lengths(q.len(), a.len())?;
        let u = word.iter().zip(a).fold(GroupElement::identity(self.n), |acc, (&i, ak)| {
            acc.mul(&GroupElement::x(self.n, i, ak.clone()))
        });
        Ok(GroupElement::torus(&self.torus_from_q(q)).mul(&self.twist_map(&u)?))
    }

    /// `t · x_{−i1}(a_1) ⋯ x_{−iℓ}(a_ℓ)` with `x_{−i}(a) = y_i(a) α∨_i(a⁻¹)`.
    pub fn chart_minus(&self, q: &[f64], a: &[f64], word: &[usize]) -> Result<YCoords> {
        self.check_word(word)?;
        self.check_lengths(q.len(), a.len())?;
        let mut d = self.torus_from_q(q);
        let mut out = Vec::with_capacity(a.len());
        for (&i, &ak) in word.iter().zip(a) {
            out.push(ak / alpha(&d, i));
            d[i] /= ak;
            d[i + 1] *= ak;
        }
        Ok(YCoords { word: word.to_vec(), a: out, t: d })
    }

    fn check_lengths(&self, nq: usize, na: usize) -> Result<()> {
        if nq != self.divisors.len() || na != self.ell {
            return Err(Error::InvalidInput(format!(
                "expected {} values of t and {} chart coordinates",
                self.divisors.len(),
                self.ell
            )));
        }
        Ok(())
    }

    /// `x = u₁·t·w̄_P·u₂` from the `LDU` factorization of `w̄_P⁻¹x`.
    pub fn crystal_decompose<T: Field>(&self, x: &GroupElement<T>) -> Result<CrystalDecomposition<T>> {
        let wb = self.wbar::<T>();
        let winv = GroupElement { m: transpose(&wb.m) };
        let (l, d, u) = ldu(&winv.mul(x).m)?;
        let u1 = wb.mul(&GroupElement { m: l }).mul(&winv);
        let t = wb.mul(&GroupElement::torus(&d)).mul(&winv).diagonal();
        let scale = x.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.magnitude()));
        for i in 0..self.n {
            for j in 0..i {
                if pivot_ok(&u1.m[i][j], scale.max(1.0)) {
                    return Err(Error::NotInCell("u₁ is not upper unipotent".into()));
                }
            }
        }
        Ok(CrystalDecomposition { u1, t, u2: GroupElement { m: u } })
    }

    /// `f(x) = χ(u₁) + χ(u₂)`.
    pub fn superpotential<T: Field>(&self, x: &GroupElement<T>) -> Result<T> {
        let d = self.crystal_decompose(x)?;
        Ok(chi(&d.u1) + chi(&d.u2))
    }

    /// `α_i(π(x))` for every simple `i`.
    pub fn highest_weight<T: Field>(&self, x: &GroupElement<T>) -> Result<Vec<T>> {
        let d = self.crystal_decompose(x)?;
        Ok((0..self.rank()).map(|i| alpha(&d.t, i)).collect())
    }

    /// Diagonal of `γ(x)`.
    pub fn weight<T: Field>(&self, x: &GroupElement<T>) -> Vec<T> {
        x.diagonal()
    }

    pub fn crystal_point(&self, x: GroupElement<f64>) -> Result<CrystalPoint> {
        let d = self.crystal_decompose(&x)?;
        let t0 = x.diagonal();
        Ok(CrystalPoint { x, t: d.t, t0 })
    }

    /// Diagonal of `t · ∏ β∨_k(a_k)` along `word`.
    pub fn weight_map_chart(&self, q: &[f64], a: &[f64], word: &[usize]) -> Result<Vec<f64>> {
        self.check_word(word)?;
        self.check_lengths(q.len(), a.len())?;
        let betas = self.rs.beta_sequence(word)?;
        let mut d = self.torus_from_q(q);
        for (b, &ak) in betas.iter().zip(a) {
            for (j, &c) in b.iter().enumerate() {
                d[j] *= ak.powi(c as i32);
                d[j + 1] *= ak.powi(-(c as i32));
            }
        }
        Ok(d)
    }

    /// `⟨h, log γ⟩` for a positive weight diagonal.
    pub fn weight_pairing(&self, diag: &[f64], h: &[f64]) -> f64 {
        (0..self.rank()).map(|i| self.coweight_value(i, h) * alpha(diag, i).ln()).sum()
    }

    /// Reconstructs `P_i` exactly from the matrix superpotential on integer grids.
    fn interpolate_laurent(&self) -> Result<Vec<LaurentPoly>> {
        for e in 1..=3usize {
            if let Some(p) = self.try_interpolate(e)? {
                return Ok(p);
            }
        }
        Err(Error::Precision("Laurent reconstruction needs exponents beyond ±3".into()))
    }

    fn exact_f(&self, q: &[BigRational], a: &[BigRational]) -> Result<BigRational> {
        let x = self.chart(q, a, &self.word)?;
        self.superpotential(&x)
    }

    /// `P_i(a)` for every divisor from `#divisors + 1` exact evaluations.
    fn exact_p(&self, a: &[BigRational]) -> Result<Vec<BigRational>> {
        let nd = self.divisors.len();
        let base = self.exact_f(&vec![rat(1); nd], a)?;
        (0..nd)
            .map(|i| {
                let mut q = vec![rat(1); nd];
                q[i] = rat(2);
                Ok(self.exact_f(&q, a)? - base.clone())
            })
            .collect()
    }

    fn try_interpolate(&self, e: usize) -> Result<Option<Vec<LaurentPoly>>> {
        let l = self.ell;
        let npts = 2 * e + 1;
        let nodes: Vec<BigRational> = (1..=npts as i64).map(rat).collect();
        let total = npts.pow(l as u32);
        let nd = self.divisors.len();
        // values[i][flat index] = P_i(a)·∏a_k^e.
        let mut values = vec![vec![<BigRational as Zero>::zero(); total]; nd];
        for idx in 0..total {
            let multi = unflatten(idx, npts, l);
            let a: Vec<BigRational> = multi.iter().map(|&m| nodes[m].clone()).collect();
            let shift = a.iter().fold(rat(1), |acc, x| acc * pow_rat(x, e as i32));
            for (i, p) in self.exact_p(&a)?.into_iter().enumerate() {
                values[i][idx] = p * shift.clone();
            }
        }
        // Tensor Vandermonde solve, one axis at a time.
        let vander: Mat<BigRational> = nodes.iter().map(|x| (0..npts).map(|k| pow_rat(x, k as i32)).collect()).collect();
        let vinv = inverse(&vander)?;
        let mut polys = vec![];
        for vals in values.iter_mut() {
            for axis in 0..l {
                let stride = npts.pow(axis as u32);
                for idx in 0..total {
                    if (idx / stride) % npts != 0 {
                        continue;
                    }
                    let fiber: Vec<BigRational> = (0..npts).map(|k| vals[idx + k * stride].clone()).collect();
                    for k in 0..npts {
                        let c = (0..npts).fold(<BigRational as Zero>::zero(), |acc, m| acc + vinv[k][m].clone() * fiber[m].clone());
                        vals[idx + k * stride] = c;
                    }
                }
            }
            let terms: Vec<(Vec<i32>, BigRational)> = (0..total)
                .filter(|&idx| !Zero::is_zero(&vals[idx]))
                .map(|idx| (unflatten(idx, npts, l).iter().map(|&m| m as i32 - e as i32).collect(), vals[idx].clone()))
                .collect();
            polys.push(LaurentPoly { nvars: l, terms });
        }
        // Exact check at points off the grid.
        for probe in 0..3i64 {
            let a: Vec<BigRational> = (0..l as i64)
                .map(|k| BigRational::new((3 + 2 * k + probe).into(), (7 + k * probe + 2 * probe).into()))
                .collect();
            let p = self.exact_p(&a)?;
            if polys.iter().zip(&p).any(|(lp, v)| &lp.eval_rat(&a) != v) {
                return Ok(None);
            }
        }
        Ok(Some(polys))
    }

    fn laurent(&self) -> Result<&Vec<LaurentPoly>> {
        self.laurent.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("chart Laurent form is reconstructed only for ℓ ≤ {LAURENT_MAX_ELL}"))
        })
    }

    /// `f∘Θ_{i₀}(t, ·) = Σ a_k + Σ_i q_i P_i` in log coordinates.
    pub fn potential(&self, q: &[f64]) -> Result<ChartPotential> {
        let lp = self.laurent()?;
        if q.len() != self.divisors.len() {
            return Err(Error::InvalidInput("wrong number of torus values".into()));
        }
        let mut exps = vec![];
        let mut coeffs = vec![];
        for k in 0..self.ell {
            let mut m = vec![0.0; self.ell];
            m[k] = 1.0;
            exps.push(m);
            coeffs.push(1.0);
        }
        for (p, &qi) in lp.iter().zip(q) {
            for (e, c) in &p.terms {
                exps.push(e.iter().map(|&v| v as f64).collect());
                coeffs.push(qi * rat_to_f64(c));
            }
        }
        Ok(ChartPotential { exps, coeffs })
    }

    /// `f(Θ_{i₀}(t, a))` from the Laurent form.
    pub fn chart_superpotential(&self, q: &[f64], a: &[f64]) -> Result<f64> {
        let x: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        Ok(self.potential(q)?.value(&x))
    }

    /// Newton's method on the convex function `f_t(e^x)`.
    pub fn critical_point(&self, q: &[f64]) -> Result<CriticalPoint> {
        if q.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("α_i(t) must be positive".into()));
        }
        let pot = self.potential(q)?;
        let (x, it) = minimize(&pot, &vec![0.0; self.ell], 1.0, &vec![0.0; self.ell])?;
        let (f_star, g, hess) = pot.derivatives(&x);
        let gradient_norm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let hessian_det = to_nalgebra(&hess).determinant();
        Ok(CriticalPoint {
            q: q.to_vec(),
            a_star: x.iter().map(|v| v.exp()).collect(),
            f_star,
            hessian: hess,
            hessian_det,
            gradient_norm,
            iterations: it,
        })
    }

    /// Values of all complex critical points of `f_t` (`ℓ ≤ 2`), with multiplicity.
    pub fn complex_critical_values(&self, q: &[f64]) -> Result<Vec<Complex64>> {
        let pot = self.potential(q)?;
        let terms: Vec<(Vec<i32>, f64)> = pot.exps.iter().map(|m| m.iter().map(|&v| v as i32).collect()).zip(pot.coeffs.iter().copied()).collect();
        let points = match self.ell {
            1 => critical_points_1d(&terms)?,
            2 => critical_points_2d(&terms)?,
            _ => return Err(Error::Unsupported("complex critical points are computed for ℓ ≤ 2".into())),
        };
        Ok(points.iter().map(|a| eval_laurent_c(&terms, a)).collect())
    }

    /// Moments of `I^B(ℏ, h, t, [f^k ω])` for `k = 0..=kmax` in the pinned chart.
    pub fn ib_moments(&self, hbar: f64, h: &[f64], q: &[f64], kmax: usize, opts: &QuadOptions) -> Result<IbValue> {
        if !(hbar > 0.0) {
            return Err(Error::Domain("ℏ must be positive".into()));
        }
        if h.len() != self.rank() {
            return Err(Error::InvalidInput("h has the wrong length".into()));
        }
        if q.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("α_i(t) must be positive".into()));
        }
        let pot = self.potential(q)?;
        let l = self.ell;
        let lin: Vec<f64> = self.betas.iter().map(|b| linear_value(b, h) / hbar).collect();
        let (xs, _) = minimize(&pot, &vec![0.0; l], hbar, &lin)?;
        let (f0, _, hf) = pot.derivatives(&xs);
        let phi_star = f0 / hbar - dot(&lin, &xs);
        let hess: Mat<f64> = hf.iter().map(|r| r.iter().map(|v| v / hbar).collect()).collect();
        let eig = nalgebra::SymmetricEigen::new(to_nalgebra(&hess));
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NoConvergence { iterations: 0, detail: "Hessian is not positive definite".into() });
        }
        // x = x* + M y with M = V Λ^{−1/2}.
        let mmat: Mat<f64> = (0..l).map(|i| (0..l).map(|j| eig.eigenvectors[(i, j)] / eig.eigenvalues[j].sqrt()).collect()).collect();
        let log_det: f64 = eig.eigenvalues.iter().map(|v| -0.5 * v.ln()).sum();
        let log_scale = -phi_star + self.log_torus_pairing(h, q) / hbar + log_det;
        let integrand = |y: &[f64]| -> Vec<f64> {
            let x: Vec<f64> = (0..l).map(|i| xs[i] + dot(&mmat[i], y)).collect();
            let fv = pot.value(&x);
            let w = (-(fv / hbar - dot(&lin, &x) - phi_star)).exp();
            // Far out in the stretched box f overflows; the weight has already underflowed.
            if w == 0.0 || !fv.is_finite() {
                return vec![0.0; kmax + 1];
            }
            let mut out = Vec::with_capacity(kmax + 1);
            let mut p = w;
            for _ in 0..=kmax {
                out.push(p);
                p *= fv;
            }
            out
        };
        let mk = |mantissas: Vec<f64>, errors: Vec<f64>, nodes, width, status| IbValue {
            hbar,
            h: h.to_vec(),
            q: q.to_vec(),
            log_scale,
            mantissas,
            errors,
            nodes,
            width,
            status,
        };
        if (opts.nodes as f64).powi(l as i32) > opts.max_points as f64 {
            let (m, e) = monte_carlo(l, kmax, opts, &integrand);
            return Ok(mk(m, e, opts.mc_samples, 0.0, QuadStatus::MonteCarlo));
        }
        let stretched = |z: &[f64]| -> Vec<f64> {
            let y: Vec<f64> = z.iter().map(|v| v.sinh()).collect();
            let jac: f64 = z.iter().map(|v| v.cosh()).product();
            integrand(&y).into_iter().map(|v| v * jac).collect()
        };
        let (mut n, mut w) = (opts.nodes, opts.width);
        let mut cur = tensor_gl(l, n, w, &stretched)?;
        let mut best: Option<(Vec<f64>, Vec<f64>, usize, f64)> = None;
        loop {
            let fine_n = 2 * n;
            if (fine_n as f64).powi(l as i32) > opts.max_points as f64 || fine_n > opts.max_nodes {
                let (v, err, nn, ww) = match best {
                    Some(b) => b,
                    None => {
                        let coarse = tensor_gl(l, (n / 2).max(2), w, &stretched)?;
                        let err = cur.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).collect();
                        (cur, err, n, w)
                    }
                };
                return Ok(mk(v, err, nn, ww, QuadStatus::ToleranceNotReached));
            }
            let fine = tensor_gl(l, fine_n, w, &stretched)?;
            let wider = tensor_gl(l, fine_n, w + 1.0, &stretched)?;
            let dn: Vec<f64> = fine.iter().zip(&cur).map(|(a, b)| (a - b).abs()).collect();
            let dw: Vec<f64> = wider.iter().zip(&fine).map(|(a, b)| (a - b).abs()).collect();
            let err: Vec<f64> = dn.iter().zip(&dw).map(|(a, b)| a + b).collect();
            if err.iter().zip(&wider).all(|(e, v)| *e <= opts.rel_tol * v.abs()) {
                return Ok(mk(wider, err, fine_n, w + 1.0, QuadStatus::Converged));
            }
            let n_bad = dn.iter().zip(&wider).any(|(e, v)| *e > 0.5 * opts.rel_tol * v.abs());
            let w_bad = dw.iter().zip(&wider).any(|(e, v)| *e > 0.5 * opts.rel_tol * v.abs());
            let grow_w = w_bad && w + 1.0 <= opts.max_width;
            best = Some((wider.clone(), err, fine_n, w + 1.0));
            if !grow_w && !n_bad {
                let (v, err, nn, ww) = best.unwrap_or_default();
                return Ok(mk(v, err, nn, ww, QuadStatus::ToleranceNotReached));
            }
            cur = match (grow_w, n_bad) {
                (true, true) => wider,
                (false, true) => fine,
                _ => tensor_gl(l, n, w + 1.0, &stretched)?,
            };
            if grow_w {
                w += 1.0;
            }
            if n_bad {
                n = fine_n;
            }
        }
    }

    /// `I^B(ℏ, h, t, [ω])`.
    pub fn ib_integral(&self, hbar: f64, h: &[f64], q: &[f64], opts: &QuadOptions) -> Result<IbValue> {
        self.ib_moments(hbar, h, q, 0, opts)
    }

    /// `ℏ^{−(2ρ∨−2ρ∨_P)(h)/ℏ} ∏_{α∈−(R⁺∖R⁺_P)} Γ(α∨(h)/ℏ)`.
    pub fn ib_limit_closed_form(&self, hbar: f64, h: &[f64]) -> Result<f64> {
        if self.rs.positive_coroots.iter().any(|c| linear_value(c, h) >= 0.0) {
            return Err(Error::Domain("the limit needs α∨(h) < 0 for every positive root".into()));
        }
        let non_levi = self.rs.non_levi_roots(&self.ip);
        let mut sum = 0.0;
        let mut prod = 1.0;
        for &k in &non_levi {
            let v = linear_value(&self.rs.positive_coroots[k], h);
            sum += v;
            prod *= gamma(-v / hbar);
        }
        Ok(hbar.powf(-sum / hbar) * prod)
    }

    /// `s^{−λ(h)/ℏ} I^B(ℏ, h, t_λ(s), [ω])` on decreasing `s`, extrapolated by Aitken's Δ².
    pub fn ib_limit(&self, hbar: f64, h: &[f64], lambda: &[f64], s_values: &[f64], opts: &QuadOptions) -> Result<LimitReport> {
        if lambda.len() != self.divisors.len() || lambda.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput("λ(α_i) must be positive on every divisor".into()));
        }
        if s_values.is_empty() {
            return Err(Error::InvalidInput("empty s grid".into()));
        }
        let closed_form = self.ib_limit_closed_form(hbar, h)?;
        let lam_h: f64 = self.divisors.iter().zip(lambda).map(|(&i, l)| l * self.coweight_value(i, h)).sum();
        let mut scaled = vec![];
        for &s in s_values {
            let q: Vec<f64> = lambda.iter().map(|l| s.powf(*l)).collect();
            let v = self.ib_integral(hbar, h, &q, opts)?;
            scaled.push(v.mantissas[0] * (v.log_scale - lam_h / hbar * s.ln()).exp());
        }
        let k = scaled.len();
        let mut extrapolated = scaled[k - 1];
        if k >= 3 {
            let (a, b, c) = (scaled[k - 3], scaled[k - 2], scaled[k - 1]);
            let den = c - 2.0 * b + a;
            if den.abs() > 1e-14 * c.abs() && (c - b).abs() < (b - a).abs() {
                let acc = c - (c - b).powi(2) / den;
                if (acc - c).abs() <= (c - b).abs() {
                    extrapolated = acc;
                }
            }
        }
        Ok(LimitReport {
            hbar,
            h: h.to_vec(),
            lambda: lambda.to_vec(),
            s_values: s_values.to_vec(),
            scaled,
            extrapolated,
            closed_form,
            rel_error: ((extrapolated - closed_form) / closed_form).abs(),
        })
    }

    /// Fits `log(e^{E/ℏ} I^B(ℏ, 0, t, [ω]))` by `m log ℏ + c + dℏ` and compares with the Laplace prediction.
    pub fn stationary_phase(&self, q: &[f64], e: f64, hbar_grid: &[f64], opts: &QuadOptions) -> Result<StationaryPhaseReport> {
        if hbar_grid.len() < 3 {
            return Err(Error::InvalidInput("need at least three values of ℏ".into()));
        }
        let cp = self.critical_point(q)?;
        let l = self.ell as f64;
        let predicted = (2.0 * std::f64::consts::PI).powf(l / 2.0) / cp.hessian_det.sqrt();
        let h0 = vec![0.0; self.rank()];
        let mut logs = vec![];
        let mut ratios = vec![];
        for &hb in hbar_grid {
            let v = self.ib_integral(hb, &h0, q, opts)?;
            let lg = v.log_scale + e / hb + v.mantissas[0].ln();
            logs.push(lg);
            ratios.push((lg - (l / 2.0) * hb.ln()).exp() / predicted);
        }
        let (c, fit_residual) = fit_log(hbar_grid, &logs)?;
        let small: Vec<f64> = hbar_grid.iter().zip(&ratios).filter(|(h, _)| **h <= SPA_HBAR).map(|(_, r)| (r - 1.0).abs()).collect();
        let max_rel_dev_small_hbar = small.iter().cloned().fold(0.0, f64::max);
        let coefficient = c[1].exp();
        let passes = !small.is_empty()
            && max_rel_dev_small_hbar < SPA_TOL
            && (c[0] - l / 2.0).abs() < 0.05
            && (coefficient / predicted - 1.0).abs() < SPA_TOL
            && fit_residual < 1e-2;
        Ok(StationaryPhaseReport {
            e,
            f_star: cp.f_star,
            predicted,
            hbar_grid: hbar_grid.to_vec(),
            ratios,
            slope: c[0],
            coefficient,
            fit_residual,
            max_rel_dev_small_hbar,
            passes,
        })
    }

    /// Stationary phase at the critical value `E = f*`.
    pub fn stationary_phase_check(&self, q: &[f64], hbar_grid: &[f64], opts: &QuadOptions) -> Result<StationaryPhaseReport> {
        let e = self.critical_point(q)?.f_star;
        self.stationary_phase(q, e, hbar_grid, opts)
    }

    /// `I^B(ℏ, h, t, Mir⁻¹(σ^v))` for every `v`, through the `c1`-span inverse.
    pub fn ib_dual_basis(&self, x: &FlagVariety, qc: &QConnection, hbar: f64, h: &[f64], q: &[f64], opts: &QuadOptions) -> Result<Vec<(f64, f64)>> {
        let inv = mir_inverse_on_c1_span(x, qc, hbar, h, q)?;
        if !inv.complete {
            return Err(Error::Unsupported(format!("{} is not generated by c1; Mir⁻¹ is incomplete", x.label)));
        }
        let n = x.dim_h();
        let m = self.ib_moments(hbar, h, q, n - 1, opts)?;
        Ok(inv.coefficients.iter().map(|c| m.combine(c)).collect())
    }

    /// `ℏ^{−ℓ/2} Σ_v I^B(ℏ, 0, t, Mir⁻¹(σ^v)) σ_v`, the flat section `S(ℏ^{−μ}ℏ^{c1}Γ̂)`.
    pub fn integral_backed_section<'a>(&'a self, x: &'a FlagVariety, qc: &'a QConnection, q: Vec<f64>, opts: QuadOptions) -> FlatSection<'a> {
        let half = self.ell as f64 / 2.0;
        let h0 = vec![0.0; self.rank()];
        FlatSection {
            eval: Box::new(move |hb: f64| {
                let v = self.ib_dual_basis(x, qc, hb, &h0, &q, &opts)?;
                Ok(v.iter().map(|(a, _)| a * hb.powf(-half)).collect())
            }),
            provenance: Provenance::IntegralBacked,
        }
    }
}

fn unflatten(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(idx % base);
        idx /= base;
    }
    out
}

/// Damped Newton for `φ(x) = f(e^x)/ℏ − lin·x`.
fn minimize(pot: &ChartPotential, x0: &[f64], hbar: f64, lin: &[f64]) -> Result<(Vec<f64>, usize)> {
    let phi = |x: &[f64]| pot.value(x) / hbar - dot(lin, x);
    let mut x = x0.to_vec();
    let l = x.len();
    for it in 0..500 {
        let (v, g, h) = pot.derivatives(&x);
        let g: Vec<f64> = g.iter().zip(lin).map(|(a, b)| a / hbar - b).collect();
        let h: Mat<f64> = h.iter().map(|r| r.iter().map(|v| v / hbar).collect()).collect();
        let gn = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let size = (v / hbar).abs() + lin.iter().zip(&x).map(|(a, b)| (a * b).abs()).sum::<f64>();
        if gn <= 1e-15 * size.max(1.0) {
            return Ok((x, it));
        }
        let step = solve_vec(&h, &g.iter().map(|v| -v).collect::<Vec<_>>())?;
        // A Newton step at the roundoff level of x ends the iteration.
        let xn = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if step.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-12 * xn {
            let x: Vec<f64> = (0..l).map(|i| x[i] + step[i]).collect();
            return Ok((x, it + 1));
        }
        let f0 = phi(&x);
        let slope = dot(&g, &step);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..l).map(|i| x[i] + t * step[i]).collect();
            let ft = phi(&trial);
            // Near the minimum φ changes below roundoff; accept such steps.
            let flat = (ft - f0).abs() <= 16.0 * f64::EPSILON * f0.abs().max(1.0);
            if ft.is_finite() && (ft <= f0 + 1e-4 * t * slope || flat) {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // Roundoff floor: the Newton step no longer decreases φ.
                if gn <= 1e-11 * size.max(1.0) {
                    return Ok((x, it));
                }
                return Err(Error::NoConvergence { iterations: it, detail: format!("line search stalled at {x:?}, |∇| = {gn:e}") });
            }
        }
    }
    Err(Error::NoConvergence { iterations: 500, detail: format!("last iterate {x:?}") })
}

/// Tensor-product Gauss–Legendre on `[−w, w]^ℓ`, parallel over the first axis.
fn tensor_gl(l: usize, n: usize, w: f64, f: &(dyn Fn(&[f64]) -> Vec<f64> + Sync)) -> Result<Vec<f64>> {
    let rule = GaussLegendre::new(n).map_err(|e| Error::InvalidInput(format!("Gauss–Legendre rule: {e}")))?;
    let nw: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|(x, wt)| (x * w, wt * w)).collect();
    let partial: Vec<Vec<f64>> = nw
        .par_iter()
        .map(|&(z0, w0)| {
            let mut acc: Vec<f64> = vec![];
            let mut idx = vec![0usize; l - 1];
            let mut z = vec![z0; l];
            loop {
                let mut wt = w0;
                for (k, &i) in idx.iter().enumerate() {
                    z[k + 1] = nw[i].0;
                    wt *= nw[i].1;
                }
                let v = f(&z);
                if acc.is_empty() {
                    acc = vec![0.0; v.len()];
                }
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += wt * b;
                }
                // Odometer over the remaining axes.
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; partial[0].len()];
    for p in partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// Importance sampling with a widened Gaussian in the normalized coordinates.
fn monte_carlo(l: usize, kmax: usize, opts: &QuadOptions, f: &(dyn Fn(&[f64]) -> Vec<f64> + Sync)) -> (Vec<f64>, Vec<f64>) {
    let sigma = 1.5f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let norm = (2.0 * std::f64::consts::PI).powf(l as f64 / 2.0) * sigma.powi(l as i32);
    let mut sum = vec![0.0; kmax + 1];
    let mut sq = vec![0.0; kmax + 1];
    for _ in 0..opts.mc_samples {
        let y: Vec<f64> = (0..l).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sigma * z }).collect::<Vec<f64>>();
        let dens = (-dot(&y, &y) / (2.0 * sigma * sigma)).exp() / norm;
        for (k, v) in f(&y).into_iter().enumerate() {
            let r = v / dens;
            sum[k] += r;
            sq[k] += r * r;
        }
    }
    let n = opts.mc_samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let err = sq.iter().zip(&mean).map(|(s, m)| ((s / n - m * m).max(0.0) / n).sqrt()).collect();
    (mean, err)
}

/// Least squares `y ≈ m log ℏ + c + dℏ`; returns `[m, c, d]` and the max residual.
fn fit_log(xs: &[f64], ys: &[f64]) -> Result<(Vec<f64>, f64)> {
    let rows: Vec<[f64; 3]> = xs.iter().map(|&x| [x.ln(), 1.0, x]).collect();
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut aty = vec![0.0; 3];
    for (r, &y) in rows.iter().zip(ys) {
        for i in 0..3 {
            aty[i] += r[i] * y;
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let c = solve_vec(&ata, &aty)?;
    let res = rows.iter().zip(ys).map(|(r, y)| (y - (0..3).map(|i| r[i] * c[i]).sum::<f64>()).abs()).fold(0.0, f64::max);
    Ok((c, res))
}

fn eval_laurent_c(terms: &[(Vec<i32>, f64)], a: &[Complex64]) -> Complex64 {
    terms
        .iter()
        .map(|(e, c)| e.iter().zip(a).fold(Complex64::new(*c, 0.0), |m, (&k, x)| m * x.powi(k)))
        .sum()
}

/// Log-gradient `a_k ∂_k f` and its Jacobian in `log a`.
fn log_gradient_c(terms: &[(Vec<i32>, f64)], a: &[Complex64]) -> (Vec<Complex64>, Mat<Complex64>) {
    let l = a.len();
    let mut g = vec![Complex64::new(0.0, 0.0); l];
    let mut j = vec![vec![Complex64::new(0.0, 0.0); l]; l];
    for (e, c) in terms {
        let mono = e.iter().zip(a).fold(Complex64::new(*c, 0.0), |m, (&k, x)| m * x.powi(k));
        for r in 0..l {
            g[r] += mono * e[r] as f64;
            for s in 0..l {
                j[r][s] += mono * (e[r] * e[s]) as f64;
            }
        }
    }
    (g, j)
}

fn newton_polish(terms: &[(Vec<i32>, f64)], a: &mut [Complex64]) -> Result<f64> {
    let mut gn = f64::INFINITY;
    for _ in 0..60 {
        let (g, j) = log_gradient_c(terms, a);
        gn = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if gn < 1e-15 {
            break;
        }
        let step = solve_vec(&j, &g.iter().map(|v| -v).collect::<Vec<_>>())?;
        for (x, s) in a.iter_mut().zip(step) {
            *x *= s.exp();
        }
    }
    Ok(gn)
}

/// Univariate polynomial roots from the companion matrix (coefficients low to high).
fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = c.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = c[deg];
    let comp = nalgebra::DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let schur = comp.try_schur(f64::EPSILON, 100_000).ok_or_else(|| Error::EigenFailure("companion Schur form".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..deg).map(|i| t[(i, i)]).collect())
}

fn critical_points_1d(terms: &[(Vec<i32>, f64)]) -> Result<Vec<Vec<Complex64>>> {
    let lo = terms.iter().map(|(e, _)| e[0]).min().unwrap_or(0);
    let hi = terms.iter().map(|(e, _)| e[0]).max().unwrap_or(0);
    let mut c = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
    for (e, v) in terms {
        c[(e[0] - lo) as usize] += v * e[0] as f64;
    }
    let mut out = vec![];
    for r in poly_roots(&c)? {
        if r.norm() < 1e-10 {
            continue;
        }
        let mut a = vec![r];
        newton_polish(terms, &mut a)?;
        out.push(a);
    }
    Ok(out)
}

type UPoly = Vec<Complex64>;

fn upoly_mul(a: &UPoly, b: &UPoly) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn upoly_add(a: &UPoly, b: &UPoly, sign: f64) -> UPoly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y * sign;
    }
    out
}

fn upoly_det(m: &[Vec<UPoly>]) -> UPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out: UPoly = vec![];
    for j in 0..n {
        if m[0][j].iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        let minor: Vec<Vec<UPoly>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| v.clone()).collect()).collect();
        let term = upoly_mul(&m[0][j], &upoly_det(&minor));
        out = upoly_add(&out, &term, if j % 2 == 0 { 1.0 } else { -1.0 });
    }
    out
}

/// Critical points of a two-variable Laurent polynomial by eliminating `a_2` with a resultant.
fn critical_points_2d(terms: &[(Vec<i32>, f64)]) -> Result<Vec<Vec<Complex64>>> {
    let lo: Vec<i32> = (0..2).map(|k| terms.iter().map(|(e, _)| e[k]).min().unwrap_or(0)).collect();
    // g_k as a polynomial in a_2 whose coefficients are polynomials in a_1.
    let build = |k: usize| -> Vec<UPoly> {
        let d2 = terms.iter().map(|(e, _)| e[1] - lo[1]).max().unwrap_or(0) as usize;
        let d1 = terms.iter().map(|(e, _)| e[0] - lo[0]).max().unwrap_or(0) as usize;
        let mut out = vec![vec![Complex64::new(0.0, 0.0); d1 + 1]; d2 + 1];
        for (e, v) in terms {
            out[(e[1] - lo[1]) as usize][(e[0] - lo[0]) as usize] += v * e[k] as f64;
        }
        while out.len() > 1 && out.last().is_some_and(|p| p.iter().all(|v| v.norm() == 0.0)) {
            out.pop();
        }
        out
    };
    let (g1, g2) = (build(0), build(1));
    let (m, n) = (g1.len() - 1, g2.len() - 1);
    let size = m + n;
    let zero: UPoly = vec![Complex64::new(0.0, 0.0)];
    let mut syl = vec![vec![zero.clone(); size]; size];
    for r in 0..n {
        for (k, c) in g1.iter().rev().enumerate() {
            syl[r][r + k] = c.clone();
        }
    }
    for r in 0..m {
        for (k, c) in g2.iter().rev().enumerate() {
            syl[n + r][r + k] = c.clone();
        }
    }
    let res = upoly_det(&syl);
    let scale = res.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let res: UPoly = res.into_iter().map(|v| if v.norm() < 1e-13 * scale { Complex64::new(0.0, 0.0) } else { v }).collect();
    let mut out: Vec<Vec<Complex64>> = vec![];
    for r1 in poly_roots(&res)? {
        if r1.norm() < 1e-8 {
            continue;
        }
        let eval_in = |g: &[UPoly]| -> UPoly { g.iter().map(|p| p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * r1 + c)).collect() };
        let c1 = eval_in(&g1);
        let c2 = eval_in(&g2);
        for r2 in poly_roots(&c1)? {
            if r2.norm() < 1e-8 {
                continue;
            }
            let v2 = c2.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * r2 + c);
            let size = c2.iter().map(|c| c.norm()).sum::<f64>() * r2.norm().max(1.0).powi(c2.len() as i32);
            if v2.norm() > 1e-6 * size.max(1.0) {
                continue;
            }
            let mut a = vec![r1, r2];
            if newton_polish(terms, &mut a)? > 1e-9 {
                continue;
            }
            if !out.iter().any(|b| (b[0] - a[0]).norm() + (b[1] - a[1]).norm() < 1e-7 * (1.0 + a[0].norm() + a[1].norm())) {
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// Critical report for the CLI and the acceptance suite.
#[derive(Clone, Debug, Serialize)]
pub struct MirrorReport {
    pub space: String,
    pub t: Vec<f64>,
    pub a_star: Vec<f64>,
    pub f_star: f64,
    #[serde(rename = "E_O")]
    pub e_o: f64,
    pub abs_diff: f64,
    pub hessian_det: f64,
    pub laurent: Vec<String>,
    pub integral_values: Vec<IntegralValue>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralValue {
    pub hbar: f64,
    pub h: Vec<f64>,
    pub value: f64,
    pub err: f64,
}
