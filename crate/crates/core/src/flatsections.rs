//! Flat sections of the quantum connection.
//!
//! The connection in the direction `q_j ∂_{q_j}` acts on Schubert
//! coefficient vectors as `q_j ∂_{q_j} Y = A_j(q) Y` with
//! `A_j = −(1/ℏ) C_j`, where `C_j` is the line-bundle operator. The
//! fundamental solution is `S(q) = (Σ_ν S_ν q^ν) exp(Σ_j log q_j A_{j,0})`
//! with `S_0 = id`, produced by the Frobenius recurrence.

use crate::error::{Error, Result};
use crate::gammaclass::{gamma_class, normalize, normalized_gamma_restrictions};
use crate::linalg::{frob_norm, identity, mat_mul, solve_mat, solve_vec, to_nalgebra, zeros, Field, Mat};
use crate::poly::Poly;
use crate::qh::QConnection;
use crate::schubert::FlagVariety;
use num_rational::BigRational;
use serde::Serialize;
use std::collections::BTreeMap;

/// Eigenvalue differences this close to a positive integer count as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// A system `q_j ∂_j Y = (Σ_ν A_{j,ν} q^ν) Y` with finitely many terms.
#[derive(Clone, Debug)]
pub struct FrobeniusSystem<T: Field> {
    pub n: usize,
    pub nvars: usize,
    /// `ops[j][ν] = A_{j,ν}`.
    pub ops: Vec<BTreeMap<Vec<u32>, Mat<T>>>,
}

impl<T: Field> FrobeniusSystem<T> {
    /// Validates shapes and the commuting hypothesis on the `A_{j,0}`.
    pub fn new(n: usize, ops: Vec<BTreeMap<Vec<u32>, Mat<T>>>) -> Result<Self> {
        let nvars = ops.len();
        for op in &ops {
            for (nu, m) in op {
                if nu.len() != nvars || m.len() != n || m.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput("operator shape mismatch".into()));
                }
            }
        }
        let sys = FrobeniusSystem { n, nvars, ops };
        let tol = 1e-10;
        for a in 0..nvars {
            for b in a + 1..nvars {
                let (x, y) = (sys.a0(a), sys.a0(b));
                let xy = mat_mul(&x, &y);
                let yx = mat_mul(&y, &x);
                let scale = 1.0 + xy.iter().flatten().map(|v| v.magnitude()).fold(0.0, f64::max);
                if xy.iter().flatten().zip(yx.iter().flatten()).any(|(p, q)| (p.clone() - q.clone()).magnitude() > tol * scale) {
                    return Err(Error::InvalidInput(format!("A_{{{a},0}} and A_{{{b},0}} do not commute")));
                }
            }
        }
        Ok(sys)
    }

    /// `A_{j,0}`.
    pub fn a0(&self, j: usize) -> Mat<T> {
        self.ops[j].get(&vec![0; self.nvars]).cloned().unwrap_or_else(|| zeros(self.n, self.n))
    }

    /// `Σ_j A_{j,ν}`.
    fn summed(&self, nu: &[u32]) -> Option<Mat<T>> {
        let mut out: Option<Mat<T>> = None;
        for op in &self.ops {
            if let Some(m) = op.get(nu) {
                out = Some(match out {
                    None => m.clone(),
                    Some(o) => o.iter().zip(m).map(|(r, s)| r.iter().zip(s).map(|(a, b)| a.clone() + b.clone()).collect()).collect(),
                });
            }
        }
        out
    }

    /// Multi-indices `ν ≠ 0` carrying a nonzero term of the summed system.
    fn support(&self) -> Vec<Vec<u32>> {
        let mut s: Vec<Vec<u32>> = self.ops.iter().flat_map(|op| op.keys().cloned()).collect();
        s.sort();
        s.dedup();
        s.retain(|nu| nu.iter().any(|&k| k > 0));
        s
    }

    /// Fails if two eigenvalues of `A_0 = Σ_j A_{j,0}` differ by a positive integer.
    pub fn check_resonance(&self) -> Result<()> {
        let a0 = self.summed(&vec![0; self.nvars]).unwrap_or_else(|| zeros(self.n, self.n));
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| a0[i][j].to_c64());
        // A nilpotent A_0 has a single eigenvalue.
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut power = m.clone();
        for _ in 1..self.n {
            power = &power * &m;
        }
        if power.iter().all(|z| z.norm() <= 1e-12 * scale.max(1.0).powi(self.n as i32)) {
            return Ok(());
        }
        let ev = m
            .try_schur(f64::EPSILON, 100_000)
            .ok_or_else(|| Error::EigenFailure("A_0 spectrum".into()))?
            .eigenvalues()
            .ok_or_else(|| Error::EigenFailure("A_0 spectrum".into()))?;
        for (i, a) in ev.iter().enumerate() {
            for (j, b) in ev.iter().enumerate() {
                let d = a - b;
                if i != j && d.re > 0.5 && d.im.abs() < RESONANCE_TOL && (d.re - d.re.round()).abs() < RESONANCE_TOL {
                    return Err(Error::Resonance(format!("{a}"), format!("{b}")));
                }
            }
        }
        Ok(())
    }
}

/// Truncated series `Σ_{|ν| ≤ N} S_ν q^ν` with its log part.
#[derive(Clone, Debug)]
pub struct SeriesSolution<T: Field> {
    pub n: usize,
    pub nvars: usize,
    pub order: usize,
    pub coeffs: BTreeMap<Vec<u32>, Mat<T>>,
    /// `A_{j,0}` for the log part `exp(Σ_j log q_j A_{j,0})`.
    pub log_part: Vec<Mat<T>>,
}

/// All `ν` with `|ν| = k` in `nvars` variables.
fn shell(nvars: usize, k: u32) -> Vec<Vec<u32>> {
    if nvars == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    if nvars == 1 {
        return vec![vec![k]];
    }
    let mut out = vec![];
    for first in 0..=k {
        for mut rest in shell(nvars - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The operator `S ↦ kS + S A_0 − A_0 S` on row-major `vec(S)`.
fn sylvester_operator<T: Field>(a0: &Mat<T>, k: u32) -> Mat<T> {
    let n = a0.len();
    let mut l: Mat<T> = zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let row = a * n + b;
            l[row][row] = l[row][row].clone() + T::from_i64(k as i64);
            for c in 0..n {
                if !a0[c][b].is_zero() {
                    l[row][a * n + c] = l[row][a * n + c].clone() + a0[c][b].clone();
                }
                if !a0[a][c].is_zero() {
                    l[row][c * n + b] = l[row][c * n + b].clone() - a0[a][c].clone();
                }
            }
        }
    }
    l
}

/// Frobenius solution with `S_0 = id` up to total order `order`.
pub fn frobenius_solve<T: Field>(sys: &FrobeniusSystem<T>, order: usize) -> Result<SeriesSolution<T>> {
    sys.check_resonance()?;
    let n = sys.n;
    let zero_idx = vec![0; sys.nvars];
    let a0 = sys.summed(&zero_idx).unwrap_or_else(|| zeros(n, n));
    let support: Vec<(Vec<u32>, Mat<T>)> = sys.support().into_iter().map(|nu| {
        let m = sys.summed(&nu).expect("in support");
        (nu, m)
    }).collect();
    let mut coeffs: BTreeMap<Vec<u32>, Mat<T>> = BTreeMap::new();
    coeffs.insert(zero_idx, identity(n));
    for k in 1..=order as u32 {
        let nus = shell(sys.nvars, k);
        // Right-hand sides Σ_{ν1 ≠ 0} A_{ν1} S_{ν − ν1}, one column per ν.
        let mut rhs: Mat<T> = zeros(n * n, nus.len());
        let mut any = false;
        for (col, nu) in nus.iter().enumerate() {
            for (nu1, a) in &support {
                if nu1.iter().zip(nu).any(|(x, y)| x > y) {
                    continue;
                }
                let rest: Vec<u32> = nu.iter().zip(nu1).map(|(x, y)| x - y).collect();
                if let Some(s) = coeffs.get(&rest) {
                    let p = mat_mul(a, s);
                    for (i, row) in p.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            if !v.is_zero() {
                                rhs[i * n + j][col] = rhs[i * n + j][col].clone() + v.clone();
                                any = true;
                            }
                        }
                    }
                }
            }
        }
        if !any {
            continue;
        }
        let sol = solve_mat(&sylvester_operator(&a0, k), &rhs)
            .map_err(|_| Error::Resonance(format!("order {k}"), "A_0".into()))?;
        for (col, nu) in nus.into_iter().enumerate() {
            let s: Mat<T> = (0..n).map(|i| (0..n).map(|j| sol[i * n + j][col].clone()).collect()).collect();
            if s.iter().flatten().any(|v| !v.is_zero()) {
                coeffs.insert(nu, s);
            }
        }
    }
    Ok(SeriesSolution { n, nvars: sys.nvars, order, coeffs, log_part: (0..sys.nvars).map(|j| sys.a0(j)).collect() })
}

impl<T: Field> SeriesSolution<T> {
    /// Defect of the per-variable recurrence
    /// `ν_j S_ν + S_ν A_{j,0} − A_{j,0} S_ν − Σ_{ν1≠0} A_{j,ν1} S_{ν−ν1}` at `ν`.
    pub fn recurrence_defect(&self, sys: &FrobeniusSystem<T>, j: usize, nu: &[u32]) -> Mat<T> {
        let n = self.n;
        let zero: Mat<T> = zeros(n, n);
        let s = self.coeffs.get(nu).unwrap_or(&zero);
        let a0 = sys.a0(j);
        let mut d = mat_mul(s, &a0);
        let left = mat_mul(&a0, s);
        for i in 0..n {
            for k in 0..n {
                d[i][k] = d[i][k].clone() - left[i][k].clone() + T::from_i64(nu[j] as i64) * s[i][k].clone();
            }
        }
        for (nu1, a) in &sys.ops[j] {
            if nu1.iter().all(|&x| x == 0) || nu1.iter().zip(nu).any(|(x, y)| x > y) {
                continue;
            }
            let rest: Vec<u32> = nu.iter().zip(nu1).map(|(x, y)| x - y).collect();
            if let Some(sr) = self.coeffs.get(&rest) {
                let p = mat_mul(a, sr);
                for i in 0..n {
                    for k in 0..n {
                        d[i][k] = d[i][k].clone() - p[i][k].clone();
                    }
                }
            }
        }
        d
    }
}

impl SeriesSolution<f64> {
    /// `Σ_ν S_ν q^ν` without the log part.
    pub fn holomorphic_part(&self, q: &[f64]) -> Mat<f64> {
        let mut out = zeros(self.n, self.n);
        for (nu, s) in &self.coeffs {
            let qn: f64 = nu.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
            for (o, r) in out.iter_mut().zip(s) {
                for (a, b) in o.iter_mut().zip(r) {
                    *a += qn * b;
                }
            }
        }
        out
    }

    /// `exp(Σ_j log q_j A_{j,0})`.
    pub fn log_factor(&self, q: &[f64]) -> Mat<f64> {
        let mut m = nalgebra::DMatrix::<f64>::zeros(self.n, self.n);
        for (a, x) in self.log_part.iter().zip(q) {
            m += to_nalgebra(a) * x.ln();
        }
        let e = m.exp();
        (0..self.n).map(|i| (0..self.n).map(|j| e[(i, j)]).collect()).collect()
    }

    /// The fundamental solution at positive real `q`.
    pub fn eval(&self, q: &[f64]) -> Mat<f64> {
        mat_mul(&self.holomorphic_part(q), &self.log_factor(q))
    }

    /// `q_j ∂_j S` from the series.
    pub fn q_derivative(&self, j: usize, q: &[f64]) -> Mat<f64> {
        let mut d: Mat<f64> = zeros(self.n, self.n);
        for (nu, s) in &self.coeffs {
            if nu[j] == 0 {
                continue;
            }
            let qn: f64 = nu.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
            for (o, r) in d.iter_mut().zip(s) {
                for (a, b) in o.iter_mut().zip(r) {
                    *a += nu[j] as f64 * qn * b;
                }
            }
        }
        let h = self.holomorphic_part(q);
        let hd = mat_mul(&h, &self.log_part[j]);
        let sum: Mat<f64> = d.iter().zip(&hd).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        mat_mul(&sum, &self.log_factor(q))
    }

    /// Relative residual `max_j ‖q_j∂_j S − A_j(q) S‖ / ‖S‖`.
    pub fn residual(&self, sys: &FrobeniusSystem<f64>, q: &[f64]) -> f64 {
        let s = self.eval(q);
        let ns = frob_norm(&s).max(f64::MIN_POSITIVE);
        (0..self.nvars)
            .map(|j| {
                let aq = eval_op(&sys.ops[j], q, self.n);
                let lhs = self.q_derivative(j, q);
                let rhs = mat_mul(&aq, &s);
                let diff: Mat<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
                frob_norm(&diff) / ns
            })
            .fold(0.0, f64::max)
    }

    /// Ratio of the last two shell contributions at `q`.
    pub fn tail_estimate(&self, q: &[f64]) -> f64 {
        let shell_norm = |k: usize| -> f64 {
            self.coeffs
                .iter()
                .filter(|(nu, _)| nu.iter().sum::<u32>() as usize == k)
                .map(|(nu, s)| {
                    let qn: f64 = nu.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
                    qn.abs() * frob_norm(s)
                })
                .sum()
        };
        let total: f64 = (0..=self.order).map(shell_norm).sum::<f64>().max(f64::MIN_POSITIVE);
        (shell_norm(self.order) + shell_norm(self.order.saturating_sub(1))) / total
    }
}

fn eval_op(op: &BTreeMap<Vec<u32>, Mat<f64>>, q: &[f64], n: usize) -> Mat<f64> {
    let mut out = zeros(n, n);
    for (nu, m) in op {
        let qn: f64 = nu.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
        for (o, r) in out.iter_mut().zip(m) {
            for (a, b) in o.iter_mut().zip(r) {
                *a += qn * b;
            }
        }
    }
    out
}

/// Ratio `h / ℏ` allowed for equivariant parameters, mirroring the
/// neighborhood condition on `h`.
pub const H_RADIUS: f64 = 4.0;

/// The quantum connection as a Frobenius system at numeric `ℏ` and `h`.
pub fn quantum_system(qc: &QConnection, hbar: f64, h: &[f64]) -> Result<FrobeniusSystem<f64>> {
    if hbar == 0.0 || !hbar.is_finite() {
        return Err(Error::Domain("ℏ must be nonzero".into()));
    }
    let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if hn / hbar.abs() > H_RADIUS {
        return Err(Error::RadiusViolation(format!("‖h‖/ℏ = {} exceeds {H_RADIUS}", hn / hbar.abs())));
    }
    let ops = qc
        .line_bundle
        .iter()
        .map(|lb| lb.at_h(h).into_iter().map(|(d, m)| (d, m.iter().map(|r| r.iter().map(|x| -x / hbar).collect()).collect())).collect())
        .collect();
    FrobeniusSystem::new(qc.n(), ops)
}

/// The same system over the rationals at rational `ℏ` and `h`.
pub fn quantum_system_exact(qc: &QConnection, hbar: &BigRational, h: &[BigRational]) -> Result<FrobeniusSystem<BigRational>> {
    if num_traits::Zero::is_zero(hbar) {
        return Err(Error::Domain("ℏ must be nonzero".into()));
    }
    let ops = qc
        .line_bundle
        .iter()
        .map(|lb| {
            lb.at_h_rat(h)
                .into_iter()
                .map(|(d, m)| (d, m.iter().map(|r| r.iter().map(|x| -x / hbar).collect()).collect()))
                .collect()
        })
        .collect();
    FrobeniusSystem::new(qc.n(), ops)
}

/// `S(ℏ, h, q)` as a truncated Frobenius series.
pub fn fundamental_solution(qc: &QConnection, hbar: f64, h: &[f64], order: usize) -> Result<(FrobeniusSystem<f64>, SeriesSolution<f64>)> {
    let sys = quantum_system(qc, hbar, h)?;
    let sol = frobenius_solve(&sys, order)?;
    Ok((sys, sol))
}

/// Series order for which the tail at `q` is below `tol`, doubling from 16.
pub fn fundamental_solution_auto(qc: &QConnection, hbar: f64, h: &[f64], q: &[f64], tol: f64) -> Result<(FrobeniusSystem<f64>, SeriesSolution<f64>)> {
    let mut order = 16;
    loop {
        let (sys, sol) = fundamental_solution(qc, hbar, h, order)?;
        let tail = sol.tail_estimate(q);
        if tail < tol {
            return Ok((sys, sol));
        }
        if order >= 1024 {
            return Err(Error::NoConvergence { iterations: order, detail: format!("series tail {tail:e} at q = {q:?}") });
        }
        order *= 2;
    }
}

/// Provenance of a flat section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Series,
    OdeContinued,
    IntegralBacked,
}

/// A matrix value `exp(log_scale) · value` of the fundamental solution.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    pub log_scale: f64,
    pub value: Mat<f64>,
}

/// Taylor-series integrator for `s Y' = B(s) Y` along `q_j = s^{n_j}`.
#[derive(Clone, Debug)]
pub struct AnticanonicalOde {
    pub n: usize,
    /// `B(s) = Σ_k s^k M_k`.
    pub poly: BTreeMap<u32, Mat<f64>>,
    pub order: usize,
    pub tol: f64,
}

impl AnticanonicalOde {
    pub fn new(sys: &FrobeniusSystem<f64>, exponents: &[u32], order: usize, tol: f64) -> Self {
        let mut poly: BTreeMap<u32, Mat<f64>> = BTreeMap::new();
        for (j, op) in sys.ops.iter().enumerate() {
            for (nu, m) in op {
                let k: u32 = nu.iter().zip(exponents).map(|(a, b)| a * b).sum();
                let e = poly.entry(k).or_insert_with(|| zeros(sys.n, sys.n));
                for (o, r) in e.iter_mut().zip(m) {
                    for (a, b) in o.iter_mut().zip(r) {
                        *a += exponents[j] as f64 * b;
                    }
                }
            }
        }
        AnticanonicalOde { n: sys.n, poly, order, tol }
    }

    /// Taylor coefficients of `B` at `s0`, up to degree `m`.
    fn expand(&self, s0: f64, m: usize) -> Vec<Mat<f64>> {
        let mut out = vec![zeros(self.n, self.n); m + 1];
        for (&k, mat) in &self.poly {
            let mut binom = 1.0;
            for (i, o) in out.iter_mut().enumerate().take((k as usize).min(m) + 1) {
                let c = binom * s0.powi(k as i32 - i as i32);
                for (row, src) in o.iter_mut().zip(mat) {
                    for (a, b) in row.iter_mut().zip(src) {
                        *a += c * b;
                    }
                }
                binom = binom * (k as f64 - i as f64) / (i as f64 + 1.0);
            }
        }
        out
    }

    /// Advances `y` from `s0` to `s1 > s0`, returning the number of steps.
    pub fn integrate(&self, y: &mut ScaledMatrix, s0: f64, s1: f64) -> Result<usize> {
        if !(s0 > 0.0 && s1 >= s0) {
            return Err(Error::Domain("continuation needs 0 < s0 ≤ s1".into()));
        }
        let p = self.order;
        let mut s = s0;
        let mut steps = 0;
        while s < s1 {
            let b = self.expand(s, p);
            let mut coef: Vec<Mat<f64>> = vec![y.value.clone()];
            for k in 0..p {
                let mut acc: Mat<f64> = zeros(self.n, self.n);
                for m in 0..=k {
                    let prod = mat_mul(&b[m], &coef[k - m]);
                    for (o, r) in acc.iter_mut().zip(&prod) {
                        for (a, c) in o.iter_mut().zip(r) {
                            *a += c;
                        }
                    }
                }
                let next: Mat<f64> = acc
                    .iter()
                    .zip(&coef[k])
                    .map(|(r, yk)| r.iter().zip(yk).map(|(a, c)| (a - k as f64 * c) / (s * (k as f64 + 1.0))).collect())
                    .collect();
                coef.push(next);
            }
            let ny = frob_norm(&y.value).max(f64::MIN_POSITIVE);
            let mut step = 0.5 * s;
            for k in [p - 1, p] {
                let nk = frob_norm(&coef[k]);
                if nk > 0.0 {
                    step = step.min(0.9 * (self.tol * ny / nk).powf(1.0 / k as f64));
                }
            }
            step = step.min(s1 - s);
            if step <= 1e-12 * s {
                return Err(Error::NoConvergence { iterations: steps, detail: format!("step collapsed at s = {s}") });
            }
            let mut next: Mat<f64> = zeros(self.n, self.n);
            for c in coef.iter().rev() {
                for (o, r) in next.iter_mut().zip(c) {
                    for (a, b) in o.iter_mut().zip(r) {
                        *a = *a * step + b;
                    }
                }
            }
            let scale = next.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            if !scale.is_finite() || scale == 0.0 {
                return Err(Error::NoConvergence { iterations: steps, detail: "non-finite state".into() });
            }
            y.value = next.iter().map(|r| r.iter().map(|v| v / scale).collect()).collect();
            y.log_scale += scale.ln();
            s += step;
            steps += 1;
        }
        Ok(steps)
    }
}

/// Exponents `n_j = ⟨c1, β_j⟩` of the anticanonical line `q_j = s^{n_j}`.
pub fn anticanonical_exponents(qc: &QConnection) -> Vec<u32> {
    qc.c1_pairings.iter().map(|&c| c as u32).collect()
}

/// Options for the J-function evaluation.
#[derive(Clone, Debug)]
pub struct JOptions {
    /// Largest `s` evaluated directly from the series.
    pub series_limit: f64,
    pub series_order: usize,
    pub ode_order: usize,
    pub ode_tol: f64,
}

impl Default for JOptions {
    fn default() -> Self {
        JOptions { series_limit: 1.0, series_order: 60, ode_order: 8, ode_tol: 1e-14 }
    }
}

/// `J(s)` at `ℏ = −1`, `h = 0`: component `v` is the point-class
/// coefficient of `S σ^v`, scaled by `exp(log_scale)`.
#[derive(Clone, Debug, Serialize)]
pub struct JValue {
    pub s: f64,
    pub log_scale: f64,
    pub components: Vec<f64>,
    pub provenance: Provenance,
}

impl JValue {
    /// `J / ⟨pd[pt], J⟩`, the ratio by the coefficient of the unit.
    pub fn normalized(&self) -> Vec<f64> {
        let e = self.components[0];
        self.components.iter().map(|c| c / e).collect()
    }
}

fn j_from_matrix(x: &FlagVariety, m: &Mat<f64>) -> Vec<f64> {
    let top = x.top();
    x.dual_coeffs()
        .iter()
        .map(|row| row.iter().enumerate().map(|(u, p)| m[top][u] * crate::linalg::rat_to_f64(&p.at_zero())).sum())
        .collect()
}

/// J-function on a grid of increasing `s`, continued by the Taylor integrator beyond the series range.
pub fn j_function(x: &FlagVariety, qc: &QConnection, s_grid: &[f64], opts: &JOptions) -> Result<Vec<JValue>> {
    if s_grid.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("s must be positive".into()));
    }
    if s_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("s grid must be increasing".into()));
    }
    let exps = anticanonical_exponents(qc);
    let (sys, sol) = fundamental_solution(qc, -1.0, &vec![0.0; x.rank()], opts.series_order)?;
    let qs = |s: f64| -> Vec<f64> { exps.iter().map(|&n| s.powi(n as i32)).collect() };
    let mut out = vec![];
    let ode = AnticanonicalOde::new(&sys, &exps, opts.ode_order, opts.ode_tol);
    let mut state: Option<(f64, ScaledMatrix)> = None;
    for &s in s_grid {
        if s <= opts.series_limit {
            let m = sol.eval(&qs(s));
            out.push(JValue { s, log_scale: 0.0, components: j_from_matrix(x, &m), provenance: Provenance::Series });
            continue;
        }
        let (s0, mut y) = match state.take() {
            Some(st) => st,
            None => {
                let s0 = opts.series_limit;
                (s0, ScaledMatrix { log_scale: 0.0, value: sol.eval(&qs(s0)) })
            }
        };
        ode.integrate(&mut y, s0, s)?;
        out.push(JValue { s, log_scale: y.log_scale, components: j_from_matrix(x, &y.value), provenance: Provenance::OdeContinued });
        state = Some((s, y));
    }
    Ok(out)
}

/// Convergence status of a limit extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converged,
    Inconclusive,
}

/// Componentwise limit of `J/⟨pd[pt],J⟩` along a grid.
#[derive(Clone, Debug, Serialize)]
pub struct GammaLimit {
    pub s_grid: Vec<f64>,
    pub ratios: Vec<Vec<f64>>,
    pub estimate: Vec<f64>,
    pub error: Vec<f64>,
    pub gamma_class: Vec<f64>,
    pub distance: Vec<f64>,
    pub status: LimitStatus,
}

/// Aitken extrapolation of the last three terms, falling back to the last term.
fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let d = c - 2.0 * b + a;
    if d.abs() < 1e-300 || !d.is_finite() {
        c
    } else {
        let v = c - (c - b) * (c - b) / d;
        if v.is_finite() { v } else { c }
    }
}

/// Limit of `J/⟨pd[pt],J⟩` with Aitken acceleration and error bars.
pub fn gamma_limit(x: &FlagVariety, qc: &QConnection, s_grid: &[f64], accelerate: bool, opts: &JOptions) -> Result<GammaLimit> {
    if s_grid.len() < 2 {
        return Err(Error::InvalidInput("need at least two grid points".into()));
    }
    let js = j_function(x, qc, s_grid, opts)?;
    if js.iter().any(|j| j.components[0] == 0.0) {
        return Err(Error::Domain("⟨pd[pt], J⟩ vanishes on the grid".into()));
    }
    let ratios: Vec<Vec<f64>> = js.iter().map(|j| j.normalized()).collect();
    let n = x.dim_h();
    let k = ratios.len();
    let mut estimate = vec![0.0; n];
    let mut error = vec![0.0; n];
    let mut shrinking = true;
    for v in 0..n {
        let seq: Vec<f64> = ratios.iter().map(|r| r[v]).collect();
        if accelerate && k >= 4 {
            let a1 = aitken(seq[k - 3], seq[k - 2], seq[k - 1]);
            let a0 = aitken(seq[k - 4], seq[k - 3], seq[k - 2]);
            estimate[v] = a1;
            error[v] = (a1 - a0).abs().max((a1 - seq[k - 1]).abs() * 1e-3);
        } else {
            estimate[v] = seq[k - 1];
            error[v] = (seq[k - 1] - seq[k - 2]).abs();
        }
        if k >= 3 {
            let d_last = (seq[k - 1] - seq[k - 2]).abs();
            let d_prev = (seq[k - 2] - seq[k - 3]).abs();
            if d_last > d_prev && d_last > 1e-12 {
                shrinking = false;
            }
        }
    }
    let g = gamma_class(x, x.ell().max(8))?;
    let distance: Vec<f64> = estimate.iter().zip(&g.coeffs).map(|(a, b)| (a - b).abs()).collect();
    let status = if shrinking && error.iter().all(|e| e.is_finite()) { LimitStatus::Converged } else { LimitStatus::Inconclusive };
    Ok(GammaLimit { s_grid: s_grid.to_vec(), ratios, estimate, error, gamma_class: g.coeffs, distance, status })
}

/// `I^A(ℏ, h, q, y) = ℏ^{ℓ/2} ∫ S(ℏ,h,q)(ℏ^{−μ}ℏ^{c1}Γ̂) ∪ y` for real `h`.
///
/// `y` is given by its Schubert coefficients at the same `h`. At `h = 0`
/// the nonequivariant pairing is used; otherwise localization.
pub fn ia_integral(x: &FlagVariety, qc: &QConnection, hbar: f64, h: &[f64], q: &[f64], y: &[f64]) -> Result<f64> {
    if !(hbar > 0.0) {
        return Err(Error::Domain("ℏ must be positive".into()));
    }
    if q.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("q must be positive real".into()));
    }
    let (_, sol) = fundamental_solution_auto(qc, hbar, h, q, 1e-17)?;
    let s = sol.eval(q);
    let half = hbar.powf(x.ell() as f64 / 2.0);
    let equivariant = h.iter().any(|&v| v != 0.0);
    if !equivariant {
        let g = gamma_class(x, x.ell().max(8))?;
        let ng = normalize(x, hbar, &g.coeffs)?;
        let z = crate::linalg::mat_vec(&s, &ng);
        return Ok(half * x.pair_numeric(&z, y));
    }
    x.check_generic(h, crate::schubert::DEFAULT_WALL_MARGIN)?;
    let table = x.restriction_table_f64(h);
    let rest = normalized_gamma_restrictions(x, hbar, h);
    let ng = solve_vec(&table, &rest)?;
    let z = crate::linalg::mat_vec(&s, &ng);
    let zr = crate::linalg::mat_vec(&table, &z);
    let yr = crate::linalg::mat_vec(&table, y);
    let prod: Vec<f64> = zr.iter().zip(&yr).map(|(a, b)| a * b).collect();
    Ok(half * x.integrate_numeric(&prod, h))
}

/// Schubert coefficients of `σ^v` at numeric `h`.
pub fn dual_coeffs_at(x: &FlagVariety, v: usize, h: &[f64]) -> Vec<f64> {
    x.dual_coeffs()[v].iter().map(|p| p.eval_f64(h)).collect()
}

/// A section of the connection in `ℏ` at `q = 1`, `h = 0`.
pub struct FlatSection<'a> {
    pub eval: Box<dyn Fn(f64) -> Result<Vec<f64>> + Sync + 'a>,
    pub provenance: Provenance,
}

/// `μ` on Schubert coefficients: `ℓ(v) − ℓ/2`.
pub fn grading(x: &FlagVariety) -> Vec<f64> {
    let half = x.ell() as f64 / 2.0;
    x.wp().iter().map(|w| w.length() as f64 - half).collect()
}

/// Relative residual of `∂_ℏ s − (1/ℏ²) c1⋆s + μ s/ℏ` at `ℏ`.
///
/// The derivative is taken of `g = e^{E/ℏ} s`, which removes the exponential
/// factor; each term is measured against the sum of the term sizes.
pub fn hbar_residual(x: &FlagVariety, qc: &QConnection, section: &FlatSection, hbar: f64, e: f64) -> Result<f64> {
    let g = |t: f64| -> Result<Vec<f64>> { Ok((section.eval)(t)?.iter().map(|v| v * (e / t).exp()).collect()) };
    let d = 1e-3 * hbar;
    let (m2, m1, p1, p2) = (g(hbar - 2.0 * d)?, g(hbar - d)?, g(hbar + d)?, g(hbar + 2.0 * d)?);
    let g0 = g(hbar)?;
    let dg: Vec<f64> = (0..g0.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * d)).collect();
    let c1 = qc.c1_matrix(&vec![1.0; qc.divisors.len()], &vec![0.0; x.rank()]);
    let c1g = crate::linalg::mat_vec(&c1, &g0);
    let mu = grading(x);
    let h2 = hbar * hbar;
    let mut res = 0.0;
    let mut size = 0.0;
    for i in 0..g0.len() {
        let terms = [dg[i], e * g0[i] / h2, -c1g[i] / h2, mu[i] * g0[i] / hbar];
        res += terms.iter().sum::<f64>().powi(2);
        size += terms.iter().map(|t| t.abs()).sum::<f64>().powi(2);
    }
    Ok((res / size.max(f64::MIN_POSITIVE)).sqrt())
}

/// Outcome of the asymptotic class test.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub passes: bool,
    pub e: f64,
    /// Fitted exponent `m` of `ℏ^m`.
    pub m: f64,
    /// Coefficient of `1/ℏ` when it is added to the fit; nonzero signals exponential growth.
    pub exponential_rate: f64,
    pub fit_residual: f64,
    pub hbar_grid: Vec<f64>,
    pub log_norms: Vec<f64>,
    pub trimmed: usize,
}

/// Least squares for `y ≈ Σ_k c_k φ_k(x)`, returning the coefficients and the max residual.
fn lsq(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<(Vec<f64>, f64)> {
    let k = basis.len();
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (&x, &y) in xs.iter().zip(ys) {
        let row: Vec<f64> = basis.iter().map(|f| f(x)).collect();
        for i in 0..k {
            aty[i] += row[i] * y;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let c = solve_vec(&ata, &aty)?;
    let res = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - basis.iter().zip(&c).map(|(f, ci)| ci * f(x)).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    Ok((c, res))
}

/// Tolerances of the asymptotic class test.
pub const FIT_TOL: f64 = 1e-2;
pub const RATE_TOL: f64 = 5e-2;

/// Tests `e^{E/ℏ} s(ℏ) = O(ℏ^m)` by fitting `log‖e^{E/ℏ}s‖` on the grid.
///
/// The section passes when `m log ℏ + c + dℏ` fits within `FIT_TOL` and a
/// `1/ℏ` term added to the model has coefficient below `RATE_TOL`.
pub fn asymptotic_class_test(section: &FlatSection, e: f64, hbar_grid: &[f64]) -> Result<AsymptoticReport> {
    let mut xs = vec![];
    let mut ys = vec![];
    let mut trimmed = 0;
    for &hb in hbar_grid {
        let v = (section.eval)(hb)?;
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let y = norm.ln() + e / hb;
        if norm > 0.0 && y.is_finite() {
            xs.push(hb);
            ys.push(y);
        } else {
            trimmed += 1;
        }
    }
    if xs.len() < 5 {
        return Err(Error::InvalidInput("fewer than five usable grid points".into()));
    }
    let ln = |x: f64| x.ln();
    let one = |_: f64| 1.0;
    let lin = |x: f64| x;
    let inv = |x: f64| 1.0 / x;
    let (c, fit_residual) = lsq(&xs, &ys, &[&ln, &one, &lin])?;
    let (c2, _) = lsq(&xs, &ys, &[&inv, &ln, &one, &lin])?;
    let passes = fit_residual < FIT_TOL && c2[0].abs() < RATE_TOL && c[0].is_finite();
    Ok(AsymptoticReport { passes, e, m: c[0], exponential_rate: c2[0], fit_residual, hbar_grid: xs, log_norms: ys, trimmed })
}

/// A class with coefficients in `ℚ[h][q, ℏ]`: key `(q-degree, ℏ-power)`.
pub type QHClass = BTreeMap<(Vec<u32>, u32), Vec<Poly>>;

/// `A_k = Mir([f^k ω])` for `k = 0..=k_max` by
/// `A_0 = 1`, `A_{k+1} = ℏ V(A_k) + c1⋆A_k − kℏ A_k` with `V = Σ_j n_j q_j ∂_{q_j}`.
pub fn mir_classes(x: &FlagVariety, qc: &QConnection, k_max: usize) -> Vec<QHClass> {
    let n = x.dim_h();
    let r = x.rank();
    let nd = qc.divisors.len();
    let exps = anticanonical_exponents(qc);
    let mut unit = vec![Poly::zero(r); n];
    unit[0] = Poly::one(r);
    let mut a: QHClass = BTreeMap::new();
    a.insert((vec![0; nd], 0), unit);
    let mut out = vec![a.clone()];
    for k in 0..k_max {
        let mut next: QHClass = BTreeMap::new();
        let mut add = |key: (Vec<u32>, u32), v: &[Poly]| {
            let slot = next.entry(key).or_insert_with(|| vec![Poly::zero(r); n]);
            for (s, p) in slot.iter_mut().zip(v) {
                *s = &*s + p;
            }
        };
        for ((d, e), v) in &a {
            let vd: i64 = d.iter().zip(&exps).map(|(a, b)| (*a as i64) * (*b as i64)).sum::<i64>() - k as i64;
            if vd != 0 {
                let c = crate::linalg::rat(vd);
                add((d.clone(), e + 1), &v.iter().map(|p| p.scale(&c)).collect::<Vec<_>>());
            }
            for (dq, m) in &qc.c1.terms {
                let prod: Vec<Poly> = (0..n)
                    .map(|w| (0..n).fold(Poly::zero(r), |acc, u| if m[w][u].is_zero() || v[u].is_zero() { acc } else { &acc + &(&m[w][u] * &v[u]) }))
                    .collect();
                let key: Vec<u32> = d.iter().zip(dq).map(|(a, b)| a + b).collect();
                add((key, *e), &prod);
            }
        }
        next.retain(|_, v| v.iter().any(|p| !p.is_zero()));
        a = next;
        out.push(a.clone());
    }
    out
}

/// Evaluates a `QHClass` at numeric `ℏ`, `h`, `q`.
pub fn eval_qh_class(c: &QHClass, hbar: f64, h: &[f64], q: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for ((d, e), v) in c {
        let f: f64 = d.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product::<f64>() * hbar.powi(*e as i32);
        for (o, p) in out.iter_mut().zip(v) {
            *o += f * p.eval_f64(h);
        }
    }
    out
}

/// Expression of each `σ^v` in the `A_k`.
#[derive(Clone, Debug, Serialize)]
pub struct MirInverse {
    /// `coefficients[v][k]`: `σ^v = Σ_k coefficients[v][k] A_k`.
    pub coefficients: Vec<Vec<f64>>,
    /// Number of independent `A_k` found.
    pub rank: usize,
    /// Ratio of the extreme singular values of the `A_k` matrix.
    pub condition: f64,
    pub complete: bool,
}

/// Largest condition number at which the `A_k` are treated as a basis.
///
/// Quadrature errors of `I^B` near `1e-14` relative are amplified by the condition
/// number, so the bound keeps the reconstructed `σ^v` accurate to about `1e-6`.
pub const MIR_MAX_CONDITION: f64 = 1e8;

/// Solves `σ^v = Σ_{k<n} c_{vk} A_k` with the `A_k` evaluated at `(−ℏ, h, q)`.
///
/// The sign makes `I^B(ℏ, h, t, Σ_k c_{vk}[f^k ω]) = I^A(ℏ, h, q, σ^v)`: rescaling `t`
/// gives `I_{k+1} = −ℏV I_k + kℏ I_k` for the moments, which is the recursion of
/// `mir_classes` with `ℏ ↦ −ℏ`.
pub fn mir_inverse_on_c1_span(x: &FlagVariety, qc: &QConnection, hbar: f64, h: &[f64], q: &[f64]) -> Result<MirInverse> {
    let n = x.dim_h();
    let classes = mir_classes(x, qc, n - 1);
    let cols: Vec<Vec<f64>> = classes.iter().map(|c| eval_qh_class(c, -hbar, h, q, n)).collect();
    let a: Mat<f64> = (0..n).map(|w| (0..n).map(|k| cols[k][w]).collect()).collect();
    let sv = to_nalgebra(&a).singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let low = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if low > 0.0 { top / low } else { f64::INFINITY };
    let rank = sv.iter().filter(|&&s| s * MIR_MAX_CONDITION > top).count();
    if rank < n {
        return Ok(MirInverse { coefficients: vec![], rank, condition, complete: false });
    }
    let b: Mat<f64> = (0..n).map(|w| (0..n).map(|v| dual_coeffs_at(x, v, h)[w]).collect()).collect();
    let sol = solve_mat(&a, &b)?;
    let coefficients = (0..n).map(|v| (0..n).map(|k| sol[k][v]).collect()).collect();
    Ok(MirInverse { coefficients, rank, condition, complete: true })
}
