//! Equivariant quantum multiplication by divisors.
//!
//! Operators are stored column-wise: entry `[w][v]` is the coefficient of
//! `σ_w` in the product with `σ_v`. Quantum parameters are indexed by the
//! simple roots outside `I_P`, in increasing order.

use crate::error::{Error, Result};
use crate::linalg::{rat, rat_to_f64, solve_vec, Mat};
use crate::poly::Poly;
use crate::schubert::FlagVariety;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;

/// A matrix of polynomials in `h` for each quantum degree `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix {
    pub n: usize,
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, Mat<Poly>>,
}

impl QMatrix {
    pub fn zero(n: usize, nvars: usize) -> Self {
        QMatrix { n, nvars, terms: BTreeMap::new() }
    }

    fn slot(&mut self, d: Vec<u32>) -> &mut Mat<Poly> {
        let (n, nv) = (self.n, self.nvars);
        self.terms.entry(d).or_insert_with(|| vec![vec![Poly::zero(nv); n]; n])
    }

    pub fn add_entry(&mut self, d: Vec<u32>, w: usize, v: usize, p: &Poly) {
        let s = self.slot(d);
        s[w][v] = &s[w][v] + p;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, m| m.iter().flatten().any(|p| !p.is_zero()));
    }

    pub fn add(&self, o: &QMatrix) -> QMatrix {
        let mut out = self.clone();
        for (d, m) in &o.terms {
            for w in 0..self.n {
                for v in 0..self.n {
                    if !m[w][v].is_zero() {
                        out.add_entry(d.clone(), w, v, &m[w][v]);
                    }
                }
            }
        }
        out.prune();
        out
    }

    pub fn scale(&self, c: &BigRational) -> QMatrix {
        let mut out = self.clone();
        for m in out.terms.values_mut() {
            for p in m.iter_mut().flatten() {
                *p = p.scale(c);
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, o: &QMatrix) -> QMatrix {
        let mut out = QMatrix::zero(self.n, self.nvars);
        for (d1, a) in &self.terms {
            for (d2, b) in &o.terms {
                let d: Vec<u32> = d1.iter().zip(d2).map(|(x, y)| x + y).collect();
                for w in 0..self.n {
                    for k in 0..self.n {
                        if a[w][k].is_zero() {
                            continue;
                        }
                        for v in 0..self.n {
                            if !b[k][v].is_zero() {
                                let p = &a[w][k] * &b[k][v];
                                out.add_entry(d.clone(), w, v, &p);
                            }
                        }
                    }
                }
            }
        }
        out.prune();
        out
    }

    /// Applies `q_j ∂_{q_j}`.
    pub fn q_derivative(&self, j: usize) -> QMatrix {
        let mut out = QMatrix::zero(self.n, self.nvars);
        for (d, m) in &self.terms {
            if d[j] == 0 {
                continue;
            }
            let c = rat(d[j] as i64);
            out.terms.insert(d.clone(), m.iter().map(|r| r.iter().map(|p| p.scale(&c)).collect()).collect());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|m| m.iter().flatten().all(|p| p.is_zero()))
    }

    /// Evaluation at numeric `q` and `h`.
    pub fn eval(&self, q: &[f64], h: &[f64]) -> Mat<f64> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (d, m) in &self.terms {
            let qd: f64 = d.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
            for w in 0..self.n {
                for v in 0..self.n {
                    if !m[w][v].is_zero() {
                        out[w][v] += qd * m[w][v].eval_f64(h);
                    }
                }
            }
        }
        out
    }

    pub fn eval_c(&self, q: &[Complex64], h: &[Complex64]) -> Mat<Complex64> {
        let mut out = vec![vec![Complex64::zero(); self.n]; self.n];
        for (d, m) in &self.terms {
            let qd: Complex64 = d.iter().zip(q).map(|(&k, x)| x.powi(k as i32)).product();
            for w in 0..self.n {
                for v in 0..self.n {
                    if !m[w][v].is_zero() {
                        out[w][v] += qd * m[w][v].eval_c64(h);
                    }
                }
            }
        }
        out
    }

    /// The coefficient matrices at `h`, keyed by quantum degree.
    pub fn at_h(&self, h: &[f64]) -> BTreeMap<Vec<u32>, Mat<f64>> {
        self.terms
            .iter()
            .map(|(d, m)| (d.clone(), m.iter().map(|r| r.iter().map(|p| p.eval_f64(h)).collect()).collect()))
            .collect()
    }

    pub fn at_h_rat(&self, h: &[BigRational]) -> BTreeMap<Vec<u32>, Mat<BigRational>> {
        self.terms
            .iter()
            .map(|(d, m)| (d.clone(), m.iter().map(|r| r.iter().map(|p| p.eval_rat(h)).collect()).collect()))
            .collect()
    }
}

/// Quantum multiplication by divisor classes on a flag variety.
#[derive(Debug)]
pub struct QConnection {
    /// Indices `I ∖ I_P` (0-based).
    pub divisors: Vec<usize>,
    /// `⟨c1, β_j⟩` for each divisor index.
    pub c1_pairings: Vec<i64>,
    /// `σ_{s_j} ⋆` for each divisor index.
    pub chevalley: Vec<QMatrix>,
    /// `c1^T(L_{ω∨_j}) ⋆ = σ_{s_j} ⋆ − ω∨_j(h)`.
    pub line_bundle: Vec<QMatrix>,
    /// `c1^T(T) ⋆`.
    pub c1: QMatrix,
}

/// `⟨c1, α⟩ = Σ_{β ∈ R⁺∖R⁺_P} β∨(α)` for a root vector.
pub fn c1_pairing(x: &FlagVariety, root: &[i64]) -> i64 {
    x.rs.non_levi_roots(&x.par.ip)
        .iter()
        .map(|&k| x.rs.pair(&x.rs.positive_coroots[k], root))
        .sum()
}

/// `ω∨_i(h)` as a linear polynomial in `h_j = α∨_j(h)`.
pub fn coweight_form(x: &FlagVariety, i: usize) -> Poly {
    let r = x.rank();
    x.rs.fundamental_coweight(i)
        .iter()
        .enumerate()
        .fold(Poly::zero(r), |acc, (k, c)| &acc + &Poly::var(r, k).scale(c))
}

/// Equivariant quantum Chevalley product `σ_{s_i} ⋆ σ_v` as a list of
/// `(quantum degree, w, coefficient)`.
pub fn quantum_chevalley(x: &FlagVariety, i: usize, v: usize) -> Result<Vec<(Vec<u32>, usize, Poly)>> {
    let divisors = x.par.complement(x.rank());
    if !divisors.contains(&i) {
        return Err(Error::InvalidInput(format!("index {} lies in I_P", i + 1)));
    }
    let si = x.index_of_word(&[i + 1])?;
    let nd = divisors.len();
    let r = x.rank();
    let rs = &x.rs;
    let ve = &x.wp()[v];
    let mut out = vec![];
    let diag = x.restriction(si, v).clone();
    if !diag.is_zero() {
        out.push((vec![0; nd], v, diag));
    }
    for (k, alpha) in rs.positive_roots.iter().enumerate() {
        let coef = alpha[i];
        if coef == 0 {
            continue;
        }
        let u = rs.mul_reflection_right(ve, k);
        if u.length() == ve.length() + 1 {
            if let Some(w) = x.par.position(&u) {
                out.push((vec![0; nd], w, Poly::constant(r, rat(coef))));
            }
        }
        if rs.in_levi(alpha, &x.par.ip) {
            continue;
        }
        let c1a = c1_pairing(x, alpha);
        let target = ve.length() as i64 + 1 - c1a;
        if target < 0 {
            continue;
        }
        let m = rs.minimal_rep(&u, &x.par.ip);
        if m.length() as i64 == target {
            let w = x.par.position(&m).expect("minimal representative");
            let d: Vec<u32> = divisors.iter().map(|&j| alpha[j] as u32).collect();
            let deg: i64 = divisors
                .iter()
                .zip(&d)
                .map(|(&j, &dj)| dj as i64 * c1_pairing(x, &unit(r, j)))
                .sum();
            assert_eq!(
                x.wp()[w].length() as i64 + deg,
                ve.length() as i64 + 1,
                "quantum Chevalley degree mismatch"
            );
            out.push((d, w, Poly::constant(r, rat(coef))));
        }
    }
    Ok(out)
}

fn unit(r: usize, j: usize) -> Vec<i64> {
    let mut e = vec![0; r];
    e[j] = 1;
    e
}

impl QConnection {
    pub fn new(x: &FlagVariety) -> Result<Self> {
        let r = x.rank();
        let n = x.dim_h();
        let divisors = x.par.complement(r);
        let c1_pairings: Vec<i64> = divisors.iter().map(|&j| c1_pairing(x, &unit(r, j))).collect();
        let mut chevalley = vec![];
        let mut line_bundle = vec![];
        for &i in &divisors {
            let mut m = QMatrix::zero(n, r);
            for v in 0..n {
                for (d, w, p) in quantum_chevalley(x, i, v)? {
                    m.add_entry(d, w, v, &p);
                }
            }
            m.prune();
            let mut lb = m.clone();
            let om = -&coweight_form(x, i);
            for v in 0..n {
                lb.add_entry(vec![0; divisors.len()], v, v, &om);
            }
            lb.prune();
            chevalley.push(m);
            line_bundle.push(lb);
        }
        let mut c1 = QMatrix::zero(n, r);
        for (lb, &c) in line_bundle.iter().zip(&c1_pairings) {
            c1 = c1.add(&lb.scale(&rat(c)));
        }
        Ok(QConnection { divisors, c1_pairings, chevalley, line_bundle, c1 })
    }

    pub fn n(&self) -> usize {
        self.c1.n
    }

    /// Exact flatness defects: `[C_i, C_j]` and `q_j∂_j C_i − q_i∂_i C_j`.
    pub fn flatness_defects(&self) -> Vec<(usize, usize, bool, bool)> {
        let k = self.divisors.len();
        let mut out = vec![];
        for a in 0..k {
            for b in a + 1..k {
                let ci = &self.line_bundle[a];
                let cj = &self.line_bundle[b];
                let comm = ci.mul(cj).add(&cj.mul(ci).scale(&rat(-1)));
                let curl = ci.q_derivative(b).add(&cj.q_derivative(a).scale(&rat(-1)));
                out.push((self.divisors[a], self.divisors[b], comm.is_zero(), curl.is_zero()));
            }
        }
        out
    }

    /// `c1 ⋆` at numeric `q` and `h`.
    pub fn c1_matrix(&self, q: &[f64], h: &[f64]) -> Mat<f64> {
        self.c1.eval(q, h)
    }
}

/// Certification status of the spectral statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralStatus {
    Certified,
    Inconclusive,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigen {
    pub re: f64,
    pub im: f64,
}

/// Spectrum of `c1 ⋆` at positive real `q` and `h = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub space: String,
    pub q: Vec<f64>,
    pub eigenvalues: Vec<Eigen>,
    #[serde(rename = "E_O")]
    pub e_o: f64,
    pub multiplicity: usize,
    /// `E_O` minus the largest modulus among the other eigenvalues.
    pub gap: f64,
    /// `E_O` minus the largest real part among the other eigenvalues.
    pub gap_real: f64,
    /// Eigenvalues whose modulus equals `E_O` within tolerance.
    pub maximal_modulus_set: Vec<Eigen>,
    pub nonnegative: bool,
    pub indecomposable: bool,
    pub status: SpectralStatus,
}

pub const CLUSTER_TOL: f64 = 1e-8;

/// Eigenvalues of a real matrix.
pub fn eigenvalues(m: &Mat<f64>) -> Result<Vec<Complex64>> {
    let a = crate::linalg::to_nalgebra(m);
    let ev = a
        .try_schur(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?
        .complex_eigenvalues();
    let out: Vec<Complex64> = ev.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    Ok(out)
}

/// Whether the directed support graph of a matrix is strongly connected.
pub fn is_indecomposable(m: &Mat<f64>) -> bool {
    let n = m.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..n {
                let e = if forward { m[b][a] } else { m[a][b] };
                if e != 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    n == 0 || (reach(true) && reach(false))
}

pub fn conjecture_o_certify(x: &FlagVariety, qc: &QConnection, q: &[f64]) -> Result<SpectralReport> {
    if q.len() != qc.divisors.len() || q.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("q must be a positive vector over I∖I_P".into()));
    }
    let m = qc.c1_matrix(q, &vec![0.0; x.rank()]);
    let ev = eigenvalues(&m)?;
    let maxmod = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = CLUSTER_TOL * maxmod.max(1.0);
    // E_O: the largest real eigenvalue, which for a nonnegative matrix is the spectral radius.
    let e_o = ev
        .iter()
        .filter(|z| z.im.abs() <= tol)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let multiplicity = ev.iter().filter(|z| (*z - Complex64::new(e_o, 0.0)).norm() <= tol).count();
    let others: Vec<&Complex64> = ev.iter().filter(|z| (*z - Complex64::new(e_o, 0.0)).norm() > tol).collect();
    let gap = e_o - others.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gap_real = e_o - others.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let maximal_modulus_set: Vec<Eigen> = ev
        .iter()
        .filter(|z| (z.norm() - maxmod).abs() <= tol)
        .map(|z| Eigen { re: z.re, im: z.im })
        .collect();
    let nonnegative = m.iter().flatten().all(|&v| v >= 0.0);
    let indecomposable = is_indecomposable(&m);
    // Close-but-separate eigenvalues make the multiplicity call unreliable.
    let near = others.iter().any(|z| (**z - Complex64::new(e_o, 0.0)).norm() <= 1e3 * tol);
    let status = if !(e_o > 0.0) || (e_o - maxmod).abs() > tol {
        SpectralStatus::Failed
    } else if near {
        SpectralStatus::Inconclusive
    } else if multiplicity == 1 {
        SpectralStatus::Certified
    } else {
        SpectralStatus::Failed
    };
    Ok(SpectralReport {
        space: x.label.clone(),
        q: q.to_vec(),
        eigenvalues: ev.iter().map(|z| Eigen { re: z.re, im: z.im }).collect(),
        e_o,
        multiplicity,
        gap,
        gap_real,
        maximal_modulus_set,
        nonnegative,
        indecomposable,
        status,
    })
}

/// The ring homomorphism `λ` with positive values on Schubert classes.
#[derive(Clone, Debug, Serialize)]
pub struct PositivePoint {
    /// `λ(σ_v)` indexed like `W^P`.
    pub values: Vec<f64>,
    /// Smallest `N` with every coefficient of `Σ_{k≤N} c1^{⋆k}` positive.
    pub n_used: usize,
    #[serde(rename = "E_O")]
    pub e_o: f64,
    /// `|λ(c1) − E_O|`.
    pub c1_defect: f64,
    /// Largest `|λ(σ_{s_i} ⋆ σ_v) − λ(σ_{s_i})λ(σ_v)|` over divisors and all `v`.
    pub homomorphism_defect: f64,
}

pub fn schubert_positive_point(x: &FlagVariety, qc: &QConnection, q: &[f64], cap: usize) -> Result<PositivePoint> {
    let h0 = vec![0.0; x.rank()];
    let m = qc.c1_matrix(q, &h0);
    let n = m.len();
    let mut xk = vec![0.0; n];
    xk[0] = 1.0;
    let mut acc = xk.clone();
    let mut n_used = None;
    for k in 0..=cap {
        if acc.iter().all(|&c| c > 0.0) {
            n_used = Some(k);
            break;
        }
        xk = crate::linalg::mat_vec(&m, &xk);
        acc.iter_mut().zip(&xk).for_each(|(a, b)| *a += b);
    }
    let n_used = n_used.ok_or_else(|| Error::NoConvergence {
        iterations: cap,
        detail: "Σ c1^k never became Schubert-positive".into(),
    })?;
    let rep = conjecture_o_certify(x, qc, q)?;
    let e = rep.e_o;
    // Left Perron vector: inverse iteration on Mᵀ near E_O.
    let shift = e * (1.0 + 1e-9) + 1e-12;
    let mt: Mat<f64> = (0..n)
        .map(|i| (0..n).map(|j| m[j][i] - if i == j { shift } else { 0.0 }).collect())
        .collect();
    let mut lam = vec![1.0; n];
    for _ in 0..50 {
        let next = solve_vec(&mt, &lam)?;
        let s = next[0];
        let new: Vec<f64> = next.iter().map(|v| v / s).collect();
        let diff = new.iter().zip(&lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        lam = new;
        if diff < 1e-15 {
            break;
        }
    }
    if lam.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NoConvergence { iterations: 50, detail: "Perron vector not positive".into() });
    }
    let lc1: f64 = (0..n).map(|w| lam[w] * m[w][0]).sum();
    let mut hom = 0.0f64;
    for (k, ch) in qc.chevalley.iter().enumerate() {
        let cm = ch.eval(q, &h0);
        let i = qc.divisors[k];
        let si = x.index_of_word(&[i + 1])?;
        for v in 0..n {
            let lhs: f64 = (0..n).map(|w| lam[w] * cm[w][v]).sum();
            hom = hom.max((lhs - lam[si] * lam[v]).abs() / lhs.abs().max(1.0));
        }
    }
    Ok(PositivePoint {
        values: lam,
        n_used,
        e_o: e,
        c1_defect: (lc1 - e).abs(),
        homomorphism_defect: hom,
    })
}

/// Symbolic `q^d` as a label like `q1^2 q3`.
pub fn q_label(divisors: &[usize], d: &[u32]) -> String {
    let parts: Vec<String> = divisors
        .iter()
        .zip(d)
        .filter(|(_, &k)| k > 0)
        .map(|(&j, &k)| if k == 1 { format!("q{}", j + 1) } else { format!("q{}^{}", j + 1, k) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

/// Nonequivariant operator entries at `h = 0` as rationals.
pub fn at_zero(m: &QMatrix) -> BTreeMap<Vec<u32>, Mat<f64>> {
    m.terms
        .iter()
        .map(|(d, mm)| (d.clone(), mm.iter().map(|r| r.iter().map(|p| rat_to_f64(&p.at_zero())).collect()).collect()))
        .collect()
}
