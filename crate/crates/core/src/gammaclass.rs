//! The Gamma class and the `ℏ`-normalization of classes.
//!
//! `log Γ(1+x) = −γx + Σ_{k≥2} (−1)^k ζ(k)/k · x^k`. The constants γ and
//! ζ(k) are computed here by Euler–Maclaurin summation with exact
//! Bernoulli numbers.

use crate::error::{Error, Result};
use crate::linalg::{rat, rat_to_f64};
use crate::poly::Poly;
use crate::schubert::{CohClass, FlagVariety};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::sync::OnceLock;

/// Bernoulli numbers `B_0..B_n` (with `B_1 = −1/2`).
pub fn bernoulli(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = vec![rat(1)];
    for m in 1..=n {
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0.
        let mut acc = BigRational::zero();
        let mut binom = BigInt::from(1);
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from((m + 1 - k) as i64) / BigInt::from((k + 1) as i64);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from((m + 1) as i64)));
    }
    b
}

const EM_N: usize = 24;
const EM_TERMS: usize = 12;

fn bernoulli_even() -> &'static Vec<f64> {
    static B: OnceLock<Vec<f64>> = OnceLock::new();
    B.get_or_init(|| {
        let b = bernoulli(2 * EM_TERMS);
        (1..=EM_TERMS).map(|j| rat_to_f64(&b[2 * j])).collect()
    })
}

/// The Euler–Mascheroni constant.
pub fn euler_gamma() -> f64 {
    static G: OnceLock<f64> = OnceLock::new();
    *G.get_or_init(|| {
        let n = EM_N as f64;
        let harmonic: f64 = (1..=EM_N).rev().map(|k| 1.0 / k as f64).sum();
        let mut g = harmonic - n.ln() - 0.5 / n;
        for (j, b) in bernoulli_even().iter().enumerate() {
            let m = 2 * (j + 1);
            g += b / (m as f64 * n.powi(m as i32));
        }
        g
    })
}

/// Riemann ζ(s) for integer `s ≥ 2`.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2, "zeta needs s ≥ 2");
    let n = EM_N as f64;
    let sf = s as f64;
    let head: f64 = (1..EM_N).rev().map(|k| (k as f64).powi(-(s as i32))).sum();
    let mut z = head + n.powf(1.0 - sf) / (sf - 1.0) + 0.5 * n.powf(-sf);
    // Rising factorial s(s+1)⋯(s+2j−2) over (2j)!.
    let mut rising = sf;
    let mut fact = 2.0;
    for (j, b) in bernoulli_even().iter().enumerate() {
        let m = 2 * (j + 1);
        z += b / fact * rising * n.powf(-sf - m as f64 + 1.0);
        rising *= (sf + m as f64 - 1.0) * (sf + m as f64);
        fact *= (m + 1) as f64 * (m + 2) as f64;
    }
    z
}

/// Coefficients `b_1..b_K` of `log Γ(1+x)`.
#[derive(Clone, Debug)]
pub struct LogGammaSeries {
    pub b: Vec<f64>,
}

pub fn log_gamma_coeffs(k: usize) -> Result<LogGammaSeries> {
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let mut b = vec![-euler_gamma()];
    for j in 2..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        b.push(sign * zeta(j as u32) / j as f64);
    }
    Ok(LogGammaSeries { b })
}

impl LogGammaSeries {
    /// `Σ b_k x^k`.
    pub fn eval(&self, x: f64) -> f64 {
        self.b.iter().rev().fold(0.0, |acc, c| (acc + c) * x)
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }
}

/// `Γ(x)` for real `x`.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// The Gamma class of a flag variety.
#[derive(Clone, Debug)]
pub struct GammaClass {
    /// Nonequivariant Schubert coefficients; exact after truncation at degree `ℓ`.
    pub coeffs: Vec<f64>,
    pub series: LogGammaSeries,
}

/// Equivariant power sum `Σ_α (wα∨(h))^k` of tangent Chern roots as a class.
pub fn power_sum_class(x: &FlagVariety, k: u32) -> Result<CohClass> {
    let r = x.rank();
    let rest: Vec<Poly> = (0..x.dim_h())
        .map(|w| {
            x.tangent_weights(w).iter().fold(Poly::zero(r), |acc, wt| {
                let lin = Poly::linear(wt);
                let p = (0..k).fold(Poly::one(r), |a, _| &a * &lin);
                &acc + &p
            })
        })
        .collect();
    x.class_from_restrictions(rest)
}

/// Nonequivariant exponential of a nilpotent class (no degree-0 part).
pub fn exp_nilpotent(x: &FlagVariety, a: &[f64]) -> Vec<f64> {
    let n = x.dim_h();
    let mut out = vec![0.0; n];
    out[0] = 1.0;
    let mut term = out.clone();
    for k in 1..=x.ell() {
        term = x.cup_numeric(&term, a).iter().map(|t| t / k as f64).collect();
        out.iter_mut().zip(&term).for_each(|(o, t)| *o += t);
    }
    out
}

/// Nonequivariant `Γ̂ = exp(Σ_k b_k p_k)` with series order `k_order`.
pub fn gamma_class(x: &FlagVariety, k_order: usize) -> Result<GammaClass> {
    if k_order < x.ell() {
        return Err(Error::Precision(format!(
            "series order {k_order} is below the dimension {}",
            x.ell()
        )));
    }
    let series = log_gamma_coeffs(k_order)?;
    let n = x.dim_h();
    let mut log = vec![0.0; n];
    for k in 1..=x.ell() {
        let p = power_sum_class(x, k as u32)?;
        for (l, c) in log.iter_mut().zip(x.at_zero(&p)) {
            *l += series.b[k - 1] * rat_to_f64(&c);
        }
    }
    Ok(GammaClass { coeffs: exp_nilpotent(x, &log), series })
}

/// Radius guard for the equivariant evaluator: the log-Γ series converges for `|x| < 1`.
pub const GAMMA_RADIUS: f64 = 1.0;

impl GammaClass {
    /// `∏_α Γ(1 + (wα∨)(h))` at the fixed point `w`.
    pub fn restriction(x: &FlagVariety, w: usize, h: &[f64]) -> f64 {
        x.tangent_weights(w)
            .iter()
            .map(|wt| gamma(1.0 + linear_value(wt, h)))
            .product()
    }

    /// The same restriction from the truncated series `exp(Σ_k b_k p_k)`.
    pub fn restriction_series(&self, x: &FlagVariety, w: usize, h: &[f64]) -> Result<f64> {
        let roots: Vec<f64> = x.tangent_weights(w).iter().map(|wt| linear_value(wt, h)).collect();
        if let Some(r) = roots.iter().find(|r| r.abs() >= GAMMA_RADIUS) {
            return Err(Error::RadiusViolation(format!("Chern root value {r} outside |x| < 1")));
        }
        Ok(roots.iter().map(|&r| self.series.eval(r)).sum::<f64>().exp())
    }
}

/// `α∨(h)` for a coroot vector and `h_j = α∨_j(h)`.
pub fn linear_value(coroot: &[i64], h: &[f64]) -> f64 {
    coroot.iter().zip(h).map(|(&c, x)| c as f64 * x).sum()
}

/// `c1^T|_w(h)`, the sum of tangent weights.
pub fn c1_restriction(x: &FlagVariety, w: usize, h: &[f64]) -> f64 {
    x.tangent_weights(w).iter().map(|wt| linear_value(wt, h)).sum()
}

/// Nonequivariant first Chern class coefficients.
pub fn c1_class(x: &FlagVariety) -> Result<Vec<f64>> {
    let p = power_sum_class(x, 1)?;
    Ok(x.at_zero(&p).iter().map(rat_to_f64).collect())
}

/// `ℏ^{−μ} ℏ^{c1}` on nonequivariant coefficients: apply `exp(log ℏ · c1 ∪)`,
/// then scale the degree-`d` part by `ℏ^{ℓ/2 − d}`.
pub fn normalize(x: &FlagVariety, hbar: f64, class: &[f64]) -> Result<Vec<f64>> {
    if !(hbar > 0.0) {
        return Err(Error::Domain("ℏ must be positive".into()));
    }
    let c1: Vec<f64> = c1_class(x)?.iter().map(|c| c * hbar.ln()).collect();
    let e = exp_nilpotent(x, &c1);
    let twisted = x.cup_numeric(&e, class);
    let half = x.ell() as f64 / 2.0;
    Ok(twisted
        .iter()
        .enumerate()
        .map(|(v, c)| c * hbar.powf(half - x.wp()[v].length() as f64))
        .collect())
}

/// Equivariant normalization at numeric `h`, in restriction form.
///
/// Each coefficient must be homogeneous so that every term carries a total
/// degree; the value at `w` is `ℏ^{ℓ/2} ℏ^{c1|_w(h)/ℏ} a|_w(h/ℏ)`.
pub fn normalize_equivariant(x: &FlagVariety, hbar: f64, class: &CohClass, h: &[f64]) -> Result<Vec<f64>> {
    if !(hbar > 0.0) {
        return Err(Error::Domain("ℏ must be positive".into()));
    }
    for c in &class.coeffs {
        if let Some(d) = c.degree() {
            if !c.is_homogeneous_of(d) {
                return Err(Error::InvalidInput("class coefficients must be homogeneous".into()));
            }
        }
    }
    let hs: Vec<f64> = h.iter().map(|v| v / hbar).collect();
    let half = x.ell() as f64 / 2.0;
    Ok((0..x.dim_h())
        .map(|w| {
            let a = class.restrictions[w].eval_f64(&hs);
            hbar.powf(half) * hbar.powf(c1_restriction(x, w, h) / hbar) * a
        })
        .collect())
}

/// Restrictions of `ℏ^{−μ}ℏ^{c1}Γ̂` at numeric `h`.
pub fn normalized_gamma_restrictions(x: &FlagVariety, hbar: f64, h: &[f64]) -> Vec<f64> {
    let hs: Vec<f64> = h.iter().map(|v| v / hbar).collect();
    let half = x.ell() as f64 / 2.0;
    (0..x.dim_h())
        .map(|w| hbar.powf(half) * hbar.powf(c1_restriction(x, w, h) / hbar) * GammaClass::restriction(x, w, &hs))
        .collect()
}
