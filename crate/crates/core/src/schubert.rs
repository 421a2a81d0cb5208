//! Equivariant Schubert calculus by fixed-point localization.
//!
//! A [`FlagVariety`] caches the restriction table `σ_v|_w` (Billey's
//! subword formula), the tangent weights at each fixed point and, on
//! demand, the dual basis `σ^v`.

use crate::error::{Error, Result};
use crate::lie::{build_root_system, CartanDatum, ParabolicData, RootSystem, WeylElement};
use crate::linalg::{rat, rat_to_f64};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::sync::OnceLock;

use crate::poly::{product_of_linear, Poly};

/// Default relative distance from root hyperplanes for numeric `h`.
pub const DEFAULT_WALL_MARGIN: f64 = 1e-3;

/// A flag variety `G∨/P∨` with its localization data.
#[derive(Debug)]
pub struct FlagVariety {
    pub label: String,
    pub rs: RootSystem,
    pub par: ParabolicData,
    /// `restriction[w][v] = σ_v|_w`.
    restriction: Vec<Vec<Poly>>,
    /// Tangent weights `wα∨` for `α ∈ −(R⁺∖R⁺_P)`, as coroot vectors.
    weights: Vec<Vec<Vec<i64>>>,
    euler: Vec<Poly>,
    /// Product of the distinct positive coroots occurring as tangent weights.
    common_denominator: (Poly, Vec<Vec<i64>>),
    dual: OnceLock<Vec<Vec<Poly>>>,
    ring: OnceLock<Vec<Vec<Vec<f64>>>>,
}

/// A class known through both its Schubert coefficients and its restrictions.
#[derive(Clone, Debug, PartialEq)]
pub struct CohClass {
    /// Coefficient on `σ_v`, indexed like `W^P`.
    pub coeffs: Vec<Poly>,
    /// Value at the fixed point `wP∨`, indexed like `W^P`.
    pub restrictions: Vec<Poly>,
}

fn positive_part(v: &[i64]) -> (i64, Vec<i64>) {
    if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        (-1, v.iter().map(|x| -x).collect())
    } else {
        (1, v.to_vec())
    }
}

/// Parses a space label.
///
/// Accepted forms: `P<n>`, `Gr<k><n>` (single digits) or `Gr<k>,<n>`,
/// `Fl<n>`, and the generic `<Type><rank>:<i,j,...>` listing `I_P` (1-based,
/// possibly empty).
pub fn parse_space(label: &str) -> Result<(CartanDatum, Vec<usize>)> {
    let bad = || Error::InvalidInput(format!("unrecognized space label '{label}'"));
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    if let Some((ty, ip)) = label.split_once(':') {
        let mut chars = ty.chars();
        let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
        let rank = num(chars.as_str())?;
        let datum = CartanDatum::new(letter, rank)?;
        let ip = ip
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| num(s.trim()).and_then(|i| if i >= 1 { Ok(i - 1) } else { Err(bad()) }))
            .collect::<Result<Vec<_>>>()?;
        return Ok((datum, ip));
    }
    if let Some(n) = label.strip_prefix('P') {
        let n = num(n)?;
        if n == 0 {
            return Err(bad());
        }
        return Ok((CartanDatum::new('A', n)?, (1..n).collect()));
    }
    if let Some(rest) = label.strip_prefix("Gr") {
        let (k, n) = match rest.split_once(',') {
            Some((k, n)) => (num(k)?, num(n)?),
            None if rest.len() == 2 => (num(&rest[..1])?, num(&rest[1..])?),
            None => return Err(bad()),
        };
        if k == 0 || k >= n {
            return Err(bad());
        }
        let ip = (0..n - 1).filter(|&i| i != k - 1).collect();
        return Ok((CartanDatum::new('A', n - 1)?, ip));
    }
    if let Some(n) = label.strip_prefix("Fl") {
        let n = num(n)?;
        if n < 2 {
            return Err(bad());
        }
        return Ok((CartanDatum::new('A', n - 1)?, vec![]));
    }
    Err(bad())
}

impl FlagVariety {
    pub fn from_label(label: &str) -> Result<Self> {
        let (datum, ip) = parse_space(label)?;
        FlagVariety::new(label, datum, &ip, crate::lie::DEFAULT_WEYL_CAP)
    }

    pub fn new(label: &str, datum: CartanDatum, ip: &[usize], cap: usize) -> Result<Self> {
        let rs = build_root_system(datum)?;
        let par = rs.minimal_reps(ip, cap)?;
        let n = par.len();
        let restriction: Vec<Vec<Poly>> = par
            .wp
            .iter()
            .map(|w| billey_row(&rs, &par, &w.word))
            .collect();
        let non_levi = rs.non_levi_roots(&par.ip);
        let weights: Vec<Vec<Vec<i64>>> = par
            .wp
            .iter()
            .map(|w| {
                non_levi
                    .iter()
                    .map(|&k| {
                        let img = rs.act_coroot(w, &rs.positive_coroots[k]);
                        img.iter().map(|x| -x).collect()
                    })
                    .collect()
            })
            .collect();
        let r = rs.rank();
        let euler = weights.iter().map(|ws| product_of_linear(ws, r)).collect();
        let mut distinct: Vec<Vec<i64>> = vec![];
        for ws in &weights {
            for wt in ws {
                let (_, p) = positive_part(wt);
                if !distinct.contains(&p) {
                    distinct.push(p);
                }
            }
        }
        let den = product_of_linear(&distinct, r);
        debug_assert_eq!(restriction.len(), n);
        Ok(FlagVariety {
            label: label.to_string(),
            rs,
            par,
            restriction,
            weights,
            euler,
            common_denominator: (den, distinct),
            dual: OnceLock::new(),
            ring: OnceLock::new(),
        })
    }

    /// Number of Schubert classes.
    pub fn dim_h(&self) -> usize {
        self.par.len()
    }

    /// Complex dimension `ℓ`.
    pub fn ell(&self) -> usize {
        self.par.ell
    }

    pub fn rank(&self) -> usize {
        self.rs.rank()
    }

    pub fn wp(&self) -> &[WeylElement] {
        &self.par.wp
    }

    /// Index of the point class `σ_{top}` (the longest element of `W^P`).
    pub fn top(&self) -> usize {
        self.dim_h() - 1
    }

    /// Index of `σ_v` for `v` given as a 1-based word.
    pub fn index_of_word(&self, word1: &[usize]) -> Result<usize> {
        let w0: Vec<usize> = word1
            .iter()
            .map(|&i| i.checked_sub(1).ok_or_else(|| Error::InvalidInput("letters are 1-based".into())))
            .collect::<Result<_>>()?;
        let w = self.rs.element(&w0)?;
        self.par.position(&w).ok_or(Error::NotMinimal)
    }

    /// `σ_v|_w` by table lookup.
    pub fn restriction(&self, v: usize, w: usize) -> &Poly {
        &self.restriction[w][v]
    }

    pub fn tangent_weights(&self, w: usize) -> &[Vec<i64>] {
        &self.weights[w]
    }

    pub fn euler(&self, w: usize) -> &Poly {
        &self.euler[w]
    }

    fn nvars(&self) -> usize {
        self.rank()
    }

    /// Checks that numeric `h` stays away from every root hyperplane.
    pub fn check_generic(&self, h: &[f64], margin: f64) -> Result<()> {
        let scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Err(Error::NearWall { h: h.to_vec(), root: self.rs.positive_coroots[0].clone(), margin });
        }
        for c in &self.rs.positive_coroots {
            let v: f64 = c.iter().zip(h).map(|(&a, x)| a as f64 * x).sum();
            if v.abs() < margin * scale {
                return Err(Error::NearWall { h: h.to_vec(), root: c.clone(), margin });
            }
        }
        Ok(())
    }

    pub fn class_from_coeffs(&self, coeffs: Vec<Poly>) -> CohClass {
        let restrictions = (0..self.dim_h())
            .map(|w| {
                coeffs
                    .iter()
                    .enumerate()
                    .fold(Poly::zero(self.nvars()), |acc, (v, c)| &acc + &(c * &self.restriction[w][v]))
            })
            .collect();
        CohClass { coeffs, restrictions }
    }

    /// Triangular solve against the restriction table.
    pub fn class_from_restrictions(&self, restrictions: Vec<Poly>) -> Result<CohClass> {
        let n = self.dim_h();
        let mut coeffs: Vec<Poly> = Vec::with_capacity(n);
        for w in 0..n {
            let mut rest = restrictions[w].clone();
            for (v, c) in coeffs.iter().enumerate() {
                let t = &self.restriction[w][v];
                if !t.is_zero() && !c.is_zero() {
                    rest = &rest - &(c * t);
                }
            }
            coeffs.push(rest.div_exact(&self.restriction[w][w])?);
        }
        Ok(CohClass { coeffs, restrictions })
    }

    pub fn schubert(&self, v: usize) -> CohClass {
        let mut c = vec![Poly::zero(self.nvars()); self.dim_h()];
        c[v] = Poly::one(self.nvars());
        self.class_from_coeffs(c)
    }

    pub fn unit(&self) -> CohClass {
        self.schubert(0)
    }

    pub fn cup(&self, a: &CohClass, b: &CohClass) -> Result<CohClass> {
        let r = a.restrictions.iter().zip(&b.restrictions).map(|(x, y)| x * y).collect();
        self.class_from_restrictions(r)
    }

    /// Localization integral `Σ_w a|_w / e_w`, computed exactly.
    pub fn integrate(&self, a: &CohClass) -> Result<Poly> {
        self.integrate_restrictions(&a.restrictions)
    }

    pub fn integrate_restrictions(&self, rest: &[Poly]) -> Result<Poly> {
        let (den, distinct) = &self.common_denominator;
        let mut num = Poly::zero(self.nvars());
        for (w, a) in rest.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let mut sign = 1i64;
            let mut used = vec![false; distinct.len()];
            for wt in &self.weights[w] {
                let (s, p) = positive_part(wt);
                sign *= s;
                let k = distinct.iter().position(|d| *d == p).expect("weight listed");
                used[k] = true;
            }
            let rest_forms: Vec<Vec<i64>> = distinct
                .iter()
                .zip(&used)
                .filter(|(_, u)| !**u)
                .map(|(d, _)| d.clone())
                .collect();
            let cofactor = product_of_linear(&rest_forms, self.nvars()).scale(&rat(sign));
            num = &num + &(a * &cofactor);
        }
        num.div_exact(den)
    }

    /// Localization integral at numeric `h` from numeric restrictions.
    pub fn integrate_numeric(&self, rest: &[f64], h: &[f64]) -> f64 {
        rest.iter()
            .enumerate()
            .map(|(w, a)| a / self.euler[w].eval_f64(h))
            .sum()
    }

    /// Pairing matrix `∫ σ_u ∪ σ_v`.
    pub fn pairing_matrix(&self) -> Result<Vec<Vec<Poly>>> {
        let n = self.dim_h();
        let mut p = vec![vec![Poly::zero(self.nvars()); n]; n];
        for u in 0..n {
            for v in u..n {
                let rest: Vec<Poly> = (0..n)
                    .map(|w| &self.restriction[w][u] * &self.restriction[w][v])
                    .collect();
                let x = self.integrate_restrictions(&rest)?;
                p[u][v] = x.clone();
                p[v][u] = x;
            }
        }
        Ok(p)
    }

    /// Schubert coefficients of every dual class: `dual_coeffs()[v][u]` is the
    /// coefficient of `σ_u` in `σ^v`.
    pub fn dual_coeffs(&self) -> &Vec<Vec<Poly>> {
        self.dual.get_or_init(|| {
            let p = self.pairing_matrix().expect("localization is exact");
            invert_unimodular(&p).expect("pairing matrix has constant determinant")
        })
    }

    pub fn dual_class(&self, v: usize) -> CohClass {
        self.class_from_coeffs(self.dual_coeffs()[v].clone())
    }

    /// Nonequivariant structure constants: `ring()[u][v][w]` is the
    /// coefficient of `σ_w` in `σ_u ∪ σ_v`.
    pub fn ring(&self) -> &Vec<Vec<Vec<f64>>> {
        self.ring.get_or_init(|| {
            let n = self.dim_h();
            let mut t = vec![vec![vec![0.0; n]; n]; n];
            for u in 0..n {
                for v in u..n {
                    if self.par.wp[u].length() + self.par.wp[v].length() > self.ell() {
                        continue;
                    }
                    let c = self.cup(&self.schubert(u), &self.schubert(v)).expect("exact");
                    let row: Vec<f64> = c.coeffs.iter().map(|p| rat_to_f64(&p.at_zero())).collect();
                    t[u][v] = row.clone();
                    t[v][u] = row;
                }
            }
            t
        })
    }

    /// Nonequivariant cup product of coefficient vectors.
    pub fn cup_numeric(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let t = self.ring();
        let n = self.dim_h();
        let mut out = vec![0.0; n];
        for u in 0..n {
            if a[u] == 0.0 {
                continue;
            }
            for v in 0..n {
                if b[v] == 0.0 {
                    continue;
                }
                for w in 0..n {
                    out[w] += a[u] * b[v] * t[u][v][w];
                }
            }
        }
        out
    }

    /// Nonequivariant Poincaré pairing `∫ a ∪ b`.
    pub fn pair_numeric(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cup_numeric(a, b)[self.top()]
    }

    /// Nonequivariant Schubert coefficients of a class.
    pub fn at_zero(&self, a: &CohClass) -> Vec<BigRational> {
        a.coeffs.iter().map(|c| c.at_zero()).collect()
    }

    /// Restrictions of Schubert classes evaluated at numeric `h`.
    pub fn restriction_table_f64(&self, h: &[f64]) -> Vec<Vec<f64>> {
        self.restriction
            .iter()
            .map(|row| row.iter().map(|p| p.eval_f64(h)).collect())
            .collect()
    }

    /// CSV rows `w,v,restriction` of the restriction table.
    pub fn restriction_csv(&self) -> Vec<(String, String, String)> {
        let mut rows = vec![];
        for (w, we) in self.par.wp.iter().enumerate() {
            for (v, ve) in self.par.wp.iter().enumerate() {
                rows.push((we.to_string(), ve.to_string(), self.restriction[w][v].to_string()));
            }
        }
        rows
    }
}

/// `σ_v|_w` for every `v ∈ W^P`, along the given reduced word of `w`.
fn billey_row(rs: &RootSystem, par: &ParabolicData, word: &[usize]) -> Vec<Poly> {
    let r = rs.rank();
    let mut out = vec![Poly::zero(r); par.len()];
    for (m, p) in billey_subwords(rs, word) {
        let e = rs.from_matrix(m);
        if let Some(k) = par.position(&e) {
            out[k] = p;
        }
    }
    out
}

/// Sums over reduced subwords grouped by product element.
fn billey_subwords(rs: &RootSystem, word: &[usize]) -> HashMap<Vec<Vec<i64>>, Poly> {
    let r = rs.rank();
    let id = rs.identity().matrix().clone();
    let mut states: HashMap<Vec<Vec<i64>>, Poly> = HashMap::new();
    states.insert(id.clone(), Poly::one(r));
    let mut prefix = id;
    for &i in word {
        let form: Vec<i64> = (0..r).map(|k| prefix[k][i]).collect();
        let lin = Poly::linear(&form);
        let mut next = states.clone();
        for (u, p) in &states {
            let col_pos = (0..r).all(|k| u[k][i] >= 0);
            if !col_pos {
                continue;
            }
            let nu = rs.reflect_matrix_right(u, i);
            let val = p * &lin;
            let slot = next.entry(nu).or_insert_with(|| Poly::zero(r));
            *slot = &*slot + &val;
        }
        states = next;
        prefix = rs.reflect_matrix_right(&prefix, i);
    }
    states
}

/// Billey restriction `σ_v|_w` along a chosen reduced word of `w`.
pub fn billey_restriction(rs: &RootSystem, par: &ParabolicData, v: &WeylElement, w_word: &[usize]) -> Result<Poly> {
    if par.position(v).is_none() {
        return Err(Error::NotMinimal);
    }
    let w = rs.element(w_word)?;
    if w.length() != w_word.len() {
        return Err(Error::NotReduced(w_word.iter().map(|i| i + 1).collect()));
    }
    if par.position(&w).is_none() {
        return Err(Error::NotMinimal);
    }
    Ok(billey_subwords(rs, w_word)
        .remove(v.matrix())
        .unwrap_or_else(|| Poly::zero(rs.rank())))
}

/// Inverts a polynomial matrix whose determinant is a nonzero constant,
/// pivoting only on constant entries.
pub fn invert_unimodular(p: &[Vec<Poly>]) -> Result<Vec<Vec<Poly>>> {
    let n = p.len();
    let nv = if n == 0 { 0 } else { p[0][0].nvars() };
    let mut a: Vec<Vec<Poly>> = p.to_vec();
    let mut inv: Vec<Vec<Poly>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Poly::one(nv) } else { Poly::zero(nv) }).collect())
        .collect();
    let mut used = vec![false; n];
    let mut pivot_row = vec![0usize; n];
    // Columns of the longest classes first keeps the pivots constant.
    for col in (0..n).rev() {
        let row = (0..n)
            .find(|&r| !used[r] && a[r][col].as_constant().is_some_and(|c| !c.is_zero()))
            .ok_or(Error::Singular(col))?;
        used[row] = true;
        pivot_row[col] = row;
        let c = a[row][col].as_constant().unwrap();
        let cinv = BigRational::one() / c;
        for j in 0..n {
            a[row][j] = a[row][j].scale(&cinv);
            inv[row][j] = inv[row][j].scale(&cinv);
        }
        for r in 0..n {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let t = &f * &a[row][j];
                a[r][j] = &a[r][j] - &t;
                let t = &f * &inv[row][j];
                inv[r][j] = &inv[r][j] - &t;
            }
        }
    }
    // Row `pivot_row[col]` of the reduced system is row `col` of the inverse.
    let out: Vec<Vec<Poly>> = (0..n).map(|col| inv[pivot_row[col]].clone()).collect();
    // P⁻¹ is symmetric; column v of P⁻¹ gives the coefficients of σ^v.
    Ok(out)
}

/// Convenience: numeric value of a rational.
pub fn to_f64(r: &BigRational) -> f64 {
    rat_to_f64(r)
}
