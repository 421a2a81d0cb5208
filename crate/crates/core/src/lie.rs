//! Root systems, Weyl groups and parabolic combinatorics.
//!
//! Roots are integer vectors in the basis of simple roots, coroots in the
//! basis of simple coroots. A Weyl element is identified with its integer
//! action matrix on simple coroots. Words are 0-based internally.

use crate::error::{Error, Result};
use crate::linalg::{rat, Field};
use num_rational::BigRational;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

/// Default cap on Weyl group enumeration.
pub const DEFAULT_WEYL_CAP: usize = 1_000_000;

/// A Cartan matrix with `cartan[i][j] = α∨_i(α_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CartanDatum {
    pub type_letter: char,
    pub rank: usize,
    pub cartan: Vec<Vec<i64>>,
}

/// Standard Cartan matrix with Bourbaki numbering.
fn standard_cartan(letter: char, rank: usize) -> Result<Vec<Vec<i64>>> {
    let bad = || Error::InvalidCartan(format!("no simple type {letter}{rank}"));
    let mut a = vec![vec![0i64; rank]; rank];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 2;
    }
    let mut link = |i: usize, j: usize, aij: i64, aji: i64| {
        a[i][j] = aij;
        a[j][i] = aji;
    };
    match (letter, rank) {
        ('A', n) if n >= 1 => (0..n - 1).for_each(|i| link(i, i + 1, -1, -1)),
        ('B', n) if n >= 2 => {
            (0..n - 2).for_each(|i| link(i, i + 1, -1, -1));
            link(n - 2, n - 1, -1, -2);
        }
        ('C', n) if n >= 2 => {
            (0..n - 2).for_each(|i| link(i, i + 1, -1, -1));
            link(n - 2, n - 1, -2, -1);
        }
        ('D', n) if n >= 4 => {
            (0..n - 2).for_each(|i| link(i, i + 1, -1, -1));
            link(n - 3, n - 1, -1, -1);
        }
        ('E', n) if (6..=8).contains(&n) => {
            link(0, 2, -1, -1);
            link(1, 3, -1, -1);
            (2..n - 1).for_each(|i| link(i, i + 1, -1, -1));
        }
        ('F', 4) => {
            link(0, 1, -1, -1);
            link(1, 2, -1, -2);
            link(2, 3, -1, -1);
        }
        ('G', 2) => link(0, 1, -3, -1),
        _ => return Err(bad()),
    }
    Ok(a)
}

/// Number of positive roots of a simple type.
pub fn positive_root_count(letter: char, rank: usize) -> Option<usize> {
    let n = rank;
    Some(match letter {
        'A' => n * (n + 1) / 2,
        'B' | 'C' => n * n,
        'D' => n * (n - 1),
        'E' => match n {
            6 => 36,
            7 => 63,
            8 => 120,
            _ => return None,
        },
        'F' if n == 4 => 24,
        'G' if n == 2 => 6,
        _ => return None,
    })
}

fn det_i64(m: &[Vec<i64>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect();
    let mut det = rat(1);
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !Field::is_zero(&a[i][c])) else {
            return rat(0);
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for i in c + 1..n {
            let f = &a[i][c] / &piv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

impl CartanDatum {
    /// The standard datum of a simple type.
    pub fn new(type_letter: char, rank: usize) -> Result<Self> {
        let cartan = standard_cartan(type_letter, rank)?;
        Ok(CartanDatum { type_letter, rank, cartan })
    }

    /// Validates a user-supplied matrix against the named type.
    pub fn from_matrix(type_letter: char, rank: usize, cartan: Vec<Vec<i64>>) -> Result<Self> {
        let d = CartanDatum { type_letter, rank, cartan };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank;
        let a = &self.cartan;
        let fail = |m: String| Err(Error::InvalidCartan(m));
        if r == 0 || a.len() != r || a.iter().any(|row| row.len() != r) {
            return fail(format!("matrix must be {r}x{r}"));
        }
        for i in 0..r {
            if a[i][i] != 2 {
                return fail(format!("diagonal entry ({i},{i}) is {}", a[i][i]));
            }
            for j in 0..r {
                if i != j && a[i][j] > 0 {
                    return fail(format!("off-diagonal entry ({i},{j}) is positive"));
                }
                if (a[i][j] == 0) != (a[j][i] == 0) {
                    return fail(format!("entries ({i},{j}) and ({j},{i}) disagree on vanishing"));
                }
            }
        }
        // Symmetrizability: find d with d_i a_ij = d_j a_ji by propagation.
        let mut d: Vec<Option<BigRational>> = vec![None; r];
        for start in 0..r {
            if d[start].is_some() {
                continue;
            }
            d[start] = Some(rat(1));
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for j in 0..r {
                    if i == j || a[i][j] == 0 {
                        continue;
                    }
                    let want = d[i].clone().unwrap() * rat(a[i][j]) / rat(a[j][i]);
                    match &d[j] {
                        None => {
                            d[j] = Some(want);
                            stack.push(j);
                        }
                        Some(x) if *x != want => return fail("matrix is not symmetrizable".into()),
                        _ => {}
                    }
                }
            }
        }
        if det_i64(a) <= rat(0) {
            return fail("determinant is not positive".into());
        }
        let expect = standard_cartan(self.type_letter, r)?;
        if *a != expect {
            return fail(format!(
                "matrix does not match type {}{} in the standard numbering",
                self.type_letter, r
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.type_letter, self.rank)
    }
}

/// Positive roots and coroots with their pairing.
#[derive(Clone, Debug)]
pub struct RootSystem {
    pub datum: CartanDatum,
    /// Positive roots in simple-root coordinates, sorted by height then lex.
    pub positive_roots: Vec<Vec<i64>>,
    /// `positive_coroots[k]` is the coroot of `positive_roots[k]`.
    pub positive_coroots: Vec<Vec<i64>>,
    root_index: HashMap<Vec<i64>, usize>,
    coroot_index: HashMap<Vec<i64>, usize>,
}

fn is_positive_vec(v: &[i64]) -> bool {
    v.iter().all(|&x| x >= 0) && v.iter().any(|&x| x > 0)
}

fn negate(v: &[i64]) -> Vec<i64> {
    v.iter().map(|x| -x).collect()
}

/// Builds the positive roots and coroots by reflection closure.
pub fn build_root_system(datum: CartanDatum) -> Result<RootSystem> {
    datum.validate()?;
    let r = datum.rank;
    let a = datum.cartan.clone();
    let unit = |i: usize| {
        let mut v = vec![0i64; r];
        v[i] = 1;
        v
    };
    let mut pairs: Vec<(Vec<i64>, Vec<i64>)> = (0..r).map(|i| (unit(i), unit(i))).collect();
    let mut seen: HashSet<Vec<i64>> = pairs.iter().map(|p| p.0.clone()).collect();
    let mut k = 0;
    while k < pairs.len() {
        let (root, coroot) = pairs[k].clone();
        for i in 0..r {
            let ci: i64 = (0..r).map(|j| a[i][j] * root[j]).sum();
            let mut nr = root.clone();
            nr[i] -= ci;
            if !is_positive_vec(&nr) || seen.contains(&nr) {
                continue;
            }
            let di: i64 = (0..r).map(|j| coroot[j] * a[j][i]).sum();
            let mut nc = coroot.clone();
            nc[i] -= di;
            seen.insert(nr.clone());
            pairs.push((nr, nc));
        }
        k += 1;
    }
    pairs.sort_by(|x, y| {
        let hx: i64 = x.0.iter().sum();
        let hy: i64 = y.0.iter().sum();
        hx.cmp(&hy).then_with(|| y.0.cmp(&x.0))
    });
    if let Some(n) = positive_root_count(datum.type_letter, r) {
        if n != pairs.len() {
            return Err(Error::InvalidCartan(format!(
                "found {} positive roots, expected {n}",
                pairs.len()
            )));
        }
    }
    let positive_roots: Vec<Vec<i64>> = pairs.iter().map(|p| p.0.clone()).collect();
    let positive_coroots: Vec<Vec<i64>> = pairs.iter().map(|p| p.1.clone()).collect();
    let root_index = positive_roots.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let coroot_index = positive_coroots.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    Ok(RootSystem { datum, positive_roots, positive_coroots, root_index, coroot_index })
}

/// An element of the Weyl group.
///
/// Equality and hashing go through the action matrix on simple coroots:
/// column `j` of `matrix` is `w(α∨_j)` in coroot coordinates.
#[derive(Clone, Debug)]
pub struct WeylElement {
    /// Lexicographically minimal reduced word, 0-based.
    pub word: Vec<usize>,
    matrix: Vec<Vec<i64>>,
}

impl PartialEq for WeylElement {
    fn eq(&self, o: &Self) -> bool {
        self.matrix == o.matrix
    }
}
impl Eq for WeylElement {}
impl std::hash::Hash for WeylElement {
    fn hash<H: std::hash::Hasher>(&self, s: &mut H) {
        self.matrix.hash(s)
    }
}

impl WeylElement {
    pub fn length(&self) -> usize {
        self.word.len()
    }

    pub fn canonical_form(&self) -> &Vec<Vec<i64>> {
        &self.matrix
    }

    /// Word with 1-based letters, as used in reports.
    pub fn word_1based(&self) -> Vec<usize> {
        self.word.iter().map(|i| i + 1).collect()
    }

    /// Action matrix on simple coroots; column `j` is `w(α∨_j)`.
    pub fn matrix(&self) -> &Vec<Vec<i64>> {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "e");
        }
        for i in &self.word {
            write!(f, "s{}", i + 1)?;
        }
        Ok(())
    }
}

/// Minimal coset representatives for a parabolic subgroup.
#[derive(Clone, Debug)]
pub struct ParabolicData {
    /// 0-based simple indices in `I_P`.
    pub ip: Vec<usize>,
    /// Sorted by (length, word); the identity is first.
    pub wp: Vec<WeylElement>,
    /// Length of `w_P`, the dimension of the flag variety.
    pub ell: usize,
    index: HashMap<Vec<Vec<i64>>, usize>,
}

impl ParabolicData {
    pub fn position(&self, w: &WeylElement) -> Option<usize> {
        self.index.get(&w.matrix).copied()
    }

    pub fn len(&self) -> usize {
        self.wp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wp.is_empty()
    }

    /// Simple indices outside `I_P`, i.e. the Kähler parameters.
    pub fn complement(&self, rank: usize) -> Vec<usize> {
        (0..rank).filter(|i| !self.ip.contains(i)).collect()
    }
}

/// JSON view of a root system with a parabolic.
#[derive(Serialize)]
pub struct RootSystemReport {
    #[serde(rename = "type")]
    pub type_name: String,
    pub rank: usize,
    pub positive_roots: Vec<Vec<i64>>,
    #[serde(rename = "WP_words")]
    pub wp_words: Vec<Vec<usize>>,
}

impl RootSystem {
    pub fn rank(&self) -> usize {
        self.datum.rank
    }

    pub fn cartan(&self) -> &Vec<Vec<i64>> {
        &self.datum.cartan
    }

    /// `α∨(α_j)` for a coroot vector.
    pub fn pairing(&self, coroot: &[i64], j: usize) -> i64 {
        (0..self.rank()).map(|i| coroot[i] * self.datum.cartan[i][j]).sum()
    }

    /// `⟨x∨, α⟩` for a coroot-coordinate vector and a root-coordinate vector.
    pub fn pair(&self, coroot: &[i64], root: &[i64]) -> i64 {
        (0..self.rank()).map(|j| self.pairing(coroot, j) * root[j]).sum()
    }

    pub fn root_position(&self, root: &[i64]) -> Option<usize> {
        self.root_index.get(root).copied()
    }

    pub fn coroot_position(&self, coroot: &[i64]) -> Option<usize> {
        self.coroot_index.get(coroot).copied()
    }

    /// Coroot of a (possibly negative) root.
    pub fn coroot_of(&self, root: &[i64]) -> Option<Vec<i64>> {
        if let Some(k) = self.root_position(root) {
            return Some(self.positive_coroots[k].clone());
        }
        self.root_position(&negate(root)).map(|k| negate(&self.positive_coroots[k]))
    }

    /// Root of a (possibly negative) coroot.
    pub fn root_of_coroot(&self, coroot: &[i64]) -> Option<Vec<i64>> {
        if let Some(k) = self.coroot_position(coroot) {
            return Some(self.positive_roots[k].clone());
        }
        self.coroot_position(&negate(coroot)).map(|k| negate(&self.positive_roots[k]))
    }

    /// Whether a positive root lies in the span of `ip`.
    pub fn in_levi(&self, root: &[i64], ip: &[usize]) -> bool {
        root.iter().enumerate().all(|(j, &c)| c == 0 || ip.contains(&j))
    }

    /// Indices of `R⁺ ∖ R⁺_P`.
    pub fn non_levi_roots(&self, ip: &[usize]) -> Vec<usize> {
        (0..self.positive_roots.len())
            .filter(|&k| !self.in_levi(&self.positive_roots[k], ip))
            .collect()
    }

    pub fn identity(&self) -> WeylElement {
        let r = self.rank();
        let mut m = vec![vec![0i64; r]; r];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1;
        }
        WeylElement { word: vec![], matrix: m }
    }

    pub(crate) fn reflect_matrix_right(&self, m: &[Vec<i64>], i: usize) -> Vec<Vec<i64>> {
        // (w s_i)(α∨_j) = w(α∨_j) − A_ji w(α∨_i).
        let r = self.rank();
        let a = &self.datum.cartan;
        let mut out = m.to_vec();
        for row in out.iter_mut() {
            let wi = row[i];
            for j in 0..r {
                row[j] -= a[j][i] * wi;
            }
        }
        out
    }

    fn reflect_matrix_left(&self, m: &[Vec<i64>], i: usize) -> Vec<Vec<i64>> {
        // s_i(x∨) = x∨ − x∨(α_i) α∨_i applied to every column.
        let r = self.rank();
        let mut out = m.to_vec();
        for j in 0..r {
            let col: Vec<i64> = (0..r).map(|k| m[k][j]).collect();
            let p = self.pairing(&col, i);
            out[i][j] -= p;
        }
        out
    }

    /// Apply `w` to a coroot vector.
    pub fn act_coroot(&self, w: &WeylElement, v: &[i64]) -> Vec<i64> {
        let r = self.rank();
        (0..r).map(|i| (0..r).map(|j| w.matrix[i][j] * v[j]).sum()).collect()
    }

    /// Simple reflection on a root vector.
    pub fn reflect_root(&self, i: usize, root: &[i64]) -> Vec<i64> {
        let c: i64 = (0..self.rank()).map(|j| self.datum.cartan[i][j] * root[j]).sum();
        let mut out = root.to_vec();
        out[i] -= c;
        out
    }

    /// Simple reflection on a coroot vector.
    pub fn reflect_coroot(&self, i: usize, v: &[i64]) -> Vec<i64> {
        let mut out = v.to_vec();
        out[i] -= self.pairing(v, i);
        out
    }

    /// Apply `w` to a root vector by its word.
    pub fn act_root(&self, w: &WeylElement, root: &[i64]) -> Vec<i64> {
        w.word.iter().rev().fold(root.to_vec(), |acc, &i| self.reflect_root(i, &acc))
    }

    /// Reflection `s_α` (α positive, given by index) on a coroot vector:
    /// `x ↦ x − ⟨x, α⟩ α∨`.
    pub fn reflect_by_root_coroot(&self, k: usize, v: &[i64]) -> Vec<i64> {
        let p = self.pair(v, &self.positive_roots[k]);
        v.iter()
            .zip(&self.positive_coroots[k])
            .map(|(x, c)| x - p * c)
            .collect()
    }

    /// Length as the number of positive coroots sent negative.
    pub fn length_of_matrix(&self, m: &[Vec<i64>]) -> usize {
        let r = self.rank();
        self.positive_coroots
            .iter()
            .filter(|c| {
                let img: Vec<i64> = (0..r).map(|i| (0..r).map(|j| m[i][j] * c[j]).sum()).collect();
                !is_positive_vec(&img)
            })
            .count()
    }

    /// Builds an element from its action matrix, computing the lex-min reduced word.
    pub(crate) fn from_matrix(&self, m: Vec<Vec<i64>>) -> WeylElement {
        let mut word = vec![];
        let mut cur = m.clone();
        let mut len = self.length_of_matrix(&cur);
        while len > 0 {
            for i in 0..self.rank() {
                let cand = self.reflect_matrix_left(&cur, i);
                let l2 = self.length_of_matrix(&cand);
                if l2 < len {
                    word.push(i);
                    cur = cand;
                    len = l2;
                    break;
                }
            }
        }
        WeylElement { word, matrix: m }
    }

    /// The element with a given word (not necessarily reduced).
    pub fn element(&self, word: &[usize]) -> Result<WeylElement> {
        if let Some(&bad) = word.iter().find(|&&i| i >= self.rank()) {
            return Err(Error::InvalidInput(format!("simple index {} out of range", bad + 1)));
        }
        let m = word
            .iter()
            .fold(self.identity().matrix, |acc, &i| self.reflect_matrix_right(&acc, i));
        Ok(self.from_matrix(m))
    }

    pub fn is_reduced(&self, word: &[usize]) -> Result<bool> {
        Ok(self.element(word)?.length() == word.len())
    }

    pub fn mul(&self, a: &WeylElement, b: &WeylElement) -> WeylElement {
        let m = b.word.iter().fold(a.matrix.clone(), |acc, &i| self.reflect_matrix_right(&acc, i));
        self.from_matrix(m)
    }

    pub fn inverse(&self, w: &WeylElement) -> WeylElement {
        let word: Vec<usize> = w.word.iter().rev().copied().collect();
        self.element(&word).expect("letters in range")
    }

    pub fn mul_simple_right(&self, w: &WeylElement, i: usize) -> WeylElement {
        self.from_matrix(self.reflect_matrix_right(&w.matrix, i))
    }

    /// `w s_α` for a positive root given by index.
    pub fn mul_reflection_right(&self, w: &WeylElement, k: usize) -> WeylElement {
        let r = self.rank();
        let cols: Vec<Vec<i64>> = (0..r)
            .map(|j| {
                let mut e = vec![0i64; r];
                e[j] = 1;
                let s = self.reflect_by_root_coroot(k, &e);
                self.act_coroot(w, &s)
            })
            .collect();
        let m: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| cols[j][i]).collect()).collect();
        self.from_matrix(m)
    }

    /// Whether `w α_i` is a positive root.
    pub fn sends_simple_positive(&self, w: &WeylElement, i: usize) -> bool {
        let col: Vec<i64> = (0..self.rank()).map(|k| w.matrix[k][i]).collect();
        is_positive_vec(&col)
    }

    /// Longest element of the subgroup generated by `gens`.
    pub fn longest_in(&self, gens: &[usize]) -> WeylElement {
        let mut w = self.identity();
        'outer: loop {
            for &i in gens {
                if self.sends_simple_positive(&w, i) {
                    w = self.mul_simple_right(&w, i);
                    continue 'outer;
                }
            }
            return w;
        }
    }

    pub fn w0(&self) -> WeylElement {
        let all: Vec<usize> = (0..self.rank()).collect();
        self.longest_in(&all)
    }

    fn check_ip(&self, ip: &[usize]) -> Result<Vec<usize>> {
        let set: BTreeSet<usize> = ip.iter().copied().collect();
        if set.iter().any(|&i| i >= self.rank()) {
            return Err(Error::InvalidInput("I_P index out of range".into()));
        }
        if set.len() == self.rank() {
            return Err(Error::InvalidInput("I_P must be a proper subset".into()));
        }
        Ok(set.into_iter().collect())
    }

    /// `w_P = w_0^P w_0`.
    pub fn w_p(&self, ip: &[usize]) -> Result<WeylElement> {
        let ip = self.check_ip(ip)?;
        Ok(self.mul(&self.longest_in(&ip), &self.w0()))
    }

    /// The minimal representative of `w W_P`.
    pub fn minimal_rep(&self, w: &WeylElement, ip: &[usize]) -> WeylElement {
        let mut m = w.matrix.clone();
        'outer: loop {
            for &i in ip {
                let col: Vec<i64> = (0..self.rank()).map(|k| m[k][i]).collect();
                if !is_positive_vec(&col) {
                    m = self.reflect_matrix_right(&m, i);
                    continue 'outer;
                }
            }
            break;
        }
        self.from_matrix(m)
    }

    /// All Weyl group elements, sorted by (length, word).
    pub fn weyl_elements(&self, cap: usize) -> Result<Vec<WeylElement>> {
        self.bfs_left(&[], cap)
    }

    /// BFS by left multiplication, keeping elements without right descents in `ip`.
    fn bfs_left(&self, ip: &[usize], cap: usize) -> Result<Vec<WeylElement>> {
        let mut out = vec![self.identity()];
        let mut seen: HashSet<Vec<Vec<i64>>> = HashSet::new();
        seen.insert(self.identity().matrix);
        let mut level = vec![self.identity()];
        while !level.is_empty() {
            let mut next: BTreeMap<Vec<usize>, WeylElement> = BTreeMap::new();
            for w in &level {
                for i in 0..self.rank() {
                    let m = self.reflect_matrix_left(&w.matrix, i);
                    if seen.contains(&m) {
                        continue;
                    }
                    let len = self.length_of_matrix(&m);
                    if len != w.length() + 1 {
                        continue;
                    }
                    let ok = ip.iter().all(|&j| {
                        let col: Vec<i64> = (0..self.rank()).map(|k| m[k][j]).collect();
                        is_positive_vec(&col)
                    });
                    if !ok {
                        continue;
                    }
                    seen.insert(m.clone());
                    let e = self.from_matrix(m);
                    next.insert(e.word.clone(), e);
                    if seen.len() > cap {
                        return Err(Error::CapExceeded { cap });
                    }
                }
            }
            level = next.into_values().collect();
            out.extend(level.iter().cloned());
        }
        Ok(out)
    }

    /// Minimal coset representatives `W^P`.
    pub fn minimal_reps(&self, ip: &[usize], cap: usize) -> Result<ParabolicData> {
        let ip = self.check_ip(ip)?;
        let wp = self.bfs_left(&ip, cap)?;
        let ell = self.non_levi_roots(&ip).len();
        let index = wp.iter().enumerate().map(|(k, w)| (w.matrix.clone(), k)).collect();
        Ok(ParabolicData { ip, wp, ell, index })
    }

    /// `β∨_k = −s_{i1}⋯s_{i_{k−1}}(α∨_{ik})` along a reduced word.
    pub fn beta_sequence(&self, word: &[usize]) -> Result<Vec<Vec<i64>>> {
        if !self.is_reduced(word)? {
            return Err(Error::NotReduced(word.iter().map(|i| i + 1).collect()));
        }
        let r = self.rank();
        Ok((0..word.len())
            .map(|k| {
                let mut v = vec![0i64; r];
                v[word[k]] = 1;
                let img = word[..k].iter().rev().fold(v, |acc, &i| self.reflect_coroot(i, &acc));
                negate(&img)
            })
            .collect())
    }

    /// Like [`beta_sequence`](Self::beta_sequence) but insists the word spells `w_P`.
    pub fn beta_sequence_for(&self, word: &[usize], ip: &[usize]) -> Result<Vec<Vec<i64>>> {
        let w = self.element(word)?;
        if w.length() != word.len() {
            return Err(Error::NotReduced(word.iter().map(|i| i + 1).collect()));
        }
        if w != self.w_p(ip)? {
            return Err(Error::InvalidInput("word does not spell w_P".into()));
        }
        self.beta_sequence(word)
    }

    /// Every reduced word of `w`.
    pub fn reduced_words(&self, w: &WeylElement) -> Vec<Vec<usize>> {
        if w.length() == 0 {
            return vec![vec![]];
        }
        let mut out = vec![];
        for i in 0..self.rank() {
            if !self.sends_simple_positive(w, i) {
                let u = self.mul_simple_right(w, i);
                for mut word in self.reduced_words(&u) {
                    word.push(i);
                    out.push(word);
                }
            }
        }
        out.sort();
        out
    }

    /// Coroots `α∨` for `α ∈ wR⁺ ∩ (−R⁺)`.
    pub fn inversion_coroots(&self, w: &WeylElement) -> Vec<Vec<i64>> {
        self.positive_coroots
            .iter()
            .map(|c| self.act_coroot(w, c))
            .filter(|img| !is_positive_vec(img))
            .collect()
    }

    /// Bruhat order on `W` via subwords of a reduced word of `w`.
    pub fn bruhat_le(&self, v: &WeylElement, w: &WeylElement) -> bool {
        if v.length() > w.length() {
            return false;
        }
        if v.length() == w.length() {
            return v == w;
        }
        // v ≤ w iff v ≤ w s_i or v s_i ≤ w s_i for a right descent i of w.
        let Some(i) = (0..self.rank()).find(|&i| !self.sends_simple_positive(w, i)) else {
            return false;
        };
        let ws = self.mul_simple_right(w, i);
        if self.sends_simple_positive(v, i) {
            self.bruhat_le(v, &ws)
        } else {
            self.bruhat_le(&self.mul_simple_right(v, i), &ws)
        }
    }

    pub fn report(&self, par: &ParabolicData) -> RootSystemReport {
        RootSystemReport {
            type_name: self.datum.name(),
            rank: self.rank(),
            positive_roots: self.positive_roots.clone(),
            wp_words: par.wp.iter().map(|w| w.word_1based()).collect(),
        }
    }

    /// Fundamental coweight `ω∨_i` in simple-coroot coordinates (rational).
    pub fn fundamental_coweight(&self, i: usize) -> Vec<BigRational> {
        // ω∨_i = Σ_k c_k α∨_k with Σ_k c_k A_kj = δ_ij, so c = row i of A⁻¹ transposed.
        let a: Vec<Vec<BigRational>> = self
            .datum
            .cartan
            .iter()
            .map(|r| r.iter().map(|&x| rat(x)).collect())
            .collect();
        let inv = crate::linalg::inverse(&a).expect("Cartan matrix is invertible");
        (0..self.rank()).map(|k| inv[k][i].clone()).collect()
    }
}

/// Coxeter exponent `m_ij` from the product of Cartan entries.
pub fn coxeter_exponent(a: &[Vec<i64>], i: usize, j: usize) -> usize {
    if i == j {
        return 1;
    }
    match a[i][j] * a[j][i] {
        0 => 2,
        1 => 3,
        2 => 4,
        3 => 6,
        _ => 0,
    }
}
