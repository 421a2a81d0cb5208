use gammaflag_core::linalg::{rat, Mat};
use gammaflag_core::qh::{
    c1_pairing, conjecture_o_certify, is_indecomposable, schubert_positive_point, QConnection, SpectralStatus,
};
use gammaflag_core::schubert::FlagVariety;
use num_complex::Complex64;

fn perm_of(word: &[usize], n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for &i in word {
        p.swap(i, i + 1);
    }
    p
}

fn inversions(p: &[usize]) -> usize {
    (0..p.len())
        .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count()
}

/// Nonequivariant operator of `σ_{s_i} ⋆` at symbolic `q`, as degree → matrix.
fn chevalley_at_zero(qc: &QConnection, k: usize) -> std::collections::BTreeMap<Vec<u32>, Mat<f64>> {
    gammaflag_core::qh::at_zero(&qc.chevalley[k])
}

fn entry(m: &std::collections::BTreeMap<Vec<u32>, Mat<f64>>, d: &[u32], w: usize, v: usize) -> f64 {
    m.get(d).map(|x| x[w][v]).unwrap_or(0.0)
}

#[test]
fn projective_spaces_match_truncated_polynomial_ring() {
    // QH(Pⁿ) = Q[H, q]/(H^{n+1} − q) with σ_k = H^k.
    for n in 1..=4 {
        let x = FlagVariety::from_label(&format!("P{n}")).unwrap();
        let qc = QConnection::new(&x).unwrap();
        let m = chevalley_at_zero(&qc, 0);
        for v in 0..=n {
            for w in 0..=n {
                let classical = if w == v + 1 { 1.0 } else { 0.0 };
                let quantum = if v == n && w == 0 { 1.0 } else { 0.0 };
                assert_eq!(entry(&m, &[0], w, v), classical, "P{n} σ_{w} in H·σ_{v}");
                assert_eq!(entry(&m, &[1], w, v), quantum);
            }
        }
        assert_eq!(m.keys().filter(|d| d[0] > 1).count(), 0);
        assert_eq!(qc.c1_pairings, vec![(n + 1) as i64]);
    }
}

#[test]
fn spec_quantum_products() {
    let p1 = FlagVariety::from_label("P1").unwrap();
    let qc = QConnection::new(&p1).unwrap();
    let m = chevalley_at_zero(&qc, 0);
    assert_eq!(entry(&m, &[1], 0, 1), 1.0);
    assert_eq!(entry(&m, &[0], 1, 1), 0.0);
    let p2 = FlagVariety::from_label("P2").unwrap();
    let qc = QConnection::new(&p2).unwrap();
    let m = chevalley_at_zero(&qc, 0);
    assert_eq!(entry(&m, &[1], 0, 2), 1.0);
}

fn det_c(m: &Mat<Complex64>) -> Complex64 {
    gammaflag_core::linalg::to_nalgebra_c(m).determinant()
}

#[test]
fn equivariant_projective_space_relation() {
    // QH_T(Pⁿ) has the relation ∏(x − χ_i) = q, so det(x − C(q)) = det(x − C(0)) − q.
    for n in 1..=3 {
        let x = FlagVariety::from_label(&format!("P{n}")).unwrap();
        let qc = QConnection::new(&x).unwrap();
        let h: Vec<Complex64> = (0..n).map(|j| Complex64::new(0.3 + 0.17 * j as f64, -0.05 * j as f64)).collect();
        for (xv, qv) in [(0.4, 0.9), (-1.3, 2.2), (0.05, 0.3)] {
            let xs = Complex64::new(xv, 0.1);
            let char_at = |q: f64| {
                let c = qc.line_bundle[0].eval_c(&[Complex64::new(q, 0.0)], &h);
                let m: Mat<Complex64> = (0..=n)
                    .map(|i| (0..=n).map(|j| if i == j { xs - c[i][j] } else { -c[i][j] }).collect())
                    .collect();
                det_c(&m)
            };
            let lhs = char_at(qv);
            let rhs = char_at(0.0) - qv;
            assert!((lhs - rhs).norm() < 1e-12, "P{n}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn grassmannian_quantum_pieri() {
    let (k, n) = (2usize, 4usize);
    let x = FlagVariety::from_label("Gr24").unwrap();
    let qc = QConnection::new(&x).unwrap();
    let m = chevalley_at_zero(&qc, 0);
    let partition = |v: usize| {
        let p = perm_of(&x.wp()[v].word, n);
        let mut a: Vec<usize> = p[..k].to_vec();
        a.sort();
        (a[1] - 1, a[0])
    };
    let parts: Vec<(usize, usize)> = (0..x.dim_h()).map(partition).collect();
    for v in 0..x.dim_h() {
        assert_eq!(parts[v].0 + parts[v].1, x.wp()[v].length());
    }
    let find = |l: (usize, usize)| parts.iter().position(|&p| p == l).unwrap();
    for v in 0..x.dim_h() {
        let (l1, l2) = parts[v];
        let mut classical = vec![0.0; 6];
        if l1 < n - k {
            classical[find((l1 + 1, l2))] += 1.0;
        }
        if l2 < l1 {
            classical[find((l1, l2 + 1))] += 1.0;
        }
        let mut quantum = vec![0.0; 6];
        if l1 == n - k && l2 >= 1 {
            quantum[find((l2 - 1, 0))] += 1.0;
        }
        for w in 0..6 {
            assert_eq!(entry(&m, &[0], w, v), classical[w], "classical {parts:?} v={v} w={w}");
            assert_eq!(entry(&m, &[1], w, v), quantum[w], "quantum v={v} w={w}");
        }
    }
    assert_eq!(qc.c1_pairings, vec![4]);
}

#[test]
fn full_flag_quantum_monk() {
    for n in [3usize, 4] {
        let x = FlagVariety::from_label(&format!("Fl{n}")).unwrap();
        let qc = QConnection::new(&x).unwrap();
        let perms: Vec<Vec<usize>> = x.wp().iter().map(|w| perm_of(&w.word, n)).collect();
        let find = |p: &Vec<usize>| perms.iter().position(|x| x == p).unwrap();
        for (kk, &i) in qc.divisors.iter().enumerate() {
            let m = chevalley_at_zero(&qc, kk);
            for v in 0..x.dim_h() {
                let mut expect: std::collections::BTreeMap<(Vec<u32>, usize), f64> = Default::default();
                let lv = inversions(&perms[v]);
                for a in 0..=i {
                    for b in i + 1..n {
                        let mut t = perms[v].clone();
                        t.swap(a, b);
                        let lt = inversions(&t);
                        let w = find(&t);
                        if lt == lv + 1 {
                            *expect.entry((vec![0; n - 1], w)).or_default() += 1.0;
                        }
                        if lt + 2 * (b - a) == lv + 1 {
                            let d: Vec<u32> = (0..n - 1).map(|j| u32::from(a <= j && j < b)).collect();
                            *expect.entry((d, w)).or_default() += 1.0;
                        }
                    }
                }
                for (d, mat) in &m {
                    for w in 0..x.dim_h() {
                        let e = expect.get(&(d.clone(), w)).copied().unwrap_or(0.0);
                        assert_eq!(mat[w][v], e, "Fl{n} i={i} v={v} w={w} d={d:?}");
                    }
                }
                for (d, w) in expect.keys() {
                    assert!(m.contains_key(d), "missing degree {d:?} for w={w}");
                }
            }
        }
    }
}

#[test]
fn classical_part_is_equivariant_cup() {
    for label in ["Gr24", "Fl3", "B2:"] {
        let x = FlagVariety::from_label(label).unwrap();
        let qc = QConnection::new(&x).unwrap();
        for (kk, &i) in qc.divisors.iter().enumerate() {
            let si = x.index_of_word(&[i + 1]).unwrap();
            let classical = &qc.chevalley[kk].terms[&vec![0; qc.divisors.len()]];
            for v in 0..x.dim_h() {
                let cup = x.cup(&x.schubert(si), &x.schubert(v)).unwrap();
                for w in 0..x.dim_h() {
                    assert_eq!(classical[w][v], cup.coeffs[w], "{label} i={i} v={v} w={w}");
                }
            }
        }
    }
}

#[test]
fn connection_is_flat() {
    for label in ["Fl3", "Fl4", "Gr24", "B2:", "G2:", "C3:2", "A3:2", "B3:1"] {
        let x = FlagVariety::from_label(label).unwrap();
        let qc = QConnection::new(&x).unwrap();
        for (i, j, commute, curl_free) in qc.flatness_defects() {
            assert!(commute, "{label}: [C_{i}, C_{j}] ≠ 0");
            assert!(curl_free, "{label}: curl ({i},{j}) ≠ 0");
        }
    }
}

#[test]
fn homogeneity_and_nonnegativity() {
    for label in ["Fl3", "Gr24", "B2:", "G2:", "C3:2", "B3:1", "D4:1,3,4"] {
        let x = FlagVariety::from_label(label).unwrap();
        let qc = QConnection::new(&x).unwrap();
        let r = x.rank();
        let qdeg: Vec<i64> = qc
            .divisors
            .iter()
            .map(|&j| {
                let mut e = vec![0; r];
                e[j] = 1;
                c1_pairing(&x, &e)
            })
            .collect();
        for ch in &qc.chevalley {
            for (d, m) in &ch.terms {
                let dd: i64 = d.iter().zip(&qdeg).map(|(&a, &b)| a as i64 * b).sum();
                for w in 0..x.dim_h() {
                    for v in 0..x.dim_h() {
                        let p = &m[w][v];
                        if p.is_zero() {
                            continue;
                        }
                        let deg = x.wp()[v].length() as i64 + 1 - x.wp()[w].length() as i64 - dd;
                        assert!(deg >= 0 && p.is_homogeneous_of(deg as u32), "{label}");
                        if deg == 0 {
                            assert!(p.constant_term() > rat(0), "{label}: negative structure constant");
                        }
                    }
                }
            }
        }
        let m = qc.c1_matrix(&vec![1.3; qc.divisors.len()], &vec![0.0; r]);
        assert!(m.iter().flatten().all(|&v| v >= 0.0));
        assert!(is_indecomposable(&m), "{label}");
    }
}

#[test]
fn c1_operator_examples() {
    let p1 = FlagVariety::from_label("P1").unwrap();
    let qc = QConnection::new(&p1).unwrap();
    assert_eq!(qc.c1_matrix(&[1.0], &[0.0]), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
    // Equivariant P¹: C = [[−h/2, q], [1, h/2]].
    let lb = qc.line_bundle[0].eval(&[0.7], &[0.4]);
    let expect = [[-0.2, 0.7], [1.0, 0.2]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((lb[i][j] - expect[i][j]).abs() < 1e-15);
        }
    }
    let c1 = qc.c1.eval(&[0.7], &[0.4]);
    assert!((c1[1][1] - 2.0 * 0.2).abs() < 1e-15);
}

#[test]
fn spectra() {
    let p1 = FlagVariety::from_label("P1").unwrap();
    let rep = conjecture_o_certify(&p1, &QConnection::new(&p1).unwrap(), &[1.0]).unwrap();
    assert!((rep.e_o - 2.0).abs() < 1e-12);
    assert_eq!(rep.multiplicity, 1);
    assert_eq!(rep.status, SpectralStatus::Certified);
    let p2 = FlagVariety::from_label("P2").unwrap();
    let rep = conjecture_o_certify(&p2, &QConnection::new(&p2).unwrap(), &[1.0]).unwrap();
    assert!((rep.e_o - 3.0).abs() < 1e-10);
    assert_eq!(rep.maximal_modulus_set.len(), 3);
    assert!(rep.gap.abs() < 1e-8);
    assert!((rep.gap_real - 4.5).abs() < 1e-8);
    assert_eq!(rep.status, SpectralStatus::Certified);
    for e in &rep.eigenvalues {
        let z = Complex64::new(e.re, e.im);
        assert!((z.powu(3) - 27.0).norm() < 1e-8);
    }
    let fl3 = FlagVariety::from_label("Fl3").unwrap();
    let rep = conjecture_o_certify(&fl3, &QConnection::new(&fl3).unwrap(), &[1.0, 1.0]).unwrap();
    assert_eq!(rep.status, SpectralStatus::Certified);
    assert!(rep.e_o > 0.0);
    assert!(conjecture_o_certify(&fl3, &QConnection::new(&fl3).unwrap(), &[1.0, -1.0]).is_err());
}

#[test]
fn positive_points() {
    let p1 = FlagVariety::from_label("P1").unwrap();
    let pp = schubert_positive_point(&p1, &QConnection::new(&p1).unwrap(), &[1.0], 100).unwrap();
    assert!((pp.values[0] - 1.0).abs() < 1e-12 && (pp.values[1] - 1.0).abs() < 1e-10);
    for label in ["P2", "Gr24", "Fl3"] {
        let x = FlagVariety::from_label(label).unwrap();
        let qc = QConnection::new(&x).unwrap();
        let q = vec![1.0; qc.divisors.len()];
        let pp = schubert_positive_point(&x, &qc, &q, 200).unwrap();
        assert!(pp.values.iter().all(|&v| v > 0.0));
        assert!(pp.c1_defect < 1e-9, "{label}: {}", pp.c1_defect);
        assert!(pp.homomorphism_defect < 1e-9);
    }
    // P²: λ(σ_{s1})² = λ(σ_{s1} ⋆ σ_{s1}) = λ(σ_{s2s1}).
    let p2 = FlagVariety::from_label("P2").unwrap();
    let pp = schubert_positive_point(&p2, &QConnection::new(&p2).unwrap(), &[1.0], 100).unwrap();
    assert!((pp.values[1] * pp.values[1] - pp.values[2]).abs() < 1e-10);
}
