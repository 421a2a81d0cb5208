use gammaflag_core::flatsections::{
    asymptotic_class_test, dual_coeffs_at, eval_qh_class, frobenius_solve, fundamental_solution, gamma_limit,
    hbar_residual, ia_integral, j_function, mir_classes, mir_inverse_on_c1_span, quantum_system_exact, FlatSection,
    FrobeniusSystem, JOptions, LimitStatus, Provenance,
};
use gammaflag_core::gammaclass::{euler_gamma, gamma};
use gammaflag_core::linalg::{mat_vec, rat, ratio, Mat};
use gammaflag_core::qh::QConnection;
use gammaflag_core::schubert::FlagVariety;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn space(label: &str) -> (FlagVariety, QConnection) {
    let x = FlagVariety::from_label(label).unwrap();
    let qc = QConnection::new(&x).unwrap();
    (x, qc)
}

/// `K_ν(z) = ∫_0^∞ e^{−z cosh u} cosh(νu) du` by the trapezoid rule.
fn bessel_k(nu: f64, z: f64) -> f64 {
    let step = 1.0 / 256.0;
    let mut acc = 0.5 * (-z).exp();
    let mut u: f64 = step;
    loop {
        let term = (-z * u.cosh()).exp() * (nu * u).cosh();
        acc += term;
        if term < 1e-300 || u > 60.0 {
            break;
        }
        u += step;
    }
    acc * step
}

#[test]
fn bessel_oracle_is_sound() {
    // K_{1/2}(z) = √(π/(2z)) e^{−z}.
    for z in [0.3, 1.0, 4.0] {
        let exact = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z as f64).exp();
        assert!((bessel_k(0.5, z) - exact).abs() < 1e-14 * exact.max(1.0));
    }
    assert!((2.0 * bessel_k(0.0, 2.0) - 0.2277877).abs() < 1e-7);
}

#[test]
fn scalar_system_gives_exponential_series() {
    // s v' = (λ + s) v has v = s^λ e^s, so S_k = 1/k!.
    let lambda = ratio(1, 3);
    let mut op = BTreeMap::new();
    op.insert(vec![0], vec![vec![lambda.clone()]]);
    op.insert(vec![1], vec![vec![rat(1)]]);
    let sys = FrobeniusSystem::new(1, vec![op]).unwrap();
    let sol = frobenius_solve(&sys, 12).unwrap();
    let mut fact = rat(1);
    for k in 0..=12u32 {
        if k > 0 {
            fact *= rat(k as i64);
        }
        assert_eq!(sol.coeffs[&vec![k]][0][0], rat(1) / fact.clone());
    }
}

#[test]
fn resonant_system_is_rejected() {
    let mut op = BTreeMap::new();
    op.insert(vec![0], vec![vec![0.0, 0.0], vec![0.0, 2.0]]);
    op.insert(vec![1], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    let sys = FrobeniusSystem::new(2, vec![op]).unwrap();
    assert!(frobenius_solve(&sys, 4).is_err());
}

#[test]
fn noncommuting_leading_terms_are_rejected() {
    let mut a = BTreeMap::new();
    a.insert(vec![0, 0], vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
    let mut b = BTreeMap::new();
    b.insert(vec![0, 0], vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    assert!(FrobeniusSystem::new(2, vec![a, b]).is_err());
}

#[test]
fn exact_recurrence_on_flag_and_grassmannian() {
    for (label, h) in [("Fl3", vec![ratio(1, 7), ratio(-2, 9)]), ("Gr24", vec![ratio(1, 5), ratio(1, 11), ratio(-1, 3)]), ("P2", vec![rat(0), rat(0)])] {
        let (_, qc) = space(label);
        let sys = quantum_system_exact(&qc, &ratio(3, 2), &h).unwrap();
        let sol = frobenius_solve(&sys, 4).unwrap();
        for nu in sol.coeffs.keys() {
            for j in 0..sys.nvars {
                let d = sol.recurrence_defect(&sys, j, nu);
                assert!(d.iter().flatten().all(|v: &BigRational| v.is_zero()), "{label} ν={nu:?} j={j}");
            }
        }
    }
}

fn hypergeometric(s: f64, power: i32, terms: usize) -> f64 {
    // Σ_d s^{p d}/(d!)^p
    let mut term = 1.0;
    let mut acc = 1.0;
    for d in 1..terms {
        term *= s.powi(power) / (d as f64).powi(power);
        acc += term;
    }
    acc
}

#[test]
fn j_function_unit_components() {
    let grid = [0.3, 0.9, 2.0, 5.0, 12.0];
    for (label, p) in [("P1", 2), ("P2", 3)] {
        let (x, qc) = space(label);
        let js = j_function(&x, &qc, &grid, &JOptions::default()).unwrap();
        for j in &js {
            let got = j.components[0] * j.log_scale.exp();
            let expect = hypergeometric(j.s, p, 200);
            assert!((got / expect - 1.0).abs() < 1e-11, "{label} s={}: {got} vs {expect}", j.s);
            let expected = if j.s <= 1.0 { Provenance::Series } else { Provenance::OdeContinued };
            assert_eq!(j.provenance, expected);
        }
    }
    let (x, qc) = space("P1");
    let small = j_function(&x, &qc, &[1e-4], &JOptions::default()).unwrap();
    assert!((small[0].components[0] - 1.0).abs() < 1e-7);
}

#[test]
fn p1_log_component_matches_bessel_closed_form() {
    // At q = s², the point-class coefficient of S·1 is −2K_0(2s) − 2γ I_0(2s).
    let (x, qc) = space("P1");
    let grid = [0.5, 1.0, 3.0, 6.0];
    let js = j_function(&x, &qc, &grid, &JOptions::default()).unwrap();
    for j in &js {
        let i0 = hypergeometric(j.s, 2, 200);
        let expect = -2.0 * bessel_k(0.0, 2.0 * j.s) - 2.0 * euler_gamma() * i0;
        let got = j.components[1] * j.log_scale.exp();
        assert!((got - expect).abs() < 1e-10 * expect.abs(), "s={}: {got} vs {expect}", j.s);
    }
}

#[test]
fn gamma_limits_for_projective_spaces() {
    let grid: Vec<f64> = (0..=10).map(|k| 10.0 + 5.0 * k as f64).collect();
    let (x, qc) = space("P1");
    let lim = gamma_limit(&x, &qc, &grid, true, &JOptions::default()).unwrap();
    assert!((lim.estimate[1] + 2.0 * 0.5772156649015329).abs() < 1e-3);
    assert!((lim.estimate[0] - 1.0).abs() < 1e-12);
    assert_eq!(lim.status, LimitStatus::Converged);
    let (x, qc) = space("P2");
    let lim = gamma_limit(&x, &qc, &grid, true, &JOptions::default()).unwrap();
    assert!((lim.estimate[1] + 3.0 * 0.5772156649015329).abs() < 5e-3, "{:?}", lim.estimate);
}

#[test]
fn flatness_residual_on_grassmannian() {
    let (x, qc) = space("Gr24");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let hbar = rng.random_range(0.5..2.0);
        let h: Vec<f64> = (0..x.rank()).map(|_| rng.random_range(-0.2..0.2)).collect();
        let q = [rng.random_range(0.2..1.5)];
        let (sys, sol) = fundamental_solution(&qc, hbar, &h, 80).unwrap();
        assert!(sol.residual(&sys, &q) < 1e-12);
    }
    let (x, qc) = space("Fl3");
    let (sys, sol) = fundamental_solution(&qc, 1.3, &[0.1, -0.07], 40).unwrap();
    assert!(sol.residual(&sys, &[0.4, 0.7]) < 1e-12);
    let _ = x;
}

#[test]
fn ia_spot_value() {
    let (x, qc) = space("P1");
    let v = ia_integral(&x, &qc, 1.0, &[0.0], &[1.0], &[1.0, 0.0]).unwrap();
    assert!((v - 2.0 * bessel_k(0.0, 2.0)).abs() < 1e-10);
    assert!((v - 0.2277877).abs() < 1e-7);
}

#[test]
fn ia_matches_bessel_for_p1_equivariant() {
    // I^A(ℏ, h, q, 1) = 2 K_{h/ℏ}(2√q/ℏ) for ℙ¹.
    let (x, qc) = space("P1");
    for hbar in [0.5, 1.0, 2.0] {
        for h in [-0.15, 0.1, 0.2] {
            for q in [0.5, 1.0, 2.0] {
                let v = ia_integral(&x, &qc, hbar, &[h], &[q], &[1.0, 0.0]).unwrap();
                let expect = 2.0 * bessel_k(h / hbar, 2.0 * q.sqrt() / hbar);
                assert!((v - expect).abs() < 1e-9 * expect.max(1.0), "ℏ={hbar} h={h} q={q}: {v} vs {expect}");
            }
        }
    }
}

/// `α∨_j(s_i h)` from `α∨_j(h)`.
fn reflect_h(x: &FlagVariety, i: usize, h: &[f64]) -> Vec<f64> {
    let a = x.rs.cartan();
    (0..h.len()).map(|j| h[j] - a[j][i] as f64 * h[i]).collect()
}

#[test]
fn ia_is_weyl_invariant() {
    for (label, h, q) in [("P1", vec![0.13], vec![0.8]), ("Fl3", vec![0.11, -0.23], vec![0.6, 1.1]), ("P2", vec![0.17, 0.05], vec![0.9])] {
        let (x, qc) = space(label);
        let mut unit = vec![0.0; x.dim_h()];
        unit[0] = 1.0;
        let base = ia_integral(&x, &qc, 1.1, &h, &q, &unit).unwrap();
        for i in 0..x.rank() {
            let hw = reflect_h(&x, i, &h);
            let v = ia_integral(&x, &qc, 1.1, &hw, &q, &unit).unwrap();
            assert!((v - base).abs() < 1e-8 * base.abs().max(1.0), "{label} s{i}: {v} vs {base}");
        }
    }
}

/// `ℏ^{−(2ρ∨−2ρ∨_P)(h)/ℏ} ∏ Γ(α∨(h)/ℏ)` over `α ∈ −(R⁺∖R⁺_P)`.
fn closed_form_limit(x: &FlagVariety, hbar: f64, h: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut prod = 1.0;
    for k in x.rs.non_levi_roots(&x.par.ip) {
        let v: f64 = x.rs.positive_coroots[k].iter().zip(h).map(|(&c, y)| c as f64 * y).sum();
        sum += v;
        prod *= gamma(-v / hbar);
    }
    hbar.powf(-sum / hbar) * prod
}

#[test]
fn ia_small_q_limit_matches_gamma_product() {
    for (label, h) in [("P1", vec![-0.6]), ("Fl3", vec![-0.55, -0.62]), ("P2", vec![-0.6, -0.45])] {
        let (x, qc) = space(label);
        let hbar = 0.9;
        let s: f64 = 1e-14;
        let q: Vec<f64> = qc.divisors.iter().map(|_| s).collect();
        // λ(α_i) = 1 off the Levi, so λ(h) = Σ_i ω∨_i(h).
        let lambda_h: f64 = qc
            .divisors
            .iter()
            .map(|&i| x.rs.fundamental_coweight(i).iter().zip(&h).map(|(c, y)| gammaflag_core::linalg::rat_to_f64(c) * y).sum::<f64>())
            .sum();
        let mut unit = vec![0.0; x.dim_h()];
        unit[0] = 1.0;
        let v = ia_integral(&x, &qc, hbar, &h, &q, &unit).unwrap() * s.powf(-lambda_h / hbar);
        let expect = closed_form_limit(&x, hbar, &h);
        assert!((v / expect - 1.0).abs() < 1e-4, "{label}: {v} vs {expect}");
    }
}

#[test]
fn mir_classes_first_steps() {
    let (x, qc) = space("P1");
    let a = mir_classes(&x, &qc, 1);
    let a1 = eval_qh_class(&a[1], 0.7, &[0.3], &[1.4], 2);
    // c1 = 2σ_{s1} − α∨_1(h).
    assert!((a1[0] + 0.3).abs() < 1e-15 && (a1[1] - 2.0).abs() < 1e-15);
    let (x, qc) = space("P2");
    let hbar = 0.8;
    let q = [1.3];
    let a = mir_classes(&x, &qc, 2);
    let a2 = eval_qh_class(&a[2], hbar, &[0.0, 0.0], &q, 3);
    let c1m: Mat<f64> = qc.c1_matrix(&q, &[0.0, 0.0]);
    let c1 = mat_vec(&c1m, &[1.0, 0.0, 0.0]);
    let c1c1 = mat_vec(&c1m, &c1);
    for w in 0..3 {
        assert!((a2[w] - (c1c1[w] - hbar * c1[w])).abs() < 1e-13);
    }
}

#[test]
fn mir_inverse_recovers_duals() {
    for label in ["P1", "P2", "P3"] {
        let (x, qc) = space(label);
        let h: Vec<f64> = (0..x.rank()).map(|j| 0.1 - 0.03 * j as f64).collect();
        let inv = mir_inverse_on_c1_span(&x, &qc, 0.9, &h, &[1.2]).unwrap();
        assert!(inv.complete);
        let classes = mir_classes(&x, &qc, x.dim_h() - 1);
        let cols: Vec<Vec<f64>> = classes.iter().map(|c| eval_qh_class(c, -0.9, &h, &[1.2], x.dim_h())).collect();
        for v in 0..x.dim_h() {
            let dual = dual_coeffs_at(&x, v, &h);
            for w in 0..x.dim_h() {
                let s: f64 = (0..x.dim_h()).map(|k| inv.coefficients[v][k] * cols[k][w]).sum();
                assert!((s - dual[w]).abs() < 1e-10);
            }
        }
    }
    // ℙ¹: σ^e = A_1/2 at h = 0.
    let (x, qc) = space("P1");
    let inv = mir_inverse_on_c1_span(&x, &qc, 1.0, &[0.0], &[1.0]).unwrap();
    assert!((inv.coefficients[0][1] - 0.5).abs() < 1e-15 && inv.coefficients[0][0].abs() < 1e-15);
    // Fl3 cohomology is not generated by c1.
    let (x, qc) = space("Fl3");
    let inv = mir_inverse_on_c1_span(&x, &qc, 1.0, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert!(!inv.complete);
}

#[test]
fn asymptotic_test_on_bessel_section() {
    // ℏ^{−1/2}(2K_1(2/ℏ)σ_e + 2K_0(2/ℏ)σ_{s1}) is flat with eigenvalue 2.
    let (x, qc) = space("P1");
    let section = FlatSection {
        eval: Box::new(|hb: f64| {
            let z = 2.0 / hb;
            Ok(vec![2.0 * bessel_k(1.0, z) / hb.sqrt(), 2.0 * bessel_k(0.0, z) / hb.sqrt()])
        }),
        provenance: Provenance::IntegralBacked,
    };
    for hb in [0.05, 0.2, 1.0] {
        assert!(hbar_residual(&x, &qc, &section, hb, 2.0).unwrap() < 1e-8);
    }
    let grid: Vec<f64> = (1..=10).map(|k| 0.01 * k as f64).collect();
    let r = asymptotic_class_test(&section, 2.0, &grid).unwrap();
    assert!(r.passes, "{r:?}");
    assert!(r.m.abs() < 0.2);
    let r = asymptotic_class_test(&section, 2.5, &grid).unwrap();
    assert!(!r.passes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn series_residual_small_for_p2(hbar in 0.4f64..2.0, h0 in -0.3f64..0.3, h1 in -0.3f64..0.3, q in 0.1f64..2.0) {
        let (_, qc) = space("P2");
        let (sys, sol) = fundamental_solution(&qc, hbar, &[h0, h1], 60).unwrap();
        prop_assert!(sol.residual(&sys, &[q]) < 1e-10);
    }
}
