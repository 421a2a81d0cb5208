use gammaflag_core::gammaclass::{
    euler_gamma, gamma, gamma_class, log_gamma_coeffs, normalize, normalize_equivariant, GammaClass,
};
use gammaflag_core::poly::Poly;
use gammaflag_core::schubert::FlagVariety;
use proptest::prelude::*;

/// `∫_0^∞ e^{−t} t^{x−1} dt` by the exp-sinh substitution `t = exp(u − e^{−u})`
/// and the trapezoid rule.
fn gamma_quad(x: f64) -> f64 {
    let step = 1.0 / 128.0;
    let mut acc = 0.0;
    let mut u: f64 = -6.0;
    while u <= 7.0 {
        let t = (u - (-u).exp()).exp();
        let dt = t * (1.0 + (-u).exp());
        acc += (-t).exp() * t.powf(x - 1.0) * dt;
        u += step;
    }
    acc * step
}

#[test]
fn quadrature_oracle_is_sound() {
    assert!((gamma_quad(1.0) - 1.0).abs() < 1e-13);
    assert!((gamma_quad(5.0) - 24.0).abs() < 1e-11);
    assert!((gamma_quad(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn first_coefficient_is_minus_euler_gamma() {
    // d/dx log Γ(1+x) at 0 by a fourth-order central difference.
    let e = 1e-3;
    let lg = |x: f64| gamma_quad(1.0 + x).ln();
    let d = (8.0 * (lg(e) - lg(-e)) - (lg(2.0 * e) - lg(-2.0 * e))) / (12.0 * e);
    let s = log_gamma_coeffs(4).unwrap();
    assert!((s.b[0] - d).abs() < 1e-9);
    assert!((s.b[0] + 0.5772156649).abs() < 1e-10);
    assert!((euler_gamma() - 0.5772156649015329).abs() < 1e-15);
}

#[test]
fn second_coefficient_from_curvature() {
    let e = 1e-2;
    let lg = |x: f64| gamma_quad(1.0 + x).ln();
    // Fourth-order second difference, halved.
    let d2 = (-lg(2.0 * e) + 16.0 * lg(e) - 30.0 * lg(0.0) + 16.0 * lg(-e) - lg(-2.0 * e)) / (12.0 * e * e);
    let s = log_gamma_coeffs(4).unwrap();
    assert!((s.b[1] - d2 / 2.0).abs() < 1e-8);
    assert!((s.b[1] - 0.8224670334).abs() < 1e-10);
}

#[test]
fn series_reproduces_gamma_at_point_three() {
    let s = log_gamma_coeffs(30).unwrap();
    let g = gamma_quad(1.3);
    assert!((s.eval(0.3).exp() - g).abs() < 1e-10);
    for x in [-0.45, -0.2, 0.1, 0.3, 0.45] {
        assert!((s.eval(x).exp() - gamma_quad(1.0 + x)).abs() < 1e-9, "x={x}");
    }
}

#[test]
fn functional_equation_on_a_grid() {
    for k in 1..40 {
        let x = 0.1 * k as f64 + 0.013;
        assert!((gamma(1.0 + x) - x * gamma(x)).abs() < 1e-12 * gamma(1.0 + x).max(1.0));
        assert!((gamma(x) - gamma_quad(x)).abs() < 1e-10 * gamma(x).max(1.0), "x={x}");
    }
}

#[test]
fn p1_and_p2_gamma_classes() {
    let p1 = FlagVariety::from_label("P1").unwrap();
    let g = gamma_class(&p1, 8).unwrap();
    assert_eq!(g.coeffs[0], 1.0);
    assert!((g.coeffs[1] + 2.0 * 0.5772156649015329).abs() < 1e-14);
    let p2 = FlagVariety::from_label("P2").unwrap();
    let g = gamma_class(&p2, 8).unwrap();
    assert!((g.coeffs[1] + 3.0 * 0.5772156649015329).abs() < 1e-14);
}

/// `Γ̂(ℙⁿ) = exp((n+1) Σ_k b_k H^k)` truncated at `H^{n+1} = 0`, with `H^k = σ_k`.
fn projective_oracle(n: usize) -> Vec<f64> {
    let b = log_gamma_coeffs(n).unwrap().b;
    let log: Vec<f64> = (0..=n).map(|k| if k == 0 { 0.0 } else { (n + 1) as f64 * b[k - 1] }).collect();
    let mul = |a: &[f64], c: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                out[i + j] += a[i] * c[j];
            }
        }
        out
    };
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    let mut term = out.clone();
    for k in 1..=n {
        term = mul(&term, &log).iter().map(|t| t / k as f64).collect();
        for (o, t) in out.iter_mut().zip(&term) {
            *o += t;
        }
    }
    out
}

#[test]
fn projective_spaces_match_truncated_exponential() {
    for n in 1..=4 {
        let x = FlagVariety::from_label(&format!("P{n}")).unwrap();
        let g = gamma_class(&x, 12).unwrap();
        let o = projective_oracle(n);
        for (a, b) in g.coeffs.iter().zip(&o) {
            assert!((a - b).abs() < 1e-12, "P{n}");
        }
    }
}

#[test]
fn truncation_order_below_dimension_is_rejected() {
    let x = FlagVariety::from_label("Fl3").unwrap();
    assert!(gamma_class(&x, 2).is_err());
    assert!(gamma_class(&x, 3).is_ok());
    assert!(log_gamma_coeffs(0).is_err());
}

#[test]
fn equivariant_restriction_matches_series() {
    for label in ["P1", "Fl3", "Gr24", "B2:"] {
        let x = FlagVariety::from_label(label).unwrap();
        let g = gamma_class(&x, 40).unwrap();
        let h: Vec<f64> = (0..x.rank()).map(|j| 0.03 + 0.017 * j as f64).collect();
        for w in 0..x.dim_h() {
            let exact = GammaClass::restriction(&x, w, &h);
            let ser = g.restriction_series(&x, w, &h).unwrap();
            assert!((exact - ser).abs() < 1e-10, "{label} w={w}");
        }
        let tiny: Vec<f64> = h.iter().map(|v| v * 1e-9).collect();
        for w in 0..x.dim_h() {
            assert!((GammaClass::restriction(&x, w, &tiny) - 1.0).abs() < 1e-8);
        }
    }
    let x = FlagVariety::from_label("P1").unwrap();
    let g = gamma_class(&x, 10).unwrap();
    assert!(g.restriction_series(&x, 0, &[1.5]).is_err());
}

/// Coefficient of `σ_v` from numeric restrictions: `∫ a ∪ σ^v` by localization.
fn coefficient_from_restrictions(x: &FlagVariety, v: usize, h: &[f64]) -> f64 {
    let dual = x.dual_class(v);
    let rest: Vec<f64> = (0..x.dim_h())
        .map(|w| GammaClass::restriction(x, w, h) * dual.restrictions[w].eval_f64(h))
        .collect();
    x.integrate_numeric(&rest, h)
}

#[test]
fn equivariant_evaluator_extrapolates_to_nonequivariant_class() {
    for (label, dir) in [("P1", vec![1.0]), ("P2", vec![1.0, 0.41]), ("Fl3", vec![1.0, 0.37])] {
        let x = FlagVariety::from_label(label).unwrap();
        let g = gamma_class(&x, 10).unwrap();
        for v in 0..x.dim_h() {
            let at = |t: f64| {
                let h: Vec<f64> = dir.iter().map(|d| d * t).collect();
                coefficient_from_restrictions(&x, v, &h)
            };
            // Richardson on t, t/2, t/4 removes the linear and quadratic terms.
            let (a, b, c) = (at(0.04), at(0.02), at(0.01));
            let r1 = 2.0 * b - a;
            let r2 = 2.0 * c - b;
            let lim = (4.0 * r2 - r1) / 3.0;
            assert!((lim - g.coeffs[v]).abs() < 1e-4, "{label} v={v}: {lim} vs {}", g.coeffs[v]);
        }
    }
}

#[test]
fn normalize_p1_unit() {
    let x = FlagVariety::from_label("P1").unwrap();
    for hbar in [0.3, 1.0, 2.5] {
        let out = normalize(&x, hbar, &[1.0, 0.0]).unwrap();
        assert!((out[0] - hbar.sqrt()).abs() < 1e-14);
        assert!((out[1] - 2.0 * hbar.ln() / hbar.sqrt()).abs() < 1e-14);
    }
    let id = normalize(&x, 1.0, &[0.7, -0.2]).unwrap();
    assert!((id[0] - 0.7).abs() < 1e-15 && (id[1] + 0.2).abs() < 1e-15);
    assert!(normalize(&x, -1.0, &[1.0, 0.0]).is_err());
}

#[test]
fn normalize_equivariant_rejects_inhomogeneous() {
    let x = FlagVariety::from_label("P1").unwrap();
    let bad = x.class_from_coeffs(vec![&Poly::one(1) + &Poly::linear(&[1]), Poly::zero(1)]);
    assert!(normalize_equivariant(&x, 1.0, &bad, &[0.1]).is_err());
    let good = x.unit();
    let out = normalize_equivariant(&x, 1.0, &good, &[0.1]).unwrap();
    // At ℏ = 1 the unit restricts to 1 at both points, times 1^{...}.
    assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-15));
    // At h = 0 the restrictions agree with the nonequivariant normalization.
    let hbar = 0.7;
    let eq = normalize_equivariant(&x, hbar, &good, &[0.0]).unwrap();
    let ne = normalize(&x, hbar, &[1.0, 0.0]).unwrap();
    for w in 0..2 {
        let from_coeffs = ne[0] + ne[1] * x.restriction(1, w).eval_f64(&[0.0]);
        assert!((eq[w] - from_coeffs).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn truncation_error_decreases_geometrically(x in -0.6f64..0.6) {
        let exact = gamma(1.0 + x).ln();
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&k| (log_gamma_coeffs(k).unwrap().eval(x) - exact).abs())
            .collect();
        // Each doubling of K shrinks the error by at least 0.6^8 up to roundoff.
        prop_assert!(errs[1] <= errs[0] * 0.6f64.powi(8) + 1e-14);
        prop_assert!(errs[2] <= errs[1] * 0.6f64.powi(16) + 1e-14);
    }

    #[test]
    fn degree_zero_part_is_one(k in 3usize..20, idx in 0usize..4) {
        let label = ["P2", "Fl3", "Gr24", "G2:1"][idx];
        let x = FlagVariety::from_label(label).unwrap();
        if k >= x.ell() {
            prop_assert_eq!(gamma_class(&x, k).unwrap().coeffs[0], 1.0);
        }
    }
}
