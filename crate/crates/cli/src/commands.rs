//! One function per subcommand, each returning a JSON document, a table and plot series.

use crate::config::RunConfig;
use gammaflag_core::flatsections::{
    asymptotic_class_test, dual_coeffs_at, gamma_limit, hbar_residual, ia_integral, mir_inverse_on_c1_span, JOptions,
};
use gammaflag_core::gammaclass::{euler_gamma, gamma_class};
use gammaflag_core::mirror::{IntegralValue, Mirror, MirrorReport, QuadOptions, QuadStatus};
use gammaflag_core::qh::{c1_pairing, conjecture_o_certify, schubert_positive_point, QConnection, SpectralStatus};
use gammaflag_core::schubert::FlagVariety;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub type CmdResult = Result<Outcome, String>;

/// What a command produced: the document, whether its checks passed, a table for CSV and plot series.
pub struct Outcome {
    pub doc: Value,
    pub ok: bool,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plots: Vec<(String, Vec<(f64, f64)>)>,
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn space(cfg: &RunConfig) -> Result<FlagVariety, String> {
    FlagVariety::from_label(&cfg.label()?).map_err(err)
}

fn qc(x: &FlagVariety) -> Result<QConnection, String> {
    QConnection::new(x).map_err(err)
}

fn divisor_values(cfg: &RunConfig, x: &FlagVariety, name: &str, value: &Option<String>) -> Result<Vec<f64>, String> {
    let k = x.rank() - x.par.ip.len();
    let v = cfg.list_or(name, value, vec![1.0; k])?;
    if v.len() != k {
        return Err(format!("--{name}: {} expects {k} values, got {}", x.label, v.len()));
    }
    if v.iter().any(|&c| c.is_nan() || c <= 0.0) {
        return Err(format!("--{name}: values must be positive"));
    }
    Ok(v)
}

fn h_values(cfg: &RunConfig, x: &FlagVariety) -> Result<Vec<f64>, String> {
    let h = cfg.list_or("h", &cfg.h, vec![0.0; x.rank()])?;
    if h.len() != x.rank() {
        return Err(format!("--h: {} expects {} values, got {}", x.label, x.rank(), h.len()));
    }
    Ok(h)
}

fn hbar_grid(cfg: &RunConfig, default: Vec<f64>) -> Result<Vec<f64>, String> {
    let g = cfg.list_or("hbar-grid", &cfg.hbar_grid, default)?;
    if g.contains(&0.0) {
        return Err("--hbar-grid: ℏ must be nonzero".into());
    }
    Ok(g)
}

fn quad(cfg: &RunConfig) -> QuadOptions {
    QuadOptions { seed: cfg.seed.unwrap_or(QuadOptions::default().seed), ..QuadOptions::default() }
}

fn mirror(x: &FlagVariety) -> Result<Mirror, String> {
    Mirror::new(x).map_err(err)
}

/// `e` for the identity, otherwise `s2s1`-style products.
fn word_name(word: &[usize]) -> String {
    if word.is_empty() {
        "e".into()
    } else {
        word.iter().map(|i| format!("s{i}")).collect()
    }
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

pub fn describe(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let rs = &x.rs;
    let ip = &x.par.ip;
    let divisors: Vec<usize> = (0..x.rank()).filter(|i| !ip.contains(i)).collect();
    let pairings: Vec<i64> = divisors
        .iter()
        .map(|&j| {
            let mut e = vec![0i64; x.rank()];
            e[j] = 1;
            c1_pairing(&x, &e)
        })
        .collect();
    let word = rs.w_p(ip).map_err(err)?.word;
    let betas = rs.beta_sequence_for(&word, ip).map_err(err)?;
    let count = |v: Vec<Vec<i64>>| {
        let mut m = BTreeMap::new();
        for b in v {
            *m.entry(b).or_insert(0usize) += 1;
        }
        m
    };
    let expect = count(rs.non_levi_roots(ip).iter().map(|&k| rs.positive_coroots[k].iter().map(|c| -c).collect()).collect());
    let matches = count(betas.clone()) == expect;
    let report = rs.report(&x.par);
    let rows = x
        .wp()
        .iter()
        .enumerate()
        .map(|(v, w)| vec![v.to_string(), w.length().to_string(), word_name(&w.word_1based())])
        .collect();
    let doc = json!({
        "space": x.label,
        "root_system": report,
        "ip": one_based(ip),
        "ell": x.ell(),
        "dim_H": x.dim_h(),
        "divisors": one_based(&divisors),
        "c1_pairings": pairings,
        "w_P_word": one_based(&word),
        "beta_coroots": betas,
        "beta_multiset_matches": matches,
    });
    Ok(Outcome { doc, ok: matches, header: header(&["index", "length", "word"]), rows, plots: vec![] })
}

pub fn spectra(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let qc = qc(&x)?;
    let q = divisor_values(cfg, &x, "q", &cfg.q)?;
    let r = conjecture_o_certify(&x, &qc, &q).map_err(err)?;
    let rows = r.eigenvalues.iter().map(|e| vec![fmt(e.re), fmt(e.im)]).collect();
    let plots = vec![("eigenvalues".into(), r.eigenvalues.iter().map(|e| (e.re, e.im)).collect())];
    let ok = r.status == SpectralStatus::Certified;
    Ok(Outcome { doc: to_value(&r), ok, header: header(&["re", "im"]), rows, plots })
}

pub fn positive_point(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let qc = qc(&x)?;
    let q = divisor_values(cfg, &x, "q", &cfg.q)?;
    let tol = cfg.tol(1e-9)?;
    let p = schubert_positive_point(&x, &qc, &q, 10_000).map_err(err)?;
    let ok = p.values.iter().all(|&v| v > 0.0) && p.c1_defect < tol;
    let rows = x.wp().iter().zip(&p.values).map(|(w, v)| vec![word_name(&w.word_1based()), fmt(*v)]).collect();
    let mut doc = to_value(&p);
    doc["space"] = json!(x.label);
    doc["q"] = json!(q);
    doc["tol"] = json!(tol);
    Ok(Outcome { doc, ok, header: header(&["word", "value"]), rows, plots: vec![] })
}

pub fn mirror_cmd(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let m = mirror(&x)?;
    let qc = qc(&x)?;
    let t = divisor_values(cfg, &x, "t", if cfg.t.is_some() { &cfg.t } else { &cfg.q })?;
    let tol = cfg.tol(1e-8)?;
    let h = h_values(cfg, &x)?;
    let grid = hbar_grid(cfg, vec![1.0])?;
    let cp = m.critical_point(&t).map_err(err)?;
    let e_o = conjecture_o_certify(&x, &qc, &t).map_err(err)?.e_o;
    let opts = quad(cfg);
    let mut values = vec![];
    let mut statuses = vec![];
    for &hb in &grid {
        let v = m.ib_integral(hb, &h, &t, &opts).map_err(err)?;
        let (value, e) = v.combine(&[1.0]);
        statuses.push(v.status);
        values.push(IntegralValue { hbar: hb, h: h.clone(), value, err: e });
    }
    let laurent = match &m.laurent {
        Some(ps) => m.divisors.iter().zip(ps).map(|(i, p)| format!("P_{} = {}", i + 1, p.pretty())).collect(),
        None => vec![],
    };
    let abs_diff = (cp.f_star - e_o).abs();
    let report = MirrorReport {
        space: x.label.clone(),
        t: t.clone(),
        a_star: cp.a_star.clone(),
        f_star: cp.f_star,
        e_o,
        abs_diff,
        hessian_det: cp.hessian_det,
        laurent,
        integral_values: values,
    };
    let rows = report.integral_values.iter().map(|v| vec![fmt(v.hbar), fmt(v.value), fmt(v.err)]).collect();
    let plots = vec![("ib".into(), report.integral_values.iter().map(|v| (v.hbar, v.value)).collect())];
    let mut doc = to_value(&report);
    doc["word"] = json!(one_based(&m.word));
    doc["gradient_norm"] = json!(cp.gradient_norm);
    doc["quadrature_status"] = to_value(&statuses);
    doc["tol"] = json!(tol);
    Ok(Outcome { doc, ok: abs_diff < tol, header: header(&["hbar", "ib", "err"]), rows, plots })
}

#[derive(Serialize)]
struct IntegralRow {
    hbar: f64,
    y: String,
    ia: f64,
    ib: f64,
    ib_err: f64,
    abs_diff: f64,
    quadrature: QuadStatus,
}

pub fn integrals(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let m = mirror(&x)?;
    let qc = qc(&x)?;
    let q = divisor_values(cfg, &x, "q", &cfg.q)?;
    let h = h_values(cfg, &x)?;
    let grid = hbar_grid(cfg, vec![0.5, 1.0, 2.0])?;
    let tol = cfg.tol(1e-6)?;
    let opts = quad(cfg);
    let n = x.dim_h();
    let mut unit = vec![0.0; n];
    unit[0] = 1.0;
    let mut table = vec![];
    let mut complete = true;
    let mut conditions = vec![];
    for &hb in &grid {
        let inv = mir_inverse_on_c1_span(&x, &qc, hb, &h, &q).map_err(err)?;
        complete &= inv.complete;
        conditions.push(inv.condition);
        let kmax = if inv.complete { n - 1 } else { 0 };
        let mom = m.ib_moments(hb, &h, &q, kmax, &opts).map_err(err)?;
        // y = 1 = Mir([ω]) always; the dual Schubert classes when Mir⁻¹ is available.
        let ia = ia_integral(&x, &qc, hb, &h, &q, &unit).map_err(err)?;
        let (ib, e) = mom.combine(&[1.0]);
        table.push(IntegralRow { hbar: hb, y: "1".into(), ia, ib, ib_err: e, abs_diff: (ia - ib).abs(), quadrature: mom.status });
        if inv.complete {
            for (v, c) in inv.coefficients.iter().enumerate() {
                let ia = ia_integral(&x, &qc, hb, &h, &q, &dual_coeffs_at(&x, v, &h)).map_err(err)?;
                let (ib, e) = mom.combine(c);
                let y = format!("sigma^{}", word_name(&x.wp()[v].word_1based()));
                table.push(IntegralRow { hbar: hb, y, ia, ib, ib_err: e, abs_diff: (ia - ib).abs(), quadrature: mom.status });
            }
        }
    }
    let worst = table.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let ok = table.iter().all(|r| r.abs_diff < tol);
    let rows = table
        .iter()
        .map(|r| vec![fmt(r.hbar), r.y.clone(), fmt(r.ia), fmt(r.ib), fmt(r.ib_err), fmt(r.abs_diff)])
        .collect();
    let plots = vec![("abs_diff".into(), table.iter().filter(|r| r.y == "1").map(|r| (r.hbar, r.abs_diff)).collect())];
    let doc = json!({
        "space": x.label,
        "q": q,
        "h": h,
        "tol": tol,
        "mir_inverse_complete": complete,
        "mir_inverse_condition": conditions,
        "max_abs_diff": worst,
        "rows": table,
    });
    Ok(Outcome { doc, ok, header: header(&["hbar", "y", "ia", "ib", "ib_err", "abs_diff"]), rows, plots })
}

pub fn gamma(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let qc = qc(&x)?;
    let grid = cfg.list_or("s-grid", &cfg.s_grid, (0..=10).map(|k| 10.0 + 5.0 * k as f64).collect())?;
    let tol = cfg.tol(1e-3)?;
    let opts = JOptions { series_order: cfg.order.unwrap_or(JOptions::default().series_order), ..JOptions::default() };
    let g = gamma_class(&x, x.ell().max(1)).map_err(err)?;
    let lim = gamma_limit(&x, &qc, &grid, true, &opts).map_err(err)?;
    let worst = lim.distance.iter().cloned().fold(0.0, f64::max);
    let ok = worst < tol;
    let rows = lim
        .s_grid
        .iter()
        .zip(&lim.ratios)
        .map(|(s, r)| std::iter::once(fmt(*s)).chain(r.iter().map(|v| fmt(*v))).collect())
        .collect();
    let mut cols = vec!["s".to_string()];
    cols.extend(x.wp().iter().map(|w| format!("sigma_{}", word_name(&w.word_1based()))));
    let plots = (1..x.dim_h())
        .map(|v| (format!("component{v}"), lim.s_grid.iter().zip(&lim.ratios).map(|(s, r)| (*s, r[v])).collect()))
        .collect();
    let doc = json!({
        "space": x.label,
        "euler_gamma": euler_gamma(),
        "gamma_hat": g.coeffs,
        "limit": lim,
        "max_distance": worst,
        "tol": tol,
    });
    Ok(Outcome { doc, ok, header: cols, rows, plots })
}

pub fn asymptotics(cfg: &RunConfig) -> CmdResult {
    let x = space(cfg)?;
    let m = mirror(&x)?;
    let qc = qc(&x)?;
    let tol = cfg.tol(1e-7)?;
    let grid = hbar_grid(cfg, (1..=10).map(|k| 0.01 * k as f64).collect())?;
    let one = vec![1.0; m.divisors.len()];
    let e = conjecture_o_certify(&x, &qc, &one).map_err(err)?.e_o;
    let opts = quad(cfg);
    let section = m.integral_backed_section(&x, &qc, one.clone(), opts.clone());
    let residuals: Vec<(f64, f64)> = [0.05, 0.3, 1.0]
        .iter()
        .map(|&hb| hbar_residual(&x, &qc, &section, hb, e).map(|r| (hb, r)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let rep = asymptotic_class_test(&section, e, &grid).map_err(err)?;
    let spa = m.stationary_phase_check(&one, &[0.005, 0.01, 0.02, 0.03, 0.04, 0.05], &opts).map_err(err)?;
    let flat = residuals.iter().all(|(_, r)| *r < tol);
    let ok = flat && rep.passes && spa.passes;
    let rows = rep.hbar_grid.iter().zip(&rep.log_norms).map(|(h, l)| vec![fmt(*h), fmt(*l)]).collect();
    let plots = vec![("log_norm".into(), rep.hbar_grid.iter().cloned().zip(rep.log_norms.iter().cloned()).collect())];
    let doc = json!({
        "space": x.label,
        "E": e,
        "flatness_residuals": residuals,
        "tol": tol,
        "asymptotic_class": rep,
        "stationary_phase": spa,
    });
    Ok(Outcome { doc, ok, header: header(&["hbar", "log_norm"]), rows, plots })
}
