use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gammaflag"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gammaflag-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn describe_examples() {
    for (args, key, expect) in [
        (vec!["describe", "A1", "--ip="], "ell", 1),
        (vec!["describe", "A2", "--ip=2"], "dim_H", 3),
        (vec!["describe", "A3", "--ip=1,3"], "ell", 4),
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let d = json(&out);
        assert_eq!(d[key], expect, "{args:?}");
        assert_eq!(d["beta_multiset_matches"], true);
    }
}

#[test]
fn describe_reports_pairings_and_words() {
    let d = json(&run(&["describe", "--space=Gr24"]));
    assert_eq!(d["c1_pairings"], serde_json::json!([4]));
    assert_eq!(d["ell"], 4);
    assert_eq!(d["root_system"]["WP_words"].as_array().unwrap().len(), 6);
    // A bare type and rank is the full flag variety.
    let d = json(&run(&["describe", "G2"]));
    assert_eq!(d["ell"], 6);
    assert_eq!(d["c1_pairings"], serde_json::json!([2, 2]));
}

#[test]
fn integrals_p1_example() {
    let out = run(&["integrals", "P1", "--hbar=1", "--h=0", "--q=1"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    let rows = d["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["abs_diff"].as_f64().unwrap() < 1e-6);
    }
    // 2K_0(2).
    assert!((rows[0]["ia"].as_f64().unwrap() - 0.2277877).abs() < 1e-7);
}

#[test]
fn integrals_p2_dual_classes() {
    let out = run(&["integrals", "P2", "--hbar-grid=0.5,2", "--h=0.13,0.07"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    assert_eq!(d["mir_inverse_complete"], true);
    assert_eq!(d["rows"].as_array().unwrap().len(), 8);
    assert!(d["max_abs_diff"].as_f64().unwrap() < 1e-8);
}

#[test]
fn gamma_p1_example() {
    let out = run(&["gamma", "P1"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    let euler = 0.5772156649015329;
    let est = d["limit"]["estimate"][1].as_f64().unwrap();
    assert!((est + 2.0 * euler).abs() < 1e-3, "{est}");
}

#[test]
fn asymptotics_p1_example() {
    let out = run(&["asymptotics", "P1"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    assert_eq!(d["asymptotic_class"]["passes"], true);
    assert!(d["asymptotic_class"]["m"].as_f64().unwrap().is_finite());
    assert_eq!(d["stationary_phase"]["passes"], true);
}

#[test]
fn spectra_and_positive_point() {
    let d = json(&run(&["spectra", "P2"]));
    assert!((d["E_O"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(d["status"], "certified");
    let out = run(&["positive-point", "Gr24"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    assert!(d["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() > 0.0));
}

#[test]
fn mirror_critical_value() {
    let out = run(&["mirror", "P2", "--t=2"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out);
    // (n + 1) t^{1/(n+1)}.
    assert!((d["f_star"].as_f64().unwrap() - 3.0 * 2f64.powf(1.0 / 3.0)).abs() < 1e-10);
    assert!(d["abs_diff"].as_f64().unwrap() < 1e-8);
    assert_eq!(d["laurent"][0], "P_1 = a1^-1*a2^-1");
}

#[test]
fn non_type_a_mirror_is_unsupported() {
    for cmd in ["mirror", "integrals", "asymptotics"] {
        let out = run(&[cmd, "B2"]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        let d = json(&out);
        assert_eq!(d["ok"], false);
        assert!(d["error"].as_str().unwrap().contains("unsupported"), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
    }
}

#[test]
fn invalid_inputs_exit_with_errors() {
    for args in [
        vec!["spectra", "P2", "--q=1,1"],
        vec!["describe", "Q7"],
        vec!["describe"],
        vec!["gamma", "P1", "--tol=-1"],
        vec!["describe", "P2", "--ip=1"],
        vec!["integrals", "P1", "--hbar-grid=0"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(json(&out)["ok"], false, "{args:?}");
    }
    assert_eq!(run(&["frobnicate", "P1"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    // Too tight a tolerance on a short grid: the document is produced but the check fails.
    let out = run(&["gamma", "P1", "--s-grid=1,2,3,4", "--tol=1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["ok"], false);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["integrals", "P2", "--hbar-grid=0.7"]);
    let b = run(&["integrals", "P2", "--hbar-grid=0.7"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run_env(&["integrals", "P2", "--hbar-grid=0.7"], &[("GAMMAFLAG_THREADS", "1")]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn thread_variable_is_validated() {
    let out = run_env(&["describe", "P1"], &[("GAMMAFLAG_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_format() {
    let out = run(&["integrals", "P1", "--hbar-grid=1,2", "--format=csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("hbar,y,ia,ib,ib_err,abs_diff"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn plot_data_files_have_two_columns() {
    let dir = scratch_dir("plots");
    let arg = format!("--emit-plot-data={}", dir.display());
    let out = run(&["gamma", "P2", &arg]);
    assert_eq!(out.status.code(), Some(0));
    let files = json(&out)["plot_files"].as_array().unwrap().clone();
    assert_eq!(files.len(), 2);
    for f in files {
        let text = std::fs::read_to_string(f.as_str().unwrap()).unwrap();
        assert_eq!(text.lines().count(), 11);
        for line in text.lines() {
            let cols: Vec<f64> = line.split_whitespace().map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols.len(), 2);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch_dir("config");
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# integrals setup\nspace = P1\nhbar_grid = 0.5, 1, 2\nq = 2\ntol = 1e-9\n").unwrap();
    let cfg = format!("--config={}", path.display());
    let d = json(&run(&["integrals", &cfg]));
    assert_eq!(d["rows"].as_array().unwrap().len(), 9);
    assert_eq!(d["q"], serde_json::json!([2.0]));
    assert_eq!(d["tol"], 1e-9);
    let d = json(&run(&["integrals", &cfg, "--hbar-grid=1", "--q=0.5"]));
    assert_eq!(d["rows"].as_array().unwrap().len(), 3);
    assert_eq!(d["q"], serde_json::json!([0.5]));
    std::fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(run(&["describe", "P1", &cfg]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}
