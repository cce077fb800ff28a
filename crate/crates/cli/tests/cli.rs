use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlm"))
        .args(args)
        .output()
        .expect("qlm runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON summary")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

const BOOSTED: &str = r#"
scenario = "boosted-schwarzschild"
mass = 1.0
beta = 0.6
order = 32
phi_order = 8
observers = [[0, 0, 1]]
"#;

#[test]
fn boosted_qle_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", BOOSTED);
    let out_dir = dir.path().join("out");
    let s = summary(&qlm(&["qle", "--config", &cfg, "--out", out_dir.to_str().unwrap()]));

    let obs = &s["observers"][0];
    assert!((f(&obs["E_finite"]["limit"]) - 2.517766953).abs() < 1e-3);
    assert!((f(&obs["E_limit"]["limit"]) - 2.517766953).abs() < 1e-3);
    assert!((f(&s["minimum"]["m"]) - 1.0).abs() < 1e-3);
    assert!((f(&s["minimum"]["a_min"][2]) + 0.75).abs() < 1e-3);
    assert!(s["four_vector"]["e"]["residual"].is_f64());
    assert_eq!(s["converged"], Value::Bool(true));
    assert_eq!(s["gamma"], 1.25);

    let csv = std::fs::read_to_string(out_dir.join("qle_obs0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r0,E_finite,E_limit,e_integrand,p1,p2,p3"));
    assert_eq!(lines.count(), 4);
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("qle_summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, s);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", BOOSTED);
    let read = |sub: &str| {
        let o = dir.path().join(sub);
        assert!(qlm(&["qle", "--config", &cfg, "--out", o.to_str().unwrap()]).status.success());
        std::fs::read(o.join("qle_obs0.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn minkowski_energies_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.toml",
        "scenario = \"minkowski\"\nradii = [1, 10, 100]\norder = 32\nphi_order = 8\nobservers = [[0,0,0],[0,0,1],[0.5,0.5,0.5]]\n",
    );
    let out_dir = dir.path().join("out");
    let s = summary(&qlm(&["qle", "--config", &cfg, "--out", out_dir.to_str().unwrap()]));
    for j in 0..3 {
        let csv = std::fs::read_to_string(out_dir.join(format!("qle_obs{j}.csv"))).unwrap();
        for line in csv.lines().skip(1) {
            for v in line.split(',').skip(1) {
                assert!(v.parse::<f64>().unwrap().abs() < 1e-8, "{line}");
            }
        }
    }
    let min = &s["minimum"];
    assert!(min["error"].is_string() || f(&min["m"]).abs() < 1e-8, "{min}");
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", BOOSTED);
    let s = summary(&qlm(&["qle", "--config", &cfg, "--beta", "0", "--mass", "2", "--order", "16"]));
    assert_eq!(s["beta"], 0.0);
    assert_eq!(s["order"], 16);
    assert!((f(&s["four_vector"]["e"]["limit"]) - 2.0).abs() < 1e-3);
    let s = summary(&qlm(&["qle", "--config", &cfg, "--beta", "-0.6", "--order", "16"]));
    assert!((f(&s["four_vector"]["p"][2]["limit"]) + 0.75).abs() < 1e-3);
}

#[test]
fn invalid_config_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("scenario = \"boosted-schwarzschild\"\nradii = [-1]\n", "radii"),
        ("scenario = \"boosted-schwarzschild\"\nbeta = 1.5\n", "beta"),
        ("scenario = \"boosted-schwarzschild\"\norder = 4\n", "order"),
        ("scenario = \"warp\"\n", "scenario"),
        ("scenario = \"boosted-schwarzschild\"\nobservers = [[1]]\n", "observers[0]"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.toml"), text);
        let out = qlm(&["qle", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("`{field}`")), "{err}");
    }
    let out = qlm(&["qle", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.toml",
        "scenario = \"custom-dsl\"\norder = 16\nphi_order = 4\n[metric]\n\"(0,0)\" = \"1\"\n\"(1,1)\" = \"1\"\n\"(2,2)\" = \"1\"\n\"(3,3)\" = \"1\"\n",
    );
    let out = qlm(&["qle", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not Lorentzian"));
}

#[test]
fn custom_dsl_qle_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        r#"
scenario = "custom-dsl"
order = 32
phi_order = 8
[metric]
"(0,0)" = "-((1 - M/(2*sqrt(y1^2+y2^2+y3^2)))/(1 + M/(2*sqrt(y1^2+y2^2+y3^2))))^2"
"(1,1)" = "(1 + M/(2*sqrt(y1^2+y2^2+y3^2)))^4"
"(2,2)" = "(1 + M/(2*sqrt(y1^2+y2^2+y3^2)))^4"
"(3,3)" = "(1 + M/(2*sqrt(y1^2+y2^2+y3^2)))^4"
[metric.params]
M = 1
"#,
    );
    let s = summary(&qlm(&["qle", "--config", &cfg]));
    assert!((f(&s["four_vector"]["e"]["limit"]) - 1.0).abs() < 1e-3);

    let out = qlm(&["adm", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slice data"));
}

#[test]
fn adm_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "scenario = \"schwarzschild\"\nmass = 1\norder = 32\nphi_order = 8\n",
    );
    let s = summary(&qlm(&["adm", "--config", &cfg]));
    assert!((f(&s["adm"]["E"]["limit"]) - 1.0).abs() < 1e-3);
    for k in 0..3 {
        assert!(f(&s["adm"]["P"][k]["limit"]).abs() < 1e-10);
    }

    let text = BOOSTED.replace("[[0, 0, 1]]", "[[0, 0, 0], [0, 0, 1]]");
    let cfg = write_config(dir.path(), "b.toml", &text);
    let out_dir = dir.path().join("adm");
    let s = summary(&qlm(&["adm", "--config", &cfg, "--out", out_dir.to_str().unwrap()]));
    assert!((f(&s["adm"]["E"]["limit"]) - 1.25).abs() < 1e-3);
    assert!((f(&s["adm"]["P"][2]["limit"]) - 0.75).abs() < 1e-3);
    assert_eq!(s["adm"]["future_timelike"], Value::Bool(true));
    let t2 = s["adm_prediction"].as_array().unwrap();
    assert_eq!(t2.len(), 2);
    assert!(t2.iter().all(|r| f(&r["residual"]) < 5e-3));
    let csv = std::fs::read_to_string(out_dir.join("adm.csv")).unwrap();
    assert!(csv.starts_with("r0,E,P1,P2,P3\n"));
    assert!(out_dir.join("adm_summary.json").exists());
}

#[test]
fn embed_dumps_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.toml",
        "scenario = \"schwarzschild\"\nradii = [10, 20, 40]\norder = 16\nphi_order = 4\n",
    );
    let out = qlm(&["embed", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r0,theta,u,v,H0"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3 * 16);
    for r in &rows {
        // unboosted: a round sphere of areal radius r(1 + M/2r)²
        let areal = r[0] * (1.0 + 0.5 / r[0]).powi(2);
        assert!((r[2] - areal * r[1].sin()).abs() < 1e-9 * areal);
        assert!((r[4] - 2.0 / areal).abs() < 1e-10);
    }
}
