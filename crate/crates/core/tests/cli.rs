use std::process::{Command, Output};

fn vslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vslab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bound_prints_one_json_line() {
    let o = vslab(&["bound", "monotone_vc", "--param", "vc=1", "--param", "m=400", "--param", "delta=0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.34528).abs() < 1e-5);
}

#[test]
fn parameter_errors_exit_2() {
    assert_eq!(vslab(&["bound", "monotone_vc", "--param", "vc=1", "--param", "m=0", "--param", "delta=0.05"]).status.code(), Some(2));
    assert_eq!(vslab(&["bound", "closure", "--param", "dim=1", "--param", "m=10", "--param", "delta=0.1", "--param", "bogus=1"]).status.code(), Some(2));
    assert_eq!(vslab(&["measure", "vc", "--class", "nonsense(3)"]).status.code(), Some(2));
    assert_eq!(vslab(&["measure", "vc", "--class", "star(3)", "--target", "9"]).status.code(), Some(2));
}

#[test]
fn measures_report_exact_values() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&vslab(&["measure", "phic", "--class", "star(4)", "--c", "16"]))).unwrap();
    assert_eq!(v["value"], "15/4");
    let v: serde_json::Value = serde_json::from_str(&stdout(&vslab(&["measure", "theta", "--class", "star(4)", "--r0", "1/2"]))).unwrap();
    assert_eq!(v["theta"], "2");
    let v: serde_json::Value = serde_json::from_str(&stdout(&vslab(&["measure", "star", "--class", "thresholds(6)"]))).unwrap();
    assert_eq!(v["star"], 2);
}

#[test]
fn classes_show_round_trips() {
    let o = vslab(&["classes", "show", "intervals(3)"]);
    let text = stdout(&o);
    assert!(text.starts_with("vslab-class v1"));
    let c = vslab::concept::load_class(&text).unwrap();
    assert_eq!(c.len(), 7);
}

#[test]
fn failing_validation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // a bound of zero on a quantity that is positive for small m
    std::fs::write(
        &cfg,
        r#"{"class":"star(4)","m_grid":[2],"delta":0.1,"trials":200,"seed":1,"quantities":["dis_mass"],
            "bounds":[{"name":"pdis_star","quantity":"dis_mass","kind":"quantile","params":{"star":"0","delta":"0.999999","m":"1000000000"}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let o = vslab(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# vslab validate"));
    assert!(out.with_extension("json").exists());
}

#[test]
fn cal_curve_is_seeded() {
    let a = stdout(&vslab(&["simulate", "cal", "--class", "thresholds(16)", "--budgets", "2,4,8", "--trials", "40", "--seed", "7"]));
    let b = stdout(&vslab(&["simulate", "cal", "--class", "thresholds(16)", "--budgets", "2,4,8", "--trials", "40", "--seed", "7", "--workers", "3"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
}
