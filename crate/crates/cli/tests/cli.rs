use std::process::{Command, Output};

fn vallab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vallab"))
        .args(args)
        .env_remove("VALLAB_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).to_string()
}

#[test]
fn series_unit_monomial() {
    let o = vallab(&["series", "t^(0/1)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1, v = 0");
}

#[test]
fn series_inverse_of_w() {
    let o = vallab(&["series", "inv(w)", "--p", "2", "--q", "3", "--depth", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t^(-2/3) + t^(-4/9) + "), "{}", stdout(&o));
    assert!(stdout(&o).ends_with("v = -2/3"));
}

#[test]
fn series_parse_error_reports_token() {
    let o = vallab(&["series", "w +"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("ParseError at token 3"), "{}", stderr(&o));
}

#[test]
fn series_json_carries_schema() {
    let o = vallab(&["--json", "series", "x"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "1");
    assert_eq!(v["valuation"], "1/3");
}

#[test]
fn stabilize_exit_codes() {
    let o = vallab(&["--json", "stabilize", "--f", "W+t^(2/3)", "--lmax", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["l0"].as_u64(), v["value"].as_str()), (Some(2), Some("8/9")));

    let o = vallab(&["stabilize", "--f", "W"]);
    assert_eq!(stdout(&o), "l0 = 1, e = 0, value = 2/3");

    let o = vallab(&["stabilize", "--f", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let o = vallab(&["stabilize", "--f", "W+t^(2/3)+t^(8/9)", "--lmax", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_64() {
    let o = vallab(&["experiment", "paper", "--p", "2", "--q", "2"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("ConfigError"));
    let o = vallab(&["series", "w", "--p", "4"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn config_file_is_overlaid_by_flags() {
    let dir = std::env::temp_dir().join(format!("vallab-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.json");
    std::fs::write(&path, r#"{"p":3,"q":2,"output":{"format":"json"}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vallab"))
        .args(["series", "w", "--depth", "2"])
        .env("VALLAB_CONFIG", &path)
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["series"], "t^(1/2) + t^(3/4) + O(t^(7/8))");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn as_and_defect_commands() {
    let o = vallab(&["--json", "as", "--b", "t^-2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"]["verdict"], "not-immediate");
    assert_eq!(v["verdict"]["witness"], "-1");

    let o = vallab(&["--json", "defect", "--kind", "tower-k"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["degree"].as_u64(), v["e"].as_u64(), v["d"].as_u64()), (Some(4), Some(2), Some(2)));

    let o = vallab(&["defect", "--kind", "radical", "--n", "1"]);
    assert!(stdout(&o).starts_with("degree = 1, e = 1, f = 1, d = 1"));
}

#[test]
fn experiment_is_deterministic_and_echoes_seed() {
    let a = vallab(&["experiment", "paper", "--seed", "7"]);
    let b = vallab(&["experiment", "paper", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["invariants_ok"], true);
    let c = vallab(&["experiment", "paper", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn output_path_receives_report() {
    let path = std::env::temp_dir().join(format!("vallab-out-{}.txt", std::process::id()));
    let o = vallab(&["series", "s", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t^(1/3) + "));
    std::fs::remove_file(&path).unwrap();
}
