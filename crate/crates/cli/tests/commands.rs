use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::NamedTempFile;

const WORKED: &str = r#"{"char": 2, "vars": ["x","y"],
    "generators": [{"poly": "x^2+y^3", "level": "2"}], "truncation": 12, "horizon": 2,
    "points": ["0,0", "1,0", "0,1", "1,1"],
    "groups": [{"limit": "0,0", "members": ["1,0", "0,1", "1,1"]}]}"#;

fn instance(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idealistic"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn on_worked(args: &[&str]) -> Output {
    let file = instance(WORKED);
    let mut all = args.to_vec();
    let path = file.path().to_str().unwrap().to_string();
    all.extend(["--instance", &path]);
    run(&all)
}

#[test]
fn sigma_at_origin_and_off_support() {
    let out = on_worked(&["sigma", "--point", "0,0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["sigma"], serde_json::json!([2, 1, 1]));
    assert_eq!(v["E"], 2);
    assert_eq!(v["T"], 12);
    let v = json(&on_worked(&["sigma", "--point", "1,0"]));
    assert_eq!(v["sigma"], serde_json::json!([0, 0, 0]));
}

#[test]
fn mu_and_ordh() {
    let v = json(&on_worked(&["mu", "--point", "0,0"]));
    assert_eq!(v["mu"], "2");
    let v = json(&on_worked(&["ordh", "--poly", "x^4"]));
    assert_eq!(v["ord_h"], "6");
    assert_eq!(v["ord_h_membership"], "6");
}

#[test]
fn saturate_lists_the_derivative() {
    let v = json(&on_worked(&["saturate"]));
    let gens = v["generators"].as_array().unwrap();
    assert!(gens.iter().any(|g| g["poly"] == "y^2" && g["level"] == "1"));
}

#[test]
fn expand_dumps_coefficients() {
    let v = json(&on_worked(&["expand", "--poly", "x^4"]));
    let coeffs = v["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 2);
    assert_eq!(coeffs[1]["B"], serde_json::json!([2]));
    assert_eq!(coeffs[1]["a_B"], "1");
}

#[test]
fn verify_suites_pass_and_are_deterministic() {
    let a = on_worked(&["verify", "uniq", "--trials", "30", "--seed", "7"]);
    assert!(a.status.success());
    let v = json(&a);
    assert_eq!(v["reports"][0]["passed"], 30);
    let b = on_worked(&["verify", "uniq", "--trials", "30", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let all = on_worked(&["verify", "all", "--trials", "10"]);
    assert!(
        all.status.success(),
        "{}",
        String::from_utf8_lossy(&all.stdout)
    );
}

#[test]
fn trivial_filtration_passes_vacuously() {
    let file = instance(r#"{"char": 3, "vars": ["x","y"], "generators": [], "truncation": 6}"#);
    let out = run(&[
        "verify",
        "all",
        "--trials",
        "5",
        "--instance",
        file.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn stratify_and_nsp() {
    let out = on_worked(&["stratify"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["semicontinuity"]["pass"], true);
    let out = on_worked(&["nsp", "--point", "0,0"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["verdict"], "not-applicable");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["sigma"]).status.code(), Some(2));
    assert_eq!(on_worked(&["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(
        on_worked(&["sigma", "--point", "0,0,0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        on_worked(&["expand", "--poly", "x^^2"]).status.code(),
        Some(2)
    );
    let bad =
        instance(r#"{"char": 2, "vars": ["x"], "generators": [], "truncation": 4, "extra": 1}"#);
    let out = run(&["sigma", "--instance", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extra"));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn random_instances_are_reproducible() {
    let a = run(&["random-instance", "--seed", "11", "--d", "3"]);
    let b = run(&["random-instance", "--seed", "11", "--d", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["d_saturated"], true);
    assert_eq!(v["vars"].as_array().unwrap().len(), 3);
    let trivial = json(&run(&["random-instance", "--max-level", "0"]));
    assert!(trivial["generators"].as_array().unwrap().is_empty());
}

#[test]
fn text_format_is_line_oriented() {
    let out = on_worked(&["mu", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "mu: 2"), "{text}");
}
