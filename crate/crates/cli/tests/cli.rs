use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_absnormal"));
    c.env_remove("ABSNORMAL_PRECISION_CAP");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn toy_inputs(dir: &Path) -> (String, String) {
    let beta = dir.join("beta.csv");
    fs::write(&beta, "r,s,beta\n2,5,0.4\n3,5,0.35\n4,6,0.1\n").unwrap();
    let plan = dir.join("plan.json");
    ok(&["plan", "--horizon", "8", "--toy", beta.to_str().unwrap(), "--out", plan.to_str().unwrap()]);
    let toy = dir.join("toy.json");
    fs::write(&toy, r#"{"symbols": [4, 10, 18, 28, 40, 54, 70]}"#).unwrap();
    (plan.to_str().unwrap().to_string(), format!("toy:{}", toy.to_str().unwrap()))
}

#[test]
fn constants_json() {
    let out = ok(&["constants", "--r", "2", "--s", "3", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["a1"], 4);
    assert_eq!(v["a2"], "81");
}

#[test]
fn constants_text_lists_formulas() {
    let out = ok(&["constants", "--r", "2", "--s", "3"]);
    assert!(out.contains("a20"));
    assert!(out.contains("min(a14, a22)"));
}

#[test]
fn disc_exact_on_two_points() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("pts.csv");
    fs::write(&p, "x\n1/4\n3/4\n").unwrap();
    let out = ok(&["disc", "exact", "--points", p.to_str().unwrap()]);
    assert!(out.contains("extreme 1/2"), "{out}");
    let out = ok(&["disc", "exact", "--points", p.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["extreme"], "1/2");
    assert_eq!(v["star"], "1/4");
}

#[test]
fn zero_steps_give_zero() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.json");
    ok(&["schmidt", "run", "--steps", "0", "--state", s.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&s).unwrap()).unwrap();
    assert_eq!(v["xi"], "0/1");
    assert_eq!(v["m"], 0);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["constants", "--r", "2", "--s", "8"]).status.code(), Some(2));
    assert_eq!(run(&["weyl", "--x", "1/0", "--base", "2", "--t", "1", "--N", "4"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.json");
    // the first true-schedule step needs 38-bit candidate indices
    let o = run(&["schmidt", "run", "--steps", "1", "--state", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("toy or power schedule"));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["schmidt", "digits", "--state", missing.to_str().unwrap(), "--base", "2"]).status.code(), Some(2));
}

#[test]
fn resume_and_threads_do_not_change_the_state() {
    let dir = TempDir::new().unwrap();
    let (plan, sched) = toy_inputs(dir.path());
    let full = dir.path().join("full.json");
    let split = dir.path().join("split.json");
    let threaded = dir.path().join("threaded.json");
    let base = ["schmidt", "run", "--schedule", &sched, "--plan", &plan];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };
    let args = with(&["--steps", "6", "--state", full.to_str().unwrap(), "--verify"]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let args = with(&["--steps", "4", "--state", split.to_str().unwrap()]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    ok(&["schmidt", "run", "--resume", "--steps", "2", "--state", split.to_str().unwrap()]);
    let mut args = vec!["--threads".to_string(), "1".to_string()];
    args.extend(with(&["--steps", "6", "--state", threaded.to_str().unwrap()]));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let a = fs::read(&full).unwrap();
    assert_eq!(a, fs::read(&split).unwrap());
    assert_eq!(a, fs::read(&threaded).unwrap());

    let digits = ok(&["schmidt", "digits", "--state", full.to_str().unwrap(), "--base", "10", "--max", "5"]);
    assert_eq!(digits.trim().len(), 5);
}

#[test]
fn precision_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.json");
    let o = bin()
        .env("ABSNORMAL_PRECISION_CAP", "5000")
        .args(["schmidt", "run", "--schedule", "power:1/2", "--steps", "2", "--state", s.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&s).unwrap()).unwrap();
    assert_eq!(v["schedule"]["precision_cap"], 5000);
}

#[test]
fn sierpinski_toy_and_report() {
    let dir = TempDir::new().unwrap();
    let caps = dir.path().join("caps.json");
    fs::write(&caps, r#"{"q_max": 3, "m_max": 3, "n_lower": 6, "n_max": 9, "k": 3}"#).unwrap();
    let st = dir.path().join("sp.json");
    let digits = ok(&[
        "sierpinski",
        "run",
        "--digits",
        "5",
        "--toy",
        caps.to_str().unwrap(),
        "--state",
        st.to_str().unwrap(),
        "--verify",
    ]);
    assert_eq!(digits.trim().len(), 5);
    let out = ok(&["report", "--state", st.to_str().unwrap(), "--N", "16"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["certified"], false);
    assert_eq!(v["tables"][0]["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["tables"][0]["rows"][0][5]["kind"], "flag");
    // reports depend on the state file alone
    assert_eq!(out, ok(&["report", "--state", st.to_str().unwrap(), "--N", "16"]));
}

#[test]
fn sierpinski_true_parameters_hit_a_cap() {
    let dir = TempDir::new().unwrap();
    let st = dir.path().join("sp.json");
    let o = run(&["sierpinski", "run", "--digits", "1", "--mode", "bound", "--state", st.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn orbit_report_formats() {
    let csv = ok(&["disc", "orbit", "--x", "1/7", "--base", "10", "--N", "8"]);
    assert!(csv.starts_with("N[exact],extreme[exact]"));
    assert_eq!(csv.lines().count(), 5);
    let json = ok(&["disc", "orbit", "--x", "1/7", "--base", "10", "--N", "8", "--report", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["tables"][0]["rows"][3][0]["value"], "8");
    let et = ok(&["et", "--x", "1/3", "--base", "2", "--N", "50"]);
    let v: serde_json::Value = serde_json::from_str(&et).unwrap();
    assert_eq!(v["dominates"], true);
    assert_eq!(v["H"], 3);
}
