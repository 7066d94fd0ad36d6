use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn trace_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trace-lab"))
        .args(args)
        .env_remove("TRACE_LAB_THREADS")
        .output()
        .expect("spawn trace-lab")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn kloosterman_verification_passes() {
    let out = trace_lab(&["verify-sec16", "--case", "kloosterman", "--p", "17", "--M", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json_stdout(&out);
    assert_eq!(doc["schema"], "trace-lab/1");
    assert_eq!(doc["reports"][0]["status"], "pass");
    assert_eq!(doc["failed"], 0);
    assert!(stderr(&out).contains("kloosterman p=17 M=3: pass"));
}

#[test]
fn failing_verification_exits_one() {
    let out = trace_lab(&["verify-sec16", "--case", "quadratic", "--p", "11", "--M", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_stdout(&out)["reports"][0]["status"], "fail");
}

#[test]
fn legendre_spectrum_mod_three() {
    let out = trace_lab(&["corr", "spectrum", "--p", "3", "--weight", "legendre"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_stdout(&out);
    assert_eq!(doc["entries"].as_array().unwrap().len(), 24);
    assert_eq!(doc["group_order"], 24);
}

#[test]
fn empty_prime_list_is_a_usage_error() {
    let out = trace_lab(&["exponent-scan", "--primes", "", "--weight", "kloosterman"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--primes"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_fields_are_named() {
    let out = trace_lab(&["weight", "eval", "--p", "15", "--weight", "legendre"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`p`"), "{}", stderr(&out));

    let out = trace_lab(&["orbit", "--p", "11", "--tau", "0,-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`tau`"), "{}", stderr(&out));

    let out = trace_lab(&["goodness", "--p", "11", "--weight", "legendre", "--M", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`M`"), "{}", stderr(&out));

    let out = trace_lab(&["corr", "one", "--p", "7", "--weight", "legendre", "--gamma", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`gamma`"), "{}", stderr(&out));

    let out = trace_lab(&["weight", "eval", "--p", "7", "--weight", "dirac:v=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--weight"), "{}", stderr(&out));
}

#[test]
fn zero_threads_from_environment_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_trace-lab"))
        .args(["weight", "eval", "--p", "7", "--weight", "legendre"])
        .env("TRACE_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`threads`"));
}

fn run_to(dir: &Path, name: &str, threads: &str, args: &[&str]) -> (Vec<u8>, Value) {
    let path = dir.join(format!("{name}.json"));
    let mut full = vec!["--threads", threads, "--out", path.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = trace_lab(&full);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let manifest = std::fs::read(dir.join(format!("{name}.manifest.json"))).unwrap();
    (std::fs::read(&path).unwrap(), serde_json::from_slice(&manifest).unwrap())
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["resonance-check", "--p", "13,29", "--count", "25", "--seed", "7"],
        &["orbit", "--p", "211", "--weight", "legendre", "--tau", "0.1,1.3"],
        &["exponent-scan", "--primes", "101..400", "--count", "6", "--weight", "kloosterman"],
        &["corr", "spectrum", "--p", "13", "--weight", "hyper-kloosterman:m=3", "--M", "2"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let (reference, manifest) = run_to(dir.path(), &format!("c{i}-t1"), "1", args);
        assert_eq!(manifest["threads"], 1);
        assert_eq!(manifest["outcome"], "pass");
        for t in ["4", "8"] {
            let (bytes, manifest) = run_to(dir.path(), &format!("c{i}-t{t}"), t, args);
            assert_eq!(manifest["threads"].to_string(), t);
            assert!(bytes == reference, "output of {args:?} differs at {t} threads");
        }
    }
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["twisted-sum", "--p", "101", "--weight", "kloosterman", "--P", "0.5"];
    let (first, manifest) = run_to(dir.path(), "first", "2", &args);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);

    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, serde_json::to_vec(&manifest["config"]).unwrap()).unwrap();
    let second = dir.path().join("second.json");
    let out = trace_lab(&["--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(std::fs::read(&second).unwrap(), first);

    let dumped = trace_lab(&["--dump-config", "dft", "--p", "7", "--weight", "additive:a=2"]);
    let dumped = json_stdout(&dumped);
    assert_eq!(dumped["command"]["name"], "dft");
    assert_eq!(dumped["command"]["weight"]["a"], 2);

    std::fs::write(&cfg, r#"{"command":{"name":"dft","p":7}}"#).unwrap();
    let out = trace_lab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("weight"), "{}", stderr(&out));
}

#[test]
fn csv_and_svg_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("orbit.svg");
    let out = trace_lab(&["--format", "csv", "orbit", "--p", "23", "--svg", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,re,im"));
    assert_eq!(csv.lines().count(), 1 + 24);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let out = trace_lab(&["--format", "csv", "weight", "eval", "--p", "5", "--weight", "legendre"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 6);

    let out = trace_lab(&["--format", "csv", "goodness", "--p", "5", "--weight", "legendre", "--M", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`format`"));
}

#[test]
fn dft_involution() {
    let out = trace_lab(&["dft", "--p", "31", "--weight", "kloosterman:a=3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_stdout(&out);
    assert!(doc["involution_error"].as_f64().unwrap() < 1e-12);
    assert!(doc["unitarity_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(doc["values"].as_array().unwrap().len(), 31);
}
