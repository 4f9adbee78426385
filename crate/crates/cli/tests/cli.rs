use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn morsecount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morsecount")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str::<Value>(line).expect("error is JSON")["error"].clone()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ints(v: &Value) -> Vec<i64> {
    v.as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect()
}

#[test]
fn two_even_points_give_constant_minus_one() {
    let out = morsecount(&["indices", "--parities", "0,0", "--N", "4"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(ints(&r["mu"]), vec![-1, -1, -1, -1]);
    assert_eq!(r["routes"]["direct_equals_recurrence"], true);
    assert_eq!(r["routes"]["closed_form_family"], "even_tail");
    assert_eq!(r["morse_equalities"]["direct"], true);
}

#[test]
fn indices_table_is_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = morsecount(&["indices", "--parities", "0,1,0", "--N", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("indices.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,mu,mu_geq_1,mu_geq_2,mu_geq_3,mu_geq_4,mu_geq_at_1,mu_geq_at_2,mu_geq_at_3"
    );
    assert_eq!(lines.count(), 3);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert!(meta["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "metadata.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let args = ["bounds", "--preset", "index-one-ell-2", "--N", "8", "--eta", "0.05", "--out", path];
    let first = morsecount(&args);
    let files = read_all(dir.path());
    let second = morsecount(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(files, read_all(dir.path()));
    assert_eq!(files.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), vec!["bounds.csv", "report.json"]);
}

#[test]
fn index_one_preset_bounds() {
    let out = morsecount(&["bounds", "--preset", "index-one-ell-2", "--N", "8"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["index_k"], 1);
    let lower: Vec<i64> = r["rows"].as_array().unwrap().iter().map(|x| x["lower_bound"].as_i64().unwrap()).collect();
    assert_eq!(lower, vec![0, 2, 0, 3, 0, 4, 0, 5]);
    assert_eq!(r["total_bound"], 14);
    assert_eq!(r["theorem_hypotheses_hold"], true);
}

#[test]
fn low_dimension_bounds_carry_a_banner() {
    let out = morsecount(&["bounds", "--parities", "0,0,0", "--dim", "3", "--N", "2"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the hypotheses"));
    assert_eq!(json(&out)["result"]["theorem_hypotheses_hold"], false);
}

#[test]
fn eta_margin_is_enforced() {
    let out = morsecount(&["bounds", "--parities", "0,0", "--N", "3", "--eta", "0.1428572"]);
    assert_eq!(code(&out), 3);
    assert_eq!(error(&out)["kind"], "invariant");
    let eta = (1.0f64 / 22.0).to_string();
    let out = morsecount(&["bounds", "--parities", "0,0", "--N", "10", "--eta", &eta]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["result"]["threshold"]["epsilon_max"].as_f64().unwrap() > 0.0);
    let out = morsecount(&["bounds", "--parities", "0,0", "--N", "10", "--eta", "-0.1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn exhaustive_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = morsecount(&["verify", "--exhaustive", "--max-m", "8", "--max-N", "12", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let s = &json(&out)["result"]["summary"];
    assert_eq!(s["configurations"], 255);
    assert_eq!(s["failed"], 0);
    assert_eq!(s["nonvanishing"], s["index_not_one"]);
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert_eq!(csv.lines().count(), 256);
}

#[test]
fn parity_config_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"n": 8, "parities": [0, 1, 1], "N": 5}"#).unwrap();
    let out = morsecount(&["indices", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["config"]["input"]["n"], 8);
    assert_eq!(ints(&v["result"]["mu"]), vec![2, -3, 4, -5, 6]);
    assert_eq!(v["result"]["routes"]["closed_form_family"], "odd_tail");
}

#[test]
fn curvature_input_goes_through_the_blow_up_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    fs::write(
        &path,
        r#"{"n": 3, "epsilon": 0.1, "terms": [
            {"center": [1, 0, 0, 0], "weight": 1.0, "width": 0.4},
            {"center": [-0.6, 0.8, 0, 0], "weight": 0.7, "width": 0.4}]}"#,
    )
    .unwrap();
    let out = morsecount(&["indices", "--config", path.to_str().unwrap(), "--N", "3", "--seeds", "64"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["blow_up"]["points"].as_array().unwrap().len(), 2);
    assert_eq!(ints(&r["mu"]), vec![-1, -1, -1]);
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32, &str); 6] = [
        (&["indices", "--bogus"], 2, "parse"),
        (&["indices", "--parities", "0,x"], 2, "parse"),
        (&["indices", "--preset", "no-such-preset"], 2, "parse"),
        (&["indices", "--parities", "1,0"], 3, "invariant"),
        (&["indices", "--parities", "0,2"], 3, "invariant"),
        (&["indices", "--config", "/nonexistent/cfg.json"], 5, "io"),
    ];
    for (args, expected, kind) in cases {
        let out = morsecount(args);
        assert_eq!(code(&out), expected, "{args:?}");
        assert_eq!(error(&out)["kind"], kind, "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"parities\": [0, 1").unwrap();
    let out = morsecount(&["indices", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_morsecount"))
        .args(["indices", "--parities", "0,1", "--N", "2"])
        .env("MORSECOUNT_THREADS", "two")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_morsecount"))
        .args(["indices", "--parities", "0,1", "--N", "2"])
        .env("MORSECOUNT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn single_bubble_quadrature() {
    let out = morsecount(&["quadrature", "--dim", "4", "--lambda", "20"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    let sn = r["sobolev_constant"].as_f64().unwrap();
    assert!(r["first_bubble_mass_relative_error"].as_f64().unwrap() < 1e-10);
    let j = r["j"]["value"].as_f64().unwrap();
    assert!((j - sn.sqrt()).abs() < 1e-8 * j);
    assert!((r["i_value"].as_f64().unwrap() - sn / 4.0).abs() < 1e-7 * sn);
}

#[test]
fn presets_are_listed() {
    let out = morsecount(&["presets"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> =
        json(&out)["result"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap().to_string()).collect();
    for want in ["m2-even", "index-one-ell-2", "three-max-one-saddle"] {
        assert!(names.iter().any(|n| n == want), "{want}");
    }
}

#[test]
fn flow_reaches_the_global_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let out = morsecount(&["flow", "--preset", "three-max-one-saddle", "--point", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let f = &json(&out)["result"]["flows"][0];
    assert_eq!(f["status"], "converged");
    assert!(f["distance_to_target"].as_f64().unwrap() < 0.05);
    assert_eq!(f["index_matches"], true);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("point,step,j,gradient_norm,a1_0,a1_1,a1_2,a1_3,lambda1,alpha1\n"));
}

#[test]
fn flow_needs_a_curvature_function() {
    let out = morsecount(&["flow", "--preset", "m2-even"]);
    assert_eq!(code(&out), 2);
    let out = morsecount(&["flow", "--preset", "three-max-one-saddle", "--max-iterations", "1", "--point", "0"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["result"]["all_converged"], false);
}
