use std::path::Path;
use std::process::Command;

use counterpoint_core::world::build_world;
use counterpoint_core::{Dichotomy, DualInterval, Modulus};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_in(cache: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_counterpoint"))
        .args(args)
        .env("COUNTERPOINT_CACHE_DIR", cache)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), args)
}

fn json(r: &Run) -> Value {
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn fux_table_rows() {
    let r = run(&["worlds", "table", "--dichotomy", "fux"]);
    assert_eq!(r.code, 0);
    for row in ["0   6720", "1   4992", "2   5568", "3   1440", "4   1152", "5    864"] {
        assert!(r.stdout.contains(row), "{row}\n{}", r.stdout);
    }
    assert!(r.stdout.contains("mean 1.4167  sd 1.3651"));
    let csv = run(&["worlds", "table", "-d", "fux", "--output", "csv"]);
    assert_eq!(
        csv.stdout,
        "symmetries,steps\n0,6720\n1,4992\n2,5568\n3,1440\n4,1152\n5,864\n"
    );
}

#[test]
fn mystic_table_gate() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), &["worlds", "table", "--dichotomy", "mystic", "--output", "json"]);
    assert_eq!(r.code, 4);
    assert!(r.stderr.contains("--allow-gate-mismatch"));

    let r = run_in(
        dir.path(),
        &["--allow-gate-mismatch", "worlds", "table", "-d", "mystic", "--output", "json"],
    );
    let v = json(&r);
    assert_eq!(v["world"]["gate"]["status"], "mismatch");
    let nonzero: Vec<&str> = v["histogram"]
        .as_object()
        .unwrap()
        .iter()
        .filter(|(_, f)| f.as_u64() != Some(0))
        .map(|(c, _)| c.as_str())
        .collect();
    assert_eq!(nonzero, ["0", "1", "2", "4"]);
    assert!(v["notes"][0].as_str().unwrap().contains("1.9026"));
}

#[test]
fn weak_dichotomy_is_a_model_error() {
    let r = run(&["worlds", "table", "--dichotomy", "0,2,4,6,8,10"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("not strong"));
}

#[test]
fn bad_dichotomy_is_an_input_error() {
    assert_eq!(run(&["worlds", "table", "-d", "0,1,2"]).code, 2);
    assert_eq!(run(&["worlds", "table", "-d", "0,1,2,3,4,x"]).code, 2);
}

#[test]
fn worked_steps() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), &["step", "-d", "fux", "--from", "0+e3", "--to", "2+e4"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "2\n"));
    let r = run_in(dir.path(), &["step", "-d", "fux", "--from", "0+e7", "--to", "2+e7"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "0\n"));
    let r = run_in(dir.path(), &["step", "-d", "fux", "--from", "0+e", "--to", "2+e7"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("cannot parse"));
}

#[test]
fn step_explain_lists_symmetries() {
    let r = run(&["step", "-d", "fux", "--from", "0+e3", "--to", "2+e4", "--explain", "--output", "json"]);
    let v = json(&r);
    assert_eq!(v["count"], 2);
    assert!(!v["symmetries"].as_array().unwrap().is_empty());
}

#[test]
fn self_comparison() {
    let v = json(&run(&["compare", "fux", "fux", "--output", "json"]));
    assert_eq!(v["p_a_exact"], "73/108");
    assert_eq!(v["p_ab_exact"], v["p_a_exact"]);
    // p(1 - p) = 73/108 * 35/108
    assert_eq!(v["gap_exact"], "2555/11664");
    let text = run(&["compare", "fux", "fux"]);
    assert!(text.stdout.contains("gap  2555/11664 (0.2191)"));
}

#[test]
fn mixed_moduli_comparison_fails() {
    let r = run(&["compare", "fux", "0,1,3,4@8"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("modulus mismatch"));
}

#[test]
fn noll_reports() {
    let v = json(&run(&["noll", "0,4,7", "--output", "json"]));
    assert_eq!(v["strong_verdict"], true);
    assert_eq!(v["endomorphisms"].as_array().unwrap().len(), 8);
    assert_eq!(v["linear_parts"], serde_json::json!([0, 1, 3, 4, 8, 9]));

    let v = json(&run(&["noll", "--scan", "wt-triads", "--output", "json"]));
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 20);
    assert!(reports.iter().all(|r| r["strong_verdict"] == false));

    let v = json(&run(&["noll", "0", "--output", "json"]));
    let maps = v["endomorphisms"].as_array().unwrap();
    assert_eq!(maps.len(), 12);
    assert!(maps.iter().all(|m| m.as_str().unwrap().starts_with("e^0.")));
    assert_eq!(v["strong_verdict"], false);

    assert_eq!(run(&["noll"]).code, 2);
}

#[test]
fn scale_reports() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), &["scale-report", "-d", "fux", "--scale", "", "--mode", "both-voices", "--output", "json"]);
    assert_eq!(json(&r)[0]["forbidden_count"], 0);

    let full = "0,1,2,3,4,5,6,7,8,9,10,11";
    let r = run_in(dir.path(), &["scale-report", "-d", "fux", "--scale", full, "--mode", "cantus-only", "--output", "json"]);
    let v = json(&r);
    let w = build_world(&Dichotomy::fux()).unwrap();
    let d = Dichotomy::fux();
    let zero = w
        .steps()
        .filter(|(a, b, c)| a.is_consonant(&d) && b.is_consonant(&d) && *c == 0)
        .count();
    assert_eq!(v[0]["forbidden_count"], zero as u64);
}

#[test]
fn atlas_and_classification() {
    let v = json(&run(&["atlas", "--output", "json"]));
    let classes = v.as_array().unwrap();
    assert_eq!(classes.len(), 6);
    assert_eq!(classes.iter().map(|c| c["orbit_size"].as_u64().unwrap()).sum::<u64>(), 288);
    let all = json(&run(&["atlas", "--all", "--output", "json"]));
    assert_eq!(
        all.as_array().unwrap().iter().map(|c| c["orbit_size"].as_u64().unwrap()).sum::<u64>(),
        924
    );
    let v = json(&run(&["classify", "mystic", "--output", "json"]));
    assert_eq!(v["class"]["alias"], "78 (mystic)");
    assert_eq!(v["strength"]["polarity"], "e^9.11");
    assert_eq!(v["mystic_parity"], "even");
}

#[test]
fn chord_report() {
    let v = json(&run(&["chord", "mystic", "--output", "json"]));
    assert_eq!(v["whole_tone"]["even"], 5);
    assert_eq!(v["whole_tone"]["odd"], 1);
    assert_eq!(v["covers"]["augmented"], serde_json::json!([[0, 4, 8]]));
}

#[test]
fn walks_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["walk", "-d", "fux", "--start", "0+e7", "--length", "8", "--seed", "11", "--output", "json"];
    let a = run_in(dir.path(), &args);
    let b = run_in(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["path"].as_array().unwrap().len(), 9);
}

#[test]
fn analyze_thirty_one_drone_events() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("measure,beat,pitch\n");
    for i in 0..31 {
        text.push_str(&format!("{},1,{}\n", 13 + i, 64 + (i * 5) % 12));
    }
    let file = write(dir.path(), "drone.csv", &text);
    let r = run_in(dir.path(), &["analyze", &file, "--cantus", "E", "--no-dedup", "--output", "json"]);
    let v = json(&r);
    assert_eq!(v["transitions"], 30);
    assert_eq!(v["chi_square"]["df"], 5);
    assert_eq!(v["config"]["policy"]["fixed"], 4);
}

#[test]
fn analyze_worked_step() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "two.csv",
        "measure,beat,cantus,discant\n1,1,60,63\n1,2,62,66\n",
    );
    let v = json(&run_in(dir.path(), &["analyze", &file, "--output", "json"]));
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0]["step"]["from"], "0+e3");
    assert_eq!(steps[0]["step"]["to"], "2+e4");
    assert_eq!(steps[0]["count"], 2);
}

#[test]
fn analyze_exact_fit() {
    // 216 steps in the proportions 70:52:58:15:12:9 of the Fux distribution
    let w = build_world(&Dichotomy::fux()).unwrap();
    let mut lines = String::new();
    for (count, times) in [(0u8, 70), (1, 52), (2, 58), (3, 15), (4, 12), (5, 9)] {
        let (xi, eta, _) = w.steps().find(|s| s.2 == count).unwrap();
        for _ in 0..times {
            lines.push_str(&format!("{xi}>{eta}\n"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "steps.txt", &lines);
    let v = json(&run_in(dir.path(), &["analyze", &file, "--no-dedup", "--output", "json"]));
    assert_eq!(v["transitions"], 216);
    assert_eq!(v["chi_square"]["statistic"], 0.0);
    assert_eq!(v["chi_square"]["p_value"], 1.0);
    assert!(v["effect_size"]["d"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn analyze_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "bad.csv", "measure,beat,pitch\n1,1,200\n");
    let r = run_in(dir.path(), &["analyze", &file, "--cantus", "4"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"));
    let r = run_in(dir.path(), &["analyze", "/nonexistent/file.csv"]);
    assert_eq!(r.code, 2);
}

#[test]
fn json_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "p.csv",
        "measure,beat,pitch\n1,1,64\n2,1,67\n3,1,71\n4,1,76\n5,1,72\n",
    );
    let args = ["analyze", file.as_str(), "--cantus", "4", "--output", "json"];
    let a = run_in(dir.path(), &args);
    let b = run(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.contains("\"tool_version\""));
}

#[test]
fn cache_is_written_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["worlds", "table", "-d", "fux"]).code, 0);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let export = run_in(dir.path(), &["worlds", "export", "-d", "fux"]);
    assert_eq!(export.stdout.lines().count(), 20737);
    assert!(export.stdout.contains("\n0+e3,2+e4,2\n"));
    let first = DualInterval::new(0, 0, Modulus::TWELVE);
    assert!(export.stdout.lines().nth(1).unwrap().starts_with(&format!("{first},{first},")));
}

#[test]
fn unknown_model_is_rejected() {
    assert_eq!(run(&["--model", "z", "atlas"]).code, 2);
}
