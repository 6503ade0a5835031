use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    root().join("fixtures").join(name)
}

fn xvalue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xvalue"))
        .current_dir(root())
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes records `(state, human_action, condition)` with a constant feature.
fn write_log(path: &Path, rows: &[(&str, &str, &str)]) {
    let text: String = rows
        .iter()
        .enumerate()
        .map(|(i, (st, a, c))| {
            format!(
                "{{\"id\":\"r{i}\",\"state\":\"{st}\",\"human_action\":\"{a}\",\"condition\":\"{c}\",\"features\":{{\"x\":\"a\"}}}}\n"
            )
        })
        .collect();
    std::fs::write(path, text).unwrap();
}

#[test]
fn simulate_regenerates_shipped_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["medical-synthetic", "medical-embedded", "incomparable-signals", "private-info"] {
        let out = tmp.path().join(format!("{name}.jsonl"));
        let o = xvalue(&["simulate", "--spec", name, "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture(&format!("{name}.jsonl"))).unwrap());
    }
}

#[test]
fn values_match_fixture_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let oracle = json(&fixture("medical-synthetic.oracle.json"));
    let o = xvalue(&[
        "values",
        "--task",
        oracle["task"].as_str().unwrap(),
        "--dataset",
        "fixtures/medical-synthetic.jsonl",
        "--out",
        s(tmp.path()),
        "--n-resamples",
        "50",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = &json(&tmp.path().join("values.json"))["report"];
    let close = |a: &Value, b: &Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() <= 1e-12;
    let v = &oracle["values"];
    assert!(close(&report["delta_e"], &v["delta_e"]));
    assert!(close(&report["r_x"], &v["r_x"]));
    assert!(close(&report["complementary"]["delta_compl"], &v["delta_compl"]));
    assert!(close(&report["explanations"]["shap"]["delta_ind_e"], &v["delta_ind_e:shap"]));
    assert!(report["intervals"]["delta_e"]["low"].is_number());
}

#[test]
fn coarsen_reruns_are_byte_identical_and_manifest_hashes_match() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path| {
        let o = xvalue(&["coarsen", "--config", "fixtures/medical-embedded.config.json", "--out", s(dir)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a);
    run(&b);
    for f in ["coarsening.json", "coarsening_diagnostics.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let files = json(&a.join("manifest.json"))["files"].clone();
    for (name, hash) in files.as_object().unwrap() {
        let digest = hex::encode(Sha256::digest(std::fs::read(a.join(name)).unwrap()));
        assert_eq!(hash.as_str().unwrap(), digest, "{name}");
    }

    // Values picks up the coarsening from the same directory and records its hash.
    let o = xvalue(&[
        "values",
        "--config",
        "fixtures/medical-embedded.config.json",
        "--out",
        s(&a),
        "--no-bootstrap",
        "--robust",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let values = json(&a.join("values.json"));
    let coarse_hash = hex::encode(Sha256::digest(std::fs::read(a.join("coarsening.json")).unwrap()));
    assert_eq!(values["coarsening_sha256"].as_str().unwrap(), coarse_hash);
    assert!(a.join("robust.json").exists());
    let manifest = json(&a.join("manifest.json"))["files"].clone();
    for f in ["coarsening.json", "values.json", "robust.json", "values.csv"] {
        assert!(manifest.get(f).is_some(), "{f} missing from manifest");
    }
}

#[test]
fn infeasible_coarsening_exits_four_and_names_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&[
        "coarsen",
        "--task",
        "accuracy",
        "--dataset",
        "fixtures/adversarial-delta0.jsonl",
        "--delta",
        "0",
        "--k-z-grid",
        "1",
        "--k-x-grid",
        "2,10,50",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert!(err.contains("delta = 0"), "{err}");
    assert!(err.lines().any(|l| l.starts_with('{') && l.contains("\"infeasible\"")), "{err}");
    assert!(tmp.path().join("coarsening_diagnostics.csv").exists());
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&["values", "--task", "nonsense", "--dataset", "fixtures/medical-synthetic.jsonl"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = xvalue(&["values", "--task", "medical"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"unknown_key\": 1}").unwrap();
    let o = xvalue(&["values", "--config", s(&bad)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn data_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&["values", "--task", "medical", "--dataset", s(&tmp.path().join("absent.jsonl"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let broken = tmp.path().join("broken.jsonl");
    std::fs::write(&broken, "{\"id\": \"r0\", \"state\": \"0\"\n").unwrap();
    let o = xvalue(&["values", "--task", "medical", "--dataset", s(&broken)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn coarsening_from_other_dataset_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&["coarsen", "--config", "fixtures/medical-embedded.config.json", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = xvalue(&[
        "values",
        "--task",
        "medical:0.5",
        "--dataset",
        "fixtures/medical-synthetic.jsonl",
        "--out",
        s(tmp.path()),
        "--no-bootstrap",
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("different dataset"));
}

#[test]
fn missing_human_action_omits_complementary_block() {
    let tmp = tempfile::tempdir().unwrap();
    let stripped: String = std::fs::read_to_string(fixture("medical-synthetic.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("human_action");
            format!("{v}\n")
        })
        .collect();
    let data = tmp.path().join("no-human.jsonl");
    std::fs::write(&data, stripped).unwrap();
    let out = tmp.path().join("out");
    let o = xvalue(&[
        "values",
        "--task",
        "medical:0.5",
        "--dataset",
        s(&data),
        "--out",
        s(&out),
        "--no-bootstrap",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = &json(&out.join("values.json"))["report"];
    assert!(report["complementary"].is_null());
    assert!(report["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n.as_str().unwrap().contains("human_action")));
}

#[test]
fn behavioral_value_flips_sign_when_labels_swap() {
    let tmp = tempfile::tempdir().unwrap();
    // Treatment: 8 of 10 correct. Control: 5 of 10 correct.
    let mut rows = Vec::new();
    for i in 0..10 {
        rows.push(("1", if i < 8 { "1" } else { "0" }, "heatmap"));
        rows.push(("1", if i < 5 { "1" } else { "0" }, "without_explanation"));
    }
    let log = tmp.path().join("log.jsonl");
    write_log(&log, &rows);
    let run = |data: &Path, control: &str, out: &Path| {
        let o = xvalue(&[
            "behavioral",
            "--task",
            "accuracy",
            "--dataset",
            s(data),
            "--control",
            control,
            "--n-resamples",
            "200",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        json(&out.join("behavioral.json"))["values"][0].clone()
    };
    let forward = run(&log, "without_explanation", &tmp.path().join("f"));
    assert_eq!(forward["condition"], "heatmap");
    assert_eq!(forward["delta"].as_f64().unwrap(), 0.8 - 0.5);

    let swapped: Vec<_> = rows
        .iter()
        .map(|&(st, a, c)| (st, a, if c == "heatmap" { "without_explanation" } else { "heatmap" }))
        .collect();
    let log2 = tmp.path().join("swapped.jsonl");
    write_log(&log2, &swapped);
    let back = run(&log2, "without_explanation", &tmp.path().join("b"));
    assert_eq!(back["delta"].as_f64().unwrap(), -forward["delta"].as_f64().unwrap());
}

#[test]
fn behavioral_requires_conditions() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&["behavioral", "--task", "medical:0.5", "--dataset", "fixtures/medical-synthetic.jsonl"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("condition"));

    let log = tmp.path().join("single.jsonl");
    write_log(&log, &[("1", "1", "without_explanation"), ("0", "1", "without_explanation")]);
    let o = xvalue(&["behavioral", "--task", "accuracy", "--dataset", s(&log), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn report_requires_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvalue(&["report", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
