use std::process::{Command, Output};

fn latsurg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latsurg"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fidelity(doc: &serde_json::Value, name: &str) -> serde_json::Value {
    doc["result"]["fidelities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == name)
        .cloned()
        .unwrap()
}

#[test]
fn bell_rough_forced_is_exact() {
    let out = latsurg(&[
        "bell",
        "--boundary",
        "rough",
        "--input",
        "00",
        "--force",
        "000",
        "--shots",
        "100",
    ]);
    let doc = json(&out);
    assert_eq!(fidelity(&doc, "F_phi+")["raw"], 1.0);
    assert_eq!(doc["config"]["protocol"], "bell_rough");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.lines().any(|l| l.starts_with("survival merge")),
        "{stderr}"
    );
}

#[test]
fn bell_smooth_and_teleport() {
    let doc = json(&latsurg(&[
        "bell",
        "--boundary",
        "smooth",
        "--input",
        "++",
        "--force",
        "1x",
        "--shots",
        "50",
    ]));
    assert_eq!(fidelity(&doc, "F_psi+")["raw"], 1.0);
    let doc = json(&latsurg(&["teleport", "--input", "+i", "--shots", "50"]));
    assert_eq!(fidelity(&doc, "F_target")["raw"], 1.0);
    let doc = json(&latsurg(&[
        "run",
        "--protocol",
        "cnot",
        "--input",
        "+0",
        "--shots",
        "50",
    ]));
    assert_eq!(fidelity(&doc, "F_target")["raw"], 1.0);
}

#[test]
fn code_info() {
    for (code, x, z) in [("rep3", 3, 1), ("sc3x3", 3, 3), ("sc2x2A", 2, 2)] {
        let doc = json(&latsurg(&["code-info", "--code", code]));
        assert_eq!(doc["distance"]["x"], x, "{code}");
        assert_eq!(doc["distance"]["z"], z, "{code}");
    }
    let doc = json(&latsurg(&["code-info", "--code", "sc2x2A"]));
    assert_eq!(doc["code"]["logical_y"], "+Y1X2Z3");
}

#[test]
fn verify_suites() {
    let out = latsurg(&["verify", "--suite", "oracle", "--circuits", "50"]);
    assert!(out.status.success());
    let out = latsurg(&["verify", "--suite", "branches"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn exit_codes() {
    let out = latsurg(&["bell", "--boundary", "rough", "--input", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = latsurg(&["teleport", "--input", "0", "--p2", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = latsurg(&[
        "teleport",
        "--input",
        "0",
        "--config",
        "/definitely/missing.json",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/missing.json"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "bell",
        "--boundary",
        "smooth",
        "--input",
        "++",
        "--shots",
        "300",
        "--seed",
        "4",
        "--p2",
        "0.02",
    ];
    let a = latsurg(&args);
    let b = latsurg(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"protocol":"teleport","input_labels":["1"],"shots":40,"seed":8,"noise":{"p2":0.01}}"#,
    )
    .unwrap();
    let out_json = dir.path().join("out.json");
    let out_csv = dir.path().join("out.csv");
    let records = dir.path().join("shots.jsonl");
    let out = latsurg(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--shots",
        "25",
        "--out",
        out_json.to_str().unwrap(),
        "--csv",
        out_csv.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    // Flags override the file.
    assert_eq!(doc["config"]["shots"], 25);
    assert_eq!(doc["config"]["seed"], 8);
    assert_eq!(doc["config"]["noise"]["p2"], 0.01);
    assert!(std::fs::read_to_string(&out_csv)
        .unwrap()
        .starts_with("name,value,se"));
    let n_settings = doc["result"]["settings"].as_array().unwrap().len();
    assert_eq!(
        std::fs::read_to_string(&records).unwrap().lines().count(),
        25 * n_settings
    );
}
