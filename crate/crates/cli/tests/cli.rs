use std::path::Path;
use std::process::{Command, Output};

fn hetune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetune"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = hetune(dir, args);
    assert_eq!(code(&o), 0, "{args:?}\n{}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn help_and_space_info() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--help"]);
    let o = ok(dir.path(), &["--space", "emil", "space-info"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("14544"), "{text}");
    assert!(text.contains("CPU-A"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // usage
    assert_eq!(code(&hetune(d, &["em"])), 1);
    assert_eq!(code(&hetune(d, &["frobnicate"])), 1);
    assert_eq!(code(&hetune(d, &["em", "--eval", "nonsense"])), 1);
    assert_eq!(code(&hetune(d, &["em", "--eval", "teleport:x"])), 1);
    assert_eq!(code(&hetune(d, &["aml", "--eval", "oracle:ida-pcc", "--budget-fraction", "2"])), 1);
    // evaluation
    assert_eq!(code(&hetune(d, &["em", "--eval", "cmd:exit 4"])), 2);
    // data
    std::fs::write(d.join("bad.csv"), "CPU-W,GPU-W\n1,2\n").unwrap();
    assert_eq!(code(&hetune(d, &["train", "--log", "bad.csv"])), 3);
    assert_eq!(code(&hetune(d, &["predict", "--model", "missing.json", "--all"])), 3);
    assert_eq!(code(&hetune(d, &["--space", "no-such-space.toml", "space-info"])), 1);
    std::fs::write(d.join("broken.toml"), "name = 3\n").unwrap();
    assert_eq!(code(&hetune(d, &["--space", "broken.toml", "space-info"])), 3);
}

#[test]
fn em_and_aml_on_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "em.json", "em", "--eval", "oracle:ida-pcc", "--label", "ida"]);
    ok(
        d,
        &["--seed", "3", "--out", "aml.json", "aml", "--eval", "oracle:ida-pcc", "--label", "ida", "--budget", "135", "--trace", "trace.jsonl"],
    );
    let em: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("em.json")).unwrap()).unwrap();
    assert_eq!(em["evaluations_used"], 101);
    let trace = std::fs::read_to_string(d.join("trace.jsonl")).unwrap();
    assert!(trace.lines().count() >= 3);
    let o = ok(d, &["compare", "--em", "em.json", "--aml", "aml.json", "--json"]);
    let cmp: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cmp["rows"][0]["label"], "ida");
    assert!(cmp["rows"][0]["abs_difference"].as_f64().unwrap() >= 0.0);
}

fn pipeline(d: &Path) -> Vec<Vec<u8>> {
    ok(d, &["--space", "emil", "--seed", "5", "--out", "log.csv", "gen", "--oracle", "emil-pm", "--samples", "600"]);
    ok(
        d,
        &["--space", "emil", "--seed", "5", "--out", "model.json", "train", "--log", "log.csv", "--folds", "5", "--summary", "summary.json"],
    );
    ok(d, &["--space", "emil", "--seed", "2", "--out", "aml.json", "aml", "--eval", "model:model.json", "--budget-fraction", "0.07"]);
    let predictions = ok(d, &["--space", "emil", "predict", "--model", "model.json", "--config", "CPU-T=48,ACC-T=180,CPU-A=scatter,ACC-A=balanced,CPU-W=62"]).stdout;
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("aml.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "AML");
    assert!(report["evaluations_used"].as_u64().unwrap() <= 1018 + 3);
    let mut canonical = report.clone();
    canonical["wall_time_s"] = serde_json::json!(0.0);
    vec![
        std::fs::read(d.join("log.csv")).unwrap(),
        std::fs::read(d.join("model.json")).unwrap(),
        std::fs::read(d.join("summary.json")).unwrap(),
        serde_json::to_vec(&canonical).unwrap(),
        predictions,
    ]
}

#[test]
fn pipeline_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(pipeline(a.path()), pipeline(b.path()));
}

#[test]
fn replay_and_command_evaluators() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "ida.csv", "gen", "--oracle", "ida-pcc"]);
    let from_oracle = ok(d, &["em", "--eval", "oracle:ida-pcc"]).stdout;
    let from_log = ok(d, &["em", "--eval", "replay:ida.csv"]).stdout;
    let best = |bytes: &[u8]| serde_json::from_slice::<serde_json::Value>(bytes).unwrap()["best"].clone();
    assert_eq!(best(&from_oracle), best(&from_log));

    // a stub "benchmark" that looks its row up in the generated log
    let stub = "cmd:grep '^{CPU-W},' ida.csv";
    ok(d, &["--out", "cmd.json", "em", "--eval", stub, "--parallel", "4", "--record", "runs.csv"]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cmd.json")).unwrap()).unwrap();
    assert_eq!(report["best"], best(&from_log));
    let recorded = std::fs::read_to_string(d.join("runs.csv")).unwrap();
    assert_eq!(recorded.lines().count(), 102);
}
