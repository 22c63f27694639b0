use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_groundbench")).current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "groundbench {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn scenes_eval_report_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("config.json"), r#"{"nav": {"step_budget": 80}, "render": {"width": 96, "height": 96}}"#).unwrap();

    run(d, &["gen-scenes", "--kind", "nav", "--levels", "1,2", "--per-level", "2", "--seed", "5", "--out", "nav.json"]);
    run(d, &["gen-scenes", "--kind", "manip", "--levels", "1,4", "--per-level", "2", "--seed", "5", "--out", "manip.json"]);
    let again = tempfile::tempdir().unwrap();
    run(again.path(), &["gen-scenes", "--kind", "nav", "--levels", "1,2", "--per-level", "2", "--seed", "5", "--out", "nav.json"]);
    assert_eq!(fs::read(d.join("nav.json")).unwrap(), fs::read(again.path().join("nav.json")).unwrap());

    let eval = run(d, &["eval", "--manifest", "nav.json", "--planner", "oracle", "--config", "config.json", "--out", "eval-nav"]);
    for f in ["report.json", "episodes.csv", "summary.csv", "report.md", "steps.jsonl"] {
        assert!(d.join("eval-nav").join(f).is_file(), "{f} missing");
    }
    let md = fs::read_to_string(d.join("eval-nav/report.md")).unwrap();
    assert_eq!(stdout(&eval), md);
    assert_eq!(fs::read_to_string(d.join("eval-nav/steps.jsonl")).unwrap().lines().count(), 4);

    let csv = run(d, &["report", "eval-nav/report.json", "--format", "csv"]);
    assert_eq!(stdout(&csv), fs::read_to_string(d.join("eval-nav/episodes.csv")).unwrap());
    assert_eq!(stdout(&csv).lines().count(), 5);
    let summary = run(d, &["report", "eval-nav/report.json", "--format", "summary"]);
    assert_eq!(stdout(&summary), fs::read_to_string(d.join("eval-nav/summary.csv")).unwrap());
    assert_eq!(stdout(&run(d, &["report", "eval-nav/report.json"])), md);

    run(d, &["eval", "--manifest", "manip.json", "--planner", "greedy", "--out", "eval-manip"]);
    let csv = fs::read_to_string(d.join("eval-manip/episodes.csv")).unwrap();
    assert!(csv.starts_with("episode_id,level,seed,success,collision,"));

    run(d, &["gen-align", "--manifest", "nav.json", "--manifest", "manip.json", "--total", "30", "--out", "align"]);
    assert_eq!(fs::read_to_string(d.join("align/samples.jsonl")).unwrap().lines().count(), 30);
    assert!(d.join("align/samples.manifest.json").is_file());

    fs::write(d.join("mix.json"), r#"{"affordance": 4}"#).unwrap();
    run(d, &["gen-align", "--manifest", "nav.json", "--mix", "mix.json", "--out", "align-mix"]);
    assert_eq!(fs::read_to_string(d.join("align-mix/samples.jsonl")).unwrap().lines().count(), 4);

    run(d, &["gen-cot", "--nav-manifest", "nav.json", "--manip-manifest", "manip.json", "--total", "12", "--config", "config.json", "--out", "cot"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("cot/samples.manifest.json")).unwrap()).unwrap();
    let lines = fs::read_to_string(d.join("cot/samples.jsonl")).unwrap().lines().count();
    assert_eq!(manifest["total"], lines);
    assert!(lines > 0);
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_groundbench");
    let out = Command::new(bin).current_dir(tmp.path()).args(["eval", "--manifest", "missing.json", "--out", "x"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = Command::new(bin).current_dir(tmp.path()).args(["gen-cot", "--out", "x"]).output().unwrap();
    assert!(!out.status.success());
    run(tmp.path(), &["gen-scenes", "--kind", "nav", "--levels", "1", "--per-level", "1", "--out", "m.json"]);
    let out = Command::new(bin)
        .current_dir(tmp.path())
        .args(["eval", "--manifest", "m.json", "--planner", "nonsense", "--out", "x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown planner"));
}
