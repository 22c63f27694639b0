use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::Duration;
use std::{fs, thread};

use groundbench::harness::{
    decode_request, decode_response, encode_request, encode_response, run_suite, HarnessConfig, PlannerRequest,
    PlannerResponse, PlannerSpec, TaskManifest,
};
use groundbench::model::TaskKind;
use groundbench::nav::{FloorplanParams, NavParams};
use groundbench::render::{Image, RenderConfig};

fn config() -> HarnessConfig {
    let mut c = HarnessConfig { render: RenderConfig { width: 64, height: 64 }, ..HarnessConfig::default() };
    c.nav.step_budget = 30;
    c
}

fn manifest(kind: TaskKind, levels: &[u8], per_level: usize) -> TaskManifest {
    TaskManifest::generate(kind, levels, per_level, 17, &FloorplanParams::default(), &NavParams::default()).unwrap()
}

/// A shell planner that cycles through `replies`, logs every request line
/// to `requests.jsonl` and writes `bye` once its stdin closes.
fn replay_script(dir: &Path, replies: &[String]) -> PathBuf {
    let mut arms = String::new();
    for (i, r) in replies.iter().enumerate() {
        let line = encode_response(&PlannerResponse::new(r.clone()));
        assert!(!line.contains('\''));
        arms.push_str(&format!("    {i}) printf '%s\\n' '{}' ;;\n", line.trim_end()));
    }
    let script = format!(
        "i=0\nwhile IFS= read -r line; do\n  printf '%s\\n' \"$line\" >> '{log}'\n  case $((i % {n})) in\n{arms}  esac\n  i=$((i + 1))\ndone\necho bye >> '{bye}'\n",
        log = dir.join("requests.jsonl").display(),
        bye = dir.join("bye").display(),
        n = replies.len(),
    );
    let path = dir.join("planner.sh");
    fs::write(&path, script).unwrap();
    path
}

fn sh(script: &Path) -> PlannerSpec {
    PlannerSpec::Subprocess { command: "/bin/sh".into(), args: vec![script.display().to_string()] }
}

#[test]
fn subprocess_matches_builtin_replay() {
    let dir = tempfile::tempdir().unwrap();
    let replies = vec![
        "Thought: open floor ahead.\nAction: I should go to (0.50, 0.50) to find the bed.".to_string(),
        "Action: turn left".to_string(),
        "no idea".to_string(),
    ];
    let script = replay_script(dir.path(), &replies);
    let m = manifest(TaskKind::Nav, &[2], 5);
    let config = config();
    let external = run_suite(&m, &sh(&script), &config, 1, 4);
    let builtin = run_suite(&m, &PlannerSpec::Replay { responses: replies }, &config, 1, 4);
    assert_eq!(external.rows.len(), 5);
    assert!(external.rows.iter().all(|r| r.failure.is_none()), "{}", external.to_csv());
    assert_eq!(external.to_csv(), builtin.to_csv());

    // one process per episode, each told to stop by closing stdin
    assert_eq!(fs::read_to_string(dir.path().join("bye")).unwrap().lines().count(), 5);

    let log = fs::read_to_string(dir.path().join("requests.jsonl")).unwrap();
    let total: u32 = external.rows.iter().map(|r| r.decisions).sum();
    assert_eq!(log.lines().count() as u32, total);
    let mut expected_step = 0;
    for line in log.lines() {
        let req = decode_request(line).unwrap();
        assert_eq!(req.protocol_version, 1);
        assert_eq!(req.task_kind, TaskKind::Nav);
        assert!(req.target_category.is_some());
        let img = Image::from_png(&base64_decode(&req.image_png_base64)).unwrap();
        assert_eq!((img.width(), img.height()), (64, 64));
        assert!(req.meta.get("visible_navigable").is_some());
        if req.step_index == 0 {
            expected_step = 0;
        }
        assert_eq!(req.step_index, expected_step);
        expected_step += 1;
    }
}

fn base64_decode(s: &str) -> Vec<u8> {
    use base64::Engine;
    base64::engine::general_purpose::STANDARD.decode(s).unwrap()
}

#[test]
fn subprocess_manipulation() {
    let dir = tempfile::tempdir().unwrap();
    let script = replay_script(dir.path(), &["Action: done".to_string()]);
    let m = manifest(TaskKind::Manip, &[1, 3], 2);
    let report = run_suite(&m, &sh(&script), &config(), 1, 4);
    for r in &report.rows {
        assert!(r.failure.is_none());
        assert_eq!(r.decisions, 1);
        assert_eq!(r.parse_failures, 0);
    }
    let log = fs::read_to_string(dir.path().join("requests.jsonl")).unwrap();
    let req = decode_request(log.lines().next().unwrap()).unwrap();
    assert_eq!(req.meta["moves_used"], 0);
    assert_eq!(req.target_category, None);
}

#[test]
fn subprocess_failures_end_the_episode() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(TaskKind::Nav, &[1], 1);
    let mut config = config();

    let stale = dir.path().join("stale.sh");
    fs::write(&stale, "while IFS= read -r line; do printf '%s\\n' '{\"raw_text\":\"Action: turn left\"}'; done\n").unwrap();
    let row = &run_suite(&m, &sh(&stale), &config, 1, 1).rows[0];
    assert!(!row.success);
    assert_eq!(row.failure.as_deref(), Some("missing protocol_version"));

    let exits = dir.path().join("exits.sh");
    fs::write(&exits, "read -r line\n").unwrap();
    let row = &run_suite(&m, &sh(&exits), &config, 1, 1).rows[0];
    assert!(row.failure.as_deref().unwrap().contains("closed its stdout"), "{row:?}");

    config.planner_timeout_s = 0.3;
    let t0 = std::time::Instant::now();
    let spec = PlannerSpec::Subprocess { command: "sleep".into(), args: vec!["30".into()] };
    let row = &run_suite(&m, &spec, &config, 1, 1).rows[0];
    assert!(row.failure.as_deref().unwrap().contains("timed out"), "{row:?}");
    assert_eq!(row.decisions, 0);
    assert!(t0.elapsed() < Duration::from_secs(10));
}

type Handler = Arc<dyn Fn(&str) -> (u16, String, Duration) + Send + Sync>;

/// Minimal HTTP/1.1 server: one request per connection, bodies recorded.
fn serve(handler: Handler) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/act", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (handler, seen) = (handler.clone(), seen.clone());
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut first = String::new();
                reader.read_line(&mut first).unwrap();
                assert!(first.starts_with("POST /act "), "{first}");
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    let h = h.trim_end();
                    if h.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = h.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let body = String::from_utf8(body).unwrap();
                let (code, reply, delay) = handler(&body);
                seen.lock().unwrap().push(body);
                thread::sleep(delay);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    (url, bodies)
}

#[test]
fn http_planner_round_trip() {
    let handler: Handler = Arc::new(|body: &str| {
        let req: PlannerRequest = decode_request(body).unwrap();
        let text = if req.step_index % 2 == 0 { "Action: turn right" } else { "Action: I should go to (0.40, 0.40) to find it." };
        (200, encode_response(&PlannerResponse::new(text)), Duration::ZERO)
    });
    let (url, bodies) = serve(handler);
    let m = manifest(TaskKind::Nav, &[1, 2], 1);
    let mut config = config();
    config.exemplar_prefix = Some("Example: Action: turn left".into());
    let report = run_suite(&m, &PlannerSpec::Http { url }, &config, 1, 6);
    assert!(report.rows.iter().all(|r| r.failure.is_none()), "{}", report.to_csv());
    let replay = PlannerSpec::Replay {
        responses: vec!["Action: turn right".into(), "Action: I should go to (0.40, 0.40) to find it.".into()],
    };
    assert_eq!(report.to_csv(), run_suite(&m, &replay, &config, 1, 6).to_csv());

    let bodies = bodies.lock().unwrap();
    assert_eq!(bodies.len() as u32, report.rows.iter().map(|r| r.decisions).sum::<u32>());
    for b in bodies.iter() {
        let v: serde_json::Value = serde_json::from_str(b).unwrap();
        assert_eq!(v["protocol_version"], 1);
        assert!(!v["image_png_base64"].as_str().unwrap().is_empty());
        assert_eq!(v["exemplar_prefix"], "Example: Action: turn left");
    }
}

#[test]
fn http_errors_and_timeouts_are_failures() {
    let m = manifest(TaskKind::Nav, &[1], 1);
    let (url, _) = serve(Arc::new(|_: &str| (500, "{}".into(), Duration::ZERO)));
    let row = &run_suite(&m, &PlannerSpec::Http { url }, &config(), 1, 1).rows[0];
    assert!(row.failure.as_deref().unwrap().contains("500"), "{row:?}");
    assert!(!row.success);

    let (url, _) = serve(Arc::new(|_: &str| (200, r#"{"raw_text":"Action: turn left"}"#.into(), Duration::ZERO)));
    let row = &run_suite(&m, &PlannerSpec::Http { url }, &config(), 1, 1).rows[0];
    assert_eq!(row.failure.as_deref(), Some("missing protocol_version"));

    let (url, _) = serve(Arc::new(|_: &str| {
        (200, encode_response(&PlannerResponse::new("Action: turn left")), Duration::from_secs(3))
    }));
    let config = HarnessConfig { planner_timeout_s: 0.3, ..config() };
    let row = &run_suite(&m, &PlannerSpec::Http { url }, &config, 1, 1).rows[0];
    assert!(row.failure.as_deref().unwrap().contains("timed out"), "{row:?}");
}

fn doc() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/protocol.md")).unwrap()
}

fn fenced(doc: &str, lang: &str) -> Vec<String> {
    let open = format!("```{lang}\n");
    doc.split(&open).skip(1).map(|s| s.split("```").next().unwrap().to_string()).collect()
}

#[test]
fn documented_transcripts_are_exact() {
    let doc = doc();
    let blocks = fenced(&doc, "jsonl");
    assert_eq!(blocks.len(), 2);
    for block in blocks {
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines.len(), 2);
        let req = decode_request(lines[0]).unwrap();
        assert_eq!(encode_request(&req), format!("{}\n", lines[0]));
        Image::from_png(&base64_decode(&req.image_png_base64)).unwrap();
        let resp = decode_response(lines[1]).unwrap();
        assert_eq!(encode_response(&resp), format!("{}\n", lines[1]));
        groundbench::harness::parse_response(&resp.raw_text, req.task_kind).unwrap();
    }
    let rejected = fenced(&doc, "json");
    assert!(decode_response(rejected[0].trim()).is_err());
}

#[test]
fn documented_python_planner_runs() {
    if Command::new("python3").arg("--version").output().is_err() {
        eprintln!("python3 not available, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("planner.py");
    fs::write(&script, &fenced(&doc(), "python")[0]).unwrap();
    let spec = PlannerSpec::Subprocess { command: "python3".into(), args: vec![script.display().to_string()] };
    let m = manifest(TaskKind::Manip, &[1], 2);
    let report = run_suite(&m, &spec, &config(), 1, 3);
    assert!(report.rows.iter().all(|r| r.failure.is_none() && r.decisions == 1), "{}", report.to_csv());
}
