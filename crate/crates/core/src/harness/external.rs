use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::planner::{EnvView, Planner, PlannerError};
use super::protocol::{decode_response, encode_request, PlannerRequest, PlannerResponse};

/// Child process speaking newline-delimited JSON on stdin/stdout. One
/// process serves one episode.
pub struct SubprocessPlanner {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SubprocessPlanner {
    pub fn spawn(command: &str, args: &[String], timeout: Duration) -> Result<Self, PlannerError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PlannerError::Io(format!("spawn {command}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Self { child, stdin, lines: rx, timeout })
    }
}

impl Planner for SubprocessPlanner {
    fn needs_image(&self) -> bool {
        true
    }

    fn respond(&mut self, request: &PlannerRequest, _view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        let stdin = self.stdin.as_mut().ok_or_else(|| PlannerError::Io("planner stdin closed".into()))?;
        stdin
            .write_all(encode_request(request).as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| PlannerError::Io(format!("write request: {e}")))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(decode_response(&line)?),
            Ok(Err(e)) => Err(PlannerError::Io(format!("read response: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                Err(PlannerError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(PlannerError::Io("planner closed its stdout".into())),
        }
    }
}

impl Drop for SubprocessPlanner {
    fn drop(&mut self) {
        // closing stdin is the shutdown signal
        drop(self.stdin.take());
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// The same JSON messages sent as HTTP POST bodies.
pub struct HttpPlanner {
    url: String,
    agent: ureq::Agent,
    timeout: Duration,
}

impl HttpPlanner {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(true).build(),
        );
        Self { url: url.to_string(), agent, timeout }
    }
}

impl Planner for HttpPlanner {
    fn needs_image(&self) -> bool {
        true
    }

    fn respond(&mut self, request: &PlannerRequest, _view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        let body = serde_json::to_string(request).expect("request serializes");
        let result = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body.as_str());
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(PlannerError::Timeout(self.timeout)),
            Err(e) => return Err(PlannerError::Io(e.to_string())),
        };
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => PlannerError::Timeout(self.timeout),
                e => PlannerError::Io(e.to_string()),
            })?;
        Ok(decode_response(&text)?)
    }
}
