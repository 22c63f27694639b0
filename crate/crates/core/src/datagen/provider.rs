use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use thiserror::Error;

use crate::rng::derive_seed_str;

pub const ENV_PROVIDER_URL: &str = "GROUNDBENCH_PROVIDER_URL";
pub const ENV_PROVIDER_KEY: &str = "GROUNDBENCH_PROVIDER_KEY";
pub const ENV_PROVIDER_MODEL: &str = "GROUNDBENCH_PROVIDER_MODEL";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("provider not configured: {0}")]
    Config(String),
}

/// Source of rationale text for an annotated observation.
pub trait RationaleProvider: Send + Sync {
    fn request(&self, annotated_png: &[u8], prompt: &str) -> Result<String, ProviderError>;
}

/// Returns the given replies in order, wrapping around.
#[derive(Debug)]
pub struct CannedProvider {
    replies: Vec<Result<String, ProviderError>>,
    next: AtomicUsize,
}

impl CannedProvider {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn with_results(replies: impl IntoIterator<Item = Result<String, ProviderError>>) -> Self {
        let replies: Vec<_> = replies.into_iter().collect();
        assert!(!replies.is_empty(), "canned provider needs at least one reply");
        Self { replies, next: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.next.load(Ordering::SeqCst)
    }
}

impl RationaleProvider for CannedProvider {
    fn request(&self, _png: &[u8], _prompt: &str) -> Result<String, ProviderError> {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        self.replies[i % self.replies.len()].clone()
    }
}

/// Offline provider: a coordinate-free rationale picked by hashing the
/// prompt, so the same prompt always yields the same text.
#[derive(Debug, Default, Clone, Copy)]
pub struct TemplateProvider;

const NAV_OPENERS: [&str; 4] = [
    "The {t} is usually kept in a room that fits its purpose, so I should head toward the part of the house that looks like such a room.",
    "I cannot see the {t} yet. The open floor ahead leads deeper into the house, which is where unexplored rooms are.",
    "Rooms that usually hold a {t} tend to sit next to the area I am in, so the doorway in view is the best lead.",
    "Nothing in view matches the {t}. Moving toward the unexplored side of the layout gives the best chance of spotting it.",
];

const NAV_CLOSERS: [&str; 3] = [
    "The marked spot is on open floor and brings me closer to that region.",
    "Going there keeps a clear path and widens what I can see next.",
    "From there I can look into the next room before committing further.",
];

const MANIP_LINES: [&str; 4] = [
    "The goal layout is not met yet, so the object that breaks it has to move first.",
    "I should clear whatever sits on top before moving the object underneath.",
    "There is free table space away from the other items, which avoids any collision.",
    "Once this object is in place, the remaining relations can be handled one by one.",
];

fn between<'a>(s: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = s.find(start)? + start.len();
    let len = s[from..].find(end)?;
    Some(&s[from..from + len])
}

impl RationaleProvider for TemplateProvider {
    fn request(&self, _png: &[u8], prompt: &str) -> Result<String, ProviderError> {
        let h = derive_seed_str(0, prompt) as usize;
        if let Some(target) = between(prompt, "Your task is to find the ", " in the environment") {
            let a = NAV_OPENERS[h % NAV_OPENERS.len()].replace("{t}", target);
            let b = NAV_CLOSERS[(h / 7) % NAV_CLOSERS.len()];
            return Ok(format!("{a} {b}"));
        }
        let a = MANIP_LINES[h % MANIP_LINES.len()];
        let b = MANIP_LINES[(h / 7 + 1 + h % MANIP_LINES.len()) % MANIP_LINES.len()];
        Ok(if a == b { a.to_string() } else { format!("{a} {b}") })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatCompletionConfig {
    /// Full URL of the chat-completions endpoint.
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub max_tokens: u32,
}

impl ChatCompletionConfig {
    pub fn from_env() -> Result<Self, ProviderError> {
        let url = std::env::var(ENV_PROVIDER_URL).map_err(|_| ProviderError::Config(format!("{ENV_PROVIDER_URL} unset")))?;
        Ok(Self {
            url,
            api_key: std::env::var(ENV_PROVIDER_KEY).ok(),
            model: std::env::var(ENV_PROVIDER_MODEL).unwrap_or_else(|_| "gpt-4o".into()),
            timeout: Duration::from_secs(120),
            max_in_flight: 4,
            max_tokens: 512,
        })
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut n = self.free.lock().expect("semaphore lock");
        while *n == 0 {
            n = self.cv.wait(n).expect("semaphore wait");
        }
        *n -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("semaphore lock") += 1;
        self.0.cv.notify_one();
    }
}

/// OpenAI-style chat-completions client: one user message with the
/// annotated image as a data URL followed by the prompt text.
pub struct ChatCompletionProvider {
    config: ChatCompletionConfig,
    agent: ureq::Agent,
    slots: Semaphore,
}

impl ChatCompletionProvider {
    pub fn new(config: ChatCompletionConfig) -> Self {
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build(),
        );
        let slots = Semaphore { free: Mutex::new(config.max_in_flight.max(1)), cv: Condvar::new() };
        Self { config, agent, slots }
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        Ok(Self::new(ChatCompletionConfig::from_env()?))
    }

    pub fn request_body(&self, png: &[u8], prompt: &str) -> Value {
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        json!({
            "model": self.config.model,
            "max_tokens": self.config.max_tokens,
            "temperature": 0,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}},
                    {"type": "text", "text": prompt},
                ],
            }],
        })
    }
}

/// Pulls `choices[0].message.content` out of a chat-completions reply.
pub(crate) fn completion_text(reply: &Value) -> Result<String, ProviderError> {
    let content = &reply["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Array(parts) => {
            let text: Vec<&str> = parts.iter().filter_map(|p| p["text"].as_str()).collect();
            if text.is_empty() {
                Err(ProviderError::Malformed("content has no text parts".into()))
            } else {
                Ok(text.join("").trim().to_string())
            }
        }
        _ => Err(ProviderError::Malformed("missing choices[0].message.content".into())),
    }
}

impl RationaleProvider for ChatCompletionProvider {
    fn request(&self, png: &[u8], prompt: &str) -> Result<String, ProviderError> {
        let body = self.request_body(png, prompt);
        let _slot = self.slots.acquire();
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::StatusCode(code) => ProviderError::Status(code),
            other => ProviderError::Transport(other.to_string()),
        })?;
        let reply: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        completion_text(&reply)
    }
}
