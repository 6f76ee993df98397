//! Chat backends: a live HTTP client and a scripted replay of canned responses.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    /// Worth retrying: timeouts, rate limits, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
    #[error("backend failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

/// Extra material sent with a prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum Attachment {
    Png(Vec<u8>),
    Document { name: String, text: String },
}

pub trait ChatBackend: Send + Sync {
    fn send(&self, prompt: &str, attachments: &[Attachment]) -> Result<String, BackendError>;

    fn supports_images(&self) -> bool {
        false
    }

    /// True when calls must not overlap, even across independent runs.
    fn single_flight(&self) -> bool {
        false
    }
}

/// Attempts and backoff for transient failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Same attempt count without sleeping.
    pub fn immediate() -> Self {
        Self {
            base_delay: Duration::ZERO,
            ..Self::default()
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1 << attempt.min(16))
    }
}

/// Send with up to `policy.attempts` tries, doubling the wait after each
/// transient failure. Fatal failures return at once.
pub fn send_with_retry(
    backend: &dyn ChatBackend,
    prompt: &str,
    attachments: &[Attachment],
    policy: &RetryPolicy,
) -> Result<String, BackendError> {
    let attempts = policy.attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        match backend.send(prompt, attachments) {
            Ok(text) => return Ok(text),
            Err(BackendError::Transient(msg)) => {
                last = msg;
                if attempt + 1 < attempts {
                    thread::sleep(policy.delay(attempt));
                }
            }
            Err(other) => return Err(other),
        }
    }
    Err(BackendError::Exhausted { attempts, last })
}

enum Scripted {
    Reply(String),
    Transient,
}

/// Replays responses in order. Loaded from a directory, every regular file
/// not starting with `.` is one response, taken in file-name order; a file
/// with the `.transient` extension stands for one transient failure.
pub struct ScriptedBackend {
    script: Vec<Scripted>,
    cursor: Mutex<usize>,
    images: bool,
    source: Option<PathBuf>,
}

impl ScriptedBackend {
    pub fn from_responses<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            script: responses.into_iter().map(|r| Scripted::Reply(r.into())).collect(),
            cursor: Mutex::new(0),
            images: false,
            source: None,
        }
    }

    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref();
        let read_err = |e: std::io::Error| BackendError::Fatal(format!("reading {}: {e}", dir.display()));
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(read_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .filter(|p| !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')))
            .collect();
        paths.sort();
        let mut script = Vec::with_capacity(paths.len());
        for p in &paths {
            if p.extension().is_some_and(|e| e == "transient") {
                script.push(Scripted::Transient);
            } else {
                let text = fs::read_to_string(p).map_err(read_err)?;
                script.push(Scripted::Reply(text));
            }
        }
        Ok(Self {
            script,
            cursor: Mutex::new(0),
            images: false,
            source: Some(dir.to_path_buf()),
        })
    }

    /// Declare image support, so callers attach rendered plots.
    pub fn with_images(mut self, images: bool) -> Self {
        self.images = images;
        self
    }

    /// Responses not yet replayed.
    pub fn remaining(&self) -> usize {
        let cursor = *self.cursor.lock().expect("cursor lock");
        self.script.len().saturating_sub(cursor)
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&self, _prompt: &str, _attachments: &[Attachment]) -> Result<String, BackendError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let Some(item) = self.script.get(*cursor) else {
            let origin = self.source.as_ref().map_or("inline script".to_string(), |p| p.display().to_string());
            return Err(BackendError::Fatal(format!(
                "script exhausted after {} responses ({origin})",
                self.script.len()
            )));
        };
        *cursor += 1;
        match item {
            Scripted::Reply(text) => Ok(text.clone()),
            Scripted::Transient => Err(BackendError::Transient(format!("scripted failure at response {}", *cursor))),
        }
    }

    fn supports_images(&self) -> bool {
        self.images
    }

    fn single_flight(&self) -> bool {
        true
    }
}

pub const ENV_API_BASE: &str = "STSYNTH_API_BASE";
pub const ENV_MODEL: &str = "STSYNTH_MODEL";
pub const ENV_API_KEY: &str = "STSYNTH_API_KEY";
pub const ENV_VISION: &str = "STSYNTH_VISION";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Base URL; requests go to `{api_base}/chat/completions`.
    pub api_base: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub vision: bool,
    pub temperature: f64,
}

impl LiveConfig {
    pub fn from_env() -> Result<Self, BackendError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let api_base = var(ENV_API_BASE).ok_or_else(|| BackendError::Fatal(format!("{ENV_API_BASE} is not set")))?;
        let model = var(ENV_MODEL).ok_or_else(|| BackendError::Fatal(format!("{ENV_MODEL} is not set")))?;
        Ok(Self {
            api_base,
            model,
            api_key: var(ENV_API_KEY),
            timeout: Duration::from_secs(300),
            vision: var(ENV_VISION).is_some_and(|v| v == "1" || v.eq_ignore_ascii_case("true")),
            temperature: 0.7,
        })
    }
}

/// Client for an OpenAI-style chat-completions endpoint.
pub struct LiveBackend {
    cfg: LiveConfig,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(cfg: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .build()
            .new_agent();
        Self { cfg, agent }
    }

    pub fn request_body(&self, prompt: &str, attachments: &[Attachment]) -> Value {
        let mut parts = vec![json!({"type": "text", "text": prompt})];
        for a in attachments {
            match a {
                Attachment::Png(bytes) if self.cfg.vision => {
                    let data = base64::engine::general_purpose::STANDARD.encode(bytes);
                    parts.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{data}")}}));
                }
                Attachment::Png(_) => {}
                Attachment::Document { name, text } => {
                    parts.push(json!({"type": "text", "text": format!("[{name}]\n{text}")}));
                }
            }
        }
        json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": parts}],
        })
    }
}

fn classify(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::StatusCode(code) if code == 408 || code == 429 || code >= 500 => {
            BackendError::Transient(format!("http status {code}"))
        }
        e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound) => {
            BackendError::Transient(e.to_string())
        }
        other => BackendError::Fatal(other.to_string()),
    }
}

impl ChatBackend for LiveBackend {
    fn send(&self, prompt: &str, attachments: &[Attachment]) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.cfg.api_base.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(self.request_body(prompt, attachments)).map_err(classify)?;
        let body: Value = resp.body_mut().read_json().map_err(classify)?;
        body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Fatal(format!("response has no message content: {body}")))
    }

    fn supports_images(&self) -> bool {
        self.cfg.vision
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_replays_in_order() {
        let b = ScriptedBackend::from_responses(["one", "two"]);
        assert_eq!(b.send("p", &[]).unwrap(), "one");
        assert_eq!(b.send("p", &[]).unwrap(), "two");
        assert!(matches!(b.send("p", &[]), Err(BackendError::Fatal(_))));
        assert!(b.single_flight());
    }

    #[test]
    fn directory_script_with_transient_failure() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("01_a.txt"), "first").unwrap();
        fs::write(dir.path().join("02_b.transient"), "").unwrap();
        fs::write(dir.path().join("03_c.json"), "{}").unwrap();
        fs::write(dir.path().join(".hidden"), "skip").unwrap();
        let b = ScriptedBackend::from_dir(dir.path()).unwrap();
        assert_eq!(b.remaining(), 3);
        let policy = RetryPolicy::immediate();
        assert_eq!(send_with_retry(&b, "p", &[], &policy).unwrap(), "first");
        // the transient entry is consumed by the first attempt, the retry gets the next file
        assert_eq!(send_with_retry(&b, "p", &[], &policy).unwrap(), "{}");
    }

    struct AlwaysBusy;
    impl ChatBackend for AlwaysBusy {
        fn send(&self, _: &str, _: &[Attachment]) -> Result<String, BackendError> {
            Err(BackendError::Transient("busy".into()))
        }
    }

    #[test]
    fn retry_exhaustion() {
        let err = send_with_retry(&AlwaysBusy, "p", &[], &RetryPolicy::immediate()).unwrap_err();
        assert_eq!(err, BackendError::Exhausted { attempts: 3, last: "busy".into() });
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { attempts: 3, base_delay: Duration::from_millis(100) };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(400));
    }

    #[test]
    fn live_request_shape() {
        let b = LiveBackend::new(LiveConfig {
            api_base: "http://localhost:1".into(),
            model: "m".into(),
            api_key: None,
            timeout: Duration::from_secs(1),
            vision: true,
            temperature: 0.0,
        });
        let body = b.request_body("hi", &[Attachment::Png(vec![1, 2, 3])]);
        assert_eq!(body["model"], "m");
        let parts = body["messages"][0]["content"].as_array().unwrap();
        assert_eq!(parts[0]["text"], "hi");
        assert_eq!(parts[1]["image_url"]["url"], "data:image/png;base64,AQID");
    }
}
