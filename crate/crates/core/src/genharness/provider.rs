//! Chat-completion provider contract, HTTP transport and stubs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prompt::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Ask for a JSON-object response format.
    pub structured_output: bool,
    /// Sent as `reasoning_effort: "none"` when set.
    pub disable_reasoning: bool,
    pub max_attempts: u32,
    /// Delay before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
    /// Environment variable holding the bearer token; `None` sends no token.
    pub credential_env: Option<String>,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-5.1".into(),
            temperature: 0.1,
            structured_output: true,
            disable_reasoning: true,
            max_attempts: 3,
            backoff_ms: vec![2_000, 8_000, 30_000],
            credential_env: Some("OPENAI_API_KEY".into()),
            timeout_secs: 180,
            max_concurrency: 4,
        }
    }
}

impl ProviderConfig {
    /// Configuration for stub transports: no credential, no backoff.
    pub fn stub() -> ProviderConfig {
        ProviderConfig {
            endpoint: "stub://".into(),
            model: "stub".into(),
            credential_env: None,
            backoff_ms: vec![0],
            ..ProviderConfig::default()
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.max_attempts < 1 {
            return Err("max_attempts must be at least 1".into());
        }
        if self.max_concurrency < 1 {
            return Err("max_concurrency must be at least 1".into());
        }
        Ok(())
    }

    pub fn request_body(&self, prompt: &Prompt) -> serde_json::Value {
        let mut body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        });
        if self.structured_output {
            body["response_format"] = json!({"type": "json_object"});
        }
        if self.disable_reasoning {
            body["reasoning_effort"] = json!("none");
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Io(String),
}

/// POSTs a JSON body and returns the status code and response text.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> UreqTransport {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new()
    }
}

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError> {
        let mut req = self
            .agent
            .post(url)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .header("Content-Type", "application/json");
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        match req.send(body.to_string()) {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let text = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| TransportError::Io(e.to_string()))?;
                Ok((status, text))
            }
            Err(ureq::Error::Timeout(_)) => Err(TransportError::Timeout),
            Err(e) => Err(TransportError::Io(e.to_string())),
        }
    }
}

/// Wraps assistant text in a chat-completion response body.
pub fn completion_body(content: &str) -> String {
    json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0},
    })
    .to_string()
}

/// Always answers with the same assistant text.
pub struct FixedTransport {
    pub content: String,
}

impl Transport for FixedTransport {
    fn post_json(
        &self,
        _: &str,
        _: &[(String, String)],
        _: &serde_json::Value,
        _: Duration,
    ) -> Result<(u16, String), TransportError> {
        Ok((200, completion_body(&self.content)))
    }
}

/// Replays a fixed sequence of outcomes, then repeats the last one.
pub struct ScriptedTransport {
    script: Vec<Result<(u16, String), TransportError>>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new(script: Vec<Result<(u16, String), TransportError>>) -> ScriptedTransport {
        assert!(!script.is_empty(), "script needs at least one step");
        ScriptedTransport {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for ScriptedTransport {
    fn post_json(
        &self,
        _: &str,
        _: &[(String, String)],
        _: &serde_json::Value,
        _: Duration,
    ) -> Result<(u16, String), TransportError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        self.script[i.min(self.script.len() - 1)].clone()
    }
}

/// Answers with the first fenced JSON block of the user message, that is,
/// the example graph. Deterministic and always schema-valid.
#[derive(Default)]
pub struct EchoExampleTransport {
    pub bodies: Mutex<Vec<serde_json::Value>>,
    pub record_bodies: bool,
}

pub fn first_json_block(text: &str) -> Option<&str> {
    let start = text.find("```json")? + "```json".len();
    let rest = &text[start..];
    let end = rest.find("```")?;
    Some(rest[..end].trim())
}

impl Transport for EchoExampleTransport {
    fn post_json(
        &self,
        _: &str,
        _: &[(String, String)],
        body: &serde_json::Value,
        _: Duration,
    ) -> Result<(u16, String), TransportError> {
        if self.record_bodies {
            self.bodies.lock().expect("lock").push(body.clone());
        }
        let user = body["messages"][1]["content"].as_str().unwrap_or("");
        Ok((200, completion_body(first_json_block(user).unwrap_or("{}"))))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("provider error after {attempts} attempt(s){}: {message}", .last_status.map(|s| format!(" (status {s})")).unwrap_or_default())]
pub struct ProviderError {
    pub last_status: Option<u16>,
    pub attempts: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generation {
    pub text: String,
    pub attempts: u32,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

fn is_transient(status: u16) -> bool {
    status == 408 || status == 429 || (500..600).contains(&status)
}

/// Sends one chat completion, retrying timeouts, 429 and 5xx responses.
pub fn request_generation(
    prompt: &Prompt,
    cfg: &ProviderConfig,
    transport: &dyn Transport,
) -> Result<Generation, ProviderError> {
    let mut headers = Vec::new();
    if let Some(var) = &cfg.credential_env {
        match std::env::var(var) {
            Ok(token) if !token.is_empty() => headers.push(("Authorization".to_owned(), format!("Bearer {token}"))),
            _ => {
                return Err(ProviderError {
                    last_status: None,
                    attempts: 0,
                    message: format!("credential variable `{var}` is not set"),
                })
            }
        }
    }
    let body = cfg.request_body(prompt);
    let timeout = Duration::from_secs(cfg.timeout_secs.max(1));
    let attempts_allowed = cfg.max_attempts.max(1);
    let mut last_status = None;
    let mut last_message = String::new();
    for attempt in 1..=attempts_allowed {
        match transport.post_json(&cfg.endpoint, &headers, &body, timeout) {
            Ok((status, text)) if (200..300).contains(&status) => {
                return parse_completion(&text)
                    .map(|(content, pt, ct)| Generation {
                        text: content,
                        attempts: attempt,
                        prompt_tokens: pt,
                        completion_tokens: ct,
                    })
                    .map_err(|message| ProviderError {
                        last_status: Some(status),
                        attempts: attempt,
                        message,
                    });
            }
            Ok((status, text)) => {
                last_status = Some(status);
                last_message = text.chars().take(500).collect();
                if !is_transient(status) {
                    return Err(ProviderError {
                        last_status,
                        attempts: attempt,
                        message: last_message,
                    });
                }
            }
            Err(e) => {
                last_message = e.to_string();
            }
        }
        if attempt < attempts_allowed && !cfg.backoff_ms.is_empty() {
            let i = ((attempt - 1) as usize).min(cfg.backoff_ms.len() - 1);
            let delay = cfg.backoff_ms[i];
            if delay > 0 {
                std::thread::sleep(Duration::from_millis(delay));
            }
        }
    }
    Err(ProviderError {
        last_status,
        attempts: attempts_allowed,
        message: last_message,
    })
}

fn parse_completion(text: &str) -> Result<(String, Option<u64>, Option<u64>), String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("malformed provider response: {e}"))?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| "provider response has no message content".to_owned())?;
    Ok((
        content.to_owned(),
        v["usage"]["prompt_tokens"].as_u64(),
        v["usage"]["completion_tokens"].as_u64(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt() -> Prompt {
        Prompt {
            system: "s".into(),
            user: "u ```json\n{\"a\": 1}\n``` tail".into(),
            hash: String::new(),
            srl_missing: false,
        }
    }

    #[test]
    fn retries_then_succeeds() {
        let t = ScriptedTransport::new(vec![
            Ok((503, "busy".into())),
            Err(TransportError::Timeout),
            Ok((200, completion_body("{}"))),
        ]);
        let g = request_generation(&prompt(), &ProviderConfig::stub(), &t).unwrap();
        assert_eq!(g.attempts, 3);
        assert_eq!(g.text, "{}");
    }

    #[test]
    fn unauthorized_fails_immediately() {
        let t = ScriptedTransport::new(vec![Ok((401, "no".into()))]);
        let e = request_generation(&prompt(), &ProviderConfig::stub(), &t).unwrap_err();
        assert_eq!((e.attempts, e.last_status), (1, Some(401)));
        assert_eq!(t.calls(), 1);
    }

    #[test]
    fn exhausted_retries_report_last_status() {
        let t = ScriptedTransport::new(vec![Ok((429, "slow down".into()))]);
        let e = request_generation(&prompt(), &ProviderConfig::stub(), &t).unwrap_err();
        assert_eq!((e.attempts, e.last_status), (3, Some(429)));
    }

    #[test]
    fn echo_returns_example_block() {
        let t = EchoExampleTransport::default();
        let g = request_generation(&prompt(), &ProviderConfig::stub(), &t).unwrap();
        assert_eq!(g.text, "{\"a\": 1}");
    }

    #[test]
    fn request_shape() {
        let body = ProviderConfig::default().request_body(&prompt());
        assert_eq!(body["temperature"], 0.1);
        assert_eq!(body["response_format"]["type"], "json_object");
        assert_eq!(body["messages"][0]["role"], "system");
    }

    #[test]
    fn missing_credential() {
        let cfg = ProviderConfig {
            credential_env: Some("LEGALDMN_SURELY_UNSET_VARIABLE".into()),
            ..ProviderConfig::stub()
        };
        let e = request_generation(&prompt(), &cfg, &FixedTransport { content: "{}".into() }).unwrap_err();
        assert_eq!(e.attempts, 0);
    }

    #[test]
    fn config_checks() {
        assert!(ProviderConfig::default().check().is_ok());
        assert!(ProviderConfig {
            temperature: 3.0,
            ..ProviderConfig::default()
        }
        .check()
        .is_err());
        assert!(ProviderConfig {
            max_attempts: 0,
            ..ProviderConfig::default()
        }
        .check()
        .is_err());
    }
}
