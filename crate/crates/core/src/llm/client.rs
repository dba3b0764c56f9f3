//! Completion backends: a scripted mock and a chat-completions HTTP client.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("no scripted response for prompt {0}")]
    Unscripted(String),
    #[error("client configuration: {0}")]
    Config(String),
}

/// A text completion backend.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ClientError>;

    /// Short tag identifying the backend in logs and traces.
    fn identity(&self) -> String;
}

/// Hex SHA-256 of a prompt, used to key scripted responses.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

type Handler = Box<dyn Fn(&str) -> Option<String> + Send + Sync>;

enum Rule {
    Contains(Vec<String>, String),
    Sequence(Vec<String>, Vec<String>, AtomicUsize),
    Hash(String, String),
    Handler(Handler),
    Fail(String),
}

/// Deterministic client answering from an ordered rule list.
///
/// The first matching rule wins. A prompt that matches nothing returns the
/// fallback response if one is set, otherwise an `Unscripted` error.
pub struct MockClient {
    name: String,
    rules: Vec<Rule>,
    fallback: Option<String>,
    calls: Mutex<Vec<String>>,
}

impl Default for MockClient {
    fn default() -> Self {
        MockClient::new()
    }
}

impl MockClient {
    pub fn new() -> Self {
        MockClient {
            name: "mock".into(),
            rules: Vec::new(),
            fallback: None,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Answer prompts containing `pattern`.
    pub fn when_contains(self, pattern: impl Into<String>, response: impl Into<String>) -> Self {
        self.when_all(&[pattern.into()], response)
    }

    /// Answer prompts containing every pattern.
    pub fn when_all<S: AsRef<str>>(mut self, patterns: &[S], response: impl Into<String>) -> Self {
        let pats = patterns.iter().map(|p| p.as_ref().to_string()).collect();
        self.rules.push(Rule::Contains(pats, response.into()));
        self
    }

    /// Successive matching prompts get successive responses; the last repeats.
    pub fn sequence<S: AsRef<str>>(mut self, patterns: &[S], responses: Vec<String>) -> Self {
        let pats = patterns.iter().map(|p| p.as_ref().to_string()).collect();
        self.rules.push(Rule::Sequence(pats, responses, AtomicUsize::new(0)));
        self
    }

    /// Answer the prompt whose `prompt_hash` equals `hash`.
    pub fn when_hash(mut self, hash: impl Into<String>, response: impl Into<String>) -> Self {
        self.rules.push(Rule::Hash(hash.into(), response.into()));
        self
    }

    /// Arbitrary matcher; `None` falls through to later rules.
    pub fn handler(mut self, f: impl Fn(&str) -> Option<String> + Send + Sync + 'static) -> Self {
        self.rules.push(Rule::Handler(Box::new(f)));
        self
    }

    /// Fail prompts containing `pattern` with a transport error.
    pub fn fail_when(mut self, pattern: impl Into<String>) -> Self {
        self.rules.push(Rule::Fail(pattern.into()));
        self
    }

    pub fn otherwise(mut self, response: impl Into<String>) -> Self {
        self.fallback = Some(response.into());
        self
    }

    /// Every prompt seen so far, in call order.
    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn from_script(script: &MockScript) -> Self {
        let mut mock = MockClient::new().named("mock-script");
        for entry in &script.rules {
            mock = match entry {
                ScriptRule::Contains { contains, response } => mock.when_all(contains.as_slice(), response.clone()),
                ScriptRule::Sequence { contains, responses } => mock.sequence(contains.as_slice(), responses.clone()),
                ScriptRule::Hash { hash, response } => mock.when_hash(hash.clone(), response.clone()),
            };
        }
        if let Some(d) = &script.default {
            mock = mock.otherwise(d.clone());
        }
        mock
    }
}

impl CompletionClient for MockClient {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, ClientError> {
        self.calls.lock().unwrap().push(prompt.to_string());
        let all = |pats: &[String]| pats.iter().all(|p| prompt.contains(p.as_str()));
        for rule in &self.rules {
            match rule {
                Rule::Contains(pats, resp) if all(pats) => return Ok(resp.clone()),
                Rule::Sequence(pats, resps, next) if all(pats) && !resps.is_empty() => {
                    let i = next.fetch_add(1, Ordering::SeqCst).min(resps.len() - 1);
                    return Ok(resps[i].clone());
                }
                Rule::Hash(h, resp) if *h == prompt_hash(prompt) => return Ok(resp.clone()),
                Rule::Handler(f) => {
                    if let Some(resp) = f(prompt) {
                        return Ok(resp);
                    }
                }
                Rule::Fail(p) if prompt.contains(p.as_str()) => {
                    return Err(ClientError::Transport("scripted failure".into()));
                }
                _ => {}
            }
        }
        self.fallback
            .clone()
            .ok_or_else(|| ClientError::Unscripted(prompt_hash(prompt)[..12].to_string()))
    }

    fn identity(&self) -> String {
        self.name.clone()
    }
}

/// JSON form of a mock rule list, as accepted by `--mock-script`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptRule {
    Contains { contains: Vec<String>, response: String },
    Sequence { contains: Vec<String>, responses: Vec<String> },
    Hash { hash: String, response: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: u64,
    /// Append request and response bodies to this JSON-lines file.
    pub trace_file: Option<PathBuf>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            token_env: "CLAUSECHECK_API_TOKEN".into(),
            timeout_secs: 120,
            trace_file: None,
        }
    }
}

/// Client for a chat-completions style endpoint.
pub struct HttpClient {
    config: HttpConfig,
    token: Option<String>,
    agent: ureq::Agent,
    trace: Mutex<()>,
}

impl HttpClient {
    /// Reads the token from the configured environment variable, if set.
    pub fn new(config: HttpConfig) -> Result<Self, ClientError> {
        if config.url.is_empty() {
            return Err(ClientError::Config("completion url is empty".into()));
        }
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Ok(HttpClient {
            config,
            token,
            agent,
            trace: Mutex::new(()),
        })
    }

    fn log(&self, request: &serde_json::Value, response: &str) {
        let Some(path) = &self.config.trace_file else { return };
        let _guard = self.trace.lock().unwrap();
        let line = serde_json::json!({ "request": request, "response": response });
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "{line}");
        }
    }
}

impl CompletionClient for HttpClient {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, ClientError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut req = self.agent.post(&self.config.url).set("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        let text = match req.send_json(body.clone()) {
            Ok(resp) => resp.into_string().map_err(|e| ClientError::Transport(e.to_string()))?,
            Err(ureq::Error::Status(status, resp)) => {
                let body_text = resp.into_string().unwrap_or_default();
                self.log(&body, &body_text);
                return Err(ClientError::Status { status, body: body_text });
            }
            Err(e) => return Err(ClientError::Transport(e.to_string())),
        };
        self.log(&body, &text);
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| ClientError::Decode("missing choices[0].message.content".into()))
    }

    fn identity(&self) -> String {
        format!("http:{}", self.config.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_apply_in_order() {
        let p = CompletionParams::default();
        let mock = MockClient::new()
            .fail_when("boom")
            .when_all(&["a", "b"], "both")
            .when_contains("a", "just a")
            .sequence(&["seq"], vec!["1".into(), "2".into()])
            .when_hash(prompt_hash("xyz"), "hashed");
        assert_eq!(mock.complete("a b", &p).unwrap(), "both");
        assert_eq!(mock.complete("a", &p).unwrap(), "just a");
        assert_eq!(mock.complete("seq", &p).unwrap(), "1");
        assert_eq!(mock.complete("seq", &p).unwrap(), "2");
        assert_eq!(mock.complete("seq", &p).unwrap(), "2");
        assert_eq!(mock.complete("xyz", &p).unwrap(), "hashed");
        assert!(matches!(mock.complete("boom a", &p), Err(ClientError::Transport(_))));
        assert!(matches!(mock.complete("zzz", &p), Err(ClientError::Unscripted(_))));
        assert_eq!(mock.call_count(), 8);
    }

    #[test]
    fn script_roundtrip() {
        let script: MockScript = serde_json::from_str(
            r#"{"rules": [{"contains": ["x"], "response": "X"}, {"contains": ["y"], "responses": ["1", "2"]}],
                "default": "d"}"#,
        )
        .unwrap();
        let mock = MockClient::from_script(&script);
        let p = CompletionParams::default();
        assert_eq!(mock.complete("x", &p).unwrap(), "X");
        assert_eq!(mock.complete("y", &p).unwrap(), "1");
        assert_eq!(mock.complete("q", &p).unwrap(), "d");
    }
}
