//! OpenAI-compatible chat-completions client.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::chat::ChatMessage;
use super::{Agent, AgentError, AgentView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub model: String,
    /// Overrides the base URL read from `base_url_env`.
    pub base_url: Option<String>,
    pub base_url_env: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: Option<u32>,
    /// Sent as `reasoning_effort` when set.
    pub reasoning_effort: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    /// Cap on concurrent requests across all agents of one factory.
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            model: String::new(),
            base_url: None,
            base_url_env: "OPENAI_BASE_URL".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.6,
            top_p: 0.95,
            max_tokens: None,
            reasoning_effort: None,
            timeout_secs: 300,
            max_retries: 6,
            backoff_initial_ms: 500,
            backoff_max_ms: 30_000,
            max_in_flight: 8,
        }
    }
}

impl RemoteConfig {
    /// The JSON body sent for `messages`.
    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "top_p": self.top_p,
        });
        if let Some(n) = self.max_tokens {
            body["max_tokens"] = json!(n);
        }
        if let Some(effort) = &self.reasoning_effort {
            body["reasoning_effort"] = json!(effort);
        }
        body
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .backoff_initial_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.backoff_max_ms);
        Duration::from_millis(ms)
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Shared HTTP client with retry and in-flight limiting.
#[derive(Debug)]
pub struct RemoteClient {
    config: RemoteConfig,
    url: String,
    api_key: Option<String>,
    http: ureq::Agent,
    limiter: Limiter,
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Result<Self, AgentError> {
        if config.model.is_empty() {
            return Err(AgentError::Config("remote agent needs a model name".into()));
        }
        let base = match &config.base_url {
            Some(b) => b.clone(),
            None => std::env::var(&config.base_url_env).map_err(|_| {
                AgentError::Config(format!(
                    "no base URL: set {} or base_url in the agent config",
                    config.base_url_env
                ))
            })?,
        };
        let url = format!("{}/chat/completions", base.trim_end_matches('/'));
        let api_key = std::env::var(&config.api_key_env).ok();
        let http: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteClient {
            limiter: Limiter::new(config.max_in_flight),
            config,
            url,
            api_key,
            http,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Sends the conversation and returns the assistant text.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let body = self.config.request_body(messages);
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                thread::sleep(self.config.backoff(attempt - 1));
            }
            let result = {
                let _permit = self.limiter.acquire();
                self.send(&body)
            };
            match result {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last_error = msg,
            }
        }
        Err(AgentError::Transport(format!(
            "giving up after {} attempts: {last_error}",
            self.config.max_retries + 1
        )))
    }

    fn send(&self, body: &Value) -> Result<String, Attempt> {
        let mut req = self.http.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status != 200 {
            return Err(Attempt::Fatal(AgentError::Transport(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            ))));
        }
        extract_content(&text).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retry(String),
    Fatal(AgentError),
}

/// Assistant text of the first choice of a chat-completion response.
pub fn extract_content(body: &str) -> Result<String, AgentError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| AgentError::Protocol(format!("response is not JSON: {e}")))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| AgentError::Protocol("response has no choices[0].message.content".into()))
}

/// An agent backed by a remote chat model. It sends the full chat history
/// every turn.
#[derive(Debug, Clone)]
pub struct RemoteLlmAgent {
    client: Arc<RemoteClient>,
}

impl RemoteLlmAgent {
    pub fn new(client: Arc<RemoteClient>) -> Self {
        RemoteLlmAgent { client }
    }
}

impl Agent for RemoteLlmAgent {
    fn act(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        self.client.complete(view.messages)
    }
}
