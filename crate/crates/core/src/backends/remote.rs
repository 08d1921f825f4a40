//! OpenAI-compatible chat-completions client.
//!
//! `remote_generate` posts a message list and returns the assistant
//! text, retrying transient failures with exponential backoff.
//! [`RemoteBackend`] adapts that to the [`Backend`] contract by
//! accumulating fed text into the next user message; its clock is wall
//! time, so it never participates in virtual-clock comparisons.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendSession, CallKind, GenerateMode, SourceTag};
use crate::chunker::estimate_tokens;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteBackendConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub request_timeout_seconds: u64,
    pub max_retries: u32,
    /// Worked example prepended to the system message for one-shot
    /// prompting.
    pub one_shot_example: Option<String>,
    pub api_key: Option<String>,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl RemoteBackendConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            request_timeout_seconds: 60,
            max_retries: 2,
            one_shot_example: None,
            api_key: None,
            temperature: 0.0,
            max_tokens: 512,
        }
    }

    /// Read endpoint and key from `ENDPOINT_URL` / `API_KEY`.
    pub fn from_env(model_name: impl Into<String>) -> Option<Self> {
        let endpoint = std::env::var("ENDPOINT_URL").ok()?;
        let mut cfg = Self::new(endpoint, model_name);
        cfg.api_key = std::env::var("API_KEY").ok();
        Some(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Send one chat-completions request and return the assistant text.
pub fn remote_generate(
    config: &RemoteBackendConfig,
    messages: &[ChatMessage],
) -> Result<String, BackendError> {
    remote_generate_with_stats(config, messages).map(|(text, _)| text)
}

/// As [`remote_generate`], also reporting how many retries were needed.
pub fn remote_generate_with_stats(
    config: &RemoteBackendConfig,
    messages: &[ChatMessage],
) -> Result<(String, u32), BackendError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(config.request_timeout_seconds))
        .build()
        .map_err(|e| BackendError::RemoteUnavailable {
            attempts: 0,
            message: e.to_string(),
        })?;
    let body = ChatRequest {
        model: &config.model_name,
        messages,
        temperature: config.temperature,
        max_tokens: config.max_tokens,
    };

    let mut last_error = String::new();
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            let backoff = Duration::from_millis(100 * (1 << (attempt - 1).min(6)));
            std::thread::sleep(backoff);
            log::debug!("retrying remote request (attempt {attempt}): {last_error}");
        }
        let mut request = client.post(&config.endpoint_url).json(&body);
        if let Some(key) = &config.api_key {
            request = request.bearer_auth(key);
        }
        match request.send() {
            Err(e) => {
                last_error = e.to_string();
                continue; // transport error: retry
            }
            Ok(response) => {
                let status = response.status();
                if status.is_server_error() {
                    last_error = format!("HTTP {status}");
                    continue;
                }
                if !status.is_success() {
                    return Err(BackendError::RemoteUnavailable {
                        attempts: attempt + 1,
                        message: format!("HTTP {status}"),
                    });
                }
                let text = response.text().map_err(|e| {
                    BackendError::RemoteProtocolError(format!("failed reading body: {e}"))
                })?;
                let parsed: ChatResponse = serde_json::from_str(&text)
                    .map_err(|e| BackendError::RemoteProtocolError(format!("{e}: {text:.200}")))?;
                let choice = parsed
                    .choices
                    .into_iter()
                    .next()
                    .ok_or_else(|| BackendError::RemoteProtocolError("no choices".into()))?;
                if let Some(usage) = parsed.usage {
                    log::debug!(
                        "remote usage: prompt={} completion={}",
                        usage.prompt_tokens,
                        usage.completion_tokens
                    );
                }
                return Ok((choice.message.content, attempt));
            }
        }
    }
    Err(BackendError::RemoteUnavailable {
        attempts: config.max_retries + 1,
        message: last_error,
    })
}

/// Remote model behind the [`Backend`] contract. Fed text accumulates
/// into the next user turn; `reset` clears the conversation.
pub struct RemoteBackend {
    config: RemoteBackendConfig,
    session: BackendSession,
    system: String,
    history: Vec<ChatMessage>,
    pending: String,
    total_retries: u32,
}

impl RemoteBackend {
    pub fn new(config: RemoteBackendConfig, system_prompt: impl Into<String>) -> Self {
        let mut system = system_prompt.into();
        if let Some(example) = &config.one_shot_example {
            system.push_str("\n\nExample:\n");
            system.push_str(example);
        }
        Self {
            session: BackendSession::new(format!("remote-{}", config.model_name)),
            config,
            system,
            history: Vec::new(),
            pending: String::new(),
            total_retries: 0,
        }
    }

    pub fn total_retries(&self) -> u32 {
        self.total_retries
    }
}

impl Backend for RemoteBackend {
    fn session(&self) -> &BackendSession {
        &self.session
    }

    fn feed(&mut self, text: &str, _tag: SourceTag) -> Result<(), BackendError> {
        if !self.pending.is_empty() && !text.is_empty() {
            self.pending.push('\n');
        }
        self.pending.push_str(text);
        self.session.log(CallKind::Feed, estimate_tokens(text));
        Ok(())
    }

    fn generate(&mut self, _mode: GenerateMode) -> Result<String, BackendError> {
        let mut messages = Vec::with_capacity(self.history.len() + 2);
        if !self.system.is_empty() {
            messages.push(ChatMessage::system(self.system.clone()));
        }
        messages.extend(self.history.iter().cloned());
        if !self.pending.is_empty() {
            messages.push(ChatMessage::user(std::mem::take(&mut self.pending)));
        }

        let started = Instant::now();
        let (text, retries) = remote_generate_with_stats(&self.config, &messages)?;
        self.total_retries += retries;
        self.session.advance_clock(started.elapsed().as_secs_f64());

        if messages.last().map(|m| m.role.as_str()) == Some("user") {
            self.history.push(messages.pop().unwrap());
        }
        self.history.push(ChatMessage::assistant(text.clone()));
        self.session.log(CallKind::Generate, estimate_tokens(&text));
        Ok(text)
    }

    fn reset(&mut self) -> Result<(), BackendError> {
        self.history.clear();
        self.pending.clear();
        self.session.log(CallKind::Reset, 0);
        Ok(())
    }
}
