//! Model backends behind one contract: feed text into memory, generate
//! from whatever the memory currently holds, optionally reset.
//!
//! Two simulators ([`sim::SimBackend`]) model a sliding-window model and
//! an unbounded self-attention model over a word FIFO with a virtual
//! clock. [`remote::RemoteBackend`] speaks the chat-completions HTTP
//! protocol. [`stub::StubServer`] is a minimal in-process endpoint for
//! exercising the remote path in tests.

pub mod remote;
pub mod sim;
pub mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{
    remote_generate, remote_generate_with_stats, ChatMessage, RemoteBackend, RemoteBackendConfig,
};
pub use sim::{CostConfig, SimBackend, TaskProgram};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("session is closed")]
    SessionClosed,
    #[error("task {0:?} is not supported by this backend")]
    UnsupportedTask(crate::benchgen::TaskKind),
    #[error("remote endpoint unavailable after {attempts} attempt(s): {message}")]
    RemoteUnavailable { attempts: u32, message: String },
    #[error("remote endpoint returned a malformed response: {0}")]
    RemoteProtocolError(String),
}

/// Provenance of tokens entering memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Context,
    Summary,
    Scaffold,
}

/// What the caller wants out of a generation call: a structured summary
/// block, or a bare final answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateMode {
    Summary,
    Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Feed,
    Generate,
    Reset,
}

/// One logged backend call with its token count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendCall {
    pub kind: CallKind,
    pub tokens: u64,
}

/// Per-session bookkeeping shared by every backend: an id, the call
/// log, and a non-decreasing virtual clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendSession {
    pub session_id: String,
    pub calls: Vec<BackendCall>,
    clock_seconds: f64,
}

impl BackendSession {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            calls: Vec::new(),
            clock_seconds: 0.0,
        }
    }

    pub fn clock_seconds(&self) -> f64 {
        self.clock_seconds
    }

    pub fn advance_clock(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0, "clock must not run backwards");
        self.clock_seconds += dt;
    }

    pub fn log(&mut self, kind: CallKind, tokens: u64) {
        self.calls.push(BackendCall { kind, tokens });
    }

    pub fn count(&self, kind: CallKind) -> usize {
        self.calls.iter().filter(|c| c.kind == kind).count()
    }
}

/// The model contract the engine drives.
pub trait Backend {
    fn session(&self) -> &BackendSession;

    /// Append text to the model's memory.
    fn feed(&mut self, text: &str, tag: SourceTag) -> Result<(), BackendError>;

    /// Generate from the current memory; output tokens enter memory too.
    fn generate(&mut self, mode: GenerateMode) -> Result<String, BackendError>;

    /// Empty the memory. The clock is preserved.
    fn reset(&mut self) -> Result<(), BackendError>;

    fn clock_seconds(&self) -> f64 {
        self.session().clock_seconds()
    }
}
