//! Simulated bounded-memory models.
//!
//! Memory is a FIFO of whitespace words; all capacities and counts are
//! expressed in estimated tokens (1.5 tokens per word, matching the
//! chunker's estimator). A sliding-window backend keeps only the most
//! recent `W` tokens' worth of words, evicting oldest-first; the
//! unbounded variant never evicts and its per-token cost grows with the
//! buffer, which makes total processing time quadratic in length.
//!
//! Generation is a rule program over the visible buffer only. Nothing
//! outside the buffer can influence output, so retention behavior is
//! exactly the window arithmetic.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendSession, CallKind, GenerateMode, SourceTag};
use crate::benchgen::TaskKind;
use crate::chunker::{token_capacity_in_words, words_to_tokens};
use crate::protocol::{self, ContextualSummary};
use crate::tasks;

/// Virtual-clock cost parameters.
///
/// Feeding one token costs `p0 + p1 * min(occupancy, W)` seconds, so a
/// larger window makes every token dearer once the buffer is full.
/// Generated tokens are charged the same with a `decode_mult` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub p0: f64,
    pub p1: f64,
    pub decode_mult: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            p0: 4.2e-5,
            p1: 1.0e-9,
            decode_mult: 4.0,
        }
    }
}

impl CostConfig {
    /// Constant per-token cost, independent of occupancy and window.
    pub fn constant(p0: f64, decode_mult: f64) -> Self {
        Self {
            p0,
            p1: 0.0,
            decode_mult,
        }
    }
}

/// The rule program that produces output from the visible buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskProgram {
    /// Extract `key -> UUID` facts for the keys the visible task
    /// statement asks about.
    NeedleRetrieval,
    /// Track unique passage labels in a running `seen:` clue.
    PassageCount,
    /// Emit the last `words` buffer words verbatim (debug).
    Echo { words: usize },
}

impl TaskProgram {
    /// Program able to act on items of the given task, if any.
    pub fn for_task(task: TaskKind) -> Result<Self, BackendError> {
        match task {
            TaskKind::NeedleRetrieval => Ok(TaskProgram::NeedleRetrieval),
            TaskKind::PassageCount => Ok(TaskProgram::PassageCount),
            other => Err(BackendError::UnsupportedTask(other)),
        }
    }
}

/// A simulated session: bounded (sliding window) or unbounded
/// (self-attention) token memory.
#[derive(Debug, Clone)]
pub struct SimBackend {
    session: BackendSession,
    /// Window capacity in estimated tokens; `None` means unbounded.
    window_tokens: Option<u64>,
    buffer: VecDeque<(String, SourceTag)>,
    program: TaskProgram,
    cost: CostConfig,
    closed: bool,
}

impl SimBackend {
    /// Sliding-window model: keeps the most recent `window_tokens`.
    pub fn sliding_window(window_tokens: u64, program: TaskProgram, cost: CostConfig) -> Self {
        Self {
            session: BackendSession::new(format!("sim-swa-w{window_tokens}")),
            window_tokens: Some(window_tokens),
            buffer: VecDeque::new(),
            program,
            cost,
            closed: false,
        }
    }

    /// Unbounded self-attention model: nothing is ever evicted and
    /// per-token cost grows with occupancy.
    pub fn unbounded(program: TaskProgram, cost: CostConfig) -> Self {
        Self {
            session: BackendSession::new("sim-attn"),
            window_tokens: None,
            buffer: VecDeque::new(),
            program,
            cost,
            closed: false,
        }
    }

    pub fn window_tokens(&self) -> Option<u64> {
        self.window_tokens
    }

    /// Current buffer contents as words.
    pub fn buffer_words(&self) -> Vec<&str> {
        self.buffer.iter().map(|(w, _)| w.as_str()).collect()
    }

    /// Current buffer contents with source tags.
    pub fn buffer_tagged(&self) -> Vec<(&str, SourceTag)> {
        self.buffer.iter().map(|(w, t)| (w.as_str(), *t)).collect()
    }

    /// Buffer occupancy in estimated tokens.
    pub fn occupancy_tokens(&self) -> u64 {
        words_to_tokens(self.buffer.len() as u64)
    }

    /// Close the session; further calls fail with `SessionClosed`.
    pub fn close(&mut self) {
        self.closed = true;
    }

    fn ensure_open(&self) -> Result<(), BackendError> {
        if self.closed {
            Err(BackendError::SessionClosed)
        } else {
            Ok(())
        }
    }

    /// Charge the clock for `tokens` arrivals starting at the current
    /// occupancy, then append the words and evict past the window.
    fn ingest(&mut self, text: &str, tag: SourceTag, decode: bool) -> u64 {
        let words: Vec<&str> = text.split_whitespace().collect();
        let tokens = words_to_tokens(words.len() as u64);
        let occ_start = self.occupancy_tokens();
        let mult = if decode { self.cost.decode_mult } else { 1.0 };
        let mut dt = 0.0;
        for k in 1..=tokens {
            let occupancy = match self.window_tokens {
                Some(w) => (occ_start + k).min(w),
                None => occ_start + k,
            };
            dt += mult * (self.cost.p0 + self.cost.p1 * occupancy as f64);
        }
        self.session.advance_clock(dt);

        for w in words {
            self.buffer.push_back((w.to_string(), tag));
        }
        if let Some(w) = self.window_tokens {
            let cap = token_capacity_in_words(w) as usize;
            while self.buffer.len() > cap {
                self.buffer.pop_front();
            }
        }
        tokens
    }

    fn run_program(&self, mode: GenerateMode) -> String {
        let words = self.buffer_words();
        match self.program {
            TaskProgram::NeedleRetrieval => needle_program(&words, mode),
            TaskProgram::PassageCount => passage_count_program(&words, mode),
            TaskProgram::Echo { words: n } => {
                let tail = words.len().saturating_sub(n);
                words[tail..].join(" ")
            }
        }
    }
}

impl Backend for SimBackend {
    fn session(&self) -> &BackendSession {
        &self.session
    }

    fn feed(&mut self, text: &str, tag: SourceTag) -> Result<(), BackendError> {
        self.ensure_open()?;
        let tokens = self.ingest(text, tag, false);
        self.session.log(CallKind::Feed, tokens);
        Ok(())
    }

    fn generate(&mut self, mode: GenerateMode) -> Result<String, BackendError> {
        self.ensure_open()?;
        let output = self.run_program(mode);
        let tokens = self.ingest(&output, SourceTag::Summary, true);
        self.session.log(CallKind::Generate, tokens);
        Ok(output)
    }

    fn reset(&mut self) -> Result<(), BackendError> {
        self.ensure_open()?;
        self.buffer.clear();
        self.session.log(CallKind::Reset, 0);
        Ok(())
    }
}

/// Resolve needle clues visible in the buffer.
///
/// The requested keys must themselves be recovered from the buffer (the
/// query or a previous TARGET restatement); with no task statement in
/// memory the program has nothing to look for and extracts nothing.
fn needle_resolution(words: &[&str]) -> (Vec<String>, Vec<(String, String)>) {
    let requested = tasks::parse_requested_keys(words);
    if requested.is_empty() {
        return (requested, Vec::new());
    }
    let mut resolved: Vec<(String, String)> = Vec::new();
    let mut add = |key: &str, uuid: &str| {
        if requested.iter().any(|k| k == key) && !resolved.iter().any(|(k, _)| k == key) {
            resolved.push((key.to_string(), uuid.to_string()));
        }
    };
    for (key, uuid) in tasks::find_clues(words) {
        add(&key, &uuid);
    }
    for (key, uuid) in tasks::find_needles(words) {
        add(&key, &uuid);
    }
    // Stable order: as listed in the task statement.
    resolved.sort_by_key(|(k, _)| requested.iter().position(|r| r == k).unwrap_or(usize::MAX));
    (requested, resolved)
}

fn needle_program(words: &[&str], mode: GenerateMode) -> String {
    let (requested, resolved) = needle_resolution(words);
    let answer_text = |resolved: &[(String, String)]| {
        if resolved.is_empty() {
            "unknown".to_string()
        } else {
            resolved
                .iter()
                .map(|(_, u)| u.clone())
                .collect::<Vec<_>>()
                .join(", ")
        }
    };

    match mode {
        GenerateMode::Answer => answer_text(&resolved),
        GenerateMode::Summary => {
            let summary = if requested.is_empty() {
                ContextualSummary::continuing(
                    "(no task statement visible)",
                    "",
                    "waiting for a task statement",
                )
            } else {
                let clues = resolved
                    .iter()
                    .map(|(k, u)| tasks::format_clue(k, u))
                    .collect::<Vec<_>>()
                    .join("; ");
                let reason = format!("matched {} of {} keys", resolved.len(), requested.len());
                if resolved.len() == requested.len() {
                    ContextualSummary::stopping(
                        tasks::format_niah_target(&requested),
                        clues,
                        reason,
                        answer_text(&resolved),
                    )
                } else {
                    ContextualSummary::continuing(
                        tasks::format_niah_target(&requested),
                        clues,
                        reason,
                    )
                }
            };
            protocol::render(&summary).expect("rule summaries are always valid")
        }
    }
}

fn passage_count_program(words: &[&str], mode: GenerateMode) -> String {
    let mut seen: Vec<String> = Vec::new();
    for label in tasks::parse_seen_labels(words).into_iter().chain(tasks::find_passage_labels(words)) {
        if !seen.contains(&label) {
            seen.push(label);
        }
    }
    seen.sort();
    match mode {
        GenerateMode::Answer => seen.len().to_string(),
        GenerateMode::Summary => {
            let summary = ContextualSummary::continuing(
                "count the unique passages",
                format!("seen: {}", seen.join(" ")),
                format!("tracked {} unique passages so far", seen.len()),
            );
            protocol::render(&summary).expect("rule summaries are always valid")
        }
    }
}
