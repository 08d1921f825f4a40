//! Chunk-wise inference strategies for bounded-memory language models.
//!
//! This crate implements three long-context reading strategies — one-step,
//! unsmooth reading (reset memory each step, re-feed the running summary)
//! and smooth reading (carry memory across steps, never re-feed) — together
//! with everything needed to study them without a GPU:
//!
//! - [`chunker`]: hierarchical delimiter splitting with word-based token
//!   estimation
//! - [`protocol`]: the structured contextual-summary wire format with
//!   `<CONTINUE>` / `<STOP>` control tokens
//! - [`backends`]: a sliding-window FIFO simulator, an unbounded
//!   self-attention simulator, and an OpenAI-compatible remote client
//! - [`engine`]: strategy execution with full per-step traces (token
//!   counts, memory requirements, virtual time)
//! - [`benchgen`]: needle-in-a-haystack and passage-count item generators
//!   plus a JSONL loader
//! - [`metrics`]: exact match, token F1, ROUGE-L and edit similarity
//! - [`dataset_builder`]: SFT data construction in the three formats with
//!   teacher models, early stopping and metric-based cleaning
//! - [`cost_model`]: analytic inference-time model with trace validation
//!   and crossover analysis

pub mod backends;
pub mod benchgen;
pub mod chunker;
pub mod cost_model;
pub mod dataset_builder;
pub mod engine;
pub mod metrics;
pub mod protocol;
pub mod tasks;

pub use chunker::{estimate_tokens, Chunk, ChunkingConfig};
pub use engine::{InferenceTrace, StepRecord, Strategy};
pub use protocol::{ContextualSummary, Decision};
